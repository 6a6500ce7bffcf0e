import hashlib

import numpy as np
import pytest

from turtlesmr import netsim
from turtlesmr.checker import checkTrace
from turtlesmr.codec import Encoder
from turtlesmr.netsim import (MAX_DELAY, TRACE_SCHEMA, DelayPreset, Simulator, deliverPolicy,
    drawDelay)
from turtlesmr.node import DiscardReason, Envelope
from turtlesmr.turtle import RoundTag
from turtlesmr.test.conftest import makeChain, makeScenario


def traceHash(trace):
    return hashlib.sha256('\n'.join(trace.lines()).encode('utf-8')).hexdigest()


def recordsOf(trace, kind):
    return [r for r in trace.records if r['kind'] == kind]


class TestDelays(object):

    @pytest.mark.parametrize('preset', [DelayPreset.UNIFORM, DelayPreset.HEAVY_TAILED,
        DelayPreset.REORDER_HEAVY])
    def test_finite_and_positive(self, preset):
        rng = np.random.default_rng(1)
        delays = [drawDelay(preset, 10, rng) for _ in range(2000)]
        assert min(delays) >= 1
        assert max(delays) <= MAX_DELAY

    def test_uniform_range(self):
        rng = np.random.default_rng(2)
        assert set(drawDelay(DelayPreset.UNIFORM, 3, rng) for _ in range(200)) == {1, 2, 3}

    def test_unknown_preset(self):
        with pytest.raises(ValueError):
            drawDelay('gaussian', 10, np.random.default_rng(0))

    def test_partial_synchrony_bound(self):
        sync = {'mode': 'partial', 'preset': DelayPreset.REORDER_HEAVY, 'scale': 50, 'gst': 50,
            'delta': 5}
        rng = np.random.default_rng(3)
        for _ in range(500):
            assert 101 <= deliverPolicy(100, sync, rng) <= 105

    def test_before_gst(self):
        sync = {'mode': 'partial', 'preset': DelayPreset.HEAVY_TAILED, 'scale': 50, 'gst': 200,
            'delta': 5}
        rng = np.random.default_rng(4)
        for _ in range(500):
            assert 11 <= deliverPolicy(10, sync, rng) <= 205

    def test_self_delivery(self):
        sync = {'mode': 'async', 'preset': DelayPreset.UNIFORM, 'scale': 10}
        assert deliverPolicy(42, sync, np.random.default_rng(0), selfDelivery=True) == 42


class TestRun(object):

    def test_honest_run_passes(self):
        trace = netsim.run(makeScenario(seed=7))
        report = checkTrace(trace.records)
        assert report.passed, report.failures()
        assert report.counts['instances'] == 20
        assert not trace.truncated
        assert len(recordsOf(trace, 'output')) == 4 * 20

    def test_deterministic(self):
        scenario = makeScenario(seed=7, sync={'preset': DelayPreset.REORDER_HEAVY})
        assert traceHash(netsim.run(scenario)) == traceHash(netsim.run(scenario))

    def test_seed_matters(self):
        assert traceHash(netsim.run(makeScenario(seed=1))) != \
            traceHash(netsim.run(makeScenario(seed=2)))

    def test_crash_at_start(self):
        trace = netsim.run(makeScenario(seed=7, roles={'2': 'crash:0'}))
        assert checkTrace(trace.records).passed
        for proc in (0, 1, 3):
            outputs = [r for r in recordsOf(trace, 'output') if r['proc'] == proc]
            assert len(outputs) == 20
        quiet = ('crash', 'drop')
        assert not [r for r in trace.records if r['proc'] == 2 and r['kind'] not in quiet]
        assert all(r['reason'] == 'crashed' for r in recordsOf(trace, 'drop'))
        assert recordsOf(trace, 'drop')

    def test_crash_precedes_start(self):
        trace = netsim.run(makeScenario(roles={'1': 'crash:0'}))
        assert trace.records[1]['kind'] == 'crash'

    def test_truncated(self):
        trace = netsim.run(makeScenario(maxEvents=50))
        assert trace.truncated
        end = trace.records[-1]
        assert end['events'] == 50 and not end['quiesced']

    def test_header_and_end(self):
        trace = netsim.run(makeScenario(instances=2))
        assert trace.header['kind'] == 'scenario'
        assert trace.header['proc'] is None
        assert trace.records[-1]['kind'] == 'end'
        assert [r['seq'] for r in trace.records] == list(range(len(trace)))

    def test_alternating_schedule(self):
        trace = netsim.run(makeScenario(seed=3, instances=12, roles={'0': 'crash:40'},
            schedule=[{'kind': 'onestep'}, {'kind': 'lowerbound'}]))
        assert checkTrace(trace.records).passed

    @pytest.mark.parametrize('seed', range(5))
    def test_codec_does_not_change_decisions(self, seed):
        relative = netsim.run(makeScenario(seed=seed, sync={'preset': DelayPreset.REORDER_HEAVY}))
        full = netsim.run(makeScenario(seed=seed, codec='full',
            sync={'preset': DelayPreset.REORDER_HEAVY}))
        assert recordsOf(relative, 'decide') == recordsOf(full, 'decide')
        assert not recordsOf(relative, 'discard')


class TestSchema(object):

    SCENARIOS = [
        {'roles': {'3': 'crash:25'}, 'sync': {'mode': 'partial', 'gst': 30},
            'leader': {'enabled': True}, 'instances': 8},
        {'n': 6, 'k': 5, 'schedule': [{'kind': 'bft_onestep'}], 'instances': 4,
            'roles': {'5': 'byzantine:garbage-signatures'}},
        {'n': 7, 'f': 2, 'k': 3, 'schedule': [{'kind': 'bft_lowerbound'}], 'instances': 4,
            'roles': {'5': 'byzantine:divergent-x', '6': 'byzantine:stale-evidence-replay'}},
    ]

    def test_every_emitted_kind_is_documented(self):
        seen = set()
        for data in TestSchema.SCENARIOS:
            trace = netsim.run(makeScenario(seed=5, **data))
            for record in trace.records:
                assert record['kind'] in TRACE_SCHEMA
                for key in ('t', 'seq', 'kind', 'proc') + TRACE_SCHEMA[record['kind']]:
                    assert key in record, (record['kind'], key)
                seen.add(record['kind'])
        assert seen >= {'scenario', 'send', 'deliver', 'drop', 'crash', 'gst', 'propose',
            'output', 'decide', 'discard', 'leader_propose', 'end'}


class TestNodeDecode(object):

    def test_overlong_prefix_is_discarded_not_buffered(self):
        sim = Simulator(makeScenario(instances=2))
        node = sim.nodes[1]
        node.onStart()
        payload = Encoder(makeChain('9.1', '9.2')).encode(
            {'chain': makeChain('9.1', '9.2', '9.3')})
        node.onRead(Envelope(99, 1, RoundTag.PROPOSAL, 0, 1, payload))

        discards = recordsOf(sim, 'discard')
        assert [(r['instance'], r['sender'], r['reason']) for r in discards] == \
            [(1, 0, DiscardReason.DEFERRED)]
        assert node.buffer == {}
        assert node.turtle.received == {}
        assert node.currentInstance == 1

    def test_decodable_proposal_is_accepted(self):
        sim = Simulator(makeScenario(instances=2))
        node = sim.nodes[1]
        node.onStart()
        payload = Encoder().encode({'chain': makeChain('0.1')})
        node.onRead(Envelope(99, 1, RoundTag.PROPOSAL, 0, 1, payload))
        assert recordsOf(sim, 'discard') == []
        assert node.turtle.received == {0: makeChain('0.1')}
