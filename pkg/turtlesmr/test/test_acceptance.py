import pytest

from turtlesmr import netsim
from turtlesmr.checker import checkTrace
from turtlesmr.netsim import DelayPreset
from turtlesmr.test.conftest import makeScenario


# Seeded suites at the sizes the toolkit is accepted at. Each one runs
# hundreds of scenarios; deselect with -m "not slow".

PRESETS = [DelayPreset.UNIFORM, DelayPreset.HEAVY_TAILED, DelayPreset.REORDER_HEAVY]
STRATEGIES = ['silent', 'equivocate', 'garbage-signatures', 'stale-evidence-replay',
    'divergent-x']


def crashRoles(seed, n):
    # Every other seed crashes one processor somewhere in the run.
    if seed % 2 == 0:
        return {}
    return {str(seed % n): 'crash:{}'.format(seed % 97)}


def assertClean(scenario):
    trace = netsim.run(scenario)
    assert not trace.truncated
    report = checkTrace(trace.records)
    assert report.passed, (scenario.seed, report.failures())


@pytest.mark.slow
class TestCrashTolerant(object):

    @pytest.mark.parametrize('seed', range(1000))
    def test_onestep(self, seed):
        assertClean(makeScenario(seed=seed, instances=10, roles=crashRoles(seed, 4),
            sync={'preset': PRESETS[seed % 3]}))

    @pytest.mark.parametrize('seed', range(1000))
    def test_lowerbound(self, seed):
        assertClean(makeScenario(n=3, f=1, k=2, schedule=[{'kind': 'lowerbound'}], seed=seed,
            instances=10, roles=crashRoles(seed, 3), sync={'preset': PRESETS[seed % 3]}))

    @pytest.mark.parametrize('seed', range(500))
    def test_composition(self, seed):
        schedules = [
            [{'kind': 'onestep'}],
            [{'kind': 'lowerbound'}],
            [{'kind': 'onestep', 'repeat': 2}, {'kind': 'lowerbound'}],
        ]
        assertClean(makeScenario(seed=seed, instances=50, roles=crashRoles(seed, 4),
            schedule=schedules[seed % 3], sync={'preset': PRESETS[seed % 3]}))


@pytest.mark.slow
class TestCodec(object):

    @pytest.mark.parametrize('seed', range(100))
    def test_decisions_identical(self, seed):
        def decisions(codec):
            trace = netsim.run(makeScenario(seed=seed, codec=codec, roles=crashRoles(seed, 4),
                sync={'preset': DelayPreset.REORDER_HEAVY}))
            return [line for line, r in zip(trace.lines(), trace.records) if r['kind'] == 'decide']

        assert decisions('relative') == decisions('full')


@pytest.mark.slow
class TestLeader(object):

    @pytest.mark.parametrize('seed', range(100))
    def test_progress(self, seed):
        scenario = makeScenario(seed=seed, instances=60, leader={'enabled': True},
            sync={'mode': 'partial', 'gst': 200, 'delta': 5, 'preset': PRESETS[seed % 3]})
        trace = netsim.run(scenario)
        report = checkTrace(trace.records)
        assert report['smr-progress'].claimed
        assert report.passed, (seed, report.failures(), report['smr-progress'].detail)


@pytest.mark.slow
class TestByzantine(object):

    @pytest.mark.parametrize('seed', range(300))
    def test_bft_onestep(self, seed):
        strategy = STRATEGIES[seed % len(STRATEGIES)]
        assertClean(makeScenario(n=6, f=1, k=5, schedule=[{'kind': 'bft_onestep'}], seed=seed,
            instances=8, roles={str(seed % 6): 'byzantine:' + strategy},
            sync={'preset': PRESETS[seed % 3]}))

    @pytest.mark.parametrize('seed', range(300))
    def test_bft_lowerbound(self, seed):
        first = STRATEGIES[seed % len(STRATEGIES)]
        roles = {str(seed % 7): 'byzantine:' + first}
        if seed % 3:
            second = STRATEGIES[(seed // len(STRATEGIES)) % len(STRATEGIES)]
            roles[str((seed + 3) % 7)] = 'byzantine:' + second
        assertClean(makeScenario(n=7, f=2, k=3, schedule=[{'kind': 'bft_lowerbound'}],
            seed=seed, instances=8, roles=roles, sync={'preset': PRESETS[seed % 3]}))
