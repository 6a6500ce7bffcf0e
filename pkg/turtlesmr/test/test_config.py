import json

import pytest

from turtlesmr.config import JsonConfig, ScenarioConfig
from turtlesmr.errors import ConfigError
from turtlesmr.test.conftest import makeScenario


class TestDefaults(object):

    def test_default_file(self):
        cfg = JsonConfig()
        assert cfg.general.logLevel == 20
        assert cfg.harness.outDirEnv == 'TURTLESMR_OUT_DIR'
        assert cfg.scenario.n == 4

    def test_default_scenario(self):
        scenario = makeScenario()
        assert (scenario.n, scenario.f, scenario.k) == (4, 1, 3)
        assert scenario.correct == [0, 1, 2, 3]
        assert scenario.modelConforming
        assert not scenario.isBft

    def test_nested_merge(self):
        scenario = makeScenario(sync={'mode': 'partial'})
        assert scenario.sync['mode'] == 'partial'
        assert scenario.sync['delta'] == 5

    def test_heavy_tailed_delays(self):
        assert makeScenario().sync['preset'] == 'heavy-tailed'
        assert makeScenario(sync={'mode': 'partial'}).sync['preset'] == 'heavy-tailed'


class TestValidation(object):

    def test_onestep_needs_three_intersection(self):
        with pytest.raises(ConfigError) as info:
            makeScenario(n=3, f=1, k=2)
        assert 'requires a quorum system satisfying 3-intersection' in str(info.value)

    def test_lowerbound_at_two_intersection(self):
        scenario = makeScenario(n=3, f=1, k=2, schedule=[{'kind': 'lowerbound'}])
        assert scenario.system.quorumSize == 2

    def test_threshold_bound_is_never_lifted(self):
        with pytest.raises(ConfigError):
            makeScenario(n=3, f=1, k=3, violateModel=True)

    @pytest.mark.parametrize('data', [
        {'bogus': 1},
        {'sync': {'mode': 'async', 'jitter': 3}},
        {'leader': {'enabled': True, 'timeout': 3}},
        {'schedule': [{'kind': 'onestep', 'times': 2}]},
        {'schedule': [{'kind': 'paxos'}]},
        {'schedule': []},
        {'schedule': [{'kind': 'onestep'}, {'kind': 'bft_onestep'}], 'n': 6, 'k': 5},
        {'sync': {'mode': 'eventual'}},
        {'sync': {'preset': 'gaussian'}},
        {'codec': 'zip'},
        {'instances': 0},
        {'seed': -1},
        {'roles': {'9': 'crash:0'}},
        {'roles': {'1': 'crash:soon'}},
        {'roles': {'1': 'byzantine:equivocate'}},
        {'roles': {'1': 'byzantine:nonsense'}, 'n': 6, 'k': 5,
            'schedule': [{'kind': 'bft_onestep'}]},
        {'roles': {'1': 'sleepy'}},
        {'leader': {'enabled': True}, 'n': 6, 'k': 5, 'schedule': [{'kind': 'bft_onestep'}]},
    ])
    def test_rejected(self, data):
        with pytest.raises(ConfigError):
            makeScenario(**data)

    def test_too_many_faults(self):
        roles = {'1': 'crash:0', '2': 'crash:10'}
        with pytest.raises(ConfigError):
            makeScenario(roles=roles)
        scenario = makeScenario(roles=roles, violateModel=True)
        assert not scenario.modelConforming
        assert scenario.correct == [0, 3]
        assert scenario.crashes == {1: 0, 2: 10}

    def test_mixed_faults_leave_no_correct_quorum(self):
        data = dict(n=7, f=2, k=3, schedule=[{'kind': 'bft_lowerbound'}],
            roles={'0': 'crash:5', '5': 'byzantine:silent', '6': 'byzantine:equivocate'})
        with pytest.raises(ConfigError) as info:
            makeScenario(**data)
        assert '3 faulty' in str(info.value)
        scenario = makeScenario(violateModel=True, **data)
        assert scenario.modelViolations == ['3 faulty roles exceed f=2']
        assert scenario.correct == [1, 2, 3, 4]

    def test_byzantine_roles(self):
        scenario = makeScenario(n=7, f=2, k=3, schedule=[{'kind': 'bft_lowerbound'}],
            roles={'5': 'byzantine:equivocate', '6': 'byzantine:divergent-x'})
        assert scenario.isBft
        assert scenario.byzantine == {5: 'equivocate', 6: 'divergent-x'}
        assert scenario.correct == [0, 1, 2, 3, 4]

    def test_header(self):
        header = makeScenario(roles={'2': 'crash:0'}).header()
        assert header['roles'] == {'2': 'crash:0'}
        assert header['correct'] == [0, 1, 3]
        assert header['model_conforming'] is True
        json.dumps(header)


class TestLoad(object):

    def test_file_and_overrides(self, tmp_path):
        path = tmp_path / 'scenario.json'
        path.write_text(json.dumps({'instances': 5, 'seed': 3}))
        scenario = ScenarioConfig.load(str(path), {'seed': 9})
        assert scenario.instances == 5
        assert scenario.seed == 9

    def test_unreadable(self, tmp_path):
        path = tmp_path / 'broken.json'
        path.write_text('{')
        with pytest.raises(ConfigError):
            ScenarioConfig.load(str(path))
        with pytest.raises(ConfigError):
            ScenarioConfig.load(str(tmp_path / 'missing.json'))
