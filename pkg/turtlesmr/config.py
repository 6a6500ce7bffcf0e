import copy
import json
import os.path

from turtlesmr.errors import ConfigError
from turtlesmr.quorum import correctQuorum, makeThreshold


class JsonConfig(object):
    # Package defaults: general (log level), harness (output directory and
    # its environment override, sweep parallelism) and scenario (the base
    # every scenario file is merged over).
    #
    # Reads turtlesmr/config/default.json unless given another file.

    DEFAULT_FILEPATH = os.path.join(os.path.dirname(__file__), 'config', 'default.json')

    def __init__(self, filepath=None):
        filepath = filepath or JsonConfig.DEFAULT_FILEPATH
        data = loadJson(filepath)
        for section in data:
            setattr(self, section, ConfigSection(data[section]))


class ConfigSection(object):
    # One top level section; keys become attributes.

    def __init__(self, data):
        self.__dict__.update(data)

    def dict(self):
        # Returns a copy
        return dict(self.__dict__)


class DictConfig(object):
    # Attribute access over a flat dict. Used for scenario settings, the
    # shared data handed to every simulated node and turtle kwargs.

    def __init__(self, data):
        self.__dict__.update(data)


def loadJson(filepath):
    try:
        with open(filepath) as f:
            return json.load(f)
    except (OSError, ValueError) as e:
        raise ConfigError('Cannot read config {}: {}'.format(filepath, e))


class SyncMode(object):
    ASYNC = 'async'
    PARTIAL = 'partial'

    ALL = (ASYNC, PARTIAL)


class Codec(object):
    RELATIVE = 'relative'
    FULL = 'full'

    ALL = (RELATIVE, FULL)


class Role(object):
    CRASH = 'crash'
    BYZANTINE = 'byzantine'


class ScenarioConfig(DictConfig):
    # One simulated scenario: system size, turtle schedule, timing model,
    # fault roles and budgets.
    #
    # Built from the scenario section of the default config overlaid with a
    # scenario file. Unknown keys are errors at every level. Nested dicts
    # (sync, leader) are merged key by key with their defaults.
    #
    # violateModel lets a scenario break the fault budget and the
    # intersection requirement of its turtles; such scenarios still run
    # but their traces are marked model-violating. It never lifts n > k·f
    # since the threshold construction is undefined otherwise.

    KEYS = ('n', 'f', 'k', 'schedule', 'sync', 'roles', 'leader', 'instances', 'batchMax',
        'workload', 'codec', 'seed', 'maxEvents', 'violateModel')
    SYNC_KEYS = ('mode', 'preset', 'scale', 'gst', 'delta')
    LEADER_KEYS = ('enabled', 'initialTimer')
    SCHEDULE_KEYS = ('kind', 'repeat')

    ERROR_UNKNOWN_KEY = 'Unknown {} key "{}"'
    ERROR_INTERSECTION = '{} requires a quorum system satisfying {}-intersection (k={})'
    ERROR_MIXED = 'schedule mixes crash-tolerant and BFT turtles'
    ERROR_TOO_MANY_FAULTS = '{} faulty roles exceed f={}'
    ERROR_BYZANTINE_CRASH_SCHEDULE = 'byzantine roles require a BFT schedule'
    ERROR_LEADER_BFT = 'the leader wrapper only supports crash-tolerant turtles'
    ERROR_POSITIVE = '{} must be a positive integer, got {!r}'

    def __init__(self, data=None, defaults=None):
        if defaults is None:
            defaults = JsonConfig().scenario.dict()
        data = data or {}
        for key in data:
            if key not in ScenarioConfig.KEYS:
                raise ConfigError(ScenarioConfig.ERROR_UNKNOWN_KEY.format('scenario', key))

        merged = copy.deepcopy(defaults)
        for key in data:
            if key in ('sync', 'leader') and isinstance(data[key], dict):
                merged[key] = dict(merged.get(key, {}), **data[key])
            else:
                merged[key] = copy.deepcopy(data[key])
        super(ScenarioConfig, self).__init__(merged)
        self.modelViolations = []
        self.validate()

    @classmethod
    def load(cls, filepath, overrides=None, defaults=None):
        data = loadJson(filepath)
        if not isinstance(data, dict):
            raise ConfigError('Scenario {} must be a json object'.format(filepath))
        data.update(overrides or {})
        return cls(data, defaults)

    def validate(self):
        # Imported here since the turtle and adversary packages import this
        # module for DictConfig.
        from turtlesmr import adversary, netsim, turtle

        for key in ('n', 'f', 'k', 'seed'):
            if not isinstance(getattr(self, key), int) or isinstance(getattr(self, key), bool):
                raise ConfigError('{} must be an integer'.format(key))
        if self.seed < 0:
            raise ConfigError('seed must be >= 0')
        self.system = makeThreshold(self.n, self.f, self.k)

        for key in ('instances', 'batchMax', 'maxEvents'):
            self.checkPositive(key, getattr(self, key))
        if not isinstance(self.workload, int) or self.workload < 0:
            raise ConfigError('workload must be a non-negative integer')
        if self.codec not in Codec.ALL:
            raise ConfigError('codec must be one of {}'.format(', '.join(Codec.ALL)))
        if not isinstance(self.violateModel, bool):
            raise ConfigError('violateModel must be true or false')

        self.validateSchedule(turtle.getTurtleKinds(), turtle.TurtleKind.BFT_KINDS)
        self.validateSync(netsim.DELAY_PRESETS)
        self.validateLeader()
        self.validateRoles(adversary.getStrategies())

    def validateSchedule(self, kinds, bftKinds):
        if not isinstance(self.schedule, list) or not self.schedule:
            raise ConfigError('schedule must be a nonempty list')
        for entry in self.schedule:
            if not isinstance(entry, dict):
                raise ConfigError('schedule entries must be objects')
            for key in entry:
                if key not in ScenarioConfig.SCHEDULE_KEYS:
                    raise ConfigError(ScenarioConfig.ERROR_UNKNOWN_KEY.format('schedule', key))
            if entry.get('kind') not in kinds:
                raise ConfigError('Unknown turtle kind {!r}'.format(entry.get('kind')))
            self.checkPositive('repeat', entry.get('repeat', 1))

        scheduled = set(entry['kind'] for entry in self.schedule)
        bft = [k in bftKinds for k in scheduled]
        if any(bft) and not all(bft):
            raise ConfigError(ScenarioConfig.ERROR_MIXED)
        self.isBft = all(bft)

        for kind in sorted(scheduled):
            required = kinds[kind].intersection
            if self.k < required:
                self.modelViolation(ScenarioConfig.ERROR_INTERSECTION.format(kind, required, self.k))

    def validateSync(self, presets):
        if not isinstance(self.sync, dict):
            raise ConfigError('sync must be an object')
        for key in self.sync:
            if key not in ScenarioConfig.SYNC_KEYS:
                raise ConfigError(ScenarioConfig.ERROR_UNKNOWN_KEY.format('sync', key))
        if self.sync.get('mode') not in SyncMode.ALL:
            raise ConfigError('sync mode must be one of {}'.format(', '.join(SyncMode.ALL)))
        if self.sync.get('preset') not in presets:
            raise ConfigError('Unknown delay preset {!r}'.format(self.sync.get('preset')))
        self.checkPositive('sync.scale', self.sync.get('scale'))
        self.checkPositive('sync.delta', self.sync.get('delta'))
        gst = self.sync.get('gst')
        if not isinstance(gst, int) or gst < 0:
            raise ConfigError('sync.gst must be a non-negative integer')

    def validateLeader(self):
        if not isinstance(self.leader, dict):
            raise ConfigError('leader must be an object')
        for key in self.leader:
            if key not in ScenarioConfig.LEADER_KEYS:
                raise ConfigError(ScenarioConfig.ERROR_UNKNOWN_KEY.format('leader', key))
        self.checkPositive('leader.initialTimer', self.leader.get('initialTimer'))
        if self.leader.get('enabled') and self.isBft:
            raise ConfigError(ScenarioConfig.ERROR_LEADER_BFT)

    def validateRoles(self, strategies):
        if not isinstance(self.roles, dict):
            raise ConfigError('roles must be an object')
        self.crashes = {}
        self.byzantine = {}
        for key, role in sorted(self.roles.items()):
            try:
                proc = int(key)
            except (TypeError, ValueError):
                raise ConfigError('Role key {!r} is not a processor id'.format(key))
            if proc < 0 or proc >= self.n:
                raise ConfigError('Role for processor {} outside 0..{}'.format(proc, self.n - 1))
            kind, _, arg = str(role).partition(':')
            if kind == Role.CRASH:
                try:
                    self.crashes[proc] = int(arg)
                except ValueError:
                    raise ConfigError('Crash role needs a time, got {!r}'.format(role))
                if self.crashes[proc] < 0:
                    raise ConfigError('Crash time must be >= 0, got {!r}'.format(role))
            elif kind == Role.BYZANTINE:
                if arg not in strategies:
                    raise ConfigError('Unknown adversary strategy {!r}'.format(arg))
                self.byzantine[proc] = arg
            else:
                raise ConfigError('Unknown role {!r}'.format(role))

        if self.byzantine and not self.isBft:
            raise ConfigError(ScenarioConfig.ERROR_BYZANTINE_CRASH_SCHEDULE)
        faulty = len(self.crashes) + len(self.byzantine)
        if correctQuorum(self.system, self.correct) is None:
            self.modelViolation(ScenarioConfig.ERROR_TOO_MANY_FAULTS.format(faulty, self.f))

    def modelViolation(self, msg):
        if not self.violateModel:
            raise ConfigError(msg)
        self.modelViolations.append(msg)

    def checkPositive(self, key, value):
        if not isinstance(value, int) or isinstance(value, bool) or value < 1:
            raise ConfigError(ScenarioConfig.ERROR_POSITIVE.format(key, value))

    @property
    def modelConforming(self):
        return not self.modelViolations

    @property
    def correct(self):
        # Processors correct for the whole run.
        return [p for p in range(self.n) if p not in self.crashes and p not in self.byzantine]

    def kindSchedule(self):
        return [(entry['kind'], entry.get('repeat', 1)) for entry in self.schedule]

    def header(self):
        # Scenario fields recorded at the top of every trace.

        return {
            'n': self.n,
            'f': self.f,
            'k': self.k,
            'correct': self.correct,
            'roles': dict((str(p), self.roles[p]) for p in sorted(self.roles)),
            'schedule': [{'kind': kind, 'repeat': repeat} for kind, repeat in self.kindSchedule()],
            'sync': dict(self.sync),
            'leader': dict(self.leader),
            'instances': self.instances,
            'codec': self.codec,
            'seed': self.seed,
            'violate_model': self.violateModel,
            'model_conforming': self.modelConforming,
        }
