import collections
import json

from turtlesmr.chain import BOTTOM, isPrefix, meet, parseChain
from turtlesmr.errors import ExitCode, TraceParseError, UsageError
from turtlesmr.leader import timerFor
from turtlesmr.netsim import TRACE_SCHEMA
from turtlesmr.turtle import TurtleKind


# Property checkers over finished traces.
#
# Checks are pure functions of the trace records. Every failing property
# carries the seq numbers of the records that witness the failure.
#
# "Honest" processors are the non-Byzantine ones, including processors
# that crash: a decision made before a crash still has to agree with
# everyone else's. "Correct" processors are the ones that are neither
# Byzantine nor crash during the run.


class Spec(object):
    SMR = 'smr'
    TURTLE = 'turtle'
    BFT = 'bft'
    PROGRESS = 'progress'

    ALL = (SMR, TURTLE, BFT, PROGRESS)


class Mode(object):
    CRASH = 'crash'
    BFT = 'bft'


class PropertyResult(object):

    def __init__(self, name, passed=True, counterexample=(), detail=None, claimed=True):
        self.name = name
        self.passed = passed
        self.counterexample = list(counterexample)
        self.detail = detail
        self.claimed = claimed

    def toDict(self):
        return {
            'passed': self.passed,
            'counterexample': self.counterexample,
            'detail': self.detail,
            'claimed': self.claimed,
        }

    def __repr__(self):
        return '{}: {}'.format(self.name, 'pass' if self.passed else 'FAIL ' + str(self.detail))


def passed(name, claimed=True, detail=None):
    return PropertyResult(name, True, (), detail, claimed)


def failed(name, seqs, detail, claimed=True):
    return PropertyResult(name, False, seqs, detail, claimed)


class CheckReport(object):
    # Per property results plus counts. Only claimed properties decide the
    # exit status, and only on model-conforming traces.

    def __init__(self, modelConforming=True):
        self.modelConforming = modelConforming
        self.properties = collections.OrderedDict()
        self.counts = {}

    def add(self, result):
        self.properties[result.name] = result

    def extend(self, other):
        for result in other.properties.values():
            self.add(result)

    @property
    def passed(self):
        return all(r.passed for r in self.properties.values() if r.claimed)

    def failures(self):
        return [r.name for r in self.properties.values() if r.claimed and not r.passed]

    @property
    def exitCode(self):
        if self.passed or not self.modelConforming:
            return ExitCode.OK
        return ExitCode.VIOLATION

    def toDict(self):
        return {
            'passed': self.passed,
            'model_conforming': self.modelConforming,
            'properties': dict((name, r.toDict()) for name, r in self.properties.items()),
            'counts': self.counts,
        }

    def __getitem__(self, name):
        return self.properties[name]


# Turtle properties over input and output sets of one instance

def checkTurtleAgreement(outputs):
    outputs = list(outputs)
    if len(set(o.turtleIndex for o in outputs)) > 1:
        raise UsageError('Outputs of different turtle instances')
    return all(isPrefix(o.decided, other.upper) for o in outputs for other in outputs)


def checkTurtleUnanimity(inputs, outputs, mode=Mode.CRASH):
    # w is the meet of all inputs: the longest chain every input extends.

    w = meet(i.chain for i in inputs)
    if mode == Mode.BFT:
        return all(isPrefix(w, o.upper) for o in outputs)
    return all(isPrefix(w, o.decided) for o in outputs)


def checkTurtleValidity(inputs, outputs):
    chains = [i.chain for i in inputs]
    return all(any(isPrefix(o.upper, c) for c in chains) for o in outputs)


def checkTurtleTermination(started, produced, correct):
    # Every correct processor that started the instance produced an output.

    return all(p in produced for p in started if p in correct)


# Trace loading

# Value types of trace fields. proc is an int or null for simulator
# records; chains are lists of command ids.
INT_FIELDS = frozenset(['t', 'seq', 'n', 'f', 'k', 'instances', 'seed', 'dest', 'sender', 'msg',
    'instance', 'round', 'events'])
BOOL_FIELDS = frozenset(['violate_model', 'model_conforming', 'quiesced', 'truncated'])
STR_FIELDS = frozenset(['codec', 'payload_digest', 'reason'])
CHAIN_FIELDS = frozenset(['chain', 'decided', 'upper'])
HEADER_TYPES = {'correct': list, 'roles': dict, 'schedule': list, 'sync': dict, 'leader': dict}


def isInt(value):
    return isinstance(value, int) and not isinstance(value, bool)


def loadTrace(filepath):
    records = []
    with open(filepath, 'rb') as f:
        for lineNumber, raw in enumerate(f, 1):
            try:
                line = raw.decode('utf-8')
            except UnicodeDecodeError as e:
                raise TraceParseError(lineNumber, 'not utf-8: {}'.format(e.reason))
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except ValueError as e:
                raise TraceParseError(lineNumber, str(e))
            validateRecord(record, lineNumber, not records)
            records.append(record)
    if not records:
        raise TraceParseError(1, 'empty trace')
    return records


def validateRecord(record, lineNumber, first):
    if not isinstance(record, dict):
        raise TraceParseError(lineNumber, 'record is not an object')
    for key in ('t', 'seq', 'kind', 'proc'):
        if key not in record:
            raise TraceParseError(lineNumber, 'missing "{}"'.format(key))
    kind = record['kind']
    if not isinstance(kind, str) or kind not in TRACE_SCHEMA:
        raise TraceParseError(lineNumber, 'unknown record kind {!r}'.format(kind))
    for key in TRACE_SCHEMA[kind]:
        if key not in record:
            raise TraceParseError(lineNumber, '{} record without "{}"'.format(kind, key))
    if first and kind != 'scenario':
        raise TraceParseError(lineNumber, 'trace must start with a scenario record')
    for key in ('t', 'seq', 'proc') + TRACE_SCHEMA[kind]:
        error = fieldError(key, record[key])
        if error:
            raise TraceParseError(lineNumber, '{} record field "{}" {}'.format(kind, key, error))


def fieldError(key, value):
    # Returns what is wrong with a field value, or None.

    if key == 'proc':
        if value is not None and not isInt(value):
            return 'must be an integer or null'
    elif key in INT_FIELDS:
        if not isInt(value):
            return 'must be an integer'
    elif key in BOOL_FIELDS:
        if not isinstance(value, bool):
            return 'must be a boolean'
    elif key in STR_FIELDS:
        if not isinstance(value, str):
            return 'must be a string'
    elif key in CHAIN_FIELDS:
        if not isinstance(value, list) or not all(isinstance(i, str) for i in value):
            return 'must be a list of command ids'
    elif key in HEADER_TYPES:
        if not isinstance(value, HEADER_TYPES[key]):
            return 'must be a {}'.format(HEADER_TYPES[key].__name__)
        if key == 'correct' and not all(isInt(p) for p in value):
            return 'must list integer processor ids'
        if key == 'roles' and not all(isinstance(r, str) for r in value.values()):
            return 'must map processor ids to role strings'
        if key == 'schedule' and not all(isinstance(e, dict) and 'kind' in e for e in value):
            return 'must list entries with a kind'
    return None


class TraceView(object):
    # Trace records indexed by kind, plus what the header says about the
    # processors.

    ACTIVE_KINDS = ('send', 'deliver', 'propose', 'output', 'decide', 'discard',
        'leader_propose', 'adopt', 'timer_expire')

    def __init__(self, records):
        if not records or records[0]['kind'] != 'scenario':
            raise UsageError('A trace starts with its scenario record')
        self.records = records
        self.header = records[0]
        self.end = records[-1] if records[-1]['kind'] == 'end' else None

        self.n = self.header['n']
        self.correct = set(self.header['correct'])
        roles = self.header['roles']
        self.byzantine = set(int(p) for p, role in roles.items() if role.startswith('byzantine'))
        self.honest = set(range(self.n)) - self.byzantine
        self.isBft = all(entry['kind'] in TurtleKind.BFT_KINDS for entry in self.header['schedule'])
        self.modelConforming = bool(self.header['model_conforming'])
        self.quiesced = bool(self.end and self.end['quiesced'] and not self.end['truncated'])

        self.byKind = collections.defaultdict(list)
        for record in records:
            self.byKind[record['kind']].append(record)
        self.chains = {}

    def chain(self, ids):
        key = tuple(ids)
        if key not in self.chains:
            self.chains[key] = parseChain(list(ids))
        return self.chains[key]

    def of(self, kind, procs=None):
        return [r for r in self.byKind[kind] if procs is None or r['proc'] in procs]

    def lastCommonInstance(self):
        # Highest instance every correct processor produced an output for.

        last = []
        for p in self.correct:
            outputs = [r['instance'] for r in self.byKind['output'] if r['proc'] == p]
            last.append(max(outputs) if outputs else 0)
        return min(last) if last else 0


def asView(trace):
    return trace if isinstance(trace, TraceView) else TraceView(trace)


# SMR properties

def checkAgreement(view, decisions, name):
    # Sorted by length, all decisions agree iff each is a prefix of the next.

    ordered = sorted(decisions, key=lambda r: (len(r['chain']), r['seq']))
    for a, b in zip(ordered, ordered[1:]):
        if not isPrefix(view.chain(a['chain']), view.chain(b['chain'])):
            return failed(name, [a['seq'], b['seq']],
                'processor {} decided {} and processor {} decided {}'.format(
                    a['proc'], a['chain'], b['proc'], b['chain']))
    return passed(name)


def checkValidity(view, decisions, name):
    proposals = [view.chain(r['chain']) for r in view.byKind['propose']]
    for r in decisions:
        d = view.chain(r['chain'])
        if not any(isPrefix(d, c) for c in proposals):
            return failed(name, [r['seq']],
                'processor {} decided {}, which nobody proposed'.format(r['proc'], r['chain']))
    return passed(name)


def checkMonotonicity(view, decisions, name):
    previous = {}
    for r in sorted(decisions, key=lambda r: r['seq']):
        before = previous.get(r['proc'])
        if before is not None and not isPrefix(view.chain(before['chain']), view.chain(r['chain'])):
            return failed(name, [before['seq'], r['seq']],
                'processor {} decided {} after {}'.format(r['proc'], r['chain'], before['chain']))
        previous[r['proc']] = r
    return passed(name)


def checkRelay(view, decisions, name, claimed=True):
    # Bounded version of "eventually": decisions made in instances before
    # the last one every correct processor finished must be extended by
    # every correct processor's longest decision.

    last = view.lastCommonInstance()
    longest = {}
    for r in view.of('decide', view.correct):
        if r['proc'] not in longest or len(r['chain']) > len(longest[r['proc']]['chain']):
            longest[r['proc']] = r

    for r in decisions:
        if r['instance'] >= last:
            continue
        d = view.chain(r['chain'])
        for q in sorted(view.correct):
            target = longest.get(q)
            chain = view.chain(target['chain']) if target else BOTTOM
            if not isPrefix(d, chain):
                return failed(name, [r['seq']] + ([target['seq']] if target else []),
                    'processor {} never decided an extension of {}'.format(q, r['chain']),
                    claimed)
    return passed(name, claimed, 'checked instances below {}'.format(last))


def checkCompositionSafety(view, procs):
    # For every output <i, d, u> and every later input <j, c>, d ⪯ c.
    #
    # Outputs seen so far are kept as a frontier of maximal decided chains.

    name = 'composition-safety'
    outputs = collections.defaultdict(list)
    proposals = collections.defaultdict(list)
    for r in view.of('output', procs):
        outputs[r['instance']].append(r)
    for r in view.of('propose', procs):
        proposals[r['instance']].append(r)

    frontier = []
    for instance in sorted(set(outputs) | set(proposals)):
        for p in proposals[instance]:
            c = view.chain(p['chain'])
            for d, seq in frontier:
                if not isPrefix(d, c):
                    return failed(name, [seq, p['seq']],
                        'processor {} proposed {} in instance {}, not extending an earlier '
                        'decided chain'.format(p['proc'], p['chain'], instance))
        for o in outputs[instance]:
            d = view.chain(o['decided'])
            if any(isPrefix(d, f) for f, _ in frontier):
                continue
            frontier = [(f, seq) for f, seq in frontier if not isPrefix(f, d)]
            frontier.append((d, o['seq']))
    return passed(name)


def checkCompositionLiveness(view):
    # At quiescence every correct processor output instances 1..N.

    name = 'composition-liveness'
    if not view.quiesced:
        return failed(name, [view.end['seq']] if view.end else [], 'trace did not quiesce')
    total = view.header['instances']
    for p in sorted(view.correct):
        produced = set(r['instance'] for r in view.of('output', {p}))
        for instance in range(1, total + 1):
            if instance not in produced:
                return failed(name, [],
                    'processor {} has no output for instance {}'.format(p, instance))
    return passed(name)


def smrReport(view, prefix, relayClaimed):
    report = CheckReport(view.modelConforming)
    decisions = view.of('decide', view.honest)
    report.add(checkAgreement(view, decisions, prefix + '-agreement'))
    report.add(checkValidity(view, decisions, prefix + '-validity'))
    report.add(checkRelay(view, decisions, prefix + '-relay', relayClaimed))
    report.add(checkMonotonicity(view, decisions, prefix + '-monotonicity'))
    report.add(checkCompositionSafety(view, view.honest))
    report.add(checkCompositionLiveness(view))
    return report


def checkSmrTrace(trace):
    return smrReport(asView(trace), 'smr', True)


def checkBftSmrTrace(trace):
    # Decisions of correct processors only. Relay is reported but not
    # claimed for BFT schedules.

    return smrReport(asView(trace), 'bft-smr', False)


# Turtle properties per instance

class _Input(object):
    __slots__ = ('turtleIndex', 'chain')

    def __init__(self, turtleIndex, chain):
        self.turtleIndex = turtleIndex
        self.chain = chain


class _Output(object):
    __slots__ = ('turtleIndex', 'decided', 'upper')

    def __init__(self, turtleIndex, decided, upper):
        self.turtleIndex = turtleIndex
        self.decided = decided
        self.upper = upper


def checkTurtleTrace(trace):
    view = asView(trace)
    mode = Mode.BFT if view.isBft else Mode.CRASH
    report = CheckReport(view.modelConforming)

    inputs = collections.defaultdict(list)
    outputs = collections.defaultdict(list)
    started = collections.defaultdict(set)
    for r in view.byKind['propose']:
        inputs[r['instance']].append(r)
        started[r['instance']].add(r['proc'])
    for r in view.of('output', view.honest):
        outputs[r['instance']].append(r)

    results = collections.OrderedDict((name, None) for name in
        ('turtle-agreement', 'turtle-unanimity', 'turtle-validity', 'turtle-termination'))
    for instance in sorted(set(inputs) | set(outputs)):
        ins = [_Input(instance, view.chain(r['chain'])) for r in inputs[instance]]
        outs = [_Output(instance, view.chain(r['decided']), view.chain(r['upper']))
            for r in outputs[instance]]
        seqs = [r['seq'] for r in outputs[instance]]

        if results['turtle-agreement'] is None and not checkTurtleAgreement(outs):
            results['turtle-agreement'] = failed('turtle-agreement', seqs,
                'outputs of instance {} do not agree'.format(instance))
        if ins and results['turtle-unanimity'] is None and \
                not checkTurtleUnanimity(ins, outs, mode):
            results['turtle-unanimity'] = failed('turtle-unanimity', seqs,
                'an output of instance {} does not extend the common prefix of its inputs'.format(
                    instance))
        if results['turtle-validity'] is None and not checkTurtleValidity(ins, outs):
            results['turtle-validity'] = failed('turtle-validity', seqs,
                'an upper bound of instance {} extends no input'.format(instance))
        if view.quiesced and results['turtle-termination'] is None:
            produced = set(r['proc'] for r in outputs[instance])
            if not checkTurtleTermination(started[instance], produced, view.correct):
                missing = sorted(started[instance] & view.correct - produced)
                results['turtle-termination'] = failed('turtle-termination',
                    [r['seq'] for r in inputs[instance] if r['proc'] in missing],
                    'processors {} started instance {} but never output'.format(missing, instance))

    for name, result in results.items():
        if result is None:
            detail = 'trace did not quiesce' if name == 'turtle-termination' and \
                not view.quiesced else None
            result = failed(name, [], detail) if detail else passed(name)
        report.add(result)
    return report


# Leader liveness

def progressStart(view):
    # First instance whose timer exceeds delta · 2^n and that every correct
    # processor entered at or after GST. Entering instance i means producing
    # the output of instance i - 1.

    sync = view.header['sync']
    initialTimer = view.header['leader']['initialTimer']
    threshold = sync['delta'] * 2 ** view.n
    entered = collections.defaultdict(dict)
    for r in view.of('output', view.correct):
        entered[r['proc']][r['instance'] + 1] = r['t']

    last = view.lastCommonInstance()
    for instance in range(1, last + 1):
        if timerFor(instance, initialTimer) <= threshold:
            continue
        times = [0 if instance == 1 else entered[p].get(instance) for p in view.correct]
        if all(t is not None and t >= sync['gst'] for t in times):
            return instance
    return None


def checkProgress(trace):
    # Within every window of 4·n instances from the progress start on, the
    # longest decision of every correct processor grows.

    view = asView(trace)
    name = 'smr-progress'
    report = CheckReport(view.modelConforming)
    if not view.header['leader']['enabled'] or view.header['sync']['mode'] != 'partial':
        report.add(passed(name, False, 'needs the leader wrapper in partial synchrony'))
        return report

    window = 4 * view.n
    start = progressStart(view)
    last = view.lastCommonInstance()
    if start is None or start + window - 1 > last:
        report.add(passed(name, True, 'no complete window before instance {}'.format(last)))
        return report

    for p in sorted(view.correct):
        lengths = collections.defaultdict(int)
        for r in view.of('decide', {p}):
            lengths[r['instance']] = max(lengths[r['instance']], len(r['chain']))
        for s in range(start, last - window + 2):
            before = max([lengths[i] for i in range(1, s)] or [0])
            within = max(lengths[i] for i in range(s, s + window))
            if within <= before:
                report.add(failed(name, [],
                    'processor {} decided nothing longer in instances {}..{}'.format(
                        p, s, s + window - 1)))
                return report
    report.add(passed(name, True, 'windows from instance {}'.format(start)))
    return report


# Network properties

def checkNetwork(trace):
    view = asView(trace)
    report = CheckReport(view.modelConforming)
    sends = dict((r['msg'], r) for r in view.byKind['send'])

    # Integrity: every delivery (or drop) matches exactly one earlier send
    result = passed('network-integrity')
    seen = set()
    for r in sorted(view.byKind['deliver'] + view.byKind['drop'], key=lambda r: r['seq']):
        send = sends.get(r['msg'])
        if send is None or send['seq'] > r['seq'] or send['proc'] != r['sender'] or \
                send['dest'] != r['proc'] or send['payload_digest'] != r['payload_digest'] or \
                send['instance'] != r['instance'] or send['round'] != r['round']:
            result = failed('network-integrity', [r['seq']],
                'message {} does not match any send'.format(r['msg']))
            break
        if r['msg'] in seen:
            result = failed('network-integrity', [send['seq'], r['seq']],
                'message {} delivered twice'.format(r['msg']))
            break
        seen.add(r['msg'])
    report.add(result)

    # Reliability between processors correct for the whole run
    result = passed('network-reliability')
    if not view.quiesced:
        result = failed('network-reliability', [], 'trace did not quiesce')
    else:
        delivered = set(r['msg'] for r in view.byKind['deliver'])
        for r in view.byKind['send']:
            if r['proc'] in view.correct and r['dest'] in view.correct and \
                    r['msg'] not in delivered:
                result = failed('network-reliability', [r['seq']],
                    'message {} from {} to {} was never delivered'.format(
                        r['msg'], r['proc'], r['dest']))
                break
    report.add(result)

    # A crashed processor does nothing after its crash
    result = passed('crash-silence')
    crashedAt = dict((r['proc'], r['seq']) for r in view.byKind['crash'])
    for r in view.records:
        if r['kind'] in TraceView.ACTIVE_KINDS and r['proc'] in crashedAt and \
                r['seq'] > crashedAt[r['proc']]:
            result = failed('crash-silence', [crashedAt[r['proc']], r['seq']],
                'processor {} active after crashing'.format(r['proc']))
            break
    report.add(result)
    return report


# Dispatch

def defaultSpecs(view):
    if view.isBft:
        return [Spec.BFT, Spec.TURTLE]
    specs = [Spec.SMR, Spec.TURTLE]
    if view.header['leader']['enabled'] and view.header['sync']['mode'] == 'partial':
        specs.append(Spec.PROGRESS)
    return specs


def checkTrace(trace, specs=None):
    view = asView(trace)
    specs = specs or defaultSpecs(view)
    report = CheckReport(view.modelConforming)
    report.extend(checkNetwork(view))
    if Spec.SMR in specs:
        report.extend(checkSmrTrace(view))
    if Spec.BFT in specs:
        report.extend(checkBftSmrTrace(view))
    if Spec.TURTLE in specs:
        report.extend(checkTurtleTrace(view))
    if Spec.PROGRESS in specs:
        report.extend(checkProgress(view))

    report.counts = {
        'instances': max([r['instance'] for r in view.byKind['output']] or [0]),
        'outputs': len(view.byKind['output']),
        'decisions': len(view.byKind['decide']),
        'discards': len(view.byKind['discard']),
        'messages': len(view.byKind['send']),
        'drops': len(view.byKind['drop']),
    }
    return report
