import heapq
import json
import logging

import numpy as np

from turtlesmr import adversary
from turtlesmr.bft import SignatureLedger
from turtlesmr.codec import payloadDigest
from turtlesmr.config import DictConfig, SyncMode
from turtlesmr.node import Envelope, SmrNode
from turtlesmr.smr import TurtleSchedule
from turtlesmr.turtle import getTurtleKinds


# Deterministic discrete event simulator.
#
# Time is an integer. Events are kept in a heap ordered by (time, seq)
# where seq is a global counter assigned when the event is scheduled, so
# the run is a pure function of the scenario and its seed. Every message
# has a finite delay: the network is reliable, only slow.
#
# In partial synchrony mode a message sent at t arrives by
# max(t, gst) + delta. Processing is instantaneous, so the delta bound on
# delivery also bounds delivery plus processing.


class EventKind(object):
    START = 'start'
    DELIVER = 'deliver'
    TIMER = 'timer'
    CRASH = 'crash'
    GST = 'gst'


class DelayPreset(object):
    UNIFORM = 'uniform'
    HEAVY_TAILED = 'heavy-tailed'
    REORDER_HEAVY = 'reorder-heavy'


DELAY_PRESETS = (DelayPreset.UNIFORM, DelayPreset.HEAVY_TAILED, DelayPreset.REORDER_HEAVY)

# Pareto draws are unbounded; delays stay finite per message
MAX_DELAY = 10000


# Trace record kinds and the fields each carries on top of t, seq, kind
# and proc.
TRACE_SCHEMA = {
    'scenario': ('n', 'f', 'k', 'correct', 'roles', 'schedule', 'sync', 'leader', 'instances',
        'codec', 'seed', 'violate_model', 'model_conforming'),
    'send': ('dest', 'msg', 'instance', 'round', 'payload_digest'),
    'deliver': ('sender', 'msg', 'instance', 'round', 'payload_digest'),
    'drop': ('sender', 'msg', 'instance', 'round', 'payload_digest', 'reason'),
    'crash': (),
    'gst': (),
    'propose': ('instance', 'chain'),
    'output': ('instance', 'decided', 'upper'),
    'decide': ('instance', 'chain'),
    'discard': ('instance', 'sender', 'reason'),
    'leader_propose': ('instance', 'chain'),
    'adopt': ('instance',),
    'timer_expire': ('instance',),
    'end': ('quiesced', 'truncated', 'events'),
}


def drawDelay(preset, scale, rng):
    # A finite integer delay >= 1.

    if preset == DelayPreset.UNIFORM:
        return int(rng.integers(1, scale + 1))
    if preset == DelayPreset.HEAVY_TAILED:
        return min(MAX_DELAY, 1 + int(rng.pareto(1.5) * scale))
    if preset == DelayPreset.REORDER_HEAVY:
        return min(MAX_DELAY, 1 + int(rng.pareto(0.8) * scale))
    raise ValueError('Unknown delay preset {!r}'.format(preset))


def deliverPolicy(sentAt, sync, rng, selfDelivery=False):
    # Arrival time of a message sent at sentAt.
    #
    # Messages to oneself arrive with delay 0. Everything else takes at
    # least one time unit; in partial synchrony it arrives by
    # max(sentAt, gst) + delta.

    if selfDelivery:
        return sentAt
    arrival = sentAt + drawDelay(sync['preset'], sync['scale'], rng)
    if sync['mode'] == SyncMode.PARTIAL:
        arrival = min(arrival, max(sentAt, sync['gst']) + sync['delta'])
    return max(arrival, sentAt + 1)


class Trace(object):
    # Records of one run, in the order they were emitted.

    def __init__(self, records=None):
        self.records = records or []

    @property
    def header(self):
        return self.records[0]

    @property
    def truncated(self):
        return bool(self.records) and self.records[-1]['kind'] == 'end' and \
            self.records[-1]['truncated']

    def lines(self):
        return [encodeRecord(record) for record in self.records]

    def __len__(self):
        return len(self.records)


def encodeRecord(record):
    return json.dumps(record, sort_keys=True, separators=(',', ':'))


class NetworkHandle(object):
    # What a node sees of the simulator.

    def __init__(self, simulator, proc):
        self.simulator = simulator
        self.proc = proc

    @property
    def now(self):
        return self.simulator.now

    def send(self, dest, instance, roundTag, payload):
        self.simulator.send(self.proc, dest, instance, roundTag, payload)

    def broadcast(self, instance, roundTag, payload):
        for dest in range(self.simulator.n):
            self.simulator.send(self.proc, dest, instance, roundTag, payload)

    def setTimer(self, delay, key):
        self.simulator.schedule(self.simulator.now + delay, EventKind.TIMER, (self.proc, key))

    def trace(self, kind, **fields):
        self.simulator.record(kind, self.proc, **fields)


class Simulator(object):
    # Runs one scenario to quiescence or until maxEvents events have been
    # processed, in which case the trace is marked truncated.

    LOG_TRUNCATED = 'Event budget of {} exhausted at t={}, trace truncated'
    LOG_DROP = 'Dropped message %s from %s to crashed processor %s'

    def __init__(self, scenario):
        self.scenario = scenario
        self.n = scenario.n
        self.sync = scenario.sync
        self.rng = np.random.default_rng(scenario.seed)
        self.now = 0
        self.seq = 0
        self.msgId = 0
        self.events = []
        self.records = []
        self.crashed = set()
        self.processed = 0

        data = DictConfig({
            'scenario': scenario,
            'schedule': TurtleSchedule.fromConfig(scenario.schedule),
            'kinds': getTurtleKinds(),
            'ledger': SignatureLedger(),
        })
        strategies = adversary.getStrategies()
        self.nodes = []
        for proc in range(self.n):
            nodeClass = SmrNode
            if proc in scenario.byzantine:
                nodeClass = strategies[scenario.byzantine[proc]]
            self.nodes.append(nodeClass(proc, NetworkHandle(self, proc), data))

    def schedule(self, time, kind, payload=None):
        self.seq += 1
        heapq.heappush(self.events, (time, self.seq, kind, payload))

    def record(self, kind, proc, **fields):
        record = {'t': self.now, 'seq': len(self.records), 'kind': kind, 'proc': proc}
        record.update(fields)
        self.records.append(record)

    def send(self, sender, dest, instance, roundTag, payload):
        self.msgId += 1
        envelope = Envelope(self.msgId, instance, roundTag, sender, dest, payload)
        self.record('send', sender, dest=dest, msg=envelope.msgId, instance=instance,
            round=roundTag, payload_digest=payloadDigest(payload))
        arrival = deliverPolicy(self.now, self.sync, self.rng, sender == dest)
        self.schedule(arrival, EventKind.DELIVER, envelope)

    def run(self):
        self.record('scenario', None, **self.scenario.header())

        # Crashes at t=0 are scheduled first so they precede every start
        for proc, time in sorted(self.scenario.crashes.items()):
            self.schedule(time, EventKind.CRASH, proc)
        if self.sync['mode'] == SyncMode.PARTIAL:
            self.schedule(self.sync['gst'], EventKind.GST)
        for proc in range(self.n):
            self.schedule(0, EventKind.START, proc)

        truncated = False
        while self.events:
            if self.processed >= self.scenario.maxEvents:
                truncated = True
                logging.warning(Simulator.LOG_TRUNCATED.format(self.scenario.maxEvents, self.now))
                break
            time, _, kind, payload = heapq.heappop(self.events)
            self.now = time
            self.processed += 1
            self.dispatch(kind, payload)

        self.record('end', None, quiesced=not self.events, truncated=truncated,
            events=self.processed)
        return Trace(self.records)

    def dispatch(self, kind, payload):
        if kind == EventKind.START:
            if payload not in self.crashed:
                self.nodes[payload].onStart()
        elif kind == EventKind.DELIVER:
            self.deliver(payload)
        elif kind == EventKind.TIMER:
            proc, key = payload
            if proc not in self.crashed:
                self.nodes[proc].onTimer(key)
        elif kind == EventKind.CRASH:
            self.crashed.add(payload)
            self.record('crash', payload)
        elif kind == EventKind.GST:
            self.record('gst', None)

    def deliver(self, envelope):
        fields = {
            'sender': envelope.sender,
            'msg': envelope.msgId,
            'instance': envelope.instance,
            'round': envelope.roundTag,
            'payload_digest': payloadDigest(envelope.payload),
        }
        if envelope.dest in self.crashed:
            logging.debug(Simulator.LOG_DROP, envelope.msgId, envelope.sender, envelope.dest)
            self.record('drop', envelope.dest, reason='crashed', **fields)
            return
        self.record('deliver', envelope.dest, **fields)
        self.nodes[envelope.dest].onRead(envelope)


def run(scenario):
    return Simulator(scenario).run()
