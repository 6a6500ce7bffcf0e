import abc
import collections
import logging

from dataclasses import dataclass

from turtlesmr.chain import BOTTOM, Chain, renderChain
from turtlesmr.codec import Decoder, Encoder
from turtlesmr.errors import DeferDecode, MalformedPayload
from turtlesmr.leader import (LeaderConfig, LeaderMessage, LeaderPhase,
    TimerExpired, leaderFor, onLeaderMessageOrTimeout)
from turtlesmr.smr import PendingCommandSource, SmrEngine
from turtlesmr.turtle import Broadcast, Discard, ProduceOutput, RoundTag


@dataclass(frozen=True)
class Envelope(object):
    # A message in flight. msgId is unique per (sender, dest) send.

    msgId: int
    instance: int
    roundTag: int
    sender: int
    dest: int
    payload: bytes


class DiscardReason(object):
    # Node level discards, on top of the BFT validation reasons
    MALFORMED = 'malformed'
    DEFERRED = 'deferred-prefix'


class Node(abc.ABC):
    # Abstract simulated processor. The onRead method needs to be
    # implemented.
    #
    # A node talks to the world through a network handle that can send,
    # broadcast, set timers and write trace records. The simulator calls
    # onStart once, then onRead for every delivered envelope and onTimer
    # for every timer that fires, all on a single thread.

    LOG_INFO_GENERIC = '[%s, t=%s] %s'

    def __init__(self, proc, network, data):
        self.proc = proc
        self.network = network
        self.data = data
        self.onInit()

    def onInit(self):
        return

    def onStart(self):
        return

    @abc.abstractmethod
    def onRead(self, envelope):
        # Invoked when an envelope is delivered to this node.
        return

    def onTimer(self, key):
        return

    def trace(self, kind, **fields):
        self.network.trace(kind, **fields)

    def logInfo(self, msg):
        logging.info(Node.LOG_INFO_GENERIC, self.proc, self.network.now, msg)


class SmrNode(Node):
    # A processor running the turtle composition.
    #
    # Wires together the engine, the turtle registry, the codec, the
    # optional leader phase and, for BFT schedules, the processor's signer.
    #
    # - Envelopes of future instances wait in a per-instance buffer.
    # - Envelopes of the current instance wait there too until the turtle
    #   has started, i.e. while the leader phase is running.
    # - Envelopes of finished instances are ignored.
    #
    # Handling an envelope can finish an instance and replay the buffer of
    # the next one, so envelopes go through an inbox drained in a loop.

    LOG_FINISHED = 'Finished {} instances, longest decision has {} commands'
    LOG_IGNORED = 'Processor %s ignored round %s message from %s for instance %s'
    LOG_DISCARD = 'Processor %s discarded message from %s in instance %s: %s'

    def onInit(self):
        scenario = self.data.scenario
        self.system = scenario.system
        self.schedule = self.data.schedule
        self.kinds = self.data.kinds
        self.instances = scenario.instances
        self.codec = scenario.codec
        self.leaderConfig = LeaderConfig.fromScenario(scenario)

        self.isBft = self.schedule.isBft
        self.ledger = self.data.ledger
        self.signer = self.ledger.signerFor(self.proc) if self.isBft else None

        self.source = PendingCommandSource(self.proc, scenario.batchMax, scenario.workload)
        self.engine = SmrEngine(self.proc, self.source, bft=self.isBft)

        self.turtle = None
        self.phase = None
        self.sendBase = BOTTOM
        self.buffer = {}
        self.inbox = collections.deque()
        self.draining = False
        self.finished = False

    @property
    def currentInstance(self):
        return self.engine.currentInstance

    def onStart(self):
        self.enterInstance(self.engine.initialInput())
        self.drain()

    def onRead(self, envelope):
        self.inbox.append(envelope)
        self.drain()

    def onTimer(self, key):
        name, instance = key
        if self.finished or self.phase is None or self.phase.instance != instance:
            return
        if not self.phase.awaiting:
            return
        self.trace('timer_expire', instance=instance)
        self.startTurtle(onLeaderMessageOrTimeout(self.phase, TimerExpired()))
        self.drain()

    def drain(self):
        if self.draining:
            return
        self.draining = True
        try:
            while self.inbox:
                self.handle(self.inbox.popleft())
        finally:
            self.draining = False

    def handle(self, envelope):
        instance = envelope.instance
        if self.finished or instance < self.currentInstance:
            logging.debug(SmrNode.LOG_IGNORED, self.proc, envelope.roundTag, envelope.sender,
                instance)
            return
        if instance > self.currentInstance:
            self.buffer.setdefault(instance, []).append(envelope)
            return
        if envelope.roundTag == RoundTag.LEADER:
            self.onLeaderEnvelope(envelope)
            return
        if not self.turtle.started:
            self.buffer.setdefault(instance, []).append(envelope)
            return

        msg = self.decode(envelope)
        if msg is not None:
            self.onDecoded(envelope, msg)
            self.apply(instance, self.turtle.onMessage(envelope.sender, envelope.roundTag, msg))

    def onDecoded(self, envelope, msg):
        # Hook for nodes that want to look at every decoded turtle message.
        return

    def decode(self, envelope):
        # Chains are filled in from the upper bound of the previous
        # instance's output. That base is fixed until the instance ends, and
        # an honest sender only omits its previous decision, which prefixes
        # every upper bound. A chain omitting more than the base can never
        # be completed within the instance, so it is discarded rather than
        # buffered.

        try:
            return Decoder(self.engine.lastOutput.upper).decode(envelope.payload)
        except DeferDecode:
            self.discard(envelope.instance, envelope.sender, DiscardReason.DEFERRED)
        except MalformedPayload:
            self.discard(envelope.instance, envelope.sender, DiscardReason.MALFORMED)
        return None

    def discard(self, instance, sender, reason):
        logging.debug(SmrNode.LOG_DISCARD, self.proc, sender, instance, reason)
        self.trace('discard', instance=instance, sender=sender, reason=reason)

    def enterInstance(self, turtleInput):
        instance = turtleInput.turtleIndex
        self.turtle = self.makeTurtle(instance)
        self.sendBase = self.engine.lastOutput.decided

        if self.leaderConfig.enabled:
            self.phase = LeaderPhase(instance, turtleInput, self.engine.lastOutput.upper)
            if leaderFor(instance, self.system.n) == self.proc:
                self.transmit(instance, RoundTag.LEADER, {'chain': turtleInput.chain})
                self.trace('leader_propose', instance=instance,
                    chain=renderChain(turtleInput.chain))
            self.network.setTimer(self.leaderConfig.timerFor(instance), ('leader', instance))
            self.replay(instance)
        else:
            self.startTurtle(turtleInput)

    def makeTurtle(self, instance):
        turtleClass = self.kinds[self.schedule.kindFor(instance)]
        if self.isBft:
            return turtleClass(self.proc, self.system, signer=self.signer, ledger=self.ledger,
                schedule=self.schedule)
        return turtleClass(self.proc, self.system)

    def onLeaderEnvelope(self, envelope):
        instance = envelope.instance
        if self.phase is None or not self.phase.awaiting:
            return
        if envelope.sender != leaderFor(instance, self.system.n):
            logging.debug(SmrNode.LOG_IGNORED, self.proc, envelope.roundTag, envelope.sender,
                instance)
            return
        msg = self.decode(envelope)
        chain = msg.get('chain') if msg is not None else None
        if not isinstance(chain, Chain):
            return

        turtleInput = onLeaderMessageOrTimeout(self.phase, LeaderMessage(chain))
        if self.phase.adopted is not None:
            self.trace('adopt', instance=instance)
        self.startTurtle(turtleInput)

    def startTurtle(self, turtleInput):
        instance = turtleInput.turtleIndex
        self.trace('propose', instance=instance, chain=renderChain(turtleInput.chain))
        self.replay(instance)
        self.apply(instance, self.turtle.start(turtleInput))

    def replay(self, instance):
        buffered = self.buffer.pop(instance, [])
        self.inbox.extendleft(reversed(buffered))

    def apply(self, instance, actions):
        for action in actions:
            if isinstance(action, Broadcast):
                self.transmit(instance, action.roundTag, action.msg)
            elif isinstance(action, Discard):
                self.discard(instance, action.sender, action.reason)
            elif isinstance(action, ProduceOutput):
                self.onOutput(action.output)

    def transmit(self, instance, roundTag, msg, dest=None):
        # Encodes and sends msg to dest, or to everyone when dest is None.
        # Byzantine nodes override this.

        payload = Encoder(self.sendBase, self.codec).encode(msg)
        if dest is None:
            self.network.broadcast(instance, roundTag, payload)
        else:
            self.network.send(dest, instance, roundTag, payload)

    def onOutput(self, out):
        instance = out.turtleIndex
        self.trace('output', instance=instance, decided=renderChain(out.decided),
            upper=renderChain(out.upper))
        decision, nextInput = self.engine.onTurtleOutput(out)
        if decision is not None:
            self.trace('decide', instance=instance, chain=renderChain(decision))

        if instance >= self.instances:
            self.finished = True
            self.turtle = None
            self.phase = None
            self.buffer.clear()
            self.logInfo(SmrNode.LOG_FINISHED.format(instance, len(self.engine.longestDecided)))
            return
        self.enterInstance(nextInput)
