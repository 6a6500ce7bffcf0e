import abc
import logging

from dataclasses import dataclass
from typing import Tuple

from turtlesmr.bft import GENESIS, bftDecideRule
from turtlesmr.chain import BOTTOM, Chain, Command, commonPrefixLength
from turtlesmr.errors import EngineError, UsageError
from turtlesmr.turtle import INITIAL_OUTPUT, TurtleInput, TurtleKind
from turtlesmr.util import IdIncrement


# State machine replication from an unbounded sequence of tree turtles.
#
# Every processor runs turtle instances 1, 2, 3, ... one after the other.
# When instance i outputs <i, d, u> the processor decides d and proposes a
# chain extending u to instance i + 1. Which turtle protocol runs in an
# instance is decided by a fixed schedule known to everyone.


class ProposalSource(abc.ABC):
    # Supplies the chain a processor proposes to the next instance.

    @abc.abstractmethod
    def nextProposal(self, upper):
        # Returns a chain c with upper ⪯ c.
        return

    def onDecide(self, decided):
        return


class PendingCommandSource(ProposalSource):
    # Appends up to batchMax pending commands to the required prefix.
    #
    # Every call first receives `workload` fresh commands from this
    # processor's clients. Commands already in the prefix are skipped and
    # decided ones are pruned, so a command is proposed until it sticks.

    def __init__(self, issuer, batchMax=8, workload=1):
        self.issuer = issuer
        self.batchMax = batchMax
        self.workload = workload
        self.ids = IdIncrement(prefix='{}.'.format(issuer))
        self.pending = []

    def submit(self, command):
        self.pending.append(command)

    def nextProposal(self, upper):
        for _ in range(self.workload):
            self.submit(Command(self.ids.id()))
        present = set(upper.ids())
        batch = [c for c in self.pending if c.id not in present][:self.batchMax]
        return upper.extend(batch)

    def onDecide(self, decided):
        done = set(decided.ids())
        self.pending = [c for c in self.pending if c.id not in done]


class TurtleSchedule(object):
    # Maps instance numbers to turtle kinds.
    #
    # The schedule is a list of (kind, repeat) entries that cycles, so
    # [(onestep, 1), (lowerbound, 1)] alternates the two protocols.

    ERROR_EMPTY = 'A turtle schedule needs at least one entry'

    def __init__(self, entries):
        self.entries = [(kind, int(repeat)) for kind, repeat in entries]
        if not self.entries or any(repeat < 1 for _, repeat in self.entries):
            raise UsageError(TurtleSchedule.ERROR_EMPTY)
        self.period = sum(repeat for _, repeat in self.entries)

    @classmethod
    def fromConfig(cls, schedule):
        return cls((entry['kind'], entry.get('repeat', 1)) for entry in schedule)

    def kindFor(self, instance):
        if instance < 1:
            raise UsageError('Instance numbers start at 1, got {}'.format(instance))
        offset = (instance - 1) % self.period
        for kind, repeat in self.entries:
            if offset < repeat:
                return kind
            offset -= repeat

    def kinds(self):
        return set(kind for kind, _ in self.entries)

    @property
    def isBft(self):
        return all(kind in TurtleKind.BFT_KINDS for kind in self.kinds())


class SmrEngine(object):
    # Per-processor composition state.
    #
    # - currentInstance is the instance whose output is expected next.
    # - lastOutput starts as <0, ⊥, ⊥> (genesis evidence for BFT).
    # - decisionLog holds (instance, chain) for every decision, repeats
    #   included.
    #
    # Crash-tolerant turtles decide d every time. BFT turtles only decide
    # d if it is longer than anything decided before, and the output
    # itself becomes the evidence of the next input.

    ERROR_WRONG_INSTANCE = 'Processor {} got output for instance {} while running {}'
    LOG_DECIDE = 'Processor %s decided %s in instance %s'

    def __init__(self, proc, source, bft=False):
        self.proc = proc
        self.source = source
        self.bft = bft
        self.currentInstance = 1
        self.lastOutput = GENESIS if bft else INITIAL_OUTPUT
        self.decisionLog = []
        self.longestDecided = BOTTOM

    def initialInput(self):
        return self.makeInput(self.currentInstance)

    def makeInput(self, instance):
        chain = self.source.nextProposal(self.lastOutput.upper)
        evidence = self.lastOutput if self.bft else None
        return TurtleInput(instance, chain, evidence)

    def onTurtleOutput(self, out):
        # Returns (decision or None, input to the next instance).

        if out.turtleIndex != self.currentInstance:
            raise EngineError(SmrEngine.ERROR_WRONG_INSTANCE.format(
                self.proc, out.turtleIndex, self.currentInstance))

        decision = bftDecideRule(self, out) if self.bft else out.decided
        if decision is not None:
            self.decisionLog.append((out.turtleIndex, decision))
            if len(decision) >= len(self.longestDecided):
                self.longestDecided = decision
            self.source.onDecide(decision)
            logging.debug(SmrEngine.LOG_DECIDE, self.proc, decision, out.turtleIndex)

        self.lastOutput = out
        self.currentInstance += 1
        return decision, self.makeInput(self.currentInstance)


@dataclass(frozen=True)
class RelativeChain(object):
    # A chain with its first baseLength commands left out.

    baseLength: int
    suffix: Tuple[Command, ...]


def encodeRelative(c, decided):
    # Omits the part of c the receiver already knows. decided is the
    # sender's last decided chain; for the chains a processor proposes it
    # is a prefix of c and the whole of it is dropped.

    base = commonPrefixLength(c, decided)
    return RelativeChain(base, tuple(c.commands[base:]))


def decodeRelative(rc, known):
    # Rebuilds the chain against the receiver's last upper bound, which
    # Turtle-Agreement makes an extension of the sender's decided chain.
    #
    # Returns None when known is too short, i.e. decoding has to wait.

    if rc.baseLength > len(known):
        return None
    return Chain(known.commands[:rc.baseLength] + tuple(rc.suffix))
