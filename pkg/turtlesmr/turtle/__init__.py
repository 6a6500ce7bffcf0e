import abc

from dataclasses import dataclass
from typing import Any, Optional

from turtlesmr.chain import BOTTOM, Chain, isPrefix
from turtlesmr.config import DictConfig
from turtlesmr.errors import InvariantError, UsageError
from turtlesmr.util import loadClassDictFromPkg


# A tree turtle is a terminating subprotocol: every participant inputs one
# chain and outputs a pair <d, u> where d is decided and u is an upper
# bound the next proposal has to extend.
#
# Turtle protocols are pure state machines. They never see clocks or
# sockets: the simulator (or any other driver) feeds them messages and
# carries out the actions they return.
#
# Protocol modules in this package are discovered at runtime, the same way
# message types are. A protocol class only needs a `kind` attribute.


class TurtleKind(object):
    ONESTEP = 'onestep'
    LOWERBOUND = 'lowerbound'
    BFT_ONESTEP = 'bft_onestep'
    BFT_LOWERBOUND = 'bft_lowerbound'

    # Kind used for the evidence standing in for the <0, ⊥, ⊥> output
    GENESIS = 'genesis'

    BFT_KINDS = (BFT_ONESTEP, BFT_LOWERBOUND)
    CRASH_KINDS = (ONESTEP, LOWERBOUND)


class RoundTag(object):
    # Round tags of the message envelope.

    LEADER = 0
    PROPOSAL = 1
    ESTIMATE = 2

    ALL = (LEADER, PROPOSAL, ESTIMATE)


@dataclass(frozen=True)
class TurtleInput(object):
    # <i, c>, or <i, c, e_c> for BFT turtles.

    turtleIndex: int
    chain: Chain
    evidence: Optional[Any] = None


class TurtleOutput(object):
    # <i, d, u>. Construction asserts d ⪯ u, which every correct output
    # satisfies by agreement with itself.

    ERROR_NOT_ORDERED = 'Output {} has decided {} not a prefix of upper {}'

    def __init__(self, turtleIndex, decided, upper):
        if not isPrefix(decided, upper):
            raise InvariantError(TurtleOutput.ERROR_NOT_ORDERED.format(turtleIndex, decided, upper))
        self.turtleIndex = turtleIndex
        self.decided = decided
        self.upper = upper

    def __eq__(self, other):
        return (type(self) == type(other) and self.turtleIndex == other.turtleIndex and
            self.decided == other.decided and self.upper == other.upper)

    def __hash__(self):
        return hash((self.turtleIndex, self.decided, self.upper))

    def __repr__(self):
        return '<{}, {}, {}>'.format(self.turtleIndex, self.decided, self.upper)


INITIAL_OUTPUT = TurtleOutput(0, BOTTOM, BOTTOM)


@dataclass(frozen=True)
class Broadcast(object):
    roundTag: int
    msg: dict


@dataclass(frozen=True)
class ProduceOutput(object):
    output: TurtleOutput


@dataclass(frozen=True)
class Discard(object):
    sender: int
    reason: str


class TurtleStateMachine(abc.ABC):
    # One instance of a tree turtle at one processor.
    #
    # - start() is called exactly once with the processor's input.
    # - onMessage() is called for every message of this instance the
    #   processor receives, including its own broadcasts.
    # - Both return lists of actions: Broadcast, ProduceOutput, Discard.
    #
    # Messages are already decoded into dicts of chains, signatures and
    # evidence by the node layer. Anything unexpected in them is dropped.
    #
    # kwargs are kept in self.data the way connection data is, so BFT
    # turtles can be handed a signer, a ledger and the schedule.

    # Subclasses set these
    kind = None
    intersection = None
    # Number of broadcast rounds
    rounds = None

    ERROR_DOUBLE_START = 'Turtle {} at processor {} already started'
    ERROR_NOT_STARTED = 'Turtle at processor {} received a message before starting'

    LOG_MALFORMED = 'Processor %s dropped malformed round %s message from %s in instance %s'

    def __init__(self, proc, system, **kwargs):
        self.proc = proc
        self.system = system
        self.data = DictConfig(kwargs)
        self.input = None
        self.done = False
        self.onInit()

    def onInit(self):
        return

    @property
    def started(self):
        return self.input is not None

    @property
    def quorumSize(self):
        return self.system.n - self.system.f

    def start(self, turtleInput):
        if self.started:
            raise UsageError(TurtleStateMachine.ERROR_DOUBLE_START.format(
                turtleInput.turtleIndex, self.proc))
        self.input = turtleInput
        return self.onStart(turtleInput)

    def onMessage(self, sender, roundTag, msg):
        if not self.started:
            raise UsageError(TurtleStateMachine.ERROR_NOT_STARTED.format(self.proc))
        if self.done:
            return []
        return self.onRead(sender, roundTag, msg)

    @abc.abstractmethod
    def onStart(self, turtleInput):
        return

    @abc.abstractmethod
    def onRead(self, sender, roundTag, msg):
        return

    def finish(self, output):
        self.done = True
        return ProduceOutput(output)


def getTurtleKinds():
    # Loads all turtle protocol classes into a dictionary keyed by kind.

    return loadClassDictFromPkg(__name__, __file__, TurtleStateMachine, 'kind')
