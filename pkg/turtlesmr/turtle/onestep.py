import itertools
import logging

from turtlesmr.chain import Chain, meet, maxAgreeing
from turtlesmr.errors import AgreementError, InvariantError
from turtlesmr.turtle import (Broadcast, RoundTag, TurtleKind, TurtleOutput,
    TurtleStateMachine)


# One-Step Tree Turtle
#
# 1a. Broadcast the input chain c to everyone, including yourself.
# 1b. Wait for chains c_s from a quorum Q_p of senders.
# 1c. d is the meet over Q_p. C_p holds the meet over Q_p ∩ Q for every
#     quorum Q, and u is the maximum of C_p.
#
# All elements of C_p agree as long as any three quorums intersect.


ERROR_CANDIDATES = 'Quorum intersection meets do not agree ({} and {}); the quorum system is too weak for this turtle'


def computeCandidates(received, system, count=2):
    # C_p via the threshold shortcut: the meets over the smallest sets of
    # the form Q_p ∩ Q_2 ∩ ... ∩ Q_count. Larger intersections only give
    # shorter meets, which never change the maximum.
    #
    # count is 2 for the crash tolerant turtle and 3 for the BFT one.

    quorum = frozenset(received)
    return [meet(received[s] for s in sorted(subset))
        for subset in system.intersectionSubsets(quorum, count)]


def computeCandidatesByQuorums(received, system, count=2):
    # C_p by literal enumeration of (count - 1)-tuples of minimal quorums.
    #
    # Slow; kept as the reference the shortcut is tested against.

    quorum = frozenset(received)
    candidates = []
    for others in itertools.product(system.minimalQuorums(), repeat=count - 1):
        subset = quorum.intersection(*others)
        if subset:
            candidates.append(meet(received[s] for s in sorted(subset)))
    return candidates


def computeOnestepOutput(turtleIndex, received, system, count=2):
    # received maps every s in Q_p to c_s.

    decided = meet(received[s] for s in sorted(received))
    candidates = computeCandidates(received, system, count)
    try:
        upper = maxAgreeing(candidates)
    except AgreementError as e:
        raise InvariantError(ERROR_CANDIDATES.format(e.first, e.second))
    return TurtleOutput(turtleIndex, decided, upper)


class OneStepTurtle(TurtleStateMachine):

    kind = TurtleKind.ONESTEP
    intersection = 3
    rounds = 1

    def onInit(self):
        # Chains in arrival order; the first n - f senders form Q_p.
        self.received = {}

    def onStart(self, turtleInput):
        return [Broadcast(RoundTag.PROPOSAL, {'chain': turtleInput.chain})]

    def onRead(self, sender, roundTag, msg):
        chain = msg.get('chain') if isinstance(msg, dict) else None
        if roundTag != RoundTag.PROPOSAL or not isinstance(chain, Chain):
            logging.debug(TurtleStateMachine.LOG_MALFORMED, self.proc, roundTag, sender,
                self.input.turtleIndex)
            return []
        if sender in self.received:
            return []

        self.received[sender] = chain
        if len(self.received) < self.quorumSize:
            return []

        output = computeOnestepOutput(self.input.turtleIndex, self.received, self.system)
        return [self.finish(output)]
