import logging

from turtlesmr.chain import Chain, maxAgreeing, meet, minAgreeing
from turtlesmr.errors import AgreementError, InvariantError
from turtlesmr.turtle import (Broadcast, RoundTag, TurtleKind, TurtleOutput,
    TurtleStateMachine)


# Lower-Bound Tree Turtle
#
# Round 1: broadcast c, wait for a quorum Q1, x = meet over Q1.
# Round 2: broadcast x, wait for a quorum Q2, d = min and u = max over the
#          received x_s.
#
# Any two x values agree once any two quorums intersect, which is the
# weakest intersection a crash tolerant turtle can get away with.


ERROR_ESTIMATES = 'Round 2 chains do not agree ({} and {}); the quorum system is too weak for this turtle'


def lowerboundRound1Complete(received):
    # Round 1 over Q1: returns x and the round 2 broadcast.

    x = meet(received[s] for s in sorted(received))
    return x, Broadcast(RoundTag.ESTIMATE, {'chain': x})


def lowerboundRound2Complete(turtleIndex, received):
    # Round 2 output over the x_s of Q2.

    estimates = [received[s] for s in sorted(received)]
    try:
        decided = minAgreeing(estimates)
        upper = maxAgreeing(estimates)
    except AgreementError as e:
        raise InvariantError(ERROR_ESTIMATES.format(e.first, e.second))
    return TurtleOutput(turtleIndex, decided, upper)


class LowerBoundTurtle(TurtleStateMachine):

    kind = TurtleKind.LOWERBOUND
    intersection = 2
    rounds = 2

    def onInit(self):
        self.round1 = {}
        self.x = None
        # Round 2 chains can arrive before our own round 1 is over; they
        # are kept here in arrival order either way.
        self.round2 = {}

    def onStart(self, turtleInput):
        return [Broadcast(RoundTag.PROPOSAL, {'chain': turtleInput.chain})]

    def onRead(self, sender, roundTag, msg):
        chain = msg.get('chain') if isinstance(msg, dict) else None
        if roundTag not in (RoundTag.PROPOSAL, RoundTag.ESTIMATE) or not isinstance(chain, Chain):
            logging.debug(TurtleStateMachine.LOG_MALFORMED, self.proc, roundTag, sender,
                self.input.turtleIndex)
            return []

        actions = []
        if roundTag == RoundTag.PROPOSAL:
            if self.x is not None or sender in self.round1:
                return []
            self.round1[sender] = chain
            if len(self.round1) == self.quorumSize:
                self.x, broadcast = lowerboundRound1Complete(self.round1)
                actions.append(broadcast)
        elif sender not in self.round2:
            self.round2[sender] = chain

        if self.x is not None and len(self.round2) >= self.quorumSize:
            quorum = list(self.round2)[:self.quorumSize]
            output = lowerboundRound2Complete(self.input.turtleIndex,
                dict((s, self.round2[s]) for s in quorum))
            actions.append(self.finish(output))
        return actions
