from turtlesmr.bft import (Reason, SignedChain, computeBftOnestepOutput,
    validateBftInput)
from turtlesmr.errors import AgreementError, InvariantError
from turtlesmr.turtle import (Broadcast, Discard, RoundTag, TurtleKind,
    TurtleStateMachine)
from turtlesmr.turtle.onestep import ERROR_CANDIDATES


class BftOneStepTurtle(TurtleStateMachine):
    # One-Step turtle hardened against Byzantine processors.
    #
    # - 1a broadcasts <<c, e_c>, sig(c)>.
    # - 1b drops anything without a valid signature, valid evidence from
    #   the previous instance, or a chain that does not extend the
    #   evidence's upper bound.
    # - 1c keeps the signed chains of Q_p as evidence for <d, u>.
    #
    # Needs 5-intersection: C_p is built from Q_p and two more quorums.
    #
    # Expects signer, ledger and schedule in kwargs.

    kind = TurtleKind.BFT_ONESTEP
    intersection = 5
    rounds = 1

    def onInit(self):
        self.received = {}

    def onStart(self, turtleInput):
        signed = self.data.signer.signChain(turtleInput.turtleIndex, RoundTag.PROPOSAL,
            turtleInput.chain)
        return [Broadcast(RoundTag.PROPOSAL, {
            'chain': turtleInput.chain,
            'evidence': turtleInput.evidence,
            'sig': signed.signature})]

    def onRead(self, sender, roundTag, msg):
        if roundTag != RoundTag.PROPOSAL:
            return [Discard(sender, Reason.MALFORMED)]
        if sender in self.received:
            return []

        instance = self.input.turtleIndex
        validation = validateBftInput(msg, instance, sender, self.system, self.data.ledger,
            self.data.schedule)
        if not validation:
            return [Discard(sender, validation.reason)]

        self.received[sender] = SignedChain(sender, msg['chain'], msg['sig'])
        if len(self.received) < self.quorumSize:
            return []

        try:
            output = computeBftOnestepOutput(instance, self.received, self.system)
        except AgreementError as e:
            raise InvariantError(ERROR_CANDIDATES.format(e.first, e.second))
        return [self.finish(output)]
