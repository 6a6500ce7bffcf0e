from turtlesmr.bft import (BftOutput, Reason, SignedChain, validateBftInput,
    validateBftLowerboundMessage2)
from turtlesmr.chain import maxAgreeing, meet, minAgreeing
from turtlesmr.errors import AgreementError, InvariantError
from turtlesmr.turtle import (Broadcast, Discard, RoundTag, TurtleKind,
    TurtleStateMachine)
from turtlesmr.turtle.lowerbound import ERROR_ESTIMATES


class BftLowerBoundTurtle(TurtleStateMachine):
    # Lower-Bound turtle hardened against Byzantine processors.
    #
    # Round 1 is validated like BFT One-Step. The round 2 message carries
    # x, a signature on x, and the signed round 1 chains x was computed
    # from, so receivers can recompute it. The output evidence is the
    # signed x chains of Q2.
    #
    # Needs 3-intersection. Expects signer, ledger and schedule in kwargs.

    kind = TurtleKind.BFT_LOWERBOUND
    intersection = 3
    rounds = 2

    def onInit(self):
        self.round1 = {}
        self.x = None
        self.round2 = {}

    def onStart(self, turtleInput):
        signed = self.data.signer.signChain(turtleInput.turtleIndex, RoundTag.PROPOSAL,
            turtleInput.chain)
        return [Broadcast(RoundTag.PROPOSAL, {
            'chain': turtleInput.chain,
            'evidence': turtleInput.evidence,
            'sig': signed.signature})]

    def onRead(self, sender, roundTag, msg):
        instance = self.input.turtleIndex
        actions = []

        if roundTag == RoundTag.PROPOSAL:
            if self.x is not None or sender in self.round1:
                return []
            validation = validateBftInput(msg, instance, sender, self.system,
                self.data.ledger, self.data.schedule)
            if not validation:
                return [Discard(sender, validation.reason)]
            self.round1[sender] = SignedChain(sender, msg['chain'], msg['sig'])
            if len(self.round1) == self.quorumSize:
                actions.append(self.completeRound1(instance))
        elif roundTag == RoundTag.ESTIMATE:
            if sender in self.round2:
                return []
            validation = validateBftLowerboundMessage2(msg, instance, sender, self.system,
                self.data.ledger)
            if not validation:
                return [Discard(sender, validation.reason)]
            self.round2[sender] = SignedChain(sender, msg['chain'], msg['sig'])
        else:
            return [Discard(sender, Reason.MALFORMED)]

        if self.x is not None and len(self.round2) >= self.quorumSize:
            quorum = list(self.round2)[:self.quorumSize]
            actions.append(self.finish(self.completeRound2(instance,
                [self.round2[s] for s in quorum])))
        return actions

    def completeRound1(self, instance):
        certificate = tuple(self.round1[s] for s in sorted(self.round1))
        self.x = meet(entry.chain for entry in certificate)
        signed = self.data.signer.signChain(instance, RoundTag.ESTIMATE, self.x)
        return Broadcast(RoundTag.ESTIMATE, {
            'chain': self.x,
            'sig': signed.signature,
            'certificate': certificate})

    def completeRound2(self, instance, evidence):
        chains = [entry.chain for entry in evidence]
        try:
            decided = minAgreeing(chains)
            upper = maxAgreeing(chains)
        except AgreementError as e:
            raise InvariantError(ERROR_ESTIMATES.format(e.first, e.second))
        return BftOutput(instance, decided, upper, TurtleKind.BFT_LOWERBOUND, evidence)
