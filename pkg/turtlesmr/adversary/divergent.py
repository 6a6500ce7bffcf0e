from turtlesmr.adversary import AdversaryNode
from turtlesmr.bft import SignedChain, validateBftInput
from turtlesmr.chain import Command, meet
from turtlesmr.turtle import RoundTag


class DivergentXNode(AdversaryNode):
    # Sends different round 2 chains x to different processors.
    #
    # Valid round 1 proposals are pooled and the round 2 message is held
    # back until the pool holds more than a quorum. Then even recipients
    # get an x computed over a quorum of their own, rotated through the
    # pool, and odd recipients an x extended by a made-up command with a
    # certificate that does not recompute to it.

    strategy = 'divergent-x'

    COMMAND_ID = '{}.dx{}.{}'

    def onInit(self):
        super(DivergentXNode, self).onInit()
        self.pool = {}
        self.held = {}

    def onDecoded(self, envelope, msg):
        if envelope.roundTag != RoundTag.PROPOSAL:
            return
        instance = envelope.instance
        if not validateBftInput(msg, instance, envelope.sender, self.system, self.ledger,
                self.schedule):
            return
        pool = self.pool.setdefault(instance, {})
        pool.setdefault(envelope.sender, SignedChain(envelope.sender, msg['chain'], msg['sig']))
        if instance in self.held and len(pool) > self.system.n - self.system.f:
            self.release(instance)

    def transmit(self, instance, roundTag, msg, dest=None):
        if roundTag != RoundTag.ESTIMATE or dest is not None:
            super(DivergentXNode, self).transmit(instance, roundTag, msg, dest)
            return
        super(DivergentXNode, self).transmit(instance, roundTag, msg, self.proc)
        self.held[instance] = msg
        if len(self.pool.get(instance, {})) > self.system.n - self.system.f:
            self.release(instance)

    def onOutput(self, out):
        if out.turtleIndex in self.held:
            self.release(out.turtleIndex)
        super(DivergentXNode, self).onOutput(out)

    def release(self, instance):
        msg = self.held.pop(instance)
        entries = [self.pool[instance][s] for s in sorted(self.pool.get(instance, {}))]
        quorumSize = self.system.n - self.system.f

        for dest in self.otherProcessors():
            if dest % 2 == 0 and len(entries) >= quorumSize:
                start = dest % len(entries)
                chosen = sorted((entries[(start + j) % len(entries)] for j in range(quorumSize)),
                    key=lambda e: e.signer)
                x = meet(e.chain for e in chosen)
                certificate = tuple(chosen)
            else:
                x = msg['chain'].extend([Command(DivergentXNode.COMMAND_ID.format(
                    self.proc, instance, dest))])
                certificate = msg['certificate']
            signed = self.signer.signChain(instance, RoundTag.ESTIMATE, x)
            super(DivergentXNode, self).transmit(instance, RoundTag.ESTIMATE,
                {'chain': x, 'sig': signed.signature, 'certificate': certificate}, dest)
