from turtlesmr.adversary import AdversaryNode
from turtlesmr.bft import GENESIS
from turtlesmr.turtle import RoundTag


class StaleEvidenceNode(AdversaryNode):
    # Proposals carrying stale evidence, and replays of other processors'
    # signed proposals.
    #
    # For recipient r the proposal goes out:
    #
    # - r % 3 == 0: with the output of instance i-2 (or genesis) as
    #   evidence
    # - r % 3 == 1: replaced by another processor's signed proposal,
    #   preferably one from an earlier instance
    # - r % 3 == 2: unchanged

    strategy = 'stale-evidence-replay'

    def onInit(self):
        super(StaleEvidenceNode, self).onInit()
        self.observed = []

    def onDecoded(self, envelope, msg):
        if envelope.roundTag == RoundTag.PROPOSAL and envelope.sender != self.proc:
            self.observed.append((envelope.instance, msg))

    def transmit(self, instance, roundTag, msg, dest=None):
        if roundTag != RoundTag.PROPOSAL or dest is not None:
            super(StaleEvidenceNode, self).transmit(instance, roundTag, msg, dest)
            return

        super(StaleEvidenceNode, self).transmit(instance, roundTag, msg, self.proc)
        for dest in self.otherProcessors():
            if dest % 3 == 0:
                stale = self.outputs[instance - 2] if instance >= 2 else GENESIS
                sent = dict(msg, evidence=stale)
            elif dest % 3 == 1:
                sent = self.replayed(instance) or msg
            else:
                sent = msg
            super(StaleEvidenceNode, self).transmit(instance, roundTag, sent, dest)

    def replayed(self, instance):
        older = [m for i, m in self.observed if i < instance]
        if older:
            return older[-1]
        current = [m for i, m in self.observed if i == instance]
        return current[0] if current else None
