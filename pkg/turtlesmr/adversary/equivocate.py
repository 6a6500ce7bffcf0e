from turtlesmr.adversary import AdversaryNode
from turtlesmr.chain import Command, renderChain
from turtlesmr.turtle import RoundTag


class EquivocateNode(AdversaryNode):
    # Sends every processor a different, validly signed proposal: its own
    # chain extended with a command made up for that recipient.

    strategy = 'equivocate'

    COMMAND_ID = '{}.eq{}.{}'

    def transmit(self, instance, roundTag, msg, dest=None):
        if roundTag != RoundTag.PROPOSAL or dest is not None:
            super(EquivocateNode, self).transmit(instance, roundTag, msg, dest)
            return

        for dest in self.system.processors():
            variant = msg['chain'].extend([
                Command(EquivocateNode.COMMAND_ID.format(self.proc, instance, dest))])
            signed = self.signer.signChain(instance, roundTag, variant)
            self.trace('propose', instance=instance, chain=renderChain(variant))
            super(EquivocateNode, self).transmit(instance, roundTag,
                dict(msg, chain=variant, sig=signed.signature), dest)
