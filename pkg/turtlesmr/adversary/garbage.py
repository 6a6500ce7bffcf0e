from dataclasses import replace

from turtlesmr.adversary import AdversaryNode
from turtlesmr.bft import Signature


class GarbageSignatureNode(AdversaryNode):
    # Sends other processors its messages with broken signatures.
    #
    # Per recipient one of: a random digest, the right digest with a nonce
    # the ledger never issued, or the right signature claimed for another
    # processor. Its own copy stays intact.

    strategy = 'garbage-signatures'

    def transmit(self, instance, roundTag, msg, dest=None):
        if 'sig' not in msg or dest is not None:
            super(GarbageSignatureNode, self).transmit(instance, roundTag, msg, dest)
            return

        super(GarbageSignatureNode, self).transmit(instance, roundTag, msg, self.proc)
        for dest in self.otherProcessors():
            forged = dict(msg, sig=self.forge(msg['sig'], dest))
            super(GarbageSignatureNode, self).transmit(instance, roundTag, forged, dest)

    def forge(self, signature, dest):
        choice = int(self.rng.integers(0, 3))
        if choice == 0:
            return replace(signature, digest=self.rng.bytes(32).hex())
        if choice == 1:
            return replace(signature, nonce=signature.nonce + 1 + int(self.rng.integers(0, 1000)))
        return Signature(dest, signature.digest, signature.nonce)
