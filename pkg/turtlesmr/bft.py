import hashlib
import logging

from dataclasses import dataclass

from turtlesmr.chain import (BOTTOM, Chain, isPrefix, maxAgreeing, meet,
    minAgreeing)
from turtlesmr.errors import AgreementError
from turtlesmr.turtle import RoundTag, TurtleKind, TurtleOutput
from turtlesmr.turtle.onestep import computeCandidates


# Byzantine fault tolerance
#
# Inputs and outputs of BFT turtles carry evidence: quorums of signed chains
# from which anyone can recompute the output. A correct processor only
# accepts a proposal whose evidence is a valid output of the previous
# instance and whose chain extends that output's upper bound.
#
# Signatures are simulation grade. Signing registers (signer, digest, nonce)
# in a ledger shared by the scenario and verification looks the triple up.
# A processor only ever holds a Signer for its own id, so signatures of
# correct processors cannot be forged, only replayed verbatim.


class Reason(object):
    # Reason codes for failed validations and discarded messages.

    MALFORMED = 'malformed'
    BAD_SIGNATURE = 'bad-signature'
    NOT_A_QUORUM = 'not-a-quorum'
    RECOMPUTE_MISMATCH = 'recompute-mismatch'
    NON_AGREEING = 'non-agreeing-chains'
    STALE_EVIDENCE = 'stale-evidence'
    BAD_EVIDENCE = 'bad-evidence'
    UNEXTENDED_UPPER = 'unextended-upper'
    WRONG_KIND = 'wrong-kind'

    ALL = (MALFORMED, BAD_SIGNATURE, NOT_A_QUORUM, RECOMPUTE_MISMATCH, NON_AGREEING,
        STALE_EVIDENCE, BAD_EVIDENCE, UNEXTENDED_UPPER, WRONG_KIND)


class Validation(object):
    # Result of a validator: truthy when valid, otherwise carries a reason
    # code and, for nested failures, the inner reason as detail.

    __slots__ = ('reason', 'detail')

    def __init__(self, reason=None, detail=None):
        self.reason = reason
        self.detail = detail

    def __bool__(self):
        return self.reason is None

    def __repr__(self):
        if self.reason is None:
            return 'Validation(ok)'
        return 'Validation({}{})'.format(self.reason, ', ' + self.detail if self.detail else '')


VALID = Validation()


@dataclass(frozen=True)
class Signature(object):
    signer: int
    digest: str
    nonce: int


@dataclass(frozen=True)
class SignedChain(object):
    signer: int
    chain: Chain
    signature: Signature


def signedMessage(instance, roundTag, chain):
    # The bytes a processor signs for a chain. Binding instance and round
    # keeps a signature from being reused anywhere else.

    return '{}:{}:{}'.format(instance, roundTag, chain.digest()).encode('utf-8')


class SignatureLedger(object):
    # Registry of every signature produced in one scenario.

    def __init__(self):
        self.entries = set()
        self.nonce = 0

    def sign(self, signer, message):
        self.nonce += 1
        signature = Signature(signer, hashlib.sha256(message).hexdigest(), self.nonce)
        self.entries.add((signature.signer, signature.digest, signature.nonce))
        return signature

    def verify(self, signer, message, signature):
        if not isinstance(signature, Signature) or signature.signer != signer:
            return False
        if signature.digest != hashlib.sha256(message).hexdigest():
            return False
        return (signature.signer, signature.digest, signature.nonce) in self.entries

    def signerFor(self, proc):
        return Signer(proc, self)


class Signer(object):
    # Signing capability of a single processor.

    def __init__(self, proc, ledger):
        self.proc = proc
        self.ledger = ledger

    def sign(self, message):
        return self.ledger.sign(self.proc, message)

    def signChain(self, instance, roundTag, chain):
        return SignedChain(self.proc, chain,
            self.sign(signedMessage(instance, roundTag, chain)))


class BftOutput(TurtleOutput):
    # <i, d, u, e_du>. The evidence is a tuple of SignedChain sorted by
    # signer: signed proposals for One-Step, signed x chains for
    # Lower-Bound, nothing for genesis.

    def __init__(self, turtleIndex, decided, upper, kind, evidence=()):
        super(BftOutput, self).__init__(turtleIndex, decided, upper)
        self.kind = kind
        self.evidence = tuple(sorted(evidence, key=lambda s: s.signer))

    def __eq__(self, other):
        return (super(BftOutput, self).__eq__(other) and self.kind == other.kind and
            self.evidence == other.evidence)

    def __hash__(self):
        return hash((self.turtleIndex, self.decided, self.upper, self.kind, self.evidence))

    def __repr__(self):
        return '<{}, {}, {}, {} x{}>'.format(self.turtleIndex, self.decided, self.upper,
            self.kind, len(self.evidence))


# Evidence for the first instance's inputs
GENESIS = BftOutput(0, BOTTOM, BOTTOM, TurtleKind.GENESIS)


def verifySignedChains(entries, instance, roundTag, system, ledger):
    # Signed chains must come from distinct signers forming a quorum, and
    # every signature must verify for (instance, roundTag, chain).

    if not isinstance(entries, (list, tuple)) or not all(isinstance(e, SignedChain) for e in entries):
        return Validation(Reason.MALFORMED)
    signers = [e.signer for e in entries]
    if len(set(signers)) != len(signers):
        return Validation(Reason.MALFORMED)
    if any(not isinstance(s, int) or s < 0 or s >= system.n for s in signers):
        return Validation(Reason.MALFORMED)
    if not system.isQuorum(signers):
        return Validation(Reason.NOT_A_QUORUM)
    for entry in entries:
        if not isinstance(entry.chain, Chain) or not ledger.verify(entry.signer,
                signedMessage(instance, roundTag, entry.chain), entry.signature):
            return Validation(Reason.BAD_SIGNATURE)
    return VALID


def computeBftOnestepOutput(turtleIndex, received, system):
    # Output from the signed proposals of Q_p. C_p ranges over Q_p ∩ Q1 ∩ Q2.

    chains = dict((s, received[s].chain) for s in received)
    decided = meet(chains[s] for s in sorted(chains))
    upper = maxAgreeing(computeCandidates(chains, system, 3))
    return BftOutput(turtleIndex, decided, upper, TurtleKind.BFT_ONESTEP, received.values())


def validateBftOnestepOutput(out, system, ledger):
    if not isinstance(out, BftOutput) or out.kind != TurtleKind.BFT_ONESTEP:
        return Validation(Reason.WRONG_KIND)
    verified = verifySignedChains(out.evidence, out.turtleIndex, RoundTag.PROPOSAL, system, ledger)
    if not verified:
        return verified

    received = dict((e.signer, e) for e in out.evidence)
    try:
        expected = computeBftOnestepOutput(out.turtleIndex, received, system)
    except AgreementError:
        return Validation(Reason.RECOMPUTE_MISMATCH)
    if expected.decided != out.decided or expected.upper != out.upper:
        return Validation(Reason.RECOMPUTE_MISMATCH)
    return VALID


def validateBftLowerboundMessage2(msg, instance, sender, system, ledger):
    # Round 2 message <x, sig(x), {<c_s, sig(c_s)> : s in Q1}>: x must be
    # the meet of a signed quorum of round 1 chains.

    if not isinstance(msg, dict):
        return Validation(Reason.MALFORMED)
    x = msg.get('chain')
    signature = msg.get('sig')
    certificate = msg.get('certificate')
    if not isinstance(x, Chain) or not isinstance(signature, Signature):
        return Validation(Reason.MALFORMED)
    if not ledger.verify(sender, signedMessage(instance, RoundTag.ESTIMATE, x), signature):
        return Validation(Reason.BAD_SIGNATURE)
    verified = verifySignedChains(certificate, instance, RoundTag.PROPOSAL, system, ledger)
    if not verified:
        return verified
    if meet(e.chain for e in certificate) != x:
        return Validation(Reason.RECOMPUTE_MISMATCH)
    return VALID


def validateBftLowerboundOutput(out, system, ledger):
    if not isinstance(out, BftOutput) or out.kind != TurtleKind.BFT_LOWERBOUND:
        return Validation(Reason.WRONG_KIND)
    verified = verifySignedChains(out.evidence, out.turtleIndex, RoundTag.ESTIMATE, system, ledger)
    if not verified:
        return verified

    chains = [e.chain for e in out.evidence]
    try:
        decided = minAgreeing(chains)
        upper = maxAgreeing(chains)
    except AgreementError:
        return Validation(Reason.NON_AGREEING)
    if decided != out.decided or upper != out.upper:
        return Validation(Reason.RECOMPUTE_MISMATCH)
    return VALID


OUTPUT_VALIDATORS = {
    TurtleKind.BFT_ONESTEP: validateBftOnestepOutput,
    TurtleKind.BFT_LOWERBOUND: validateBftLowerboundOutput,
}


def validateBftOutput(out, expectedIndex, expectedKind, system, ledger):
    # Checks that out is a valid output of instance expectedIndex, which
    # ran the protocol expectedKind. Index 0 only accepts genesis.

    if not isinstance(out, BftOutput):
        return Validation(Reason.MALFORMED)
    if out.turtleIndex != expectedIndex:
        return Validation(Reason.STALE_EVIDENCE)
    if expectedIndex == 0:
        return VALID if out == GENESIS else Validation(Reason.BAD_EVIDENCE)
    if out.kind != expectedKind:
        return Validation(Reason.WRONG_KIND)
    return OUTPUT_VALIDATORS[out.kind](out, system, ledger)


def validateBftInput(msg, instance, sender, system, ledger, schedule):
    # Checks a proposal {chain, evidence, sig} from sender, for both BFT turtles.

    if not isinstance(msg, dict):
        return Validation(Reason.MALFORMED)
    chain = msg.get('chain')
    evidence = msg.get('evidence')
    signature = msg.get('sig')
    if not isinstance(chain, Chain) or not isinstance(signature, Signature):
        return Validation(Reason.MALFORMED)
    if not ledger.verify(sender, signedMessage(instance, RoundTag.PROPOSAL, chain), signature):
        return Validation(Reason.BAD_SIGNATURE)

    previous = instance - 1
    expectedKind = schedule.kindFor(previous) if previous > 0 else TurtleKind.GENESIS
    verified = validateBftOutput(evidence, previous, expectedKind, system, ledger)
    if not verified:
        if verified.reason in (Reason.STALE_EVIDENCE, Reason.WRONG_KIND, Reason.MALFORMED):
            return verified
        return Validation(Reason.BAD_EVIDENCE, verified.reason)
    if not isPrefix(evidence.upper, chain):
        return Validation(Reason.UNEXTENDED_UPPER)
    return VALID


def bftDecideRule(engine, out):
    # A correct processor decides d only if it is longer than anything it
    # decided before. Returns the chain to decide, or None.

    if len(out.decided) > len(engine.longestDecided):
        return out.decided
    logging.debug('Processor output %s does not extend its longest decision', out)
    return None
