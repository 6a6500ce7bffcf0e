import itertools

import pytest

from turtlesmr.bft import (GENESIS, BftOutput, Reason, SignatureLedger, Signature,
    bftDecideRule, signedMessage, validateBftInput, validateBftLowerboundMessage2,
    validateBftLowerboundOutput, validateBftOnestepOutput, validateBftOutput)
from turtlesmr.chain import BOTTOM, Command, agrees, isPrefix, meet
from turtlesmr.checker import Mode, checkTurtleAgreement, checkTurtleUnanimity
from turtlesmr.quorum import makeThreshold
from turtlesmr.turtle import Discard, RoundTag, TurtleInput, TurtleKind
from turtlesmr.turtle.bftlowerbound import BftLowerBoundTurtle
from turtlesmr.turtle.bftonestep import BftOneStepTurtle
from turtlesmr.test.conftest import BftContext, makeChain, runInstance


def proposal(ctx, proc, instance, chain, evidence=GENESIS):
    signed = ctx.signers[proc].signChain(instance, RoundTag.PROPOSAL, chain)
    return {'chain': chain, 'evidence': evidence, 'sig': signed.signature}


def onestepInstance(ctx, chains, instance=1, evidence=GENESIS):
    turtles = dict((p, ctx.turtle(BftOneStepTurtle, p)) for p in range(len(chains)))
    inputs = dict((p, TurtleInput(instance, c, evidence)) for p, c in enumerate(chains))
    return runInstance(turtles, inputs)


class TestSignatures(object):

    def test_sign_and_verify(self):
        ledger = SignatureLedger()
        message = signedMessage(1, RoundTag.PROPOSAL, makeChain('a'))
        signature = ledger.sign(0, message)
        assert ledger.verify(0, message, signature)
        assert not ledger.verify(1, message, signature)

    def test_bound_to_instance_and_round(self):
        ledger = SignatureLedger()
        signature = ledger.sign(0, signedMessage(1, RoundTag.PROPOSAL, makeChain('a')))
        assert not ledger.verify(0, signedMessage(2, RoundTag.PROPOSAL, makeChain('a')), signature)
        assert not ledger.verify(0, signedMessage(1, RoundTag.ESTIMATE, makeChain('a')), signature)

    def test_forgeries(self):
        ledger = SignatureLedger()
        message = signedMessage(1, RoundTag.PROPOSAL, makeChain('a'))
        signature = ledger.sign(0, message)
        assert not ledger.verify(0, message, Signature(0, signature.digest, signature.nonce + 1))
        assert not ledger.verify(1, message, Signature(1, signature.digest, signature.nonce))
        assert not ledger.verify(0, message, 'signature')


class TestInputValidation(object):

    def setup_method(self):
        self.system = makeThreshold(6, 1, 5)
        self.ctx = BftContext(self.system, [TurtleKind.BFT_ONESTEP])

    def validate(self, msg, instance=1, sender=0):
        return validateBftInput(msg, instance, sender, self.system, self.ctx.ledger,
            self.ctx.schedule)

    def test_genesis(self):
        assert self.validate(proposal(self.ctx, 0, 1, makeChain('a')))

    def test_bad_signature(self):
        msg = proposal(self.ctx, 1, 1, makeChain('a'))
        assert self.validate(msg, sender=0).reason == Reason.BAD_SIGNATURE
        msg = proposal(self.ctx, 0, 1, makeChain('a'))
        assert self.validate(dict(msg, chain=makeChain('b'))).reason == Reason.BAD_SIGNATURE

    def test_malformed(self):
        assert self.validate({'chain': 'a'}).reason == Reason.MALFORMED
        assert self.validate(None).reason == Reason.MALFORMED

    def test_second_instance(self):
        outputs = onestepInstance(self.ctx, [makeChain('a')] * 6)
        previous = outputs[0]
        msg = proposal(self.ctx, 0, 2, makeChain('a', 'b'), previous)
        assert self.validate(msg, 2)

        stale = proposal(self.ctx, 0, 2, makeChain('a', 'b'), GENESIS)
        assert self.validate(stale, 2).reason == Reason.STALE_EVIDENCE

        unextended = proposal(self.ctx, 0, 2, makeChain('b'), previous)
        assert self.validate(unextended, 2).reason == Reason.UNEXTENDED_UPPER

        forged = BftOutput(1, previous.decided, previous.upper.extend([Command('x')]),
            TurtleKind.BFT_ONESTEP, previous.evidence)
        msg = proposal(self.ctx, 0, 2, makeChain('a', 'x', 'y'), forged)
        validation = self.validate(msg, 2)
        assert validation.reason == Reason.BAD_EVIDENCE
        assert validation.detail == Reason.RECOMPUTE_MISMATCH


class TestBftOnestep(object):

    def test_outputs_validate(self):
        system = makeThreshold(6, 1, 5)
        ctx = BftContext(system, [TurtleKind.BFT_ONESTEP])
        chains = [makeChain('a'), makeChain('a', 'b'), makeChain('a', 'b'), makeChain('a', 'c'),
            makeChain('a', 'b', 'd'), makeChain('a', 'b')]
        outputs = onestepInstance(ctx, chains)
        assert sorted(outputs) == list(range(6))
        for out in outputs.values():
            assert validateBftOnestepOutput(out, system, ctx.ledger)
            assert len(out.evidence) == 5
        assert checkTurtleAgreement(outputs.values())
        inputs = [TurtleInput(1, c) for c in chains]
        assert checkTurtleUnanimity(inputs, outputs.values(), Mode.BFT)

    def test_tampered_outputs(self):
        system = makeThreshold(6, 1, 5)
        ctx = BftContext(system, [TurtleKind.BFT_ONESTEP])
        out = onestepInstance(ctx, [makeChain('a', 'b')] * 6)[0]
        longer = BftOutput(1, out.decided, out.upper.extend([Command('z')]),
            TurtleKind.BFT_ONESTEP, out.evidence)
        assert validateBftOnestepOutput(longer, system, ctx.ledger).reason == \
            Reason.RECOMPUTE_MISMATCH
        short = BftOutput(1, BOTTOM, out.upper, TurtleKind.BFT_ONESTEP, out.evidence[:4])
        assert validateBftOnestepOutput(short, system, ctx.ledger).reason == Reason.NOT_A_QUORUM
        assert validateBftOutput(out, 1, TurtleKind.BFT_LOWERBOUND, system, ctx.ledger).reason == \
            Reason.WRONG_KIND

    def test_discards_bad_proposals(self):
        system = makeThreshold(6, 1, 5)
        ctx = BftContext(system, [TurtleKind.BFT_ONESTEP])
        turtle = ctx.turtle(BftOneStepTurtle, 0)
        turtle.start(TurtleInput(1, makeChain('a'), GENESIS))
        msg = proposal(ctx, 2, 1, makeChain('a'))
        assert turtle.onMessage(3, RoundTag.PROPOSAL, msg) == [Discard(3, Reason.BAD_SIGNATURE)]
        assert turtle.onMessage(2, RoundTag.ESTIMATE, msg) == [Discard(2, Reason.MALFORMED)]
        assert turtle.onMessage(2, RoundTag.PROPOSAL, msg) == []
        assert 2 in turtle.received


class TestBftLowerBound(object):

    def test_outputs_validate(self):
        system = makeThreshold(7, 2, 3)
        ctx = BftContext(system, [TurtleKind.BFT_LOWERBOUND])
        chains = [makeChain('a', 'b'), makeChain('a'), makeChain('a', 'b', 'c'),
            makeChain('a', 'd'), makeChain('a', 'b'), makeChain('a', 'b', 'c'), makeChain('a')]
        turtles = dict((p, ctx.turtle(BftLowerBoundTurtle, p)) for p in range(7))
        inputs = dict((p, TurtleInput(1, c, GENESIS)) for p, c in enumerate(chains))
        outputs = runInstance(turtles, inputs)
        assert sorted(outputs) == list(range(7))
        for out in outputs.values():
            assert out.kind == TurtleKind.BFT_LOWERBOUND
            assert validateBftLowerboundOutput(out, system, ctx.ledger)
        assert checkTurtleAgreement(outputs.values())

    def test_survives_silent_processors(self):
        system = makeThreshold(7, 2, 3)
        ctx = BftContext(system, [TurtleKind.BFT_LOWERBOUND])
        turtles = dict((p, ctx.turtle(BftLowerBoundTurtle, p)) for p in range(7))
        inputs = dict((p, TurtleInput(1, makeChain('a', str(p % 2)), GENESIS)) for p in range(7))
        outputs = runInstance(turtles, inputs, silent=(5, 6))
        assert set(outputs) >= set(range(5))
        assert checkTurtleAgreement(outputs.values())

    def test_forged_x(self):
        system = makeThreshold(4, 1, 3)
        ctx = BftContext(system, [TurtleKind.BFT_LOWERBOUND])
        certificate = tuple(ctx.signers[p].signChain(1, RoundTag.PROPOSAL, makeChain('a', 'b'))
            for p in range(3))
        x = makeChain('a', 'b', 'z')
        msg = {'chain': x, 'certificate': certificate,
            'sig': ctx.signers[0].signChain(1, RoundTag.ESTIMATE, x).signature}
        assert validateBftLowerboundMessage2(msg, 1, 0, system, ctx.ledger).reason == \
            Reason.RECOMPUTE_MISMATCH
        msg = dict(msg, certificate=certificate[:2])
        assert validateBftLowerboundMessage2(msg, 1, 0, system, ctx.ledger).reason == \
            Reason.NOT_A_QUORUM


class TestMessagePool(object):
    # Any two round 2 chains that validate against the same pool of signed
    # round 1 chains agree, even when faulty processors signed several
    # different chains.

    @pytest.mark.parametrize('n, f', [(4, 1), (5, 1), (6, 1)])
    def test_valid_estimates_agree(self, n, f):
        system = makeThreshold(n, f, 3)
        ctx = BftContext(system, [TurtleKind.BFT_LOWERBOUND])
        faulty = list(range(n - f, n))

        pool = {}
        for p in range(n - f):
            chain = makeChain('a', *(['b'] * (p % 3)))
            pool[p] = [ctx.signers[p].signChain(1, RoundTag.PROPOSAL, chain)]
        for p in faulty:
            pool[p] = [ctx.signers[p].signChain(1, RoundTag.PROPOSAL, c)
                for c in (makeChain('a', 'b', 'b', 'z'), makeChain('c'), BOTTOM)]

        estimates = []
        for quorum in system.minimalQuorums():
            members = sorted(quorum)
            for picks in itertools.product(*(pool[p] for p in members)):
                x = meet(e.chain for e in picks)
                msg = {'chain': x, 'certificate': tuple(picks),
                    'sig': ctx.signers[0].signChain(1, RoundTag.ESTIMATE, x).signature}
                assert validateBftLowerboundMessage2(msg, 1, 0, system, ctx.ledger)
                estimates.append(x)

        for x, other in itertools.combinations(set(estimates), 2):
            assert agrees(x, other)

    @pytest.mark.parametrize('n, f', [(4, 1), (5, 1), (6, 1)])
    def test_valid_estimates_agree_with_correct_inputs(self, n, f):
        # w is the meet of the correct processors' inputs. Faulty processors
        # sign several chains each, and a round 2 message can claim any x;
        # only the ones that validate have to agree with w.
        system = makeThreshold(n, f, 3)
        faulty = list(range(n - f, n))
        family = [makeChain('a'), makeChain('a', 'b'), makeChain('a', 'c')]
        decoys = [BOTTOM, makeChain('a', 'b', 'z'), makeChain('c')]

        for inputs in itertools.product(family, repeat=n - f):
            ctx = BftContext(system, [TurtleKind.BFT_LOWERBOUND])
            w = meet(inputs)
            pool = dict((p, [ctx.signers[p].signChain(1, RoundTag.PROPOSAL, c)])
                for p, c in enumerate(inputs))
            for p in faulty:
                pool[p] = [ctx.signers[p].signChain(1, RoundTag.PROPOSAL, c) for c in decoys]

            for quorum in system.minimalQuorums():
                members = sorted(quorum)
                for picks in itertools.product(*(pool[p] for p in members)):
                    expected = meet(e.chain for e in picks)
                    for x in set([expected] + decoys):
                        msg = {'chain': x, 'certificate': tuple(picks),
                            'sig': ctx.signers[0].signChain(1, RoundTag.ESTIMATE, x).signature}
                        valid = validateBftLowerboundMessage2(msg, 1, 0, system, ctx.ledger)
                        assert bool(valid) == (x == expected)
                        if valid:
                            assert agrees(x, w), (inputs, x)
                    if not quorum.intersection(faulty):
                        assert isPrefix(w, expected)


class TestDecideRule(object):

    class Engine(object):
        def __init__(self, longest):
            self.longestDecided = longest

    def test_only_longer_decisions(self):
        out = BftOutput(2, makeChain('a'), makeChain('a'), TurtleKind.BFT_ONESTEP)
        assert bftDecideRule(self.Engine(BOTTOM), out) == makeChain('a')
        assert bftDecideRule(self.Engine(makeChain('a')), out) is None
        assert bftDecideRule(self.Engine(makeChain('a', 'b')), out) is None
