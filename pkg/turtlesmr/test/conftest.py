import collections
import os.path

import pytest
from hypothesis import HealthCheck, settings
from hypothesis.strategies import composite, integers, lists, sampled_from

from turtlesmr.bft import SignatureLedger
from turtlesmr.chain import Chain, Command
from turtlesmr.config import ScenarioConfig
from turtlesmr.smr import TurtleSchedule
from turtlesmr.turtle import Broadcast, ProduceOutput


FIXTURE_DIR = os.path.join(os.path.dirname(os.path.dirname(__file__)), 'fixtures')

settings.register_profile('turtlesmr', max_examples=300, deadline=None,
    suppress_health_check=[HealthCheck.too_slow])
settings.load_profile('turtlesmr')


def makeChain(*ids):
    return Chain(Command(i) for i in ids)


def makeScenario(**data):
    return ScenarioConfig(data)


def fixturePath(name):
    return os.path.join(FIXTURE_DIR, name + '.jsonl')


class BftContext(object):
    # Ledger, schedule and signers shared by the processors of one BFT test.

    def __init__(self, system, kinds):
        self.system = system
        self.ledger = SignatureLedger()
        self.schedule = TurtleSchedule([(kind, 1) for kind in kinds])
        self.signers = dict((p, self.ledger.signerFor(p)) for p in system.processors())

    def turtle(self, turtleClass, proc):
        return turtleClass(proc, self.system, signer=self.signers[proc], ledger=self.ledger,
            schedule=self.schedule)


def runInstance(turtles, inputs, silent=()):
    # Starts every turtle and delivers every broadcast to everyone in FIFO
    # order, without any network. Returns outputs keyed by processor.

    queue = collections.deque()
    outputs = {}

    def apply(proc, actions):
        for action in actions:
            if isinstance(action, Broadcast) and proc not in silent:
                queue.append((proc, action.roundTag, action.msg))
            elif isinstance(action, ProduceOutput):
                outputs[proc] = action.output

    for proc in sorted(inputs):
        apply(proc, turtles[proc].start(inputs[proc]))
    while queue:
        sender, roundTag, msg = queue.popleft()
        for proc in sorted(turtles):
            if turtles[proc].started:
                apply(proc, turtles[proc].onMessage(sender, roundTag, msg))
    return outputs


@pytest.fixture
def chain():
    return makeChain


def chains(maxLength=32, alphabet=3):
    # Small alphabet so drawn chains share prefixes often
    return lists(integers(0, alphabet - 1), max_size=maxLength).map(
        lambda values: makeChain(*('c{}'.format(v) for v in values)))


@composite
def receivedChains(draw, system, maxLength=8):
    # A quorum Q_p of system with a drawn chain for every member.
    quorum = draw(sampled_from(system.minimalQuorums()))
    return dict((s, draw(chains(maxLength))) for s in sorted(quorum))
