import numpy as np

from turtlesmr.node import SmrNode
from turtlesmr.util import loadClassDictFromPkg


# Byzantine processors.
#
# A strategy is a node class with a `strategy` name. Strategies run the
# normal protocol and change what they send, which keeps them in step with
# the instance sequence. They only hold their own signer, so all they can
# do with other processors' signatures is replay them.
#
# Strategy modules in this package are discovered at runtime.


class AdversaryNode(SmrNode):
    # Base class of all strategies. This class should be considered
    # abstract.

    strategy = None

    def onInit(self):
        super(AdversaryNode, self).onInit()
        self.rng = np.random.default_rng([self.data.scenario.seed, self.proc])
        # outputs[i] is the output of instance i, outputs[0] the genesis
        self.outputs = [self.engine.lastOutput]

    def onOutput(self, out):
        self.outputs.append(out)
        super(AdversaryNode, self).onOutput(out)

    def otherProcessors(self):
        return [p for p in self.system.processors() if p != self.proc]


def getStrategies():
    # Loads all adversary strategies into a dictionary keyed by name.

    return loadClassDictFromPkg(__name__, __file__, AdversaryNode, 'strategy')
