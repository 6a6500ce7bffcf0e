from turtlesmr.adversary import AdversaryNode


class SilentNode(AdversaryNode):
    # Never sends anything. Indistinguishable from a crash at time 0.

    strategy = 'silent'

    def onStart(self):
        self.logInfo('Staying silent')

    def onRead(self, envelope):
        return

    def onTimer(self, key):
        return
