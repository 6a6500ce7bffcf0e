import logging

from dataclasses import dataclass

from turtlesmr.chain import Chain, isPrefix
from turtlesmr.errors import UsageError
from turtlesmr.turtle import TurtleInput


# Rotating leader wrapper
#
# Before instance i starts, its leader i mod n broadcasts its own input.
# Everyone waits for that chain or for a timer that doubles from one
# instance to the next, whichever comes first. A follower that gets the
# leader's chain in time uses it as its input, so after GST timers
# eventually outgrow message delays and whole instances become unanimous.


# 2^62 keeps timers well inside a 64 bit integer
MAX_TIMER_EXPONENT = 62


@dataclass(frozen=True)
class LeaderConfig(object):
    enabled: bool = False
    initialTimer: int = 10

    @classmethod
    def fromScenario(cls, scenario):
        return cls(bool(scenario.leader['enabled']), scenario.leader['initialTimer'])

    def timerFor(self, instance):
        return timerFor(instance, self.initialTimer)


def leaderFor(instance, n):
    if instance < 1:
        raise UsageError('Instance numbers start at 1, got {}'.format(instance))
    return instance % n


def timerFor(instance, initialTimer):
    # T0 · 2^(i-1)
    return initialTimer * 2 ** min(instance - 1, MAX_TIMER_EXPONENT)


class LeaderPhase(object):
    # Leader phase of one processor in one instance.
    #
    # ownInput is what the processor would propose on its own; required is
    # the upper bound of its previous output, which an adopted chain must
    # extend like any other input.

    def __init__(self, instance, ownInput, required):
        self.instance = instance
        self.ownInput = ownInput
        self.required = required
        self.awaiting = True
        self.adopted = None

    def __repr__(self):
        return 'LeaderPhase({}, awaiting={})'.format(self.instance, self.awaiting)


@dataclass(frozen=True)
class LeaderMessage(object):
    chain: Chain


@dataclass(frozen=True)
class TimerExpired(object):
    pass


LOG_REJECT = 'Instance %s: leader chain %s does not extend %s, keeping own input'


def onLeaderMessageOrTimeout(state, event):
    # Ends the leader phase and returns the input for the wrapped turtle.
    # Returns None when the phase is already over; late events change
    # nothing.

    if not state.awaiting:
        return None
    state.awaiting = False

    if isinstance(event, LeaderMessage):
        if isPrefix(state.required, event.chain):
            state.adopted = event.chain
            return TurtleInput(state.instance, event.chain, state.ownInput.evidence)
        logging.debug(LOG_REJECT, state.instance, event.chain, state.required)
    return state.ownInput
