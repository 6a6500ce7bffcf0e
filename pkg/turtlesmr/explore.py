import copy
import itertools
import logging

from turtlesmr.checker import checkTurtleAgreement, checkTurtleTermination
from turtlesmr.errors import CapacityError, InvariantError
from turtlesmr.quorum import QuorumSystem
from turtlesmr.turtle import Broadcast, ProduceOutput, RoundTag


# Exhaustive exploration of turtle schedules.
#
# The crash tolerant turtles only observe which n - f messages of each
# round a processor receives first. So instead of enumerating delivery
# orders, every round every receiving processor picks a quorum of the
# round's senders, and every combination of picks is one schedule. Two
# schedules that give every processor the same quorums are the same
# schedule to the turtles.
#
# A crash is "processor p takes part in its first r rounds, then stops":
# it broadcasts and receives rounds 1..r. r = 0 means p never sends
# anything; r = rounds lets p output before it stops. Outputs of crashed
# processors still have to agree, only correct processors have to output.


class ExploreOutcome(object):
    # choices is a tuple of (round, receiver, senders) picks; outputs holds
    # every processor's output, crashed ones included.

    def __init__(self, choices, outputs, correct, error=None):
        self.choices = choices
        self.outputs = outputs
        self.correct = frozenset(correct)
        self.error = error

    @property
    def terminated(self):
        return checkTurtleTermination(self.correct, self.outputs, self.correct)

    @property
    def violation(self):
        if self.error is not None or not self.terminated:
            return True
        return not checkTurtleAgreement(self.outputs.values())

    def __repr__(self):
        return 'ExploreOutcome({}, error={})'.format(self.outputs, self.error)


class QuorumScheduleExplorer(object):
    # factory(proc) returns a fresh turtle for processor proc; inputs maps
    # every processor to its TurtleInput.

    ROUND_TAGS = {RoundTag.PROPOSAL: 1, RoundTag.ESTIMATE: 2}

    # Number of schedules one exploration may visit
    MAX_SCHEDULES = 1000000

    LOG_DONE = 'Explored {} schedules, {} violations'

    def __init__(self, system, factory, inputs, crashes=None):
        if system.n > QuorumSystem.MAX_ENUMERATION_N:
            raise CapacityError(QuorumSystem.ERROR_TOO_LARGE.format(
                system.n, QuorumSystem.MAX_ENUMERATION_N))
        self.system = system
        self.factory = factory
        self.inputs = inputs
        self.crashes = crashes or {}
        self.correct = frozenset(p for p in inputs if p not in self.crashes)
        self.quorumSize = system.n - system.f
        self.visited = 0

    def sends(self, proc, roundNumber):
        return proc not in self.crashes or roundNumber <= self.crashes[proc]

    def receives(self, proc, roundNumber):
        return proc not in self.crashes or roundNumber <= self.crashes[proc]

    def explore(self):
        # Yields one ExploreOutcome per schedule.

        turtles = {}
        messages = {}
        outputs = {}
        rounds = None
        for proc in sorted(self.inputs):
            if not self.sends(proc, 1):
                continue
            turtle = self.factory(proc)
            rounds = turtle.rounds
            turtles[proc] = turtle
            self.collect(proc, turtle.start(self.inputs[proc]), messages, outputs)

        for outcome in self.exploreRound(1, rounds, turtles, messages, outputs, ()):
            yield outcome

    def exploreRound(self, roundNumber, rounds, turtles, messages, outputs, choices):
        if roundNumber > rounds:
            self.visited += 1
            if self.visited > QuorumScheduleExplorer.MAX_SCHEDULES:
                raise CapacityError('More than {} schedules'.format(
                    QuorumScheduleExplorer.MAX_SCHEDULES))
            yield ExploreOutcome(choices, outputs, self.correct)
            return

        sent = messages.get(roundNumber, {})
        senders = sorted(p for p in sent if self.sends(p, roundNumber))
        receivers = sorted(p for p, t in turtles.items()
            if self.receives(p, roundNumber) and not t.done)
        if len(senders) < self.quorumSize:
            options = [()]
        else:
            options = list(itertools.combinations(senders, self.quorumSize))

        for picks in itertools.product(options, repeat=len(receivers)):
            state = copy.deepcopy((turtles, messages, outputs), {id(self.system): self.system})
            branchTurtles, branchMessages, branchOutputs = state
            picked = choices + tuple(
                (roundNumber, r, quorum) for r, quorum in zip(receivers, picks))
            try:
                for receiver, quorum in zip(receivers, picks):
                    turtle = branchTurtles[receiver]
                    for sender in quorum:
                        actions = turtle.onMessage(sender, self.roundTag(roundNumber),
                            sent[sender])
                        self.collect(receiver, actions, branchMessages, branchOutputs)
            except InvariantError as e:
                self.visited += 1
                yield ExploreOutcome(picked, branchOutputs, self.correct, str(e))
                continue
            for outcome in self.exploreRound(roundNumber + 1, rounds, branchTurtles,
                    branchMessages, branchOutputs, picked):
                yield outcome

    def roundTag(self, roundNumber):
        for tag, number in QuorumScheduleExplorer.ROUND_TAGS.items():
            if number == roundNumber:
                return tag

    def collect(self, proc, actions, messages, outputs):
        for action in actions:
            if isinstance(action, Broadcast):
                roundNumber = QuorumScheduleExplorer.ROUND_TAGS[action.roundTag]
                messages.setdefault(roundNumber, {})[proc] = action.msg
            elif isinstance(action, ProduceOutput):
                outputs[proc] = action.output

    def violations(self):
        found = [outcome for outcome in self.explore() if outcome.violation]
        logging.info(QuorumScheduleExplorer.LOG_DONE.format(self.visited, len(found)))
        return found
