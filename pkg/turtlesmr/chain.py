import hashlib

from dataclasses import dataclass

from turtlesmr.errors import AgreementError, UsageError


# Chains are finite sequences of commands. Under the prefix order they
# form a meet-semilattice: the empty chain is the bottom element and the
# meet of a set of chains is their longest common prefix.
#
# Everything in this module is a pure function over immutable values.


@dataclass(frozen=True)
class Command(object):
    # A single state machine command.
    #
    # The id is "<issuer>.<seq>" so that two commands with the same
    # payload issued twice are still different commands.

    id: str
    payload: bytes = b''

    def __repr__(self):
        return self.id


class Chain(object):
    # Immutable sequence of commands.
    #
    # Slicing returns a Chain, so chain[:n] is the length n prefix.

    __slots__ = ('commands', '_digest')

    def __init__(self, commands=()):
        self.commands = tuple(commands)
        self._digest = None

    def __len__(self):
        return len(self.commands)

    def __iter__(self):
        return iter(self.commands)

    def __getitem__(self, key):
        if isinstance(key, slice):
            return Chain(self.commands[key])
        return self.commands[key]

    def __eq__(self, other):
        return isinstance(other, Chain) and self.commands == other.commands

    def __ne__(self, other):
        return not self.__eq__(other)

    def __hash__(self):
        return hash(self.commands)

    def __repr__(self):
        return formatChain(self)

    def extend(self, commands):
        return Chain(self.commands + tuple(commands))

    def ids(self):
        return [command.id for command in self.commands]

    def digest(self):
        # SHA-256 over ids and payloads. Cached since chains never change.

        if self._digest is None:
            h = hashlib.sha256()
            for command in self.commands:
                h.update(command.id.encode('utf-8'))
                h.update(b'\0')
                h.update(command.payload)
                h.update(b'\1')
            self._digest = h.hexdigest()
        return self._digest


BOTTOM = Chain()


def isPrefix(c, c2):
    # True iff c is an initial segment of c2.

    size = len(c)
    return size <= len(c2) and c2.commands[:size] == c.commands


def agrees(c, c2):
    return isPrefix(c, c2) or isPrefix(c2, c)


def commonPrefixLength(c, c2):
    size = min(len(c), len(c2))
    first = c.commands
    second = c2.commands
    i = 0
    while i < size and first[i] == second[i]:
        i += 1
    return i


def meet(chains):
    # Longest common prefix of a nonempty collection of chains.

    chains = list(chains)
    if not chains:
        raise UsageError('meet of an empty set of chains')

    first = chains[0]
    size = len(first)
    for other in chains[1:]:
        if size == 0:
            break
        size = min(size, commonPrefixLength(first, other))
    if size == len(first):
        return first
    return first[:size]


def _sortedAgreeing(chains):
    # Sorts by length and verifies that consecutive chains are prefixes of
    # each other, which is enough for the whole set to be totally ordered.

    ordered = sorted(chains, key=len)
    if not ordered:
        raise UsageError('max/min of an empty set of chains')
    for shorter, longer in zip(ordered, ordered[1:]):
        if not isPrefix(shorter, longer):
            raise AgreementError(shorter, longer)
    return ordered


def maxAgreeing(chains):
    # The unique longest chain of a set of pairwise agreeing chains.

    return _sortedAgreeing(chains)[-1]


def minAgreeing(chains):
    return _sortedAgreeing(chains)[0]


def renderChain(c):
    # Canonical trace form: the list of command ids. Bottom is [].

    return c.ids()


def formatChain(c):
    return '[{}]'.format(', '.join(c.ids()))


def parseChain(ids):
    # Rebuilds a chain from its rendered form. Payloads are not part of the
    # rendering, so parsed chains only compare equal to other parsed chains.

    if not isinstance(ids, list) or not all(isinstance(i, str) for i in ids):
        raise UsageError('rendered chain must be a list of command ids')
    return Chain(Command(i) for i in ids)
