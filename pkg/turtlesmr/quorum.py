import abc
import itertools

from turtlesmr.errors import CapacityError, ConfigError, UsageError


class QuorumKind(object):
    THRESHOLD = 'threshold'


class QuorumSystem(abc.ABC):
    # A set of processor subsets, any k of which share a processor.
    #
    # Processor ids are dense integers 0..n-1. Only minimal quorums are
    # ever enumerated since every quantity the protocols derive from
    # quorums is extremal on them.

    # Brute force enumeration guard
    MAX_ENUMERATION_N = 12

    ERROR_OUT_OF_RANGE = 'Processor id {} is outside 0..{}'
    ERROR_TOO_LARGE = 'Cannot enumerate quorums of a {} processor system (limit {})'

    def __init__(self, n, f, k):
        self.n = n
        self.f = f
        self.k = k

    @property
    @abc.abstractmethod
    def kind(self):
        return

    @abc.abstractmethod
    def isQuorum(self, s):
        return

    @abc.abstractmethod
    def minimalQuorums(self):
        return

    @abc.abstractmethod
    def minIntersectionSize(self, count):
        return

    def processors(self):
        return range(self.n)

    def checkIds(self, s):
        for p in s:
            if not isinstance(p, int) or p < 0 or p >= self.n:
                raise UsageError(QuorumSystem.ERROR_OUT_OF_RANGE.format(p, self.n - 1))

    def verifyKIntersection(self, k):
        # Brute force check that any k minimal quorums share a processor.
        #
        # Repeating a quorum never shrinks an intersection, so only sets of
        # min(k, #quorums) distinct quorums are tried. The search stops
        # descending once the remaining picks cannot empty the current
        # intersection: a minimal quorum removes at most f processors.

        if self.n > QuorumSystem.MAX_ENUMERATION_N:
            raise CapacityError(QuorumSystem.ERROR_TOO_LARGE.format(
                self.n, QuorumSystem.MAX_ENUMERATION_N))

        masks = [sum(1 << p for p in q) for q in self.minimalQuorums()]
        picks = min(k, len(masks))
        everyone = (1 << self.n) - 1
        return self._searchEmpty(masks, 0, picks, everyone) is None

    def _searchEmpty(self, masks, start, remaining, current):
        # Returns indices of quorums with an empty intersection, or None.

        if remaining == 0:
            return () if current == 0 else None
        if bin(current).count('1') > remaining * self.f:
            return None
        for i in range(start, len(masks) - remaining + 1):
            found = self._searchEmpty(masks, i + 1, remaining - 1, current & masks[i])
            if found is not None:
                return (i,) + found
        return None


class ThresholdQuorumSystem(QuorumSystem):
    # Every set of at least n - f processors is a quorum.

    kind = QuorumKind.THRESHOLD

    def __init__(self, n, f, k):
        super(ThresholdQuorumSystem, self).__init__(n, f, k)
        self.quorumSize = n - f
        self._minimal = None

    def isQuorum(self, s):
        s = set(s)
        self.checkIds(s)
        return len(s) >= self.quorumSize

    def minimalQuorums(self):
        if self._minimal is None:
            self._minimal = [frozenset(q) for q in
                itertools.combinations(range(self.n), self.quorumSize)]
        return self._minimal

    def minIntersectionSize(self, count):
        return max(0, self.n - count * self.f)

    def intersectionSubsets(self, q, count):
        # All sets Q ∩ Q2 ∩ ... ∩ Q_count with Q fixed and the others minimal
        # quorums, restricted to the smallest ones. Each further minimal
        # quorum drops at most f members of q, and any f members can be
        # dropped, so these are the subsets of q of size |q| - (count-1)·f.

        members = sorted(q)
        size = max(1, len(members) - (count - 1) * self.f)
        return [frozenset(s) for s in itertools.combinations(members, size)]

    def __repr__(self):
        return 'ThresholdQuorumSystem(n={}, f={}, k={})'.format(self.n, self.f, self.k)


def makeThreshold(n, f, k):
    # Threshold construction: quorums are the sets of size >= n - f. Any k
    # of them intersect iff n > k·f.

    if not all(isinstance(v, int) for v in (n, f, k)):
        raise ConfigError('n, f and k must be integers')
    if f < 0:
        raise ConfigError('f must be >= 0, got {}'.format(f))
    if k < 1:
        raise ConfigError('k must be >= 1, got {}'.format(k))
    if n <= k * f:
        raise ConfigError('threshold quorums need n > k·f, got n={} k={} f={}'.format(n, k, f))
    return ThresholdQuorumSystem(n, f, k)


def correctQuorum(system, correct):
    # Picks the all-correct quorum Q*: the n - f lowest correct ids.
    #
    # Returns None when the correct set is too small, which only happens
    # in runs that deliberately violate the fault model.

    correct = sorted(correct)
    system.checkIds(correct)
    if len(correct) < system.n - system.f:
        return None
    return frozenset(correct[:system.n - system.f])
