class ExitCode(object):
    # Exit codes of the command line tools. These are stable so CI jobs
    # can branch on them.

    OK = 0
    VIOLATION = 1
    CONFIG = 2
    INTERNAL = 3


class TurtleError(Exception):
    # Base class for every error raised by the package.

    exitCode = ExitCode.INTERNAL


class UsageError(TurtleError, ValueError):
    # A function was called outside of its contract, e.g. the meet of
    # an empty set or starting a turtle twice.
    pass


class AgreementError(TurtleError, ValueError):
    # Raised by max/min over chains that do not agree. Keeps the
    # offending pair around for counterexample reporting.

    ERROR_NOT_AGREEING = 'Chains do not agree: {} and {}'

    def __init__(self, first, second):
        self.first = first
        self.second = second
        super(AgreementError, self).__init__(
            AgreementError.ERROR_NOT_AGREEING.format(first, second))


class ConfigError(TurtleError, ValueError):
    exitCode = ExitCode.CONFIG


class CapacityError(TurtleError):
    # Brute force enumeration was asked for a system that is too large.
    pass


class EngineError(TurtleError):
    # The SMR engine received an output for the wrong turtle instance.
    pass


class InvariantError(TurtleError):
    # An internal invariant that the protocol guarantees under its model
    # assumptions did not hold.
    pass


class MalformedPayload(TurtleError, ValueError):
    pass


class DeferDecode(TurtleError):
    # A relative chain refers to more decided commands than the receiver
    # knows about yet.

    def __init__(self, baseLength, knownLength):
        self.baseLength = baseLength
        self.knownLength = knownLength
        super(DeferDecode, self).__init__(
            'Need {} known commands, have {}'.format(baseLength, knownLength))


class TraceParseError(TurtleError, ValueError):
    exitCode = ExitCode.CONFIG

    ERROR_LINE = 'Malformed trace at line {}: {}'

    def __init__(self, lineNumber, msg):
        self.lineNumber = lineNumber
        super(TraceParseError, self).__init__(TraceParseError.ERROR_LINE.format(lineNumber, msg))
