"""Exception hierarchy shared by all engines."""


class CpgclError(Exception):
    """Base class for every error raised by this package."""


class ParseError(CpgclError):
    """Malformed program or expectation text, located at ``line``:``col``."""

    def __init__(self, message, line=0, col=0):
        self.message = message
        self.line = line
        self.col = col
        super().__init__(f"{line}:{col}: {message}")


class ValidationError(CpgclError):
    """A program failed static validation; ``violations`` lists every problem."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(str(v) for v in self.violations))


class EvaluationError(CpgclError):
    pass


class NegativeExpectation(EvaluationError):
    def __init__(self, state, value):
        self.state = state
        self.value = value
        super().__init__(f"expectation evaluates to {value} < 0 at {dict(state)}")


class BoundExceeded(EvaluationError):
    def __init__(self, value, bound, where=""):
        self.value = value
        self.bound = bound
        super().__init__(f"value {value} exceeds bound {bound}{' at ' + where if where else ''}")


class UninstantiatedParameter(CpgclError):
    def __init__(self, name):
        self.name = name
        super().__init__(f"parameter {name!r} must be instantiated first")


class QuotientProbabilityUnsupported(CpgclError):
    """State-dependent probabilities cannot be handled by the symbolic transformer."""


class NondeterminismUnsupported(CpgclError):
    def __init__(self, what="conditional pre-expectation"):
        super().__init__(
            f"{what} is undefined for nondeterministic programs: positional schedulers "
            "do not determine the conditional expected reward; use the operational "
            "engine with scheduler enumeration instead"
        )


class NonConvergent(CpgclError):
    """No fixpoint was found within the unrolling budget and no bound was supplied."""


class Infeasible(CpgclError):
    def __init__(self, state):
        self.state = state
        super().__init__(f"program is infeasible from {dict(state)}")


class LoopFixpointNotFound(CpgclError):
    def __init__(self, loop, iterations):
        self.loop = loop
        self.iterations = iterations
        super().__init__(f"no fixpoint for loop 'while ({loop.guard})' after {iterations} iterations")


class NotIid(CpgclError):
    def __init__(self, culprit, reason):
        self.culprit = culprit
        self.reason = reason
        super().__init__(f"NotIid({culprit}): {reason}")


class FormatError(CpgclError):
    def __init__(self, message, line=0):
        self.line = line
        super().__init__(f"line {line}: {message}")


class InvariantError(CpgclError):
    pass


class CyclicNondeterminism(CpgclError):
    pass


class BudgetExceeded(CpgclError):
    pass
