"""Exception hierarchy shared across the library."""


class HoloballError(Exception):
    """Base class for all library-specific errors."""


class DomainError(HoloballError):
    """A point or parameter lies outside the domain an operation requires."""


class SingularPointError(HoloballError):
    """A projective map was evaluated where its denominator vanishes."""


class SingularPairError(DomainError):
    """A pair (z, w) is too close to the diagonal for a Green differential."""


class EvaluationError(HoloballError):
    """A field evaluation hit (or came too close to) a pole."""


class ConsistencyError(HoloballError):
    """A quantity that must be constant over a validation grid was not."""


class ParseError(HoloballError):
    """Syntax or semantic error in a field expression.

    Carries the zero-based position of the offending token in ``position``.
    """

    def __init__(self, message, position=None):
        super().__init__(message if position is None else f"{message} (at position {position})")
        self.position = position


class HolomorphyError(ParseError):
    """The expression conjugates a variable, which is not holomorphic."""


class FlowBlowUpError(HoloballError):
    """The integrator collapsed; the field looks non-semicomplete.

    ``t_escape`` is the time at which stepping broke down.
    """

    def __init__(self, message, t_escape):
        super().__init__(f"{message} (t ~ {t_escape:.6g})")
        self.t_escape = t_escape


class NoConvergenceError(HoloballError):
    """Newton continuation failed to converge."""


class RootSelectionError(HoloballError):
    """A nonlinear solve converged to a root outside the open ball."""


class PreconditionError(HoloballError):
    """An operation was invoked on inputs that violate its contract."""
