"""Exception hierarchy.

Every mathematical precondition failure gets its own class so callers (and the
CLI exit-code mapping) can tell a bad model from a bad cone or a typo.
"""


class EngineError(Exception):
    """Base class for all engine errors."""


class ParseError(EngineError, ValueError):
    """Malformed polynomial, scalar, vector or model text."""


class DimensionError(EngineError, ValueError):
    """Objects of incompatible torus rank were combined."""


class PiLedgerError(EngineError, ArithmeticError):
    """Addition of scalars carrying different powers of pi."""


class InsufficientTruncationError(EngineError, ValueError):
    """A Laurent coefficient was requested beyond the known precision."""


class RegularityError(EngineError, ValueError):
    """0 is not a regular value (or an equivalent model-level violation)."""


class NonAdmissibleError(EngineError, ValueError):
    """A denominator form changes sign on the interior of the chosen cone."""


class NonGenericError(EngineError, ValueError):
    """A half-plane or chamber decision stayed ambiguous after ray perturbation."""


class NonSpanningError(EngineError, ValueError):
    """The weights do not span the dual Lie algebra."""


class HalfSpaceError(EngineError, ValueError):
    """The weights are not contained in an open half-space."""


class WallError(EngineError, ValueError):
    """Evaluation requested on a wall where adjacent pieces disagree."""
