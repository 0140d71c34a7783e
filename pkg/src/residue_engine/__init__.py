"""Exact fixed-point localization for intersection pairings on symplectic quotients."""
from .errors import (
    DimensionError,
    EngineError,
    HalfSpaceError,
    InsufficientTruncationError,
    NonAdmissibleError,
    NonGenericError,
    NonSpanningError,
    ParseError,
    PiLedgerError,
    RegularityError,
    WallError,
)
from .exact_algebra import I, ONE, PI, ZERO, LinearForm, MultiPoly, Scalar, parse_polynomial, parse_scalar

__version__ = "0.1.0"

__all__ = [
    "DimensionError",
    "EngineError",
    "HalfSpaceError",
    "InsufficientTruncationError",
    "NonAdmissibleError",
    "NonGenericError",
    "NonSpanningError",
    "ParseError",
    "PiLedgerError",
    "RegularityError",
    "WallError",
    "I",
    "ONE",
    "PI",
    "ZERO",
    "LinearForm",
    "MultiPoly",
    "Scalar",
    "parse_polynomial",
    "parse_scalar",
]
