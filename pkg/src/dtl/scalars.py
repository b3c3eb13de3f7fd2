"""Scalar values in two modes: exact rationals and binary64 floats.

Exact mode is the default for rational input and is closed under field
operations; every container in this package carries an ``exact`` flag derived
from its entries.  The two modes never mix silently: combining them raises
:class:`~dtl.errors.ExactnessError` unless the caller converts explicitly.
"""

from __future__ import annotations

import math
from fractions import Fraction

from .errors import DomainError, ExactnessError, FloatingAmbiguous

Scalar = Fraction | float

#: float-mode magnitudes below ZERO_TOL * scale are treated as zero
ZERO_TOL = 1e-9
#: magnitudes in [ZERO_TOL, AMBIGUOUS_TOL) * scale are refused as undecidable
AMBIGUOUS_TOL = 1e-6


def is_exact_value(x) -> bool:
    return isinstance(x, (Fraction, int)) and not isinstance(x, bool)


def check_real(x):
    if isinstance(x, complex):
        raise ExactnessError("complex values are not supported")
    return x


def parse_scalar(raw) -> Scalar:
    """Parse ``"p/q"`` strings, ints (exact) or floats (binary64)."""
    check_real(raw)
    if isinstance(raw, str):
        return Fraction(raw)
    if is_exact_value(raw):
        return Fraction(raw)
    if isinstance(raw, float):
        return raw
    raise ExactnessError(f"cannot interpret {raw!r} as a scalar")


def format_scalar(x):
    """JSON form: exact values as ``"p/q"`` strings, floats as-is."""
    if is_exact_value(x):
        return str(Fraction(x))
    return float(x)


def to_float(x) -> float:
    return float(x)


def common_mode(values) -> bool:
    """Return True (exact) / False (float); raise on a mix."""
    saw_exact = saw_float = False
    for v in values:
        if is_exact_value(v):
            saw_exact = True
        elif isinstance(v, float):
            saw_float = True
        else:
            raise ExactnessError(f"unsupported scalar {v!r}")
    if saw_exact and saw_float:
        raise ExactnessError("exact and floating values mixed in one container")
    return not saw_float


def vanishes(magnitude, exact: bool, scale=1.0) -> bool:
    """Decide whether a (nonnegative) magnitude is zero.

    Exact mode compares against zero.  Float mode applies the shared
    tolerance, raising :class:`FloatingAmbiguous` inside the undecidable band.
    """
    if exact:
        return magnitude == 0
    m = abs(magnitude)
    s = max(abs(scale), 1.0)
    if m <= ZERO_TOL * s:
        return True
    if m < AMBIGUOUS_TOL * s:
        raise FloatingAmbiguous(
            f"magnitude {m:.3e} inside tolerance band [{ZERO_TOL:.0e}, {AMBIGUOUS_TOL:.0e}) * {s:.3e}"
        )
    return False


def exact_sqrt(x: Fraction):
    """Square root of a nonnegative rational: (root, True) when rational."""
    if x < 0:
        raise DomainError("square root of a negative rational")
    num, den = x.numerator, x.denominator
    rn, rd = math.isqrt(num), math.isqrt(den)
    if rn * rn == num and rd * rd == den:
        return Fraction(rn, rd), True
    return math.sqrt(num / den), False
