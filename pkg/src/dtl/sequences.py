"""Sequences on the integer lattice with explicit polynomial tails.

A :class:`PolyTailSequence` stores a finite core window ``[lo, hi]`` together
with polynomials ``left`` / ``right`` describing the values for ``n <= lo``
and ``n >= hi``.  The window boundaries are covered by both the core and the
tails, and the two descriptions must agree there (overlap consistency), which
keeps every operation checkable.  Compactly supported sequences are the
special case of zero tails.
"""

from __future__ import annotations

from fractions import Fraction

from .errors import ExactnessError, NonSummable
from .scalars import common_mode, format_scalar, parse_scalar, check_real

# ---------------------------------------------------------------------------
# dense polynomials, ascending coefficients, normalized (no trailing zeros)


def poly_normalize(coeffs):
    c = list(coeffs)
    while c and c[-1] == 0:
        c.pop()
    return tuple(c)


def poly_eval(p, n):
    acc = 0
    for c in reversed(p):
        acc = acc * n + c
    return acc


def poly_add(p, q):
    out = [0] * max(len(p), len(q))
    for i, c in enumerate(p):
        out[i] = out[i] + c
    for i, c in enumerate(q):
        out[i] = out[i] + c
    return poly_normalize(out)


def poly_scale(p, c):
    if c == 0:
        return ()
    return poly_normalize([c * x for x in p])


def poly_mul(p, q):
    if not p or not q:
        return ()
    out = [0] * (len(p) + len(q) - 1)
    for i, a in enumerate(p):
        for j, b in enumerate(q):
            out[i + j] += a * b
    return poly_normalize(out)


def poly_compose_affine(p, a, b):
    """Coefficients of n -> p(a*n + b)."""
    result = ()
    power = (1,)  # (a n + b)^i
    lin = poly_normalize((b, a))
    for c in p:
        result = poly_add(result, poly_scale(power, c))
        power = poly_mul(power, lin)
    return result


def poly_degree(p):
    return len(p) - 1 if p else -1


# ---------------------------------------------------------------------------


class CompactSequence:
    """Finitely supported sequence; zeros are normalized away."""

    __slots__ = ("values", "exact")

    def __init__(self, values):
        vals = {}
        for n, v in values.items():
            check_real(v)
            if not isinstance(n, int):
                raise TypeError(f"site {n!r} is not an integer")
            if v != 0:
                vals[n] = v
        self.values = vals
        self.exact = common_mode(vals.values())

    @classmethod
    def from_raw(cls, mapping):
        return cls({int(k): parse_scalar(v) for k, v in mapping.items()})

    def __getitem__(self, n):
        zero = Fraction(0) if self.exact else 0.0
        return self.values.get(n, zero)

    def items(self):
        return self.values.items()

    def support(self):
        return sorted(self.values)

    @property
    def is_zero(self):
        return not self.values

    def min_site(self):
        return min(self.values)

    def max_site(self):
        return max(self.values)

    def scaled(self, c):
        return CompactSequence({n: c * v for n, v in self.values.items()})

    def __add__(self, other):
        vals = dict(self.values)
        for n, v in other.values.items():
            vals[n] = vals.get(n, 0) + v
        return CompactSequence(vals)

    def __sub__(self, other):
        return self + other.scaled(-1)

    def __eq__(self, other):
        if not isinstance(other, CompactSequence):
            return NotImplemented
        return self.values == other.values

    def __hash__(self):
        return hash(frozenset(self.values.items()))

    def __repr__(self):
        return f"CompactSequence({self.values!r})"

    def alternating(self):
        """Entrywise multiplication by (-1)^n."""
        return CompactSequence({n: -v if n % 2 else v for n, v in self.values.items()})

    def as_float(self):
        return CompactSequence({n: float(v) for n, v in self.values.items()})

    def to_poly_tail(self):
        if self.is_zero:
            return PolyTailSequence({}, 0, 0, (), ())
        lo, hi = self.min_site() - 1, self.max_site() + 1
        return PolyTailSequence(dict(self.values), lo, hi, (), ())

    def to_json(self):
        return {str(n): format_scalar(v) for n, v in sorted(self.values.items())}


class PolyTailSequence:
    """Sequence given by a finite core plus polynomial left/right tails.

    ``left`` describes ``x[n]`` for ``n <= lo`` and ``right`` for ``n >= hi``.
    The core dict may omit zero values inside the window.
    """

    __slots__ = ("core", "lo", "hi", "left", "right", "exact")

    def __init__(self, core, lo, hi, left, right):
        if lo > hi:
            raise ValueError(f"empty window [{lo}, {hi}]")
        left = poly_normalize(left)
        right = poly_normalize(right)
        cleaned = {}
        for n, v in core.items():
            check_real(v)
            if n < lo or n > hi:
                raise ValueError(f"core site {n} outside window [{lo}, {hi}]")
            if v != 0:
                cleaned[n] = v
        self.core = cleaned
        self.lo, self.hi = lo, hi
        self.left, self.right = left, right
        self.exact = common_mode(list(cleaned.values()) + list(left) + list(right))
        for site, tail in ((lo, left), (hi, right)):
            got, want = cleaned.get(site, 0), poly_eval(tail, site)
            if self.exact:
                ok = got == want
            else:
                ok = abs(got - want) <= 1e-9 * max(1.0, abs(got), abs(want))
            if not ok:
                raise ValueError(f"overlap violated at n={site}: {got} vs {want}")

    # -- construction helpers

    @classmethod
    def zero(cls, exact=True):
        if exact:
            return cls({}, 0, 0, (), ())
        return cls({0: 0.0}, 0, 0, (0.0,), (0.0,))

    @classmethod
    def compact(cls, values):
        return CompactSequence(values).to_poly_tail()

    # -- basic queries

    def __getitem__(self, n):
        if n < self.lo:
            return poly_eval(self.left, n)
        if n > self.hi:
            return poly_eval(self.right, n)
        v = self.core.get(n)
        if v is None:
            return Fraction(0) if self.exact else 0.0
        return v

    @property
    def is_compact(self):
        return not self.left and not self.right

    @property
    def is_zero(self):
        return self.is_compact and not self.core

    def tail_degrees(self):
        return poly_degree(self.left), poly_degree(self.right)

    def max_tail_degree(self):
        return max(self.tail_degrees())

    def compact_values(self):
        """Support map; only valid for zero-tail sequences."""
        if not self.is_compact:
            raise NonSummable("sequence has nonzero tails")
        return CompactSequence(dict(self.core))

    def __repr__(self):
        window = {n: self[n] for n in range(self.lo, self.hi + 1)}
        return (f"PolyTailSequence(core={window!r}, left={self.left!r}, "
                f"right={self.right!r})")

    # -- arithmetic

    def widened(self, lo, hi):
        lo, hi = min(lo, self.lo), max(hi, self.hi)
        core = {n: self[n] for n in range(lo, hi + 1)}
        return PolyTailSequence(core, lo, hi, self.left, self.right)

    def scaled(self, c):
        check_real(c)
        core = {n: c * v for n, v in self.core.items()}
        return PolyTailSequence(core, self.lo, self.hi, poly_scale(self.left, c),
                                poly_scale(self.right, c))

    def __add__(self, other):
        if not isinstance(other, PolyTailSequence):
            return NotImplemented
        if self.exact != other.exact and not (self.is_zero or other.is_zero):
            raise ExactnessError("adding exact and floating sequences")
        lo, hi = min(self.lo, other.lo), max(self.hi, other.hi)
        core = {n: self[n] + other[n] for n in range(lo, hi + 1)}
        return PolyTailSequence(core, lo, hi, poly_add(self.left, other.left),
                                poly_add(self.right, other.right))

    def __sub__(self, other):
        return self + other.scaled(-1)

    def __eq__(self, other):
        """Semantic equality: same sequence, regardless of window."""
        if not isinstance(other, PolyTailSequence):
            return NotImplemented
        if self.left != other.left or self.right != other.right:
            return False
        lo, hi = min(self.lo, other.lo), max(self.hi, other.hi)
        return all(self[n] == other[n] for n in range(lo, hi + 1))

    def __hash__(self):
        raise TypeError("PolyTailSequence is not hashable")

    def as_float(self):
        core = {n: float(v) for n, v in self.core.items()}
        return PolyTailSequence(core, self.lo, self.hi,
                                tuple(float(c) for c in self.left),
                                tuple(float(c) for c in self.right))

    def max_abs(self, margin=2):
        span = range(self.lo - margin, self.hi + margin + 1)
        return max((abs(self[n]) for n in span), default=0)

    # -- serialization

    def to_json(self):
        core = {str(n): format_scalar(self[n]) for n in range(self.lo, self.hi + 1)}
        return {
            "core": core,
            "left_tail": [format_scalar(c) for c in self.left],
            "right_tail": [format_scalar(c) for c in self.right],
        }

    @classmethod
    def from_json(cls, data):
        core = {int(k): parse_scalar(v) for k, v in data["core"].items()}
        lo, hi = min(core), max(core)
        left = tuple(parse_scalar(c) for c in data.get("left_tail", []))
        right = tuple(parse_scalar(c) for c in data.get("right_tail", []))
        return cls(core, lo, hi, left, right)


# ---------------------------------------------------------------------------
# named sequences and the lattice operators


def special_sequence(kind, k=0):
    """The named sequences: all-ones, sign, identity, absolute value, unit vectors."""
    one = Fraction(1)
    if kind == "one":
        return PolyTailSequence({0: one}, 0, 0, (one,), (one,))
    if kind == "sigma":
        return PolyTailSequence({-1: -one, 1: one}, -1, 1, (-one,), (one,))
    if kind == "n":
        return PolyTailSequence({}, 0, 0, (0, one), (0, one))
    if kind == "abs_n":
        return PolyTailSequence({}, 0, 0, (0, -one), (0, one))
    if kind == "delta":
        return PolyTailSequence({k: one}, k - 1, k + 1, (), ())
    raise ValueError(f"unknown sequence kind {kind!r}")


def apply_h0(x: PolyTailSequence) -> PolyTailSequence:
    """Second-difference operator ``y[n] = -(x[n+1] + x[n-1] - 2 x[n])``.

    Tail polynomials map to ``-(p(n+1) + p(n-1) - 2 p(n))``, lowering the
    degree by two; the core window widens by one site on each side.
    """
    lo, hi = x.lo - 1, x.hi + 1
    core = {n: -(x[n + 1] + x[n - 1] - 2 * x[n]) for n in range(lo, hi + 1)}

    def tail_map(p):
        return poly_add(poly_scale(poly_add(poly_compose_affine(p, 1, 1),
                                            poly_compose_affine(p, 1, -1)), -1),
                        poly_scale(p, 2))

    return PolyTailSequence(core, lo, hi, tail_map(x.left), tail_map(x.right))


def pair(x, y):
    """Summable pairing ``sum_n x[n] * y[n]`` (real sequences).

    At least one operand must be compactly supported; otherwise the product
    has polynomial tails and the sum diverges (:class:`NonSummable`).
    """
    if isinstance(x, CompactSequence):
        x = x.to_poly_tail()
    if isinstance(y, CompactSequence):
        y = y.to_poly_tail()
    if x.is_compact:
        return sum((x[n] * y[n] for n in range(x.lo, x.hi + 1)),
                   Fraction(0) if (x.exact and y.exact) else 0.0)
    if y.is_compact:
        return pair(y, x)
    raise NonSummable("neither operand is compactly supported")
