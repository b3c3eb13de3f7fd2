"""Free lattice resolvent: closed form, expansion kernels, and their action.

The resolvent of the free second-difference operator at spectral parameter
``-kappa**2`` is convolution with

    ``r0(kappa; n) = (sqrt(1 + kappa^2/4) - kappa/2)^(2|n|) / (2 kappa sqrt(1 + kappa^2/4))``

for real ``kappa > 0``.  Its coefficients at ``kappa = 0`` are polynomials in
``|n|`` with rational coefficients; they are generated here by exact rational
series expansion of the closed form rather than from a fixed table, so any
order is available.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

from .errors import DomainError
from .sequences import (
    PolyTailSequence,
    poly_add,
    poly_compose_affine,
    poly_eval,
    poly_scale,
)

# ---------------------------------------------------------------------------
# rational power series helpers (dense lists, index = power)


def _series_mul(a, b, order):
    out = [Fraction(0)] * (order + 1)
    for i, x in enumerate(a):
        if i > order or x == 0:
            continue
        for j, y in enumerate(b):
            if i + j > order:
                break
            out[i + j] += x * y
    return out


def _series_inverse(a, order):
    if a[0] == 0:
        raise ZeroDivisionError("series has no inverse at order zero")
    inv = [Fraction(0)] * (order + 1)
    inv[0] = 1 / a[0]
    for k in range(1, order + 1):
        acc = Fraction(0)
        for i in range(1, k + 1):
            if i < len(a):
                acc += a[i] * inv[k - i]
        inv[k] = -acc / a[0]
    return inv


@lru_cache(maxsize=None)
def _sqrt_series(order):
    """Coefficients of sqrt(1 + w^2) up to w^order."""
    out = [Fraction(0)] * (order + 1)
    c = Fraction(1)
    k = 0
    while 2 * k <= order:
        out[2 * k] = c
        c = c * (Fraction(1, 2) - k) / (k + 1)
        k += 1
    return out


@lru_cache(maxsize=None)
def _numerator_series(m, order):
    """Coefficients of (sqrt(1+w^2) - w)^(2m) / (4 sqrt(1+w^2)) up to w^order."""
    s = _sqrt_series(order)
    base = list(s)
    base[1] -= 1  # sqrt(1+w^2) - w
    power = [Fraction(0)] * (order + 1)
    power[0] = Fraction(1)
    for _ in range(2 * m):
        power = _series_mul(power, base, order)
    quarter_inv_s = [c / 4 for c in _series_inverse(s, order)]
    return tuple(_series_mul(power, quarter_inv_s, order))


@lru_cache(maxsize=None)
def _g0_kernel_abs(j, m):
    num = _numerator_series(m, max(j + 1, 1))
    return num[j + 1] * Fraction(2) ** (-j)


def g0_kernel(j: int, n: int) -> Fraction:
    """Exact coefficient of ``kappa**j`` in ``r0(kappa; n)``; ``j >= -1``.

    As a function of ``n`` this is a polynomial in ``|n|`` of degree ``j + 1``.
    """
    if j < -1:
        raise DomainError("expansion kernels start at order -1")
    return _g0_kernel_abs(j, abs(n))


@dataclass(frozen=True)
class KernelSeries:
    """Kernel coefficients at one site: ``r0(kappa; n) = sum c_j kappa^j + O(kappa^(J+1))``."""

    site: int
    coefficients: tuple  # c_j for j = -1 .. J

    @classmethod
    def at_site(cls, n: int, top_order: int) -> "KernelSeries":
        return cls(n, tuple(g0_kernel(j, n) for j in range(-1, top_order + 1)))

    def coefficient(self, j: int) -> Fraction:
        return self.coefficients[j + 1]


@lru_cache(maxsize=None)
def kernel_polynomial(j: int):
    """Ascending coefficients of the degree ``j+1`` polynomial ``K`` with
    ``K(|n|) = g0_kernel(j, n)``; cross-checked at extra interpolation nodes."""
    deg = j + 1
    points = [(m, g0_kernel(j, m)) for m in range(deg + 1)]
    # Newton's divided differences, expanded into dense coefficients.
    coeffs = [v for _, v in points]
    for level in range(1, deg + 1):
        for i in range(deg, level - 1, -1):
            coeffs[i] = (coeffs[i] - coeffs[i - 1]) / (points[i][0] - points[i - level][0])
    poly = ()
    basis = (Fraction(1),)
    for i in range(deg + 1):
        poly = poly_add(poly, poly_scale(basis, coeffs[i]))
        basis = _poly_mul_linear(basis, points[i][0])
    for m in range(deg + 1, deg + 4):
        if poly_eval(poly, m) != g0_kernel(j, m):
            raise AssertionError(f"kernel coefficient of order {j} is not polynomial in |n|")
    return poly


def _poly_mul_linear(p, root):
    # p(x) * (x - root)
    out = [Fraction(0)] * (len(p) + 1)
    for i, c in enumerate(p):
        out[i + 1] += c
        out[i] -= root * c
    from .sequences import poly_normalize

    return poly_normalize(out)


def r0_point(kappa, n: int) -> float:
    """Free resolvent kernel at real ``kappa > 0`` (binary64)."""
    kappa = float(kappa)
    if not kappa > 0:
        raise DomainError("kappa must be positive")
    s = math.sqrt(1.0 + kappa * kappa / 4.0)
    return (s - kappa / 2.0) ** (2 * abs(n)) / (2.0 * kappa * s)


def apply_g0(j: int, x) -> PolyTailSequence:
    """Convolve a compactly supported sequence with the order-``j`` kernel.

    The result has polynomial tails of degree at most ``j + 1``: beyond the
    support of ``x`` the absolute value in the kernel resolves to a fixed
    sign, so each tail is an explicit polynomial.
    """
    if isinstance(x, PolyTailSequence):
        x = x.compact_values()
    if x.is_zero:
        return PolyTailSequence.zero()
    kern = kernel_polynomial(j)
    lo, hi = x.min_site(), x.max_site()
    left = ()
    right = ()
    for k, v in x.items():
        right = poly_add(right, poly_scale(poly_compose_affine(kern, 1, -k), v))
        left = poly_add(left, poly_scale(poly_compose_affine(kern, -1, k), v))
    core = {}
    for n in range(lo, hi + 1):
        core[n] = sum((v * poly_eval(kern, abs(n - k)) for k, v in x.items()), Fraction(0))
    return PolyTailSequence(core, lo, hi, left, right)
