"""Truncated matrix Laurent series and iterated pseudoinverse inversion.

The inversion scheme inverts a series whose leading coefficient may have a
kernel: project onto that kernel, invert the complement by a Neumann series,
and recurse on the induced series living on the kernel, at the price of one
negative power of the variable per step.  Truncation bookkeeping is explicit
and conservative: every product records the lowest unknown order, and asking
for a coefficient beyond it raises instead of returning zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from . import linalg
from .errors import DepthExceeded, NotSelfAdjoint, TruncationTooShort

INF = math.inf


@dataclass
class MatrixLaurentSeries:
    """Finitely many stored matrix coefficients of powers of kappa.

    Orders below the lowest stored one are exactly zero; orders above
    ``known_through`` are unknown (truncated).  ``exact`` selects the scalar
    mode of all coefficients.
    """

    dim: int
    coeffs: dict = field(default_factory=dict)
    known_through: float = INF
    exact: bool = True

    def __post_init__(self):
        self.coeffs = {
            j: M for j, M in self.coeffs.items() if linalg.max_abs(M) != 0
        }

    # -- queries

    def low(self):
        return min(self.coeffs) if self.coeffs else None

    def order_range(self):
        return self.low(), self.known_through

    def coeff(self, j):
        if j > self.known_through:
            raise TruncationTooShort(
                f"coefficient of order {j} beyond valid truncation {self.known_through}"
            )
        return self.coeffs.get(j, linalg.zeros(self.dim, self.dim, self.exact))

    def known_coeff_items(self):
        return sorted(self.coeffs.items())

    # -- constructors

    @classmethod
    def from_coeffs(cls, dim, coeffs, known_through=INF, exact=True):
        return cls(dim, dict(coeffs), known_through, exact)

    @classmethod
    def constant(cls, M, exact=True):
        dim = len(M)
        return cls(dim, {0: M} if linalg.max_abs(M) != 0 else {}, INF, exact)

    @classmethod
    def identity(cls, dim, exact=True):
        return cls.constant(linalg.eye(dim, exact), exact)

    # -- arithmetic

    def shifted(self, k):
        """Multiply by kappa**k."""
        return MatrixLaurentSeries(
            self.dim, {j + k: M for j, M in self.coeffs.items()},
            self.known_through + k, self.exact)

    def truncated(self, order):
        return MatrixLaurentSeries(
            self.dim, {j: M for j, M in self.coeffs.items() if j <= order},
            min(self.known_through, order), self.exact)

    def scaled(self, c):
        return MatrixLaurentSeries(
            self.dim, {j: linalg.mscale(M, c) for j, M in self.coeffs.items()},
            self.known_through, self.exact)

    def __add__(self, other):
        self._check(other)
        coeffs = dict(self.coeffs)
        for j, M in other.coeffs.items():
            coeffs[j] = linalg.madd(coeffs[j], M) if j in coeffs else M
        return MatrixLaurentSeries(
            self.dim, coeffs, min(self.known_through, other.known_through),
            self.exact and other.exact)

    def __sub__(self, other):
        return self + other.scaled(-1)

    def __matmul__(self, other):
        self._check(other)
        if not self.coeffs or not other.coeffs:
            return MatrixLaurentSeries(self.dim, {}, INF, self.exact and other.exact)
        known = min(self.known_through + other.low(), other.known_through + self.low())
        coeffs = {}
        for i, A in self.coeffs.items():
            for j, B in other.coeffs.items():
                if i + j > known:
                    continue
                P = linalg.matmul(A, B)
                coeffs[i + j] = linalg.madd(coeffs[i + j], P) if i + j in coeffs else P
        return MatrixLaurentSeries(self.dim, coeffs, known, self.exact and other.exact)

    def _check(self, other):
        if self.dim != other.dim:
            raise ValueError("dimension mismatch")

    def __eq__(self, other):
        if not isinstance(other, MatrixLaurentSeries):
            return NotImplemented
        upto = min(self.known_through, other.known_through)
        lows = [j for j in (self.low(), other.low()) if j is not None]
        if not lows:
            return True
        start = min(lows)
        if upto is INF:
            upto = max(max(self.coeffs, default=start), max(other.coeffs, default=start))
        j = start
        while j <= upto:
            if self.coeff(j) != other.coeff(j):
                return False
            j += 1
        return True


def _series_scale(series):
    """Data magnitude of a float-mode series, used as the absolute floor for
    its rank decisions (an all-noise leading coefficient must count as zero)."""
    if series.exact:
        return None
    return max([1.0] + [float(linalg.max_abs(M)) for M in series.coeffs.values()])


@dataclass
class Pseudoinverse:
    matrix: list
    kernel_basis: list
    dagger: list


def pseudo_inverse(A, exact=True) -> Pseudoinverse:
    """Exact (or tolerance-based) Moore-Penrose inverse of a self-adjoint matrix."""
    dagger, kernel = linalg.pinv_symmetric(A, exact)
    return Pseudoinverse(matrix=A, kernel_basis=kernel, dagger=dagger)


def _neumann_inverse(series, ambient):
    """Inverse of a series whose order-0 coefficient is invertible within
    the range of the ``ambient`` projector; coefficients beyond the input's
    valid truncation are never produced."""
    dim = series.dim
    exact = series.exact
    low = series.low()
    if low is None or low < 0:
        raise ValueError("Neumann inversion needs a series starting at order 0")
    if series.known_through is INF:
        raise ValueError("Neumann inversion needs a finite truncation order")
    comp = linalg.msub(linalg.eye(dim, exact), ambient)
    X0 = linalg.msub(linalg.invert(linalg.madd(series.coeff(0), comp), exact), comp)
    top = int(series.known_through)
    out = {0: X0}
    for j in range(1, top + 1):
        acc = None
        for l in range(1, j + 1):
            Bl = series.coeffs.get(l)
            if Bl is None:
                continue
            term = linalg.matmul(Bl, out[j - l])
            acc = term if acc is None else linalg.madd(acc, term)
        out[j] = linalg.mscale(linalg.matmul(X0, acc), -1) if acc is not None else \
            linalg.zeros(dim, dim, exact)
    return MatrixLaurentSeries(dim, out, series.known_through, exact)


def jn_step(series: MatrixLaurentSeries, ambient=None):
    """One inversion step for ``A(kappa) = A0 + kappa * (rest)``.

    Returns the orthogonal projection ``Q`` onto the kernel of the
    self-adjoint leading coefficient (within ``ambient``) and the induced
    series ``a(kappa)`` on that kernel, valid through one order less than the
    input.  The inverse is then reconstructed as

        ``A^{-1} = (Q + A)^{-1} + (1/kappa) (Q + A)^{-1} a^+ (Q + A)^{-1}``.
    """
    dim = series.dim
    exact = series.exact
    if ambient is None:
        ambient = linalg.eye(dim, exact)
    if series.known_through is INF:
        series = series.truncated(8)
    low = series.low()
    if low is not None and low < 0:
        raise ValueError("leading coefficient must sit at order zero")
    A0 = series.coeff(0)
    scale = linalg.max_abs(A0)
    if not linalg.is_symmetric(A0, exact, float(scale) if not exact else 1.0):
        raise NotSelfAdjoint("leading coefficient is not self-adjoint")
    kernel = linalg.kernel_within(A0, ambient, exact, _series_scale(series))
    Q = linalg.projector_onto(kernel, dim, exact) if kernel else linalg.zeros(dim, dim, exact)
    Qs = MatrixLaurentSeries.constant(Q, exact)
    inv = _neumann_inverse(series + Qs, ambient)
    inner = Qs - (Qs @ inv @ Qs)
    if inner.coeffs.get(0) is not None and linalg.max_abs(inner.coeffs[0]) != 0:
        if exact:
            raise RuntimeError("kernel projection failed to absorb the leading order")
        inner.coeffs.pop(0)
    return Q, inner.shifted(-1)


def invert_laurent(M: MatrixLaurentSeries, max_depth: int = 6, order=None) -> MatrixLaurentSeries:
    """Laurent series of ``M(kappa)^{-1}`` for ``M`` starting at order -1.

    Multiplies by kappa to clear the possible ``1/kappa`` term, then applies
    :func:`jn_step` recursively until a leading coefficient with trivial
    kernel appears, reconstructing at each level.  ``max_depth`` bounds the
    number of kernel steps (:class:`DepthExceeded` beyond it); ``order``
    truncates inputs that are valid to all orders.
    """
    if M.dim == 0:
        return MatrixLaurentSeries(0, {}, M.known_through, M.exact)
    low = M.low()
    if low is not None and low < -1:
        raise ValueError("series must start at order -1 or higher")
    A = M.shifted(1)
    if A.known_through is INF:
        A = A.truncated(8 if order is None else order + 1)
    elif order is not None:
        A = A.truncated(order + 1)
    ambient = linalg.eye(M.dim, M.exact)
    inv = _invert_series(A, ambient, max_depth)
    return inv.shifted(1)


def _invert_series(series, ambient, depth):
    A0 = series.coeff(0)
    kernel = linalg.kernel_within(A0, ambient, series.exact, _series_scale(series))
    if not kernel:
        return _neumann_inverse(series, ambient)
    if depth <= 0:
        raise DepthExceeded("kernel persisted beyond the allowed iteration depth")
    Q, inner = jn_step(series, ambient)
    Qs = MatrixLaurentSeries.constant(Q, series.exact)
    outer_inv = _neumann_inverse(series + Qs, ambient)
    inner_low = inner.low()
    if inner_low is None:
        raise DepthExceeded("induced series vanishes identically; input not invertible")
    if inner_low > 0:
        # leading orders vanished: pull the zero orders out before recursing
        inner = inner.shifted(-inner_low)
        inner_dagger = _invert_series(inner, Q, depth - 1).shifted(-inner_low)
    else:
        inner_dagger = _invert_series(inner, Q, depth - 1)
    correction = (outer_inv @ inner_dagger @ outer_inv).shifted(-1)
    return outer_inv + correction
