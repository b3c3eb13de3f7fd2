"""Small dense linear algebra over exact rationals or binary64.

Matrices are lists of row lists.  Exact mode runs rational Gaussian
elimination so that rank and kernel decisions are discontinuity-free; float
mode delegates to numpy with the shared singular-value tolerance.  Exact
orthogonalization never normalizes (projections are built as
``B (B^T B)^{-1} B^T``), keeping everything inside the rationals.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from .errors import NotSelfAdjoint
from .scalars import ZERO_TOL

# ---------------------------------------------------------------------------
# construction and arithmetic


def zeros(r, c, exact=True):
    fill = Fraction(0) if exact else 0.0
    return [[fill] * c for _ in range(r)]


def eye(n, exact=True):
    one = Fraction(1) if exact else 1.0
    out = zeros(n, n, exact)
    for i in range(n):
        out[i][i] = one
    return out


def dims(A):
    return len(A), len(A[0]) if A else 0


def matmul(A, B):
    ra, ca = dims(A)
    rb, cb = dims(B)
    if ca != rb:
        raise ValueError(f"shape mismatch {ra}x{ca} @ {rb}x{cb}")
    out = []
    for i in range(ra):
        row = []
        Ai = A[i]
        for j in range(cb):
            acc = 0
            for k in range(ca):
                acc += Ai[k] * B[k][j]
            row.append(acc)
        out.append(row)
    return out


def matvec(A, x):
    return [sum((row[k] * x[k] for k in range(len(x))), 0) for row in A]


def madd(A, B):
    return [[a + b for a, b in zip(ra, rb)] for ra, rb in zip(A, B)]


def msub(A, B):
    return [[a - b for a, b in zip(ra, rb)] for ra, rb in zip(A, B)]


def mscale(A, c):
    return [[c * a for a in row] for row in A]


def transpose(A):
    r, c = dims(A)
    return [[A[i][j] for i in range(r)] for j in range(c)]


def dot(u, v):
    return sum((a * b for a, b in zip(u, v)), 0)


def vec_add(u, v):
    return [a + b for a, b in zip(u, v)]


def vec_sub(u, v):
    return [a - b for a, b in zip(u, v)]


def vec_scale(u, c):
    return [c * a for a in u]


def outer(u, v):
    return [[a * b for b in v] for a in u]


def max_abs(A):
    return max((abs(x) for row in A for x in row), default=0)


def is_symmetric(A, exact=True, scale=1.0):
    r, c = dims(A)
    if r != c:
        return False
    tol = 0 if exact else ZERO_TOL * max(1.0, scale)
    return all(abs(A[i][j] - A[j][i]) <= tol for i in range(r) for j in range(r))


def mat_equal(A, B, exact=True, tol=0.0):
    if dims(A) != dims(B):
        return False
    if exact:
        return all(a == b for ra, rb in zip(A, B) for a, b in zip(ra, rb))
    return all(abs(a - b) <= tol for ra, rb in zip(A, B) for a, b in zip(ra, rb))


# ---------------------------------------------------------------------------
# elimination-based primitives


def _rref(M):
    """Reduced row echelon form (in place on a copy); returns (rref, pivots)."""
    M = [list(row) for row in M]
    rows, cols = dims(M)
    pivots = []
    r = 0
    for c in range(cols):
        piv = next((i for i in range(r, rows) if M[i][c] != 0), None)
        if piv is None:
            continue
        M[r], M[piv] = M[piv], M[r]
        inv = Fraction(1, 1) / M[r][c]
        M[r] = [x * inv for x in M[r]]
        for i in range(rows):
            if i != r and M[i][c] != 0:
                f = M[i][c]
                M[i] = [x - f * y for x, y in zip(M[i], M[r])]
        pivots.append(c)
        r += 1
        if r == rows:
            break
    return M, pivots


def _svd_cutoff(s, scale):
    """Absolute cutoff: relative to the largest singular value, but never
    below the caller's data scale (an all-noise matrix must count as zero)."""
    top = s[0] if len(s) else 0.0
    return ZERO_TOL * max(top, scale if scale is not None else 0.0, 1e-30)


def rank(A, exact=True, scale=None):
    r, c = dims(A)
    if r == 0 or c == 0:
        return 0
    if exact:
        return len(_rref(A)[1])
    s = np.linalg.svd(np.array(A, dtype=float), compute_uv=False)
    return int(np.count_nonzero(s > _svd_cutoff(s, scale)))


def kernel_basis(A, exact=True, scale=None):
    """Basis (list of vectors) of the right kernel of ``A``."""
    r, c = dims(A)
    if c == 0:
        return []
    if r == 0:
        return [basis_vector(c, i, exact) for i in range(c)]
    if exact:
        R, pivots = _rref(A)
        free = [j for j in range(c) if j not in pivots]
        basis = []
        for j in free:
            v = [Fraction(0)] * c
            v[j] = Fraction(1)
            for i, p in enumerate(pivots):
                v[p] = -R[i][j]
            basis.append(v)
        return basis
    arr = np.array(A, dtype=float)
    _, s, vt = np.linalg.svd(arr)
    tol = _svd_cutoff(s, scale)
    null = [vt[i] for i in range(len(vt)) if i >= len(s) or s[i] <= tol]
    return [list(map(float, v)) for v in null]


def basis_vector(n, i, exact=True):
    v = [Fraction(0) if exact else 0.0] * n
    v[i] = Fraction(1) if exact else 1.0
    return v


def solve(A, b, exact=True):
    """One solution of ``A x = b`` or ``None`` when inconsistent."""
    r, c = dims(A)
    if exact:
        aug = [list(row) + [bv] for row, bv in zip(A, b)]
        R, pivots = _rref(aug)
        for i in range(len(pivots), r):
            if R[i][c] != 0:
                return None
        if pivots and pivots[-1] == c:
            return None
        x = [Fraction(0)] * c
        for i, p in enumerate(pivots):
            x[p] = R[i][c]
        return x
    arr = np.array(A, dtype=float)
    rhs = np.array(b, dtype=float)
    x, residuals, rk, sv = np.linalg.lstsq(arr, rhs, rcond=None)
    if np.linalg.norm(arr @ x - rhs) > 1e-8 * max(1.0, np.linalg.norm(rhs)):
        return None
    return [float(v) for v in x]


def invert(A, exact=True):
    n, c = dims(A)
    if n != c:
        raise ValueError("only square matrices invert")
    if n == 0:
        return []
    if exact:
        aug = [list(row) + list(e) for row, e in zip(A, eye(n))]
        R, pivots = _rref(aug)
        if len(pivots) < n or pivots != list(range(n)):
            raise ZeroDivisionError("matrix is singular")
        return [row[n:] for row in R]
    return [[float(x) for x in row] for row in np.linalg.inv(np.array(A, dtype=float))]


# ---------------------------------------------------------------------------
# projections and pseudoinverses


def gram_schmidt(vectors, exact=True):
    """Orthogonal (exact, unnormalized) or orthonormal (float) basis."""
    basis = []
    for v in vectors:
        w = list(v)
        for b in basis:
            coeff = dot(b, w) / dot(b, b)
            w = vec_sub(w, vec_scale(b, coeff))
        if exact:
            if any(x != 0 for x in w):
                basis.append(w)
        else:
            nrm = float(np.sqrt(dot(w, w)))
            if nrm > ZERO_TOL:
                basis.append(vec_scale(w, 1.0 / nrm))
    return basis


def projector_onto(vectors, dim, exact=True):
    """Orthogonal projection onto the span of ``vectors`` in R^dim."""
    vecs = gram_schmidt(vectors, exact)
    P = zeros(dim, dim, exact)
    for b in vecs:
        nrm = dot(b, b)
        P = madd(P, mscale(outer(b, b), (Fraction(1) if exact else 1.0) / nrm))
    return P


def pinv_symmetric(A, exact=True, scale=None):
    """Moore-Penrose pseudoinverse of a self-adjoint matrix.

    Returns ``(dagger, kernel)`` with the kernel given as an orthogonalized
    (exact mode: unnormalized) basis.  Exact mode inverts ``A + P_ker`` and
    subtracts the kernel projection, so all four defining identities hold
    with no rounding.  Float mode cuts singular values off at the shared
    tolerance times the given data scale.
    """
    n, c = dims(A)
    if n != c:
        raise NotSelfAdjoint("pseudoinverse requires a square matrix")
    mag = max_abs(A)
    if not is_symmetric(A, exact, float(mag) if not exact else 1.0):
        raise NotSelfAdjoint("matrix is not self-adjoint")
    if n == 0:
        return [], []
    kernel = gram_schmidt(kernel_basis(A, exact, scale), exact)
    if exact:
        P = projector_onto(kernel, n, exact) if kernel else zeros(n, n, exact)
        dagger = msub(invert(madd(A, P), exact=True), P)
    else:
        u, s, vt = np.linalg.svd(np.array(A, dtype=float))
        cut = _svd_cutoff(s, scale)
        inv = np.array([1.0 / x if x > cut else 0.0 for x in s])
        dagger = [[float(x) for x in row] for row in (vt.T * inv) @ u.T]
    return dagger, kernel


def kernel_within(A, ambient_projector, exact=True, scale=None):
    """Kernel of self-adjoint ``A`` intersected with the range of a projector.

    With ``A = P A P`` self-adjoint, that intersection equals the full kernel
    of ``A + (1 - P)``.
    """
    n, _ = dims(A)
    comp = msub(eye(n, exact), ambient_projector)
    return kernel_basis(madd(A, comp), exact, scale)


def columns_rank(vectors, exact=True):
    if not vectors:
        return 0
    return rank(vectors, exact)
