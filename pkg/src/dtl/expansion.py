"""Laurent coefficients of the perturbed resolvent in the kappa convention.

Every coefficient is an optional free convolution kernel plus a finite-rank
correction whose factors are lattice sequences with polynomial tails, so the
operators on the infinite lattice stay exactly represented.  Two independent
routes are provided: the case-dispatched ladder assembly (:func:`expand`,
following the invertibility pattern of the projection chain) and closed
forms for the singular part (:func:`singular_parts`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from . import linalg
from .chain import (
    ProjectionChain,
    build_m_coefficients,
    build_projection_chain,
    m_ladder,
    neumann_ladder,
    prune_sequence,
    q_ladder,
    r_ladder,
    reconstruction_map,
    _compositions,
)
from .errors import CaseMismatch, IdentityViolated, NotApplicable, QsAssumptionViolated
from .kernels import apply_g0, g0_kernel
from .potentials import apply_h, apply_potential, aux_vector
from .scalars import ZERO_TOL
from .sequences import CompactSequence, PolyTailSequence, pair, special_sequence


@dataclass
class ExpansionCoefficient:
    """One Laurent coefficient: optional free kernel + finite-rank correction.

    The correction is a list of ``(weight, left, right)`` triples encoding
    ``sum weight * <left, .> right``.
    """

    order: int
    free: bool
    corrections: list
    exact: bool = True

    def matrix_element(self, a, b):
        out = g0_kernel(self.order, a - b) if self.free else Fraction(0)
        if not self.exact:
            out = float(out)
        for w, left, right in self.corrections:
            out += w * left[b] * right[a]
        return out

    def assembly_scale(self):
        """Magnitude of the terms this coefficient was assembled from,
        bounding the absolute rounding level of float-mode entries."""
        if getattr(self, "_scale", None) is None:
            out = 1.0 if self.free else 0.0
            for w, left, right in self.corrections:
                out += abs(float(w)) * left.max_abs() * right.max_abs()
            self._scale = max(out, 1e-30)
        return self._scale

    def apply(self, x) -> PolyTailSequence:
        """Apply to a compactly supported sequence."""
        if isinstance(x, CompactSequence):
            x = x.to_poly_tail()
        out = apply_g0(self.order, x) if self.free else PolyTailSequence.zero()
        for w, left, right in self.corrections:
            c = w * pair(left, x)
            if c != 0:
                out = out + right.scaled(c)
        return out

    def correction_zero(self) -> bool:
        """Rigorous zero test for the finite-rank part.

        The correction kernel is a tail-polynomial function of each index, so
        vanishing on a grid larger than every window plus every tail degree
        forces it to vanish identically.
        """
        if not self.corrections:
            return True
        reach = 0
        for _, left, right in self.corrections:
            for s in (left, right):
                deg = max(s.max_tail_degree(), 0)
                reach = max(reach, abs(s.lo) + deg, abs(s.hi) + deg)
        reach += 2
        tol = 0.0
        if not self.exact:
            scale = max(max(s.max_abs() for _, l, r in self.corrections for s in (l, r)), 1.0)
            wmax = max(abs(w) for w, _, _ in self.corrections)
            tol = 1e-8 * scale * scale * max(wmax, 1.0)
        for a in range(-reach, reach + 1):
            for b in range(-reach, reach + 1):
                val = sum((w * left[b] * right[a] for w, left, right in self.corrections),
                          Fraction(0))
                if abs(val) > tol:
                    return False
        return True

    def is_zero_operator(self) -> bool:
        if self.free:
            # free kernels are nonzero operators; cancellation against the
            # finite-rank part can happen entrywise but only for order -1
            if self.order != -1:
                return False
            flat = special_sequence("one")
            merged = list(self.corrections) + [(Fraction(1, 2), flat, flat)]
            return ExpansionCoefficient(self.order, False, merged, self.exact).correction_zero()
        return self.correction_zero()

    def to_json(self):
        from .scalars import format_scalar

        kernel = None
        if self.free:
            from .kernels import kernel_polynomial

            kernel = [format_scalar(c) for c in kernel_polynomial(self.order)]
        body = {
            "order": self.order,
            "free_kernel": kernel,
            "corrections": [
                {"weight": format_scalar(w), "left": l.to_json(), "right": r.to_json()}
                for w, l, r in self.corrections
            ],
        }
        if self.is_zero_operator():
            body = {"order": self.order, "zero": True}
        return body


@dataclass
class ExpansionResult:
    case_id: int
    j_min: int
    order: int
    coefficients: dict
    chain: ProjectionChain
    convention: str = "kappa"

    def coeff(self, j) -> ExpansionCoefficient:
        if j < self.j_min or j > self.order:
            raise CaseMismatch(f"coefficient {j} outside [{self.j_min}, {self.order}]")
        return self.coefficients[j]

    def to_json(self):
        return {
            "convention": self.convention,
            "case": self.case_id,
            "order_range": [self.j_min, self.order],
            "coefficients": {
                f"G_{j}": self.coefficients[j].to_json()
                for j in range(self.j_min, self.order + 1)
            },
        }


# ---------------------------------------------------------------------------
# sequence-column helpers


class _Columns:
    """Lazy columns of the kernel operators applied to the factor vectors."""

    def __init__(self, chain):
        self.chain = chain
        self.pot = chain.pot
        self._cache = {}

    def kernel(self, j, a):
        key = (j, a)
        if key not in self._cache:
            self._cache[key] = apply_g0(j, self.pot.terms[a].vector)
        return self._cache[key]

    def z(self, a):
        key = ("z", a)
        if key not in self._cache:
            e = linalg.basis_vector(self.pot.dim, a, self.chain.exact)
            self._cache[key] = reconstruction_map(self.chain, e)
        return self._cache[key]

    def flat(self):
        if "one" not in self._cache:
            one = special_sequence("one")
            self._cache["one"] = one if self.chain.exact else one.as_float()
        return self._cache["one"]

    def combine(self, parts):
        """Columns ``a -> sum over (X, base) of sum_b base[b] * X[b][a]``."""
        dim = self.pot.dim
        out = []
        for a in range(dim):
            acc = PolyTailSequence.zero()
            for X, base in parts:
                for b in range(dim):
                    if X[b][a] != 0:
                        acc = acc + base[b].scaled(X[b][a])
            out.append(acc)
        return out


def _sandwich_terms(mid, left_cols, right_cols):
    out = []
    for a, ra in enumerate(right_cols):
        for b, lb in enumerate(left_cols):
            w = mid[a][b]
            if w != 0:
                out.append((w, lb, ra))
    return out


# ---------------------------------------------------------------------------
# the ladder route


def expand(pot, N=None) -> ExpansionResult:
    """Laurent coefficients of the perturbed resolvent through order ``N``.

    Dispatches on the invertibility case of the projection chain, builds the
    Neumann ladders of the iterated inversion by their literal product
    formulas, and assembles each coefficient as free kernel plus finite-rank
    correction.  Orders below the case's leading one are assembled as well
    and asserted to cancel identically.
    """
    chain = build_projection_chain(build_m_coefficients(pot, 2))
    return expand_from_chain(chain, N)


def expand_from_chain(chain, N=None) -> ExpansionResult:
    depth = chain.stage
    if N is None:
        N = 2 if depth == 3 else 4
    j_min = -2 if depth == 3 else -1
    pot = chain.pot
    exact = chain.exact
    dim = pot.dim

    W = _middle_coefficients(chain, N)
    cols = _Columns(chain)

    coefficients = {}
    floor = min(W) - 2 if W else j_min
    for j in range(min(floor, j_min), N + 1):
        corrections = []
        for j2, Wmat in W.items():
            rest = j - j2
            # j1 + j3 = rest with j1, j3 >= -1
            for j1 in range(-1, rest + 2):
                j3 = rest - j1
                if j3 < -1:
                    continue
                mid = linalg.mscale(Wmat, -1)
                left = [cols.kernel(j3, b) for b in range(dim)]
                right = [cols.kernel(j1, a) for a in range(dim)]
                corrections.extend(_sandwich_terms(mid, left, right))
        coeff = ExpansionCoefficient(j, free=j >= -1, corrections=corrections, exact=exact)
        if j < j_min:
            if not coeff.is_zero_operator():
                raise IdentityViolated(
                    f"order {j} below the leading order {j_min} failed to cancel")
        else:
            coefficients[j] = coeff
    return ExpansionResult(case_id=depth + 1, j_min=j_min, order=N,
                           coefficients=coefficients, chain=chain)


def _middle_coefficients(chain, N):
    """Coefficients of everything between ``v`` and ``v*`` in the resolvent
    formula, organized by the chain's depth."""
    depth = chain.stage
    pot = chain.pot
    dim = pot.dim
    if dim == 0:
        return {}
    top = N + 2
    mcoeffs = build_m_coefficients(pot, N + 6)

    if depth == 0:
        return _case1_inverse_coeffs(chain, mcoeffs, top)

    hi = N + 4
    A = neumann_ladder(linalg.madd(chain.Q, linalg.mscale(chain.P, chain.gamma)),
                       {l: mcoeffs.m(l - 1) for l in range(1, hi + 1)}, hi)
    m_list = m_ladder(chain, mcoeffs, hi + 2)
    B = neumann_ladder(linalg.madd(chain.S, chain.m0_dagger),
                       {l: m_list[l] for l in range(1, hi + 1)}, hi)

    def convolve(ladders, total):
        acc = None
        for comp in _compositions(total, len(ladders)):
            term = None
            for ladder, idx in zip(ladders, comp):
                mat = ladder[idx]
                term = mat if term is None else linalg.matmul(term, mat)
            acc = term if acc is None else linalg.madd(acc, term)
        return acc if acc is not None else linalg.zeros(dim, dim, chain.exact)

    W = {}

    def add(j, mat):
        if linalg.max_abs(mat) == 0:
            return
        W[j] = linalg.madd(W[j], mat) if j in W else mat

    for j in range(0, top + 1):
        if j - 1 >= 0 and j - 1 <= hi:
            add(j, A[j - 1])  # kappa * (inverse ladder)
    for j in range(0, top + 1):
        add(j, convolve([A, B, A], j))
    if depth >= 2:
        q_list = q_ladder(chain, m_list, hi + 1)
        C = neumann_ladder(linalg.madd(chain.T, chain.q0_dagger),
                           {l: q_list[l] for l in range(1, hi + 1)}, hi)
        for j in range(-1, top + 1):
            add(j, convolve([A, B, C, B, A], j + 1))
    if depth >= 3:
        r_list = r_ladder(chain, q_list, hi)
        D = neumann_ladder(chain.r0_dagger,
                           {l: r_list[l] for l in range(1, hi + 1)}, hi)
        for j in range(-2, top + 1):
            add(j, convolve([A, B, C, D, C, B, A], j + 2))
    return W


def _case1_inverse_coeffs(chain, mcoeffs, top):
    """Inverse-series coefficients when the leading projection is invertible."""
    dim = chain.dim
    gamma = chain.gamma
    out = {}
    if top >= 1:
        out[1] = linalg.mscale(linalg.eye(dim, chain.exact), gamma)
    for j in range(2, top + 1):
        acc = linalg.zeros(dim, dim, chain.exact)
        for k in range(1, j):
            sign_gamma = -((-gamma) ** (k + 1))
            for comp in _compositions(j - k - 1, k):
                term = linalg.eye(dim, chain.exact)
                for l in comp:
                    term = linalg.matmul(term, mcoeffs.m(l))
                acc = linalg.madd(acc, linalg.mscale(term, sign_gamma))
        out[j] = acc
    return {j: M for j, M in out.items() if linalg.max_abs(M) != 0}


# ---------------------------------------------------------------------------
# closed forms for the singular part


def q0_dagger_closed_form(chain):
    """Rank-combination closed form of the pseudoinverse at the second stage."""
    exact = chain.exact
    dim = chain.dim
    c = linalg.dot(chain.phi3_star, chain.phi2)
    phi4_nonzero = any(x != 0 for x in chain.phi4) if exact else \
        math.sqrt(abs(linalg.dot(chain.phi4, chain.phi4))) > ZERO_TOL * max(1.0, chain.scale)
    if phi4_nonzero:
        out = linalg.madd(
            linalg.outer(chain.phi3_star, chain.phi3_star),
            linalg.mscale(linalg.outer(chain.phi4_star, chain.phi4_star), 1 + c * c))
        cross = linalg.madd(
            linalg.outer(chain.phi4_star, chain.phi3_star),
            linalg.outer(chain.phi3_star, chain.phi4_star))
        out = linalg.msub(out, linalg.mscale(cross, c))
        out = linalg.mscale(out, -2)
    else:
        scale = -2 / (1 + c * c)
        out = linalg.mscale(linalg.outer(chain.phi3_star, chain.phi3_star), scale)
    diff = linalg.msub(out, chain.q0_dagger)
    tol = 0 if exact else ZERO_TOL * max(1.0, chain.scale)
    if linalg.max_abs(diff) > tol:
        raise CaseMismatch("closed-form pseudoinverse disagrees with elimination")
    return out


def singular_parts(pot_or_chain) -> dict:
    """Case closed forms for the lowest orders, for cross-validation.

    Returns the orders ``-2, -1`` (all cases) and ``0`` (cases 1-3) as
    :class:`ExpansionCoefficient` objects built directly from the closed
    formulas, not from the ladder sums.
    """
    chain = pot_or_chain if isinstance(pot_or_chain, ProjectionChain) else \
        build_projection_chain(build_m_coefficients(pot_or_chain, 2))
    pot = chain.pot
    exact = chain.exact
    dim = pot.dim
    cols = _Columns(chain)
    gamma = chain.gamma
    M0 = chain.mcoeffs.m(0)
    M1 = chain.mcoeffs.m(1)
    phi1 = chain.phi1
    flat = cols.flat()
    out = {}

    def holder(order, free, corrections):
        return ExpansionCoefficient(order, free, [t for t in corrections if t[0] != 0],
                                    exact=exact)

    # order -2
    if chain.stage == 3:
        zc = [cols.z(a) for a in range(dim)]
        mid = linalg.mscale(chain.r0_dagger, -1)
        out[-2] = holder(-2, False, _sandwich_terms(mid, zc, zc))
    else:
        out[-2] = holder(-2, False, [])

    # order -1: flat-projection part
    n1sq = linalg.dot(phi1, phi1)
    weight = -gamma * n1sq / 4
    minus1 = [(weight, flat, flat)] if weight != 0 else []
    if chain.stage == 2:
        q0d = q0_dagger_closed_form(chain)
        zc = [cols.z(a) for a in range(dim)]
        minus1 += _sandwich_terms(linalg.mscale(q0d, -1), zc, zc)
    if chain.stage == 3:
        zc = [cols.z(a) for a in range(dim)]
        mcoeffs = build_m_coefficients(pot, 3)
        m_list = m_ladder(chain, mcoeffs, 3)
        q_list = q_ladder(chain, m_list, 2)
        r_list = r_ladder(chain, q_list, 1)
        r1 = r_list[1]
        q0d, q1, r0d = chain.q0_dagger, chain.q1, chain.r0_dagger
        mid = linalg.madd(chain.T, _chain3(r0d, r1, r0d))
        mid = linalg.madd(mid, linalg.mscale(q0d, -1))
        mid = linalg.madd(mid, _chain3(q0d, q1, r0d))
        mid = linalg.madd(mid, _chain3(r0d, q1, q0d))
        minus1 += _sandwich_terms(mid, zc, zc)
        g1_rows = _g1_weighted_columns(chain, cols)
        minus1 += _sandwich_terms(r0d, g1_rows, zc)
        minus1 += _sandwich_terms(r0d, zc, g1_rows)
    out[-1] = holder(-1, True, minus1)

    # order 0 closed forms exist for cases 1-3
    if chain.stage <= 2:
        corr = []
        q_form = linalg.dot(phi1, linalg.matvec(M0, phi1))
        corr.append((gamma * gamma * q_form / 4, flat, flat))
        for b in range(dim):
            if phi1[b] != 0:
                corr.append((-gamma * phi1[b] / 2, cols.kernel(0, b), flat))
                corr.append((-gamma * phi1[b] / 2, flat, cols.kernel(0, b)))
        if chain.stage >= 1:
            f_cols = _f_columns(chain, cols)
            corr += _sandwich_terms(linalg.mscale(chain.m0_dagger, -1), f_cols, f_cols)
        if chain.stage == 2:
            zc = [cols.z(a) for a in range(dim)]
            f_cols = _f_columns(chain, cols)
            q0d = q0_dagger_closed_form(chain)
            corr += _sandwich_terms(chain.S, zc, zc)
            corr += _sandwich_terms(_chain3(q0d, chain.q1, q0d), zc, zc)
            mid = _chain3(q0d, chain.m1, chain.m0_dagger)
            corr += _sandwich_terms(mid, f_cols, zc)
            mid = _chain3(chain.m0_dagger, chain.m1, q0d)
            corr += _sandwich_terms(mid, zc, f_cols)
            g1_rows = _g1_weighted_columns(chain, cols)
            corr += _sandwich_terms(q0d, g1_rows, zc)
            corr += _sandwich_terms(q0d, zc, g1_rows)
            mid = linalg.mscale(_chain3(q0d, M0, chain.P), gamma)
            corr += _sandwich_terms(mid, f_cols, zc)
            mid = linalg.mscale(_chain3(chain.P, M0, q0d), gamma)
            corr += _sandwich_terms(mid, zc, f_cols)
        out[0] = holder(0, True, corr)
    return out


def _chain3(A, B, C):
    return linalg.matmul(A, linalg.matmul(B, C))


def _f_columns(chain, cols):
    """Columns of ``gamma G_{-1} v M0 - G_0 v``."""
    dim = chain.dim
    M0 = chain.mcoeffs.m(0)
    m0phi1 = linalg.matvec(M0, chain.phi1)
    out = []
    for a in range(dim):
        seq = cols.kernel(0, a).scaled(-1)
        w = chain.gamma * m0phi1[a] / 2
        if w != 0:
            seq = seq + cols.flat().scaled(w)
        out.append(seq)
    return out


def _g1_weighted_columns(chain, cols):
    """Columns of ``(1 - gamma G_{-1} v v*) G_1 v``."""
    dim = chain.dim
    M1 = chain.mcoeffs.m(1)
    m1phi1 = linalg.matvec(M1, chain.phi1)
    out = []
    for a in range(dim):
        seq = cols.kernel(1, a)
        w = -chain.gamma * m1phi1[a] / 2
        if w != 0:
            seq = seq + cols.flat().scaled(w)
        out.append(seq)
    return out


# ---------------------------------------------------------------------------
# identities and alternative forms


def green_identity_check(pot, result: ExpansionResult, sites=range(-10, 11)) -> dict:
    """Verify ``H G_0 = 1 - G_{-2}`` on unit vectors at the given sites.

    Exact fixtures must satisfy the identity exactly; float fixtures to the
    shared tolerance.  For the cases with invertible second stage the
    degree-one tail structure of ``G_0`` is checked against the
    flat/threshold-resonance rank-two form.
    """
    g0 = result.coeff(0)
    gm2 = result.coefficients.get(-2)
    exact = result.chain.exact
    worst = 0
    for a in sites:
        e_a = special_sequence("delta", a)
        if not exact:
            e_a = e_a.as_float()
        lhs = apply_h(pot, g0.apply(e_a))
        rhs = e_a
        if gm2 is not None:
            rhs = rhs - gm2.apply(e_a)
        diff = lhs - rhs
        mag = diff.max_abs()
        worst = max(worst, mag)
        tol = 0 if exact else 1e-8 * max(1.0, g0.apply(e_a).max_abs())
        if mag > tol:
            raise IdentityViolated(f"Green identity fails at site {a}: residual {mag}")
    report = {"sites": [int(a) for a in sites], "max_residual": float(worst), "passed": True}

    if result.case_id in (1, 2):
        chain = result.chain
        psi5 = PolyTailSequence.zero() if chain.dim == 0 else \
            reconstruction_map(chain, chain.phi5)
        flat = special_sequence("one") if exact else special_sequence("one").as_float()
        for a in list(sites)[:7]:
            e_a = special_sequence("delta", a)
            if not exact:
                e_a = e_a.as_float()
            actual = g0.apply(e_a)
            model = apply_g0(0, e_a) + flat.scaled(pair(psi5, e_a)) + psi5.scaled(flat[a])
            diff = actual - model
            seq = diff if exact else prune_sequence(diff)
            if max(seq.max_tail_degree(), 0) > 0:
                raise IdentityViolated(
                    f"degree-one tail structure of the Green operator fails at site {a}")
        report["tail_structure"] = "checked"
    return report


def g0_closed_forms(pot, result: ExpansionResult | None = None, sites=range(-5, 6)) -> dict:
    """Alternative expressions for the order-zero coefficient, with a match report.

    With trivial quasi-symmetric space the perturbed-identity operator is
    invertible and reduces to a finite solve; otherwise (cases 1-2) the
    projected variant applies.  Case 4 has no closed form here by design.
    """
    if result is None:
        result = expand(pot, N=0)
    chain = result.chain
    if result.case_id == 4:
        raise NotApplicable("no closed form at the fourth case")
    exact = chain.exact
    dim = pot.dim
    M0 = chain.mcoeffs.m(0)
    U = linalg.zeros(dim, dim, exact)
    for a, t in enumerate(pot.terms):
        U[a][a] = Fraction(t.sign) if exact else float(t.sign)
    UM0 = linalg.matmul(U, M0)
    qs_trivial = linalg.rank(UM0, exact, chain.scale) == dim if dim else True
    ker_m0 = linalg.kernel_basis(M0, exact, chain.scale) if dim else []
    if qs_trivial == bool(ker_m0):
        raise QsAssumptionViolated(
            "finite reduction invertibility disagrees with the kernel computation")

    g0 = result.coeff(0)
    report = {"case": result.case_id, "qs_trivial": qs_trivial}

    def resolve(x):
        """(1 + G0 kernel * V)^{-1} applied to G0-kernel * x via finite solve."""
        gx = apply_g0(0, x)
        rhs = [-v for v in aux_vector(chain.pot, gx)]
        xi = linalg.solve(UM0, linalg.matvec(U, rhs), exact)
        if xi is None:
            raise QsAssumptionViolated("finite reduction solve failed")
        out = gx
        for a, c in enumerate(xi):
            if c != 0:
                out = out + apply_g0(0, pot.terms[a].vector).scaled(c)
        return out

    if qs_trivial:
        if result.case_id in (1, 2):
            psi5 = PolyTailSequence.zero() if dim == 0 else \
                reconstruction_map(chain, chain.phi5)
            delta_dag = (1 / chain.delta) if chain.delta != 0 else chain.delta * 0
            residuals = []
            for a in sites:
                e_a = _unit(a, exact)
                model = resolve(e_a) + psi5.scaled(delta_dag * pair(psi5, e_a))
                residuals.append((result.coeff(0).apply(e_a) - model))
            _assert_small(residuals, exact, "order-zero closed form (invertible reduction)")
            report["matched"] = True
            return report
        # case 3: fit the two remaining constants, then verify
        psi3 = reconstruction_map(chain, chain.phi3)
        psi6 = reconstruction_map(chain, chain.phi6)
        diffs = {a: g0.apply(_unit(a, exact)) - resolve(_unit(a, exact)) for a in sites}
        rows, rhs = [], []
        probe = sorted(set(list(sites) + [min(sites) - 3, max(sites) + 3]))
        for a in sites:
            for n in probe:
                rows.append([psi3[a] * psi3[n], psi3[a] * psi6[n] + psi6[a] * psi3[n]])
                rhs.append(diffs[a][n])
        sol = linalg.solve(rows, rhs, exact)
        if sol is None:
            raise QsAssumptionViolated("no constants complete the case-3 closed form")
        d1, d2 = sol
        residuals = []
        for a in sites:
            model = psi3.scaled(d1 * psi3[a]) + psi6.scaled(d2 * psi3[a]) + \
                psi3.scaled(d2 * psi6[a])
            residuals.append(diffs[a] - model)
        _assert_small(residuals, exact, "order-zero closed form (case 3)")
        report.update({"matched": True, "delta_1": str(d1) if exact else float(d1),
                       "delta_2": str(d2) if exact else float(d2)})
        return report

    if result.case_id == 3:
        raise NotApplicable("nontrivial quasi-symmetric space at the third case")

    # cases 1-2 with nontrivial quasi-symmetric space: projected inverse
    psi5 = reconstruction_map(chain, chain.phi5)
    flat = special_sequence("one") if exact else special_sequence("one").as_float()
    residuals = []
    for a in sites:
        e_a = _unit(a, exact)
        sol = _projected_solve(chain, e_a, flat, exact)
        model = sol + psi5.scaled(flat[a])
        residuals.append(g0.apply(e_a) - model)
    _assert_small(residuals, exact, "order-zero closed form (projected variant)")
    report["matched"] = True
    return report


def _projected_solve(chain, x, flat, exact):
    """Apply the projected inverse of the perturbed identity to the kernel
    image of ``x``.

    With a one-dimensional quasi-symmetric space the equation
    ``(1 + G0 V) y = G0 x + lambda * flat`` is solvable for exactly one
    ``lambda``; the remaining kernel freedom is fixed by the range condition
    ``<V flat, y> = 0`` of the complementary projection.
    """
    pot = chain.pot
    M0 = chain.mcoeffs.m(0)
    phi1 = chain.phi1
    ker = linalg.kernel_basis(M0, exact, chain.scale)
    if len(ker) != 1:
        raise QsAssumptionViolated("projected variant expects a one-dimensional kernel")
    g0x = apply_g0(0, x)
    rhs = aux_vector(pot, g0x)
    # columns: xi (dim entries) then lambda
    aug = [list(row) + [-phi1[i]] for i, row in enumerate(M0)]
    sol = linalg.solve(aug, rhs, exact)
    if sol is None:
        raise QsAssumptionViolated("projected reduction is inconsistent")
    xi, lam = sol[:-1], sol[-1]
    y = g0x + flat.scaled(lam)
    for a, c in enumerate(xi):
        if c != 0:
            y = y - apply_g0(0, pot.terms[a].vector).scaled(c)
    direction = reconstruction_map(chain, ker[0])
    v_flat = apply_potential(pot, flat)
    denom = pair(v_flat.to_poly_tail(), direction)
    if denom == 0:
        raise QsAssumptionViolated("projected range condition is degenerate")
    t = -pair(v_flat.to_poly_tail(), y) / denom
    return y + direction.scaled(t)


def _unit(a, exact):
    e = special_sequence("delta", a)
    return e if exact else e.as_float()


def _assert_small(residuals, exact, what):
    for r in residuals:
        if exact:
            if not r.is_zero:
                raise QsAssumptionViolated(f"{what} failed to match the ladder route")
        elif r.max_abs() > 1e-7:
            raise QsAssumptionViolated(f"{what} failed to match the ladder route")


# ---------------------------------------------------------------------------
# series-composition route (independent cross-check)


def composition_matrix_element(pot, minv_series, j, a, b):
    """Matrix element of the order-``j`` coefficient via the inverse-series
    composition ``G_j = G_j^0 - sum G^0 v [M^{-1}]_k v* G^0``."""
    exact = minv_series.exact
    out = g0_kernel(j, a - b) if j >= -1 else Fraction(0)
    if not exact:
        out = float(out)
    dim = pot.dim
    low = minv_series.low()
    if low is None:
        return out
    for k in range(low, j + 3):
        j1_plus_j3 = j - k
        if j1_plus_j3 < -2:
            continue
        Mk = minv_series.coeff(k)
        if linalg.max_abs(Mk) == 0:
            continue
        for j1 in range(-1, j1_plus_j3 + 2):
            j3 = j1_plus_j3 - j1
            if j3 < -1:
                continue
            for c in range(dim):
                ka = _kernel_col_value(pot, j1, c, a)
                if ka == 0:
                    continue
                for d in range(dim):
                    kb = _kernel_col_value(pot, j3, d, b)
                    if kb != 0:
                        out -= ka * Mk[c][d] * kb
    return out


def _kernel_col_value(pot, j, c, site):
    acc = 0
    for n, v in pot.terms[c].vector.items():
        acc += g0_kernel(j, site - n) * v if pot.exact else float(g0_kernel(j, site - n)) * v
    return acc
