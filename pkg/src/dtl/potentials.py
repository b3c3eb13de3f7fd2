"""Finite-rank compactly supported interactions ``V = sum_a sign_a <v_a, .> v_a``.

The canonical input is the signed rank-one decomposition; multiplicative
(diagonal) potentials are a convenience constructor.  The factor vectors must
be linearly independent, and the whole potential is exact precisely when all
vector entries are rational.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction

from . import linalg
from .errors import DependentVectors
from .scalars import exact_sqrt, parse_scalar
from .sequences import CompactSequence, PolyTailSequence, apply_h0, pair


@dataclass(frozen=True)
class RankOneTerm:
    sign: int
    vector: CompactSequence

    def __post_init__(self):
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")
        if self.vector.is_zero:
            raise ValueError("rank-one factor vector is zero")


class FactorizedPotential:
    """Ordered rank-one terms; ``dim`` is the auxiliary-space dimension."""

    def __init__(self, terms):
        self.terms = tuple(terms)
        self.exact = all(t.vector.exact for t in self.terms)
        if self.terms and not self.exact and any(t.vector.exact for t in self.terms):
            # mixed-mode vectors: demote everything to float once, explicitly
            self.terms = tuple(RankOneTerm(t.sign, t.vector.as_float()) for t in self.terms)

    @property
    def dim(self):
        return len(self.terms)

    @property
    def signs(self):
        return [t.sign for t in self.terms]

    @property
    def vectors(self):
        return [t.vector for t in self.terms]

    @property
    def is_zero(self):
        return not self.terms

    def support_bounds(self):
        sites = [n for t in self.terms for n in t.vector.support()]
        if not sites:
            return None
        return min(sites), max(sites)

    def is_multiplicative(self):
        return all(len(t.vector.values) == 1 for t in self.terms) and (
            len({t.vector.min_site() for t in self.terms}) == self.dim
        )

    def dense_matrix(self, lo, hi):
        """Entries of V on the window [lo, hi]^2."""
        size = hi - lo + 1
        out = [[Fraction(0) if self.exact else 0.0] * size for _ in range(size)]
        for t in self.terms:
            for m, vm in t.vector.items():
                for n, vn in t.vector.items():
                    if lo <= m <= hi and lo <= n <= hi:
                        out[m - lo][n - lo] += t.sign * vm * vn
        return out

    def to_json(self):
        return {
            "rank_one_terms": [
                {"sign": t.sign, "vector": t.vector.to_json()} for t in self.terms
            ]
        }


@dataclass(frozen=True)
class SchroedingerOperator:
    potential: FactorizedPotential


def from_rank_one_terms(terms) -> FactorizedPotential:
    """Validate linear independence of the factor vectors and build ``V``.

    Independence is decided by exact rank in exact mode and by the shared
    singular-value tolerance in float mode; failure raises
    :class:`DependentVectors`.
    """
    terms = list(terms)
    pot = FactorizedPotential(terms)
    if pot.dim > 1:
        sites = sorted({n for t in pot.terms for n in t.vector.support()})
        rows = [[t.vector[n] for n in sites] for t in pot.terms]
        if linalg.rank(rows, pot.exact) < pot.dim:
            raise DependentVectors("factor vectors are linearly dependent")
    return pot


def from_dense_symmetric(entries) -> FactorizedPotential:
    """Factorize a finite symmetric interaction matrix by eigendecomposition.

    ``entries`` maps site pairs ``(m, n)`` to values (missing pairs are zero,
    and either orientation may be given).  The result uses binary64 vectors
    (exact rational factorization is generally impossible) with one signed
    term per nonzero eigenvalue.
    """
    import numpy as np

    sites = sorted({s for pair_ in entries for s in pair_})
    if not sites:
        return from_rank_one_terms([])
    index = {s: i for i, s in enumerate(sites)}
    size = len(sites)
    dense = np.zeros((size, size))
    for (m, n), v in entries.items():
        val = float(parse_scalar(v))
        dense[index[m], index[n]] = val
        dense[index[n], index[m]] = val
    if not np.allclose(dense, dense.T):
        raise ValueError("interaction matrix is not symmetric")
    eigvals, eigvecs = np.linalg.eigh(dense)
    cutoff = 1e-9 * max(1.0, float(np.max(np.abs(eigvals))))
    terms = []
    for k, lam in enumerate(eigvals):
        if abs(lam) <= cutoff:
            continue
        column = np.sqrt(abs(lam)) * eigvecs[:, k]
        vec = {s: float(column[i]) for s, i in index.items() if abs(column[i]) > 1e-15}
        terms.append(RankOneTerm(1 if lam > 0 else -1, CompactSequence(vec)))
    return from_rank_one_terms(terms)


def from_multiplicative(values) -> FactorizedPotential:
    """Diagonal potential ``(Vx)[n] = V[n] x[n]`` from finitely many values.

    Each site becomes one rank-one term with vector ``sqrt(|V[n]|) e_n``; the
    result stays exact iff every ``|V[n]|`` is the square of a rational.
    """
    terms = []
    all_exact = True
    parsed = {int(n): parse_scalar(v) for n, v in values.items()}
    for n in sorted(parsed):
        v = parsed[n]
        if v == 0:
            continue
        sign = 1 if v > 0 else -1
        if isinstance(v, Fraction):
            root, exact = exact_sqrt(abs(v))
            all_exact = all_exact and exact
        else:
            root = abs(v) ** 0.5
            all_exact = False
        terms.append(RankOneTerm(sign, CompactSequence({n: root})))
    if not all_exact:
        terms = [RankOneTerm(t.sign, t.vector.as_float()) for t in terms]
    return from_rank_one_terms(terms)


def apply_potential(pot: FactorizedPotential, x) -> CompactSequence:
    out = CompactSequence({})
    for t in pot.terms:
        w = t.sign * pair(t.vector, x)
        if w != 0:
            out = out + t.vector.scaled(w)
    return out


def apply_h(op, x: PolyTailSequence) -> PolyTailSequence:
    """Apply ``H = H0 + V``; exact when both the potential and ``x`` are."""
    pot = op.potential if isinstance(op, SchroedingerOperator) else op
    result = apply_h0(x)
    vx = apply_potential(pot, x)
    if not vx.is_zero:
        result = result + vx.to_poly_tail()
    return result


def j_conjugate(pot: FactorizedPotential) -> FactorizedPotential:
    """Conjugation by the alternating-sign involution: vectors pick up (-1)^n."""
    return FactorizedPotential(
        [RankOneTerm(t.sign, t.vector.alternating()) for t in pot.terms]
    )


def aux_vector(pot: FactorizedPotential, x):
    """The auxiliary-space vector with entries ``<v_a, x>``."""
    return [pair(t.vector, x) for t in pot.terms]


def embed_aux(pot: FactorizedPotential, coeffs) -> CompactSequence:
    """The lattice sequence ``sum_a coeffs[a] * v_a``."""
    out = CompactSequence({})
    for c, t in zip(coeffs, pot.terms):
        if c != 0:
            out = out + t.vector.scaled(c)
    return out


# ---------------------------------------------------------------------------
# file format


def potential_from_dict(data) -> FactorizedPotential:
    if "multiplicative" in data:
        return from_multiplicative(data["multiplicative"])
    if "rank_one_terms" in data:
        terms = []
        for entry in data["rank_one_terms"]:
            vec = CompactSequence.from_raw(entry["vector"])
            terms.append(RankOneTerm(int(entry["sign"]), vec))
        return from_rank_one_terms(terms)
    raise ValueError("potential file needs 'multiplicative' or 'rank_one_terms'")


def load_potential(path) -> FactorizedPotential:
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    if str(path).endswith(".toml"):
        try:
            import tomllib
        except ModuleNotFoundError:
            import tomli as tomllib

        data = tomllib.loads(text)
    else:
        data = json.loads(text)
    return potential_from_dict(data)
