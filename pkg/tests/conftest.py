import random
from fractions import Fraction as F
from pathlib import Path

import pytest

from dtl.errors import DependentVectors
from dtl.potentials import (
    FactorizedPotential,
    RankOneTerm,
    from_multiplicative,
    from_rank_one_terms,
    load_potential,
)
from dtl.sequences import CompactSequence

FIXTURE_DIR = Path(__file__).parent.parent / "src" / "dtl" / "fixtures"

EXACT_FIXTURES = ["v_zero", "b2_local_rank_one", "b3_resonance_1", "b5_third_kind"]
FLOAT_FIXTURES = ["b3_resonance_2", "b4_eigenvalues_N1", "b4_eigenvalues_N3"]
ALL_FIXTURES = EXACT_FIXTURES + FLOAT_FIXTURES

# auxiliary exact potentials exercising the cases the bundled corpus misses:
# a rank-one with vanishing order-zero matrix (regular with nontrivial
# quasi-symmetric space) and a second-difference profile (second-stage case)
EXTRA_EXACT = {
    "qs_rank_one": [RankOneTerm(1, CompactSequence({0: F(1), 1: F(1)}))],
    "laplacian_profile": [RankOneTerm(1, CompactSequence({-1: F(1), 0: F(-2), 1: F(1)}))],
}


def fixture_potential(name) -> FactorizedPotential:
    if name in EXTRA_EXACT:
        return from_rank_one_terms(EXTRA_EXACT[name])
    return load_potential(FIXTURE_DIR / f"{name}.json")


@pytest.fixture(scope="session")
def potentials():
    return {name: fixture_potential(name) for name in ALL_FIXTURES + list(EXTRA_EXACT)}


# ---------------------------------------------------------------------------
# random ensembles (deterministic seeds; shared with the acceptance suite)


def generic_terms(rng):
    rank = rng.randint(1, 4)
    terms = []
    for _ in range(rank):
        support = rng.sample(range(-6, 7), rng.randint(1, 3))
        vals = {s: F(rng.choice([-2, -1, 1, 2]), rng.choice([1, 2, 3])) for s in support}
        terms.append(RankOneTerm(rng.choice([1, -1]), CompactSequence(vals)))
    return terms


def bond_terms(rng):
    rank = rng.randint(1, 4)
    starts = rng.sample(range(-6, 6), rank)
    return [RankOneTerm(-1, CompactSequence({a: F(-1), a + 1: F(1)})) for a in starts]


def plateau_terms(rng):
    # second difference of a plateau profile: carries a compact eigenfunction
    a = rng.randint(-5, 1)
    w = {a: F(-1, 2), a + 2: F(1), a + 4: F(-1, 2)}
    terms = [RankOneTerm(-1, CompactSequence(w))]
    if rng.random() < 0.5:
        terms += bond_terms(rng)[:1]
    return terms


def symmetric_terms(rng):
    # vectors even under reflection: the linear moment vanishes termwise
    terms = []
    for _ in range(rng.randint(1, 3)):
        vals = {0: F(rng.choice([-2, -1, 0, 1, 2]), rng.choice([1, 2]))}
        for r in rng.sample(range(1, 6), rng.randint(0, 2)):
            c = F(rng.choice([-2, -1, 1, 2]), rng.choice([1, 2, 3]))
            vals[r] = c
            vals[-r] = c
        if all(v == 0 for v in vals.values()):
            vals[0] = F(1)
        terms.append(RankOneTerm(rng.choice([1, -1]), CompactSequence(vals)))
    return terms


def random_exact_potential(rng) -> FactorizedPotential:
    """Rank <= 4, supports within [-6, 6], entries in {-2..2}/{1,2,3}; the
    ensemble is stratified so deep invertibility stages actually occur."""
    while True:
        flavor = rng.random()
        try:
            if flavor < 0.3:
                return from_rank_one_terms(generic_terms(rng))
            if flavor < 0.55:
                return from_rank_one_terms(bond_terms(rng))
            if flavor < 0.7:
                return from_rank_one_terms(bond_terms(rng)[:2] + generic_terms(rng)[:2])
            if flavor < 0.85:
                return from_rank_one_terms(symmetric_terms(rng))
            return from_rank_one_terms(plateau_terms(rng))
        except (DependentVectors, ValueError):
            continue


def random_multiplicative_potential(rng) -> FactorizedPotential:
    sites = rng.sample(range(-6, 7), rng.randint(1, 5))
    vals = {}
    for s in sites:
        num = rng.choice([1, 2])
        den = rng.choice([1, 2, 3])
        vals[str(s)] = str(F(num * num, den * den) * rng.choice([1, -1]))
    return from_multiplicative(vals)


def random_compact(rng, lo=-8, hi=8, max_sites=5) -> CompactSequence:
    sites = rng.sample(range(lo, hi + 1), rng.randint(1, max_sites))
    return CompactSequence(
        {s: F(rng.randint(-4, 4), rng.choice([1, 2, 3])) for s in sites})


def random_moment_free(rng) -> CompactSequence:
    """Random compact sequence with vanishing flat and linear moments."""
    base = random_compact(rng)
    # second difference of anything compact has both moments zero
    out = {}
    for n, v in base.items():
        out[n + 1] = out.get(n + 1, F(0)) - v
        out[n - 1] = out.get(n - 1, F(0)) - v
        out[n] = out.get(n, F(0)) + 2 * v
    return CompactSequence(out)


def seeded(seed):
    return random.Random(seed)
