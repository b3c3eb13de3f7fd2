from fractions import Fraction as F

import pytest

from conftest import fixture_potential
from dtl.chain import classify
from dtl.errors import NearSingular
from dtl.kernels import r0_point
from dtl.oracles import (
    exact_resolvent_entry,
    nullspace_oracle,
    reflected_potential,
    remainder_slope,
    threshold4_analysis,
    truncated_lattice_entry,
)
from dtl.expansion import expand
from dtl.potentials import apply_h, from_multiplicative
from dtl.sequences import special_sequence


def test_free_resolvent_entry():
    pot = fixture_potential("v_zero")
    assert exact_resolvent_entry(pot, 1.0, 0, 0) == pytest.approx(0.44721360, abs=1e-8)
    for n in (1, 4):
        assert exact_resolvent_entry(pot, 1.0, n, 0) == pytest.approx(
            r0_point(1.0, n), abs=1e-12)


def test_rank_one_scalar_reduction():
    pot = fixture_potential("b2_local_rank_one")
    for kappa in (0.5, 0.125):
        r0 = r0_point(kappa, 0)
        expected = r0 - r0 * r0 / (1.0 + r0)
        assert exact_resolvent_entry(pot, kappa, 0, 0) == pytest.approx(
            expected, abs=1e-12)


def test_resolvent_defining_identity():
    pot = fixture_potential("b3_resonance_1")
    kappa = 0.125
    col = {n: exact_resolvent_entry(pot, kappa, n, 0) for n in range(-32, 33)}
    for n in range(-30, 31):
        h0 = -(col[n + 1] + col[n - 1] - 2 * col[n])
        v = {-1: 1.0, 0: -1.0, 1: 1.0}.get(n, 0.0) * col[n]
        lhs = h0 + v + kappa**2 * col[n]
        assert abs(lhs - (1.0 if n == 0 else 0.0)) < 1e-9


@pytest.mark.parametrize("name", ["b2_local_rank_one", "b3_resonance_1",
                                  "b5_third_kind", "b4_eigenvalues_N1"])
def test_dense_lattice_agreement(name):
    pot = fixture_potential(name)
    for kappa in (0.5, 0.25, 0.125):
        for (a, b) in [(0, 0), (-3, 2), (5, -1)]:
            krein = exact_resolvent_entry(pot, kappa, a, b)
            dense = truncated_lattice_entry(pot, kappa, a, b)
            assert abs(krein - dense) < 1e-6


def test_symmetry():
    pot = fixture_potential("b5_third_kind")
    for (a, b) in [(0, 3), (-2, 7), (1, 1)]:
        assert exact_resolvent_entry(pot, 0.25, a, b) == pytest.approx(
            exact_resolvent_entry(pot, 0.25, b, a), rel=1e-12)


def test_near_singular_detection():
    pot = fixture_potential("b5_third_kind")
    with pytest.raises(NearSingular):
        exact_resolvent_entry(pot, 1e-13, 0, 0)


# ---------------------------------------------------------------------------
# null-space solver


def test_nullspace_free():
    rep = nullspace_oracle(fixture_potential("v_zero"))
    assert rep.dims() == {"d0": 0, "d": 1, "dtilde": 2, "dqs": 0}


def test_nullspace_third_kind():
    pot = fixture_potential("b5_third_kind")
    rep = nullspace_oracle(pot)
    assert rep.dims() == {"d0": 2, "d": 4, "dtilde": 4, "dqs": 3}
    for basis_vec in rep.basis:
        assert apply_h(pot, basis_vec).is_zero
    # the known step profiles lie in the solved space
    window = range(-6, 16)
    rows = [[v[n] for n in window] for v in rep.basis]
    from dtl import linalg

    for j in range(3):
        u = [1 if n <= 4 * j else -1 for n in window]
        assert linalg.rank(rows + [u], True) == len(rows)


@pytest.mark.parametrize("name", ["v_zero", "b2_local_rank_one", "b3_resonance_1",
                                  "b5_third_kind", "qs_rank_one", "laplacian_profile"])
def test_nullspace_matches_classification(name):
    pot = fixture_potential(name)
    assert nullspace_oracle(pot).dims() == classify(pot).dims


def test_nullspace_requires_exact():
    with pytest.raises(ValueError):
        nullspace_oracle(fixture_potential("b4_eigenvalues_N1"))


# ---------------------------------------------------------------------------
# upper threshold


def test_threshold4_free():
    rep = threshold4_analysis(fixture_potential("v_zero"))
    assert rep.threshold == 4 and rep.alternating_frame
    assert rep.threshold_type == "exceptional-1"
    # reflected-frame basis: flat and linear profiles (map back via (-1)^n)
    growing = rep.bases["generalized_growing"]
    bounded = rep.bases["resonances_bounded"]
    assert bounded[0] == special_sequence("one")
    assert growing[0] == special_sequence("n")


def test_threshold4_multiplicative_equals_negated():
    for values in ({"-1": "1", "0": "-1", "1": "1"}, {"0": "1"}, {"2": "-4", "5": "1"}):
        pot = from_multiplicative(values)
        neg = from_multiplicative({k: str(-F(v)) for k, v in values.items()})
        lhs = threshold4_analysis(pot)
        rhs = classify(neg)
        assert lhs.threshold_type == rhs.threshold_type
        assert lhs.case_label == rhs.case_label
        assert lhs.dims == rhs.dims


def test_threshold4_eigenfunctions_solve_reflected_problem():
    pot = fixture_potential("b3_resonance_1")
    refl = reflected_potential(pot)
    rep = threshold4_analysis(pot)
    for group in rep.bases.values():
        for x in group:
            assert apply_h(refl, x).is_zero


# ---------------------------------------------------------------------------
# remainder fits


def test_slope_report_shape():
    pot = fixture_potential("b2_local_rank_one")
    res = expand(pot, 0)
    rep = remainder_slope(pot, res, 0, [-3, 0, 4])
    assert rep.passed and len(rep.entries) == 9
    data = rep.to_json()
    assert data["passed"] and data["slope_threshold"] == pytest.approx(0.8)


def test_slope_free_high_order():
    # the order-4 kernel vanishes at the origin, so the remainder after
    # order 3 decays one power faster than generically
    from dtl.kernels import g0_kernel

    assert g0_kernel(4, 0) == 0 and g0_kernel(5, 0) != 0
    pot = fixture_potential("v_zero")
    res = expand(pot, 3)
    rep = remainder_slope(pot, res, 3, [0])
    (entry,) = rep.entries
    assert entry.passed and entry.slope == pytest.approx(5.0, abs=0.1)
