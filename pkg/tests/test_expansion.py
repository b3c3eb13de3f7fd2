from fractions import Fraction as F

import pytest

from conftest import fixture_potential, random_compact, seeded
from dtl import linalg
from dtl.chain import build_m_coefficients, build_projection_chain
from dtl.errors import NotApplicable
from dtl.expansion import (
    ExpansionCoefficient,
    composition_matrix_element,
    expand,
    g0_closed_forms,
    green_identity_check,
    q0_dagger_closed_form,
    singular_parts,
)
from dtl.kernels import g0_kernel
from dtl.potentials import apply_h
from dtl.sequences import pair, special_sequence
from dtl.series import invert_laurent


def test_free_case_is_pure_kernel():
    res = expand(fixture_potential("v_zero"), 3)
    for j in range(-1, 4):
        coeff = res.coeff(j)
        assert coeff.free and not coeff.corrections
        assert coeff.matrix_element(2, -1) == g0_kernel(j, 3)


def test_local_rank_one_leading_coefficient_vanishes():
    res = expand(fixture_potential("b2_local_rank_one"), 0)
    assert res.j_min == -1
    assert res.coeff(-1).is_zero_operator()
    for a in range(-5, 6):
        for b in range(-5, 6):
            assert res.coeff(-1).matrix_element(a, b) == 0


def test_third_kind_singular_order_is_projection():
    pot = fixture_potential("b5_third_kind")
    res = expand(pot, 0)
    gm2 = res.coeff(-2)
    window = range(-12, 13)
    mat = {(a, b): gm2.matrix_element(a, b) for a in window for b in window}
    # symmetric
    assert all(mat[a, b] == mat[b, a] for a in window for b in window)
    # idempotent on the window (entries vanish outside [1,8])
    for a in window:
        for b in window:
            acc = sum(mat.get((a, c), F(0)) * mat.get((c, b), F(0)) for c in window)
            assert acc == mat[a, b]
    rows = [[mat[a, b] for b in window] for a in window]
    assert linalg.rank(rows, True) == 2
    # range = span of the compact null vectors from the direct solve
    from dtl.oracles import nullspace_oracle

    eig = nullspace_oracle(pot).eigenfunctions
    assert len(eig) == 2
    for e in eig:
        image_rows = rows + [[e[b] for b in window]]
        assert linalg.rank(image_rows, True) == 2


@pytest.mark.parametrize("name,N", [
    ("b2_local_rank_one", 2),
    ("b3_resonance_1", 2),
    ("qs_rank_one", 2),
    ("laplacian_profile", 2),
    ("b5_third_kind", 1),
])
def test_dual_path_agreement(name, N):
    pot = fixture_potential(name)
    res = expand(pot, N)
    minv = invert_laurent(build_m_coefficients(pot, N + 7).series())
    for j in range(res.j_min, N + 1):
        for a in range(-4, 5):
            for b in range(-4, 5):
                assert res.coeff(j).matrix_element(a, b) == \
                    composition_matrix_element(pot, minv, j, a, b)


@pytest.mark.parametrize("name", ["v_zero", "b2_local_rank_one", "b3_resonance_1",
                                  "b5_third_kind", "qs_rank_one", "laplacian_profile"])
def test_singular_parts_match_ladder_route(name):
    pot = fixture_potential(name)
    res = expand(pot, 0)
    parts = singular_parts(pot)
    for j, coeff in parts.items():
        if j < res.j_min:
            assert not coeff.free and coeff.correction_zero()
            continue
        ladder = res.coeff(j)
        assert coeff.free == ladder.free
        diff = ExpansionCoefficient(
            j, False,
            list(coeff.corrections) + [(-w, l, r) for w, l, r in ladder.corrections],
            exact=coeff.exact)
        assert diff.correction_zero()


def test_singular_first_kind_structure():
    # one bounded resonance: the first singular coefficient is a symmetric
    # rank-one operator, positive on its range
    pot = fixture_potential("b3_resonance_1")
    parts = singular_parts(pot)
    gm1 = parts[-1]
    window = range(-10, 11)
    rows = [[gm1.matrix_element(a, b) for b in window] for a in window]
    assert linalg.rank(rows, True) == 1
    assert rows == linalg.transpose(rows)
    # positive on its range: the nonzero eigen-direction pairs positively
    resonance = special_sequence("one") + special_sequence("delta", 0)
    applied = gm1.apply(special_sequence("delta", 0))
    val = pair(special_sequence("delta", 0), applied)
    assert val > 0
    # range spanned by the resonance profile
    res_row = [resonance[b] for b in window]
    assert linalg.rank(rows + [res_row], True) == 1


def test_q0_closed_form_agrees():
    pot = fixture_potential("b3_resonance_1")
    chain = build_projection_chain(build_m_coefficients(pot, 2))
    assert chain.stage == 2
    closed = q0_dagger_closed_form(chain)
    assert closed == chain.q0_dagger


@pytest.mark.parametrize("name", ["v_zero", "b2_local_rank_one", "b3_resonance_1",
                                  "b5_third_kind", "qs_rank_one", "laplacian_profile"])
def test_green_identities(name):
    pot = fixture_potential(name)
    res = expand(pot, 2 if name != "b5_third_kind" else 1)
    report = green_identity_check(pot, res)
    assert report["passed"]


def test_green_identity_float():
    pot = fixture_potential("b4_eigenvalues_N1")
    res = expand(pot, 1)
    assert green_identity_check(pot, res, sites=range(-5, 6))["passed"]


def test_closed_forms_cases():
    for name, qs_trivial in [("v_zero", True), ("b2_local_rank_one", True),
                             ("b3_resonance_1", True), ("laplacian_profile", True),
                             ("qs_rank_one", False)]:
        pot = fixture_potential(name)
        report = g0_closed_forms(pot)
        assert report["matched"], name
        assert report["qs_trivial"] == qs_trivial, name


def test_closed_forms_case3_constants_exist():
    report = g0_closed_forms(fixture_potential("b3_resonance_1"))
    assert "delta_1" in report and "delta_2" in report


def test_closed_forms_not_applicable_fourth_case():
    with pytest.raises(NotApplicable):
        g0_closed_forms(fixture_potential("b5_third_kind"))


@pytest.mark.parametrize("name", ["b3_resonance_1", "b5_third_kind"])
def test_coefficients_symmetric_under_pairing(name):
    rng = seeded(47)
    pot = fixture_potential(name)
    res = expand(pot, 1)
    for j in range(res.j_min, 2):
        coeff = res.coeff(j)
        for _ in range(10):
            x = random_compact(rng).to_poly_tail()
            y = random_compact(rng).to_poly_tail()
            assert pair(x, coeff.apply(y)) == pair(coeff.apply(x), y)


def test_expansion_serialization():
    import json

    res = expand(fixture_potential("b2_local_rank_one"), 0)
    data = res.to_json()
    assert data["convention"] == "kappa"
    assert data["coefficients"]["G_-1"] == {"order": -1, "zero": True}
    json.dumps(data, sort_keys=True)


def test_float_expansion_applies():
    pot = fixture_potential("b4_eigenvalues_N1")
    res = expand(pot, 0)
    e3 = special_sequence("delta", 3).as_float()
    out = res.coeff(-2).apply(e3)
    # the leading singular coefficient is plus the eigenprojection
    assert abs(out[3] - 1.0) < 1e-9
    h = apply_h(pot, res.coeff(0).apply(e3))
    target = e3 - res.coeff(-2).apply(e3)
    assert (h - target).max_abs() < 1e-9


def test_first_order_structure_modulo_eigenfunctions():
    # away from the eigenfunctions, the first singular coefficient is built
    # from pairs of bounded-resonance representatives
    from dtl.chain import classify
    from dtl.oracles import nullspace_oracle

    pot = fixture_potential("b5_third_kind")
    res = expand(pot, 0)
    gm1 = res.coeff(-1)
    eig = nullspace_oracle(pot).eigenfunctions
    report = classify(pot)
    resonances = report.bases["resonances_bounded"]
    assert len(resonances) == 2

    rng = seeded(53)
    probes = []
    while len(probes) < 8:
        x = random_compact(rng, lo=-4, hi=12).to_poly_tail()
        for e in eig:
            ee = pair(e.compact_values(), e.compact_values())
            x = x - e.scaled(pair(e.compact_values(), x) / ee)
        probes.append(x)
    R = [[pair(psi, x) for psi in resonances] for x in probes]
    B = [[pair(x, gm1.apply(_compact(y))) for y in probes] for x in probes]
    augmented_rank = linalg.rank([r + b for r, b in zip(R, B)], True)
    assert augmented_rank == linalg.rank(R, True) == 2


def _compact(x):
    return x.compact_values()


def test_dual_path_random_potentials():
    from conftest import random_exact_potential

    rng = seeded(61)
    for _ in range(6):
        pot = random_exact_potential(rng)
        res = expand(pot, 1)
        minv = invert_laurent(build_m_coefficients(pot, 8).series())
        for j in range(res.j_min, 2):
            for a in range(-3, 4):
                for b in range(-3, 4):
                    assert res.coeff(j).matrix_element(a, b) == \
                        composition_matrix_element(pot, minv, j, a, b)


def test_green_action_on_extended_profiles():
    # the order-zero coefficient against the flat/linear/sign/absolute
    # profiles, at the first invertibility case
    from dtl.chain import build_projection_chain, build_m_coefficients, reconstruction_map

    pot = fixture_potential("b2_local_rank_one")
    res = expand(pot, 0)
    g0 = res.coeff(0)
    chain = build_projection_chain(build_m_coefficients(pot, 2))
    psi5 = reconstruction_map(chain, chain.phi5)
    one = special_sequence("one")
    n_seq = special_sequence("n")
    abs_n = special_sequence("abs_n")
    sigma = special_sequence("sigma")

    def g0_h(x):
        h = apply_h(pot, x)
        return g0.apply(h.compact_values())

    assert g0_h(one) == one                      # norm factor is 1 here
    assert g0_h(n_seq).is_zero                   # the linear profile solves H x = 0
    assert g0_h(sigma) == sigma
    assert g0_h(abs_n) == abs_n - psi5.scaled(F(2))
