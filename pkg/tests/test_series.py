from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import fixture_potential, random_exact_potential, seeded
from dtl import linalg
from dtl.chain import build_m_coefficients
from dtl.errors import NotSelfAdjoint, TruncationTooShort
from dtl.series import (
    MatrixLaurentSeries,
    invert_laurent,
    jn_step,
    pseudo_inverse,
)

rationals = st.fractions(min_value=-5, max_value=5, max_denominator=6)


def series(dim, coeffs, known=8):
    return MatrixLaurentSeries.from_coeffs(dim, coeffs, known, True)


# ---------------------------------------------------------------------------
# pseudoinverse


def test_pseudo_inverse_diagonal():
    p = pseudo_inverse([[F(0), F(0)], [F(0), F(2)]])
    assert p.dagger == [[F(0), F(0)], [F(0), F(1, 2)]]
    assert p.kernel_basis == [[F(1), F(0)]]


def test_pseudo_inverse_zero_matrix():
    p = pseudo_inverse(linalg.zeros(3, 3))
    assert p.dagger == linalg.zeros(3, 3)
    assert len(p.kernel_basis) == 3


def test_pseudo_inverse_rank_one():
    p = pseudo_inverse([[F(1), F(1)], [F(1), F(1)]])
    assert p.dagger == [[F(1, 4), F(1, 4)], [F(1, 4), F(1, 4)]]
    assert len(p.kernel_basis) == 1
    v = p.kernel_basis[0]
    assert v[0] == -v[1]


def test_pseudo_inverse_rejects_asymmetric():
    with pytest.raises(NotSelfAdjoint):
        pseudo_inverse([[F(0), F(1)], [F(0), F(0)]])


@given(st.lists(st.lists(rationals, min_size=3, max_size=3), min_size=3, max_size=3))
@settings(max_examples=60, deadline=None)
def test_moore_penrose_identities(rows):
    A = [[rows[i][j] + rows[j][i] for j in range(3)] for i in range(3)]
    dag, kernel = linalg.pinv_symmetric(A)
    assert linalg.matmul(A, linalg.matmul(dag, A)) == A
    assert linalg.matmul(dag, linalg.matmul(A, dag)) == dag
    ada = linalg.matmul(A, dag)
    assert ada == linalg.transpose(ada)
    assert linalg.matmul(dag, A) == ada
    for v in kernel:
        assert all(x == 0 for x in linalg.matvec(A, v))


# ---------------------------------------------------------------------------
# single inversion step


def test_jn_step_scalar():
    A = series(1, {1: [[F(1)]]})
    Q, a = jn_step(A)
    assert Q == [[F(1)]]
    assert a.coeff(0) == [[F(1)]]
    inv = invert_laurent(A)
    assert inv.coeff(-1) == [[F(1)]]
    for j in range(0, int(inv.known_through) + 1):
        assert inv.coeff(j) == [[F(0)]]


def test_jn_step_diagonal():
    A = series(2, {0: [[F(0), F(0)], [F(0), F(1)]], 1: [[F(1), F(0)], [F(0), F(0)]]})
    Q, a = jn_step(A)
    assert Q == [[F(1), F(0)], [F(0), F(0)]]
    assert a.coeff(0) == [[F(1), F(0)], [F(0), F(0)]]
    inv = invert_laurent(A)
    assert inv.coeff(-1) == [[F(1), F(0)], [F(0), F(0)]]
    assert inv.coeff(0) == [[F(0), F(0)], [F(0), F(1)]]
    assert inv.coeff(1) == [[F(0), F(0)], [F(0), F(0)]]


def test_jn_step_two_by_two_reconstruction():
    # A = [[k, k], [k, 1 + k]]; closed-form inverse has determinant k
    A = series(2, {0: [[F(0), F(0)], [F(0), F(1)]],
                   1: [[F(1), F(1)], [F(1), F(1)]]})
    inv = invert_laurent(A)
    # exact inverse: (1/k) [[1 + k, -k], [-k, k]]
    assert inv.coeff(-1) == [[F(1), F(0)], [F(0), F(0)]]
    assert inv.coeff(0) == [[F(1), F(-1)], [F(-1), F(1)]]
    for j in (1, 2):
        assert inv.coeff(j) == linalg.zeros(2, 2)


def test_jn_step_requires_self_adjoint():
    A = series(2, {0: [[F(0), F(1)], [F(0), F(0)]], 1: linalg.eye(2)})
    with pytest.raises(NotSelfAdjoint):
        jn_step(A)


# ---------------------------------------------------------------------------
# full inversion


def test_invert_identity_times_kappa():
    M = series(2, {1: linalg.eye(2)})
    inv = invert_laurent(M)
    assert inv.coeff(-1) == linalg.eye(2)
    for j in range(0, 3):
        assert inv.coeff(j) == linalg.zeros(2, 2)


def test_invert_rank_one_example():
    pot = fixture_potential("b2_local_rank_one")
    M = build_m_coefficients(pot, 8).series()
    inv = invert_laurent(M)
    assert inv.coeff(0) == [[F(0)]]
    assert inv.coeff(1) == [[F(2)]]
    assert inv.coeff(2) == [[F(-4)]]


def test_truncation_is_not_zero():
    M = series(1, {1: [[F(1)]]}, known=3)
    inv = invert_laurent(M)
    with pytest.raises(TruncationTooShort):
        inv.coeff(int(inv.known_through) + 1)


@pytest.mark.parametrize("name", ["v_zero", "b2_local_rank_one", "b3_resonance_1",
                                  "b5_third_kind", "qs_rank_one", "laplacian_profile"])
def test_reconstruction_exactness(name):
    pot = fixture_potential(name)
    M = build_m_coefficients(pot, 8).series()
    inv = invert_laurent(M)
    prod = M @ inv
    upto = int(min(prod.known_through, 4))
    low = prod.low()
    if low is None:
        assert pot.dim == 0
        return
    for j in range(low, upto + 1):
        expected = linalg.eye(pot.dim) if j == 0 else linalg.zeros(pot.dim, pot.dim)
        assert prod.coeff(j) == expected


def test_laurent_floor_and_depth(potentials):
    for name in ["b2_local_rank_one", "b3_resonance_1", "b5_third_kind"]:
        pot = potentials[name]
        inv = invert_laurent(build_m_coefficients(pot, 8).series())
        assert inv.low() >= -2


def test_kernel_monotonicity():
    rng = seeded(99)
    for _ in range(25):
        pot = random_exact_potential(rng)
        M = build_m_coefficients(pot, 6).series()
        A = M.shifted(1)
        dims_seen = []
        ambient = linalg.eye(pot.dim)
        for _ in range(5):
            kernel = linalg.kernel_within(A.coeff(0), ambient)
            dims_seen.append(len(kernel))
            if not kernel:
                break
            Q, A = jn_step(A, ambient)
            ambient = Q
            low = A.low()
            if low is None:
                break
            if low > 0:
                A = A.shifted(-low)
        assert all(a >= b for a, b in zip(dims_seen, dims_seen[1:]))
        assert len(dims_seen) <= 4  # at most three kernel steps before exit


def test_float_mode_inversion():
    # all-noise leading blocks must be treated as kernels, not inverted
    pot = fixture_potential("b4_eigenvalues_N1")
    M = build_m_coefficients(pot, 8).series()
    inv = invert_laurent(M)
    assert inv.low() == -2
    prod = M @ inv
    for j in range(prod.low(), 4):
        target = 1.0 if j == 0 else 0.0
        assert abs(prod.coeff(j)[0][0] - target) < 1e-9
