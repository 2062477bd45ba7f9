import itertools

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from openbcs.spin_algebra import (
    SIGMA_MINUS, SIGMA_PLUS, SIGMA_ZERO, ManyBodyOperator, SiteLimitError, bcs_hamiltonian,
    commutator, commutator_decay_scan, heisenberg_evolve, intensive, local_pauli, max_abs,
    operator_norm,
)

KINDS = ("plus", "minus", "zero")


def test_single_site_matrices():
    assert np.array_equal(local_pauli("plus", 1, 1).matrix, [[0, 1], [0, 0]])
    assert np.array_equal(local_pauli("minus", 1, 1).matrix, [[0, 0], [1, 0]])
    assert np.array_equal(local_pauli("zero", 1, 1).matrix, [[1, 0], [0, -1]])


def test_site_one_is_leftmost_factor():
    assert np.array_equal(local_pauli("zero", 1, 2).matrix, np.diag([1, 1, -1, -1]))
    assert np.array_equal(local_pauli("zero", 2, 2).matrix, np.diag([1, -1, 1, -1]))
    expected = np.kron(np.eye(2), SIGMA_PLUS)
    assert np.array_equal(local_pauli("plus", 2, 2).matrix, expected)


@pytest.mark.parametrize("n", range(1, 7))
def test_pauli_relations(n):
    ops = {(k, j): local_pauli(k, j, n).matrix for k in KINDS for j in range(1, n + 1)}
    eye = np.eye(2**n)
    for i, j in itertools.product(range(1, n + 1), repeat=2):
        p_i, m_j, z_i = ops["plus", i], ops["minus", j], ops["zero", i]
        z_j, p_j = ops["zero", j], ops["plus", j]
        d = 1.0 if i == j else 0.0
        assert max_abs(p_i @ m_j - m_j @ p_i - d * z_i) < 1e-12
        assert max_abs(z_i @ p_j - p_j @ z_i - 2 * d * p_i) < 1e-12
        if i == j:
            assert max_abs(p_i @ m_j + m_j @ p_i - eye) < 1e-12
            assert max_abs(z_i @ z_i - eye) < 1e-12
            assert max_abs(p_i @ p_i) == 0


@pytest.mark.parametrize("n", range(1, 9))
@pytest.mark.parametrize("route", ["sum", "intensive"])
def test_hamiltonian_conserves_pairing_and_polarization(n, route):
    h = bcs_hamiltonian(0.3, 1.7, n, route=route)
    assert h.is_hermitian()
    assert operator_norm(commutator(h, intensive("R", n))) < 1e-10
    assert operator_norm(commutator(h, intensive("zero", n))) < 1e-10


@pytest.mark.parametrize("n", [1, 2, 3, 5])
def test_hamiltonian_routes_agree(n):
    a = bcs_hamiltonian(-0.4, 2.0, n, route="sum")
    b = bcs_hamiltonian(-0.4, 2.0, n, route="intensive")
    assert max_abs(a.matrix - b.matrix) < 1e-12


def test_single_site_hamiltonian():
    h = bcs_hamiltonian(0.25, 1.5, 1)
    assert np.allclose(h.matrix, np.diag([0.25 - 1.5, -0.25]), atol=1e-15)


def test_hamiltonian_rejects_nonpositive_coupling():
    with pytest.raises(ValueError):
        bcs_hamiltonian(0.0, 0.0, 2)


def test_site_limit():
    with pytest.raises(SiteLimitError):
        intensive("plus", 13)
    with pytest.raises(ValueError):
        local_pauli("plus", 3, 2)


@pytest.mark.parametrize("n", [1, 2, 4, 6])
@pytest.mark.parametrize("kind", ["plus", "minus", "zero", "R"])
def test_intensive_norm_bounded(n, kind):
    assert operator_norm(intensive(kind, n)) <= 1 + 1e-12


def test_commutator_two_over_n_law():
    rows = commutator_decay_scan("plus", "zero", 1, [2, 4, 8])
    for n, norm in rows:
        assert norm == pytest.approx(2 / n, abs=1e-12)


@pytest.mark.parametrize("alpha,beta", [("plus", "minus"), ("minus", "zero"),
                                        ("zero", "plus"), ("plus", "plus")])
def test_commutator_scaled_norm_constant(alpha, beta):
    scaled = [n * v for n, v in commutator_decay_scan(alpha, beta, 1, [2, 4, 8])]
    assert max(scaled) - min(scaled) < 1e-10


def test_evolution_at_zero_time_is_identity_map():
    h = bcs_hamiltonian(0.3, 1.0, 3)
    x = intensive("plus", 3)
    out = heisenberg_evolve(h, x, 0.0)
    assert np.array_equal(out.matrix, x.matrix)
    assert out.matrix is not x.matrix


def test_evolution_fixes_hamiltonian():
    h = bcs_hamiltonian(0.3, 1.0, 3)
    assert max_abs(heisenberg_evolve(h, h, 2.7).matrix - h.matrix) < 1e-12


def test_free_precession_phase():
    eps, t = 0.7, 1.3
    h = ManyBodyOperator(1, eps * SIGMA_ZERO)
    out = heisenberg_evolve(h, ManyBodyOperator(1, SIGMA_PLUS), t)
    assert max_abs(out.matrix - np.exp(2j * eps * t) * SIGMA_PLUS) < 1e-14


def test_evolution_rejects_nonhermitian():
    with pytest.raises(np.linalg.LinAlgError):
        heisenberg_evolve(ManyBodyOperator(1, SIGMA_PLUS), ManyBodyOperator(1, SIGMA_MINUS), 1.0)


@settings(max_examples=40, deadline=None)
@given(eps=st.floats(-2, 2), g=st.floats(0.1, 3), t=st.floats(-5, 5),
       n=st.integers(1, 4), kind=st.sampled_from(KINDS), site=st.integers(1, 4))
def test_evolution_matches_expm(eps, g, t, n, kind, site):
    site = min(site, n)
    h = bcs_hamiltonian(eps, g, n)
    x = local_pauli(kind, site, n)
    out = heisenberg_evolve(h, x, t)
    u = scipy.linalg.expm(1j * t * h.matrix)
    ref = u @ x.matrix @ u.conj().T
    assert max_abs(out.matrix - ref) < 1e-10
    # unitary conjugation keeps trace and spectral norm
    assert abs(np.trace(out.matrix) - np.trace(x.matrix)) < 1e-10
    assert operator_norm(out) == pytest.approx(operator_norm(x), abs=1e-10)


def test_operator_arithmetic():
    a = local_pauli("plus", 1, 2)
    b = local_pauli("minus", 1, 2)
    assert np.array_equal((a + b).matrix, a.matrix + b.matrix)
    assert np.array_equal((a - b).matrix, a.matrix - b.matrix)
    assert np.array_equal((a @ b).matrix, a.matrix @ b.matrix)
    assert np.array_equal((2 * a).matrix, 2 * a.matrix)
    assert np.array_equal(a.dagger().matrix, b.matrix)
    with pytest.raises(ValueError):
        a + local_pauli("plus", 1, 1)
