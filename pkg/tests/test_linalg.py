import numpy as np
import pytest

from topoinv import linalg
from topoinv.errors import BranchAmbiguity, OddRank


def random_unitary(n, seed):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    q, _ = np.linalg.qr(a)
    return q


def test_predicates():
    u = random_unitary(4, 0)
    assert linalg.is_unitary(u)
    assert not linalg.is_unitary(1.01 * u)
    h = u + linalg.dagger(u)
    assert linalg.is_hermitian(h)
    p = np.diag([1.0, 1.0, 0.0]).astype(complex)
    assert linalg.is_projector(p)
    assert not linalg.is_projector(1.1 * p)


def test_polar_project_recovers_unitary():
    u = random_unitary(5, 1)
    noisy = u + 1e-3 * np.ones((5, 5))
    proj = linalg.polar_project(noisy)
    assert linalg.unitarity_residual(proj) < 1e-13
    assert linalg.frob(proj - u) < 5e-3


def test_unitary_log_generator_identity():
    m, lam = linalg.unitary_log_generator(np.eye(3, dtype=complex))
    assert np.max(np.abs(m)) == 0.0
    assert np.max(np.abs(lam)) == 0.0


def test_unitary_log_generator_branch():
    u = np.diag([np.exp(1j * np.pi), 1.0])
    m, lam = linalg.unitary_log_generator(u)
    assert np.allclose(sorted(lam), [0.0, 0.5], atol=1e-14)
    assert np.allclose(m, np.diag([0.5, 0.0]), atol=1e-14)


def test_unitary_log_generator_cut():
    # phase just below zero but above roundoff: on the cut
    u = np.diag([np.exp(-1j * 5e-11), 1.0])
    with pytest.raises(BranchAmbiguity):
        linalg.unitary_log_generator(u)
    # pure roundoff phases snap to zero instead
    m, _ = linalg.unitary_log_generator(np.diag([np.exp(-1j * 1e-14), 1.0]))
    assert np.max(np.abs(m)) == 0.0


def test_kramers_basis_pairing():
    j = linalg.symplectic_blocks(4)
    theta = lambda x: j @ np.conjugate(x)
    basis = linalg.kramers_basis(theta, np.eye(4, dtype=complex))
    assert linalg.frob(linalg.dagger(basis) @ basis - np.eye(4)) < 1e-12
    for jj in range(2):
        assert np.linalg.norm(basis[:, 2 * jj + 1] - theta(basis[:, 2 * jj])) < 1e-12


def test_kramers_basis_odd_rank():
    j = linalg.symplectic_blocks(4)
    with pytest.raises(OddRank):
        linalg.kramers_basis(lambda x: j @ np.conjugate(x),
                             np.diag([1.0, 1.0, 1.0, 0.0]).astype(complex))


def test_principal_log_branch_degeneracy():
    with pytest.raises(ValueError):
        linalg.principal_log_unitary(-np.eye(2, dtype=complex))
    l, phases = linalg.principal_log_unitary(np.diag([1j, -1j]))
    assert np.allclose(sorted(phases), [-np.pi / 2, np.pi / 2])
