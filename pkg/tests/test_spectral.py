import numpy as np
import pytest

from adialab import (
    GapTooSmallError,
    MatchingAmbiguousError,
    SingularMatrixError,
    biorthogonal_dual,
    continue_eigenpath,
    eig,
    eigenpath_derivative,
    make_builtin_path,
    reduced_resolvent,
)
from adialab.spectral import EigenSystem, _match_step

from conftest import random_real_spectrum_hamiltonian


def _system_from(h):
    dec = eig(h)
    v = dec.vectors
    return EigenSystem(0.0, dec.eigenvalues, v, biorthogonal_dual(v))


# ------------------------------------------------------------------- duals

def test_dual_of_identity():
    assert np.allclose(biorthogonal_dual(np.eye(3)), np.eye(3), atol=1e-14)


def test_dual_of_unitary_is_itself():
    rng = np.random.default_rng(5)
    q, _ = np.linalg.qr(rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4)))
    assert np.abs(biorthogonal_dual(q) - q).max() < 1e-12


def test_dual_hand_inverse():
    v = np.array([[1.0, 1.0], [0.0, 1.0]])
    xi = biorthogonal_dual(v)
    # 2x2 inverse by hand: V^-1 = [[1, -1], [0, 1]] and Xi^H = V^-1
    assert np.allclose(xi.conj().T, np.array([[1.0, -1.0], [0.0, 1.0]]), atol=1e-14)
    assert np.linalg.norm(xi.conj().T @ v - np.eye(2), 2) < 1e-12


def test_dual_rejects_singular_basis():
    with pytest.raises(SingularMatrixError):
        biorthogonal_dual(np.array([[1.0, 1.0], [1.0, 1.0]]))


# -------------------------------------------------------- reduced resolvent

def test_resolvent_diagonal_cases():
    es = _system_from(np.diag([1.0, 2.0]))
    assert np.allclose(reduced_resolvent(es, 0), np.diag([0.0, 1.0]), atol=1e-13)
    assert np.allclose(reduced_resolvent(es, 1), np.diag([-1.0, 0.0]), atol=1e-13)


def test_resolvent_identities_gain_loss_dimer():
    h = np.array([[0.5j, 1.0], [1.0, -0.5j]])
    es = _system_from(h)
    for j in range(2):
        s_mat = reduced_resolvent(es, j)
        proj = np.outer(es.V[:, j], es.Xi[:, j].conj())
        lhs = (h - es.lambdas[j] * np.eye(2)) @ s_mat
        assert np.linalg.norm(lhs - (np.eye(2) - proj), 2) < 1e-9
        assert np.linalg.norm(s_mat @ proj, 2) < 1e-9
        assert np.linalg.norm(proj @ s_mat, 2) < 1e-9


def test_resolvent_gap_guard():
    es = _system_from(np.diag([1.0, 1.0 + 1e-6]))
    with pytest.raises(GapTooSmallError):
        reduced_resolvent(es, 0, gap_min=1e-3)


def test_eigensystem_residual_invariants_random(rng):
    for n in (2, 4, 7):
        h, _ = random_real_spectrum_hamiltonian(rng, n)
        es = _system_from(h)
        assert es.biorthogonality_residual() < 1e-9
        assert es.identity_residual() < 1e-9
        assert es.hamiltonian_residual(h) < 1e-9


# ------------------------------------------------------------- continuation

def test_constant_path_systems_identical():
    path = make_builtin_path("pt_dimer", gamma=0.4)
    ep = continue_eigenpath(path, 32)
    assert np.abs(ep.V - ep.V[0]).max() < 1e-12
    assert np.abs(ep.lambdas - ep.lambdas[0]).max() < 1e-12


def test_rotating_path_label_stability(hermitian_path):
    ep = continue_eigenpath(hermitian_path, 64)
    assert ep.matching_quality > 0.99
    ep2 = continue_eigenpath(hermitian_path, 128)
    # labels agree between refinements: eigenvalues per label coincide
    assert np.abs(ep.lambdas - ep2.lambdas[::2]).max() < 1e-10


def test_pt_ramp_eigenvalue_oracle(pt_ramp_path):
    ep = continue_eigenpath(pt_ramp_path, 64)
    gamma = 0.5 * ep.grid**2  # quadratic default ramp
    want = np.sqrt(1.0 - gamma**2)
    assert np.abs(ep.lambdas[:, 1].real - want).max() < 1e-10
    assert np.abs(ep.lambdas[:, 0].real + want).max() < 1e-10
    assert ep.matching_quality > 0.95


def test_matching_is_idempotent(pt_ramp_eigenpath):
    ep = pt_ramp_eigenpath
    for k in (0, len(ep.grid) // 2, len(ep.grid) - 2):
        ov = np.abs(ep.Xi[k].conj().T @ ep.V[k + 1])
        perm, _ = _match_step(ov, 0.1)
        assert np.array_equal(perm, np.arange(ep.dim))


def test_gauge_continuity_is_recorded(pt_ramp_eigenpath):
    ep = pt_ramp_eigenpath
    h = ep.grid[1] - ep.grid[0]
    hops = np.linalg.norm(ep.V[1:] - ep.V[:-1], axis=1)
    assert hops.max() <= ep.gauge_constant * h * (1.0 + 1e-12)
    assert np.abs(np.linalg.norm(ep.V, axis=1) - 1.0).max() < 1e-12


def test_grid_refinement_stability(pt_ramp_path):
    coarse = continue_eigenpath(pt_ramp_path, 512)
    fine = continue_eigenpath(pt_ramp_path, 1024)
    assert np.abs(coarse.V - fine.V[::2]).max() < 1e-6


def test_continuation_gap_guard():
    path = make_builtin_path("pt_dimer", gamma0=0.0, gamma1=0.999)
    with pytest.raises(GapTooSmallError):
        continue_eigenpath(path, 64, gap_min=0.5)


def test_match_step_flags_ambiguity():
    with pytest.raises(MatchingAmbiguousError):
        _match_step(np.array([[0.55, 0.5], [0.5, 0.55]]), 0.1)
    with pytest.raises(MatchingAmbiguousError):
        _match_step(np.array([[0.9, 0.1], [0.95, 0.05]]), 0.01)


def test_grid_size_minimum(pt_ramp_path):
    with pytest.raises(ValueError):
        continue_eigenpath(pt_ramp_path, 8)


# --------------------------------------------------------------- derivative

def test_derivative_constant_path_is_zero():
    path = make_builtin_path("pt_dimer", gamma=0.4)
    ep = continue_eigenpath(path, 32)
    vd = eigenpath_derivative(ep)
    assert np.abs(vd).max() < 1e-10


def test_derivative_matches_analytic_rotation():
    # linear ramp so the analytic derivative is theta_dot/2 * rotated frame
    path = make_builtin_path("hermitian2", profile="linear",
                             theta0=0.0, theta1=np.pi / 2)
    ep = continue_eigenpath(path, 256)
    vd = eigenpath_derivative(ep)
    th = np.pi / 2 * ep.grid
    dth = np.pi / 2
    want_plus = 0.5 * dth * np.stack([-np.sin(th / 2), np.cos(th / 2)], axis=1)
    got = vd[:, :, 1].real
    assert np.abs(got - want_plus).max() < 5e-4


def test_derivative_richardson_halving(hermitian_path):
    errs = []
    for m in (128, 256):
        ep = continue_eigenpath(hermitian_path, m)
        eigenpath_derivative(ep)
        errs.append(ep.meta["vdot_truncation"])
    ratio = errs[0] / errs[1]
    assert 2.5 < ratio < 6.5  # ~4x for second-order stencils
