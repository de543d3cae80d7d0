import numpy as np
import pytest

from adialab import (
    NegativeBetaError,
    ToleranceNotMetError,
    bound_certificate,
    bound_monitor,
    certify_bounds,
    eig,
    gronwall_bound,
    invert_check,
    make_builtin_path,
    propagate,
)


def _constant_path(field=1.0, theta=0.4):
    return make_builtin_path("hermitian2", field=field,
                             theta={"shape": "constant", "value": theta})


def _exact_constant_evolution(h, T, s):
    dec = eig(h)
    v = dec.vectors
    return (v * np.exp(-1j * T * s * dec.eigenvalues)) @ np.linalg.inv(v)


def test_constant_hamiltonian_closed_form():
    path = _constant_path()
    h0 = path(np.array([0.0]))[0]
    tol = 1e-10
    trace = propagate(path, 37.0, tol)
    for s in (0.25, 0.5, 1.0):
        u, _ = trace.at(s)
        want = _exact_constant_evolution(h0, 37.0, s)
        assert np.linalg.norm(u - want, 2) <= 10.0 * tol


def test_initial_node_is_exact_identity():
    trace = propagate(_constant_path(), 5.0, 1e-8)
    assert np.array_equal(trace.U[0], np.eye(2, dtype=complex))
    assert np.array_equal(trace.Uinv[0], np.eye(2, dtype=complex))


def test_hermitian_path_stays_unitary(hermitian_path):
    tol = 1e-8
    trace = propagate(hermitian_path, 120.0, tol)
    defect = np.abs(trace.U.conj().swapaxes(-1, -2) @ trace.U
                    - np.eye(2)).max()
    assert defect <= 10.0 * tol
    assert abs(trace.sup_U - 1.0) <= 10.0 * tol


def test_forward_inverse_identity(pt_ramp_path):
    tol = 1e-8
    trace = propagate(pt_ramp_path, 100.0, tol)
    assert trace.identity_residual <= 10.0 * tol
    assert invert_check(trace) <= 10.0 * tol
    assert trace.meta["inverse_crosscheck"] <= 100.0 * tol


def test_invert_check_detects_corruption(pt_ramp_path):
    trace = propagate(pt_ramp_path, 25.0, 1e-8)
    trace.Uinv = trace.Uinv.copy()
    trace.Uinv[-1] += 0.01
    assert invert_check(trace) > 1e-3


@pytest.mark.parametrize("order,expect", [(2, 4.0), (4, 16.0)])
def test_step_halving_richardson_ratio(pt_ramp_path, order, expect):
    # huge tol so each call reports the first (N, 2N) comparison untouched
    ests = []
    for h_max in (1.0 / 64.0, 1.0 / 128.0):
        tr = propagate(pt_ramp_path, 3.0, 1e3, order=order, h_max=h_max)
        ests.append(tr.richardson_error)
    ratio = ests[0] / ests[1]
    assert 0.5 * expect < ratio < 2.0 * expect


def test_tolerance_not_met_raises(pt_ramp_path):
    with pytest.raises(ToleranceNotMetError):
        propagate(pt_ramp_path, 200.0, 1e-15, refine_cap=1)


def test_relative_tolerance_for_growing_norms():
    path = make_builtin_path("pt_dimer", gamma=1.5, coupling=1.0, diagnostic=True)
    t10 = propagate(path, 10.0, 1e-10, tol_scale="relative")
    t20 = propagate(path, 20.0, 1e-10, tol_scale="relative")
    rate = np.sqrt(1.5**2 - 1.0)
    assert t10.sup_U > np.exp(rate * 10.0) / 10.0
    assert t20.sup_U / t10.sup_U > np.exp(rate * 5.0)


# ------------------------------------------------------------------ bounds

def test_gronwall_zero_beta_returns_alpha():
    x = np.linspace(0.0, 1.0, 65)
    alpha = 1.0 + x**2
    assert np.abs(gronwall_bound(alpha, np.zeros_like(x), x) - alpha).max() < 1e-15


def test_gronwall_constant_beta_closed_form():
    x = np.linspace(0.0, 1.0, 1024)
    for b in (0.5, 1.0, 2.0):
        u = gronwall_bound(1.0, np.full_like(x, b), x)
        rel = np.abs(u - np.exp(b * x)) / np.exp(b * x)
        assert rel.max() < 1e-8


def test_gronwall_linear_beta_analytic_value():
    # alpha = 1, beta = s: u(1) = 1 + e^{1/2} int_0^1 s e^{-s^2/2} ds = e^{1/2}
    x = np.linspace(0.0, 1.0, 513)
    u = gronwall_bound(1.0, x.copy(), x)
    assert abs(u[-1] - np.exp(0.5)) < 1e-10


def test_gronwall_rejects_negative_beta():
    x = np.linspace(0.0, 1.0, 17)
    beta = np.zeros_like(x)
    beta[3] = -1e-3
    with pytest.raises(NegativeBetaError):
        gronwall_bound(1.0, beta, x)


def test_bound_monitor_hermitian_is_unitary(hermitian_path):
    tol = 1e-7
    cert = bound_monitor(hermitian_path, [25.0, 50.0, 100.0], tol)
    assert abs(cert.sup_U - 1.0) <= 10.0 * tol
    assert abs(cert.sup_Uinv - 1.0) <= 10.0 * tol


def test_certificate_dominates_measurement(pt_ramp_path):
    cert = certify_bounds(pt_ramp_path, [25.0, 100.0, 400.0], 1e-7, grid_size=512)
    assert cert.dominated
    assert cert.bound_U >= 1.0 and cert.bound_Uinv >= 1.0


def test_certificate_is_deterministic(pt_ramp_path):
    a = bound_certificate(pt_ramp_path, 512)
    b = bound_certificate(pt_ramp_path, 512)
    assert a.bound_U == b.bound_U  # bit-for-bit
    assert a.bound_Uinv == b.bound_Uinv


def test_hermitian_certificate_sandwich(hermitian_path):
    cert = certify_bounds(hermitian_path, [50.0, 200.0], 1e-7, grid_size=512)
    assert cert.bound_U >= 1.0
    assert cert.sup_U <= cert.bound_U * (1.0 + 1e-6)


def test_bound_monitor_uniformity_band(pt_ramp_path):
    cert = bound_monitor(pt_ramp_path, [25.0, 50.0, 100.0, 200.0], 1e-7)
    sups = [v[0] for v in cert.per_T.values()]
    assert max(sups) / min(sups) < 1.2  # empirical T-uniformity


def test_bound_certificate_constant_path_structure():
    path = make_builtin_path("pt_dimer", gamma=0.4)
    cert = bound_certificate(path, 256)
    # no s-dependence: growth rates vanish and the bound collapses to a
    # condition-number-like constant alpha * max ||inverse frame||
    assert cert.meta["max_beta_U"] < 1e-8
    assert cert.meta["max_beta_Uinv"] < 1e-8
    assert cert.bound_U >= 1.0
