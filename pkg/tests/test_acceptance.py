"""Acceptance suite: one test per release criterion, tolerances pinned.

Run with ``pytest tests/test_acceptance.py -v -s`` to see one PASS/FAIL
line per criterion.
"""

import time

import numpy as np
import pytest

from adialab import (
    biorthogonal_dual,
    bound_certificate,
    continue_eigenpath,
    convergence_study,
    cyclic_phase_extract,
    eig,
    gauge_invariance_check,
    gronwall_bound,
    make_builtin_path,
    propagate,
    random_gauge_scalar,
    reduced_resolvent,
)
from adialab.spectral import EigenSystem

from conftest import random_real_spectrum_hamiltonian


def _verdict(name, ok, detail, elapsed, budget):
    status = "PASS" if ok and elapsed <= budget else "FAIL"
    print(f"[{status}] {name}: {detail} ({elapsed:.1f}s of {budget:.0f}s budget)")
    assert ok, f"{name}: {detail}"
    assert elapsed <= budget, f"{name}: runtime {elapsed:.1f}s over {budget}s budget"


def test_biorthogonal_identity_suite():
    """Resolution/resolvent identities on 100 randomized real-spectrum systems."""
    start = time.time()
    rng = np.random.default_rng(1234)
    worst = 0.0
    for trial in range(100):
        n = int(rng.integers(2, 9))
        h, _ = random_real_spectrum_hamiltonian(rng, n)
        dec = eig(h)
        es = EigenSystem(0.0, dec.eigenvalues, dec.vectors,
                         biorthogonal_dual(dec.vectors))
        worst = max(worst, es.hamiltonian_residual(h))       # resolution of H
        worst = max(worst, es.identity_residual())           # resolution of I
        for j in range(n):
            s_mat = reduced_resolvent(es, j, gap_min=1e-6)
            proj = np.outer(es.V[:, j], es.Xi[:, j].conj())
            scale = max(1.0, np.linalg.norm(s_mat, 2))
            worst = max(worst, np.linalg.norm(s_mat @ proj, 2) / scale)
            worst = max(worst, np.linalg.norm(proj @ s_mat, 2) / scale)
            lhs = (h - es.lambdas[j] * np.eye(n)) @ s_mat
            rhs = np.eye(n) - proj
            worst = max(worst, np.linalg.norm(lhs - rhs, 2) / max(1.0, np.linalg.norm(rhs, 2)))
    _verdict("biorthogonal identity suite",
             worst <= 1e-9, f"max relative residual {worst:.2e} <= 1e-9",
             time.time() - start, 10.0)


def test_hermitian_limit_unitarity():
    """||U^H U - I|| stays below 1e-8 at tol 1e-9 for T in {50, 200, 800}."""
    start = time.time()
    path = make_builtin_path("hermitian2")
    worst = 0.0
    for t in (50.0, 200.0, 800.0):
        trace = propagate(path, t, 1e-9, order=4)
        defect = float(np.abs(
            trace.U.conj().swapaxes(-1, -2) @ trace.U - np.eye(2)).max())
        worst = max(worst, defect)
    _verdict("hermitian limit", worst <= 1e-8,
             f"max unitarity defect {worst:.2e} <= 1e-8",
             time.time() - start, 30.0)


def test_convergence_rate_minus_one():
    """Fitted error-decay exponent is -1.0 +/- 0.15 on all three families."""
    start = time.time()
    t_list = (50.0, 100.0, 200.0, 400.0, 800.0)
    paths = {
        "hermitian2": make_builtin_path("hermitian2"),
        "pt_dimer": make_builtin_path("pt_dimer", gamma0=0.0, gamma1=0.5,
                                      coupling=1.0),
        "dressed_hermitian": make_builtin_path("dressed_hermitian"),
    }
    slopes = {}
    ok = True
    for name, path in paths.items():
        report = convergence_study(path, 0, t_list, include_bound=False)
        slopes[name] = report.fitted_exponent
        ok = ok and abs(report.fitted_exponent + 1.0) <= 0.15
    detail = ", ".join(f"{k}: {v:+.3f}" for k, v in slopes.items())
    _verdict("convergence rate", ok, f"exponents {{{detail}}} within -1.0 +/- 0.15",
             time.time() - start, 300.0)


def test_uniform_boundedness_certificate():
    """Empirical sups sit under a certificate that is bit-identical across T."""
    start = time.time()
    path = make_builtin_path("pt_dimer", gamma0=0.0, gamma1=0.5, coupling=1.0)
    t_list = (25.0, 50.0, 100.0, 200.0, 400.0, 800.0)
    certs = [bound_certificate(path, 1024) for _ in t_list]
    identical = all(c.bound_U == certs[0].bound_U
                    and c.bound_Uinv == certs[0].bound_Uinv for c in certs)
    bound_u, bound_ui = certs[0].bound_U, certs[0].bound_Uinv
    slack = 1.0 + 1e-6
    dominated = True
    worst_u = worst_ui = 0.0
    for t in t_list:
        trace = propagate(path, t, 1e-7)
        worst_u = max(worst_u, trace.sup_U)
        worst_ui = max(worst_ui, trace.sup_Uinv)
        dominated = dominated and trace.sup_U <= bound_u * slack
        dominated = dominated and trace.sup_Uinv <= bound_ui * slack
    _verdict("uniform boundedness", identical and dominated,
             f"sup_U {worst_u:.4f} <= {bound_u:.4f}, sup_Uinv {worst_ui:.4f} "
             f"<= {bound_ui:.4f}, certificate bit-identical across T",
             time.time() - start, 120.0)


def test_gauge_invariance_randomized():
    """10 random gauge scalars per built-in path, discrepancy <= 1e-8."""
    start = time.time()
    rng = np.random.default_rng(777)
    paths = [
        make_builtin_path("hermitian2"),
        make_builtin_path("pt_dimer", gamma0=0.0, gamma1=0.5, coupling=1.0),
        make_builtin_path("dressed_hermitian"),
        make_builtin_path("cyclic_loop", base="hermitian2"),
    ]
    worst = 0.0
    for path in paths:
        ep = continue_eigenpath(path, 2048)
        for _ in range(10):
            mu, mudot = random_gauge_scalar(rng)
            disc = gauge_invariance_check(path, 0, mu, 400.0, mudot=mudot, ep=ep)
            worst = max(worst, disc)
    _verdict("gauge invariance", worst <= 1e-8,
             f"max discrepancy {worst:.2e} <= 1e-8 over 40 draws",
             time.time() - start, 60.0)


def test_cyclic_phase_extraction():
    """Loop split residual decays ~1/T; geometric factor matches the
    discrete log-overlap product to 1e-6."""
    start = time.time()
    t_list = (50.0, 100.0, 200.0, 400.0)
    ok = True
    details = []
    for base in ("hermitian2", "pt_dimer"):
        loop = make_builtin_path("cyclic_loop", base=base)
        ep = continue_eigenpath(loop, 4096)
        residuals = []
        wilson_gap = 0.0
        for t in t_list:
            split = cyclic_phase_extract(loop, 0, t, grid_size=4096, ep=ep)
            residuals.append(split.residual)
            wilson_gap = max(wilson_gap,
                             abs(split.berry_factor - split.wilson_factor))
        a = np.vstack([np.log(t_list), np.ones(len(t_list))]).T
        slope = float(np.linalg.lstsq(a, np.log(residuals), rcond=None)[0][0])
        ok = ok and slope <= -0.8 and wilson_gap <= 1e-6
        details.append(f"{base}: slope {slope:+.3f}, wilson gap {wilson_gap:.1e}")
    _verdict("cyclic phase", ok, "; ".join(details), time.time() - start, 120.0)


def test_gronwall_quadrature():
    """Constant-rate bound reproduces e^{Bt} to 1e-8 relative on 1024 nodes."""
    start = time.time()
    x = np.linspace(0.0, 1.0, 1024)
    worst = 0.0
    for b in (0.5, 1.0, 2.0):
        u = gronwall_bound(1.0, np.full_like(x, b), x)
        worst = max(worst, float((np.abs(u - np.exp(b * x)) / np.exp(b * x)).max()))
    _verdict("gronwall quadrature", worst <= 1e-8,
             f"max relative error {worst:.2e} <= 1e-8 for B in {{0.5, 1, 2}}",
             time.time() - start, 1.0)


def test_diagnostic_mode_detects_breakage():
    """Broken dimer (gamma = 1.5): certificate fails, error does not decay."""
    start = time.time()
    path = make_builtin_path("pt_dimer", gamma=1.5, coupling=1.0,
                             diagnostic=True)
    report = convergence_study(path, 0, (10.0, 20.0, 40.0, 80.0),
                               grid_size=512, diagnostic=True,
                               include_bound=False)
    ok = (not report.spectrum.hypotheses_met) and report.fitted_exponent >= 0.0
    _verdict("diagnostic mode", ok,
             f"hypotheses_met={report.spectrum.hypotheses_met}, "
             f"fitted exponent {report.fitted_exponent:+.2f} >= 0",
             time.time() - start, 60.0)
