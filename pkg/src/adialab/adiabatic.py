"""Phases, predicted states, convergence studies, and gauge checks.

The slow-driving prediction for a state launched in eigenvector j is

    U_T(s) v_j(0)  ->  exp(-i T nu_j(s)) * exp(-b_j(s)) * v_j(s),

with ``nu_j(s)`` the accumulated eigenvalue integral and
``b_j(s) = int_0^s xi_j^H vdot_j`` the (generally complex) geometric
integral taken with the biorthogonal bracket — never the Euclidean
self-overlap. Everything here measures how fast the left side approaches
the right as T grows, and that the construction does not depend on how
the eigenvectors were scaled.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .calculus import cumulative_integral, fd_derivative
from .errors import (
    BranchAmbiguityError,
    GaugeNotClosedError,
    HypothesesNotMetError,
    PathNotCyclicError,
    QuadratureTooCoarseError,
    VanishingGaugeError,
)
from .hampath import HamiltonianPath, SpectrumCertificate, validate_spectrum
from .propagator import BoundCertificate, PropagatorTrace, bound_certificate, propagate
from .spectral import EigenPath, continue_eigenpath, eigenpath_derivative

__all__ = [
    "PhaseRecord",
    "ConvergenceReport",
    "CyclicPhaseSplit",
    "phase_record",
    "dynamic_phase",
    "berry_phase",
    "predicted_state",
    "adiabatic_error",
    "convergence_study",
    "gauge_invariance_check",
    "cyclic_phase_extract",
    "random_gauge_scalar",
]


@dataclass
class PhaseRecord:
    """Accumulated dynamic and geometric integrals for one label.

    ``nu`` is stored complex so diagnostic (broken-hypothesis) runs stay
    meaningful; for certified paths its imaginary part is numerically
    zero. ``berry`` is genuinely complex: its real part moves amplitudes,
    its imaginary part phases. ``discrete_berry`` is the extrapolated
    log-overlap product at s = 1, an independent cross-check on the
    quadrature route.
    """

    j: int
    grid: np.ndarray
    nu: np.ndarray
    berry: np.ndarray
    discrete_berry: complex
    discrete_berry_raw: complex
    nu_refine_error: float
    berry_refine_error: float
    meta: dict = field(default_factory=dict)

    def _index(self, s: float) -> int:
        m = len(self.grid) - 1
        k = int(round(s * m))
        if not 0 <= k <= m or abs(self.grid[k] - s) > 1e-9:
            raise ValueError(f"s = {s} is not a node of the phase grid")
        return k

    def dynamic_phase(self, s: float = 1.0) -> float:
        return float(self.nu[self._index(s)].real)

    def dynamic_integral(self, s: float = 1.0) -> complex:
        return complex(self.nu[self._index(s)])

    def berry_integral(self, s: float = 1.0) -> complex:
        return complex(self.berry[self._index(s)])

    def to_dict(self) -> dict:
        return {
            "label": self.j,
            "dynamic_phase_end": self.dynamic_phase(1.0),
            "berry_end": {"re": float(self.berry[-1].real),
                          "im": float(self.berry[-1].imag)},
            "discrete_berry": {"re": float(np.real(self.discrete_berry)),
                               "im": float(np.imag(self.discrete_berry))},
            "nu_refine_error": self.nu_refine_error,
            "berry_refine_error": self.berry_refine_error,
        }


def _berry_integrand(ep: EigenPath, j: int, fd_order: int = 4) -> np.ndarray:
    if ep.vdots is None or ep.meta.get("vdot_order") != fd_order:
        eigenpath_derivative(ep, fd_order=fd_order)
    return np.einsum("ki,ki->k", ep.Xi[:, :, j].conj(), ep.vdots[:, :, j])


def _log_overlap_sums(vecs: np.ndarray, duals: np.ndarray, branch_tol: float = 0.5):
    """Single-step log-overlap sums at strides 1, 2, 4 (where divisible).

    ``vecs``/``duals`` are (M+1, n) samples of one label. The stride-1
    overlaps must stay within ``branch_tol`` of 1 for the principal log
    branch to be trustworthy.
    """
    m = len(vecs) - 1
    ov = np.einsum("ki,ki->k", duals[:-1].conj(), vecs[1:])
    if np.abs(ov - 1.0).max() > branch_tol:
        raise BranchAmbiguityError(
            f"single-step overlap strayed {np.abs(ov - 1.0).max():.3f} from 1; "
            "refine the grid before trusting the log branch"
        )
    sums = {1: complex(np.sum(np.log(ov)))}
    for stride in (2, 4):
        if m % stride == 0:
            ovs = np.einsum("ki,ki->k", duals[:-stride:stride].conj(), vecs[stride::stride])
            sums[stride] = complex(np.sum(np.log(ovs)))
    return sums


def _extrapolate_log_product(sums: dict) -> complex:
    """Eliminate the O(h) and O(h^2) terms of the log-overlap sum."""
    if 2 not in sums:
        return sums[1]
    r1 = 2.0 * sums[1] - sums[2]
    if 4 not in sums:
        return r1
    r2 = 2.0 * sums[2] - sums[4]
    return (4.0 * r1 - r2) / 3.0


def _refine_error(samples: np.ndarray, grid: np.ndarray) -> float:
    full = cumulative_integral(samples, grid)[-1]
    half = cumulative_integral(samples[::2], grid[::2])[-1]
    return float(np.abs(full - half))


def phase_record(ep: EigenPath, j: int, t_budget: float | None = None,
                 fd_order: int = 4) -> PhaseRecord:
    """Dynamic and geometric integrals for label j along the eigenpath.

    ``t_budget`` (largest T the phases will multiply) triggers the
    quadrature budget check: the refinement estimate of the dynamic
    integral must stay below 0.01 / t_budget so the phase T*nu is
    accurate to well under a radian. Derivative estimates default to
    fourth order here: second-order stencils leak an O(h^2) spurious
    real part into the geometric integrand, visible against the 1e-8
    purity of the Hermitian case at practical grids.
    """
    if ep.grid_size % 2:
        raise ValueError("phase quadrature wants an even interval count")
    lam = ep.lambdas[:, j]
    nu = cumulative_integral(lam, ep.grid)
    nu_err = _refine_error(lam, ep.grid)
    if t_budget is not None and nu_err > 0.01 / t_budget:
        raise QuadratureTooCoarseError(
            f"dynamic-phase refinement estimate {nu_err:.3e} exceeds the "
            f"0.01/T budget {0.01 / t_budget:.3e}; densify the eigenpath grid"
        )
    g = _berry_integrand(ep, j, fd_order=fd_order)
    berry = cumulative_integral(g, ep.grid)
    sums = _log_overlap_sums(ep.V[:, :, j], ep.Xi[:, :, j])
    return PhaseRecord(
        j=j, grid=ep.grid, nu=nu, berry=berry,
        discrete_berry=_extrapolate_log_product(sums),
        discrete_berry_raw=sums[1],
        nu_refine_error=nu_err,
        berry_refine_error=_refine_error(g, ep.grid),
        meta={"vdot_order": ep.meta.get("vdot_order", 2)},
    )


def dynamic_phase(ep: EigenPath, j: int, s: float = 1.0,
                  t_budget: float | None = None) -> float:
    """Accumulated eigenvalue integral; requires a numerically real spectrum."""
    rec = phase_record(ep, j, t_budget=t_budget)
    value = rec.dynamic_integral(s)
    scale = max(1.0, float(np.abs(ep.lambdas[:, j]).max()))
    if abs(value.imag) > 1e-8 * scale:
        raise ValueError(
            f"dynamic phase has imaginary part {value.imag:.3e}; spectrum is "
            "not real — certify hypotheses or use diagnostic tooling"
        )
    return float(value.real)


def berry_phase(ep: EigenPath, j: int, s: float = 1.0) -> complex:
    """Complex geometric integral b_j(s); the geometric factor is exp(-b)."""
    rec = phase_record(ep, j)
    return rec.berry_integral(s)


def predicted_state(ep: EigenPath, phases: PhaseRecord, T: float, j: int,
                    s: float = 1.0) -> np.ndarray:
    """Slow-driving prediction exp(-i T nu_j(s)) exp(-b_j(s)) v_j(s)."""
    k = ep.index_of(s)
    factor = np.exp(-1j * T * phases.dynamic_integral(s)) * np.exp(-phases.berry_integral(s))
    return factor * ep.V[k, :, j]


def adiabatic_error(path: HamiltonianPath, T: float, j: int, s: float = 1.0,
                    tol: float = 1e-9, *, grid_size: int = 1024,
                    ep: EigenPath | None = None,
                    phases: PhaseRecord | None = None,
                    order: int = 2,
                    trace: PropagatorTrace | None = None) -> float:
    """|| U_T(s) v_j(0) - prediction ||_2 with integrator error held below tol.

    ``s`` must land on both the trace's check nodes and the eigenpath grid;
    multiples of 1/8 (default 1.0) always do.
    """
    if ep is None:
        ep = continue_eigenpath(path, grid_size)
    if phases is None:
        phases = phase_record(ep, j, t_budget=T)
    if trace is None:
        trace = propagate(path, T, tol, order=order)
    u_s, _ = trace.at(s)
    evolved = u_s @ ep.V[0, :, j]
    return float(np.linalg.norm(evolved - predicted_state(ep, phases, T, j, s)))


@dataclass
class ConvergenceReport:
    """Per-T adiabatic errors, the fitted decay exponent, and context."""

    j: int
    s_eval: float
    T_list: tuple
    errors: np.ndarray
    fitted_exponent: float
    rate_measurable: bool
    diagnostic: bool
    phases: PhaseRecord
    bound: BoundCertificate
    spectrum: SpectrumCertificate
    meta: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "label": self.j,
            "s_eval": self.s_eval,
            "T_list": list(self.T_list),
            "errors": [float(e) for e in self.errors],
            "fitted_exponent": self.fitted_exponent,
            "rate_measurable": self.rate_measurable,
            "diagnostic": self.diagnostic,
            "phases": self.phases.to_dict(),
            "bound": self.bound.to_dict(),
            "spectrum": self.spectrum.to_dict(),
            "min_gap": self.spectrum.min_gap,
        }


def _fit_exponent(T_list, errors) -> float:
    logs = np.log(np.maximum(np.asarray(errors, dtype=float), 1e-300))
    a = np.vstack([np.log(np.asarray(T_list, dtype=float)), np.ones(len(T_list))]).T
    slope = np.linalg.lstsq(a, logs, rcond=None)[0][0]
    return float(slope)


def convergence_study(path: HamiltonianPath, j: int, T_list, s: float = 1.0, *,
                      grid_size: int = 2048, spectrum_grid: int = 64,
                      tol: float | None = None, gap_min: float | None = None,
                      diagnostic: bool = False, order: int = 2,
                      include_bound: bool = True) -> ConvergenceReport:
    """Measure the adiabatic error across a T sweep and fit its decay.

    The integrator tolerance follows the expected error down (pilot run
    at the smallest T, then tol_T ~ eps_est(T)/20) so integrator bias
    never masks the physical rate. Hypothesis failures raise unless
    ``diagnostic`` is set, in which case the report is produced anyway
    and labeled. The fit is a plain least squares of log eps on log T
    over every requested T.
    """
    T_list = tuple(float(t) for t in T_list)
    if len(T_list) < 4:
        raise ValueError("convergence studies need at least 4 T values")
    if any(t <= 0 for t in T_list) or any(
            b <= a for a, b in zip(T_list, T_list[1:])):
        raise ValueError("T_list must be positive and strictly increasing")
    cert = validate_spectrum(path, spectrum_grid, gap_min=gap_min)
    if not cert.hypotheses_met and not diagnostic:
        raise HypothesesNotMetError(
            f"spectrum certificate failed (min_gap={cert.min_gap:.3e}, "
            f"max_imag={cert.max_imag:.3e}); rerun with diagnostic=True to study it"
        )
    ep = continue_eigenpath(path, grid_size, gap_min=gap_min)
    phases = phase_record(ep, j, t_budget=max(T_list))
    bound = bound_certificate(path, grid_size, ep=ep) if include_bound else \
        BoundCertificate()
    pilot_tol = tol if tol is not None else 1e-7
    errors = []
    per_t = {}
    richardson = []
    eps_pilot = None
    for t in T_list:
        if tol is not None:
            tol_t = tol
        elif diagnostic or eps_pilot is None:
            tol_t = pilot_tol
        else:
            tol_t = min(1e-6, max(1e-11, eps_pilot * T_list[0] / t / 20.0))
        trace = propagate(path, t, tol_t, order=order,
                          tol_scale="relative" if diagnostic else "absolute")
        eps = adiabatic_error(path, t, j, s, tol_t, ep=ep, phases=phases,
                              trace=trace)
        if eps_pilot is None:
            eps_pilot = max(eps, 1e-12)
        errors.append(eps)
        per_t[t] = (trace.sup_U, trace.sup_Uinv)
        richardson.append(trace.richardson_error)
    errors = np.asarray(errors)
    noise_floor = max(50.0 * max(richardson), 1e-11)
    measurable = bool(errors.max() > noise_floor)
    bound = BoundCertificate(T_list=T_list, per_T=per_t,
                             sup_U=max(v[0] for v in per_t.values()),
                             sup_Uinv=max(v[1] for v in per_t.values())
                             ).merged_with(bound)
    return ConvergenceReport(
        j=j, s_eval=s, T_list=T_list, errors=errors,
        fitted_exponent=_fit_exponent(T_list, errors),
        rate_measurable=measurable, diagnostic=bool(diagnostic or not cert.hypotheses_met),
        phases=phases, bound=bound, spectrum=cert,
        meta={"grid_size": grid_size, "order": order,
              "noise_floor": noise_floor, "richardson": richardson},
    )


def _as_gauge_callables(mu, mudot):
    if isinstance(mu, tuple) and len(mu) == 2 and callable(mu[0]):
        return mu[0], mu[1]
    if callable(mu):
        return mu, mudot
    raise TypeError("mu must be a callable (or a (mu, mudot) pair)")


def random_gauge_scalar(rng: np.random.Generator):
    """Smooth nonvanishing random gauge scalar with its analytic derivative.

    Modulus stays in [0.3, 2.2] by construction; the phase winds up to one
    full turn. Returns (mu, mudot) callables on [0, 1].
    """
    a = rng.uniform(0.8, 1.6)
    b = rng.uniform(-0.25, 0.25)
    c = rng.uniform(-0.25, 0.25)
    phi = rng.uniform(0.0, 2.0 * np.pi)
    w = rng.uniform(-1.0, 1.0)

    def mu(s):
        s = np.asarray(s, dtype=float)
        return (a + b * s + c * np.sin(np.pi * s + phi)) * np.exp(2j * np.pi * w * s)

    def mudot(s):
        s = np.asarray(s, dtype=float)
        radial = b + c * np.pi * np.cos(np.pi * s + phi)
        base = a + b * s + c * np.sin(np.pi * s + phi)
        return (radial + base * 2j * np.pi * w) * np.exp(2j * np.pi * w * s)

    return mu, mudot


def gauge_invariance_check(path: HamiltonianPath, j: int, mu, T: float, *,
                           mudot=None, s: float = 1.0, grid_size: int = 2048,
                           fd_order: int = 4, ep: EigenPath | None = None,
                           coeff: complex = 1.0) -> float:
    """Discrepancy between predictions computed in two eigenvector scalings.

    Reference route uses (v_j, xi_j); the alternative rescales
    ``psi_j = mu v_j`` with dual ``phi_j = xi_j / conj(mu)`` and predicts
    the same initial state ``coeff * v_j(0)``. The return value is the
    2-norm difference of the two predicted evolved states at ``s``; the
    scaling identity makes it vanish up to quadrature error.

    ``mu`` is a callable (or (mu, mudot) pair); when the derivative is
    available the rescaled frame differentiates by product rule against
    the shared eigenvector derivative estimates, otherwise fourth-order
    differences act on the sampled products directly.
    """
    mu_fn, mudot_fn = _as_gauge_callables(mu, mudot)
    if ep is None:
        ep = continue_eigenpath(path, grid_size)
    if ep.vdots is None or ep.meta.get("vdot_order") != fd_order:
        eigenpath_derivative(ep, fd_order=fd_order)
    grid = ep.grid
    h = float(grid[1] - grid[0])
    mus = np.asarray(mu_fn(grid), dtype=complex)
    if np.abs(mus).min() < 1e-12:
        raise VanishingGaugeError(
            f"|mu| reaches {np.abs(mus).min():.3e}; gauge scalars must not vanish"
        )
    k = ep.index_of(s)
    vj = ep.V[:, :, j]
    xij = ep.Xi[:, :, j]
    vdj = ep.vdots[:, :, j]
    lam = ep.lambdas[:, j]
    nu = cumulative_integral(lam, grid)
    dyn = np.exp(-1j * T * nu[k])

    b_ref = cumulative_integral(np.einsum("ki,ki->k", xij.conj(), vdj), grid)
    pred_ref = coeff * dyn * np.exp(-b_ref[k]) * vj[k]

    psi = mus[:, None] * vj
    if mudot_fn is not None:
        psidot = np.asarray(mudot_fn(grid), dtype=complex)[:, None] * vj + mus[:, None] * vdj
    else:
        psidot = fd_derivative(psi, h, order=fd_order)
    integrand = np.einsum("ki,ki->k", xij.conj(), psidot) / mus
    b_alt = cumulative_integral(integrand, grid)
    pred_alt = (coeff / mus[0]) * dyn * np.exp(-b_alt[k]) * psi[k]
    return float(np.linalg.norm(pred_alt - pred_ref))


@dataclass
class CyclicPhaseSplit:
    """Loop overlap factored into dynamic and geometric parts."""

    j: int
    T: float
    total: complex
    dynamic_factor: complex
    berry_factor: complex
    residual: float
    wilson_factor: complex
    wilson_factor_raw: complex
    closure_defect: float
    closure_phase: float
    meta: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        c = lambda z: {"re": float(np.real(z)), "im": float(np.imag(z))}
        return {
            "label": self.j, "T": self.T, "total": c(self.total),
            "dynamic_factor": c(self.dynamic_factor),
            "berry_factor": c(self.berry_factor),
            "residual": self.residual,
            "wilson_factor": c(self.wilson_factor),
            "closure_defect": self.closure_defect,
            "closure_phase": self.closure_phase,
        }


def cyclic_phase_extract(path: HamiltonianPath, j: int, T: float, *,
                         grid_size: int = 4096, tol: float = 1e-8,
                         fd_order: int = 4, order: int = 4,
                         ep: EigenPath | None = None,
                         trace: PropagatorTrace | None = None) -> CyclicPhaseSplit:
    """Split the loop overlap into dynamic and geometric factors.

    Requires a cyclic path. The continued gauge generally returns to
    ``e^{i alpha} v_j(0)``; closing it multiplies both v_j and xi_j by
    ``e^{-i alpha s}``, after which the overlap
    ``f = xi_j(0)^H U_T(1) v_j(0)`` should factor as
    ``exp(-i T nu_j(1)) * exp(-b_j(1))`` up to O(1/T). The geometric
    factor is cross-checked by the extrapolated log-overlap product
    around the closed loop. Winding loops drive the integrator hard, so
    the fourth-order generator is the default here.
    """
    if not path.cyclic:
        raise PathNotCyclicError(f"path {path.family_tag!r} is not cyclic")
    if grid_size % 4:
        raise ValueError("cyclic extraction wants a grid size divisible by 4")
    if ep is None:
        ep = continue_eigenpath(path, grid_size)
    grid = ep.grid
    h = float(grid[1] - grid[0])
    vj = ep.V[:, :, j]
    xij = ep.Xi[:, :, j]
    close = complex(np.vdot(vj[0], vj[-1]))
    if abs(abs(close) - 1.0) > 1e-8:
        raise GaugeNotClosedError(
            f"endpoint eigenvectors are not parallel (|overlap| = {abs(close):.12f})"
        )
    alpha = float(np.angle(close))
    twist = np.exp(-1j * alpha * grid)
    vj = vj * twist[:, None]
    xij = xij * twist[:, None]
    defect = float(np.linalg.norm(vj[-1] - vj[0]))
    if defect > 1e-10:
        raise GaugeNotClosedError(
            f"gauge closure defect {defect:.3e} exceeds 1e-10"
        )
    vdj = fd_derivative(vj, h, order=fd_order)
    b = cumulative_integral(np.einsum("ki,ki->k", xij.conj(), vdj), grid)
    nu = cumulative_integral(ep.lambdas[:, j], grid)
    dyn = complex(np.exp(-1j * T * nu[-1]))
    berry = complex(np.exp(-b[-1]))
    sums = _log_overlap_sums(vj, xij)
    wilson = complex(np.exp(-_extrapolate_log_product(sums)))
    wilson_raw = complex(np.exp(-sums[1]))
    if trace is None:
        trace = propagate(path, T, tol, order=order)
    u1, _ = trace.at(1.0)
    total = complex(xij[0].conj() @ (u1 @ vj[0]))
    return CyclicPhaseSplit(
        j=j, T=float(T), total=total, dynamic_factor=dyn, berry_factor=berry,
        residual=float(abs(total - dyn * berry)),
        wilson_factor=wilson, wilson_factor_raw=wilson_raw,
        closure_defect=defect, closure_phase=alpha,
        meta={"grid_size": grid_size, "nu_end": complex(nu[-1]),
              "berry_integral_end": complex(b[-1]),
              "richardson_error": trace.richardson_error},
    )
