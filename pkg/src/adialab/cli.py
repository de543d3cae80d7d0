"""Configuration-driven experiment runner and command-line interface.

Subcommands (verify | sweep | phase | bound | diagnostic) dispatch to the
library pipelines, write a CSV or JSON report, and render figures next
to it unless asked not to. Exit codes: 0 success, 1 module error,
2 config error, 3 hypothesis failure outside diagnostic mode.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
import time

import numpy as np

from . import __version__
from .adiabatic import (
    convergence_study,
    cyclic_phase_extract,
    gauge_invariance_check,
    phase_record,
    random_gauge_scalar,
)
from .config import ExperimentConfig, JOBS
from .errors import (
    AdialabError,
    ConfigError,
    HypothesesNotMetError,
    InvalidParamsError,
)
from .hampath import make_builtin_path, validate_spectrum
from .propagator import certify_bounds
from .reportio import ReportEnvelope, emit_report, write_report
from .spectral import continue_eigenpath, eigenpath_derivative

__all__ = ["run_experiment", "main", "entrypoint"]

RATE_TOLERANCE = 0.15
GAUGE_TOLERANCE = 1e-8


class _Stages:
    """Wall-clock bookkeeping per pipeline stage."""

    def __init__(self):
        self.timings = {}

    def run(self, name, fn):
        start = time.perf_counter()
        try:
            return fn()
        except (ConfigError, HypothesesNotMetError):
            raise
        except AdialabError as exc:
            raise type(exc)(f"[stage {name}] {exc}") from exc
        finally:
            self.timings[name] = round(time.perf_counter() - start, 6)


def _build_path(config: ExperimentConfig):
    try:
        return make_builtin_path(config.family, **config.params)
    except InvalidParamsError as exc:
        raise ConfigError("path.params", str(exc)) from exc


def _phase_trajectory(phases, max_nodes: int = 513) -> dict:
    stride = max(1, (len(phases.grid) - 1) // (max_nodes - 1))
    sl = slice(None, None, stride)
    return {
        "s": [float(x) for x in phases.grid[sl]],
        "dynamic": [float(x) for x in phases.nu[sl].real],
        "berry_re": [float(x) for x in phases.berry[sl].real],
        "berry_im": [float(x) for x in phases.berry[sl].imag],
    }


def _study_payload(report) -> dict:
    payload = report.to_dict()
    payload["phase_trajectory"] = _phase_trajectory(report.phases)
    berry_eval = report.phases.berry_integral(report.s_eval)
    payload["phases"]["at_s_eval"] = {
        "s": report.s_eval,
        "re_berry": float(berry_eval.real),
        "im_berry": float(berry_eval.imag),
        "dyn_phase": float(report.phases.dynamic_integral(report.s_eval).real),
    }
    return payload


def _gauge_spot_checks(config, path, n_draws: int = 2) -> dict:
    rng = np.random.default_rng(config.seed)
    worst = 0.0
    t_ref = max(config.T_list) if config.T_list else 100.0
    for _ in range(n_draws):
        mu, mudot = random_gauge_scalar(rng)
        disc = gauge_invariance_check(path, config.label, mu, t_ref,
                                      mudot=mudot,
                                      grid_size=config.eigenpath_grid)
        worst = max(worst, disc)
    return {"draws": n_draws, "max_discrepancy": worst,
            "ok": worst <= GAUGE_TOLERANCE}


def run_experiment(config: ExperimentConfig) -> ReportEnvelope:
    """Dispatch one configured job and assemble its report envelope.

    Deterministic given the config (the seed covers the randomized gauge
    spot checks). Diagnostic jobs complete even when the certificate
    fails; every other job raises HypothesesNotMetError in that case.
    """
    stages = _Stages()
    path = stages.run("build_path", lambda: _build_path(config))
    cert = stages.run("validate_spectrum",
                      lambda: validate_spectrum(path, config.spectrum_grid,
                                                gap_min=config.gap_min))
    if not cert.hypotheses_met and not config.diagnostic:
        raise HypothesesNotMetError(
            f"spectrum certificate failed (min_gap={cert.min_gap:.3e}, "
            f"max_imag={cert.max_imag:.3e}); use the diagnostic subcommand "
            "to study broken-hypothesis paths"
        )
    checks = None
    if config.job == "sweep" and not config.T_list:
        payload = {"T_list": [], "errors": [], "phases": None, "bound": None}
    elif config.job in ("verify", "sweep", "diagnostic"):
        report = stages.run("convergence_study", lambda: convergence_study(
            path, config.label, config.T_list, config.s_eval,
            grid_size=config.eigenpath_grid, spectrum_grid=config.spectrum_grid,
            tol=config.integrator_tol, gap_min=config.gap_min,
            diagnostic=config.diagnostic, order=config.integrator_order,
            include_bound=config.job == "verify"))
        payload = _study_payload(report)
        if config.job == "verify":
            gauge = stages.run("gauge_spot_checks",
                               lambda: _gauge_spot_checks(config, path))
            payload["gauge_spot_checks"] = gauge
            rate_ok = (not report.rate_measurable
                       or abs(report.fitted_exponent + 1.0) <= RATE_TOLERANCE)
            checks = {
                "rate_ok": bool(rate_ok),
                "rate_measurable": report.rate_measurable,
                "bound_dominated": report.bound.dominated,
                "gauge_ok": gauge["ok"],
            }
    elif config.job == "phase":
        def run_phase():
            grid = config.cyclic_grid if path.cyclic else config.eigenpath_grid
            ep = continue_eigenpath(path, grid, gap_min=config.gap_min)
            eigenpath_derivative(ep, fd_order=4 if path.cyclic else 2)
            phases = phase_record(ep, config.label,
                                  t_budget=max(config.T_list, default=None)
                                  if config.T_list else None)
            payload = {
                "T_list": list(config.T_list),
                "phases": phases.to_dict(),
                "phase_trajectory": _phase_trajectory(phases),
            }
            if path.cyclic:
                splits = [cyclic_phase_extract(
                    path, config.label, t, grid_size=grid,
                    tol=config.integrator_tol or 1e-8, ep=ep)
                    for t in config.T_list]
                payload["cyclic"] = [s.to_dict() for s in splits]
            return payload
        payload = stages.run("phase_extraction", run_phase)
    elif config.job == "bound":
        cert_b = stages.run("bound_certification", lambda: certify_bounds(
            path, config.T_list, config.integrator_tol or 1e-6,
            grid_size=config.eigenpath_grid, gap_min=config.gap_min,
            order=config.integrator_order))
        payload = {"T_list": list(config.T_list), "bound": cert_b.to_dict()}
        checks = {"bound_dominated": cert_b.dominated}
    else:
        raise ConfigError("job", f"unhandled job {config.job!r}")
    return ReportEnvelope(
        job=config.job, config=config.to_dict(), spectrum=cert.to_dict(),
        payload=payload, version=__version__, timings=stages.timings,
        diagnostic=config.diagnostic or not cert.hypotheses_met, checks=checks,
    )


def _apply_overrides(config: ExperimentConfig, args) -> ExperimentConfig:
    updates = {}
    if args.out is not None:
        updates["out_path"] = args.out
    if args.format is not None:
        updates["out_format"] = args.format
    if args.seed is not None:
        updates["seed"] = args.seed
    if args.figures is not None:
        updates["figures"] = args.figures
    return dataclasses.replace(config, **updates) if updates else config


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="adialab",
        description="Verification laboratory for slow driving of non-Hermitian "
                    "Hamiltonians with real spectra.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "verify": "full verification: rate fit, bounds, gauge spot checks",
        "sweep": "error-vs-T sweep without verification checks",
        "phase": "dynamic/geometric phase extraction (cyclic split if cyclic)",
        "bound": "empirical norm sweep against the certified bound",
        "diagnostic": "run a broken-hypothesis path deliberately",
    }
    for name in JOBS:
        p = sub.add_parser(name, help=helps[name])
        p.add_argument("--config", required=True, help="JSON experiment config")
        p.add_argument("--out", help="report destination (default: stdout)")
        p.add_argument("--format", choices=("csv", "json"),
                       help="override the configured report format")
        p.add_argument("--seed", type=int, help="override the configured seed")
        p.add_argument("--figures", action=argparse.BooleanOptionalAction,
                       default=None,
                       help="render figures beside the report (default: on "
                            "when writing to a file)")
    args = parser.parse_args(argv)
    try:
        config = ExperimentConfig.from_file(args.config)
        if config.job != args.command:
            raise ConfigError(
                "job", f"config says {config.job!r} but subcommand is "
                       f"{args.command!r}")
        config = _apply_overrides(config, args)
        envelope = run_experiment(config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except HypothesesNotMetError as exc:
        print(f"hypothesis failure: {exc}", file=sys.stderr)
        return 3
    except AdialabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    try:
        if config.out_path:
            write_report(envelope, config.out_path, config.out_format)
            print(f"report written to {config.out_path}")
            if config.figures:
                from .figures import render_report_figures
                for fig_path in render_report_figures(envelope, config.out_path):
                    print(f"figure written to {fig_path}")
        else:
            sys.stdout.write(emit_report(envelope, config.out_format))
    except AdialabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


def entrypoint():
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
