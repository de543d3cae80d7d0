"""Experiment configuration: JSON schema, defaults, validation."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .errors import ConfigError
from .hampath import BUILTIN_FAMILIES

__all__ = ["ExperimentConfig", "JOBS", "SCHEMA_VERSION"]

JOBS = ("verify", "sweep", "phase", "bound", "diagnostic")
SCHEMA_VERSION = 1

_DEFAULT_T = {
    "verify": (50.0, 100.0, 200.0, 400.0, 800.0),
    "sweep": (50.0, 100.0, 200.0, 400.0, 800.0),
    "phase": (100.0, 200.0, 400.0),
    "bound": (25.0, 50.0, 100.0, 200.0, 400.0, 800.0),
    "diagnostic": (10.0, 20.0, 40.0, 80.0),
}


@dataclass
class ExperimentConfig:
    """Validated, self-describing run description.

    Mirrors the JSON schema one-to-one so a report's config echo is
    enough to reproduce the run.
    """

    job: str
    family: str
    params: dict = field(default_factory=dict)
    label: int = 0
    T_list: tuple = ()
    s_eval: float = 1.0
    eigenpath_grid: int = 2048
    spectrum_grid: int = 64
    cyclic_grid: int = 4096
    integrator_tol: float | None = None
    integrator_order: int = 2
    gap_min: float | None = None
    seed: int = 0
    out_format: str = "csv"
    out_path: str | None = None
    figures: bool = True
    schema_version: int = SCHEMA_VERSION

    @property
    def diagnostic(self) -> bool:
        return self.job == "diagnostic"

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        if not isinstance(raw, dict):
            raise ConfigError("<root>", "config must be a JSON object")
        known = {
            "schema_version", "job", "path", "label", "T_list", "s_eval",
            "grids", "tolerances", "seed", "output",
        }
        for key in raw:
            if key not in known:
                raise ConfigError(key, "unknown top-level key")
        version = raw.get("schema_version", SCHEMA_VERSION)
        if version != SCHEMA_VERSION:
            raise ConfigError("schema_version",
                              f"unsupported version {version!r} (expected {SCHEMA_VERSION})")
        job = raw.get("job")
        if job not in JOBS:
            raise ConfigError("job", f"must be one of {JOBS}, got {job!r}")
        path = raw.get("path")
        if not isinstance(path, dict) or "family" not in path:
            raise ConfigError("path", "must be an object with a 'family' key")
        family = path["family"]
        if family not in BUILTIN_FAMILIES:
            raise ConfigError("path.family",
                              f"unknown family {family!r}; choose from "
                              f"{sorted(BUILTIN_FAMILIES)}")
        params = path.get("params", {})
        if not isinstance(params, dict):
            raise ConfigError("path.params", "must be an object")
        label = raw.get("label", 0)
        if not isinstance(label, int) or label < 0:
            raise ConfigError("label", "must be a non-negative integer")
        t_list = raw.get("T_list", list(_DEFAULT_T[job]))
        if not isinstance(t_list, (list, tuple)) or \
                not all(isinstance(t, (int, float)) for t in t_list):
            raise ConfigError("T_list", "must be a list of numbers")
        t_list = tuple(float(t) for t in t_list)
        if any(t <= 0 for t in t_list):
            raise ConfigError("T_list", "all entries must be positive")
        if any(b <= a for a, b in zip(t_list, t_list[1:])):
            raise ConfigError("T_list", "entries must be strictly increasing")
        min_len = {"verify": 4, "diagnostic": 4, "bound": 1, "phase": 1, "sweep": 0}
        if len(t_list) < min_len[job]:
            raise ConfigError("T_list",
                              f"{job} jobs need at least {min_len[job]} T values")
        s_eval = raw.get("s_eval", 1.0)
        if not isinstance(s_eval, (int, float)) or not 0.0 < s_eval <= 1.0:
            raise ConfigError("s_eval", "must lie in (0, 1]")
        if abs(s_eval * 8 - round(s_eval * 8)) > 1e-12:
            raise ConfigError("s_eval", "must be a multiple of 1/8 so evaluation "
                                        "nodes are shared between grids")
        grids = raw.get("grids", {})
        if not isinstance(grids, dict):
            raise ConfigError("grids", "must be an object")
        eigenpath_grid = grids.get("eigenpath", 2048)
        spectrum_grid = grids.get("spectrum", 64)
        cyclic_grid = grids.get("cyclic", 4096)
        if not isinstance(eigenpath_grid, int) or eigenpath_grid < 16:
            raise ConfigError("grids.eigenpath", "must be an integer >= 16")
        if eigenpath_grid % 8:
            raise ConfigError("grids.eigenpath", "must be divisible by 8")
        if not isinstance(spectrum_grid, int) or spectrum_grid < 32:
            raise ConfigError("grids.spectrum", "must be an integer >= 32")
        if not isinstance(cyclic_grid, int) or cyclic_grid < 16 or cyclic_grid % 4:
            raise ConfigError("grids.cyclic", "must be an integer >= 16 divisible by 4")
        tols = raw.get("tolerances", {})
        if not isinstance(tols, dict):
            raise ConfigError("tolerances", "must be an object")
        tol = tols.get("integrator")
        if tol is not None and (not isinstance(tol, (int, float)) or tol <= 0):
            raise ConfigError("tolerances.integrator", "must be positive")
        order = tols.get("order", 2)
        if order not in (2, 4):
            raise ConfigError("tolerances.order", "must be 2 or 4")
        gap_min = tols.get("gap_min")
        if gap_min is not None and (not isinstance(gap_min, (int, float)) or gap_min <= 0):
            raise ConfigError("tolerances.gap_min", "must be positive")
        seed = raw.get("seed", 0)
        if not isinstance(seed, int):
            raise ConfigError("seed", "must be an integer")
        output = raw.get("output", {})
        if not isinstance(output, dict):
            raise ConfigError("output", "must be an object")
        fmt = output.get("format", "csv")
        if fmt not in ("csv", "json"):
            raise ConfigError("output.format", "must be 'csv' or 'json'")
        out_path = output.get("path")
        if out_path is not None and not isinstance(out_path, str):
            raise ConfigError("output.path", "must be a string path")
        figures = output.get("figures", True)
        if not isinstance(figures, bool):
            raise ConfigError("output.figures", "must be a boolean")
        return cls(
            job=job, family=family, params=params, label=label, T_list=t_list,
            s_eval=float(s_eval), eigenpath_grid=eigenpath_grid,
            spectrum_grid=spectrum_grid, cyclic_grid=cyclic_grid,
            integrator_tol=None if tol is None else float(tol),
            integrator_order=order,
            gap_min=None if gap_min is None else float(gap_min),
            seed=seed, out_format=fmt, out_path=out_path, figures=figures,
            schema_version=version,
        )

    @classmethod
    def from_file(cls, filename: str) -> "ExperimentConfig":
        try:
            with open(filename, "r", encoding="utf-8") as fh:
                raw = json.load(fh)
        except OSError as exc:
            raise ConfigError("<file>", f"cannot read {filename}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError("<file>", f"invalid JSON in {filename}: {exc}") from exc
        return cls.from_dict(raw)

    def to_dict(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "job": self.job,
            "path": {"family": self.family, "params": self.params},
            "label": self.label,
            "T_list": list(self.T_list),
            "s_eval": self.s_eval,
            "grids": {"eigenpath": self.eigenpath_grid,
                      "spectrum": self.spectrum_grid,
                      "cyclic": self.cyclic_grid},
            "tolerances": {"integrator": self.integrator_tol,
                           "order": self.integrator_order,
                           "gap_min": self.gap_min},
            "seed": self.seed,
            "output": {"format": self.out_format, "path": self.out_path,
                       "figures": self.figures},
        }
