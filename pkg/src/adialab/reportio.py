"""Report envelope serialization: JSON (full) and CSV (per-T rows).

Floats are emitted with 17 significant digits in both formats, which is
enough for a bit-exact float64 round trip through the text form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ReportWriteError

__all__ = ["ReportEnvelope", "emit_report", "write_report", "CSV_COLUMNS"]

CSV_COLUMNS = ("T", "epsilon", "sup_U", "sup_Uinv", "re_berry", "im_berry",
               "dyn_phase")


@dataclass
class ReportEnvelope:
    """Self-contained run record: config echo, certificate, payload, timings."""

    job: str
    config: dict
    spectrum: dict
    payload: dict
    version: str
    timings: dict = field(default_factory=dict)
    diagnostic: bool = False
    checks: dict | None = None

    def to_dict(self) -> dict:
        out = {
            "job": self.job,
            "diagnostic": self.diagnostic,
            "tool_version": self.version,
            "config": self.config,
            "spectrum_certificate": self.spectrum,
            "payload": self.payload,
            "timings_s": self.timings,
        }
        if self.checks is not None:
            out["checks"] = self.checks
        return out

    def rows(self) -> list[dict]:
        """Per-(T, s_eval) rows for the delimited format."""
        t_list = self.payload.get("T_list", [])
        errors = self.payload.get("errors")
        per_t = (self.payload.get("bound") or {}).get("per_T", {})
        phases = self.payload.get("phases") or {}
        at_eval = phases.get("at_s_eval") or {
            "re_berry": (phases.get("berry_end") or {}).get("re"),
            "im_berry": (phases.get("berry_end") or {}).get("im"),
            "dyn_phase": phases.get("dynamic_phase_end"),
        }
        rows = []
        for i, t in enumerate(t_list):
            sup = per_t.get(repr(float(t)))
            rows.append({
                "T": float(t),
                "epsilon": None if errors is None else float(errors[i]),
                "sup_U": None if sup is None else float(sup[0]),
                "sup_Uinv": None if sup is None else float(sup[1]),
                "re_berry": at_eval.get("re_berry"),
                "im_berry": at_eval.get("im_berry"),
                "dyn_phase": at_eval.get("dyn_phase"),
            })
        return rows


def _fmt_float(x: float) -> str:
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(float(x), ".17g")


def _json_value(obj, pieces: list, indent: int) -> None:
    pad = "  " * indent
    if obj is None:
        pieces.append("null")
    elif isinstance(obj, bool):
        pieces.append("true" if obj else "false")
    elif isinstance(obj, (int, np.integer)):
        pieces.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x) or math.isinf(x):
            pieces.append(f"\"{_fmt_float(x)}\"")
        else:
            pieces.append(_fmt_float(x))
    elif isinstance(obj, (complex, np.complexfloating)):
        _json_value({"re": float(obj.real), "im": float(obj.imag)}, pieces, indent)
    elif isinstance(obj, str):
        import json as _json
        pieces.append(_json.dumps(obj))
    elif isinstance(obj, dict):
        if not obj:
            pieces.append("{}")
            return
        pieces.append("{\n")
        for i, (key, val) in enumerate(obj.items()):
            import json as _json
            pieces.append(f"{pad}  {_json.dumps(str(key))}: ")
            _json_value(val, pieces, indent + 1)
            pieces.append(",\n" if i < len(obj) - 1 else "\n")
        pieces.append(pad + "}")
    elif isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            pieces.append("[]")
            return
        pieces.append("[")
        for i, val in enumerate(seq):
            _json_value(val, pieces, indent + 1)
            if i < len(seq) - 1:
                pieces.append(", ")
        pieces.append("]")
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__} into a report")


def emit_report(envelope: ReportEnvelope, fmt: str) -> str:
    """Serialize the envelope: 'json' (full nested) or 'csv' (per-T rows)."""
    if fmt == "json":
        pieces: list[str] = []
        _json_value(envelope.to_dict(), pieces, 0)
        return "".join(pieces) + "\n"
    if fmt == "csv":
        lines = [",".join(CSV_COLUMNS)]
        for row in envelope.rows():
            cells = []
            for col in CSV_COLUMNS:
                val = row[col]
                cells.append("" if val is None else _fmt_float(val))
            lines.append(",".join(cells))
        return "\n".join(lines) + "\n"
    raise ValueError(f"unknown report format {fmt!r}")


def write_report(envelope: ReportEnvelope, out_path: str, fmt: str) -> None:
    text = emit_report(envelope, fmt)
    try:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text)
    except OSError as exc:
        raise ReportWriteError(f"cannot write report to {out_path}: {exc}") from exc
