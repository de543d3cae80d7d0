"""Matplotlib figure rendering for report payloads.

Figures are written next to the delimited report with suffixed names;
reports stay fully consumable without them.
"""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = ["render_report_figures"]


def _convergence_figure(payload, stem):
    t = np.asarray(payload["T_list"], dtype=float)
    eps = np.asarray(payload["errors"], dtype=float)
    if len(t) == 0 or not np.any(eps > 0):
        return None
    fig, ax = plt.subplots(figsize=(5.0, 3.6))
    ax.loglog(t, eps, "o-", color="tab:blue", label="measured error")
    slope = payload.get("fitted_exponent")
    if slope is not None and len(t) > 1:
        ref = eps[0] * (t / t[0]) ** slope
        ax.loglog(t, ref, "--", color="tab:gray",
                  label=f"fit slope {slope:+.3f}")
        guide = eps[0] * t[0] / t
        ax.loglog(t, guide, ":", color="tab:red", label="1/T guide")
    ax.set_xlabel("time scale T")
    ax.set_ylabel("state error at s_eval")
    ax.legend(fontsize=8)
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    out = f"{stem}_convergence.png"
    fig.savefig(out, dpi=150)
    plt.close(fig)
    return out


def _bound_figure(payload, stem):
    bound = payload.get("bound") or {}
    per_t = bound.get("per_T") or {}
    if not per_t:
        return None
    t = sorted(float(k) for k in per_t)
    sup_u = np.array([per_t[repr(v)][0] for v in t])
    sup_ui = np.array([per_t[repr(v)][1] for v in t])
    fig, ax = plt.subplots(figsize=(5.0, 3.6))
    ax.semilogx(t, sup_u, "o-", label="sup ||U_T||")
    ax.semilogx(t, sup_ui, "s-", label="sup ||U_T^-1||")
    if bound.get("bound_U") is not None:
        ax.axhline(bound["bound_U"], color="tab:red", ls="--",
                   label="certified bound (U)")
    if bound.get("bound_Uinv") is not None:
        ax.axhline(bound["bound_Uinv"], color="tab:orange", ls=":",
                   label="certified bound (U^-1)")
    ax.set_xlabel("time scale T")
    ax.set_ylabel("spectral norm")
    ax.legend(fontsize=8)
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    out = f"{stem}_bounds.png"
    fig.savefig(out, dpi=150)
    plt.close(fig)
    return out


def _phase_figure(payload, stem):
    traj = payload.get("phase_trajectory")
    if not traj:
        return None
    s = np.asarray(traj["s"], dtype=float)
    fig, axes = plt.subplots(1, 2, figsize=(8.0, 3.2))
    axes[0].plot(s, traj["dynamic"], color="tab:blue")
    axes[0].set_xlabel("s")
    axes[0].set_ylabel("dynamic phase")
    axes[1].plot(s, traj["berry_re"], label="Re geometric integral")
    axes[1].plot(s, traj["berry_im"], label="Im geometric integral")
    axes[1].set_xlabel("s")
    axes[1].legend(fontsize=8)
    for ax in axes:
        ax.grid(True, alpha=0.3)
    fig.tight_layout()
    out = f"{stem}_phases.png"
    fig.savefig(out, dpi=150)
    plt.close(fig)
    return out


def render_report_figures(envelope, out_path: str) -> list[str]:
    """Render whatever figures the payload supports; returns written paths."""
    stem = os.path.splitext(out_path)[0]
    written = []
    payload = envelope.payload
    if "errors" in payload and "T_list" in payload:
        fig = _convergence_figure(payload, stem)
        if fig:
            written.append(fig)
    if payload.get("bound"):
        fig = _bound_figure(payload, stem)
        if fig:
            written.append(fig)
    if payload.get("phase_trajectory"):
        fig = _phase_figure(payload, stem)
        if fig:
            written.append(fig)
    return written
