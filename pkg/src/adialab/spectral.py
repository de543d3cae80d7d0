"""Biorthogonal eigensystems and smooth eigenpath continuation.

For a diagonalizable H with distinct eigenvalues the right eigenvectors
``v_i`` (columns of V) pair with dual vectors ``xi_i`` (columns of Xi,
rows of V^-1 conjugated) so that ``xi_i^H v_j = delta_ij``. The sum
``sum_i v_i xi_i^H`` resolves the identity, the eigenvalue-weighted sum
resolves H, and the gap-weighted complement is the reduced resolvent.
Continuation tracks labels and a continuity-maximizing phase gauge
along a parameter grid so derivative estimates make sense.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .calculus import fd_derivative
from .errors import GapTooSmallError, MatchingAmbiguousError, SingularMatrixError
from .hampath import HamiltonianPath
from .numkernel import as_complex_matrix, mat_inverse

__all__ = [
    "EigenSystem",
    "EigenPath",
    "biorthogonal_dual",
    "reduced_resolvent",
    "continue_eigenpath",
    "eigenpath_derivative",
]


@dataclass(frozen=True)
class EigenSystem:
    """Labeled eigensystem at one parameter value.

    ``lambdas`` is complex storage; for hypothesis-satisfying paths the
    imaginary parts are numerically zero (the certificate owns that check).
    """

    s: float
    lambdas: np.ndarray
    V: np.ndarray
    Xi: np.ndarray

    @property
    def dim(self) -> int:
        return self.V.shape[0]

    def identity_residual(self) -> float:
        """|| sum_i v_i xi_i^H - I || (completeness of the biorthogonal pair)."""
        n = self.dim
        return float(np.linalg.norm(self.V @ self.Xi.conj().T - np.eye(n), 2))

    def biorthogonality_residual(self) -> float:
        """|| Xi^H V - I ||."""
        n = self.dim
        return float(np.linalg.norm(self.Xi.conj().T @ self.V - np.eye(n), 2))

    def hamiltonian_residual(self, h) -> float:
        """|| sum_i lambda_i v_i xi_i^H - H || relative to ||H||."""
        m = as_complex_matrix(h)
        rebuilt = (self.V * self.lambdas) @ self.Xi.conj().T
        return float(np.linalg.norm(rebuilt - m, 2) / max(np.linalg.norm(m, 2), 1e-300))


def biorthogonal_dual(v) -> np.ndarray:
    """Dual basis Xi with Xi^H = V^-1, so xi_i^H v_j = delta_ij."""
    m = as_complex_matrix(v)
    try:
        inv = mat_inverse(m)
    except SingularMatrixError as exc:
        raise SingularMatrixError(f"eigenbasis is numerically degenerate: {exc}") from exc
    return inv.conj().T


def reduced_resolvent(es: EigenSystem, j: int, gap_min: float = 1e-9) -> np.ndarray:
    """Gap-weighted complement sum_{i != j} (lam_i - lam_j)^-1 v_i xi_i^H.

    Inverts ``H - lam_j`` on the complement of the j-th eigenline:
    ``(H - lam_j) S = I - v_j xi_j^H`` and ``S v_j xi_j^H = 0``.
    """
    lam = es.lambdas
    n = es.dim
    if not 0 <= j < n:
        raise ValueError(f"label {j} out of range for dimension {n}")
    diffs = lam - lam[j]
    gaps = np.abs(np.delete(diffs, j))
    if n > 1 and gaps.min() < gap_min:
        raise GapTooSmallError(
            f"minimum gap to label {j} is {gaps.min():.3e} < gap_min {gap_min:.1e}"
        )
    weights = np.zeros(n, dtype=complex)
    mask = np.arange(n) != j
    weights[mask] = 1.0 / diffs[mask]
    return (es.V * weights) @ es.Xi.conj().T


@dataclass
class EigenPath:
    """Continued eigensystems on a uniform grid with consistent labels.

    ``lambdas[k, j]``, ``V[k, :, j]`` and ``Xi[k, :, j]`` belong to label
    ``j`` at node ``grid[k]``; labels are ordered by (Re, Im) of the
    eigenvalues at s = 0. ``vdots`` holds derivative estimates once
    :func:`eigenpath_derivative` has run.
    """

    grid: np.ndarray
    lambdas: np.ndarray
    V: np.ndarray
    Xi: np.ndarray
    vdots: np.ndarray | None = None
    matching_quality: float = 1.0
    gauge_constant: float = 0.0
    meta: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.V.shape[1]

    @property
    def grid_size(self) -> int:
        return len(self.grid) - 1

    def system(self, k: int) -> EigenSystem:
        return EigenSystem(float(self.grid[k]), self.lambdas[k], self.V[k], self.Xi[k])

    def index_of(self, s: float) -> int:
        """Grid index of the node nearest to s; s must sit on the grid."""
        k = int(round(s * self.grid_size))
        if not 0 <= k <= self.grid_size or abs(self.grid[k] - s) > 1e-9:
            raise ValueError(f"s = {s} is not a node of the eigenpath grid")
        return k


def _match_step(ov_abs: np.ndarray, ambiguity_gap: float):
    """Greedy label assignment from an |overlap| table; returns (perm, quality).

    Rows index previous labels, columns candidate next states. Raises when
    best and runner-up are closer than ``ambiguity_gap`` or two labels
    claim one candidate.
    """
    n = ov_abs.shape[0]
    nxt = np.argmax(ov_abs, axis=1)
    if n > 1:
        part = np.partition(ov_abs, n - 2, axis=1)
        second = part[:, -2]
        best = ov_abs[np.arange(n), nxt]
        margin = best - second
        if margin.min() < ambiguity_gap:
            raise MatchingAmbiguousError(
                f"overlap margin {margin.min():.3f} < {ambiguity_gap}; "
                "grid too coarse near an avoided crossing"
            )
    if len(set(nxt.tolist())) != n:
        raise MatchingAmbiguousError("two labels matched the same next eigenvector")
    quality = float(ov_abs[np.arange(n), nxt].min())
    return nxt, quality


def continue_eigenpath(path: HamiltonianPath, grid_size: int = 256,
                       gap_min: float | None = None,
                       ambiguity_gap: float = 0.1,
                       min_overlap: float = 0.9) -> EigenPath:
    """Eigendecompose H(s) on a uniform grid and stitch labels and phases.

    Per-sample eigensystems are relabeled by maximal biorthogonal overlap
    ``|xi_j(s_k)^H v_i(s_{k+1})|`` against the previous sample, then each
    vector is rescaled by the unit-modulus phase that minimizes
    ``||v_j(s_{k+1}) - v_j(s_k)||``. Raises GapTooSmallError anywhere the
    pairwise eigenvalue separation drops below ``gap_min`` (default
    ``1e-6 * sup_s ||H||``) and MatchingAmbiguousError when labels cannot
    be followed confidently.
    """
    if grid_size < 16:
        raise ValueError("eigenpath grid must have at least 16 intervals")
    s = np.linspace(0.0, 1.0, grid_size + 1)
    hstack = path(s)
    n = path.dim
    lam, vec = np.linalg.eig(hstack)
    vec = vec / np.linalg.norm(vec, axis=1, keepdims=True)
    sup = path.sup_norm()
    eff_gap = gap_min if gap_min is not None else 1e-6 * sup
    if n > 1:
        gaps = np.abs(lam[:, :, None] - lam[:, None, :])
        gaps[:, np.arange(n), np.arange(n)] = np.inf
        worst = float(gaps.min())
        if worst < eff_gap:
            raise GapTooSmallError(
                f"eigenvalue gap {worst:.3e} < gap_min {eff_gap:.3e} on the grid"
            )
    xi_raw = np.linalg.inv(vec).conj().swapaxes(-1, -2)
    # |xi_j(s_k)^H v_i(s_{k+1})| for consecutive raw systems
    ov = np.abs(np.einsum("kij,kil->kjl", xi_raw[:-1].conj(), vec[1:]))
    perms = np.empty((grid_size + 1, n), dtype=int)
    perms[0] = np.lexsort((lam[0].imag, lam[0].real))
    quality = 1.0
    for k in range(grid_size):
        nxt, q = _match_step(ov[k][perms[k], :], ambiguity_gap)
        perms[k + 1] = nxt
        quality = min(quality, q)
    if quality < min_overlap:
        raise MatchingAmbiguousError(
            f"label continuity overlap {quality:.3f} fell below {min_overlap}"
        )
    rows = np.arange(grid_size + 1)[:, None, None]
    cols = np.arange(n)[None, :, None]
    lamL = lam[np.arange(grid_size + 1)[:, None], perms]
    VL = vec[rows, cols, perms[:, None, :]]
    # continuity-maximizing phases: alpha_{k+1} = alpha_k - arg<v_k, w_{k+1}>
    cons = np.einsum("kij,kij->kj", VL[:-1].conj(), VL[1:])
    alpha = np.zeros((grid_size + 1, n))
    alpha[1:] = -np.cumsum(np.angle(cons), axis=0)
    VL = VL * np.exp(1j * alpha)[:, None, :]
    XiL = np.linalg.inv(VL).conj().swapaxes(-1, -2)
    h = s[1] - s[0]
    hop = np.linalg.norm(VL[1:] - VL[:-1], axis=1).max() if grid_size else 0.0
    return EigenPath(
        grid=s, lambdas=lamL, V=VL, Xi=XiL,
        matching_quality=quality,
        gauge_constant=float(hop / h),
        meta={
            "family": path.family_tag,
            "gap_min": eff_gap,
            "sup_norm": sup,
            "cyclic": path.cyclic,
        },
    )


def eigenpath_derivative(ep: EigenPath, fd_order: int = 2) -> np.ndarray:
    """Fill ``ep.vdots`` with finite-difference eigenvector derivatives.

    Central differences in the interior, one-sided stencils at the ends
    (order 2 by default; order 4 available for precision-critical work).
    A stride-2 Richardson comparison is stored as
    ``ep.meta['vdot_truncation']`` so callers can judge the quality.
    """
    h = float(ep.grid[1] - ep.grid[0])
    vd = fd_derivative(ep.V, h, order=fd_order)
    if ep.grid_size >= 8:
        coarse = fd_derivative(ep.V[::2], 2.0 * h, order=fd_order)
        trunc = float(np.abs(vd[::2] - coarse).max())
        scale = 2.0 ** fd_order - 1.0
        ep.meta["vdot_truncation"] = trunc / scale
    ep.meta["vdot_order"] = fd_order
    ep.vdots = vd
    return vd
