"""Dense complex linear algebra for modest dimensions (n <= 16).

Inversion and eigendecomposition ride on LAPACK (LU with pivot
inspection; Hessenberg + shifted QR via ``zgeev``) behind residual-based
contracts; the matrix exponential is an own batched Pade-13
scaling-and-squaring; the spectral norm is a deterministic power
iteration with a flagged Frobenius fallback.
"""

from __future__ import annotations

import warnings

import numpy as np
import scipy.linalg

from .errors import (
    DefectiveMatrixError,
    NonConvergenceWarning,
    OverflowRiskError,
    SingularMatrixError,
)

__all__ = [
    "EigenDecomposition",
    "as_complex_matrix",
    "mat_inverse",
    "spectral_norm",
    "mat_exp",
    "eig",
]


def as_complex_matrix(a) -> np.ndarray:
    """Validate and coerce input to a dense square complex128 matrix."""
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix entries must all be finite")
    return m


def mat_inverse(a, pivot_rtol: float = 1e-13) -> np.ndarray:
    """Invert a square complex matrix via LU, policing pivot magnitudes.

    Raises SingularMatrixError when any pivot falls below
    ``pivot_rtol * max|a_ij|`` or the residual ``||a a^-1 - I||`` exceeds
    ``1e-10 * n``.
    """
    m = as_complex_matrix(a)
    n = m.shape[0]
    scale = float(np.abs(m).max())
    if scale == 0.0:
        raise SingularMatrixError("zero matrix has no inverse")
    with warnings.catch_warnings():
        # exact singularity is reported through SingularMatrixError below
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(m, check_finite=False)
    pivots = np.abs(np.diag(lu))
    if pivots.min() < pivot_rtol * scale:
        raise SingularMatrixError(
            f"pivot {pivots.min():.3e} below threshold {pivot_rtol * scale:.3e}"
        )
    inv = scipy.linalg.lu_solve((lu, piv), np.eye(n, dtype=complex), check_finite=False)
    residual = float(np.linalg.norm(m @ inv - np.eye(n), 2))
    if residual > 1e-10 * n:
        raise SingularMatrixError(
            f"inverse residual {residual:.3e} exceeds contract {1e-10 * n:.1e}"
        )
    return inv


def spectral_norm(a, rtol: float = 1e-8, max_iter: int = 300) -> float:
    """Largest singular value via power iteration on ``a^H a``.

    Deterministic ramp start; convergence is declared once the Rayleigh
    estimate stalls below ``rtol`` for several consecutive sweeps. For an
    isolated top singular value this meets ``rtol``; when the two largest
    singular values form a near-degenerate cluster the returned value
    lands inside the cluster (its width bounds the error). If the cap is
    hit first, emits NonConvergenceWarning and returns the Frobenius
    norm (an upper bound) instead.
    """
    m = as_complex_matrix(a)
    n = m.shape[0]
    scale = float(np.abs(m).max())
    if scale == 0.0:
        return 0.0
    x = (1.0 + np.arange(n) / max(n - 1, 1)) / np.sqrt(n)
    x = x.astype(complex)
    x /= np.linalg.norm(x)
    sigma2 = 0.0
    stalled = 0
    for _ in range(max_iter):
        y = m.conj().T @ (m @ x)
        nrm = np.linalg.norm(y)
        if nrm == 0.0:
            return 0.0
        new = float(np.real(np.vdot(x, y)))
        x = y / nrm
        if sigma2 > 0.0 and abs(new - sigma2) <= rtol * new:
            stalled += 1
            if stalled >= 4:
                return float(np.sqrt(new))
        else:
            stalled = 0
        sigma2 = new
    warnings.warn(
        "power iteration hit its cap; returning Frobenius norm",
        NonConvergenceWarning,
        stacklevel=2,
    )
    return float(np.linalg.norm(m))


def _spectral_norms(stack: np.ndarray) -> np.ndarray:
    """Spectral norms of a matrix stack (batched SVD; internal plumbing)."""
    return np.linalg.svd(stack, compute_uv=False)[..., 0]


# Pade-13 numerator/denominator coefficients for exp, highest order last.
_PADE13 = np.array([
    64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
    1187353796428800.0, 129060195264000.0, 10559470521600.0, 670442572800.0,
    33522128640.0, 1323241920.0, 40840800.0, 960960.0, 16380.0, 182.0, 1.0,
])


def mat_exp(a, norm_cap: float = 30.0) -> np.ndarray:
    """Matrix exponential by scaling-and-squaring with a Pade-13 kernel.

    Accepts a single matrix or a stack ``(..., n, n)`` and exponentiates
    each slice. Raises OverflowRiskError when any slice's 1-norm exceeds
    ``norm_cap`` — the caller's step size is too large for a trustworthy
    answer.
    """
    m = np.asarray(a, dtype=complex)
    if m.ndim < 2 or m.shape[-1] != m.shape[-2]:
        raise ValueError(f"expected square matrices, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix entries must all be finite")
    n = m.shape[-1]
    norm1 = np.abs(m).sum(axis=-2).max(axis=-1)
    top = float(np.max(norm1, initial=0.0))
    if top > norm_cap:
        raise OverflowRiskError(
            f"matrix 1-norm {top:.3e} exceeds exp cap {norm_cap:.3e}"
        )
    squarings = 0 if top <= 2.0 else int(np.ceil(np.log2(top / 2.0)))
    m = m / (2.0 ** squarings)
    eye = np.broadcast_to(np.eye(n, dtype=complex), m.shape)
    b = _PADE13
    m2 = m @ m
    m4 = m2 @ m2
    m6 = m2 @ m4
    u = m @ (m6 @ (b[13] * m6 + b[11] * m4 + b[9] * m2)
             + b[7] * m6 + b[5] * m4 + b[3] * m2 + b[1] * eye)
    v = (m6 @ (b[12] * m6 + b[10] * m4 + b[8] * m2)
         + b[6] * m6 + b[4] * m4 + b[2] * m2 + b[0] * eye)
    r = np.linalg.solve(v - u, v + u)
    for _ in range(squarings):
        r = r @ r
    return r


class EigenDecomposition:
    """Full eigensystem of one matrix: values, unit right vectors, residual."""

    __slots__ = ("eigenvalues", "vectors", "residual")

    def __init__(self, eigenvalues: np.ndarray, vectors: np.ndarray, residual: float):
        self.eigenvalues = eigenvalues
        self.vectors = vectors
        self.residual = residual

    def __repr__(self):
        return (f"EigenDecomposition(n={len(self.eigenvalues)}, "
                f"residual={self.residual:.2e})")


def _canonical_columns(vectors: np.ndarray) -> np.ndarray:
    """Unit-normalize columns and rotate each so its largest entry is real positive."""
    v = vectors / np.linalg.norm(vectors, axis=0, keepdims=True)
    lead = np.argmax(np.abs(v), axis=0)
    phases = v[lead, np.arange(v.shape[1])]
    phases = phases / np.abs(phases)
    return v * phases.conj()


def eig(a, residual_rtol: float = 1e-10, gap_rtol: float = 1e-10,
        strict: bool = True) -> EigenDecomposition:
    """All eigenpairs of a general complex matrix, deterministically ordered.

    Eigenvalues come back sorted by (real, imaginary) part; columns are
    unit norm with a canonical phase. With ``strict`` (the default) the
    residual contract ``max_i ||a v_i - lam_i v_i|| <= residual_rtol*||a||``
    and the pairwise separation ``min |lam_i - lam_j| >= gap_rtol*||a||``
    are enforced with DefectiveMatrixError; pass ``strict=False`` to get
    the decomposition regardless (hypothesis probing).
    """
    m = as_complex_matrix(a)
    n = m.shape[0]
    if n > 16:
        raise ValueError("kernel is specified for n <= 16")
    lam, vec = np.linalg.eig(m)
    order = np.lexsort((lam.imag, lam.real))
    lam = lam[order]
    vec = _canonical_columns(vec[:, order])
    scale = float(_spectral_norms(m[None])[0]) if np.abs(m).max() else 0.0
    residual = float(np.linalg.norm(m @ vec - vec * lam, axis=0).max())
    if strict:
        if residual > residual_rtol * max(scale, 1e-300):
            raise DefectiveMatrixError(
                f"eigen residual {residual:.3e} exceeds {residual_rtol:.1e}*||a||"
            )
        if n > 1:
            gaps = np.abs(lam[:, None] - lam[None, :])
            np.fill_diagonal(gaps, np.inf)
            if gaps.min() < gap_rtol * max(scale, 1e-300):
                raise DefectiveMatrixError(
                    f"eigenvalues separated by {gaps.min():.3e} < "
                    f"{gap_rtol:.1e}*||a||; matrix is defective or too close to it"
                )
    return EigenDecomposition(lam, vec, residual)
