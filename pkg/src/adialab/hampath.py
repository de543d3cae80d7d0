"""Parameterized Hamiltonian paths and hypothesis validation.

A path is a smooth map ``s in [0, 1] -> H(s)`` (dense complex, n x n).
The built-in families cover the cases the verifier needs: a Hermitian
two-level rotation (baseline), a gain-loss dimer with real spectrum in
its unbroken regime (the genuinely non-Hermitian hypothesis class), a
non-unitarily dressed Hermitian rotation (s-dependent similarity), and
cyclic loops of the first two. ``validate_spectrum`` certifies the
working hypotheses — real, non-degenerate eigenvalues — on a grid.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import InvalidParamsError
from .numkernel import _spectral_norms

__all__ = [
    "Profile",
    "make_profile",
    "HamiltonianPath",
    "SpectrumCertificate",
    "make_builtin_path",
    "validate_spectrum",
    "BUILTIN_FAMILIES",
]


@dataclass(frozen=True)
class Profile:
    """Scalar control profile on [0, 1] with an analytic derivative."""

    fn: Callable[[np.ndarray], np.ndarray]
    dfn: Callable[[np.ndarray], np.ndarray]
    tag: str = "custom"

    def __call__(self, s):
        return self.fn(np.asarray(s, dtype=float))

    def derivative(self, s):
        return self.dfn(np.asarray(s, dtype=float))


def _linear(p0: float, p1: float) -> Profile:
    return Profile(lambda s: p0 + (p1 - p0) * s,
                   lambda s: np.full_like(s, p1 - p0), "linear")


def _quadratic(p0: float, p1: float) -> Profile:
    # C1 polynomial ramp with zero slope at s=0; keeps the s=0 boundary
    # contribution to the O(1/T) error from beating against the s=1 one.
    return Profile(lambda s: p0 + (p1 - p0) * s * s,
                   lambda s: 2.0 * (p1 - p0) * s, "quad")


def _constant(c: float) -> Profile:
    return Profile(lambda s: np.full_like(s, c),
                   lambda s: np.zeros_like(s), "constant")


def _table(nodes, values) -> Profile:
    from scipy.interpolate import CubicSpline

    nodes = np.asarray(nodes, dtype=float)
    values = np.asarray(values, dtype=float)
    if nodes.ndim != 1 or nodes.shape != values.shape or nodes.size < 4:
        raise InvalidParamsError("profile table needs matching 1-D arrays, >= 4 nodes")
    if nodes[0] > 0.0 or nodes[-1] < 1.0:
        raise InvalidParamsError("profile table must cover [0, 1]")
    sp = CubicSpline(nodes, values)
    dsp = sp.derivative()
    return Profile(lambda s: sp(s), lambda s: dsp(s), "table")


def make_profile(spec, default_shape: str = "quad") -> Profile:
    """Build a Profile from a number, a (p0, p1) ramp, or a config dict.

    Dict forms: ``{"shape": "linear"|"quad", "start": a, "end": b}``,
    ``{"shape": "constant", "value": c}``, or
    ``{"shape": "table", "s": [...], "values": [...]}``.
    """
    if isinstance(spec, Profile):
        return spec
    if isinstance(spec, (int, float)):
        return _constant(float(spec))
    if isinstance(spec, (tuple, list)) and len(spec) == 2:
        a, b = float(spec[0]), float(spec[1])
        return _quadratic(a, b) if default_shape == "quad" else _linear(a, b)
    if isinstance(spec, dict):
        shape = spec.get("shape", default_shape)
        if shape == "constant":
            return _constant(float(spec["value"]))
        if shape == "linear":
            return _linear(float(spec["start"]), float(spec["end"]))
        if shape == "quad":
            return _quadratic(float(spec["start"]), float(spec["end"]))
        if shape == "table":
            return _table(spec["s"], spec["values"])
        raise InvalidParamsError(f"unknown profile shape {shape!r}")
    raise InvalidParamsError(f"cannot interpret profile spec {spec!r}")


@dataclass(frozen=True)
class HamiltonianPath:
    """Smooth family of Hamiltonians on the unit interval.

    ``sample`` maps an s-array of shape ``(...,)`` to matrices of shape
    ``(..., n, n)``; ``derivative`` (optional) does the same for dH/ds.
    ``cyclic`` promises H(1) = H(0) to machine accuracy.
    """

    dim: int
    sample: Callable[[np.ndarray], np.ndarray]
    derivative: Callable[[np.ndarray], np.ndarray] | None = None
    cyclic: bool = False
    family_tag: str = "custom"
    params: dict = field(default_factory=dict)

    def __call__(self, s):
        return self.sample(np.asarray(s, dtype=float))

    def sup_norm(self, probes: int = 65) -> float:
        """Largest spectral norm of H(s) over a probe grid."""
        s = np.linspace(0.0, 1.0, probes)
        return float(_spectral_norms(self(s)).max())

    def validate(self, probes: int = 9) -> None:
        s = np.linspace(0.0, 1.0, probes)
        h = self(s)
        if h.shape != (probes, self.dim, self.dim):
            raise InvalidParamsError(
                f"sampler returned shape {h.shape}, expected {(probes, self.dim, self.dim)}"
            )
        if not np.all(np.isfinite(h)):
            raise InvalidParamsError("sampler produced non-finite entries")
        if self.cyclic:
            h0, h1 = self(np.array([0.0])), self(np.array([1.0]))
            defect = float(np.linalg.norm(h1[0] - h0[0], 2))
            scale = float(np.linalg.norm(h0[0], 2))
            if defect > 1e-12 * max(scale, 1e-300):
                raise InvalidParamsError(
                    f"cyclic flag set but ||H(1)-H(0)|| = {defect:.3e}"
                )


def _two_level(a: np.ndarray, b: np.ndarray, c: np.ndarray, d: np.ndarray) -> np.ndarray:
    """Assemble [[a, b], [c, d]] over a leading sample axis."""
    out = np.empty(a.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = a
    out[..., 0, 1] = b
    out[..., 1, 0] = c
    out[..., 1, 1] = d
    return out


def _hermitian2(params: dict) -> HamiltonianPath:
    b_field = float(params.get("field", 1.0))
    shape = params.get("profile", "quad")
    theta = make_profile(
        params.get("theta", (params.get("theta0", 0.0), params.get("theta1", np.pi / 2))),
        default_shape=shape,
    )
    if b_field <= 0.0:
        raise InvalidParamsError("hermitian2 field must be positive")

    def sample(s):
        th = theta(s)
        return b_field * _two_level(np.cos(th), np.sin(th), np.sin(th), -np.cos(th))

    def deriv(s):
        th, dth = theta(s), theta.derivative(s)
        return b_field * _two_level(-np.sin(th) * dth, np.cos(th) * dth,
                                    np.cos(th) * dth, np.sin(th) * dth)

    return HamiltonianPath(2, sample, deriv, family_tag="hermitian2",
                           params={"field": b_field, "theta": theta.tag})


def _pt_dimer(params: dict) -> HamiltonianPath:
    k = float(params.get("coupling", params.get("k", 1.0)))
    shape = params.get("profile", "quad")
    gamma = make_profile(
        params.get("gamma", (params.get("gamma0", 0.0), params.get("gamma1", 0.5))),
        default_shape=shape,
    )
    beta = make_profile(
        params.get("beta", (params.get("beta0", 0.0), params.get("beta1", 0.0))),
        default_shape=shape,
    )
    diagnostic = bool(params.get("diagnostic", False))
    if k <= 0.0:
        raise InvalidParamsError("pt_dimer coupling must be positive")
    probe = np.linspace(0.0, 1.0, 257)
    sup_gamma = float(np.abs(gamma(probe)).max())
    if sup_gamma >= k and not diagnostic:
        raise InvalidParamsError(
            f"sup |gamma| = {sup_gamma:.3g} >= coupling {k:.3g} breaks the real "
            "spectrum; pass diagnostic=True to study it anyway"
        )

    def sample(s):
        g, be = gamma(s), beta(s)
        return _two_level(1j * g, k * np.exp(-1j * be), k * np.exp(1j * be), -1j * g)

    def deriv(s):
        g, be = gamma(s), beta(s)
        dg, dbe = gamma.derivative(s), beta.derivative(s)
        return _two_level(1j * dg, -1j * dbe * k * np.exp(-1j * be),
                          1j * dbe * k * np.exp(1j * be), -1j * dg)

    return HamiltonianPath(2, sample, deriv, family_tag="pt_dimer",
                           params={"coupling": k, "gamma": gamma.tag,
                                   "beta": beta.tag, "diagnostic": diagnostic})


def _dressed_hermitian(params: dict) -> HamiltonianPath:
    inner = _hermitian2(params)
    shape = params.get("profile", "quad")
    shear = make_profile(
        params.get("shear", (params.get("shear0", 0.2), params.get("shear1", 0.7))),
        default_shape=shape,
    )

    def sample(s):
        s = np.asarray(s, dtype=float)
        h2 = inner.sample(s)
        c = shear(s)
        zero, one = np.zeros_like(c), np.ones_like(c)
        v = _two_level(one, c, zero, one)
        vinv = _two_level(one, -c, zero, one)
        return vinv @ h2 @ v

    def deriv(s):
        s = np.asarray(s, dtype=float)
        h2, dh2 = inner.sample(s), inner.derivative(s)
        c, dc = shear(s), shear.derivative(s)
        zero, one = np.zeros_like(c), np.ones_like(c)
        v = _two_level(one, c, zero, one)
        vinv = _two_level(one, -c, zero, one)
        dv = _two_level(zero, dc, zero, zero)
        # d/ds [v^-1 h2 v]; note d(v^-1)/ds = -v^-1 dv v^-1
        return vinv @ (dh2 @ v + h2 @ dv) - vinv @ dv @ vinv @ h2 @ v

    return HamiltonianPath(2, sample, deriv, family_tag="dressed_hermitian",
                           params={**inner.params, "shear": shear.tag})


def _cyclic_loop(params: dict) -> HamiltonianPath:
    base = params.get("base", "hermitian2")
    winding = int(params.get("winding", 1))
    if winding == 0:
        raise InvalidParamsError("cyclic_loop winding must be nonzero")
    sub = dict(params)
    sub.pop("base", None)
    sub.pop("winding", None)
    if base == "hermitian2":
        theta0 = float(sub.pop("theta0", 0.3))
        sub["theta"] = {"shape": sub.get("profile", "quad"),
                        "start": theta0, "end": theta0 + 2.0 * np.pi * winding}
        inner = _hermitian2(sub)
    elif base == "pt_dimer":
        g = sub.pop("gamma0", sub.pop("gamma", 0.3))
        sub.pop("gamma1", None)
        sub["gamma"] = float(g) if isinstance(g, (int, float)) else g
        sub["beta"] = {"shape": sub.get("profile", "quad"),
                       "start": 0.0, "end": 2.0 * np.pi * winding}
        inner = _pt_dimer(sub)
    else:
        raise InvalidParamsError(f"cyclic_loop base {base!r} not supported")
    return HamiltonianPath(inner.dim, inner.sample, inner.derivative, cyclic=True,
                           family_tag=f"cyclic_{base}",
                           params={**inner.params, "winding": winding})


BUILTIN_FAMILIES = {
    "hermitian2": _hermitian2,
    "pt_dimer": _pt_dimer,
    "dressed_hermitian": _dressed_hermitian,
    "cyclic_loop": _cyclic_loop,
}


def make_builtin_path(family: str, **params) -> HamiltonianPath:
    """Construct one of the built-in families; see BUILTIN_FAMILIES for names."""
    try:
        builder = BUILTIN_FAMILIES[family]
    except KeyError:
        raise InvalidParamsError(
            f"unknown family {family!r}; choose from {sorted(BUILTIN_FAMILIES)}"
        ) from None
    path = builder(dict(params))
    path.validate()
    return path


@dataclass(frozen=True)
class SpectrumCertificate:
    """Grid-sampled evidence for (or against) the working hypotheses."""

    min_gap: float
    max_imag: float
    grid_size: int
    hypotheses_met: bool
    sup_norm: float
    gap_min: float
    imag_tol: float

    def to_dict(self) -> dict:
        return {
            "min_gap": self.min_gap,
            "max_imag": self.max_imag,
            "grid_size": self.grid_size,
            "hypotheses_met": self.hypotheses_met,
            "sup_norm": self.sup_norm,
            "gap_min": self.gap_min,
            "imag_tol": self.imag_tol,
        }


def validate_spectrum(path: HamiltonianPath, grid_size: int = 64,
                      gap_min: float | None = None,
                      imag_rtol: float = 1e-9) -> SpectrumCertificate:
    """Certify real, non-degenerate eigenvalues on a uniform grid.

    Never raises on a failing path: violations are encoded in the
    certificate so diagnostic runs can proceed deliberately.
    """
    if grid_size < 32:
        raise ValueError("validation grid must have at least 32 points")
    s = np.linspace(0.0, 1.0, grid_size + 1)
    h = path(s)
    sup = float(_spectral_norms(h).max())
    try:
        lam = np.linalg.eigvals(h)
    except np.linalg.LinAlgError:
        eff_gap = gap_min if gap_min is not None else 1e-6 * sup
        return SpectrumCertificate(0.0, np.inf, grid_size, False, sup,
                                   eff_gap, imag_rtol * sup)
    n = lam.shape[-1]
    if n > 1:
        gaps = np.abs(lam[:, :, None] - lam[:, None, :])
        gaps[:, np.arange(n), np.arange(n)] = np.inf
        min_gap = float(gaps.min())
    else:
        min_gap = np.inf
    max_imag = float(np.abs(lam.imag).max())
    eff_gap = gap_min if gap_min is not None else 1e-6 * sup
    imag_tol = imag_rtol * sup
    met = (max_imag <= imag_tol) and (min_gap >= eff_gap)
    return SpectrumCertificate(min_gap, max_imag, grid_size, bool(met), sup,
                               eff_gap, imag_tol)
