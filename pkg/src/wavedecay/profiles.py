"""Monotone traveling-wave profiles for viscous and KdV-Burgers conservation laws."""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial import Polynomial
from scipy.interpolate import CubicSpline

from .errors import (
    DegenerateProfileError,
    InvalidInputError,
    MonotonicityViolationError,
    NoMonotoneProfileError,
    NumericalBlowupError,
)
from .grid import Grid1D, GridFunction, read_csv, write_csv

ODE_STEP = 1e-3
MANIFOLD_SEED = 1e-8
BOUNDARY_TOL = 1e-6


@dataclass(frozen=True)
class FluxSpec:
    """Polynomial flux with ascending coefficients; builtins are named polynomials."""

    coeffs: tuple[float, ...]
    name: str = "polynomial"
    params: tuple[tuple[str, float], ...] = ()

    def __post_init__(self):
        c = tuple(float(a) for a in self.coeffs)
        if not c or not all(math.isfinite(a) for a in c):
            raise InvalidInputError("flux needs finite polynomial coefficients")
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def polynomial(cls, coeffs: Sequence[float]) -> "FluxSpec":
        return cls(tuple(coeffs))

    @classmethod
    def burgers_quadratic(cls) -> "FluxSpec":
        # r^2 - r
        return cls((0.0, -1.0, 1.0), "burgers_quadratic")

    @classmethod
    def kdvb_cubic(cls, b: float = 2.0) -> "FluxSpec":
        # 2 r (r - 1)(b - r)
        return cls((0.0, -2.0 * b, 2.0 * (b + 1.0), -2.0), "kdvb_cubic", (("b", float(b)),))

    @classmethod
    def from_name(cls, name: str, **params) -> "FluxSpec":
        if name == "burgers_quadratic":
            return cls.burgers_quadratic()
        if name == "kdvb_cubic":
            return cls.kdvb_cubic(params.get("b", 2.0))
        raise InvalidInputError(f"unknown builtin flux {name!r} (known: burgers_quadratic, kdvb_cubic)")

    @cached_property
    def _poly(self) -> Polynomial:
        return Polynomial(self.coeffs)

    @cached_property
    def _d1(self) -> Polynomial:
        return self._poly.deriv(1)

    @cached_property
    def _d2(self) -> Polynomial:
        return self._poly.deriv(2)

    def value(self, r):
        return self._poly(r)

    def d1(self, r):
        return self._d1(r)

    def d2(self, r):
        return self._d2(r)

    __call__ = value

    def scalar(self) -> Callable[[float], float]:
        """Horner evaluator on plain floats (fast inside ODE loops)."""
        cs = self.coeffs[::-1]

        def ev(r: float) -> float:
            acc = 0.0
            for a in cs:
                acc = acc * r + a
            return acc

        return ev

    def compose_affine(self, scale: float, shift: float) -> Polynomial:
        return self._poly(Polynomial([shift, scale]))

    def to_dict(self) -> dict:
        return {"name": self.name, "coeffs": list(self.coeffs), "params": dict(self.params)}

    @classmethod
    def from_dict(cls, d: dict) -> "FluxSpec":
        return cls(tuple(d["coeffs"]), d.get("name", "polynomial"), tuple(sorted(d.get("params", {}).items())))


@dataclass(frozen=True)
class NormalizationRecord:
    """Affine map u = offset + scale * u_normalized, flux + linear, frame speed."""

    scale: float = 1.0
    offset: float = 0.0
    linear_slope: float = 0.0
    linear_const: float = 0.0
    frame_speed: float = 0.0

    @property
    def is_identity(self) -> bool:
        return (self.scale, self.offset, self.linear_slope, self.linear_const, self.frame_speed) == (1.0, 0.0, 0.0, 0.0, 0.0)

    def to_original(self, values):
        return self.offset + self.scale * np.asarray(values)

    def from_original(self, values):
        return (np.asarray(values) - self.offset) / self.scale

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def chord_speed(flux: FluxSpec, phi_minus: float, phi_plus: float) -> float:
    return float((flux(phi_plus) - flux(phi_minus)) / (phi_plus - phi_minus))


def normalize_problem(flux: FluxSpec, phi_minus: float, phi_plus: float) -> tuple[FluxSpec, NormalizationRecord]:
    """Map end states to (1, 0) and remove the chord speed.

    The returned flux f_n satisfies f_n(0) = f_n(1) = 0.
    """
    if phi_minus == phi_plus:
        raise DegenerateProfileError("end states coincide")
    a, off = float(phi_minus - phi_plus), float(phi_plus)
    scaled = flux.compose_affine(a, off) / a
    # snap round-off so an already-normalized problem maps to the identity
    tiny = 1e-14 * max(1.0, float(np.max(np.abs(scaled.coef))))
    c = chord_speed(flux, phi_minus, phi_plus)
    c = 0.0 if abs(c) < tiny else c
    const = -float(scaled(0.0))
    const = 0.0 if abs(const) < tiny else const
    new = scaled + Polynomial([const, -c])
    coeffs = [0.0 if abs(x) < 1e-15 * max(1.0, max(abs(y) for y in new.coef)) else float(x) for x in new.coef]
    while len(coeffs) > 1 and coeffs[-1] == 0.0:
        coeffs.pop()
    record = NormalizationRecord(a, off, -c if c else 0.0, const, c)
    if record.is_identity and tuple(coeffs) == flux.coeffs:
        return flux, record
    return FluxSpec(tuple(coeffs)), record


def fkpp_reduction(g: FluxSpec, c: float, phi_minus: float) -> tuple[FluxSpec, float]:
    """Reduced flux f(r) = g(phi_-) - c r - g(phi_- - r) and its slope f'(0) = g'(phi_-) - c."""
    gpoly = Polynomial(g.coeffs)
    f = Polynomial([float(gpoly(phi_minus)), -c]) - gpoly(Polynomial([phi_minus, -1.0]))
    coeffs = [float(x) for x in f.coef]
    coeffs[0] = 0.0
    return FluxSpec(tuple(coeffs), "fkpp_reduced"), float(g.d1(phi_minus) - c)


@dataclass(frozen=True, eq=False)
class WaveProfile:
    phi: GridFunction
    phi_minus: float
    phi_plus: float
    speed: float
    flux: FluxSpec
    family: str
    alpha: float | None = None
    center: float = 0.0
    record: NormalizationRecord = field(default_factory=NormalizationRecord)
    meta: dict = field(default_factory=dict)

    @property
    def grid(self) -> Grid1D:
        return self.phi.grid

    @cached_property
    def _spline(self) -> CubicSpline:
        return CubicSpline(self.grid.x, self.phi.values)

    def evaluate(self, x) -> np.ndarray:
        """Cubic interpolation inside the grid, end states outside."""
        x = np.asarray(x, dtype=float)
        out = self._spline(np.clip(x, self.grid.xmin, self.grid.xmax))
        out = np.where(x < self.grid.xmin, self.phi_minus, out)
        return np.where(x > self.grid.xmax, self.phi_plus, out)

    def shifted(self, h: float, grid: Grid1D | None = None) -> "WaveProfile":
        """phi(. - h), rebuilt by integrating the profile ODE (no interpolation error)."""
        grid = grid or self.grid
        step = self.meta.get("step", ODE_STEP)
        if self.family == "viscous":
            return construct_burgers_profile(self.flux, grid, center=self.center + h, step=step)
        return construct_kdvb_profile(self.flux, self.alpha, grid, center=self.center + h, step=step)

    def derivative_values(self) -> np.ndarray:
        return np.asarray(self.meta["dphi"]) if "dphi" in self.meta else np.gradient(self.phi.values, self.grid.dx)

    def sidecar(self) -> dict:
        return {
            "family": self.family,
            "phi_minus": self.phi_minus,
            "phi_plus": self.phi_plus,
            "speed": self.speed,
            "alpha": self.alpha,
            "center": self.center,
            "flux": self.flux.to_dict(),
            "normalization": self.record.to_dict(),
            "grid": self.grid.to_dict(),
            "ode_error_estimate": self.meta.get("ode_error_estimate"),
        }


def save_profile(profile: WaveProfile, stem: str | Path) -> tuple[Path, Path]:
    stem = Path(stem)
    csv_path, json_path = stem.with_suffix(".csv"), stem.with_suffix(".json")
    write_csv(profile.phi, csv_path)
    json_path.write_text(json.dumps(profile.sidecar(), indent=2, sort_keys=True) + "\n")
    return csv_path, json_path


def load_profile(stem: str | Path) -> WaveProfile:
    stem = Path(stem)
    phi = read_csv(stem.with_suffix(".csv"))
    side = json.loads(stem.with_suffix(".json").read_text())
    return WaveProfile(
        phi,
        side["phi_minus"],
        side["phi_plus"],
        side["speed"],
        FluxSpec.from_dict(side["flux"]),
        side["family"],
        side["alpha"],
        side.get("center", 0.0),
        NormalizationRecord(**side["normalization"]),
    )


# --- fixed-step RK4 hitting prescribed nodes exactly --------------------------------


def _rk4_scalar(rhs, y0: float, s0: float, targets: np.ndarray, hmax: float) -> np.ndarray:
    out = np.empty(len(targets))
    y, s = y0, s0
    for j, st in enumerate(targets):
        span = st - s
        m = max(1, math.ceil(abs(span) / hmax - 1e-9))
        h = span / m
        for _ in range(m):
            k1 = rhs(y)
            k2 = rhs(y + 0.5 * h * k1)
            k3 = rhs(y + 0.5 * h * k2)
            k4 = rhs(y + h * k3)
            y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        s = st
        out[j] = y
    return out


def _rk4_planar(rhs, y0, s0: float, targets: np.ndarray, hmax: float) -> np.ndarray:
    out = np.empty((len(targets), 2))
    a, b = y0
    s = s0
    for j, st in enumerate(targets):
        span = st - s
        m = max(1, math.ceil(abs(span) / hmax - 1e-9))
        h = span / m
        for _ in range(m):
            a, b = _rk4_planar_step(rhs, a, b, h)
        s = st
        out[j] = a, b
    return out


def _rk4_planar_step(rhs, a, b, h):
    k1a, k1b = rhs(a, b)
    k2a, k2b = rhs(a + 0.5 * h * k1a, b + 0.5 * h * k1b)
    k3a, k3b = rhs(a + 0.5 * h * k2a, b + 0.5 * h * k2b)
    k4a, k4b = rhs(a + h * k3a, b + h * k3b)
    return (a + h / 6.0 * (k1a + 2 * k2a + 2 * k3a + k4a), b + h / 6.0 * (k1b + 2 * k2b + 2 * k3b + k4b))


def _check_normalized(flux: FluxSpec, tol: float = 1e-12):
    if abs(flux(0.0)) > tol or abs(flux(1.0)) > tol:
        raise InvalidInputError(
            f"flux is not normalized: f(0) = {flux(0.0):.3g}, f(1) = {flux(1.0):.3g}; call normalize_problem first"
        )


def construct_burgers_profile(
    flux: FluxSpec, grid: Grid1D, *, center: float = 0.0, step: float = ODE_STEP
) -> WaveProfile:
    """Decreasing profile of u_t - u_xx + f(u)_x = 0 from phi' = f(phi), phi(center) = 1/2."""
    _check_normalized(flux)
    r = np.linspace(0.0, 1.0, 20001)[1:-1]
    fr = flux(r)
    if np.any(fr >= 0):
        bad = float(r[np.argmax(fr >= 0)])
        raise NoMonotoneProfileError(
            f"f must be negative on (0, 1) for a decreasing profile; f({bad:.6g}) = {flux(bad):.3g}",
            point=bad,
        )
    rhs = flux.scalar()
    x = grid.x
    phi = _two_sided_scalar(rhs, x, center, step)
    half = _two_sided_scalar(rhs, x, center, step / 2)
    if np.any(phi < -1e-12) or np.any(phi > 1 + 1e-12):
        raise NumericalBlowupError("profile left [0, 1] during integration")
    dphi = flux(phi)
    profile = WaveProfile(
        GridFunction(grid, phi),
        1.0,
        0.0,
        0.0,
        flux,
        "viscous",
        center=center,
        meta={"step": step, "ode_error_estimate": float(np.max(np.abs(phi - half)) / 15.0), "dphi": dphi},
    )
    _check_end_states(profile)
    return profile


def _two_sided_scalar(rhs, x: np.ndarray, center: float, step: float) -> np.ndarray:
    out = np.empty_like(x)
    right = x >= center
    out[right] = _rk4_scalar(rhs, 0.5, center, x[right], step)
    left = ~right
    out[left] = _rk4_scalar(rhs, 0.5, center, x[left][::-1], step)[::-1]
    return out


def _check_end_states(profile: WaveProfile):
    v = profile.phi.values
    err = abs(v[0] - profile.phi_minus) + abs(v[-1] - profile.phi_plus)
    if err > BOUNDARY_TOL:
        warnings.warn(
            f"profile does not reach its end states on the grid (boundary mismatch {err:.3g}); widen the domain",
            RuntimeWarning,
            stacklevel=3,
        )


def kdvb_threshold(g: FluxSpec) -> float:
    """Smallest alpha admitting a monotone profile (normalized problem, c = 0)."""
    return 2.0 * math.sqrt(max(float(g.d1(1.0)), 0.0))


def construct_kdvb_profile(
    g: FluxSpec,
    alpha: float,
    grid: Grid1D,
    *,
    center: float = 0.0,
    step: float = ODE_STEP,
    seed: float = MANIFOLD_SEED,
) -> WaveProfile:
    """Decreasing profile of u_t - alpha u_xx + u_xxx + g(u)_x = 0.

    The once-integrated equation phi'' = alpha phi' - g(phi) has a saddle at
    phi = 0; the profile is its 1-D stable manifold, traced backward in x from
    a seed on the stable eigendirection until the node at phi = 1.
    """
    _check_normalized(g)
    if alpha <= 0:
        raise InvalidInputError("alpha must be positive")
    g0, g1 = float(g.d1(0.0)), float(g.d1(1.0))
    if not g0 < 0 < g1:
        raise InvalidInputError(f"need g'(0) < 0 < g'(1); got g'(0) = {g0:.6g}, g'(1) = {g1:.6g}")
    thr = kdvb_threshold(g)
    if alpha < thr:
        raise NoMonotoneProfileError(
            f"alpha = {alpha:.6g} is below the monotone-profile threshold 2 sqrt(g'(1)) = {thr:.6g}",
            threshold=thr,
        )
    convex = bool(np.all(g.d2(np.linspace(0.0, 1.0, 2001)) >= -1e-12))
    if not convex:
        warnings.warn("g is not convex on the profile range [0, 1]", RuntimeWarning, stacklevel=2)

    lam_s = 0.5 * (alpha - math.sqrt(alpha * alpha - 4.0 * g0))
    gs = g.scalar()

    def rhs(a, b):
        return b, alpha * b - gs(a)

    y0 = (seed, seed * lam_s)
    s_half = _locate_half(rhs, y0, step)

    x = grid.x
    s = s_half + (x - center)
    phi = np.empty_like(x)
    dphi = np.empty_like(x)
    ahead = s > 0
    phi[ahead] = seed * np.exp(lam_s * s[ahead])
    dphi[ahead] = lam_s * phi[ahead]
    back = ~ahead
    targets = s[back][::-1]
    states = _rk4_planar(rhs, y0, 0.0, targets, step)[::-1]
    fine = _rk4_planar(rhs, y0, 0.0, targets, step / 2)[::-1]
    phi[back], dphi[back] = states[:, 0], states[:, 1]

    if np.any(dphi > 0) or np.any(phi > 1 + 1e-9):
        i = int(np.argmax((dphi > 0) | (phi > 1 + 1e-9)))
        raise MonotonicityViolationError(
            f"profile is not monotone at x = {x[i]:.6g} (phi = {phi[i]:.6g}, phi' = {dphi[i]:.3g})"
        )
    profile = WaveProfile(
        GridFunction(grid, phi),
        1.0,
        0.0,
        0.0,
        g,
        "kdvb",
        alpha=float(alpha),
        center=center,
        meta={
            "step": step,
            "seed": seed,
            "stable_eigenvalue": lam_s,
            "convex_on_range": convex,
            "ode_error_estimate": float(np.max(np.abs(states[:, 0] - fine[:, 0]), initial=0.0)) / 15.0,
            "dphi": dphi,
        },
    )
    _check_end_states(profile)
    return profile


def _locate_half(rhs, y0, step: float, max_length: float = 1e4) -> float:
    """Backward arclength-in-x at which the stable-manifold trajectory crosses phi = 1/2."""
    a, b = y0
    s = 0.0
    h = -step
    while True:
        na, nb = _rk4_planar_step(rhs, a, b, h)
        if na >= 0.5:
            break
        if nb > 0 or not math.isfinite(na):
            raise MonotonicityViolationError("trajectory turned before reaching phi = 1/2")
        a, b, s = na, nb, s + h
        if -s > max_length:
            raise NumericalBlowupError("stable manifold never reaches phi = 1/2")
    # secant on the partial step length
    lo, hi = 0.0, h
    flo, fhi = a - 0.5, na - 0.5
    for _ in range(60):
        mid = hi - fhi * (hi - lo) / (fhi - flo)
        fm = _rk4_planar_step(rhs, a, b, mid)[0] - 0.5
        if abs(fm) < 1e-16:
            hi = mid
            break
        lo, flo, hi, fhi = hi, fhi, mid, fm
    return s + hi


# --- residual checks -----------------------------------------------------------------


def _five_point(v: np.ndarray, dx: float):
    """First, second, third derivatives on the interior (2 points trimmed each side)."""
    m2, m1, p1, p2 = v[:-4], v[1:-3], v[3:-1], v[4:]
    c = v[2:-2]
    d1 = (m2 - 8 * m1 + 8 * p1 - p2) / (12 * dx)
    d2 = (-m2 + 16 * m1 - 30 * c + 16 * p1 - p2) / (12 * dx * dx)
    d3 = (-m2 + 2 * m1 - 2 * p1 + p2) / (2 * dx**3)
    return d1, d2, d3


def profile_residual(profile: WaveProfile) -> np.ndarray:
    """Residual of the profile equation on the interior, five-point stencils.

    viscous:  -phi'' + f(phi)'
    kdvb:     -c phi' + g(phi)' + phi''' - alpha phi''
    """
    v, dx = profile.phi.values, profile.grid.dx
    d1, d2, d3 = _five_point(v, dx)
    fd1 = _five_point(profile.flux(v), dx)[0]
    if profile.family == "viscous":
        return -d2 + fd1
    return -profile.speed * d1 + fd1 + d3 - profile.alpha * d2


def fkpp_residual(profile: WaveProfile) -> np.ndarray:
    """Residual of -alpha psi' - psi'' - f(psi) for psi(z) = 1 - phi(-z); needs a symmetric grid."""
    grid = profile.grid
    if not math.isclose(grid.xmin, -grid.xmax):
        raise InvalidInputError("F-KPP check needs a grid symmetric about 0")
    f, _ = fkpp_reduction(profile.flux, profile.speed, profile.phi_minus)
    psi = profile.phi_minus - profile.phi.values[::-1]
    d1, d2, _ = _five_point(psi, grid.dx)
    return -profile.alpha * d1 - d2 - f(psi[2:-2])
