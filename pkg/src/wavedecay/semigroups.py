"""Linearized operators: parabolic u_t - u_xx + c u_x + d u = 0 and
KdV-Burgers u_t + u_xxx - alpha u_xx + c u_x + d u = 0.

Both are available in advective form (c u_x, the equation for the
antiderivative v) and in flux form ((c u)_x, the equation for w = v_x).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.linalg import cho_solve_banded, cholesky_banded
from scipy.optimize import bisect

from .errors import CertificateError, InstabilityError, InvalidInputError
from .grid import Grid1D, GridFunction, WeightSpec, integrate, weighted_norm
from .spectral import ETDRK4, check_resolution, segment_steps
from .trajectory import Trajectory

FAMILIES = ("parabolic_A1", "kdvb_B1")
FORMS = ("advective", "flux")


@dataclass(frozen=True, eq=False)
class LinearOperatorSpec:
    family: str
    c: GridFunction
    d: GridFunction | None = None
    alpha: float = 0.0
    form: str = "advective"

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise InvalidInputError(f"family must be one of {FAMILIES}")
        if self.form not in FORMS:
            raise InvalidInputError(f"form must be one of {FORMS}")
        if self.family == "kdvb_B1" and not self.alpha > 0:
            raise InvalidInputError("kdvb_B1 needs alpha > 0")
        if self.d is not None and self.d.grid != self.c.grid:
            raise InvalidInputError("c and d must live on the same grid")

    @property
    def grid(self) -> Grid1D:
        return self.c.grid

    @property
    def d_values(self) -> np.ndarray:
        return np.zeros(self.grid.n) if self.d is None else self.d.values

    @classmethod
    def zero(cls, grid: Grid1D, family: str = "parabolic_A1", alpha: float = 0.0) -> "LinearOperatorSpec":
        return cls(family, GridFunction.zeros(grid), None, alpha)

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "alpha": self.alpha,
            "form": self.form,
            "c_range": [float(self.c.values.min()), float(self.c.values.max())],
            "d_zero": self.d is None or not np.any(self.d.values),
            "grid": self.grid.to_dict(),
        }


def _snapshot_times(T: float, times: Sequence[float] | None) -> np.ndarray:
    ts = np.array([T] if times is None else sorted(float(t) for t in times))
    if ts[0] < 0 or ts[-1] > T + 1e-12:
        raise InvalidInputError("snapshot times must lie in [0, T]")
    if ts[0] > 0:
        ts = np.concatenate([[0.0], ts])
    return ts


def evolve_parabolic(
    op: LinearOperatorSpec,
    u0: GridFunction,
    T: float,
    dt: float,
    times: Sequence[float] | None = None,
    *,
    growth_C: float = 10.0,
    growth_M: float = 1.0,
) -> Trajectory:
    """Crank-Nicolson diffusion with a Heun predictor-corrector for transport and reaction.

    Homogeneous Dirichlet data at both ends of the grid.
    """
    if op.family != "parabolic_A1":
        raise InvalidInputError("evolve_parabolic needs a parabolic_A1 operator")
    grid = op.grid
    if u0.grid != grid:
        raise InvalidInputError("data and coefficients must share a grid")
    dx = grid.dx
    c, d = op.c.values, op.d_values
    cmax, dmax = float(np.max(np.abs(c))), float(np.max(np.abs(d)))
    dt_max = min(dx / cmax if cmax > 0 else math.inf, 1.0 / dmax if dmax > 0 else math.inf)
    if dt > dt_max:
        raise InvalidInputError(f"dt = {dt:g} exceeds the explicit stability bound {dt_max:.3g}")
    ts = _snapshot_times(T, times)

    ci, di = c[1:-1], d[1:-1]

    def explicit(u):
        if op.form == "advective":
            adv = ci * (u[2:] - u[:-2]) / (2 * dx)
        else:
            adv = (c[2:] * u[2:] - c[:-2] * u[:-2]) / (2 * dx)
        out = np.zeros_like(u)
        out[1:-1] = -adv - di * u[1:-1]
        return out

    def lap(u):
        out = np.zeros_like(u)
        out[1:-1] = (u[2:] - 2 * u[1:-1] + u[:-2]) / (dx * dx)
        return out

    m = grid.n - 2
    factors: dict[float, np.ndarray] = {}

    def solve(rhs, h):
        cb = factors.get(h)
        if cb is None:
            ab = np.empty((2, m))
            ab[0, 0] = 0.0
            ab[0, 1:] = -0.5 * h / (dx * dx)
            ab[1, :] = 1.0 + h / (dx * dx)
            cb = factors[h] = cholesky_banded(ab)
        out = np.zeros(grid.n)
        out[1:-1] = cho_solve_banded((cb, False), rhs[1:-1])
        return out

    u = u0.values.copy()
    u[0] = u[-1] = 0.0
    norm0 = max(float(np.max(np.abs(u))), 1e-300)
    snaps = [GridFunction(grid, u)]
    t = 0.0
    for t_next in ts[1:]:
        nsteps, h = segment_steps(t, t_next, dt)
        for _ in range(nsteps):
            base = u + 0.5 * h * lap(u)
            e0 = explicit(u)
            up = solve(base + h * e0, h)
            u = solve(base + 0.5 * h * (e0 + explicit(up)), h)
            t += h
            nrm = float(np.max(np.abs(u)))
            if not math.isfinite(nrm) or nrm > growth_C * norm0 * math.exp(growth_M * t):
                raise InstabilityError(
                    f"parabolic solve unstable at t = {t:.6g}: sup norm {nrm:.3g} vs initial {norm0:.3g}", time=t
                )
        t = float(t_next)
        snaps.append(GridFunction(grid, u))
    meta = {"operator": op.to_dict(), "scheme": "CN + Heun (Dirichlet)", "dt": dt, "grid": grid.to_dict()}
    return Trajectory(ts, snaps, meta)


def _rfft_wavenumbers(grid: Grid1D) -> np.ndarray:
    return 2.0 * np.pi * np.fft.rfftfreq(grid.n, grid.dx)


def kdvb_symbol(xi: np.ndarray, alpha: float, drift: float = 0.0, n: int | None = None) -> np.ndarray:
    """Fourier symbol of -d_xxx + alpha d_xx - drift d_x (rfft layout when n is given)."""
    sym = 1j * xi**3 - alpha * xi**2 - 1j * drift * xi
    if n is not None and n % 2 == 0:
        sym[-1] = sym[-1].real
    return sym


def evolve_kdvb_linear(
    op: LinearOperatorSpec,
    w0: GridFunction,
    T: float,
    dt: float | None = None,
    times: Sequence[float] | None = None,
    *,
    aliasing_threshold: float = 1e-6,
    layer: float | None = None,
) -> Trajectory:
    """Exact multiplier for the constant-coefficient part (mean of c included),
    ETDRK4 stages for the remaining variable transport and reaction; periodic extension.

    In advective form with c_L != c_R the wrap point is a repeller for the periodic
    problem, so c is tapered to zero and damped inside an absorbing layer of the
    given width at both ends (default: a tenth of the half-width).
    """
    if op.family != "kdvb_B1":
        raise InvalidInputError("evolve_kdvb_linear needs a kdvb_B1 operator")
    grid = op.grid
    if w0.grid != grid:
        raise InvalidInputError("data and coefficients must share a grid")
    n = grid.n
    xi = _rfft_wavenumbers(grid)
    ik = 1j * xi
    if n % 2 == 0:
        ik[-1] = 0.0
    c = op.c.values
    d = op.d_values
    layer_info = None
    if op.form == "advective" and abs(c[0] - c[-1]) > 1e-12:
        c, d, layer_info = _absorbing_layer(grid, c, d, layer)
    cbar = float(np.mean(c))
    cv = c - cbar
    has_var = bool(np.any(cv)) or bool(np.any(d))
    if dt is None:
        vmax = float(np.max(np.abs(cv)))
        dt = 0.5 * grid.dx / vmax if vmax > 0 else T
    ts = _snapshot_times(T, times)

    if op.form == "advective":

        def N(vh):
            u = np.fft.irfft(vh, n)
            ux = np.fft.irfft(ik * vh, n)
            return np.fft.rfft(-cv * ux - d * u)

    else:

        def N(vh):
            u = np.fft.irfft(vh, n)
            return -ik * np.fft.rfft(cv * u) - np.fft.rfft(d * u)

    stepper = ETDRK4(kdvb_symbol(xi, op.alpha, cbar, n), N)
    vh = np.fft.rfft(w0.values)
    snaps = [w0]
    t = 0.0
    for t_next in ts[1:]:
        nsteps, h = segment_steps(t, t_next, dt)
        if has_var:
            for _ in range(nsteps):
                vh = stepper.step(vh, h)
        else:
            vh = vh * np.exp(stepper.symbol * (t_next - t))
        t = float(t_next)
        check_resolution(vh, aliasing_threshold, t, n)
        snaps.append(GridFunction(grid, np.fft.irfft(vh, n)))
    meta = {"operator": op.to_dict(), "scheme": "ETDRK4 Fourier (periodic)", "dt": dt, "grid": grid.to_dict()}
    if layer_info:
        meta["absorbing_layer"] = layer_info
    return Trajectory(ts, snaps, meta)


def _absorbing_layer(grid: Grid1D, c: np.ndarray, d: np.ndarray, width: float | None):
    half = 0.5 * (grid.xmax - grid.xmin)
    width = 0.1 * half if width is None else float(width)
    mid = 0.5 * (grid.xmax + grid.xmin)
    depth = np.clip((np.abs(grid.x - mid) - (half - width)) / width, 0.0, 1.0)
    ramp = np.sin(0.5 * np.pi * depth) ** 2
    cmax = float(np.max(np.abs(c)))
    strength = 4.0 * cmax / width + 1.0
    info = {"width": width, "strength": strength}
    return c * (1.0 - ramp), d + strength * ramp, info


def evolve(op: LinearOperatorSpec, u0: GridFunction, T: float, dt: float | None = None, times=None) -> Trajectory:
    if op.family == "parabolic_A1":
        if dt is None:
            cmax = float(np.max(np.abs(op.c.values)))
            dt = min(0.5 * op.grid.dx / cmax if cmax > 0 else 0.01, 0.01)
        return evolve_parabolic(op, u0, T, dt, times)
    return evolve_kdvb_linear(op, u0, T, dt, times)


def semigroup_evaluator(op: LinearOperatorSpec, dt: float | None = None):
    """Adapter (v, times) -> [S(t) v] for interpolation checks."""

    def run(v: GridFunction, times):
        ts = np.asarray(times, dtype=float)
        traj = evolve(op, v, float(ts.max()), dt, ts[ts > 0])
        lookup = dict(zip(np.round(traj.times, 12), traj.snapshots))
        return [v if t == 0 else lookup[round(float(t), 12)] for t in ts]

    return run


# --- weighted decay certificate ------------------------------------------------------


@dataclass(frozen=True)
class DecayCertificate:
    rho: float
    gamma: float
    sup_F_rho: float
    x0: float
    alpha: float = 0.0

    @property
    def valid(self) -> bool:
        return self.gamma > 0

    def weight_squared(self, x) -> np.ndarray:
        """cosh(rho (x - x0)), the weight of the certified energy."""
        return np.cosh(self.rho * (np.asarray(x) - self.x0))

    def energy(self, u: GridFunction) -> float:
        return integrate(GridFunction(u.grid, self.weight_squared(u.x) * u.values**2))


def _zero_of(c: GridFunction) -> float:
    v = c.values
    s = np.sign(v)
    changes = np.flatnonzero(s[:-1] * s[1:] < 0)
    exact = np.flatnonzero(v == 0)
    if len(changes) + len(exact) == 0:
        raise CertificateError("coefficient c has no sign change on the grid")
    if len(changes) + len(exact) > 1 and not (len(exact) == 1 and len(changes) == 0):
        raise CertificateError("coefficient c changes sign more than once; the zero x0 is not unique")
    if len(exact):
        return float(c.x[exact[0]])
    i = int(changes[0])
    spline = CubicSpline(c.x, v)
    return float(bisect(lambda z: float(spline(z)), c.x[i], c.x[i + 1], xtol=1e-14))


def F_rho(c: GridFunction, alpha: float, rho: float, x0: float) -> np.ndarray:
    cp = np.gradient(c.values, c.grid.dx, edge_order=2)
    return alpha * rho**2 + cp + (rho * c.values + rho**3) * np.tanh(rho * (c.x - x0))


def decay_certificate(c: GridFunction, alpha: float, rho: float) -> DecayCertificate:
    """Evaluate alpha rho^2 + c' + (rho c + rho^3) tanh(rho (x - x0)); gamma = -sup."""
    if not alpha > 0:
        raise CertificateError("alpha must be positive")
    if not 0 < rho < alpha / 3:
        raise CertificateError(f"rho = {rho:g} must lie in (0, alpha/3) = (0, {alpha / 3:.6g})")
    v = c.values
    if not v[0] > 0 > v[-1]:
        raise CertificateError(f"need c_L > 0 > c_R at the grid ends; got c_L = {v[0]:.3g}, c_R = {v[-1]:.3g}")
    cp = np.gradient(v, c.grid.dx, edge_order=2)
    if np.any(cp > 1e-9 * max(1.0, float(np.max(np.abs(cp))))):
        i = int(np.argmax(cp))
        raise CertificateError(f"c' must be negative; c'({c.x[i]:.4g}) = {cp[i]:.3g}")
    x0 = _zero_of(c)
    sup = float(np.max(F_rho(c, alpha, rho, x0)))
    return DecayCertificate(rho, -sup, sup, x0, alpha)


def find_certificate(c: GridFunction, alpha: float, rhos: Sequence[float] | None = None) -> DecayCertificate:
    """Best (largest gamma) certificate over a rho scan inside (0, alpha/3)."""
    if rhos is None:
        rhos = np.linspace(0.0, alpha / 3, 62)[1:-1]
    best = max((decay_certificate(c, alpha, r) for r in rhos), key=lambda cert: cert.gamma)
    return best


# --- smoothing tables ---------------------------------------------------------------


@dataclass
class SmoothingReport:
    t: np.ndarray
    tables: dict[str, np.ndarray]
    bound: float
    passed: dict[str, bool] = field(default_factory=dict)

    def __post_init__(self):
        self.passed = {k: bool(np.all(v <= self.bound)) for k, v in self.tables.items()}

    @property
    def ok(self) -> bool:
        return all(self.passed.values())


def dyadic_times(t_min: float = 1e-3, t_max: float = 1.0) -> np.ndarray:
    k = np.arange(0, math.floor(math.log2(t_max / t_min)) + 1)
    return np.sort(t_max / 2.0**k)


def _fd_dx(v: np.ndarray, dx: float) -> np.ndarray:
    return np.gradient(v, dx, edge_order=2)


def verify_smoothing(op: LinearOperatorSpec, u0: GridFunction, t_values=None, *, bound: float = 10.0, steps_per_time: int = 64) -> SmoothingReport:
    """Short-time derivative bounds with the singular factors t^(-1/2), t^(-1), t^(-1/8), t^(-5/8)."""
    t = dyadic_times() if t_values is None else np.asarray(t_values, dtype=float)
    grid = op.grid
    if op.family == "parabolic_A1":
        base = weighted_norm(u0, math.inf).value
        rows = []
        for tt in t:
            u = evolve_parabolic(op, u0, tt, tt / steps_per_time).snapshots[-1]
            rows.append(math.sqrt(tt) * float(np.max(np.abs(_fd_dx(u.values, grid.dx)))) / base)
        return SmoothingReport(t, {"sqrt_t_dx_sup": np.array(rows)}, bound)

    from .spectral import spectral_derivative

    xi = grid.wavenumbers()
    base2 = weighted_norm(u0, 2).value
    traj = evolve_kdvb_linear(op, u0, float(t.max()), float(t.min()) / steps_per_time, t)
    tabs = {"t_dxx_L2": [], "sqrt_t_dx_L2": [], "t18_L4": [], "t58_dx_L4": []}
    for tt, u in zip(traj.times[1:], traj.snapshots[1:]):
        ux = GridFunction(grid, spectral_derivative(u.values, xi, 1))
        uxx = GridFunction(grid, spectral_derivative(u.values, xi, 2))
        tabs["t_dxx_L2"].append(tt * weighted_norm(uxx, 2).value / base2)
        tabs["sqrt_t_dx_L2"].append(math.sqrt(tt) * weighted_norm(ux, 2).value / base2)
        tabs["t18_L4"].append(tt**0.125 * weighted_norm(u, 4).value / base2)
        tabs["t58_dx_L4"].append(tt**0.625 * weighted_norm(ux, 4).value / base2)
    return SmoothingReport(traj.times[1:], {k: np.array(v) for k, v in tabs.items()}, bound)


def energy_increments(traj: Trajectory, cert: DecayCertificate, c: GridFunction) -> np.ndarray:
    """Per-interval slack of d/dt int W u^2 <= int F_rho W u^2 (nonpositive means the bound holds)."""
    F = F_rho(c, cert.alpha, cert.rho, cert.x0)
    W = cert.weight_squared(c.x)
    out = []
    for i in range(1, len(traj)):
        a, b = traj.snapshots[i - 1], traj.snapshots[i]
        dt = traj.times[i] - traj.times[i - 1]
        lhs = (cert.energy(b) - cert.energy(a)) / dt
        mid = 0.5 * (
            integrate(GridFunction(c.grid, F * W * a.values**2)) + integrate(GridFunction(c.grid, F * W * b.values**2))
        )
        out.append(lhs - mid)
    return np.array(out)
