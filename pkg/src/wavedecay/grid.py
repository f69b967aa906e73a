"""Uniform 1-D grids, grid functions, weighted norms and antiderivatives."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING, Callable

import numpy as np
from scipy.special import logsumexp

from .errors import DegenerateProfileError, InvalidInputError, NormOverflowError

if TYPE_CHECKING:  # pragma: no cover
    from .profiles import WaveProfile

ALLOWED_P = (1.0, 2.0, 4.0, math.inf)
_LOG_MAX = math.log(np.finfo(float).max)


@dataclass(frozen=True)
class Grid1D:
    xmin: float
    xmax: float
    n: int

    def __post_init__(self):
        if not (math.isfinite(self.xmin) and math.isfinite(self.xmax)) or self.xmin >= self.xmax:
            raise InvalidInputError(f"need finite xmin < xmax, got [{self.xmin}, {self.xmax}]")
        if int(self.n) != self.n or self.n < 3:
            raise InvalidInputError(f"need an integer n >= 3, got {self.n}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "xmin", float(self.xmin))
        object.__setattr__(self, "xmax", float(self.xmax))

    @classmethod
    def symmetric(cls, half_width: float, n: int) -> "Grid1D":
        return cls(-half_width, half_width, n)

    @property
    def dx(self) -> float:
        return (self.xmax - self.xmin) / (self.n - 1)

    @property
    def x(self) -> np.ndarray:
        return self.xmin + self.dx * np.arange(self.n)

    @property
    def period(self) -> float:
        """Length of the periodic extension used by spectral solvers."""
        return self.n * self.dx

    def wavenumbers(self) -> np.ndarray:
        return 2.0 * np.pi * np.fft.fftfreq(self.n, self.dx)

    def to_dict(self) -> dict:
        return {"xmin": self.xmin, "xmax": self.xmax, "n": self.n}


@dataclass(frozen=True, eq=False)
class GridFunction:
    grid: Grid1D
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float, copy=True)
        if v.shape != (self.grid.n,):
            raise InvalidInputError(f"expected {self.grid.n} values, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            bad = int(np.flatnonzero(~np.isfinite(v))[0])
            raise InvalidInputError(f"non-finite value at grid index {bad}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_callable(cls, grid: Grid1D, fn: Callable[[np.ndarray], np.ndarray]) -> "GridFunction":
        return cls(grid, fn(grid.x))

    @classmethod
    def zeros(cls, grid: Grid1D) -> "GridFunction":
        return cls(grid, np.zeros(grid.n))

    @property
    def x(self) -> np.ndarray:
        return self.grid.x

    def with_values(self, values) -> "GridFunction":
        return GridFunction(self.grid, values)

    def __add__(self, other):
        return self.with_values(self.values + _vals(other))

    def __sub__(self, other):
        return self.with_values(self.values - _vals(other))

    def __mul__(self, c: float):
        return self.with_values(self.values * c)

    __rmul__ = __mul__

    def __neg__(self):
        return self.with_values(-self.values)


def _vals(other) -> np.ndarray | float:
    return other.values if isinstance(other, GridFunction) else other


@dataclass(frozen=True)
class WeightSpec:
    kind: str = "none"
    k: float | None = None
    rho: float | None = None

    def __post_init__(self):
        if self.kind == "none":
            if self.k is not None or self.rho is not None:
                raise InvalidInputError("unweighted spec takes no parameters")
        elif self.kind == "polynomial":
            if self.k is None or self.k < 0 or self.rho is not None:
                raise InvalidInputError("polynomial weight needs k >= 0 and no rho")
        elif self.kind == "exponential":
            if self.rho is None or self.rho <= 0 or self.k is not None:
                raise InvalidInputError("exponential weight needs rho > 0 and no k")
        else:
            raise InvalidInputError(f"unknown weight kind {self.kind!r}")

    @classmethod
    def none(cls) -> "WeightSpec":
        return cls("none")

    @classmethod
    def polynomial(cls, k: float) -> "WeightSpec":
        return cls("polynomial", k=float(k))

    @classmethod
    def exponential(cls, rho: float) -> "WeightSpec":
        return cls("exponential", rho=float(rho))

    def log_weight(self, x: np.ndarray) -> np.ndarray:
        ax = np.abs(np.asarray(x, dtype=float))
        if self.kind == "polynomial":
            return self.k * np.log1p(ax)
        if self.kind == "exponential":
            return self.rho * ax
        return np.zeros_like(ax)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return np.exp(self.log_weight(x))

    @property
    def label(self) -> str:
        if self.kind == "polynomial":
            return f"poly_k={self.k:g}"
        if self.kind == "exponential":
            return f"exp_rho={self.rho:g}"
        return "none"

    def to_dict(self) -> dict:
        return {"kind": self.kind, "k": self.k, "rho": self.rho}


@dataclass(frozen=True)
class NormValue:
    p: float
    weight: WeightSpec
    value: float
    # largest weighted integrand at the two truncation points
    tail: float = 0.0

    def __float__(self) -> float:
        return self.value


def check_p(p) -> float:
    if isinstance(p, str):
        p = math.inf if p.lower() in ("inf", "infinity") else float(p)
    p = float(p)
    if p not in ALLOWED_P:
        raise InvalidInputError(f"p must be one of 1, 2, 4, inf; got {p}")
    return p


def trapezoid_weights(grid: Grid1D) -> np.ndarray:
    w = np.full(grid.n, grid.dx)
    w[0] = w[-1] = 0.5 * grid.dx
    return w


def integrate(f: GridFunction) -> float:
    """Trapezoid integral of a (signed) grid function."""
    return float(np.dot(trapezoid_weights(f.grid), f.values))


def weighted_norm(f: GridFunction, p=2, w: WeightSpec | None = None) -> NormValue:
    """Weighted L^p norm, evaluated in log space so exponential weights cannot overflow early.

    For p < inf the integral of (|f| weight)^p is taken by the trapezoid rule;
    for p = inf the maximum over grid points is returned.
    """
    p = check_p(p)
    w = w or WeightSpec.none()
    vals = f.values
    x = f.grid.x
    with np.errstate(divide="ignore"):
        loga = np.log(np.abs(vals)) + w.log_weight(x)
    tail = float(np.exp(np.minimum(max(loga[0], loga[-1]) * (1.0 if math.isinf(p) else p), _LOG_MAX)))
    if not np.any(np.isfinite(loga)):
        return NormValue(p, w, 0.0, 0.0)
    if math.isinf(p):
        i = int(np.argmax(loga))
        lognorm = loga[i]
    else:
        terms = p * loga + np.log(trapezoid_weights(f.grid))
        i = int(np.argmax(terms))
        lognorm = logsumexp(terms) / p
    if lognorm > _LOG_MAX:
        raise NormOverflowError("weighted norm overflows double precision", i, float(x[i]))
    return NormValue(p, w, float(math.exp(lognorm)), tail)


def antiderivative(f: GridFunction, *, left_tol: float = 1e-8) -> GridFunction:
    """Cumulative integral from xmin, so the result vanishes at xmin.

    Trapezoid sums with the first Euler-Maclaurin end correction
    -dx^2/12 (f'(x) - f'(xmin)), derivatives from second-order differences.
    """
    if abs(f.values[0]) > left_tol:
        warnings.warn(
            f"integrand does not decay at the left boundary (|f(xmin)| = {abs(f.values[0]):.3g})",
            RuntimeWarning,
            stacklevel=2,
        )
    v, dx = f.values, f.grid.dx
    out = np.empty_like(v)
    out[0] = 0.0
    out[1:] = np.cumsum(0.5 * dx * (v[1:] + v[:-1]))
    fp = np.gradient(v, dx, edge_order=2)
    out -= dx * dx / 12.0 * (fp - fp[0])
    return GridFunction(f.grid, out)


def derivative(f: GridFunction) -> GridFunction:
    """Second-order centered difference (one-sided at the ends)."""
    return GridFunction(f.grid, np.gradient(f.values, f.grid.dx, edge_order=2))


def profile_on(phi: "WaveProfile", grid: Grid1D) -> np.ndarray:
    if phi.phi.grid == grid:
        return phi.phi.values
    return phi.evaluate(grid.x)


def compute_shift(u0: GridFunction, phi: "WaveProfile") -> float:
    """Translation h with zero mass of u0 - phi(. - h)."""
    jump = phi.phi_minus - phi.phi_plus
    if jump == 0:
        raise DegenerateProfileError("profile end states coincide; the shift is undefined")
    diff = GridFunction(u0.grid, u0.values - profile_on(phi, u0.grid))
    return integrate(diff) / jump


def write_csv(f: GridFunction, path: str | Path) -> None:
    data = np.column_stack([f.grid.x, f.values])
    np.savetxt(path, data, delimiter=",", header="x,value", comments="", fmt="%.17g")


def read_csv(path: str | Path) -> GridFunction:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    x, v = data[:, 0], data[:, 1]
    grid = Grid1D(float(x[0]), float(x[-1]), len(x))
    if not np.allclose(grid.x, x, rtol=0, atol=1e-9 * max(1.0, abs(grid.xmax), abs(grid.xmin))):
        raise InvalidInputError(f"{path}: x column is not a uniform grid")
    return GridFunction(grid, v)
