"""K-functional between L^p and exponentially weighted L^p, and the interpolation checks built on it."""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import simpson
from scipy.interpolate import CubicSpline

from .errors import DomainCoverageError, InvalidInputError
from .grid import Grid1D, GridFunction, WeightSpec, check_p, trapezoid_weights, weighted_norm


def _conj(p: float) -> float:
    return p / (p - 1.0)


def log_m_p_exp(t, p) -> np.ndarray:
    """log m_p(e^t), stable for large |t| (m_p(e^t) -> 1 as t -> inf)."""
    p = check_p(p)
    t = np.asarray(t, dtype=float)
    if p == 1.0 or math.isinf(p):
        return np.minimum(t, 0.0)
    q = _conj(p)
    return np.where(t > 0, -np.log1p(np.exp(-q * np.abs(t))) / q, t - np.log1p(np.exp(q * np.minimum(t, 0.0))) / q)


def m_p(r, p) -> np.ndarray:
    """r / (1 + r^q)^(1/q), q = p/(p-1); min(1, r) for p = 1 and p = inf."""
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise InvalidInputError("m_p is defined for r >= 0")
    p = check_p(p)
    if p == 1.0 or math.isinf(p):
        out = np.minimum(r, 1.0)
    else:
        q = _conj(p)
        with np.errstate(divide="ignore", over="ignore"):
            small = r * np.exp(-np.log1p(r**q) / q)
            large = np.exp(-np.log1p(np.where(r > 0, r, 1.0) ** -q) / q)
        out = np.where(r <= 1.0, small, large)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class KFunctionalResult:
    s: float
    p: float
    value: float
    method: str


@dataclass(frozen=True)
class StarNormResult:
    p: float
    k: float
    value: float
    s_quadrature: str
    truncation_bound: float = 0.0


def _kp_closed(u: GridFunction, s: np.ndarray, p: float) -> np.ndarray:
    """K(s,u)^p for an array of s (p < inf)."""
    au = np.abs(u.values)
    nz = au > 0
    ax = np.abs(u.x[nz])
    w = trapezoid_weights(u.grid)[nz] * au[nz] ** p
    out = np.empty(len(s))
    chunk = max(1, 4_000_000 // max(1, len(ax)))
    for i in range(0, len(s), chunk):
        ss = s[i : i + chunk, None]
        out[i : i + chunk] = np.exp(p * log_m_p_exp(ss + ax[None, :], p)) @ w
    return out


def k_functional_closed(u: GridFunction, s: float, p=2) -> KFunctionalResult:
    p = check_p(p)
    if math.isinf(p):
        vals = np.abs(u.values) * np.exp(log_m_p_exp(s + np.abs(u.x), p))
        return KFunctionalResult(s, p, float(np.max(vals)), "closed_form")
    kp = _kp_closed(u, np.array([float(s)]), p)[0]
    return KFunctionalResult(s, p, float(kp ** (1.0 / p)), "closed_form")


def _inf_integrand_minimizer(u: np.ndarray, t: np.ndarray, p: float) -> np.ndarray:
    """|u - v0|^p + e^{tp} |v0|^p with the explicit minimizer v0, t = s + |x|."""
    au = np.abs(u)
    if p == 1.0:
        # v0 = u where t <= 0, else 0
        return np.where(t <= 0, np.exp(t) * au, au)
    q = _conj(p)
    # 1 - a and a for a = 1/(1 + e^{qt}), in logs
    log_a = -np.logaddexp(0.0, q * t)
    log_1ma = q * t + log_a
    with np.errstate(divide="ignore"):
        lu = np.log(au)
    return np.exp(p * (lu + log_1ma)) + np.exp(p * (t + lu + log_a))


def _golden_pointwise(u: np.ndarray, t: np.ndarray, p: float, iters: int = 100) -> np.ndarray:
    """min over zeta of |u - zeta|^p + e^{tp}|zeta|^p, vectorized golden-section search.

    zeta = u * sigma(theta) with a logistic reparametrization so both ends of
    [0, u] are resolved to exponential precision.
    """
    au = np.abs(u)
    with np.errstate(divide="ignore"):
        lu = np.log(au)

    def logobj(theta):
        ls_pos = -np.logaddexp(0.0, -theta)  # log sigma(theta)
        ls_neg = -np.logaddexp(0.0, theta)  # log (1 - sigma(theta))
        return np.logaddexp(p * ls_neg, p * (t + ls_pos))

    qeff = 1.0 if p == 1.0 else _conj(p)
    B = qeff * np.abs(t) + 80.0
    lo, hi = -B, B.copy()
    gr = (math.sqrt(5.0) - 1.0) / 2.0
    c = hi - gr * (hi - lo)
    d = lo + gr * (hi - lo)
    fc, fd = logobj(c), logobj(d)
    for _ in range(iters):
        left = fc < fd
        hi = np.where(left, d, hi)
        lo = np.where(left, lo, c)
        nc = hi - gr * (hi - lo)
        nd = lo + gr * (hi - lo)
        # one new evaluation per point; the other interior point is reused
        x_new = np.where(left, nc, nd)
        f_new = logobj(x_new)
        c, d, fc, fd = np.where(left, nc, d), np.where(left, c, nd), np.where(left, f_new, fd), np.where(left, fc, f_new)
    best = np.minimum(np.minimum(fc, fd), np.minimum(logobj(lo), logobj(hi)))
    return np.where(au > 0, np.exp(p * lu + best), 0.0)


def k_functional_inf(u: GridFunction, s: float, p=2, *, method: str = "minimizer") -> KFunctionalResult:
    """K(s,u) as the infimum over v of ||u - v||_p^p + e^{sp} ||v||_{p,rho=1}^p.

    method="minimizer" plugs in the explicit pointwise minimizer;
    method="golden" minimizes each grid point independently.
    """
    p = check_p(p)
    if math.isinf(p):
        raise InvalidInputError("the infimum form is used for p < inf only")
    t = s + np.abs(u.x)
    if method == "minimizer":
        integrand = _inf_integrand_minimizer(u.values, t, p)
    elif method == "golden":
        integrand = _golden_pointwise(u.values, t, p)
    else:
        raise InvalidInputError(f"unknown method {method!r}")
    total = float(np.dot(trapezoid_weights(u.grid), integrand))
    return KFunctionalResult(s, p, total ** (1.0 / p), "infimum")


def h_weight(s, k: float, p: float) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    return np.where(s >= 0, np.exp(-np.maximum(s, 0.0)), (1.0 - np.minimum(s, 0.0)) ** (k * p - 1.0))


def H_tail(r, k: float, p: float) -> np.ndarray:
    """Integral of h_k from r to infinity (closed form)."""
    r = np.asarray(r, dtype=float)
    neg = ((1.0 - np.minimum(r, 0.0)) ** (k * p) - 1.0) / (k * p) + 1.0
    return np.where(r >= 0, np.exp(-np.maximum(r, 0.0)), neg)


def H_bound_ratio(k: float, l: float, p: float, s: np.ndarray, t: np.ndarray) -> float:
    """max over the (s, t) grid of H_l(s+t) / (H_k(s) (1+t)^(l-k))."""
    S, T = np.meshgrid(s, t, indexing="ij")
    return float(np.max(H_tail(S + T, l, p) / (H_tail(S, k, p) * (1.0 + T) ** (l - k))))


def star_norm(u: GridFunction, p=2, k: float = 1.0, *, ds: float = 0.02, rel_tol: float = 1e-12) -> StarNormResult:
    """(int K(s,u)^p h_k(s) ds)^(1/p) on a truncated s-interval, Simpson on each side of s = 0."""
    p = check_p(p)
    if math.isinf(p):
        raise InvalidInputError("star norm is defined for p < inf")
    if k <= 0:
        raise InvalidInputError("k must be positive")
    L = float(np.max(np.abs(u.x)))
    up = weighted_norm(u, p).value ** p
    if up == 0:
        return StarNormResult(p, k, 0.0, "trivial")
    s_right = max(30.0, math.log(1.0 / rel_tol) + 2.0)
    s_left = L + 30.0
    for _ in range(20):
        sl = np.linspace(-s_left, 0.0, int(round(s_left / ds)) + 1)
        sr = np.linspace(0.0, s_right, int(round(s_right / ds)) + 1)
        fl = _kp_closed(u, sl, p) * h_weight(sl, k, p)
        fr = _kp_closed(u, sr, p) * h_weight(sr, k, p)
        total = simpson(fl, x=sl) + simpson(fr, x=sr)
        tail = fl[0] / p + up * math.exp(-s_right)
        if tail <= rel_tol * total:
            break
        s_left *= 1.5
    desc = f"simpson ds={ds:g} on [{-s_left:.4g}, {s_right:.4g}]"
    return StarNormResult(p, k, total ** (1.0 / p), desc, tail)


# --- the half-line shift and interpolation verification -----------------------------


def shift_semigroup_halfline(v: GridFunction | Callable, t: float, grid: Grid1D | None = None, *, tol: float = 1e-10) -> GridFunction:
    """x -> v(x - t) on a grid over (-inf, 0].

    v may be a callable (exact) or a grid function; in the latter case points
    needing v left of the grid are filled with 0 only if v is below tol there.
    """
    if t < 0:
        raise InvalidInputError("t must be nonnegative")
    if callable(v) and not isinstance(v, GridFunction):
        if grid is None:
            raise InvalidInputError("a grid is needed when v is a callable")
        return GridFunction(grid, v(grid.x - t))
    grid = v.grid
    if grid.xmax > 1e-12:
        raise InvalidInputError("half-line grid must end at x <= 0")
    if t == 0:
        return v
    xs = grid.x - t
    inside = xs >= grid.xmin
    if not np.all(inside) and abs(v.values[0]) > tol:
        raise DomainCoverageError(
            f"v(x - {t:g}) needs data left of xmin = {grid.xmin:g}, where |v| = {abs(v.values[0]):.3g} > {tol:g}"
        )
    out = np.zeros(grid.n)
    out[inside] = CubicSpline(grid.x, v.values)(xs[inside])
    return GridFunction(grid, out)


def halfline_sharp_value(t: float, k: float, l: float) -> float:
    """sup over x <= 0 of (1 - x)^l (1 + t - x)^(-k): the weighted sup of the shifted (1 - x)^(-k)."""
    y = l * t / (k - l)
    if y <= 1.0:
        return (1.0 + t) ** (-k)
    return y**l * (y + t) ** (-k)


Semigroup = Callable[[GridFunction, Sequence[float]], Sequence[GridFunction]]


def halfline_shift_evaluator(v: GridFunction, times: Sequence[float]) -> list[GridFunction]:
    return [shift_semigroup_halfline(v, t) for t in times]


@dataclass
class InterpolationReport:
    k: float
    l: float
    p: float
    t: np.ndarray
    ratios: np.ndarray
    bound: float
    status: str
    sup_ratio: float
    min_ratio: float
    precondition: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.status == "pass"

    def write(self, directory: str | Path, stem: str = "interpolation") -> None:
        directory = Path(directory)
        with open(directory / f"{stem}.csv", "w", newline="") as fh:
            wr = csv.writer(fh, lineterminator="\n")
            wr.writerow(["t", "norm_ratio", "pass"])
            for t, r in zip(self.t, self.ratios):
                wr.writerow([f"{t:.17g}", f"{r:.17g}", int(r <= self.bound)])
        (directory / f"{stem}.json").write_text(json.dumps(self.summary(), indent=2, sort_keys=True) + "\n")

    def summary(self) -> dict:
        return {
            "k": self.k,
            "l": self.l,
            "p": "inf" if math.isinf(self.p) else self.p,
            "bound": self.bound,
            "status": self.status,
            "sup_ratio": self.sup_ratio,
            "min_ratio": self.min_ratio,
            "precondition": self.precondition,
        }


def verify_interpolation(
    semigroup: Semigroup,
    k: float,
    l: float,
    family: Sequence[GridFunction],
    t_grid: Sequence[float],
    *,
    p=math.inf,
    bound: float = 1.0,
    probe: GridFunction | None = None,
    rho: float = 1.0,
    c0_max: float = 10.0,
) -> InterpolationReport:
    """Ratios ||S_t v||_{p,l} (1+t)^(k-l) / ||v||_{p,k}; pass iff all stay below bound.

    Before the sweep, unweighted stability and exponential decay of a probe in
    the rho-weighted norm are checked on the same t-grid.
    """
    p = check_p(p)
    if not 0 < l < k:
        raise InvalidInputError("need 0 < l < k")
    t = np.asarray(t_grid, dtype=float)
    pre = _check_preconditions(semigroup, family, t, p, probe, rho, c0_max)
    if not pre["ok"]:
        return InterpolationReport(k, l, p, t, np.full(len(t), np.nan), bound, "precondition-violated", math.nan, math.nan, pre)
    wk, wl = WeightSpec.polynomial(k), WeightSpec.polynomial(l)
    ratios = np.zeros(len(t))
    for v in family:
        base = weighted_norm(v, p, wk).value
        outs = semigroup(v, t)
        r = np.array([weighted_norm(o, p, wl).value for o in outs]) * (1.0 + t) ** (k - l) / base
        ratios = np.maximum(ratios, r)
    status = "pass" if np.all(ratios <= bound) else "fail"
    return InterpolationReport(k, l, p, t, ratios, bound, status, float(ratios.max()), float(ratios.min()), pre)


def _check_preconditions(semigroup, family, t, p, probe, rho, c0_max) -> dict:
    c0 = 0.0
    for v in family:
        base = weighted_norm(v, p).value
        outs = semigroup(v, t)
        c0 = max(c0, max(weighted_norm(o, p).value for o in outs) / base)
    info = {"C0_unweighted": c0, "ok": c0 <= c0_max}
    if probe is not None:
        we = WeightSpec.exponential(rho)
        base = weighted_norm(probe, p, we).value
        vals = np.array([weighted_norm(o, p, we).value for o in semigroup(probe, t)]) / base
        pos = vals > 0
        rate = -np.polyfit(t[pos], np.log(vals[pos]), 1)[0] if pos.sum() >= 2 else math.inf
        info.update({"probe_rate": float(rate), "C0_weighted": float(np.max(vals * np.exp(np.minimum(rate, 1.0) * t)))})
        info["ok"] = bool(info["ok"] and rate > 0)
    info["ok"] = bool(info["ok"])
    return info


def equivalence_constants(family: Sequence[GridFunction], p=2, k: float = 1.0) -> tuple[float, float]:
    """min and max of ||u||_* / ||u||_{p,k} over a family."""
    ratios = [star_norm(u, p, k).value / weighted_norm(u, p, WeightSpec.polynomial(k)).value for u in family]
    return float(min(ratios)), float(max(ratios))
