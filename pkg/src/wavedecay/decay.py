"""Weighted-norm time series, decay-rate fits, the convolution integral estimate,
and end-to-end rate experiments for the two nonlinear problems."""
from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import stats

from .errors import FitDomainError, HypothesisViolationError, InvalidInputError, NormOverflowError
from .grid import Grid1D, GridFunction, WeightSpec, antiderivative, weighted_norm
from .nonlinear import PerturbationSpec, evolve_burgers, evolve_kdvb, make_perturbed_initial
from .profiles import FluxSpec, construct_burgers_profile, construct_kdvb_profile
from .trajectory import Trajectory, geometric_times


# --- norm tables and fits -------------------------------------------------------------


@dataclass
class NormTable:
    times: np.ndarray
    p: float
    weights: list[WeightSpec]
    values: np.ndarray  # shape (len(times), len(weights))

    def column(self, i: int) -> np.ndarray:
        return self.values[:, i]

    def rows(self):
        for j, w in enumerate(self.weights):
            for t, v in zip(self.times, self.values[:, j]):
                yield float(t), w.label, float(v)

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w") as fh:
            fh.write("t,weight,norm\n")
            for t, label, v in self.rows():
                fh.write(f"{t:.17g},{label},{v:.17g}\n")


def norm_timeseries(
    traj: Trajectory, p, weights: Sequence[WeightSpec], *, offset: GridFunction | None = None, level: str = "w"
) -> NormTable:
    """Weighted norms of each snapshot (minus offset); level 'v' measures the antiderivative."""
    vals = np.empty((len(traj), len(weights)))
    for i, snap in enumerate(traj.snapshots):
        f = snap if offset is None else snap - offset
        if level == "v":
            f = antiderivative(f, left_tol=math.inf)
        for j, w in enumerate(weights):
            try:
                vals[i, j] = weighted_norm(f, p, w).value
            except NormOverflowError as exc:
                raise NormOverflowError(f"snapshot {i} (t = {traj.times[i]:.6g}): {exc}", exc.index, exc.x) from exc
    return NormTable(np.asarray(traj.times), float(p), list(weights), vals)


@dataclass(frozen=True)
class DecayFit:
    exponent: float
    intercept: float
    window: tuple[float, float]
    stderr: float
    model: str
    samples: int
    max_residual: float

    def __post_init__(self):
        if not self.window[0] < self.window[1]:
            raise InvalidInputError("fit window needs t_lo < t_hi")

    def to_dict(self) -> dict:
        return asdict(self)


def fit_rate(times, norms, model: str = "algebraic", window: tuple[float, float] | None = None) -> DecayFit:
    """Least-squares slope of log(norm) against log t (algebraic) or t (exponential)."""
    if model not in ("algebraic", "exponential"):
        raise InvalidInputError(f"unknown fit model {model!r}")
    t = np.asarray(times, dtype=float)
    y = np.asarray(norms, dtype=float)
    lo, hi = window if window is not None else (t[t > 0].min() if model == "algebraic" else t.min(), t.max())
    sel = (t >= lo * (1 - 1e-12)) & (t <= hi * (1 + 1e-12))
    if model == "algebraic" and np.any(t[sel] <= 0):
        raise FitDomainError("algebraic fits need t > 0 in the window")
    if sel.sum() < 5:
        raise FitDomainError(f"fit window [{lo:g}, {hi:g}] holds {int(sel.sum())} samples; need at least 5")
    bad = sel & ~(y > 0)
    if np.any(bad):
        i = int(np.flatnonzero(bad)[0])
        raise FitDomainError(f"nonpositive norm {y[i]:.3g} at t = {t[i]:.6g} inside the fit window")
    X = np.log(t[sel]) if model == "algebraic" else t[sel]
    Y = np.log(y[sel])
    r = stats.linregress(X, Y)
    resid = Y - (r.intercept + r.slope * X)
    return DecayFit(float(r.slope), float(r.intercept), (float(lo), float(hi)), float(r.stderr), model, int(sel.sum()), float(np.max(np.abs(resid))))


# --- convolution integral estimate ----------------------------------------------------


_KERNELS = {"N": 0.5, "N0": 0.5, "N1": 0.625, "one": 0.0}


@dataclass(frozen=True)
class KernelSpec:
    """M(tau) = max(1, tau^(-a)); bounded on [1, inf) and integrable near 0 for a < 1."""

    a: float = 0.5
    name: str = "N"

    def __post_init__(self):
        if not 0 <= self.a < 1:
            raise HypothesisViolationError(f"kernel exponent a = {self.a} must satisfy 0 <= a < 1 (integrable on (0,1))")

    @classmethod
    def named(cls, name: str) -> "KernelSpec":
        if name not in _KERNELS:
            raise InvalidInputError(f"unknown kernel {name!r}; choose from {sorted(_KERNELS)}")
        return cls(_KERNELS[name], name)

    def __call__(self, tau):
        tau = np.asarray(tau, dtype=float)
        return np.maximum(1.0, tau ** (-self.a)) if self.a > 0 else np.ones_like(tau)


def _gl_panels(fn, breaks: np.ndarray, nodes: int) -> float:
    x, w = np.polynomial.legendre.leggauss(nodes)
    lo, hi = breaks[:-1], breaks[1:]
    mid, half = 0.5 * (hi + lo), 0.5 * (hi - lo)
    pts = mid[:, None] + half[:, None] * x[None, :]
    return float(np.sum(half[:, None] * w[None, :] * fn(pts)))


def _two_sided_breaks(a: float, b: float, level: int) -> np.ndarray:
    """Panels geometric toward both ends, refined by subdivision with level."""
    span = b - a
    if span <= 1.0:
        base = np.linspace(a, b, 3)
    else:
        half = 0.5 * span
        d = np.geomspace(1e-3, half, max(4, int(4 * math.log10(half / 1e-3)) + 1))
        base = np.unique(np.concatenate([[a], a + d, b - d[::-1], [b]]))
    for _ in range(level):
        base = np.sort(np.concatenate([base, 0.5 * (base[1:] + base[:-1])]))
    return base


def convolution_integral(t: float, alpha: float, beta: float, kernel: KernelSpec, level: int = 0, nodes: int = 12) -> float:
    """I(t) = int_0^t M(t-s)(1+t-s)^(-alpha)(1+s)^(-beta) ds, written in tau = t - s.

    On tau < 1 the tau^(-a) singularity is removed exactly by tau = sigma^(1/(1-a)).
    """
    if t <= 0:
        return 0.0
    a = kernel.a
    q = 1.0 / (1.0 - a)
    cut = min(t, 1.0)

    def near(sig):
        tau = sig**q
        return q * (1.0 + tau) ** (-alpha) * (1.0 + t - tau) ** (-beta)

    total = _gl_panels(near, np.linspace(0.0, cut ** (1.0 - a), 2 + 2**level), nodes)
    if t > 1.0:

        def far(tau):
            return (1.0 + tau) ** (-alpha) * (1.0 + t - tau) ** (-beta)

        total += _gl_panels(far, _two_sided_breaks(1.0, t, level), nodes)
    return total


@dataclass
class LemmaC1Report:
    alpha: float
    beta: float
    M_spec: KernelSpec
    t_grid: np.ndarray
    scaled: np.ndarray
    sup_scaled: float
    min_scaled_tail: float
    refinement_sups: list[float]
    refinement_change: float
    t_refined_sup: float
    t_refined_change: float
    branch: str
    elapsed: float = 0.0

    def passed(self, tol: float = 0.01) -> bool:
        return bool(
            math.isfinite(self.sup_scaled)
            and self.refinement_change < tol
            and self.t_refined_change < tol
            and self.min_scaled_tail > 0
        )

    def summary(self) -> dict:
        return {
            "alpha": self.alpha,
            "beta": self.beta,
            "kernel": asdict(self.M_spec),
            "branch": self.branch,
            "t_range": [float(self.t_grid[0]), float(self.t_grid[-1])],
            "sup_scaled": self.sup_scaled,
            "min_scaled_tail": self.min_scaled_tail,
            "refinement_sups": self.refinement_sups,
            "refinement_change": self.refinement_change,
            "t_refined_change": self.t_refined_change,
            "passed": self.passed(),
        }

    def write_csv(self, path: str | Path) -> None:
        np.savetxt(path, np.column_stack([self.t_grid, self.scaled]), delimiter=",", header="t,scaled", comments="", fmt="%.17g")


def _lemma_branch(alpha: float, beta: float) -> str:
    if alpha > 1:
        return "alpha>1"
    return "alpha=1 (log-corrected)" if alpha == 1 else "alpha<1<beta"


def verify_lemma_c1(
    alpha: float,
    beta: float,
    M_spec: KernelSpec | None = None,
    t_grid=None,
    *,
    levels: int = 3,
    tail_fraction: float = 0.25,
) -> LemmaC1Report:
    """sup_t t^alpha I(t) over t_grid, its stability under quadrature and t-grid refinement,
    and the minimum over the tail of the grid (sharpness, informational)."""
    if not alpha > 0:
        raise HypothesisViolationError(f"need 0 < alpha; got alpha = {alpha}")
    if not alpha < beta:
        raise HypothesisViolationError(f"need alpha < beta; got alpha = {alpha} >= beta = {beta}")
    if not beta > 1:
        raise HypothesisViolationError(f"need beta > 1; got beta = {beta}")
    M = M_spec or KernelSpec()
    t = np.geomspace(1.0, 1e4, 161) if t_grid is None else np.asarray(t_grid, dtype=float)
    start = time.perf_counter()

    def scaled_at(ts, level):
        return np.array([tt**alpha * convolution_integral(tt, alpha, beta, M, level) for tt in ts])

    sups = []
    scaled = None
    for lev in range(levels):
        scaled = scaled_at(t, lev)
        sups.append(float(scaled.max()))
    change = abs(sups[-1] - sups[-2]) / sups[-1] if len(sups) > 1 else math.nan
    t_fine = np.sort(np.concatenate([t, np.sqrt(t[1:] * t[:-1])]))
    fine_sup = float(scaled_at(t_fine, levels - 1).max())
    tail = t >= t[-1] ** (1 - tail_fraction) * t[0] ** tail_fraction
    return LemmaC1Report(
        alpha, beta, M, t, scaled, sups[-1], float(scaled[tail].min()), sups, float(change),
        fine_sup, abs(fine_sup - sups[-1]) / fine_sup, _lemma_branch(alpha, beta), time.perf_counter() - start,
    )


# --- rate experiments -----------------------------------------------------------------


@dataclass(frozen=True)
class TheoremConfig:
    kind: str = "thm31"
    flux: str = "burgers_quadratic"
    b: float = 2.0
    alpha: float = 3.0
    k: float = 3.0
    ms: tuple[float, ...] = (1.0, 1.5, 2.0)
    ps: tuple[float, ...] = (math.inf,)
    delta: float = 1e-2
    family: str = "poly_decay"
    derivative: bool = True
    half_width: float = 100.0
    n: int = 4096
    T: float = 80.0
    dt: float | None = None
    t_first: float = 0.1
    snapshots: int = 60
    window: tuple[float, float] = (5.0, 80.0)
    tolerance: float = 0.3

    def __post_init__(self):
        if self.kind not in ("thm31", "thm42"):
            raise InvalidInputError(f"kind must be thm31 or thm42, got {self.kind!r}")
        if not self.k > 1:
            raise InvalidInputError(f"k must exceed 1 (got {self.k})")
        for m in self.ms:
            if not 0 < m < self.k:
                raise InvalidInputError(f"each m must lie in (0, k) = (0, {self.k}); got m = {m}")
        if not self.window[0] < self.window[1] <= self.T:
            raise InvalidInputError("fit window must satisfy t_lo < t_hi <= T")

    @classmethod
    def thm42_default(cls, **kw) -> "TheoremConfig":
        base = dict(kind="thm42", flux="kdvb_cubic", ms=(1.5,), ps=(2.0, 4.0), tolerance=0.4)
        base.update(kw)
        return cls(**base)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["ps"] = ["inf" if math.isinf(p) else p for p in self.ps]
        return d


@dataclass
class RateResult:
    m: float
    p: float
    target: float
    fit: DecayFit | None
    passed: bool | None
    v_fit: DecayFit | None = None

    def to_dict(self) -> dict:
        return {
            "m": self.m,
            "p": "inf" if math.isinf(self.p) else self.p,
            "target": self.target,
            "slope": None if self.fit is None else self.fit.exponent,
            "stderr": None if self.fit is None else self.fit.stderr,
            "deviation": None if self.fit is None else self.fit.exponent - self.target,
            "verdict": None if self.passed is None else ("pass" if self.passed else "fail"),
            "v_level_slope": None if self.v_fit is None else self.v_fit.exponent,
        }


@dataclass
class TheoremReport:
    config: TheoremConfig
    epsilon: float
    shift: float
    results: list[RateResult]
    tables: dict[float, NormTable]
    monotone_in_m: dict[str, bool]
    degenerate: bool
    mass_drift: float
    elapsed: float
    trajectory: Trajectory | None = field(default=None, repr=False)

    @property
    def passed(self) -> bool:
        if self.degenerate:
            return False
        return all(r.passed for r in self.results) and all(self.monotone_in_m.values())

    def summary(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "epsilon": self.epsilon,
            "shift": self.shift,
            "degenerate": self.degenerate,
            "results": [r.to_dict() for r in self.results],
            "monotone_in_m": self.monotone_in_m,
            "mass_drift": self.mass_drift,
            "passed": self.passed,
            "elapsed_seconds": self.elapsed,
        }


def _setup(config: TheoremConfig):
    grid = Grid1D.symmetric(config.half_width, config.n)
    flux = FluxSpec.from_name(config.flux, b=config.b)
    if config.kind == "thm31":
        profile = construct_burgers_profile(flux, grid)
    else:
        profile = construct_kdvb_profile(flux, config.alpha, grid)
    return grid, flux, profile


def theorem_experiment(config: TheoremConfig) -> TheoremReport:
    """make_perturbed_initial -> evolve -> weighted norms of u - phi(. - h) -> algebraic fit per (m, p)."""
    start = time.perf_counter()
    grid, flux, profile = _setup(config)
    eps_p = config.ps[0] if config.kind == "thm42" else math.inf
    spec = PerturbationSpec(config.family, config.delta, config.k, config.derivative, eps_p)
    w0, eps, h = make_perturbed_initial(profile, spec)
    times = geometric_times(config.t_first, config.T, config.snapshots)
    if config.kind == "thm31":
        traj = evolve_burgers(flux, profile, w0, config.T, config.dt, times[1:])
    else:
        traj = evolve_kdvb(flux, config.alpha, profile, w0, config.T, config.dt, times[1:])
    traj.meta.update({"epsilon": eps, "shift": h, "perturbation": spec.to_dict()})
    offset = None if h == 0 else profile.shifted(h).phi - profile.phi
    weights = [WeightSpec.polynomial(m) for m in config.ms]
    degenerate = config.delta == 0
    results, tables, monotone = [], {}, {}
    for p in config.ps:
        table = norm_timeseries(traj, p, weights, offset=offset)
        tables[p] = table
        vtable = None if degenerate else norm_timeseries(traj, p, weights, offset=offset, level="v")
        slopes = []
        for j, m in enumerate(config.ms):
            target = m - config.k
            if degenerate:
                results.append(RateResult(m, p, target, None, None))
                continue
            fit = fit_rate(table.times, table.column(j), "algebraic", config.window)
            vfit = fit_rate(vtable.times, vtable.column(j), "algebraic", config.window)
            slopes.append(fit.exponent)
            results.append(RateResult(m, p, target, fit, abs(fit.exponent - target) <= config.tolerance, vfit))
        key = "inf" if math.isinf(p) else f"{p:g}"
        monotone[key] = bool(np.all(np.diff(slopes) > 0)) if slopes else False
    return TheoremReport(
        config, eps, h, results, tables, monotone, degenerate, traj.mass_drift, time.perf_counter() - start, traj
    )
