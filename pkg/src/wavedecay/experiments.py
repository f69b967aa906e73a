"""Dispatch from a validated config to the numerical modules; every runner
writes its CSV artifacts into the run directory and returns a JSON-ready dict."""
from __future__ import annotations

import json
import math
import platform
import time
from importlib import metadata
from pathlib import Path
from typing import Callable

import numpy as np
import scipy

from .config import ExperimentConfig, parse_p
from .decay import KernelSpec, TheoremConfig, fit_rate, norm_timeseries, theorem_experiment, verify_lemma_c1
from .errors import WaveDecayError
from .grid import Grid1D, GridFunction, WeightSpec, weighted_norm, write_csv
from .kfunctional import halfline_sharp_value, k_functional_closed, k_functional_inf, shift_semigroup_halfline
from .nonlinear import PerturbationSpec, evolve_burgers, evolve_kdvb, make_perturbed_initial
from .profiles import (
    FluxSpec,
    construct_burgers_profile,
    construct_kdvb_profile,
    fkpp_residual,
    profile_residual,
    save_profile,
)
from .semigroups import LinearOperatorSpec, decay_certificate, evolve_kdvb_linear, evolve_parabolic, find_certificate
from .trajectory import geometric_times


class ExperimentFailure(WaveDecayError):
    """A module error re-raised with the experiment kind attached."""

    def __init__(self, kind: str, cause: Exception):
        super().__init__(f"[{kind}] {type(cause).__name__}: {cause}")
        self.kind = kind
        self.cause = cause


def _logistic(x):
    return 0.5 * (1.0 - np.tanh(0.5 * np.asarray(x)))


def _grid(cfg: ExperimentConfig) -> Grid1D:
    return Grid1D(cfg.grid.xmin, cfg.grid.xmax, cfg.grid.n)


def _flux(cfg: ExperimentConfig) -> FluxSpec:
    return FluxSpec.from_name(cfg.flux.name, b=cfg.flux.b)


def _profile(cfg: ExperimentConfig, grid: Grid1D, family: str | None = None):
    family = family or cfg.profile.family
    flux = _flux(cfg)
    if family == "viscous":
        return flux, construct_burgers_profile(flux, grid, center=cfg.profile.center, step=cfg.profile.step)
    return flux, construct_kdvb_profile(flux, cfg.profile.alpha, grid, center=cfg.profile.center, step=cfg.profile.step)


def _closed_form_known(cfg: ExperimentConfig, family: str) -> bool:
    if family == "viscous":
        return cfg.flux.name == "burgers_quadratic"
    return cfg.flux.name == "kdvb_cubic" and cfg.flux.b == 2.0 and cfg.profile.alpha == 3.0


def run_profile(cfg: ExperimentConfig, out: Path) -> dict:
    grid = _grid(cfg)
    start = time.perf_counter()
    flux, prof = _profile(cfg, grid)
    elapsed = time.perf_counter() - start
    save_profile(prof, out / "profile")
    res: dict = {"family": prof.family, "phi_minus": prof.phi_minus, "phi_plus": prof.phi_plus, "construct_seconds": elapsed}
    res["ode_error_estimate"] = prof.meta.get("ode_error_estimate")
    if _closed_form_known(cfg, prof.family):
        err = float(np.max(np.abs(prof.phi.values - _logistic(grid.x - cfg.profile.center))))
        tol = 1e-8 if prof.family == "viscous" else 1e-6
        res["logistic_sup_error"] = err
        res["logistic_tolerance"] = tol
        res["verdict"] = "pass" if err <= tol else "fail"
    if prof.family == "kdvb":
        res["residual_sup"] = float(np.max(np.abs(profile_residual(prof))))
        if math.isclose(grid.xmin, -grid.xmax):
            res["fkpp_residual_sup"] = float(np.max(np.abs(fkpp_residual(prof))))
    return res


def _perturbation(cfg: ExperimentConfig, p: float = math.inf) -> PerturbationSpec:
    pt = cfg.perturbation
    return PerturbationSpec(pt.family, pt.delta, pt.k, pt.derivative, p)


def _run_nonlinear(cfg: ExperimentConfig, out: Path, family: str) -> dict:
    grid = _grid(cfg)
    flux, prof = _profile(cfg, grid, family)
    spec = _perturbation(cfg, math.inf if family == "viscous" else 2.0)
    w0, eps, h = make_perturbed_initial(prof, spec)
    times = geometric_times(cfg.time.t_first, cfg.time.T, cfg.time.snapshots)[1:]
    dt = cfg.time.dt or None
    if family == "viscous":
        traj = evolve_burgers(flux, prof, w0, cfg.time.T, dt, times)
    else:
        traj = evolve_kdvb(flux, cfg.profile.alpha, prof, w0, cfg.time.T, dt, times)
    traj.meta.update({"epsilon": eps, "shift": h, "perturbation": spec.to_dict()})
    traj.save(out / "trajectory")
    offset = None if h == 0 else prof.shifted(h).phi - prof.phi
    table = norm_timeseries(traj, 2, [WeightSpec.none()], offset=offset)
    sup = norm_timeseries(traj, math.inf, [WeightSpec.none()], offset=offset)
    table.write_csv(out / "norms_L2.csv")
    sup.write_csv(out / "norms_Linf.csv")
    bound = 1e-8 * (1.0 + cfg.time.T)
    return {
        "epsilon": eps,
        "shift": h,
        "dt": traj.meta["dt"],
        "mass_drift": traj.mass_drift,
        "mass_bound": bound,
        "mass_verdict": "pass" if traj.mass_drift <= bound else "fail",
        "final_L2": float(table.values[-1, 0]),
        "final_Linf": float(sup.values[-1, 0]),
        "bounded": bool(np.all(np.isfinite(sup.values))),
    }


def run_evolve_burgers(cfg, out):
    return _run_nonlinear(cfg, out, "viscous")


def run_evolve_kdvb(cfg, out):
    return _run_nonlinear(cfg, out, "kdvb")


def run_linear_semigroup(cfg: ExperimentConfig, out: Path) -> dict:
    grid = _grid(cfg)
    op_cfg = cfg.operator
    family = "viscous" if op_cfg.family == "parabolic_A1" else "kdvb"
    flux, prof = _profile(cfg, grid, family)
    if op_cfg.coefficient == "profile":
        c = GridFunction(grid, flux.d1(prof.phi.values))
    else:
        c = GridFunction.zeros(grid)
    alpha = cfg.profile.alpha if op_cfg.family == "kdvb_B1" else 0.0
    op = LinearOperatorSpec(op_cfg.family, c, None, alpha, op_cfg.form)
    if op_cfg.data == "gaussian":
        u0 = GridFunction.from_callable(grid, lambda x: np.exp(-x * x))
    else:
        u0 = GridFunction.from_callable(grid, lambda x: (1.0 + np.abs(x)) ** -3.0)
    T = cfg.time.T
    times = np.linspace(T / cfg.time.snapshots, T, cfg.time.snapshots)
    res: dict = {"operator": op.to_dict()}
    if op_cfg.family == "parabolic_A1":
        dt = cfg.time.dt or min(0.5 * grid.dx / max(float(np.max(np.abs(c.values))), 1e-12), 0.01)
        traj = evolve_parabolic(op, u0, T, dt, times)
        weight = WeightSpec.exponential(op_cfg.rho)
        table = norm_timeseries(traj, math.inf, [weight])
    else:
        traj = evolve_kdvb_linear(op, u0, T, cfg.time.dt or None, times)
        if op_cfg.coefficient == "profile":
            cert = find_certificate(c, alpha, np.linspace(0.0, min(alpha / 3, op_cfg.rho_max), 31)[1:])
            res["certificate"] = {"rho": float(cert.rho), "gamma": cert.gamma, "sup_F_rho": cert.sup_F_rho, "x0": cert.x0}
            energy = np.sqrt([cert.energy(s) for s in traj.snapshots])
            weight = WeightSpec.exponential(float(cert.rho))
            table = norm_timeseries(traj, 2, [weight])
            table.values = np.column_stack([energy, table.values[:, 0]])
            table.weights = [WeightSpec.none(), weight]
        else:
            weight = WeightSpec.exponential(op_cfg.rho)
            table = norm_timeseries(traj, 2, [weight])
        l2 = norm_timeseries(traj, 2, [WeightSpec.none()]).column(0)
        res["l2_max_relative_increase"] = float(np.max(np.diff(l2) / l2[:-1]))
    traj.save(out / "trajectory")
    table.write_csv(out / "norms.csv")
    window = (T * (1 - op_cfg.fit_fraction), T)
    fit = fit_rate(table.times, table.column(0), "exponential", window)
    res["rate"] = -fit.exponent
    res["rate_stderr"] = fit.stderr
    res["fit_window"] = list(window)
    if "certificate" in res:
        res["rate_verdict"] = "pass" if -fit.exponent >= res["certificate"]["gamma"] / 2 else "fail"
    return res


def random_test_functions(grid: Grid1D, count: int, seed: int) -> list[GridFunction]:
    """Sums of two or three bumps (Gaussian or algebraic) with random signs, centers and widths."""
    rng = np.random.default_rng(seed)
    out = []
    x = grid.x
    for _ in range(count):
        v = np.zeros(grid.n)
        for _ in range(int(rng.integers(2, 4))):
            amp = rng.uniform(-2.0, 2.0)
            c0 = rng.uniform(-5.0, 5.0)
            wd = rng.uniform(0.5, 3.0)
            if rng.random() < 0.5:
                v += amp * np.exp(-(((x - c0) / wd) ** 2))
            else:
                v += amp * (1.0 + ((x - c0) / wd) ** 2) ** -2.0
        out.append(GridFunction(grid, v))
    return out


def run_kfunc(cfg: ExperimentConfig, out: Path) -> dict:
    grid = _grid(cfg)
    kf = cfg.kfunc
    funcs = random_test_functions(grid, kf.count, cfg.seed)
    rows = []
    worst = 0.0
    for i, u in enumerate(funcs):
        for p in (parse_p(v) for v in kf.p):
            for s in kf.s:
                a = k_functional_closed(u, s, p).value
                b = k_functional_inf(u, s, p, method="minimizer").value
                c = k_functional_inf(u, s, p, method="golden").value
                rel = max(abs(a - b), abs(a - c)) / a
                worst = max(worst, rel)
                rows.append((i, p, s, a, b, c, rel))
    with open(out / "kfunctional.csv", "w") as fh:
        fh.write("function,p,s,closed,minimizer,golden,max_rel_diff\n")
        for r in rows:
            fh.write(f"{r[0]},{r[1]:g},{r[2]:.17g},{r[3]:.17g},{r[4]:.17g},{r[5]:.17g},{r[6]:.17g}\n")
    return {"functions": kf.count, "max_rel_diff": worst, "tolerance": kf.rel_tol, "verdict": "pass" if worst <= kf.rel_tol else "fail"}


def run_interp(cfg: ExperimentConfig, out: Path) -> dict:
    it = cfg.interp
    p = parse_p(it.p)
    grid = Grid1D(-it.half_width, 0.0, it.n)
    v = lambda x: (1.0 - x) ** (-it.k)  # noqa: E731
    t = np.geomspace(it.t_min, it.t_max, it.count)
    wl = WeightSpec.polynomial(it.l)
    base = weighted_norm(GridFunction(grid, v(grid.x)), p, WeightSpec.polynomial(it.k)).value
    scaled = np.array([weighted_norm(shift_semigroup_halfline(v, tt, grid), p, wl).value for tt in t]) * (1 + t) ** (it.k - it.l)
    oracle = None
    if math.isinf(p):
        oracle = np.array([halfline_sharp_value(tt, it.k, it.l) for tt in t]) * (1 + t) ** (it.k - it.l)
    band = float(scaled.max() / scaled.min())
    with open(out / "interpolation.csv", "w") as fh:
        fh.write("t,scaled_norm,oracle\n")
        for i, tt in enumerate(t):
            o = "" if oracle is None else f"{oracle[i]:.17g}"
            fh.write(f"{tt:.17g},{scaled[i]:.17g},{o}\n")
    res = {
        "k": it.k,
        "l": it.l,
        "p": it.p,
        "data_norm": base,
        "scaled_min": float(scaled.min()),
        "scaled_max": float(scaled.max()),
        "band_ratio": band,
        "band_limit": it.band,
        "verdict": "pass" if band <= it.band and scaled.min() > 0 else "fail",
    }
    if oracle is not None:
        res["oracle_max_rel_diff"] = float(np.max(np.abs(scaled - oracle) / oracle))
    return res


def run_lemma(cfg: ExperimentConfig, out: Path) -> dict:
    lm = cfg.lemma
    rep = verify_lemma_c1(lm.alpha, lm.beta, KernelSpec.named(lm.kernel), np.geomspace(lm.t_min, lm.t_max, lm.count), levels=lm.levels)
    rep.write_csv(out / "lemma_c1.csv")
    return rep.summary()


def _theorem_config(cfg: ExperimentConfig) -> TheoremConfig:
    pt = cfg.perturbation
    return TheoremConfig(
        kind=cfg.kind,
        flux=cfg.flux.name,
        b=cfg.flux.b,
        alpha=cfg.profile.alpha,
        k=pt.k,
        ms=tuple(float(m) for m in cfg.norms.m),
        ps=tuple(parse_p(p) for p in cfg.norms.p),
        delta=pt.delta,
        family=pt.family,
        derivative=pt.derivative,
        half_width=0.5 * (cfg.grid.xmax - cfg.grid.xmin),
        n=cfg.grid.n,
        T=cfg.time.T,
        dt=cfg.time.dt or None,
        t_first=cfg.time.t_first,
        snapshots=cfg.time.snapshots,
        window=(float(cfg.fit.window[0]), float(cfg.fit.window[1])),
        tolerance=cfg.fit.tolerance,
    )


def run_theorem(cfg: ExperimentConfig, out: Path) -> dict:
    rep = theorem_experiment(_theorem_config(cfg))
    for p, table in rep.tables.items():
        table.write_csv(out / f"norms_p{'inf' if math.isinf(p) else f'{p:g}'}.csv")
    summary = rep.summary()
    summary.pop("config")
    return summary


RUNNERS: dict[str, Callable[[ExperimentConfig, Path], dict]] = {
    "profile": run_profile,
    "evolve-burgers": run_evolve_burgers,
    "evolve-kdvb": run_evolve_kdvb,
    "linear-semigroup": run_linear_semigroup,
    "kfunc": run_kfunc,
    "interp-verify": run_interp,
    "lemma-c1": run_lemma,
    "thm31": run_theorem,
    "thm42": run_theorem,
}


def _versions() -> dict:
    try:
        pkg = metadata.version("artifact")
    except metadata.PackageNotFoundError:
        pkg = "unknown"
    return {"wavedecay": pkg, "numpy": np.__version__, "scipy": scipy.__version__, "python": platform.python_version()}


def _jsonable(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, float) and math.isinf(o):
        return "inf"
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def _verdicts(results: dict) -> list[str]:
    found = []

    def walk(node):
        if isinstance(node, dict):
            for k, v in node.items():
                if k in ("verdict", "mass_verdict", "rate_verdict") and v is not None:
                    found.append(v)
                elif k == "passed" and isinstance(v, bool):
                    found.append("pass" if v else "fail")
                else:
                    walk(v)
        elif isinstance(node, list):
            for v in node:
                walk(v)

    walk(results)
    return found


def run_experiment(cfg: ExperimentConfig, root: str | Path | None = None) -> tuple[dict, Path]:
    """Run one config; returns (report, directory). Module errors come back as ExperimentFailure."""
    out = cfg.output_dir(root)
    out.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    try:
        results = RUNNERS[cfg.kind](cfg, out)
    except WaveDecayError as exc:
        raise ExperimentFailure(cfg.kind, exc) from exc
    verdicts = _verdicts(results)
    report = {
        "kind": cfg.kind,
        "config_hash": cfg.config_hash(),
        "config": cfg.to_dict(),
        "results": results,
        "verdict": "fail" if "fail" in verdicts else "pass",
        "wall_clock_seconds": time.perf_counter() - start,
        "versions": _versions(),
    }
    (out / "meta.json").write_text(
        json.dumps({"kind": cfg.kind, "config_hash": cfg.config_hash(), "config": cfg.to_dict(include_output=False), "seed": cfg.seed}, indent=2, sort_keys=True)
        + "\n"
    )
    (out / "report.json").write_text(json.dumps(report, indent=2, sort_keys=True, default=_jsonable) + "\n")
    return report, out
