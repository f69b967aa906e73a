"""Strict TOML experiment configuration.

Every section is a dataclass; unknown keys and wrong types are rejected with
their dotted key path. Defaults are filled in before hashing, so spelling out a
default value does not change the output directory name.
"""
from __future__ import annotations

import dataclasses
import difflib
import hashlib
import json
import math
import sys
import typing
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


# kind -> (one-line description, result it validates, sections it reads)
KINDS: dict[str, tuple[str, str, tuple[str, ...]]] = {
    "profile": ("construct a monotone wave profile", "closed-form logistic profiles; existence threshold", ("grid", "flux", "profile")),
    "evolve-burgers": ("nonlinear viscous run around the profile", "mass conservation, steady translates", ("grid", "flux", "profile", "time", "perturbation")),
    "evolve-kdvb": ("nonlinear KdV-Burgers run around the profile", "mass conservation, steady translates", ("grid", "flux", "profile", "time", "perturbation")),
    "linear-semigroup": ("linearized semigroup evolution and weighted decay", "exponential weighted decay, contraction, certificate", ("grid", "flux", "profile", "time", "operator")),
    "kfunc": ("K-functional closed form vs infimum", "K-functional equality", ("grid", "kfunc")),
    "interp-verify": ("algebraic decay from the interpolation trade-off", "interpolation theorem and its sharpness", ("interp",)),
    "lemma-c1": ("convolution integral estimate", "integral estimate with kernel M", ("lemma",)),
    "thm31": ("viscous decay rates (1+t)^(m-k)", "viscous algebraic decay rate", ("grid", "flux", "time", "perturbation", "norms", "fit")),
    "thm42": ("KdV-Burgers decay rates (1+t)^(m-k)", "dispersive algebraic decay rates", ("grid", "flux", "profile", "time", "perturbation", "norms", "fit")),
}

OUTPUT_ENV = "WAVEDECAY_OUTPUT_ROOT"


# an exponent given as a number or the string "inf"
PValue = typing.NewType("PValue", str)


def parse_p(value) -> float:
    if isinstance(value, str):
        if value.lower() in ("inf", "infinity"):
            return math.inf
        raise ValueError(f"p must be a number or 'inf', got {value!r}")
    return float(value)


@dataclass(frozen=True)
class GridSection:
    xmin: float = -100.0
    xmax: float = 100.0
    n: int = 4096


@dataclass(frozen=True)
class FluxSection:
    name: str = "burgers_quadratic"
    b: float = 2.0


@dataclass(frozen=True)
class ProfileSection:
    family: str = "viscous"
    alpha: float = 3.0
    center: float = 0.0
    step: float = 1e-3


@dataclass(frozen=True)
class TimeSection:
    T: float = 10.0
    dt: float = 0.0  # 0 selects the CFL default
    t_first: float = 0.1
    snapshots: int = 40


@dataclass(frozen=True)
class PerturbationSection:
    family: str = "poly_decay"
    delta: float = 1e-2
    k: float = 3.0
    derivative: bool = True


@dataclass(frozen=True)
class OperatorSection:
    family: str = "parabolic_A1"
    form: str = "advective"
    coefficient: str = "profile"  # c = f'(phi); "zero" for the heat / Airy part alone
    data: str = "gaussian"
    rho: float = 0.3
    rho_max: float = 0.15
    fit_fraction: float = 0.5


@dataclass(frozen=True)
class NormsSection:
    m: list = field(default_factory=lambda: [1.0, 1.5, 2.0])
    p: list = field(default_factory=lambda: ["inf"])


@dataclass(frozen=True)
class FitSection:
    window: list = field(default_factory=lambda: [5.0, 80.0])
    tolerance: float = 0.3


@dataclass(frozen=True)
class KFuncSection:
    p: list = field(default_factory=lambda: [1.0, 2.0, 4.0])
    s: list = field(default_factory=lambda: [0.25, 1.0, 4.0])
    count: int = 20
    rel_tol: float = 1e-6


@dataclass(frozen=True)
class InterpSection:
    k: float = 3.0
    l: float = 1.5
    p: PValue = "inf"
    t_min: float = 1.0
    t_max: float = 1e3
    count: int = 31
    band: float = 4.0
    half_width: float = 4000.0
    n: int = 200001


@dataclass(frozen=True)
class LemmaSection:
    alpha: float = 1.5
    beta: float = 2.5
    kernel: str = "N"
    t_min: float = 1.0
    t_max: float = 1e4
    count: int = 161
    levels: int = 3


@dataclass(frozen=True)
class OutputSection:
    root: str = ""


SECTIONS = {
    "grid": GridSection,
    "flux": FluxSection,
    "profile": ProfileSection,
    "time": TimeSection,
    "perturbation": PerturbationSection,
    "operator": OperatorSection,
    "norms": NormsSection,
    "fit": FitSection,
    "kfunc": KFuncSection,
    "interp": InterpSection,
    "lemma": LemmaSection,
    "output": OutputSection,
}


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    seed: int = 0
    grid: GridSection = GridSection()
    flux: FluxSection = FluxSection()
    profile: ProfileSection = ProfileSection()
    time: TimeSection = TimeSection()
    perturbation: PerturbationSection = PerturbationSection()
    operator: OperatorSection = OperatorSection()
    norms: NormsSection = NormsSection()
    fit: FitSection = FitSection()
    kfunc: KFuncSection = KFuncSection()
    interp: InterpSection = InterpSection()
    lemma: LemmaSection = LemmaSection()
    output: OutputSection = OutputSection()

    def to_dict(self, *, include_output: bool = True) -> dict:
        d = {"kind": self.kind, "seed": self.seed}
        for name in KINDS[self.kind][2]:
            d[name] = dataclasses.asdict(getattr(self, name))
        if include_output:
            d["output"] = dataclasses.asdict(self.output)
        return d

    def config_hash(self) -> str:
        blob = json.dumps(self.to_dict(include_output=False), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:12]

    def output_dir(self, root: str | Path | None = None) -> Path:
        import os

        base = root or self.output.root or os.environ.get(OUTPUT_ENV) or "runs"
        return Path(base) / f"{self.kind}-{self.config_hash()}"


# --- parsing --------------------------------------------------------------------------


def _coerce(value, tp, path: str):
    origin = typing.get_origin(tp)
    if tp is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"expected a boolean, got {value!r}", path)
        return value
    if tp is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"expected an integer, got {value!r}", path)
        return value
    if tp is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"expected a number, got {value!r}", path)
        return float(value)
    if tp is PValue:
        if isinstance(value, bool) or not isinstance(value, (int, float, str)):
            raise ConfigError(f"expected a number or 'inf', got {value!r}", path)
        try:
            pv = parse_p(value)
        except ValueError as exc:
            raise ConfigError(str(exc), path) from None
        return "inf" if math.isinf(pv) else pv
    if tp is str:
        if not isinstance(value, str):
            raise ConfigError(f"expected a string, got {value!r}", path)
        return value
    if tp is list or origin is list:
        if not isinstance(value, list):
            raise ConfigError(f"expected an array, got {value!r}", path)
        out = []
        for i, item in enumerate(value):
            if isinstance(item, bool) or not isinstance(item, (int, float, str)):
                raise ConfigError(f"expected numbers or 'inf', got {item!r}", f"{path}[{i}]")
            if isinstance(item, str):
                try:
                    parse_p(item)
                except ValueError as exc:
                    raise ConfigError(str(exc), f"{path}[{i}]") from None
                out.append(item.lower())
            else:
                out.append(float(item))
        return out
    raise ConfigError(f"unsupported field type {tp!r}", path)


def _build_section(cls, data, path: str):
    if not isinstance(data, dict):
        raise ConfigError(f"expected a table, got {data!r}", path)
    hints = typing.get_type_hints(cls)
    names = {f.name for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, value in data.items():
        kp = f"{path}.{key}"
        if key not in names:
            near = difflib.get_close_matches(key, sorted(names), n=1)
            hint = f" (did you mean '{near[0]}'?)" if near else ""
            raise ConfigError(f"unknown key{hint}", kp)
        kwargs[key] = _coerce(value, hints[key], kp)
    return cls(**kwargs)


def nearest_kind(kind: str) -> str | None:
    near = difflib.get_close_matches(kind, list(KINDS), n=1, cutoff=0.0)
    return near[0] if near else None


def config_from_dict(data: dict) -> ExperimentConfig:
    if "kind" not in data:
        raise ConfigError("missing required key", "kind")
    kind = data["kind"]
    if not isinstance(kind, str):
        raise ConfigError(f"expected a string, got {kind!r}", "kind")
    if kind not in KINDS:
        raise ConfigError(f"unknown experiment kind {kind!r}; nearest valid kind is '{nearest_kind(kind)}'", "kind")
    kwargs = {"kind": kind}
    for key, value in data.items():
        if key == "kind":
            continue
        if key == "seed":
            kwargs["seed"] = _coerce(value, int, "seed")
        elif key in SECTIONS:
            kwargs[key] = _build_section(SECTIONS[key], value, key)
        else:
            near = difflib.get_close_matches(key, ["kind", "seed", *SECTIONS], n=1)
            hint = f" (did you mean '{near[0]}'?)" if near else ""
            raise ConfigError(f"unknown key{hint}", key)
    cfg = ExperimentConfig(**kwargs)
    validate(cfg)
    return cfg


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    try:
        data = tomllib.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"TOML syntax error: {exc}") from None
    return config_from_dict(data)


# --- semantic validation (cheap module preconditions, before any compute) -------------


def _require(cond: bool, message: str, path: str):
    if not cond:
        raise ConfigError(message, path)


def validate(cfg: ExperimentConfig) -> None:
    used = KINDS[cfg.kind][2]
    g = cfg.grid
    if "grid" in used:
        _require(g.xmin < g.xmax, "need xmin < xmax", "grid.xmax")
        _require(g.n >= 16, "need at least 16 grid points", "grid.n")
    if "flux" in used:
        _require(cfg.flux.name in ("burgers_quadratic", "kdvb_cubic"), "flux.name must be burgers_quadratic or kdvb_cubic", "flux.name")
    if "profile" in used:
        _require(cfg.profile.family in ("viscous", "kdvb"), "profile.family must be viscous or kdvb", "profile.family")
        _require(cfg.profile.step > 0, "step must be positive", "profile.step")
        if cfg.profile.family == "kdvb" or cfg.kind == "thm42":
            _require(cfg.profile.alpha > 0, "alpha must be positive", "profile.alpha")
    if "time" in used:
        _require(cfg.time.T > 0, "T must be positive", "time.T")
        _require(cfg.time.dt >= 0, "dt must be nonnegative (0 selects the default)", "time.dt")
        _require(0 < cfg.time.t_first < cfg.time.T, "need 0 < t_first < T", "time.t_first")
        _require(cfg.time.snapshots >= 2, "need at least 2 snapshots", "time.snapshots")
    if "perturbation" in used:
        pt = cfg.perturbation
        _require(pt.family in ("poly_decay", "gaussian"), "family must be poly_decay or gaussian", "perturbation.family")
        _require(pt.k > 1, f"k must exceed 1, got {pt.k}", "perturbation.k")
        _require(pt.delta >= 0, "delta must be nonnegative", "perturbation.delta")
    if "operator" in used:
        op = cfg.operator
        _require(op.family in ("parabolic_A1", "kdvb_B1"), "family must be parabolic_A1 or kdvb_B1", "operator.family")
        _require(op.form in ("advective", "flux"), "form must be advective or flux", "operator.form")
        _require(op.coefficient in ("profile", "zero"), "coefficient must be profile or zero", "operator.coefficient")
        _require(op.data in ("gaussian", "poly"), "data must be gaussian or poly", "operator.data")
        _require(op.rho > 0, "rho must be positive", "operator.rho")
        _require(0 < op.fit_fraction < 1, "fit_fraction must lie in (0, 1)", "operator.fit_fraction")
        if op.family == "kdvb_B1":
            _require(op.rho < cfg.profile.alpha / 3, f"rho must be below alpha/3 = {cfg.profile.alpha / 3:.4g}", "operator.rho")
    if "norms" in used:
        k = cfg.perturbation.k
        for i, m in enumerate(cfg.norms.m):
            _require(not isinstance(m, str) and 0 < m < k, f"m must lie in (0, k) = (0, {k:g})", f"norms.m[{i}]")
        for i, p in enumerate(cfg.norms.p):
            pv = parse_p(p)
            _require(pv in (1.0, 2.0, 4.0, math.inf), "p must be one of 1, 2, 4, inf", f"norms.p[{i}]")
    if "fit" in used:
        w = cfg.fit.window
        _require(len(w) == 2 and not any(isinstance(v, str) for v in w), "window must be [t_lo, t_hi]", "fit.window")
        _require(0 < w[0] < w[1] <= cfg.time.T, f"need 0 < t_lo < t_hi <= T = {cfg.time.T:g}", "fit.window")
        _require(cfg.fit.tolerance > 0, "tolerance must be positive", "fit.tolerance")
    if cfg.kind in ("thm31", "evolve-burgers"):
        _require(cfg.flux.name == "burgers_quadratic", "the viscous runs use flux burgers_quadratic", "flux.name")
    if cfg.kind in ("thm42", "evolve-kdvb"):
        _require(cfg.flux.name == "kdvb_cubic", "the KdV-Burgers runs use flux kdvb_cubic", "flux.name")
    if cfg.kind == "profile" and cfg.profile.family == "viscous":
        _require(cfg.flux.name == "burgers_quadratic", "viscous profiles use flux burgers_quadratic", "flux.name")
    if cfg.kind == "kfunc":
        for i, p in enumerate(cfg.kfunc.p):
            _require(parse_p(p) in (1.0, 2.0, 4.0), "p must be one of 1, 2, 4", f"kfunc.p[{i}]")
        for i, s in enumerate(cfg.kfunc.s):
            _require(not isinstance(s, str) and math.isfinite(s), "s must be a finite number", f"kfunc.s[{i}]")
        _require(cfg.kfunc.count >= 1, "count must be positive", "kfunc.count")
    if cfg.kind == "interp-verify":
        it = cfg.interp
        _require(0 < it.l < it.k, "need 0 < l < k", "interp.l")
        _require(0 < it.t_min < it.t_max, "need 0 < t_min < t_max", "interp.t_max")
        try:
            parse_p(it.p)
        except ValueError as exc:
            raise ConfigError(str(exc), "interp.p") from None
        _require(it.half_width > 0 and it.n >= 16, "need a positive half_width and n >= 16", "interp.n")
    if cfg.kind == "lemma-c1":
        lm = cfg.lemma
        _require(lm.alpha > 0, "need alpha > 0", "lemma.alpha")
        _require(lm.alpha < lm.beta, f"need alpha < beta (got {lm.alpha:g} >= {lm.beta:g})", "lemma.beta")
        _require(lm.beta > 1, f"need beta > 1 (got {lm.beta:g})", "lemma.beta")
        _require(lm.kernel in ("N", "N0", "N1", "one"), "kernel must be one of N, N0, N1, one", "lemma.kernel")
        _require(0 < lm.t_min < lm.t_max, "need 0 < t_min < t_max", "lemma.t_max")
        _require(lm.levels >= 2, "need at least 2 refinement levels", "lemma.levels")
