"""Numerical laboratory for weighted-norm decay of perturbed traveling waves."""
from .decay import (
    DecayFit,
    KernelSpec,
    LemmaC1Report,
    NormTable,
    TheoremConfig,
    fit_rate,
    norm_timeseries,
    theorem_experiment,
    verify_lemma_c1,
)
from .grid import Grid1D, GridFunction, WeightSpec, antiderivative, compute_shift, weighted_norm
from .kfunctional import k_functional_closed, k_functional_inf, star_norm, verify_interpolation
from .nonlinear import PerturbationSpec, evolve_burgers, evolve_kdvb, make_perturbed_initial
from .profiles import FluxSpec, WaveProfile, construct_burgers_profile, construct_kdvb_profile
from .semigroups import (
    DecayCertificate,
    LinearOperatorSpec,
    decay_certificate,
    evolve_kdvb_linear,
    evolve_parabolic,
    verify_smoothing,
)
from .trajectory import Trajectory

__all__ = [
    "DecayCertificate",
    "DecayFit",
    "FluxSpec",
    "Grid1D",
    "GridFunction",
    "KernelSpec",
    "LemmaC1Report",
    "LinearOperatorSpec",
    "NormTable",
    "PerturbationSpec",
    "TheoremConfig",
    "Trajectory",
    "WaveProfile",
    "WeightSpec",
    "antiderivative",
    "compute_shift",
    "construct_burgers_profile",
    "construct_kdvb_profile",
    "decay_certificate",
    "evolve_burgers",
    "evolve_kdvb",
    "evolve_kdvb_linear",
    "evolve_parabolic",
    "fit_rate",
    "k_functional_closed",
    "k_functional_inf",
    "make_perturbed_initial",
    "norm_timeseries",
    "star_norm",
    "theorem_experiment",
    "verify_interpolation",
    "verify_lemma_c1",
    "verify_smoothing",
    "weighted_norm",
]
