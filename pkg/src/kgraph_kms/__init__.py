"""Spectral data, conformal measures, KMS states and Hausdorff geometry of finite k-graphs."""

from .bratteli import BratteliPath, BratteliWeight, bratteli_paths, ultrametric
from .functors import WeightFunctor, load_functor, sample_nonnegative, solve_constraints, zero_functor
from .hausdorff import cover_sum, dimension_estimate, hausdorff_measure
from .kgraph import KGraph, Path, load_fixture, load_graph, validate
from .kms import Monomial, OmegaState, PsiState, kms_residual, kms_sweep, multiply
from .measure import markov_eval, markov_from_x, mu
from .periodicity import aperiodicity_criterion, check_periodic, per_group
from .spectral import SpectralData, build_B, pf_data, spectral_data

__version__ = "0.1.0"

__all__ = [
    "BratteliPath",
    "BratteliWeight",
    "KGraph",
    "Monomial",
    "OmegaState",
    "Path",
    "PsiState",
    "SpectralData",
    "WeightFunctor",
    "aperiodicity_criterion",
    "bratteli_paths",
    "build_B",
    "check_periodic",
    "cover_sum",
    "dimension_estimate",
    "hausdorff_measure",
    "kms_residual",
    "kms_sweep",
    "load_fixture",
    "load_functor",
    "load_graph",
    "markov_eval",
    "markov_from_x",
    "mu",
    "multiply",
    "per_group",
    "pf_data",
    "sample_nonnegative",
    "solve_constraints",
    "spectral_data",
    "ultrametric",
    "validate",
    "zero_functor",
]
