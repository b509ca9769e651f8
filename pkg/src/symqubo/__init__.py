"""Symmetry detection for mixed-integer programs through QUBO formulations."""

from .estimator import SymmetryDetector, build_formulation
from .mps import MipInstance, MPSError, MPSUnsupportedError, coefficient, parse_mps, read_mps, write_mps
from .qubo import (
    Entry,
    PenaltyWeights,
    QuboModel,
    QuboPlusModel,
    VarRegistry,
    build_decomposed,
    build_full,
    build_quboplus_decomposed,
    build_quboplus_full,
    build_quboplus_reduced,
    build_reduced,
    energy,
    quboplus_to_qubo,
)
from .reasonability import (
    ReasonabilityPartition,
    SignatureConfig,
    build_partition,
    constraint_signature,
    max_decomp_class,
    variable_signature,
)
from .resources import ZephyrEstimate, count_terms, power_fit, zephyr_estimate
from .sampling import AnnealConfig, SampleResult, anneal, enumerate_exact
from .symmetry import DecodedSymmetry, brute_force_symmetries, decode, is_formulation_symmetry, orbits

__version__ = "0.1.0"
