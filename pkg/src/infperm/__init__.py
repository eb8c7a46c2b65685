"""Exact and Monte Carlo tools for entry-permuted Gaussian matrices.

Pairing and partition enumeration, infinitesimal free cumulants, permutation
statistics, an exact Wick counting engine and GUE sampling.
"""

__version__ = "0.1.0"

from .cumulants import (
    CumulantTable,
    InfinitesimalLaw,
    check_infinitesimal_freeness,
    cumulants_to_moments,
    moments_to_cumulants,
    predicted_transpose_cumulants,
)
from .partitions import NcPartition, PairPartition, enumerate_nc, enumerate_pair_partitions, is_noncrossing
from .perms import EntryPermutation, StatReport, sample_uniform
from .rmt import fit_infinitesimal, mc_expected_trace, permute_entries, sample_gue
from .wick import asymptotic_trace, classify_pairing, count_admissible, expected_trace_exact

__all__ = [
    "CumulantTable", "EntryPermutation", "InfinitesimalLaw", "NcPartition", "PairPartition",
    "StatReport", "asymptotic_trace", "check_infinitesimal_freeness", "classify_pairing",
    "count_admissible", "cumulants_to_moments", "enumerate_nc", "enumerate_pair_partitions",
    "expected_trace_exact", "fit_infinitesimal", "is_noncrossing", "mc_expected_trace",
    "moments_to_cumulants", "permute_entries", "predicted_transpose_cumulants", "sample_gue",
    "sample_uniform",
]
