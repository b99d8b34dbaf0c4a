"""Spatial partition trees (dyadic, k-d, RP, PD, 2-means) with diameter
diagnostics, local covariance dimension estimates and an experiment harness."""

from .covdim import cov_dim, dimension_profile, dimension_profiles, spectrum_ratio_k
from .diameters import CellView, avg_diam_sq, diameter_stats, max_diam_sq, partition_stats, split_decrease
from .errors import (
    DegenerateCell,
    DegenerateData,
    EmptyCell,
    InvalidMatrix,
    InvalidParam,
    InvalidPartition,
    SpatialTreeError,
)
from .kernels import BACKEND
from .linalg import Spectrum, covariance, eig_sym, top_eigenvector
from .synth import PointSet, affine_cloud, noisy_swissroll, sinusoid_manifold
from .trees import RULES, BuildConfig, PartitionTree, SplitRule, build

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "RULES", "BuildConfig", "CellView", "DegenerateCell", "DegenerateData", "EmptyCell",
    "InvalidMatrix", "InvalidParam", "InvalidPartition", "PartitionTree", "PointSet", "SpatialTreeError",
    "Spectrum", "SplitRule", "affine_cloud", "avg_diam_sq", "build", "cov_dim", "covariance",
    "diameter_stats", "dimension_profile", "dimension_profiles", "eig_sym", "max_diam_sq",
    "noisy_swissroll", "partition_stats", "sinusoid_manifold", "spectrum_ratio_k", "split_decrease",
    "top_eigenvector",
]
