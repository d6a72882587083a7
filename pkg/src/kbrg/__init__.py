"""Spectral toolkit for kernel-based random graphs on the discrete torus.

The package samples the graph ensembles at desk scale, computes empirical
spectra, evaluates the limiting moments by pair-partition combinatorics and
solves the self-consistent fixed-point equation for the Stieltjes transform
of the limiting measure.
"""

__version__ = "0.1.0"

from .model import ModelParams, WeightVector, sample_weights, scaling_constant
from .ensembles import MatrixKind, SymmetricMatrixSample, sample_matrix
from .spectra import SpectralSample, EmpiricalMeasure, eigenvalues

__all__ = [
    "__version__",
    "ModelParams",
    "WeightVector",
    "sample_weights",
    "scaling_constant",
    "MatrixKind",
    "SymmetricMatrixSample",
    "sample_matrix",
    "SpectralSample",
    "EmpiricalMeasure",
    "eigenvalues",
]
