"""Random matrix ensembles.

Covers the whole reduction ladder used in the analysis: the scaled graph
adjacency (possibly with truncated weights), its entrywise centring, the two
Gaussian surrogates (exact Bernoulli variance and the simplified profile),
the geometry-free Gaussian matrix, and the diagonal-Wigner-diagonal
comparator for the product kernel.

Construction is deterministic given the two seeds: weights come from the
weight stream, edge/Gaussian noise from the noise stream, with one draw per
unordered pair in row-major order over i < j.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DataError, ParameterError, ResourceLimitError
from .model import (
    ModelParams,
    WeightVector,
    kernel_for_params,
    pairwise_distances,
    rng_from_seed,
    sample_weights,
    scaling_constant,
)

DEFAULT_ORDER_CAP = 4096

_DUMP_MAGIC = b"KBRGSYM1"


class MatrixKind(str, Enum):
    ADJACENCY = "adjacency"
    TRUNCATED_ADJACENCY = "truncated-adjacency"
    CENTRED = "centred"
    GAUSSIANIZED = "gaussianized"
    SIMPLIFIED_GAUSSIAN = "simplified-gaussian"
    GEOMETRY_FREE = "geometry-free"
    DIAG_WIGNER_DIAG = "diag-wigner-diag"
    WIGNER = "wigner"


@dataclass(frozen=True)
class SymmetricMatrixSample:
    """One realisation of a symmetric ensemble (dense storage, zero diagonal)."""

    entries: np.ndarray
    kind: MatrixKind
    params: ModelParams
    seeds: tuple

    @property
    def order(self) -> int:
        return self.entries.shape[0]


def _guard_order(params: ModelParams, max_order: int) -> None:
    if params.order > max_order:
        raise ResourceLimitError(
            f"matrix order {params.order} exceeds the desk-scale cap {max_order}; "
            "raise max_order explicitly if you really want this"
        )


def _from_upper(n: int, values: np.ndarray) -> np.ndarray:
    """Assemble a symmetric matrix with zero diagonal from row-major upper-triangle values."""
    mat = np.zeros((n, n))
    iu = np.triu_indices(n, k=1)
    mat[iu] = values
    mat.T[iu] = values
    return mat


def connection_probabilities(params: ModelParams, weights: WeightVector) -> np.ndarray:
    """Dense matrix of edge probabilities kappa(W_i,W_j)/dist**alpha wedge 1, zero diagonal."""
    dist = pairwise_distances(params)
    np.fill_diagonal(dist, 1.0)  # avoids 0**-alpha; diagonal is zeroed below
    kappa = kernel_for_params(params, weights.values[:, None], weights.values[None, :])
    probs = np.minimum(kappa / dist ** params.alpha, 1.0)
    np.fill_diagonal(probs, 0.0)
    return probs


def unclipped_rates(params: ModelParams, weights: WeightVector) -> np.ndarray:
    """The uncapped ratio kappa(W_i,W_j)/dist**alpha (variance profile of the
    simplified Gaussian ensemble), zero diagonal."""
    dist = pairwise_distances(params)
    np.fill_diagonal(dist, 1.0)
    kappa = kernel_for_params(params, weights.values[:, None], weights.values[None, :])
    rates = kappa / dist ** params.alpha
    np.fill_diagonal(rates, 0.0)
    return rates


def sample_adjacency(params: ModelParams, weight_seed, edge_seed,
                     max_order: int = DEFAULT_ORDER_CAP) -> SymmetricMatrixSample:
    """Scaled adjacency matrix: entries are c_N**-1/2 Bernoulli(p_ij) indicators.

    With a finite truncation threshold the weights are hard-truncated first
    and the kind is reported as truncated-adjacency.
    """
    _guard_order(params, max_order)
    weights = sample_weights(params, weight_seed)
    probs = connection_probabilities(params, weights)
    n = params.order
    iu = np.triu_indices(n, k=1)
    rng = rng_from_seed(edge_seed)
    edges = rng.random(iu[0].size) < probs[iu]
    scale = 1.0 / np.sqrt(scaling_constant(params))
    entries = _from_upper(n, edges * scale)
    kind = MatrixKind.TRUNCATED_ADJACENCY if params.truncated else MatrixKind.ADJACENCY
    return SymmetricMatrixSample(entries, kind, params, (weight_seed, edge_seed))


def sample_centred(params: ModelParams, weight_seed, edge_seed,
                   max_order: int = DEFAULT_ORDER_CAP) -> SymmetricMatrixSample:
    """Adjacency minus its conditional mean given the weights, scaled by c_N**-1/2."""
    _guard_order(params, max_order)
    weights = sample_weights(params, weight_seed)
    probs = connection_probabilities(params, weights)
    n = params.order
    iu = np.triu_indices(n, k=1)
    rng = rng_from_seed(edge_seed)
    p_up = probs[iu]
    bern = (rng.random(iu[0].size) < p_up).astype(float)
    scale = 1.0 / np.sqrt(scaling_constant(params))
    entries = _from_upper(n, (bern - p_up) * scale)
    return SymmetricMatrixSample(entries, MatrixKind.CENTRED, params, (weight_seed, edge_seed))


def sample_gaussianized(params: ModelParams, weight_seed, gauss_seed,
                        simplified: bool = False,
                        max_order: int = DEFAULT_ORDER_CAP) -> SymmetricMatrixSample:
    """Gaussian surrogate of the centred adjacency.

    Entry (i, j) is sqrt(p_ij (1 - p_ij) / c_N) G_ij, or with
    ``simplified=True`` sqrt(r_ij / c_N) G_ij where r_ij is the uncapped
    rate.  The same Gaussian draw G_ij is used for both variants when the
    seeds match, so the two matrices are entrywise coupled.
    """
    if not params.truncated:
        raise ParameterError("gaussianized ensembles need a finite trunc_m")
    _guard_order(params, max_order)
    weights = sample_weights(params, weight_seed)
    rates = unclipped_rates(params, weights)
    n = params.order
    iu = np.triu_indices(n, k=1)
    r_up = rates[iu]
    if simplified:
        var_up = r_up
        kind = MatrixKind.SIMPLIFIED_GAUSSIAN
    else:
        p_up = np.minimum(r_up, 1.0)
        var_up = p_up * (1.0 - p_up)
        kind = MatrixKind.GAUSSIANIZED
    rng = rng_from_seed(gauss_seed)
    gauss = rng.standard_normal(iu[0].size)
    scale = 1.0 / np.sqrt(scaling_constant(params))
    entries = _from_upper(n, np.sqrt(var_up) * scale * gauss)
    return SymmetricMatrixSample(entries, kind, params, (weight_seed, gauss_seed))


def sample_geometry_free(params: ModelParams, weight_seed, gauss_seed,
                         max_order: int = DEFAULT_ORDER_CAP) -> SymmetricMatrixSample:
    """Gaussian matrix with entries sqrt(kappa(W_i,W_j) / order) G_ij.

    No torus geometry enters; with the trivial kernel this is a standard
    Wigner matrix, and with the product kernel it factorises as D G D with
    D = diag(sqrt(W)).
    """
    _guard_order(params, max_order)
    weights = sample_weights(params, weight_seed)
    kappa = kernel_for_params(params, weights.values[:, None], weights.values[None, :])
    n = params.order
    iu = np.triu_indices(n, k=1)
    rng = rng_from_seed(gauss_seed)
    gauss = rng.standard_normal(iu[0].size)
    entries = _from_upper(n, np.sqrt(kappa[iu] / n) * gauss)
    return SymmetricMatrixSample(entries, MatrixKind.GEOMETRY_FREE, params,
                                 (weight_seed, gauss_seed))


def sample_wigner(params: ModelParams, gauss_seed,
                  max_order: int = DEFAULT_ORDER_CAP) -> SymmetricMatrixSample:
    """Real symmetric Gaussian Wigner matrix, entry variance 1/order, zero diagonal."""
    _guard_order(params, max_order)
    n = params.order
    iu = np.triu_indices(n, k=1)
    rng = rng_from_seed(gauss_seed)
    gauss = rng.standard_normal(iu[0].size)
    entries = _from_upper(n, gauss / np.sqrt(n))
    return SymmetricMatrixSample(entries, MatrixKind.WIGNER, params, (None, gauss_seed))


def sample_diag_wigner_diag(params: ModelParams, weight_seed, gauss_seed,
                            max_order: int = DEFAULT_ORDER_CAP) -> SymmetricMatrixSample:
    """Comparator ensemble P G P with P = diag(sqrt(W)) and G Wigner.

    Its spectrum converges to the free multiplicative convolution of the
    semicircle law with the weight law, which is the product-kernel limit.
    """
    _guard_order(params, max_order)
    weights = sample_weights(params, weight_seed)
    base = sample_wigner(params, gauss_seed, max_order=max_order)
    root = np.sqrt(weights.values)
    n = params.order
    iu = np.triu_indices(n, k=1)
    upper = base.entries[iu] * root[iu[0]] * root[iu[1]]
    entries = _from_upper(n, upper)
    return SymmetricMatrixSample(entries, MatrixKind.DIAG_WIGNER_DIAG, params,
                                 (weight_seed, gauss_seed))


def sample_matrix(kind, params: ModelParams, weight_seed, noise_seed,
                  max_order: int = DEFAULT_ORDER_CAP) -> SymmetricMatrixSample:
    """Dispatch on MatrixKind (or its string value)."""
    kind = MatrixKind(kind)
    if kind in (MatrixKind.ADJACENCY, MatrixKind.TRUNCATED_ADJACENCY):
        if kind is MatrixKind.TRUNCATED_ADJACENCY and not params.truncated:
            raise ParameterError("truncated-adjacency needs a finite trunc_m")
        if kind is MatrixKind.ADJACENCY and params.truncated:
            raise ParameterError("adjacency with finite trunc_m is the truncated-adjacency kind")
        return sample_adjacency(params, weight_seed, noise_seed, max_order)
    if kind is MatrixKind.CENTRED:
        return sample_centred(params, weight_seed, noise_seed, max_order)
    if kind is MatrixKind.GAUSSIANIZED:
        return sample_gaussianized(params, weight_seed, noise_seed, False, max_order)
    if kind is MatrixKind.SIMPLIFIED_GAUSSIAN:
        return sample_gaussianized(params, weight_seed, noise_seed, True, max_order)
    if kind is MatrixKind.GEOMETRY_FREE:
        return sample_geometry_free(params, weight_seed, noise_seed, max_order)
    if kind is MatrixKind.DIAG_WIGNER_DIAG:
        return sample_diag_wigner_diag(params, weight_seed, noise_seed, max_order)
    if kind is MatrixKind.WIGNER:
        return sample_wigner(params, noise_seed, max_order)
    raise ParameterError(f"unhandled kind {kind!r}")


def dump_matrix(sample: SymmetricMatrixSample, path) -> None:
    """Opt-in binary dump: 16-byte header (magic, order) then the row-major
    upper triangle including the diagonal as little-endian float64."""
    n = sample.order
    iu = np.triu_indices(n)
    with open(path, "wb") as fh:
        fh.write(_DUMP_MAGIC)
        fh.write(struct.pack("<Q", n))
        fh.write(sample.entries[iu].astype("<f8").tobytes())


def load_matrix(path) -> np.ndarray:
    """Read a matrix written by dump_matrix back into dense symmetric form."""
    with open(path, "rb") as fh:
        magic = fh.read(8)
        if magic != _DUMP_MAGIC:
            raise DataError(f"bad magic {magic!r} in {path}")
        (n,) = struct.unpack("<Q", fh.read(8))
        flat = np.frombuffer(fh.read(), dtype="<f8")
    expected = n * (n + 1) // 2
    if flat.size != expected:
        raise DataError(f"expected {expected} upper-triangle values, found {flat.size}")
    mat = np.zeros((n, n))
    iu = np.triu_indices(n)
    mat[iu] = flat
    il = np.tril_indices(n, k=-1)
    mat[il] = mat.T[il]
    return mat
