"""Model parameters, torus geometry, Pareto weights and connection kernels.

Everything downstream (matrix ensembles, limiting moments, the fixed-point
solver) consumes the primitives defined here.  All operations are pure
functions of their inputs; random sampling owns a Philox stream derived from
the caller's seed, so results are reproducible regardless of thread count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ParameterError

KERNEL_KINDS = ("sigma", "trivial", "strong", "product", "pref-attach")


@dataclass(frozen=True)
class ModelParams:
    """Parameter tuple of one graph ensemble.

    n        side length of the torus (the matrix order is n**d)
    d        dimension, 1 or 2
    alpha    long-range exponent, must satisfy 0 <= alpha < d (dense regime)
    tau      weight tail parameter, > 2; weights have tail exponent tau - 1
    sigma    kernel exponent in (0, tau - 1)
    trunc_m  truncation threshold in (1, inf]; inf means untruncated
    kernel   one of "sigma", "trivial", "strong", "product", "pref-attach"
    """

    n: int
    d: int = 1
    alpha: float = 0.5
    tau: float = 4.0
    sigma: float = 1.0
    trunc_m: float = math.inf
    kernel: str = "sigma"

    def __post_init__(self):
        if not isinstance(self.n, (int, np.integer)) or self.n < 2:
            raise ParameterError(f"n must be an integer >= 2, got {self.n!r}")
        if self.d not in (1, 2):
            raise ParameterError(f"d must be 1 or 2, got {self.d!r}")
        if not self.alpha >= 0.0:
            raise ParameterError(f"alpha must be nonnegative, got {self.alpha}")
        if not self.tau > 2.0:
            raise ParameterError(f"tau must exceed 2, got {self.tau}")
        if not 0.0 < self.sigma < self.tau - 1.0:
            raise ParameterError(
                f"sigma must lie in (0, tau-1) = (0, {self.tau - 1}), got {self.sigma}"
            )
        if not self.trunc_m > 1.0:
            raise ParameterError(f"trunc_m must exceed 1, got {self.trunc_m}")
        if self.kernel not in KERNEL_KINDS:
            raise ParameterError(f"unknown kernel {self.kernel!r}, expected one of {KERNEL_KINDS}")

    @property
    def order(self) -> int:
        return self.n ** self.d

    @property
    def truncated(self) -> bool:
        return math.isfinite(self.trunc_m)

    def require_dense(self) -> None:
        """Limit-theorem workflows only hold in the dense regime alpha < d."""
        if not self.alpha < self.d:
            raise ParameterError(
                f"alpha={self.alpha} is outside the dense regime: the limiting "
                f"spectral theory requires alpha < d = {self.d} (the sparse case "
                "alpha > d is out of scope)"
            )

    def effective_sigma(self) -> float:
        """Kernel exponent actually applied by ``kernel_value``.

        The preferential-attachment kernel derives its exponent from
        (alpha, tau, d); the product and strong kernels are the sigma = 1
        and sigma = 0 members of the same family.
        """
        if self.kernel == "sigma":
            return self.sigma
        if self.kernel == "product":
            return 1.0
        if self.kernel == "strong":
            return 0.0
        if self.kernel == "pref-attach":
            return self.alpha * (self.tau - 1.0) / self.d - 1.0
        raise ParameterError(f"kernel {self.kernel!r} has no exponent")

    def as_config(self) -> dict:
        """Flat key-value form used by the CLI and run manifests."""
        return {
            "n": self.n,
            "d": self.d,
            "alpha": self.alpha,
            "tau": self.tau,
            "sigma": self.sigma,
            "trunc_m": self.trunc_m,
            "kernel": self.kernel,
        }


@dataclass(frozen=True)
class WeightVector:
    """I.i.d. Pareto marks on the vertex set, optionally hard-truncated.

    Hard truncation sets every value exceeding the threshold to 0, so a
    truncated vector contains values in {0} union [1, m].
    """

    values: np.ndarray
    truncated: bool
    seed: object


def rng_from_seed(seed) -> np.random.Generator:
    """Philox (counter-based) generator owned by this call.

    Accepts an integer or a prepared SeedSequence; every sampling routine
    builds its own generator so streams are never shared.
    """
    if isinstance(seed, np.random.SeedSequence):
        ss = seed
    else:
        ss = np.random.SeedSequence(seed)
    return np.random.Generator(np.random.Philox(ss))


def trial_seeds(master_seed: int, trial: int) -> tuple[np.random.SeedSequence, np.random.SeedSequence]:
    """Seed-splitting rule: stream index = trial index.

    Returns (weight_seed, noise_seed) for one trial, derived from the master
    seed with spawn keys (trial, 0) and (trial, 1).
    """
    return (
        np.random.SeedSequence(master_seed, spawn_key=(trial, 0)),
        np.random.SeedSequence(master_seed, spawn_key=(trial, 1)),
    )


def torus_distance(i, j, n: int) -> int:
    """Torus metric: sum over coordinates of |di| wrapped at n.

    Points are 1-based coordinates, either integers (d = 1) or tuples.
    """
    ci = _coords(i, n)
    cj = _coords(j, n)
    if len(ci) != len(cj):
        raise ParameterError(f"points {i!r} and {j!r} have different dimensions")
    total = 0
    for a, b in zip(ci, cj):
        delta = abs(a - b)
        total += min(delta, n - delta)
    return total


def _coords(point, n: int) -> tuple[int, ...]:
    if isinstance(point, (int, np.integer)):
        point = (int(point),)
    coords = tuple(int(c) for c in point)
    for c in coords:
        if not 1 <= c <= n:
            raise ParameterError(f"coordinate {c} outside [1, {n}]")
    return coords


def vertex_index(point, params: ModelParams) -> int:
    """Lexicographic index of a torus point (row-major over coordinates)."""
    coords = _coords(point, params.n)
    if len(coords) != params.d:
        raise ParameterError(f"point {point!r} is not {params.d}-dimensional")
    idx = 0
    for c in coords:
        idx = idx * params.n + (c - 1)
    return idx


def pareto_inverse_cdf(u, tau: float):
    """Invert the survival function t**-(tau-1) at u in (0, 1]."""
    if not tau > 1.0:
        raise ParameterError(f"tau must exceed 1, got {tau}")
    u = np.asarray(u, dtype=float)
    if np.any(u <= 0.0) or np.any(u > 1.0):
        raise ParameterError("u must lie in (0, 1]")
    w = u ** (-1.0 / (tau - 1.0))
    return float(w) if w.ndim == 0 else w


def sample_weights(params: ModelParams, seed) -> WeightVector:
    """Draw the i.i.d. Pareto marks for all n**d vertices.

    Inverse-CDF sampling with U uniform on (0, 1]; if trunc_m is finite the
    hard truncation rule zeroes every draw above the threshold.
    """
    rng = rng_from_seed(seed)
    u = 1.0 - rng.random(params.order)  # random() is [0,1), so u is (0,1]
    w = u ** (-1.0 / (params.tau - 1.0))
    if params.truncated:
        w = np.where(w > params.trunc_m, 0.0, w)
    return WeightVector(values=w, truncated=params.truncated, seed=seed)


def kernel_value(kind: str, sigma, w, v, params: ModelParams | None = None):
    """Evaluate the connection kernel on weights w, v (vectorised).

    The "sigma" family is max(w,v) * min(w,v)**sigma, with the convention
    that a zero weight (a truncated-away vertex) yields 0 for any exponent.
    "pref-attach" uses the exponent alpha*(tau-1)/d - 1 derived from params.
    """
    if kind not in KERNEL_KINDS:
        raise ParameterError(f"unknown kernel {kind!r}")
    w = np.asarray(w, dtype=float)
    v = np.asarray(v, dtype=float)
    if np.any(w < 0.0) or np.any(v < 0.0):
        raise ParameterError("weights must be nonnegative")
    if kind == "trivial":
        out = np.ones(np.broadcast_shapes(w.shape, v.shape))
    elif kind == "strong":
        out = np.maximum(w, v)
    elif kind == "product":
        out = w * v
    else:
        if kind == "pref-attach":
            if params is None:
                raise ParameterError("pref-attach kernel needs params for its exponent")
            expo = params.alpha * (params.tau - 1.0) / params.d - 1.0
        else:
            expo = float(sigma)
        mn = np.minimum(w, v)
        mx = np.maximum(w, v)
        with np.errstate(divide="ignore"):
            out = np.where(mn > 0.0, mx * mn ** expo, 0.0)
    return float(out) if out.ndim == 0 else out


def kernel_for_params(params: ModelParams, w, v):
    """Kernel evaluation with kind and exponent taken from params."""
    return kernel_value(params.kernel, params.sigma, w, v, params=params)


def connection_probability(i, j, weights: WeightVector, params: ModelParams) -> float:
    """Edge probability kappa(W_i, W_j) / dist(i,j)**alpha, capped at 1.

    Raises DomainError for i = j; the graph has no self-loops.
    """
    dist = torus_distance(i, j, params.n)
    if dist == 0:
        raise DomainError("no self-loops: i and j must differ")
    wi = weights.values[vertex_index(i, params)]
    wj = weights.values[vertex_index(j, params)]
    kappa = kernel_for_params(params, wi, wj)
    return float(min(kappa / dist ** params.alpha, 1.0))


def displacement_distances(params: ModelParams) -> np.ndarray:
    """Torus distances from the origin to every displacement, flat index 0 first."""
    n = params.n
    axis = np.minimum(np.arange(n), n - np.arange(n)).astype(float)
    if params.d == 1:
        return axis
    return (axis[:, None] + axis[None, :]).ravel()


def scaling_constant(params: ModelParams) -> float:
    """Exact normalisation sum: mean over vertices of sum_j dist(i,j)**-alpha.

    By translation invariance this equals the sum over nonzero displacements,
    so no O(n**2d) pair loop is needed.  For alpha = 0 it is exactly
    n**d - 1.
    """
    dist = displacement_distances(params)[1:]  # drop the zero displacement
    if params.alpha == 0.0:
        return float(dist.size)
    return float(np.sum(dist ** -params.alpha))


def pairwise_distances(params: ModelParams) -> np.ndarray:
    """Dense matrix of torus distances between all vertex pairs (float)."""
    n = params.n
    idx = np.arange(n)
    delta = np.abs(idx[:, None] - idx[None, :])
    axis = np.minimum(delta, n - delta).astype(float)
    if params.d == 1:
        return axis
    # lexicographic vertex order: index = (c1-1)*n + (c2-1)
    return np.add.outer(axis, axis).transpose(0, 2, 1, 3).reshape(n * n, n * n)


def pareto_quadrature(tau: float, upper: float, size: int = 128) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre rule for integrals against (tau-1) x**-tau dx on [1, upper].

    Uses the substitution x = exp(u); the returned weights carry the density,
    so dot(f(nodes), weights) approximates the (unnormalised) expectation.
    The total weight is 1 - upper**-(tau-1).
    """
    if not tau > 1.0:
        raise ParameterError(f"tau must exceed 1, got {tau}")
    if not upper > 1.0:
        raise ParameterError(f"upper must exceed 1, got {upper}")
    u, gl = np.polynomial.legendre.leggauss(size)
    umax = math.log(upper)
    u = 0.5 * umax * (u + 1.0)
    gl = gl * 0.5 * umax
    nodes = np.exp(u)
    weights = gl * (tau - 1.0) * np.exp(-(tau - 1.0) * u)
    return nodes, weights


def pareto_tail_cutoff(tau: float, mass_tol: float = 1e-11, moment: float = 0.0,
                       moment_tol: float = 1e-9) -> float:
    """Upper integration limit so that both the neglected tail mass and the
    neglected tail of the moment of given order stay below tolerance."""
    if not moment < tau - 1.0:
        raise ParameterError(
            f"moment {moment} not integrable: needs moment < tau-1 = {tau - 1.0}"
        )
    x_mass = mass_tol ** (-1.0 / (tau - 1.0))
    if moment > 0.0:
        x_mom = ((tau - 1.0) / ((tau - 1.0 - moment) * moment_tol)) ** (1.0 / (tau - 1.0 - moment))
    else:
        x_mom = 1.0
    return max(x_mass, x_mom)
