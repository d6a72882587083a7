"""Eigenvalues, empirical spectral distributions and tail statistics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError, ParameterError
from .ensembles import MatrixKind, SymmetricMatrixSample
from .model import ModelParams

MAX_MOMENT_ORDER = 20


@dataclass(frozen=True)
class SpectralSample:
    """Sorted spectrum of one matrix realisation plus its provenance."""

    eigenvalues: np.ndarray  # ascending
    kind: MatrixKind
    params: ModelParams
    seeds: tuple


def eigenvalues(sample: SymmetricMatrixSample) -> SpectralSample:
    """Full spectrum of a symmetric sample (LAPACK symmetric eigensolver)."""
    if not np.all(np.isfinite(sample.entries)):
        raise DataError("matrix contains non-finite entries")
    vals = np.linalg.eigvalsh(sample.entries)
    return SpectralSample(vals, sample.kind, sample.params, sample.seeds)


class EmpiricalMeasure:
    """Probability measure with finitely many atoms.

    Built either from raw samples (equal masses) or from a histogram
    (atoms at bin midpoints, masses proportional to counts).
    """

    def __init__(self, atoms, masses=None):
        atoms = np.asarray(atoms, dtype=float)
        if atoms.size == 0:
            raise DataError("empirical measure needs at least one atom")
        if masses is None:
            masses = np.full(atoms.size, 1.0 / atoms.size)
        masses = np.asarray(masses, dtype=float)
        if masses.shape != atoms.shape:
            raise ParameterError("atoms and masses must have the same length")
        if np.any(masses < 0.0):
            raise ParameterError("masses must be nonnegative")
        total = masses.sum()
        if not np.isclose(total, 1.0, rtol=0.0, atol=1e-9):
            raise ParameterError(f"masses must sum to 1, got {total}")
        order = np.argsort(atoms, kind="stable")
        atoms = atoms[order]
        masses = masses[order]
        # merge duplicate atoms so the CDF is well defined
        uniq, inverse = np.unique(atoms, return_inverse=True)
        merged = np.zeros(uniq.size)
        np.add.at(merged, inverse, masses)
        self.atoms = uniq
        self.masses = merged
        self._cum = np.cumsum(merged)

    @classmethod
    def from_samples(cls, values) -> "EmpiricalMeasure":
        return cls(np.asarray(values, dtype=float))

    @classmethod
    def from_histogram(cls, edges, counts) -> "EmpiricalMeasure":
        edges = np.asarray(edges, dtype=float)
        counts = np.asarray(counts, dtype=float)
        if edges.size != counts.size + 1:
            raise ParameterError("need len(edges) == len(counts) + 1")
        total = counts.sum()
        if total <= 0:
            raise DataError("histogram has no mass")
        mids = 0.5 * (edges[:-1] + edges[1:])
        keep = counts > 0
        return cls(mids[keep], counts[keep] / total)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        idx = np.searchsorted(self.atoms, x, side="right")
        out = np.where(idx > 0, self._cum[np.maximum(idx - 1, 0)], 0.0)
        return float(out) if out.ndim == 0 else out


def ks_distance(mu: EmpiricalMeasure, nu: EmpiricalMeasure) -> float:
    """Sup-norm distance between the two CDFs (evaluated on the merged atoms)."""
    pts = np.union1d(mu.atoms, nu.atoms)
    return float(np.max(np.abs(mu.cdf(pts) - nu.cdf(pts))))


def _one_sided_gap(mu: EmpiricalMeasure, nu: EmpiricalMeasure, eps: float) -> float:
    """sup_x mu.cdf(x - eps) - nu.cdf(x); both CDFs are right-continuous steps,
    so the supremum is attained at a breakpoint."""
    pts = np.union1d(mu.atoms + eps, nu.atoms)
    return float(np.max(mu.cdf(pts - eps) - nu.cdf(pts)))


def levy_distance(mu: EmpiricalMeasure, nu: EmpiricalMeasure, tol: float = 1e-12) -> float:
    """One-dimensional Levy metric between two atomic measures.

    inf over eps > 0 such that F(x - eps) - eps <= G(x) <= F(x + eps) + eps
    for all x.  Solved by bisection on the feasibility predicate; for two
    point masses at distance h the value is min(h, 1).
    """
    if ks_distance(mu, nu) == 0.0:
        return 0.0

    def feasible(eps: float) -> bool:
        return (_one_sided_gap(mu, nu, eps) <= eps
                and _one_sided_gap(nu, mu, eps) <= eps)

    lo, hi = 0.0, 1.0  # eps = 1 is always feasible since CDFs live in [0, 1]
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if feasible(mid):
            hi = mid
        else:
            lo = mid
    return hi


def empirical_moment(sample, order: int) -> float:
    """Moment (1/n) sum lambda_i**order of a spectrum; order even, 2..20."""
    if not isinstance(order, (int, np.integer)) or order % 2 != 0 or order < 2:
        raise ParameterError(f"order must be an even integer >= 2, got {order!r}")
    if order > MAX_MOMENT_ORDER:
        raise ParameterError(f"order {order} exceeds the overflow guard {MAX_MOMENT_ORDER}")
    vals = sample.eigenvalues if isinstance(sample, SpectralSample) else np.asarray(sample, float)
    return float(np.mean(vals ** order))


def pooled_eigenvalues(samples) -> np.ndarray:
    pools = [s.eigenvalues if isinstance(s, SpectralSample) else np.asarray(s, float)
             for s in samples]
    if not pools:
        raise DataError("no spectra supplied")
    return np.concatenate(pools)


def survival_function(samples, grid) -> np.ndarray:
    """Table (x, S(x)) with S(x) the fraction of pooled eigenvalues above x."""
    pool = np.sort(pooled_eigenvalues(samples))
    if pool.size == 0:
        raise DataError("empty eigenvalue pool")
    grid = np.asarray(grid, dtype=float)
    above = pool.size - np.searchsorted(pool, grid, side="right")
    return np.column_stack([grid, above / pool.size])


@dataclass(frozen=True)
class TailFit:
    slope: float
    intercept: float
    stderr: float  # standard error of the slope
    n_points: int


def tail_fit(survival_table: np.ndarray, x_min: float) -> TailFit:
    """Least-squares fit of log S on log x over the window x >= x_min, S > 0.

    For a survival function with an exact power tail S = C x**s the fit
    recovers slope s and intercept log C.
    """
    table = np.asarray(survival_table, dtype=float)
    mask = (table[:, 0] >= x_min) & (table[:, 1] > 0.0)
    if mask.sum() < 8:
        raise DataError(f"need at least 8 usable grid points above x_min, got {int(mask.sum())}")
    lx = np.log(table[mask, 0])
    ls = np.log(table[mask, 1])
    n = lx.size
    design = np.column_stack([lx, np.ones(n)])
    coef, *_ = np.linalg.lstsq(design, ls, rcond=None)
    slope, intercept = coef
    resid = ls - design @ coef
    dof = max(n - 2, 1)
    sxx = np.sum((lx - lx.mean()) ** 2)
    stderr = float(np.sqrt(resid @ resid / dof / sxx))
    return TailFit(float(slope), float(intercept), stderr, n)


def standardize(values) -> np.ndarray:
    """Centre by the mean and rescale by the root sample second moment."""
    vals = np.asarray(values, dtype=float)
    vals = vals - vals.mean()
    rms = np.sqrt(np.mean(vals ** 2))
    if rms == 0.0:
        raise DataError("cannot standardize a degenerate sample")
    return vals / rms


def histogram_edges(values, bins="fd") -> np.ndarray:
    """Freedman-Diaconis bin edges by default; any numpy rule or an explicit
    edge array is accepted."""
    if isinstance(bins, str):
        return np.histogram_bin_edges(np.asarray(values, float), bins=bins)
    return np.asarray(bins, dtype=float)
