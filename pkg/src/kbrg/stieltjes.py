"""Self-consistent fixed-point equation for the Stieltjes transform.

For Im z > 0 the transform of the limiting measure is obtained by solving

    a(z, x) * ( z + integral a(z, y) kappa(x, y) law(dy) ) = -1

for the field x -> a(z, x) and integrating it against the weight law.  The
iteration uses the resolvent form a <- -1/(z + integral a kappa), which has
the same fixed points as the exponential-integral form of the map and
preserves the Herglotz bounds Im a > 0, |a| <= 1/Im z at every step.

Contraction is guaranteed only for Im z large (constant c~ / eta**2 with
c~ = (tau-1) (1/(beta-2) + 1/(beta-1-sigma)) ); smaller eta is reached by a
geometric continuation in eta with warm starts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, NumericalError, ParameterError, PartialResultError, StateError
from .model import ModelParams, kernel_value, pareto_tail_cutoff
from .moments import WeightLaw
from .quadrature import gauss_legendre_log_grid, kernel_apply_operator

GRID_LAWS = ("conditional", "untruncated", "degenerate")
DEFAULT_GRID_SIZE = 256


@dataclass(frozen=True)
class WeightGrid:
    """Discretised weight law on geometric (log-Gauss-Legendre) nodes.

    ``weights`` integrate against the law itself (total mass 1 up to the
    stated tolerance); ``u_nodes``/``u_glweights`` are the underlying
    log-substitution rule, reused to integrate against other densities on
    the same nodes (the norm measure of the solver).
    """

    nodes: np.ndarray
    weights: np.ndarray
    law: str
    tau: float
    m: float
    x_max: float
    u_nodes: np.ndarray
    u_glweights: np.ndarray

    @property
    def size(self) -> int:
        return self.nodes.size

    def norm_weights(self, beta: float) -> np.ndarray:
        """Quadrature weights for integral |f(x)| x**-beta dx on [1, x_max]."""
        if self.law == "degenerate":
            return np.array([1.0])
        return self.u_glweights * np.exp((1.0 - beta) * self.u_nodes)


def build_weight_grid(tau: float, m: float = math.inf, law: str = "conditional",
                      size: int = DEFAULT_GRID_SIZE) -> WeightGrid:
    """Quadrature grid for the conditional truncated law, the plain Pareto
    law, or the degenerate point mass at 1.

    Construction is validated: the discretised mass must equal 1 within
    1e-10 and the first moment must match the closed form within 1e-8
    relative.
    """
    if law not in GRID_LAWS:
        raise ParameterError(f"grid law must be one of {GRID_LAWS}, got {law!r}")
    if law == "degenerate":
        return WeightGrid(np.array([1.0]), np.array([1.0]), law, tau, math.inf, 1.0,
                          np.array([0.0]), np.array([1.0]))
    if law == "conditional":
        if not (math.isfinite(m) and m > 1.0):
            raise ParameterError(f"conditional law needs finite m > 1, got {m}")
        upper = m
    else:
        upper = pareto_tail_cutoff(tau, mass_tol=1e-11, moment=1.0, moment_tol=1e-9)
    nodes, weights, u_nodes, _, gl, _ = gauss_legendre_log_grid(tau, upper, size)
    u_glweights = gl * 0.5 * math.log(upper)
    if law == "conditional":
        weights = weights / (1.0 - m ** -(tau - 1.0))
    grid = WeightGrid(nodes, weights, law, tau, m if law == "conditional" else math.inf,
                      upper, u_nodes, u_glweights)
    mass = float(weights.sum())
    if abs(mass - 1.0) > 1e-10:
        raise NumericalError(f"grid mass {mass} deviates from 1 by more than 1e-10")
    want = WeightLaw(tau, m=grid.m, variant=law).moment(1.0)
    got = float(nodes @ weights)
    if abs(got / want - 1.0) > 1e-8:
        raise NumericalError(f"grid first moment {got} does not reproduce {want}")
    return grid


@dataclass
class SolverConfig:
    """Iteration controls.

    beta parametrises the weighted L1 norm used for residuals and must lie
    in (max(2, 1+sigma), tau-1); None picks the midpoint.  eta_start is the
    imaginary level where the continuation begins (None: 2 sqrt(c~)).
    eta_target is the default boundary offset for density scans.
    """

    beta: float | None = None
    eta_start: float | None = None
    eta_target: float = 1e-2
    continuation_ratio: float = 0.7
    damping: float = 0.5
    tol: float = 1e-9
    max_iter: int = 10_000

    def __post_init__(self):
        if not 0.0 < self.damping <= 1.0:
            raise ParameterError(f"damping must lie in (0, 1], got {self.damping}")
        if not 0.0 < self.continuation_ratio < 1.0:
            raise ParameterError("continuation ratio must lie in (0, 1)")
        if not self.tol > 0.0:
            raise ParameterError("tolerance must be positive")


def contraction_constant(tau: float, sigma: float, beta: float) -> float:
    """c~ = (tau-1) (1/(beta-2) + 1/(beta-1-sigma)); the map contracts the
    weighted L1 norm by c~/eta**2."""
    if not (beta > 2.0 and beta > 1.0 + sigma):
        raise ParameterError(f"beta={beta} must exceed max(2, 1+sigma)={max(2.0, 1.0 + sigma)}")
    return (tau - 1.0) * (1.0 / (beta - 2.0) + 1.0 / (beta - 1.0 - sigma))


def default_beta(tau: float, sigma: float) -> float:
    """Midpoint of the admissible range (max(2, 1+sigma), tau-1).

    When the range is empty (possible for truncated laws with tau <= 3 or
    sigma >= tau-2) any beta above the lower endpoint still yields finite
    contraction constants, so lower + 1 is used; the untruncated law is
    refused upstream in that regime.
    """
    lo = max(2.0, 1.0 + sigma)
    hi = tau - 1.0
    if hi > lo:
        return 0.5 * (lo + hi)
    return lo + 1.0


def require_untruncated_regime(tau: float, sigma: float) -> None:
    if not tau > 3.0:
        raise ParameterError(f"untruncated law needs tau > 3, got tau={tau}")
    if not sigma < tau - 2.0:
        raise ParameterError(
            f"untruncated law needs sigma < tau - 2, got sigma={sigma}, tau-2={tau - 2.0}"
        )


@dataclass(frozen=True)
class FixedPointProblem:
    """Grid, kernel application operator and norm data for one (params, law) pair."""

    grid: WeightGrid
    kop: np.ndarray      # (kop @ a)[g] = integral a(y) kappa(x_g, y) law(dy)
    sigma_eff: float
    beta: float
    nu_weights: np.ndarray
    c_tilde: float | None
    eta_start: float
    params: ModelParams


def make_problem(params: ModelParams, law: str = "conditional",
                 size: int = DEFAULT_GRID_SIZE,
                 config: SolverConfig | None = None) -> FixedPointProblem:
    config = config or SolverConfig()
    weight_kernel = params.kernel != "trivial"
    if law == "untruncated" and weight_kernel:
        require_untruncated_regime(params.tau, params.effective_sigma())
        if config.beta is not None and not config.beta < params.tau - 1.0:
            raise ParameterError(
                f"beta={config.beta} must stay below tau-1 = {params.tau - 1.0} "
                "for the untruncated law"
            )
    grid = build_weight_grid(params.tau, params.trunc_m, law, size=size) \
        if law != "degenerate" else build_weight_grid(params.tau, law="degenerate")
    if law == "degenerate":
        k11 = kernel_value(params.kernel, params.sigma, 1.0, 1.0, params=params)
        kop = np.array([[k11]])
    elif not weight_kernel:
        kop = np.tile(grid.weights, (grid.size, 1))
    else:
        norm = 1.0 - params.trunc_m ** -(params.tau - 1.0) if law == "conditional" else 1.0
        _, _, kop = kernel_apply_operator(params.tau, grid.x_max, size,
                                          params.effective_sigma(), norm)
    if weight_kernel:
        sigma_eff = params.effective_sigma()
        beta = config.beta if config.beta is not None else default_beta(params.tau, sigma_eff)
        c_tilde = contraction_constant(params.tau, sigma_eff, beta)
        eta_start = config.eta_start if config.eta_start is not None else 2.0 * math.sqrt(c_tilde)
    else:
        sigma_eff = 0.0
        beta = config.beta if config.beta is not None else default_beta(params.tau, 0.0)
        c_tilde = None
        eta_start = config.eta_start if config.eta_start is not None else 2.0
    return FixedPointProblem(grid=grid, kop=kop, sigma_eff=sigma_eff, beta=beta,
                             nu_weights=grid.norm_weights(beta), c_tilde=c_tilde,
                             eta_start=eta_start, params=params)


@dataclass
class StieltjesField:
    """Solution field a(z, .) on the grid nodes."""

    z: complex
    values: np.ndarray
    residual: float
    converged: bool
    iterations: int
    trace: list | None = None  # per-iterate (eta, residual, min Im a, max |a|) when tracked


def apply_map(values: np.ndarray, z: complex, problem: FixedPointProblem) -> np.ndarray:
    """One application of a <- -1/(z + integral a kappa dlaw), with the
    Herglotz guards re-asserted on the output."""
    eta = z.imag
    if not eta > 0.0:
        raise ParameterError(f"need Im z > 0, got z={z}")
    integral = problem.kop @ values
    denom = z + integral
    bad = np.abs(denom) < 1e-14
    if np.any(bad):
        raise NumericalError("denominator vanished in the fixed-point map")
    out = -1.0 / denom
    if not np.all(out.imag > 0.0):
        raise NumericalError("Herglotz bound lost: Im a <= 0 after the map")
    if np.max(np.abs(out)) > 1.0 / eta + 1e-12:
        raise NumericalError("Herglotz bound lost: |a| > 1/Im z after the map")
    return out


def _nu_norm(values: np.ndarray, problem: FixedPointProblem) -> float:
    return float(np.abs(values) @ problem.nu_weights)


def _iterate_at(z: complex, start: np.ndarray, problem: FixedPointProblem,
                config: SolverConfig, damping: float | None,
                trace: list | None) -> tuple[np.ndarray, float, int]:
    theta = damping if damping is not None else config.damping
    a = start
    prev_residual = math.inf
    for it in range(1, config.max_iter + 1):
        b = apply_map(a, z, problem)
        residual = _nu_norm(b - a, problem)
        if trace is not None:
            trace.append((z.imag, residual, float(b.imag.min()), float(np.abs(b).max())))
        if residual > prev_residual and theta > 0.25:
            theta = 0.25  # residual went up: damp harder
        a = a + theta * (b - a)
        prev_residual = residual
        if residual < config.tol:
            return a, residual, it
    raise ConvergenceError(
        f"no convergence at z={z} within {config.max_iter} iterations "
        f"(last residual {prev_residual:.3e})",
        residual=prev_residual,
    )


def _eta_ladder(eta_start: float, eta_target: float, ratio: float) -> list[float]:
    if eta_target >= eta_start:
        return [eta_target]
    etas = [eta_start]
    while etas[-1] * ratio > eta_target:
        etas.append(etas[-1] * ratio)
    etas.append(eta_target)
    return etas


def solve_fixed_point(z: complex, problem: FixedPointProblem,
                      config: SolverConfig | None = None, *,
                      warm_start: np.ndarray | None = None,
                      damping: float | None = None,
                      track: bool = False) -> StieltjesField:
    """Solve the field equation at one z in the upper half plane.

    Starts from a = -1/z at Im z = eta_start and walks eta down
    geometrically to Im z, reusing each solution as the next initial guess.
    A supplied warm start is tried directly first and the continuation is
    used as the fallback.
    """
    z = complex(z)
    if not z.imag > 0.0:
        raise ParameterError(f"z must lie in the upper half plane, got {z}")
    config = config or SolverConfig()
    trace: list | None = [] if track else None
    total_iters = 0

    if warm_start is not None:
        try:
            a, residual, its = _iterate_at(z, np.asarray(warm_start, complex), problem,
                                           config, damping, trace)
            return StieltjesField(z, a, residual, True, its, trace)
        except ConvergenceError:
            if trace is not None:
                trace.clear()

    etas = _eta_ladder(problem.eta_start, z.imag, config.continuation_ratio)
    a = np.full(problem.grid.size, -1.0 / complex(z.real, etas[0]))
    residual = math.inf
    for eta in etas:
        a, residual, its = _iterate_at(complex(z.real, eta), a, problem, config,
                                       damping, trace)
        total_iters += its
    return StieltjesField(z, a, residual, True, total_iters, trace)


def stieltjes_transform(field: StieltjesField, grid: WeightGrid) -> complex:
    """Integrate the converged field against the weight law."""
    if not field.converged:
        raise StateError("field did not converge; no transform available")
    return complex(field.values @ grid.weights)


def evaluate_field(field: StieltjesField, problem: FixedPointProblem,
                   x: np.ndarray) -> np.ndarray:
    """Extend a solved field to arbitrary weight arguments through the
    defining relation a(x) = -1/(z + integral a(y) kappa(x, y) law(dy))."""
    kmat = kernel_value(problem.params.kernel, problem.params.sigma,
                        np.asarray(x, float)[:, None], problem.grid.nodes[None, :],
                        params=problem.params)
    integral = kmat @ (field.values * problem.grid.weights)
    return -1.0 / (field.z + integral)


def laurent_sum(moment_list, z: complex) -> complex:
    """Truncated expansion -sum_k M_{2k} / z**(2k+1) from [M_0, M_2, ...]."""
    z = complex(z)
    total = 0.0 + 0.0j
    for k, mom in enumerate(moment_list):
        total -= mom / z ** (2 * k + 1)
    return total


def semicircle_stieltjes(z: complex) -> complex:
    """Transform of the standard semicircle law, branch mapping C+ to C+."""
    z = complex(z)
    return (-z + np.sqrt(z - 2.0 + 0j) * np.sqrt(z + 2.0 + 0j)) / 2.0


@dataclass
class DensityScan:
    """Result table of a boundary-value density scan."""

    rows: np.ndarray  # columns x, density, eta, residual

    @property
    def x(self) -> np.ndarray:
        return self.rows[:, 0]

    @property
    def density(self) -> np.ndarray:
        return self.rows[:, 1]

    def mass(self) -> float:
        return float(np.trapezoid(self.density, self.x))

    def second_moment(self) -> float:
        return float(np.trapezoid(self.x ** 2 * self.density, self.x))


def spectral_density(problem: FixedPointProblem, x_grid, eta_final: float | None = None,
                     config: SolverConfig | None = None) -> DensityScan:
    """Recover the density as Im S(x + i eta)/pi along a real grid.

    The scan runs left to right with warm starts; the first point pays the
    full eta continuation.  Failed abscissae raise PartialResultError with
    the completed rows attached.
    """
    config = config or SolverConfig()
    eta = config.eta_target if eta_final is None else float(eta_final)
    if not eta > 0.0:
        raise ParameterError(f"eta_final must be positive, got {eta}")
    xs = np.sort(np.asarray(x_grid, dtype=float))
    rows = []
    failed = []
    prev = None
    for x in xs:
        z = complex(x, eta)
        try:
            field = solve_fixed_point(z, problem, config, warm_start=prev)
        except ConvergenceError:
            failed.append(float(x))
            prev = None
            continue
        prev = field.values
        transform = stieltjes_transform(field, problem.grid)
        rows.append((float(x), transform.imag / math.pi, eta, field.residual))
    table = np.array(rows) if rows else np.empty((0, 4))
    if failed:
        raise PartialResultError(
            f"{len(failed)} abscissae failed to converge: {failed[:5]}...",
            failed=failed, partial=DensityScan(table),
        )
    return DensityScan(table)
