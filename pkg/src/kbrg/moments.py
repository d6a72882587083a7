"""Pair-partition combinatorics and moments of the limiting spectral measure.

The even limiting moments are sums over non-crossing pair partitions of
{1,...,2k}.  Each partition is turned into a rooted tree by composing the
full cycle (1 2 ... 2k) with the pairing, collapsing the closed walk
1 -> 2 -> ... -> 2k -> 1 along the cycle classes of that composition, and
the moment contribution is the expectation of the kernel product over the
tree edges with i.i.d. weights on the tree vertices.

Three evaluation routes are provided and cross-checked in the tests: exact
quadrature by message passing over the tree, the block-size factorisation
available for the product kernel, and a Monte Carlo average.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ParameterError
from .model import ModelParams, kernel_value, pareto_quadrature, pareto_tail_cutoff, rng_from_seed
from .quadrature import kernel_apply_operator

NC_ENUMERATION_CAP = 8      # C_8 = 1430 partitions
ALL_PAIRINGS_CAP = 6        # 11!! = 10395 pairings
DEFAULT_QUADRATURE_SIZE = 128

LAW_VARIANTS = ("hard", "conditional", "untruncated", "degenerate")


def catalan(k: int) -> int:
    return math.comb(2 * k, k) // (k + 1)


@dataclass(frozen=True)
class PairPartition:
    """A perfect matching of {1,...,2k}, pairs sorted by smaller element."""

    k: int
    pairs: tuple
    crossing: bool

    @classmethod
    def from_pairs(cls, pairs) -> "PairPartition":
        pairs = tuple(sorted(tuple(sorted(p)) for p in pairs))
        k = len(pairs)
        flat = sorted(x for p in pairs for x in p)
        if flat != list(range(1, 2 * k + 1)):
            raise ParameterError(f"pairs {pairs!r} do not partition 1..{2 * k}")
        return cls(k=k, pairs=pairs, crossing=_has_crossing(pairs))


def _has_crossing(pairs) -> bool:
    for i, (a, b) in enumerate(pairs):
        for c, d in pairs[i + 1:]:
            if a < c < b < d:
                return True
    return False


def _nc_pairings(elements):
    """Non-crossing matchings of a sorted tuple, pairs emitted in sorted order."""
    if not elements:
        yield ()
        return
    first = elements[0]
    for pos in range(1, len(elements), 2):
        partner = elements[pos]
        inner = elements[1:pos]
        outer = elements[pos + 1:]
        for left in _nc_pairings(inner):
            for right in _nc_pairings(outer):
                yield ((first, partner),) + left + right


def enumerate_nc2(k: int):
    """All non-crossing pair partitions of {1,...,2k} in lexicographic order."""
    if not isinstance(k, (int, np.integer)) or not 1 <= k <= NC_ENUMERATION_CAP:
        raise ParameterError(f"k must be an integer in [1, {NC_ENUMERATION_CAP}], got {k!r}")
    parts = [PairPartition(k=k, pairs=pairs, crossing=False)
             for pairs in sorted(_nc_pairings(tuple(range(1, 2 * k + 1))))]
    assert len(parts) == catalan(k)
    return parts


def enumerate_pair_partitions(k: int):
    """All (2k-1)!! pair partitions of {1,...,2k}, crossing ones included."""
    if not isinstance(k, (int, np.integer)) or not 1 <= k <= ALL_PAIRINGS_CAP:
        raise ParameterError(f"k must be an integer in [1, {ALL_PAIRINGS_CAP}], got {k!r}")

    def rec(elements):
        if not elements:
            yield ()
            return
        first = elements[0]
        for pos in range(1, len(elements)):
            partner = elements[pos]
            rest = elements[1:pos] + elements[pos + 1:]
            for tail in rec(rest):
                yield ((first, partner),) + tail

    return [PairPartition.from_pairs(pairs)
            for pairs in sorted(rec(tuple(range(1, 2 * k + 1))))]


@dataclass(frozen=True)
class WalkClasses:
    """Cycle classes of the composition (full cycle) o (pairing).

    Blocks are ordered so the first block contains 1 and each later block
    starts at the smallest element not seen before.  ``class_of`` maps
    element -> 0-based block index.
    """

    blocks: tuple
    class_of: dict


def walk_classes(partition: PairPartition) -> WalkClasses:
    two_k = 2 * partition.k
    pi = {}
    for a, b in partition.pairs:
        pi[a] = b
        pi[b] = a
    composed = {i: (pi[i] % two_k) + 1 for i in range(1, two_k + 1)}
    seen = set()
    blocks = []
    for start in range(1, two_k + 1):
        if start in seen:
            continue
        cycle = []
        cur = start
        while cur not in seen:
            seen.add(cur)
            cycle.append(cur)
            cur = composed[cur]
        blocks.append(tuple(sorted(cycle)))
    class_of = {el: idx for idx, block in enumerate(blocks) for el in block}
    return WalkClasses(blocks=tuple(blocks), class_of=class_of)


@dataclass(frozen=True)
class WalkTree:
    """Collapsed closed walk over the cycle classes.

    For a non-crossing pairing this is a rooted tree on k+1 vertices whose
    closed walk traverses each undirected edge exactly twice; for a crossing
    pairing it is the multigraph skeleton with ``is_tree`` False.
    Vertices are 0-based block indices, the root is block 0 (the block
    containing element 1).
    """

    blocks: tuple
    edges: tuple          # unique undirected non-loop edges (u, v), u < v
    walk: tuple           # block index visited at steps 1..2k
    edge_visits: dict     # undirected edge -> number of walk traversals
    root: int
    is_tree: bool


def walk_tree(partition: PairPartition) -> WalkTree:
    classes = walk_classes(partition)
    two_k = 2 * partition.k
    walk = tuple(classes.class_of[i] for i in range(1, two_k + 1))
    visits: dict = {}
    for step in range(two_k):
        u = walk[step]
        v = walk[(step + 1) % two_k]
        key = (min(u, v), max(u, v))
        visits[key] = visits.get(key, 0) + 1
    edges = tuple(sorted(e for e in visits if e[0] != e[1]))
    is_tree = (not partition.crossing
               and len(classes.blocks) == partition.k + 1
               and len(edges) == partition.k)
    return WalkTree(blocks=classes.blocks, edges=edges, walk=walk,
                    edge_visits=visits, root=0, is_tree=is_tree)


def partition_line(partition: PairPartition) -> str:
    """Golden-file dump: `k; pairs; blocks=...; tree-edges=...` (1-based blocks)."""
    tree = walk_tree(partition)
    pair_txt = "".join(f"({a},{b})" for a, b in partition.pairs)
    block_txt = "".join("(" + ",".join(str(x) for x in blk) + ")" for blk in tree.blocks)
    edge_txt = "".join(f"({u + 1},{v + 1})" for u, v in tree.edges)
    return f"{partition.k}; {pair_txt}; blocks={block_txt}; tree-edges={edge_txt}"


# ---------------------------------------------------------------------------
# weight laws


@dataclass(frozen=True)
class WeightLaw:
    """One of the weight-law variants used in moment and transform formulas.

    hard:         Pareto(tau) with values above m set to 0 (an atom at zero;
                  the atom never contributes to kernel products, so
                  expectations reduce to the unnormalised integral on [1, m])
    conditional:  Pareto(tau) conditioned on W <= m (renormalised by
                  c_m = 1 - m**-(tau-1))
    untruncated:  plain Pareto(tau)
    degenerate:   the point mass at 1
    """

    tau: float
    m: float = math.inf
    variant: str = "hard"

    def __post_init__(self):
        if self.variant not in LAW_VARIANTS:
            raise ParameterError(f"unknown law variant {self.variant!r}")
        if self.variant in ("hard", "conditional"):
            if not math.isfinite(self.m) or self.m <= 1.0:
                raise ParameterError(f"{self.variant} law needs a finite m > 1, got {self.m}")
        if self.variant != "degenerate" and not self.tau > 1.0:
            raise ParameterError(f"tau must exceed 1, got {self.tau}")

    @property
    def normalisation(self) -> float:
        """Mass on [1, m]; 1 for the normalised variants."""
        if self.variant == "hard":
            return 1.0 - self.m ** -(self.tau - 1.0)
        return 1.0

    def moment(self, ell: float) -> float:
        """E[W**ell] under this law (the hard variant's zero atom contributes 0)."""
        if self.variant == "degenerate":
            return 1.0
        tau, m = self.tau, self.m
        if self.variant == "untruncated":
            if not ell < tau - 1.0:
                raise DomainError(
                    f"moment diverges: needs ell < tau-1, got ell={ell}, tau-1={tau - 1.0}"
                )
            return (tau - 1.0) / (tau - 1.0 - ell)
        if abs(ell - (tau - 1.0)) < 1e-12:
            raw = (tau - 1.0) * math.log(m)
        else:
            raw = (tau - 1.0) / (tau - 1.0 - ell) * (1.0 - m ** (ell - tau + 1.0))
        if self.variant == "conditional":
            return raw / (1.0 - m ** -(tau - 1.0))
        return raw

    def quadrature(self, size: int = DEFAULT_QUADRATURE_SIZE,
                   max_exponent: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
        """Nodes and weights so dot(f(nodes), weights) = E[f(W) 1_{W >= 1}].

        ``max_exponent`` is the largest polynomial growth rate of the
        integrands; for the untruncated law it fixes the cutoff so the
        neglected tail stays below 1e-10.
        """
        if self.variant == "degenerate":
            return np.array([1.0]), np.array([1.0])
        if self.variant == "untruncated":
            upper = pareto_tail_cutoff(self.tau, mass_tol=1e-12,
                                       moment=max_exponent, moment_tol=1e-10)
        else:
            upper = self.m
        nodes, weights = pareto_quadrature(self.tau, upper, size=size)
        if self.variant == "conditional":
            weights = weights / (1.0 - self.m ** -(self.tau - 1.0))
        return nodes, weights

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        if self.variant == "degenerate":
            return np.ones(size)
        u = 1.0 - rng.random(size)  # (0, 1]
        if self.variant == "untruncated":
            return u ** (-1.0 / (self.tau - 1.0))
        if self.variant == "hard":
            w = u ** (-1.0 / (self.tau - 1.0))
            return np.where(w > self.m, 0.0, w)
        c_m = 1.0 - self.m ** -(self.tau - 1.0)
        return (1.0 - c_m * u) ** (-1.0 / (self.tau - 1.0))


def truncated_pareto_moment(ell: float, tau: float, m: float = math.inf,
                            variant: str = "hard") -> float:
    """E[W**ell] for the requested law variant (closed form)."""
    if math.isinf(m) and variant in ("hard", "conditional"):
        variant = "untruncated"
    return WeightLaw(tau=tau, m=m, variant=variant).moment(ell)


def law_for(params: ModelParams, variant: str) -> WeightLaw:
    if variant in ("hard", "conditional") and not params.truncated:
        raise ParameterError(f"law variant {variant!r} needs a finite trunc_m")
    m = params.trunc_m if variant in ("hard", "conditional") else math.inf
    return WeightLaw(tau=params.tau, m=m, variant=variant)


def _resolve_law(params: ModelParams, variant: str) -> WeightLaw:
    if variant == "degenerate":
        return WeightLaw(tau=params.tau, variant="degenerate")
    return law_for(params, variant)


# ---------------------------------------------------------------------------
# moment evaluation


def kernel_operator(params: ModelParams, law: WeightLaw,
                    size: int = DEFAULT_QUADRATURE_SIZE,
                    max_block: int = 1) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Grid (nodes, weights) for the law and the matrix K realising
    (K @ h)[g] = E[kappa(x_g, W) h(W)].

    For the weight kernels K is a kink-aware product-integration matrix on
    the log-Gauss-Legendre nodes; the trivial kernel reduces to the plain
    rule.  ``max_block`` bounds the polynomial growth of the integrands and
    fixes the tail cutoff for the untruncated law.
    """
    if law.variant == "degenerate":
        k11 = kernel_value(params.kernel, params.sigma, 1.0, 1.0, params=params)
        return np.array([1.0]), np.array([1.0]), np.array([[k11]])
    if params.kernel == "trivial":
        nodes, weights = law.quadrature(size=size)
        return nodes, weights, np.tile(weights, (nodes.size, 1))
    sigma_eff = params.effective_sigma()
    if law.variant == "untruncated":
        max_expo = max_block * max(1.0, sigma_eff)
        upper = pareto_tail_cutoff(law.tau, mass_tol=1e-12,
                                   moment=max_expo, moment_tol=1e-10)
        norm = 1.0
    else:
        upper = law.m
        norm = 1.0 if law.variant == "hard" else 1.0 - law.m ** -(law.tau - 1.0)
    return kernel_apply_operator(law.tau, upper, size, sigma_eff, norm)


def _tree_adjacency(tree: WalkTree):
    adj = {i: [] for i in range(len(tree.blocks))}
    for u, v in tree.edges:
        adj[u].append(v)
        adj[v].append(u)
    return adj


def root_profile(tree: WalkTree, kop: np.ndarray) -> np.ndarray:
    """Product of leaf-to-root messages, as a function of the root weight.

    Entry g is the conditional expectation of the kernel product over the
    tree edges given that the root carries weight nodes[g]; integrating it
    against the law gives the full tree expectation.
    """
    if not tree.is_tree:
        raise ParameterError("root_profile needs a tree (non-crossing pairing)")
    adj = _tree_adjacency(tree)

    def message(child: int, parent: int) -> np.ndarray:
        prod = np.ones(kop.shape[0])
        for nb in adj[child]:
            if nb != parent:
                prod = prod * message(nb, child)
        return kop @ prod

    prod = np.ones(kop.shape[0])
    for nb in adj[tree.root]:
        prod = prod * message(nb, tree.root)
    return prod


def tree_expectation(tree: WalkTree, params: ModelParams, law: WeightLaw,
                     size: int = DEFAULT_QUADRATURE_SIZE) -> float:
    """E[prod over tree edges of kappa(W_u, W_v)] with i.i.d. vertex weights."""
    max_block = max(len(b) for b in tree.blocks)
    _, weights, kop = kernel_operator(params, law, size=size, max_block=max_block)
    return float(root_profile(tree, kop) @ weights)


def _check_untruncated_regime(k: int, params: ModelParams) -> None:
    if params.kernel == "trivial":
        return
    sig = max(1.0, params.effective_sigma())
    if not k * sig < params.tau - 1.0:
        raise DomainError(
            f"untruncated moment of order 2k diverges: violated inequality "
            f"k*max(sigma,1) < tau-1 ({k}*{sig} >= {params.tau - 1.0})"
        )


def limiting_moment(k: int, params: ModelParams, law: str = "hard",
                    method: str = "tree-quadrature", *,
                    size: int = DEFAULT_QUADRATURE_SIZE,
                    trials: int = 10 ** 5, seed=0) -> float:
    """Even moment M_{2k} of the limiting spectral measure.

    method is one of "tree-quadrature", "block-factorization" (product
    kernel only, also accepted as "closed-form-sigma1") and "monte-carlo".
    """
    if law not in LAW_VARIANTS:
        raise ParameterError(f"unknown law {law!r}")
    if law == "untruncated":
        _check_untruncated_regime(k, params)
    weight_law = _resolve_law(params, law)

    if method in ("block-factorization", "closed-form-sigma1"):
        if params.kernel == "trivial":
            raise ParameterError("block factorisation applies to the weight kernels, not trivial")
        effective = params.effective_sigma()
        if not math.isclose(effective, 1.0):
            raise ParameterError(
                f"block factorisation needs the product kernel (sigma = 1), got sigma={effective}"
            )
        total = 0.0
        for partition in enumerate_nc2(k):
            classes = walk_classes(partition)
            term = 1.0
            for block in classes.blocks:
                term *= weight_law.moment(len(block))
            total += term
        return total

    if method == "tree-quadrature":
        # block sizes in the walk trees of order 2k never exceed k
        _, weights, kop = kernel_operator(params, weight_law, size=size, max_block=k)
        total = 0.0
        for partition in enumerate_nc2(k):
            total += float(root_profile(walk_tree(partition), kop) @ weights)
        return total

    if method == "monte-carlo":
        est, _ = monte_carlo_moment(k, params, law=law, trials=trials, seed=seed)
        return est

    raise ParameterError(f"unknown method {method!r}")


def monte_carlo_moment(k: int, params: ModelParams, law: str = "hard",
                       trials: int = 10 ** 5, seed=0) -> tuple[float, float]:
    """Monte Carlo oracle for the limiting moment.

    For each non-crossing pairing the kernel product over the tree edges is
    averaged over i.i.d. weight assignments to the tree vertices; the
    per-partition estimates are independent, so the combined standard error
    is the root sum of squares.
    """
    if trials < 10 ** 4:
        raise ParameterError(f"need at least 1e4 trials, got {trials}")
    if law == "untruncated":
        _check_untruncated_regime(k, params)
    weight_law = _resolve_law(params, law)
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    total = 0.0
    var_sum = 0.0
    for idx, partition in enumerate(enumerate_nc2(k)):
        tree = walk_tree(partition)
        rng = rng_from_seed(np.random.SeedSequence(ss.entropy, spawn_key=(idx,)))
        w = weight_law.sample(rng, (trials, len(tree.blocks)))
        prod = np.ones(trials)
        for u, v in tree.edges:
            prod *= kernel_value(params.kernel, params.sigma, w[:, u], w[:, v], params=params)
        total += float(prod.mean())
        var_sum += float(prod.var(ddof=1)) / trials
    return total, math.sqrt(var_sum)


def second_moment_closed_form(tau: float, sigma: float) -> float:
    """Closed form 2 (tau-1)**2 / ((tau-2) (2 tau - sigma - 3)) for the
    untruncated second moment of the limiting measure."""
    if not tau > 2.0:
        raise ParameterError(f"tau must exceed 2, got {tau}")
    if not 0.0 < sigma < tau - 1.0:
        raise ParameterError(f"sigma must lie in (0, tau-1), got {sigma}")
    return 2.0 * (tau - 1.0) ** 2 / ((tau - 2.0) * (2.0 * tau - sigma - 3.0))


def moment_sequence(k_max: int, params: ModelParams, law: str = "conditional",
                    size: int = 256) -> list[float]:
    """[M_0, M_2, ..., M_{2 k_max}] via tree quadrature (M_0 = 1)."""
    out = [1.0]
    for k in range(1, k_max + 1):
        out.append(limiting_moment(k, params, law=law, method="tree-quadrature", size=size))
    return out


def moment_catalan_bound(k: int, params: ModelParams) -> float:
    """Upper bound (m**(1+sigma))**k C_k valid for the truncated laws."""
    if not params.truncated:
        raise ParameterError("the Catalan bound needs a finite trunc_m")
    return (params.trunc_m ** (1.0 + params.effective_sigma())) ** k * catalan(k)
