"""
Ground truth for the epidemic layer.

run_epidemic  - Monte Carlo over i.i.d. investments, direct losses and
                directed contagion indicators on a finite graph.
exact_tiny    - brute-force enumeration of every joint outcome.
tree_dp       - exact bottom-up recursion on a rooted tree.

Infection is the minimal solution of
    1 - X_i = (1 - phi_i) * prod_{j ~ i} (1 - theta_ji X_j),
i.e. the set of nodes reachable from a direct loss through open edges.
The contagion probability of edge j->i depends on the receiver's state D_i.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import breadth_first_order

from .. import config
from ..errors import BudgetExceededError, DomainError
from ..model.lmf import EpidemicParams
from .graphs import Graph, TreeGraph

logger = logging.getLogger(__name__)

EXACT_CHUNK = 1 << 16
MINIMALITY_CHECK_MAX_NODES = 5


@dataclass(frozen=True)
class SimConfig:
    """Either gamma (i.i.d. Bernoulli investments) or an explicit 0/1 investment vector."""

    params: EpidemicParams
    gamma: Optional[float] = None
    investment: Optional[Sequence[int]] = None
    trials: int = config.DEFAULT_TRIALS
    seed: int = 0

    def __post_init__(self):
        if (self.gamma is None) == (self.investment is None):
            raise DomainError("give exactly one of gamma or an explicit investment vector")
        if self.gamma is not None and not 0.0 <= self.gamma <= 1.0:
            raise DomainError(f"gamma must lie in [0, 1] (got {self.gamma})")
        if self.investment is not None:
            inv = np.asarray(self.investment, dtype=np.int64)
            if inv.ndim != 1 or np.any((inv != 0) & (inv != 1)):
                raise DomainError("investment vector must be a 1-d array of 0/1 values")
            object.__setattr__(self, "investment", tuple(int(v) for v in inv))
        if self.trials < 1:
            raise DomainError(f"trials must be >= 1 (got {self.trials})")


@dataclass(frozen=True)
class SimOutcome:
    mean_infected: float
    mean_infected_given_S: float
    mean_infected_given_N: float
    se_infected: float
    se_given_S: float
    se_given_N: float
    gamma_hat: float
    trials: int
    n: int
    node_rates: np.ndarray = field(repr=False)
    node_se: np.ndarray = field(repr=False)

    def to_dict(self) -> dict:
        def clean(v):
            return None if isinstance(v, float) and math.isnan(v) else v

        return {
            "mean_infected": clean(self.mean_infected),
            "mean_infected_given_S": clean(self.mean_infected_given_S),
            "mean_infected_given_N": clean(self.mean_infected_given_N),
            "se_infected": clean(self.se_infected),
            "se_given_S": clean(self.se_given_S),
            "se_given_N": clean(self.se_given_N),
            "gamma_hat": self.gamma_hat,
            "trials": self.trials,
            "n": self.n,
            "node_rates": self.node_rates.tolist(),
            "node_se": self.node_se.tolist(),
        }


@dataclass(frozen=True)
class TreeDpResult:
    y_root: float
    x_root: float
    x_root_given_N: float
    x_root_given_S: float
    y: np.ndarray = field(repr=False)


@dataclass
class _TrialStats:
    infected: np.ndarray          # per trial
    infected_S: np.ndarray
    count_S: np.ndarray
    node_hits: np.ndarray         # per node, summed over the chunk


def trial_streams(seed: int, trial: int) -> List[np.random.Generator]:
    """Independent generators for investments, direct losses and contagion of one trial."""
    root = np.random.SeedSequence(seed, spawn_key=(trial,))
    return [np.random.default_rng(s) for s in root.spawn(3)]


def infected_set(n: int, directed: np.ndarray, open_edges: np.ndarray, seeds: np.ndarray) -> np.ndarray:
    """Boolean X: nodes reachable from a seed through open directed edges."""
    x = np.zeros(n, dtype=bool)
    seed_nodes = np.flatnonzero(seeds)
    if seed_nodes.size == 0:
        return x
    src = directed[open_edges, 0]
    dst = directed[open_edges, 1]
    # super-source n points at every seed
    rows = np.concatenate([src, np.full(seed_nodes.size, n)])
    cols = np.concatenate([dst, seed_nodes])
    adj = sparse.csr_matrix((np.ones(rows.size, dtype=np.int8), (rows, cols)), shape=(n + 1, n + 1))
    order = breadth_first_order(adj, n, directed=True, return_predecessors=False)
    x[order[order < n]] = True
    return x


def _run_chunk(graph: Graph, cfg: SimConfig, trials: range) -> _TrialStats:
    params = cfg.params
    n = graph.n
    directed = graph.directed_edges()
    receivers = directed[:, 1]
    fixed = None if cfg.investment is None else np.asarray(cfg.investment, dtype=bool)

    infected = np.zeros(len(trials))
    infected_S = np.zeros(len(trials))
    count_S = np.zeros(len(trials))
    node_hits = np.zeros(n)
    for k, t in enumerate(trials):
        rng_d, rng_phi, rng_theta = trial_streams(cfg.seed, t)
        d = fixed if fixed is not None else rng_d.random(n) < cfg.gamma
        seeds = rng_phi.random(n) < np.where(d, params.p_minus, params.p_plus)
        q = np.where(d[receivers], params.q_minus, params.q_plus)
        open_edges = rng_theta.random(directed.shape[0]) < q
        x = infected_set(n, directed, open_edges, seeds)
        infected[k] = x.sum()
        infected_S[k] = (x & d).sum()
        count_S[k] = d.sum()
        node_hits += x
    return _TrialStats(infected, infected_S, count_S, node_hits)


def _ratio_se(num: np.ndarray, den: np.ndarray) -> float:
    """Delta-method standard error of sum(num) / sum(den) over i.i.d. trials."""
    t = num.size
    if den.sum() == 0:
        return math.nan
    if t < 2:
        return 0.0
    r = num.sum() / den.sum()
    resid = num - r * den
    return float(math.sqrt(np.sum(resid ** 2) / (t * (t - 1))) / den.mean())


def run_epidemic(graph: Graph, sim_config: SimConfig, max_workers: int = None) -> SimOutcome:
    """Monte Carlo estimate of infection frequencies, pooled over trials."""
    if sim_config.investment is not None and len(sim_config.investment) != graph.n:
        raise DomainError(f"investment vector has {len(sim_config.investment)} entries for {graph.n} nodes")
    if graph.n == 0:
        raise DomainError("cannot simulate on an empty graph")

    workers = max(1, config.MAX_WORKERS if max_workers is None else max_workers)
    bounds = np.linspace(0, sim_config.trials, min(sim_config.trials, 4 * workers) + 1).astype(int)
    chunks = [range(a, b) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
    with ThreadPoolExecutor(max_workers=workers) as executor:
        stats = list(executor.map(lambda r: _run_chunk(graph, sim_config, r), chunks))

    n, trials = graph.n, sim_config.trials
    infected = np.concatenate([s.infected for s in stats])
    infected_S = np.concatenate([s.infected_S for s in stats])
    count_S = np.concatenate([s.count_S for s in stats])
    node_hits = np.sum([s.node_hits for s in stats], axis=0)
    infected_N = infected - infected_S
    count_N = n - count_S

    def pooled(num, den):
        total = den.sum()
        return float(num.sum() / total) if total > 0 else math.nan

    frac = infected / n
    se_all = float(frac.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    node_rates = node_hits / trials
    outcome = SimOutcome(
        mean_infected=float(frac.mean()),
        mean_infected_given_S=pooled(infected_S, count_S),
        mean_infected_given_N=pooled(infected_N, count_N),
        se_infected=se_all,
        se_given_S=_ratio_se(infected_S, count_S),
        se_given_N=_ratio_se(infected_N, count_N),
        gamma_hat=float(count_S.sum() / (n * trials)),
        trials=trials,
        n=n,
        node_rates=node_rates,
        node_se=np.sqrt(node_rates * (1.0 - node_rates) / trials),
    )
    logger.debug("simulated %d trials on n=%d: mean infected %.6g", trials, n, outcome.mean_infected)
    return outcome


def _propagate(x: np.ndarray, open_edges: np.ndarray, src: np.ndarray, incidence: np.ndarray) -> np.ndarray:
    """For a batch of outcomes: does some open edge j->i carry infection from an infected j?"""
    carried = (open_edges & x[:, src]).astype(np.int32)
    return (carried @ incidence) > 0


def exact_tiny(graph: Graph, params: EpidemicParams, investment: Sequence[int]) -> np.ndarray:
    """Exact P(X_i = 1) for every node by enumerating all direct-loss and contagion outcomes."""
    d = np.asarray(investment, dtype=bool)
    n = graph.n
    if d.shape != (n,):
        raise DomainError(f"investment vector must have {n} entries")
    directed = graph.directed_edges()
    e = directed.shape[0]
    bits = n + e
    if bits > config.EXACT_BUDGET_BITS:
        raise BudgetExceededError(
            f"exact enumeration needs 2^{bits} outcomes; the budget is 2^{config.EXACT_BUDGET_BITS}"
        )

    # one bit per node (direct loss) then one per directed edge (contagion open)
    src, dst = directed[:, 0], directed[:, 1]
    probs = np.concatenate([
        np.where(d, params.p_minus, params.p_plus),
        np.where(d[dst], params.q_minus, params.q_plus),
    ])
    incidence = np.zeros((e, n), dtype=np.int32)
    incidence[np.arange(e), dst] = 1
    shifts = np.arange(bits, dtype=np.int64)
    check = n <= MINIMALITY_CHECK_MAX_NODES

    total = np.zeros(n)
    for start in range(0, 1 << bits, EXACT_CHUNK):
        # decode a chunk of outcome codes into bit rows and their probabilities
        codes = np.arange(start, min(start + EXACT_CHUNK, 1 << bits), dtype=np.int64)
        outcome = ((codes[:, None] >> shifts) & 1).astype(bool)
        weights = np.prod(np.where(outcome, probs, 1.0 - probs), axis=1)
        seeds, open_edges = outcome[:, :n], outcome[:, n:]

        # spread from the seeds along open edges; n rounds reach every node
        x = seeds.copy()
        for _ in range(n):
            x_new = seeds | _propagate(x, open_edges, src, incidence)
            if np.array_equal(x_new, x):
                break
            x = x_new
        if check:
            # iteration from the seeds gives the least fixed point; confirm it is one
            rhs = seeds | _propagate(x, open_edges, src, incidence)
            if not np.array_equal(rhs, x):
                raise RuntimeError("enumerated infection set does not satisfy the recursion")
        total += weights @ x
    return total


def tree_dp(tree: TreeGraph, params: EpidemicParams, gamma: float) -> TreeDpResult:
    """
    Exact probabilities y_i = P(Y_i = 1) of infection from below, leaves first.

    Subtrees are independent, so y_i mixes over D_i with the product over
    children of (1 - q y_k). The root has no parent, so its X and Y coincide;
    the conditional root probabilities are the finite-tree p_N and p_S.
    """
    if not 0.0 <= gamma <= 1.0:
        raise DomainError(f"gamma must lie in [0, 1] (got {gamma})")
    n = tree.n
    counts = tree.child_counts()
    prod_minus = np.ones(n)
    prod_plus = np.ones(n)
    y = np.empty(n)

    for gen in range(int(tree.generation.max()), -1, -1):
        nodes = np.flatnonzero(tree.generation == gen)
        parents = nodes[counts[nodes] > 0]
        if parents.size:
            lo, hi = tree.child_ptr[parents[0]], tree.child_ptr[parents[-1] + 1]
            offsets = tree.child_ptr[parents] - lo
            kids = y[lo:hi]
            prod_minus[parents] = np.multiply.reduceat(1.0 - params.q_minus * kids, offsets)
            prod_plus[parents] = np.multiply.reduceat(1.0 - params.q_plus * kids, offsets)
        y[nodes] = (gamma * (1.0 - (1.0 - params.p_minus) * prod_minus[nodes])
                    + (1.0 - gamma) * (1.0 - (1.0 - params.p_plus) * prod_plus[nodes]))

    x_N = 1.0 - (1.0 - params.p_plus) * prod_plus[0]
    x_S = 1.0 - (1.0 - params.p_minus) * prod_minus[0]
    return TreeDpResult(y_root=float(y[0]), x_root=float(gamma * x_S + (1.0 - gamma) * x_N),
                        x_root_given_N=float(x_N), x_root_given_S=float(x_S), y=y)
