"""
Random graph generators: Erdos-Renyi, erased configuration model and
Galton-Watson trees. Every generator takes an explicit seed.
"""
import logging

import networkx as nx
import numpy as np

from .. import config
from ..errors import DomainError, TreeTooLargeError
from ..model.dist import DegreeDist
from .graphs import Graph, TreeGraph

logger = logging.getLogger(__name__)

ODD_STUB_RETRIES = 100


def gen_er(n: int, lam: float, seed=None) -> Graph:
    """G(n, lambda/n): every unordered pair present independently with probability lambda/n."""
    if n < 1:
        raise DomainError(f"n must be >= 1 (got {n})")
    if lam < 0:
        raise DomainError(f"lambda must be >= 0 (got {lam})")
    if lam > n:
        raise DomainError(f"lambda must not exceed n (got lambda={lam}, n={n})")
    # fast_gnp_random_graph skips over absent edges geometrically
    g = nx.fast_gnp_random_graph(n, lam / n, seed=seed)
    return Graph.from_networkx(g)


def sample_degrees(n: int, degree: DegreeDist, rng: np.random.Generator) -> np.ndarray:
    """Draw n degrees with an even total; on an odd total one node is redrawn."""
    degrees = np.asarray(degree.sample(rng, n), dtype=np.int64)
    if n == 0 or degrees.sum() % 2 == 0:
        return degrees
    for _ in range(ODD_STUB_RETRIES):
        i = int(rng.integers(n))
        degrees[i] = int(degree.sample(rng, 1)[0])
        if degrees.sum() % 2 == 0:
            return degrees
    # e.g. a Regular law with odd degree on an odd node count
    i = int(np.argmax(degrees))
    degrees[i] -= 1
    logger.debug("odd stub total; lowered the degree of node %d", i)
    return degrees


def gen_config(n: int, degree: DegreeDist, seed=None) -> Graph:
    """Erased configuration model: stub matching, then self-loops and multi-edges dropped."""
    if n < 1:
        raise DomainError(f"n must be >= 1 (got {n})")
    if not np.isfinite(degree.mean()):
        raise DomainError("configuration model needs a finite-mean degree distribution")
    rng = np.random.default_rng(seed)
    degrees = sample_degrees(n, degree, rng)
    multigraph = nx.configuration_model(degrees.tolist(), seed=int(rng.integers(2**32)))
    g = nx.Graph(multigraph)
    g.remove_edges_from(nx.selfloop_edges(g))
    return Graph.from_networkx(g)


def gen_gw_tree(root_degree: DegreeDist, offspring: DegreeDist, depth: int, seed=None,
                max_nodes: int = None) -> TreeGraph:
    """
    Galton-Watson tree truncated at the given depth; the root's child count
    follows root_degree and every other node's follows offspring.
    """
    if depth < 0:
        raise DomainError(f"depth must be >= 0 (got {depth})")
    max_nodes = config.TREE_MAX_NODES if max_nodes is None else max_nodes
    rng = np.random.default_rng(seed)

    parents = [np.array([-1], dtype=np.int64)]
    generations = [np.zeros(1, dtype=np.int64)]
    level = np.zeros(1, dtype=np.int64)
    total = 1
    for gen in range(1, depth + 1):
        law = root_degree if gen == 1 else offspring
        counts = np.asarray(law.sample(rng, level.size), dtype=np.int64)
        born = int(counts.sum())
        if total + born > max_nodes:
            raise TreeTooLargeError(
                f"Galton-Watson tree exceeds {max_nodes} nodes at generation {gen}; "
                "use a smaller depth or subcritical offspring"
            )
        children_parent = np.repeat(level, counts)
        parents.append(children_parent)
        generations.append(np.full(born, gen, dtype=np.int64))
        level = np.arange(total, total + born, dtype=np.int64)
        total += born
        if born == 0:
            break

    return TreeGraph(np.concatenate(parents), np.concatenate(generations), depth)
