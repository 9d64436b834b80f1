"""
Simple undirected graphs and rooted trees, plus the plain edge-list format.

Edge-list format: first line "n m", then m lines "u v" (zero-indexed).
"""
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Union

import networkx as nx
import numpy as np
from scipy import sparse

from ..errors import DomainError


def _canonical_edges(n: int, edges) -> np.ndarray:
    arr = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    if arr.size and (arr.min() < 0 or arr.max() >= n):
        raise DomainError(f"edge endpoints must lie in [0, {n})")
    arr = arr[arr[:, 0] != arr[:, 1]]
    arr = np.sort(arr, axis=1)
    if arr.size:
        arr = np.unique(arr, axis=0)
    return arr


@dataclass(frozen=True, eq=False)
class Graph:
    """Undirected simple graph on nodes 0..n-1; edges stored once with u < v."""

    n: int
    edges: np.ndarray

    def __post_init__(self):
        if self.n < 0:
            raise DomainError(f"node count must be >= 0 (got {self.n})")
        object.__setattr__(self, "edges", _canonical_edges(self.n, self.edges))

    @classmethod
    def from_networkx(cls, g: nx.Graph) -> "Graph":
        """Relabel nodes to 0..n-1 in iteration order; self-loops and multi-edges are dropped."""
        mapping = {node: i for i, node in enumerate(g.nodes())}
        edges = [(mapping[u], mapping[v]) for u, v in g.edges()]
        return cls(len(mapping), np.asarray(edges, dtype=np.int64).reshape(-1, 2))

    def to_networkx(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(range(self.n))
        g.add_edges_from(map(tuple, self.edges.tolist()))
        return g

    @property
    def m(self) -> int:
        return int(self.edges.shape[0])

    @cached_property
    def adjacency(self) -> sparse.csr_matrix:
        u, v = self.edges[:, 0], self.edges[:, 1]
        rows = np.concatenate([u, v])
        cols = np.concatenate([v, u])
        data = np.ones(rows.size, dtype=np.int8)
        return sparse.csr_matrix((data, (rows, cols)), shape=(self.n, self.n))

    def neighbors(self, i: int) -> np.ndarray:
        adj = self.adjacency
        return adj.indices[adj.indptr[i]:adj.indptr[i + 1]]

    def degrees(self) -> np.ndarray:
        return np.diff(self.adjacency.indptr)

    def directed_edges(self) -> np.ndarray:
        """Both orientations of every edge: u->v rows first, then v->u."""
        return np.concatenate([self.edges, self.edges[:, ::-1]], axis=0)

    def __eq__(self, other) -> bool:
        return isinstance(other, Graph) and self.n == other.n and np.array_equal(self.edges, other.edges)


@dataclass(frozen=True, eq=False)
class TreeGraph:
    """
    Rooted tree stored in breadth-first order: node 0 is the root, parent[i] < i,
    and the children of i are child_ptr[i]..child_ptr[i+1]-1.
    """

    parent: np.ndarray
    generation: np.ndarray
    depth: int
    child_ptr: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        parent = np.asarray(self.parent, dtype=np.int64)
        generation = np.asarray(self.generation, dtype=np.int64)
        if parent.size == 0 or parent[0] != -1:
            raise DomainError("tree must contain a root with parent -1 at index 0")
        if np.any(parent[1:] < 0) or np.any(parent[1:] >= np.arange(1, parent.size)):
            raise DomainError("tree nodes must be in breadth-first order (parent index below child index)")
        if np.any(np.diff(parent[1:]) < 0):
            raise DomainError("children must be grouped by parent in breadth-first order")
        counts = np.bincount(parent[1:], minlength=parent.size)
        child_ptr = np.concatenate([[1], 1 + np.cumsum(counts)])
        object.__setattr__(self, "parent", parent)
        object.__setattr__(self, "generation", generation)
        object.__setattr__(self, "child_ptr", child_ptr)

    @property
    def n(self) -> int:
        return int(self.parent.size)

    @property
    def root(self) -> int:
        return 0

    def children(self, i: int) -> np.ndarray:
        return np.arange(self.child_ptr[i], self.child_ptr[i + 1])

    def child_counts(self) -> np.ndarray:
        return np.diff(self.child_ptr)

    def as_graph(self) -> Graph:
        idx = np.arange(1, self.n)
        return Graph(self.n, np.column_stack([self.parent[1:], idx]))


PathLike = Union[str, Path]


def write_edge_list(graph: Graph, path: PathLike) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(f"{graph.n} {graph.m}\n")
        for u, v in graph.edges.tolist():
            f.write(f"{u} {v}\n")


def read_edge_list(path: PathLike) -> Graph:
    lines = [line.split() for line in Path(path).read_text(encoding="utf-8").splitlines() if line.strip()]
    if not lines or len(lines[0]) != 2:
        raise DomainError(f"{path}: first line must be 'n m'")
    try:
        n, m = int(lines[0][0]), int(lines[0][1])
        edges = [(int(a), int(b)) for a, b in lines[1:]]
    except ValueError as exc:
        raise DomainError(f"{path}: malformed edge list ({exc})") from exc
    if len(edges) != m:
        raise DomainError(f"{path}: header announces {m} edges but {len(edges)} follow")
    return Graph(n, np.asarray(edges, dtype=np.int64).reshape(-1, 2))
