"""Undirected communication graphs and their Laplacians."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterable

import numpy as np


class GraphError(ValueError):
    pass


@dataclass(frozen=True, init=False)
class CommGraph:
    """Unweighted undirected graph on nodes ``0..n-1``.

    Edges are stored as sorted pairs; self-loops and duplicates are rejected.
    """

    n: int
    edges: frozenset

    def __init__(self, n: int, edges: Iterable = ()):
        if n < 1:
            raise GraphError("graph needs at least one node")
        seen = set()
        for e in edges:
            i, j = (int(v) for v in e)
            if i == j:
                raise GraphError(f"self-loop at node {i}")
            if not (0 <= i < n and 0 <= j < n):
                raise GraphError(f"edge ({i}, {j}) references a node outside 0..{n - 1}")
            key = (min(i, j), max(i, j))
            if key in seen:
                raise GraphError(f"duplicate edge {key}")
            seen.add(key)
        object.__setattr__(self, "n", int(n))
        object.__setattr__(self, "edges", frozenset(seen))

    def adjacency(self) -> np.ndarray:
        A = np.zeros((self.n, self.n))
        for i, j in self.edges:
            A[i, j] = A[j, i] = 1.0
        return A

    def sorted_edges(self) -> list[tuple[int, int]]:
        return sorted(self.edges)

    def subgraph(self, nodes) -> "CommGraph":
        """Induced subgraph, relabelled to ``0..len(nodes)-1`` in the given order."""
        nodes = list(nodes)
        index = {v: k for k, v in enumerate(nodes)}
        sub = [(index[i], index[j]) for i, j in self.edges if i in index and j in index]
        return CommGraph(len(nodes), sub)


@dataclass(frozen=True, eq=False)
class Laplacian:
    L: np.ndarray
    eigenvalues: np.ndarray

    @property
    def lambda2(self) -> float:
        if self.eigenvalues.size < 2:
            return 0.0
        return float(max(self.eigenvalues[1], 0.0))


def laplacian(g: CommGraph) -> Laplacian:
    A = g.adjacency()
    L = np.diag(A.sum(axis=1)) - A
    eig = np.linalg.eigvalsh(L)
    L.setflags(write=False)
    eig.setflags(write=False)
    return Laplacian(L=L, eigenvalues=eig)


def neighbors(g: CommGraph, i: int) -> frozenset:
    if not 0 <= i < g.n:
        raise IndexError(f"node {i} out of range for {g.n} nodes")
    return frozenset(j if k == i else k for k, j in g.edges if i in (k, j))


def is_connected(g: CommGraph) -> bool:
    adj = {v: [] for v in range(g.n)}
    for i, j in g.edges:
        adj[i].append(j)
        adj[j].append(i)
    seen = {0}
    queue = deque([0])
    while queue:
        v = queue.popleft()
        for u in adj[v]:
            if u not in seen:
                seen.add(u)
                queue.append(u)
    return len(seen) == g.n


def ring(n: int) -> CommGraph:
    if n < 3:
        return path(n)
    return CommGraph(n, [(i, (i + 1) % n) for i in range(n)])


def path(n: int) -> CommGraph:
    return CommGraph(n, [(i, i + 1) for i in range(n - 1)])


def complete(n: int) -> CommGraph:
    return CommGraph(n, [(i, j) for i in range(n) for j in range(i + 1, n)])


def star(n: int) -> CommGraph:
    return CommGraph(n, [(0, j) for j in range(1, n)])


GENERATORS = {"ring": ring, "path": path, "complete": complete, "star": star}


def random_graph(n: int, p: float, rng: np.random.Generator) -> CommGraph:
    """Erdos-Renyi graph G(n, p)."""
    edges = [(i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < p]
    return CommGraph(n, edges)


def random_connected_graph(n: int, rng: np.random.Generator, p: float = 0.3) -> CommGraph:
    """A random spanning tree plus independent extra edges with probability ``p``."""
    order = rng.permutation(n)
    edges = set()
    for k in range(1, n):
        parent = order[rng.integers(0, k)]
        child = order[k]
        edges.add((min(parent, child), max(parent, child)))
    for i in range(n):
        for j in range(i + 1, n):
            if (i, j) not in edges and rng.random() < p:
                edges.add((i, j))
    return CommGraph(n, edges)
