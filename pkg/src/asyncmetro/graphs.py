"""Simple undirected graphs with sorted adjacency, plus generators and edge-list IO."""

from __future__ import annotations

from pathlib import Path
from typing import Iterable, Iterator

import numpy as np


class Graph:
    """Undirected simple graph on nodes 0..n-1.

    Neighbor lists are kept sorted ascending; duplicate edges collapse,
    self-loops are rejected.
    """

    __slots__ = ("n", "adj", "max_degree")

    def __init__(self, n: int, edges: Iterable[tuple[int, int]] = ()):
        if n < 0:
            raise ValueError(f"node count must be >= 0, got {n}")
        nbrs: list[set[int]] = [set() for _ in range(n)]
        for u, v in edges:
            u, v = int(u), int(v)
            if not (0 <= u < n and 0 <= v < n):
                raise ValueError(f"edge ({u},{v}) out of range for n={n}")
            if u == v:
                raise ValueError(f"self-loop at node {u}")
            nbrs[u].add(v)
            nbrs[v].add(u)
        self.n = n
        self.adj: tuple[tuple[int, ...], ...] = tuple(tuple(sorted(s)) for s in nbrs)
        self.max_degree = max((len(a) for a in self.adj), default=0)

    def degree(self, v: int) -> int:
        return len(self.adj[v])

    def edges(self) -> Iterator[tuple[int, int]]:
        """Yield each undirected edge once, as (u, v) with u < v."""
        for u in range(self.n):
            for v in self.adj[u]:
                if u < v:
                    yield (u, v)

    @property
    def num_edges(self) -> int:
        return sum(len(a) for a in self.adj) // 2

    def __repr__(self) -> str:
        return f"Graph(n={self.n}, m={self.num_edges}, max_degree={self.max_degree})"


def empty_graph(n: int) -> Graph:
    return Graph(n)


def path_graph(n: int) -> Graph:
    return Graph(n, [(i, i + 1) for i in range(n - 1)])


def cycle_graph(n: int) -> Graph:
    if n < 3:
        raise ValueError(f"cycle needs >= 3 nodes, got {n}")
    return Graph(n, [(i, (i + 1) % n) for i in range(n)])


def grid_graph(rows: int, cols: int) -> Graph:
    """rows x cols lattice, node (r, c) numbered r*cols + c."""
    if rows < 1 or cols < 1:
        raise ValueError("grid needs rows, cols >= 1")
    edges = []
    for r in range(rows):
        for c in range(cols):
            v = r * cols + c
            if c + 1 < cols:
                edges.append((v, v + 1))
            if r + 1 < rows:
                edges.append((v, v + cols))
    return Graph(rows * cols, edges)


def complete_graph(n: int) -> Graph:
    return Graph(n, [(u, v) for u in range(n) for v in range(u + 1, n)])


def star_graph(leaves: int) -> Graph:
    """Node 0 is the hub."""
    return Graph(leaves + 1, [(0, i) for i in range(1, leaves + 1)])


def random_regular_graph(n: int, degree: int, seed: int, max_tries: int = 5000) -> Graph:
    """Uniform random simple d-regular graph via the pairing model with rejection."""
    if degree < 0 or degree >= n:
        raise ValueError(f"degree must satisfy 0 <= d < n, got d={degree}, n={n}")
    if (n * degree) % 2:
        raise ValueError(f"n*degree must be even, got n={n}, degree={degree}")
    if degree == 0:
        return Graph(n)
    rng = np.random.default_rng(seed)
    stubs = np.repeat(np.arange(n), degree)
    for _ in range(max_tries):
        perm = rng.permutation(stubs)
        a, b = perm[0::2], perm[1::2]
        if np.any(a == b):
            continue
        lo = np.minimum(a, b)
        hi = np.maximum(a, b)
        keys = lo.astype(np.int64) * n + hi
        if len(np.unique(keys)) != len(keys):
            continue
        return Graph(n, zip(lo.tolist(), hi.tolist()))
    raise RuntimeError(f"no simple {degree}-regular pairing found in {max_tries} tries")


def read_edge_list(path: str | Path, n: int | None = None) -> Graph:
    """Parse an edge-list file: one 0-indexed "u v" pair per line.

    Blank lines and lines starting with '#' are skipped. When n is omitted it
    is inferred as max node id + 1.
    """
    edges = []
    top = -1
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ValueError(f"{path}:{lineno}: expected 'u v', got {line!r}")
            u, v = int(parts[0]), int(parts[1])
            edges.append((u, v))
            top = max(top, u, v)
    if n is None:
        n = top + 1
    return Graph(n, edges)


def write_edge_list(graph: Graph, path: str | Path) -> None:
    with open(path, "w") as fh:
        for u, v in graph.edges():
            fh.write(f"{u} {v}\n")
