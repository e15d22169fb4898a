"""Undirected graph storage, adjacency normalization, and edge-noise editing.

Graphs are stored once per undirected edge with a CSR neighbor layout that
contains both directions.  All operators add self-loops, i.e. they act on
A + I.  Instances are treated as immutable after construction and are safe
to share across worker processes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Literal, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import InputError

AdjacencyMode = Literal["symmetric", "row_stochastic"]


@dataclass
class Graph:
    """Undirected graph: deduplicated edge list plus CSR neighbor layout."""

    num_nodes: int
    edges: np.ndarray  # (m, 2) int64, u < v, lexicographically sorted
    csr_offsets: np.ndarray  # (num_nodes + 1,) int64
    csr_targets: np.ndarray  # (2m,) int64, sorted within each row

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    def degree(self, i: int) -> int:
        """Number of neighbors of ``i``, self-loop not counted."""
        return int(self.csr_offsets[i + 1] - self.csr_offsets[i])

    def degrees(self) -> np.ndarray:
        return np.diff(self.csr_offsets)


@dataclass
class EdgePartition:
    """Edges split by whether their endpoints share a label."""

    good_edges: np.ndarray  # (g, 2) int64
    bad_edges: np.ndarray  # (b, 2) int64


@dataclass
class NormalizedAdjacency:
    """Sparse normalized adjacency of A + I in CSR form.

    ``symmetric`` holds D^(-1/2) (A+I) D^(-1/2); ``row_stochastic`` holds
    D^(-1) (A+I), whose rows each sum to one.
    """

    num_nodes: int
    indptr: np.ndarray
    indices: np.ndarray
    values: np.ndarray
    mode: AdjacencyMode
    self_loops: bool = True
    _matrix: sp.csr_matrix | None = field(default=None, repr=False, compare=False)

    @property
    def matrix(self) -> sp.csr_matrix:
        if self._matrix is None:
            self._matrix = sp.csr_matrix(
                (self.values, self.indices, self.indptr),
                shape=(self.num_nodes, self.num_nodes),
            )
        return self._matrix

    def entries(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(rows, cols, values) triplets, row-major order."""
        rows = np.repeat(np.arange(self.num_nodes), np.diff(self.indptr))
        return rows, self.indices.copy(), self.values.copy()


def _canonical_edges(num_nodes: int, edges: Iterable[Sequence[int]]) -> np.ndarray:
    arr = np.asarray(list(edges), dtype=np.int64)
    if arr.size == 0:
        return np.empty((0, 2), dtype=np.int64)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise InputError("edges must be (u, v) pairs")
    if arr.min() < 0 or arr.max() >= num_nodes:
        raise InputError(
            f"edge endpoint out of range [0, {num_nodes}): "
            f"found ids in [{arr.min()}, {arr.max()}]"
        )
    if np.any(arr[:, 0] == arr[:, 1]):
        bad = arr[arr[:, 0] == arr[:, 1]][0, 0]
        raise InputError(f"self-edge on node {bad} is not allowed")
    lo = np.minimum(arr[:, 0], arr[:, 1])
    hi = np.maximum(arr[:, 0], arr[:, 1])
    return np.unique(np.stack([lo, hi], axis=1), axis=0)


def _build_csr(num_nodes: int, edges: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    ends = np.concatenate([edges[:, 0], edges[:, 1]])
    starts = np.concatenate([edges[:, 1], edges[:, 0]])
    offsets = np.zeros(num_nodes + 1, dtype=np.int64)
    np.add.at(offsets, ends + 1, 1)
    np.cumsum(offsets, out=offsets)
    order = np.lexsort((starts, ends))  # row-major, targets sorted per row
    return offsets, starts[order].astype(np.int64)


def build_graph(num_nodes: int, edges: Iterable[Sequence[int]]) -> Graph:
    """Build a deduplicated undirected graph with CSR neighbor layout.

    Raises InputError for out-of-range node ids or self-edges.
    """
    if num_nodes < 0:
        raise InputError("num_nodes must be non-negative")
    canon = _canonical_edges(num_nodes, edges)
    offsets, targets = _build_csr(num_nodes, canon)
    return Graph(num_nodes=num_nodes, edges=canon, csr_offsets=offsets, csr_targets=targets)


def neighbors(g: Graph, i: int, include_self: bool = False) -> np.ndarray:
    """Sorted neighbor ids of ``i``; includes ``i`` itself when requested."""
    if not 0 <= i < g.num_nodes:
        raise InputError(f"node id {i} out of range [0, {g.num_nodes})")
    nbrs = g.csr_targets[g.csr_offsets[i] : g.csr_offsets[i + 1]]
    if not include_self:
        return nbrs.copy()
    pos = int(np.searchsorted(nbrs, i))
    return np.insert(nbrs, pos, i)


def with_self_loops(g: Graph) -> tuple[np.ndarray, np.ndarray]:
    """CSR layout of A + I: (offsets, targets), targets sorted per row."""
    n = g.num_nodes
    offsets = g.csr_offsets + np.arange(n + 1, dtype=np.int64)
    ids = np.arange(n, dtype=np.int64)
    rows = np.concatenate([np.repeat(ids, g.degrees()), ids])
    targets = np.concatenate([g.csr_targets, ids])
    order = np.lexsort((targets, rows))
    return offsets, targets[order]


def normalize(g: Graph, mode: AdjacencyMode) -> NormalizedAdjacency:
    """Normalized adjacency of A + I in the requested mode."""
    if mode not in ("symmetric", "row_stochastic"):
        raise InputError(f"unknown adjacency mode {mode!r}")
    indptr, indices = with_self_loops(g)
    deg = np.diff(indptr).astype(np.float64)  # degree in A + I
    rows = np.repeat(np.arange(g.num_nodes), np.diff(indptr))
    if mode == "symmetric":
        inv_sqrt = 1.0 / np.sqrt(deg)
        values = inv_sqrt[rows] * inv_sqrt[indices]
    else:
        values = 1.0 / deg[rows]
    return NormalizedAdjacency(
        num_nodes=g.num_nodes,
        indptr=indptr,
        indices=indices,
        values=values,
        mode=mode,
    )


def spmm(adj: NormalizedAdjacency, h: np.ndarray) -> np.ndarray:
    """Sparse-dense product adj @ h with row-major CSR accumulation."""
    h = np.asarray(h, dtype=np.float64)
    if h.ndim == 1:
        h = h[:, None]
    if h.shape[0] != adj.num_nodes:
        raise InputError(
            f"dimension mismatch: adjacency is {adj.num_nodes}x{adj.num_nodes}, "
            f"dense operand has {h.shape[0]} rows"
        )
    return adj.matrix @ h


def classify_edges(g: Graph, labels: np.ndarray) -> EdgePartition:
    """Split edges into good (same endpoint label) and bad (different)."""
    labels = np.asarray(labels)
    if len(labels) != g.num_nodes:
        raise InputError(
            f"labels cover {len(labels)} nodes, graph has {g.num_nodes}"
        )
    if g.num_edges == 0:
        empty = np.empty((0, 2), dtype=np.int64)
        return EdgePartition(good_edges=empty, bad_edges=empty.copy())
    same = labels[g.edges[:, 0]] == labels[g.edges[:, 1]]
    return EdgePartition(good_edges=g.edges[same], bad_edges=g.edges[~same])


def noise_rate(g: Graph, labels: np.ndarray) -> float:
    """Fraction of edges whose endpoints carry different labels."""
    if g.num_edges == 0:
        raise InputError("noise rate is undefined on an edgeless graph")
    part = classify_edges(g, labels)
    return len(part.bad_edges) / g.num_edges


def reduce_noise(
    g: Graph,
    labels: np.ndarray,
    target_rate: float,
    seed: int | np.random.Generator = 0,
) -> Graph:
    """Remove uniformly-random bad edges until the noise rate is <= target.

    Good edges are never touched; removal stops at the first point where the
    rate satisfies the target (removing one fewer edge would exceed it).
    Deterministic given the seed.
    """
    if not 0.0 <= target_rate <= 1.0:
        raise InputError(f"target_rate {target_rate} outside [0, 1]")
    current = noise_rate(g, labels)
    if target_rate > current:
        raise InputError(
            f"target_rate {target_rate:.4f} exceeds current noise rate {current:.4f}"
        )
    part = classify_edges(g, labels)
    n_good = len(part.good_edges)
    n_bad = len(part.bad_edges)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    order = rng.permutation(n_bad)
    # Keeping k bad edges gives rate k / (n_good + k); find the largest
    # feasible k, which greedy one-at-a-time removal reaches.
    keep = n_bad
    while keep > 0 and keep / (n_good + keep) > target_rate:
        keep -= 1
    kept_bad = part.bad_edges[np.sort(order[:keep])]
    remaining = np.concatenate([part.good_edges, kept_bad], axis=0)
    return build_graph(g.num_nodes, remaining)


def read_edge_list(path: str | Path) -> list[tuple[int, int]]:
    """Parse the text edge format: one "u v" pair per line, '#' comments."""
    pairs: list[tuple[int, int]] = []
    with open(path) as f:
        for lineno, line in enumerate(f, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 2:
                raise InputError(f"{path}:{lineno}: expected 'u v', got {line!r}")
            try:
                pairs.append((int(parts[0]), int(parts[1])))
            except ValueError as exc:
                raise InputError(f"{path}:{lineno}: non-integer node id") from exc
    return pairs


def write_edge_list(path: str | Path, g: Graph) -> None:
    """Write the edge list in the text edge format (one pair per line)."""
    with open(path, "w") as f:
        f.write(f"# {g.num_nodes} nodes, {g.num_edges} edges\n")
        for u, v in g.edges:
            f.write(f"{u} {v}\n")
