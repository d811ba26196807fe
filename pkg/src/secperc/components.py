"""Component analytics over secrecy-graph views.

Five per-vertex structures mirror the percolation event taxonomy: undirected
components (U), strongly connected components (S), out/in reach sets (O, I),
and bidirectional-edge components (B).
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .graph import GraphView, SecrecyGraph, variant_view

MODES = ("U", "O", "I", "S", "B")


@dataclass(frozen=True)
class ComponentLabeling:
    mode: str
    labels: np.ndarray  # component id per vertex

    @property
    def n_components(self) -> int:
        return int(self.labels.max()) + 1 if len(self.labels) else 0

    def to_csv(self) -> str:
        rows = [f"{v},{l}" for v, l in enumerate(self.labels)]
        return "\n".join(["vertex,label"] + rows) + "\n"


@dataclass(frozen=True)
class EscapeStats:
    mode: str
    lam: float
    margin: float
    fraction: float
    n_core: int

    def to_json_str(self) -> str:
        return json.dumps({"mode": self.mode, "lambda": self.lam, "margin": self.margin,
                           "fraction": self.fraction, "n_core": self.n_core}, sort_keys=True)


class _DSU:
    def __init__(self, n: int):
        self.parent = list(range(n))
        self.size = [1] * n

    def find(self, x: int) -> int:
        p = self.parent
        while p[x] != x:
            p[x] = p[p[x]]  # path halving
            x = p[x]
        return x

    def union(self, a: int, b: int):
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]


def _canonical(labels: np.ndarray) -> np.ndarray:
    """Relabel component ids in order of first appearance by vertex id."""
    out = np.empty_like(labels)
    seen: dict[int, int] = {}
    for v, l in enumerate(labels):
        out[v] = seen.setdefault(int(l), len(seen))
    return out


def undirected_components(view: GraphView) -> ComponentLabeling:
    """Union-find components of an undirected view (U or B variant)."""
    if view.directed:
        raise ValueError("undirected_components needs a U or B view")
    dsu = _DSU(view.n)
    for a, b in zip(view.src.tolist(), view.dst.tolist()):
        dsu.union(a, b)
    roots = np.array([dsu.find(v) for v in range(view.n)], dtype=np.int64)
    return ComponentLabeling(view.variant, _canonical(roots))


def _csr_of(graph) -> tuple[int, np.ndarray, np.ndarray]:
    if isinstance(graph, SecrecyGraph):
        return graph.n, graph.indptr, graph.indices
    if isinstance(graph, GraphView) and graph.directed:
        order = np.lexsort((graph.dst, graph.src))
        indptr = np.zeros(graph.n + 1, dtype=np.int64)
        np.add.at(indptr, graph.src + 1, 1)
        return graph.n, np.cumsum(indptr), graph.dst[order]
    raise ValueError("need a directed graph")


def _reversed_csr(n, indptr, indices):
    src = np.repeat(np.arange(n), np.diff(indptr))
    order = np.argsort(indices, kind="stable")
    rptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(rptr, indices + 1, 1)
    return np.cumsum(rptr), src[order]


def strongly_connected_components(graph) -> ComponentLabeling:
    """Tarjan SCC labeling of a directed graph, iterative single pass."""
    n, indptr, indices = _csr_of(graph)
    index = np.full(n, -1, dtype=np.int64)
    low = np.zeros(n, dtype=np.int64)
    onstack = np.zeros(n, dtype=bool)
    labels = np.full(n, -1, dtype=np.int64)
    comp_stack: list[int] = []
    counter = 0
    n_comp = 0
    for root in range(n):
        if index[root] != -1:
            continue
        work = [(root, indptr[root])]
        index[root] = low[root] = counter
        counter += 1
        comp_stack.append(root)
        onstack[root] = True
        while work:
            v, i = work[-1]
            if i < indptr[v + 1]:
                work[-1] = (v, i + 1)
                w = indices[i]
                if index[w] == -1:
                    index[w] = low[w] = counter
                    counter += 1
                    comp_stack.append(w)
                    onstack[w] = True
                    work.append((w, indptr[w]))
                elif onstack[w]:
                    low[v] = min(low[v], index[w])
            else:
                work.pop()
                if low[v] == index[v]:
                    while True:
                        w = comp_stack.pop()
                        onstack[w] = False
                        labels[w] = n_comp
                        if w == v:
                            break
                    n_comp += 1
                if work:
                    parent = work[-1][0]
                    low[parent] = min(low[parent], low[v])
    return ComponentLabeling("SCC", _canonical(labels))


def bfs_mask(indptr: np.ndarray, indices: np.ndarray, sources: np.ndarray) -> np.ndarray:
    """Vertices reachable from the source set, sources included (bool mask)."""
    n = len(indptr) - 1
    visited = np.zeros(n, dtype=bool)
    frontier = np.unique(np.asarray(sources, dtype=np.int64))
    if frontier.size and (frontier.min() < 0 or frontier.max() >= n):
        raise ValueError("vertex id out of range")
    visited[frontier] = True
    while frontier.size:
        starts, ends = indptr[frontier], indptr[frontier + 1]
        counts = ends - starts
        if counts.sum() == 0:
            break
        # gather all out-neighbour slices in one shot
        offs = np.repeat(starts - np.r_[0, counts[:-1]].cumsum(), counts)
        nbrs = indices[np.arange(counts.sum()) + offs]
        nbrs = np.unique(nbrs[~visited[nbrs]])
        visited[nbrs] = True
        frontier = nbrs
    return visited


def reach(graph, v: int, direction: str = "out") -> np.ndarray:
    """Sorted ids of the out- or in-reach closure of v (v included)."""
    n, indptr, indices = _csr_of(graph)
    if not 0 <= v < n:
        raise ValueError(f"unknown vertex id {v}")
    if direction == "in":
        indptr, indices = _reversed_csr(n, indptr, indices)
    elif direction != "out":
        raise ValueError(f"direction must be 'out' or 'in', got {direction!r}")
    return np.flatnonzero(bfs_mask(indptr, indices, np.array([v])))


def _default_margin(g: SecrecyGraph) -> float:
    return 0.1 * float(g.window.lengths.min())


def escape_stats(g: SecrecyGraph, mode: str, margin: float | None = None) -> EscapeStats:
    """Fraction of core vertices whose mode-structure touches the boundary band.

    Core vertices sit at least margin from every window face; a vertex escapes
    when its component (U, S, B), out-reach (O), or in-reach (I) contains some
    vertex within margin of the boundary.  Returns fraction 0 on an empty core.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    if margin is None:
        margin = _default_margin(g)
    if not 0 < margin < float(g.window.lengths.min()) / 2:
        raise ValueError(f"margin {margin} must be in (0, half the shortest side)")
    bd = g.window.boundary_distance(g.blacks.points)
    core = bd >= margin
    targets = bd <= margin
    n_core = int(core.sum())
    lam = g.reds.intensity
    if n_core == 0:
        return EscapeStats(mode, lam, margin, 0.0, 0)
    if mode in ("U", "B"):
        labels = undirected_components(variant_view(g, mode)).labels
        target_labels = np.unique(labels[targets])
        escaped = np.isin(labels[core], target_labels)
    elif mode == "S":
        labels = strongly_connected_components(g).labels
        target_labels = np.unique(labels[targets])
        escaped = np.isin(labels[core], target_labels)
    elif mode == "O":
        rptr, rind = _reversed_csr(g.n, g.indptr, g.indices)
        escaped = bfs_mask(rptr, rind, np.flatnonzero(targets))[core]
    else:  # "I": some target reaches v
        escaped = bfs_mask(g.indptr, g.indices, np.flatnonzero(targets))[core]
    return EscapeStats(mode, lam, margin, float(escaped.mean()), n_core)


def escape_fraction(g: SecrecyGraph, mode: str, margin: float | None = None) -> float:
    return escape_stats(g, mode, margin).fraction
