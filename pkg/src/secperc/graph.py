"""Directed secrecy graph built from black/red point pairs.

Edge rule: x sends a directed edge to every black y with ||x - y|| <= guard(x),
where guard(x) is the distance from x to its nearest red point (open-ball
semantics: a red at exactly the edge length does not block the edge, so ties
at the guard radius are included).
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass

import numpy as np

from .ppp import PointSet, Window, ball_volume

_MAX_CELLS = 4_000_000


class GridIndex:
    """Uniform-grid spatial index over points in a window.

    Cells are addressed by floor((p - lo) / cell_size) per axis (clipped to
    the grid).  Nearest-neighbour queries expand Chebyshev shells of cells and
    are exact: a shell is only final once the best distance found is at most
    the inner radius of the unscanned region.
    """

    def __init__(self, points: np.ndarray, window: Window, cell_size: float):
        if not (cell_size > 0 and math.isfinite(cell_size)):
            raise ValueError(f"cell_size must be positive and finite, got {cell_size}")
        self.window = window
        self.cell_size = float(cell_size)
        self.points = np.asarray(points, dtype=np.float64).reshape(-1, window.dim)
        self.shape = np.maximum(1, np.ceil(window.lengths / cell_size).astype(np.int64))
        if int(np.prod(self.shape)) > _MAX_CELLS:
            raise ValueError(f"cell_size {cell_size} yields over {_MAX_CELLS} cells")
        self._cells: dict[tuple, np.ndarray] = {}
        if len(self.points):
            idx = self.cell_of(self.points)
            flat = np.ravel_multi_index(idx.T, self.shape)
            order = np.argsort(flat, kind="stable")
            sorted_flat = flat[order]
            cuts = np.flatnonzero(np.diff(sorted_flat)) + 1
            for ids, f in zip(np.split(order, cuts), sorted_flat[np.r_[0, cuts]]):
                self._cells[tuple(np.unravel_index(f, self.shape))] = ids

    def __len__(self) -> int:
        return len(self.points)

    def cell_of(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(points)
        idx = np.floor((pts - self.window.lo) / self.cell_size).astype(np.int64)
        return np.clip(idx, 0, self.shape - 1)

    def nearest_distance(self, x) -> float:
        """Exact distance from x to the nearest indexed point, inf when empty."""
        if not self._cells:
            return math.inf
        x = np.asarray(x, dtype=np.float64)
        c = self.cell_of(x)[0]
        h = self.cell_size
        best = math.inf
        span = int(self.shape.max())
        for k in itertools.count():
            if best <= (k - 1) * h or k > span:
                break
            for cell in self._shell(c, k):
                ids = self._cells.get(cell)
                if ids is not None:
                    d = np.sqrt(((self.points[ids] - x) ** 2).sum(axis=1)).min()
                    if d < best:
                        best = float(d)
        return best

    def _shell(self, center, k):
        ranges = []
        for i, c in enumerate(center):
            lo = max(0, int(c) - k)
            hi = min(int(self.shape[i]) - 1, int(c) + k)
            if lo > hi:
                return
            ranges.append(range(lo, hi + 1))
        for cell in itertools.product(*ranges):
            if max(abs(cell[i] - center[i]) for i in range(len(center))) == k:
                yield cell

    def query_ball(self, x, radius: float):
        """Ids and distances of all indexed points within radius (closed ball)."""
        x = np.asarray(x, dtype=np.float64)
        if not self._cells:
            return np.empty(0, dtype=np.int64), np.empty(0)
        if math.isinf(radius):
            ids = np.arange(len(self.points))
        else:
            lo_cell = np.floor((x - radius - self.window.lo) / self.cell_size).astype(np.int64)
            hi_cell = np.floor((x + radius - self.window.lo) / self.cell_size).astype(np.int64)
            lo_cell = np.clip(lo_cell, 0, self.shape - 1)
            hi_cell = np.clip(hi_cell, 0, self.shape - 1)
            chunks = []
            for cell in itertools.product(*(range(a, b + 1) for a, b in zip(lo_cell, hi_cell))):
                got = self._cells.get(cell)
                if got is not None:
                    chunks.append(got)
            if not chunks:
                return np.empty(0, dtype=np.int64), np.empty(0)
            ids = np.concatenate(chunks)
        d = np.sqrt(((self.points[ids] - x) ** 2).sum(axis=1))
        keep = d <= radius
        return ids[keep], d[keep]


def guard_radius(x, reds: GridIndex) -> float:
    """Distance from x to the nearest red point, +inf when there are none."""
    return reds.nearest_distance(x)


@dataclass(frozen=True)
class SecrecyGraph:
    """Directed secrecy graph in CSR form with per-vertex guard radii."""

    blacks: PointSet
    reds: PointSet
    guard: np.ndarray          # (n,), distance to nearest red, +inf if none
    indptr: np.ndarray         # (n+1,)
    indices: np.ndarray        # out-neighbour ids, ascending distance per vertex
    dists: np.ndarray          # matching edge lengths

    @property
    def n(self) -> int:
        return len(self.blacks)

    @property
    def dim(self) -> int:
        return self.blacks.dim

    @property
    def window(self) -> Window:
        return self.blacks.window

    @property
    def num_edges(self) -> int:
        return len(self.indices)

    def out_neighbors(self, v: int):
        s, e = self.indptr[v], self.indptr[v + 1]
        return self.indices[s:e], self.dists[s:e]

    def out_adj(self, v: int) -> list[tuple[int, float]]:
        ids, d = self.out_neighbors(v)
        return list(zip(ids.tolist(), d.tolist()))

    def edges(self):
        """(src, dst, dist) arrays of all directed edges."""
        src = np.repeat(np.arange(self.n), np.diff(self.indptr))
        return src, self.indices, self.dists

    def to_csv(self) -> str:
        src, dst, dist = self.edges()
        rows = [f"{s},{t},{float(d)!r}" for s, t, d in zip(src, dst, dist)]
        return "\n".join(["src,dst,dist"] + rows) + "\n"

    def to_json(self) -> dict:
        return {
            "window": self.window.to_json(),
            "vertices": [
                {"id": i, "coords": self.blacks.points[i].tolist(),
                 "guard": None if math.isinf(self.guard[i]) else float(self.guard[i])}
                for i in range(self.n)
            ],
            "adjacency": [self.out_adj(v) for v in range(self.n)],
        }

    def to_json_str(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


def default_cell_size(intensity: float, window: Window) -> float:
    """Expected nearest-point spacing (intensity * alpha_d)^(-1/d), clamped."""
    d = window.dim
    max_len = float(window.lengths.max())
    if intensity <= 0:
        return max_len
    size = (intensity * ball_volume(d)) ** (-1.0 / d)
    # keep the cell count bounded regardless of intensity
    floor_size = (window.volume / _MAX_CELLS) ** (1.0 / d)
    return float(min(max(size, floor_size), max_len))


def build_graph(blacks: PointSet, reds: PointSet, cell_size: float | None = None) -> SecrecyGraph:
    """Build the directed secrecy graph of a black/red pair sharing one window."""
    if blacks.dim != reds.dim:
        raise ValueError(f"dimension mismatch: {blacks.dim} vs {reds.dim}")
    if blacks.window != reds.window:
        raise ValueError("blacks and reds must share one window")
    window = blacks.window
    n = len(blacks)

    red_intensity = reds.intensity if reds.intensity > 0 else len(reds) / window.volume
    red_grid = GridIndex(reds.points, window,
                         cell_size or default_cell_size(red_intensity, window))
    black_intensity = blacks.intensity if blacks.intensity > 0 else n / window.volume
    black_grid = GridIndex(blacks.points, window,
                           cell_size or default_cell_size(black_intensity, window))

    guard = np.empty(n)
    indptr = np.zeros(n + 1, dtype=np.int64)
    nbr_chunks, dist_chunks = [], []
    for v in range(n):
        x = blacks.points[v]
        g = red_grid.nearest_distance(x)
        guard[v] = g
        ids, d = black_grid.query_ball(x, g)
        keep = ids != v
        ids, d = ids[keep], d[keep]
        order = np.lexsort((ids, d))  # distance, then id, for determinism
        nbr_chunks.append(ids[order])
        dist_chunks.append(d[order])
        indptr[v + 1] = indptr[v] + len(ids)
    indices = np.concatenate(nbr_chunks) if n else np.empty(0, dtype=np.int64)
    dists = np.concatenate(dist_chunks) if n else np.empty(0)
    return SecrecyGraph(blacks=blacks, reds=reds, guard=guard,
                        indptr=indptr, indices=indices, dists=dists)


@dataclass(frozen=True)
class GraphView:
    """Edge list of a graph variant: the digraph itself, or its U/B views."""

    variant: str               # "directed", "U", or "B"
    n: int
    src: np.ndarray
    dst: np.ndarray
    directed: bool

    @property
    def num_edges(self) -> int:
        return len(self.src)

    def edge_set(self) -> set[tuple[int, int]]:
        return set(zip(self.src.tolist(), self.dst.tolist()))


def view_from_arrows(variant: str, n: int, src: np.ndarray, dst: np.ndarray) -> GraphView:
    """Reduce a raw arrow list: directed passthrough, U = union of
    directions, B = both directions present."""
    src = np.asarray(src, dtype=np.int64)
    dst = np.asarray(dst, dtype=np.int64)
    if variant == "directed":
        return GraphView("directed", n, src, dst, directed=True)
    lo, hi = np.minimum(src, dst), np.maximum(src, dst)
    key = lo * n + hi
    if variant == "U":
        uniq = np.unique(key)
    elif variant == "B":
        uniq, counts = np.unique(key, return_counts=True)
        uniq = uniq[counts == 2]  # unordered pair seen from both endpoints
    else:
        raise ValueError(f"unknown variant {variant!r}")
    return GraphView(variant, n, (uniq // n).astype(np.int64),
                     (uniq % n).astype(np.int64), directed=False)


def variant_view(g: SecrecyGraph, variant: str) -> GraphView:
    """Directed graph unchanged, U = union of directions, B = both directions."""
    src, dst, _ = g.edges()
    return view_from_arrows(variant, g.n, src, dst)
