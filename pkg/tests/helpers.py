"""Shared test oracles: brute-force graph construction and random instances."""

import numpy as np

from secperc.graph import build_graph
from secperc.ppp import PointSet, Seed, Window, sample_ppp


def naive_build(blacks: PointSet, reds: PointSet):
    """All-pairs, all-reds reference build.

    Returns (guard array, set of directed (u, v) edges).  Quadratic on
    purpose: no spatial index, no shared code with the grid build.
    """
    bp, rp = blacks.points, reds.points
    n = len(bp)
    if len(rp):
        guard = np.sqrt(((bp[:, None, :] - rp[None, :, :]) ** 2).sum(axis=2)).min(axis=1)
    else:
        guard = np.full(n, np.inf)
    edges = set()
    for u in range(n):
        for v in range(n):
            if u != v and np.sqrt(((bp[u] - bp[v]) ** 2).sum()) <= guard[u]:
                edges.add((u, v))
    return guard, edges


def random_instance(master: int, i: int, dim: int = 2, side: float = 6.0,
                    black_intensity: float = 4.0, lam: float | None = None):
    """Seeded small black/red pair plus its grid-built graph."""
    rng = np.random.default_rng([master, i])
    window = Window.box(*([side] * dim))
    if lam is None:
        lam = float(rng.uniform(0.2, 6.0))
    blacks = sample_ppp(black_intensity, window, Seed(master, 2 * i), kind="black")
    reds = sample_ppp(lam, window, Seed(master, 2 * i + 1), kind="red")
    return blacks, reds, build_graph(blacks, reds)


def reach_matrix(n: int, src, dst) -> np.ndarray:
    """Dense reflexive-transitive closure, R[i, j] = path i -> j exists."""
    R = np.eye(n, dtype=bool)
    R[np.asarray(src, dtype=int), np.asarray(dst, dtype=int)] = True
    while True:
        R2 = R | (R @ R)
        if (R2 == R).all():
            return R
        R = R2
