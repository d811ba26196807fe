"""High-confidence trial machinery for percolation thresholds.

Lower-bound trials certify linking between the central discs of two
adjacent squares using only censored edges, the ones short enough to
survive any configuration outside the window.  Upper-bound trials
certify that no path entering from outside the window can cross its
central segment, using a conservative exposure region built along the
boundary.  Success counts feed a one-sided binomial tail against the
1-independent threshold, yielding the confidence level of each claimed
threshold inequality.
"""

from __future__ import annotations

import dataclasses
import json
import math
import os
from collections import deque
from concurrent import futures
from itertools import chain

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph
from scipy.spatial import cKDTree
from scipy.special import gammaln, logsumexp

from .graph import GraphView, build_graph, view_from_arrows
from .ppp import PointSet, Seed, Window, sample_ppp_from

VARIANTS = ("U", "O", "B")
BOUND_SIDES = ("lower", "upper")

# 1-independent bond percolation threshold: edges open with at least
# this probability force an infinite open component
ONE_DEP_THRESHOLD = 0.8639

# published trial table: variant, side, lambda, r, s, successes, trials,
# log10 confidence (rounded up)
TRIAL_REFERENCE = (
    ("U", "lower", 0.20, 90.0, 10.0, 1480, 1500, -66.0),
    ("O", "lower", 0.11, 60.0, 0.0, 963, 1000, -25.0),
    ("B", "lower", 0.09, 80.0, 0.0, 2159, 2250, -51.0),
    ("U", "upper", 0.27, 110.0, 0.0, 4296, 4600, -51.0),
    ("O", "upper", 0.17, 110.0, 0.0, 3689, 4000, -25.0),
    ("B", "upper", 0.13, 125.0, 0.0, 6226, 6750, -45.0),
)


@dataclasses.dataclass(frozen=True)
class TrialConfig:
    """One Monte-Carlo condition: variant, bound side, intensity, and the
    geometry of two adjacent squares of side 2r + 2s whose central discs
    have radius r."""

    variant: str
    bound_side: str
    lam: float
    r: float
    s: float
    trials: int
    master: int

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if self.bound_side not in BOUND_SIDES:
            raise ValueError(
                f"bound_side must be one of {BOUND_SIDES}, got {self.bound_side!r}"
            )
        if not self.lam > 0:
            raise ValueError(f"lam must be positive, got {self.lam}")
        if not self.r > 0:
            raise ValueError(f"r must be positive, got {self.r}")
        if self.s < 0:
            raise ValueError(f"s must be nonnegative, got {self.s}")
        if self.trials < 1:
            raise ValueError(f"trials must be >= 1, got {self.trials}")
        Seed(self.master, 0)  # validates the master seed range

    @property
    def side(self) -> float:
        return 2.0 * (self.r + self.s)

    @property
    def window(self) -> Window:
        return Window.box(2.0 * self.side, self.side)

    @property
    def disc_centers(self) -> tuple[np.ndarray, np.ndarray]:
        half = 0.5 * self.side
        return np.array([half, half]), np.array([3.0 * half, half])

    @property
    def central_segment(self) -> tuple[float, float, float]:
        """(y level, x start, x end) of the segment joining the square
        centers."""
        half = 0.5 * self.side
        return half, half, 3.0 * half

    def to_json(self) -> dict:
        return {
            "variant": self.variant,
            "bound": self.bound_side,
            "lambda": self.lam,
            "r": self.r,
            "s": self.s,
            "trials": self.trials,
            "master": self.master,
        }


def censored_graph(
    blacks: PointSet, reds: PointSet, window: Window, variant: str
) -> GraphView:
    """Variant view after dropping every arrow longer than its tail's
    distance to the window boundary.

    Surviving arrows exist in the infinite-volume graph regardless of the
    configuration outside the window: no exterior point can invalidate an
    arrow whose open ball stays inside.  Ties at exactly the boundary
    distance are kept, since the blocking ball is open.
    """
    if variant not in VARIANTS:
        raise ValueError(f"variant must be one of {VARIANTS}, got {variant!r}")
    if blacks.window != window or reds.window != window:
        raise ValueError("points must live in the censoring window")
    g = build_graph(blacks, reds)
    src, dst, dist = g.edges()
    bd = window.boundary_distance(blacks.points)
    keep = dist <= bd[src]
    label = "directed" if variant == "O" else variant
    return view_from_arrows(label, g.n, src[keep], dst[keep])


@dataclasses.dataclass(frozen=True)
class ExposureRegion:
    """Conservative cover of the window points reachable from outside.

    The boundary is sampled at spacing step/2; each sample x carries the
    exposure radius rho(x), its distance to the nearest window red.  A
    query point is exposed when it falls within rho + step/2 of a sample.
    rho is 1-Lipschitz along the boundary (it is a distance function), so
    the inflated sampled discs cover the exact disc at every unsampled
    boundary point; membership errs only toward reporting more exposure.
    The four window corners are always among the samples; corner_records
    keeps their rows.
    """

    boundary_samples: np.ndarray
    rho: np.ndarray
    step: float
    corner_records: tuple

    def __post_init__(self):
        samples = np.asarray(self.boundary_samples)
        rho = np.asarray(self.rho)
        if samples.ndim != 2 or samples.shape[1] != 2:
            raise ValueError("boundary_samples must be an (m, 2) array")
        if rho.shape != (len(samples),):
            raise ValueError("rho must have one entry per boundary sample")
        if np.any(rho < 0):
            raise ValueError("exposure radii must be nonnegative")
        if self.step <= 0:
            raise ValueError(f"step must be positive, got {self.step}")
        if len(self.corner_records) != 4:
            raise ValueError("need exactly four corner records")

    @property
    def inflated_radii(self) -> np.ndarray:
        return self.rho + 0.5 * self.step

    def is_exposed(self, points: np.ndarray) -> np.ndarray:
        """Conservative membership mask for the query points."""
        pts = np.asarray(points, dtype=np.float64)
        out = np.zeros(len(pts), dtype=bool)
        if len(pts) == 0:
            return out
        if bool(np.any(np.isinf(self.rho))):
            out[:] = True
            return out
        tree = cKDTree(pts)
        hits = tree.query_ball_point(self.boundary_samples, self.inflated_radii)
        for lst in hits:
            out[lst] = True
        return out

    def segment_clear(self, level: float, x_lo: float, x_hi: float) -> bool:
        """True when no inflated boundary disc touches the horizontal
        segment at the given y level."""
        if bool(np.any(np.isinf(self.rho))):
            return False
        sx = self.boundary_samples[:, 0]
        sy = self.boundary_samples[:, 1]
        d = np.hypot(sx - np.clip(sx, x_lo, x_hi), sy - level)
        return bool(np.all(d > self.inflated_radii))


def exposure_region(reds, window: Window, step: float) -> ExposureRegion:
    """Sample the window boundary and attach exposure radii.

    Accepts reds as a PointSet or a raw (n, 2) array.  With no reds every
    radius is infinite and every interior point is exposed.
    """
    if step <= 0:
        raise ValueError(f"step must be positive, got {step}")
    if window.dim != 2:
        raise ValueError("exposure region needs a planar window")
    pts = reds.points if isinstance(reds, PointSet) else np.asarray(reds, dtype=np.float64)
    if pts.ndim != 2 or (len(pts) and pts.shape[1] != 2):
        raise ValueError("reds must be an (n, 2) array")
    (x0, y0), (x1, y1) = window.lo, window.hi
    h = 0.5 * step
    nx = max(2, int(math.ceil((x1 - x0) / h)) + 1)
    ny = max(2, int(math.ceil((y1 - y0) / h)) + 1)
    xs = np.linspace(x0, x1, nx)
    ys = np.linspace(y0, y1, ny)
    bottom = np.column_stack([xs, np.full(nx, y0)])
    top = np.column_stack([xs, np.full(nx, y1)])
    left = np.column_stack([np.full(ny - 2, x0), ys[1:-1]])
    right = np.column_stack([np.full(ny - 2, x1), ys[1:-1]])
    samples = np.concatenate([bottom, top, left, right])
    if len(pts) == 0:
        rho = np.full(len(samples), np.inf)
    else:
        rho, _ = cKDTree(pts).query(samples, k=1)
    corners = ((x0, y0), (x1, y0), (x1, y1), (x0, y1))
    records = []
    for cx, cy in corners:
        if len(pts) == 0:
            records.append((cx, cy, math.inf))
        else:
            d, _ = cKDTree(pts).query([cx, cy], k=1)
            records.append((cx, cy, float(d)))
    return ExposureRegion(
        boundary_samples=samples, rho=rho, step=step, corner_records=tuple(records)
    )


def _sample_processes(cfg: TrialConfig, trial_index: int):
    """Blacks then reds, drawn sequentially from the trial's substream."""
    gen = Seed(cfg.master, trial_index).generator()
    window = cfg.window
    blacks = sample_ppp_from(gen, 1.0, window, kind="black")
    reds = sample_ppp_from(gen, cfg.lam, window, kind="red")
    return blacks.points, reds.points


def _guards(blacks: np.ndarray, reds: np.ndarray, cap: float) -> np.ndarray:
    """Distance from each black to the nearest red, capped (capping at the
    window diameter changes no in-window edge)."""
    if len(reds) == 0:
        return np.full(len(blacks), cap)
    d, _ = cKDTree(reds).query(blacks, k=1)
    return np.minimum(d, cap)


def _window_arrows(blacks: np.ndarray, radii: np.ndarray):
    """CSR out-lists: for each black, the other blacks within its radius."""
    n = len(blacks)
    if n == 0:
        return np.zeros(1, dtype=np.int64), np.empty(0, dtype=np.int64)
    tree = cKDTree(blacks)
    lists = tree.query_ball_point(blacks, radii)
    lens = np.fromiter(map(len, lists), dtype=np.int64, count=n)
    flat = np.fromiter(chain.from_iterable(lists), dtype=np.int64, count=int(lens.sum()))
    src = np.repeat(np.arange(n, dtype=np.int64), lens)
    keep = flat != src  # each list contains its own center
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(src[keep], minlength=n), out=indptr[1:])
    return indptr, flat[keep]


def _adjacency(n: int, indptr: np.ndarray, indices: np.ndarray) -> sparse.csr_matrix:
    data = np.ones(len(indices), dtype=np.uint8)
    return sparse.csr_matrix(
        (data, indices.astype(np.int32, copy=False), indptr), shape=(n, n)
    )


def _condensation(A: sparse.csr_matrix):
    """Strong-component labels plus the deduplicated condensation edges."""
    ncomp, labels = csgraph.connected_components(A, directed=True, connection="strong")
    coo = A.tocoo()
    cu = labels[coo.row].astype(np.int64)
    cv = labels[coo.col].astype(np.int64)
    mask = cu != cv
    key = np.unique(cu[mask] * ncomp + cv[mask])
    return ncomp, labels, key // ncomp, key % ncomp


def _reach_counts(ncomp, labels, dag_src, dag_dst, sources, target_mask):
    """Number of targets reachable along directed paths from each source.

    Bitsets over target positions, merged bottom-up: a component is
    finalized once every successor has been, so each merge folds in a
    completed reach set.
    """
    bits = [0] * ncomp
    for pos, v in enumerate(np.flatnonzero(target_mask)):
        bits[labels[v]] |= 1 << int(pos)
    outdeg = np.bincount(dag_src, minlength=ncomp)
    preds: list[list[int]] = [[] for _ in range(ncomp)]
    for a, b in zip(dag_src.tolist(), dag_dst.tolist()):
        preds[b].append(a)
    queue = deque(np.flatnonzero(outdeg == 0).tolist())
    while queue:
        c = queue.popleft()
        bc = bits[c]
        for p in preds[c]:
            bits[p] |= bc
            outdeg[p] -= 1
            if outdeg[p] == 0:
                queue.append(p)
    return np.fromiter(
        (bits[labels[v]].bit_count() for v in sources),
        dtype=np.int64,
        count=len(sources),
    )


def _disc_masks(blacks: np.ndarray, cfg: TrialConfig):
    kc, mc = cfg.disc_centers
    in_k = np.hypot(blacks[:, 0] - kc[0], blacks[:, 1] - kc[1]) <= cfg.r
    in_m = np.hypot(blacks[:, 0] - mc[0], blacks[:, 1] - mc[1]) <= cfg.r
    return in_k, in_m


def trial_lower(cfg: TrialConfig, trial_index: int) -> bool:
    """One lower-bound trial.

    Success means that on the censored window graph, more than half the
    blacks in the first central disc have variant paths to more than half
    the blacks in the second, and symmetrically back.  For the directed
    variant the first condition follows arrows forward and the second
    follows them from the far disc back.  An empty disc fails outright.
    """
    if cfg.bound_side != "lower":
        raise ValueError("trial_lower needs a lower-bound config")
    blacks, reds = _sample_processes(cfg, trial_index)
    n = len(blacks)
    if n == 0:
        return False
    in_k, in_m = _disc_masks(blacks, cfg)
    k, m = int(in_k.sum()), int(in_m.sum())
    if k == 0 or m == 0:
        return False
    diam = math.hypot(2.0 * cfg.side, cfg.side)
    radii = np.minimum(_guards(blacks, reds, diam), cfg.window.boundary_distance(blacks))
    indptr, indices = _window_arrows(blacks, radii)
    A = _adjacency(n, indptr, indices)
    if cfg.variant in ("U", "B"):
        if cfg.variant == "B":
            A = A.multiply(A.T).tocsr()
        ncomp, labels = csgraph.connected_components(A, directed=False)
        k_in = np.bincount(labels[in_k], minlength=ncomp)
        m_in = np.bincount(labels[in_m], minlength=ncomp)
        good_k = int((2 * m_in[labels[in_k]] > m).sum())
        good_m = int((2 * k_in[labels[in_m]] > k).sum())
        return 2 * good_k > k and 2 * good_m > m
    ncomp, labels, dag_src, dag_dst = _condensation(A)
    to_m = _reach_counts(ncomp, labels, dag_src, dag_dst, np.flatnonzero(in_k), in_m)
    if not 2 * int((2 * to_m > m).sum()) > k:
        return False
    to_k = _reach_counts(ncomp, labels, dag_src, dag_dst, np.flatnonzero(in_m), in_k)
    return 2 * int((2 * to_k > k).sum()) > m


def _crossing_mask(points, src, dst, level, x_lo, x_hi):
    """Edges whose straight segment crosses (or touches) the central
    segment at the given y level."""
    ys = points[src, 1] - level
    yd = points[dst, 1] - level
    opposite = ys * yd < 0
    with np.errstate(divide="ignore", invalid="ignore"):
        xc = points[src, 0] + (points[dst, 0] - points[src, 0]) * (ys / (ys - yd))
    crossing = opposite & (xc >= x_lo) & (xc <= x_hi)
    on_src = (ys == 0) & (points[src, 0] >= x_lo) & (points[src, 0] <= x_hi)
    on_dst = (yd == 0) & (points[dst, 0] >= x_lo) & (points[dst, 0] <= x_hi)
    return crossing | on_src | on_dst


def default_exposure_step(lam: float) -> float:
    """Boundary discretization step: a twentieth of the typical
    nearest-red spacing 1 / (2 sqrt(lam))."""
    if lam <= 0:
        raise ValueError(f"lam must be positive, got {lam}")
    return 0.025 / math.sqrt(lam)


def trial_upper(cfg: TrialConfig, trial_index: int) -> bool:
    """One upper-bound trial.

    The window graph is built with no censoring and no reds assumed
    outside, the most permissive edge set.  Success requires both that no
    inflated boundary disc touches the central segment (blocking direct
    edges from outside through it) and that no variant path starting at
    an exposure-region black traverses an edge crossing the segment.
    """
    if cfg.bound_side != "upper":
        raise ValueError("trial_upper needs an upper-bound config")
    blacks, reds = _sample_processes(cfg, trial_index)
    level, x_lo, x_hi = cfg.central_segment
    region = exposure_region(reds, cfg.window, default_exposure_step(cfg.lam))
    if not region.segment_clear(level, x_lo, x_hi):
        return False
    n = len(blacks)
    if n == 0:
        return True
    diam = math.hypot(2.0 * cfg.side, cfg.side)
    guards = _guards(blacks, reds, diam)
    indptr, indices = _window_arrows(blacks, guards)
    src = np.repeat(np.arange(n, dtype=np.int64), np.diff(indptr))
    exposed = region.is_exposed(blacks)
    if cfg.variant == "O":
        from .components import bfs_mask

        cross = _crossing_mask(blacks, src, indices, level, x_lo, x_hi)
        if not cross.any():
            return True
        reached = bfs_mask(indptr, indices, np.flatnonzero(exposed))
        return not bool(np.any(cross & reached[src]))
    A = _adjacency(n, indptr, indices)
    if cfg.variant == "B":
        coo = A.multiply(A.T).tocoo()
        e_src, e_dst = coo.row.astype(np.int64), coo.col.astype(np.int64)
        ncomp, labels = csgraph.connected_components(coo, directed=False)
    else:
        e_src, e_dst = src, indices
        ncomp, labels = csgraph.connected_components(A, directed=False)
    cross = _crossing_mask(blacks, e_src, e_dst, level, x_lo, x_hi)
    if not cross.any():
        return True
    tainted = np.zeros(ncomp, dtype=bool)
    tainted[labels[exposed]] = True
    return not bool(np.any(cross & tainted[labels[e_src]]))


@dataclasses.dataclass(frozen=True)
class ConfidenceReport:
    """One-sided binomial tail at the 1-independent threshold.

    log10_confidence bounds, for any true success probability below p0,
    the log-probability of seeing at least this many successes.
    """

    successes: int
    trials: int
    p0: float
    log10_confidence: float

    def __post_init__(self):
        if not 0 <= self.successes <= self.trials:
            raise ValueError(
                f"successes {self.successes} outside [0, {self.trials}]"
            )
        if not 0.0 < self.p0 < 1.0:
            raise ValueError(f"p0 must be in (0, 1), got {self.p0}")
        if self.log10_confidence > 0.0:
            raise ValueError("log10_confidence must be <= 0")

    def to_json(self) -> dict:
        return {
            "successes": self.successes,
            "trials": self.trials,
            "p0": self.p0,
            "log10_confidence": self.log10_confidence,
        }


def confidence(
    successes: int, trials: int, p0: float = ONE_DEP_THRESHOLD
) -> ConfidenceReport:
    """log10 of the upper binomial tail P(Bin(trials, p0) >= successes).

    Summed in log space from per-count log-pmf terms, so deep tails keep
    full precision instead of underflowing to zero.
    """
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    if not 0 <= successes <= trials:
        raise ValueError(f"successes {successes} outside [0, {trials}]")
    if not 0.0 < p0 < 1.0:
        raise ValueError(f"p0 must be in (0, 1), got {p0}")
    k = np.arange(successes, trials + 1, dtype=np.float64)
    log_pmf = (
        gammaln(trials + 1.0)
        - gammaln(k + 1.0)
        - gammaln(trials - k + 1.0)
        + k * math.log(p0)
        + (trials - k) * math.log1p(-p0)
    )
    log10_tail = float(logsumexp(log_pmf)) / math.log(10.0)
    return ConfidenceReport(
        successes=successes, trials=trials, p0=p0,
        log10_confidence=min(0.0, log10_tail),
    )


@dataclasses.dataclass(frozen=True)
class TrialBatch:
    """All trials of one config, with the derived confidence level."""

    config: TrialConfig
    successes: int
    confidence: ConfidenceReport
    outcomes: tuple | None = None

    @property
    def frequency(self) -> float:
        return self.successes / self.config.trials

    def to_csv(self) -> str:
        c = self.config
        row = ",".join(
            [
                c.variant,
                c.bound_side,
                repr(float(c.lam)),
                repr(float(c.r)),
                repr(float(c.s)),
                str(self.successes),
                str(c.trials),
                repr(float(self.confidence.log10_confidence)),
            ]
        )
        return "variant,bound,lambda,r,s,successes,trials,log10_confidence\n" + row + "\n"

    def to_json(self) -> dict:
        blob = {
            "config": self.config.to_json(),
            "successes": self.successes,
            "trials": self.config.trials,
            "log10_confidence": self.confidence.log10_confidence,
        }
        if self.outcomes is not None:
            blob["outcomes"] = [bool(o) for o in self.outcomes]
        return blob

    def to_json_str(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


def _trial_worker(args) -> bool:
    cfg, index = args
    fn = trial_lower if cfg.bound_side == "lower" else trial_upper
    return fn(cfg, index)


def run_trials(
    cfg: TrialConfig, keep_trials: bool = False, threads: int | None = None
) -> TrialBatch:
    """Run every trial of a config.

    Each trial draws from its own substream (master, index), so the
    outcome vector is independent of worker count and schedule.
    """
    if threads is None:
        threads = os.cpu_count() or 1
    tasks = [(cfg, i) for i in range(cfg.trials)]
    if threads <= 1 or cfg.trials == 1:
        outcomes = [_trial_worker(t) for t in tasks]
    else:
        chunk = max(1, cfg.trials // (4 * threads))
        with futures.ProcessPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(_trial_worker, tasks, chunksize=chunk))
    successes = int(sum(outcomes))
    report = confidence(successes, cfg.trials)
    return TrialBatch(
        config=cfg,
        successes=successes,
        confidence=report,
        outcomes=tuple(bool(o) for o in outcomes) if keep_trials else None,
    )


def scaled_reference_configs(scale: float, master: int) -> list[TrialConfig]:
    """Trial configs for every reference row, with counts scaled.

    Each row gets its own master seed so the rows draw independent
    streams.
    """
    if scale <= 0:
        raise ValueError(f"scale must be positive, got {scale}")
    out = []
    for i, (variant, side, lam, r, s, _, trials, _) in enumerate(TRIAL_REFERENCE):
        out.append(
            TrialConfig(
                variant=variant,
                bound_side=side,
                lam=lam,
                r=r,
                s=s,
                trials=max(1, int(round(trials * scale))),
                master=(master + i) % (2**64),
            )
        )
    return out
