"""Seeded Poisson point process sampling in rectangular windows of R^d."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

# Expected counts above this are not exactly representable as floats, so the
# Poisson draw (and downstream indexing) would silently lose mass.
_MAX_EXPECTED_COUNT = 2.0**53

_U64 = 2**64


@dataclass(frozen=True)
class Seed:
    """Counter-based RNG key: (master, stream) pairs map to independent streams.

    Backed by the Philox generator, whose 128-bit key is exactly the two
    64-bit fields here.  Identical seeds give bit-identical output on every
    platform; distinct streams under one master never overlap.
    """

    master: int
    stream: int = 0

    def __post_init__(self):
        for name in ("master", "stream"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or not 0 <= v < _U64:
                raise ValueError(f"{name} must be an unsigned 64-bit integer, got {v!r}")

    def with_stream(self, stream: int) -> "Seed":
        return Seed(self.master, stream)

    def generator(self) -> np.random.Generator:
        return np.random.Generator(np.random.Philox(key=[self.master, self.stream]))

    def to_json(self) -> dict:
        return {"master": int(self.master), "stream": int(self.stream)}


@dataclass(frozen=True)
class Window:
    """Axis-aligned box given by per-axis closed intervals [lo_i, hi_i]."""

    bounds: tuple[tuple[float, float], ...]

    def __post_init__(self):
        bounds = tuple((float(lo), float(hi)) for lo, hi in self.bounds)
        object.__setattr__(self, "bounds", bounds)
        if len(bounds) < 1:
            raise ValueError("window needs at least one axis")
        for lo, hi in bounds:
            if not (math.isfinite(lo) and math.isfinite(hi) and hi > lo):
                raise ValueError(f"degenerate interval [{lo}, {hi}]")

    @classmethod
    def box(cls, *lengths: float) -> "Window":
        """Window [0, L1] x ... x [0, Ld]."""
        return cls(tuple((0.0, float(L)) for L in lengths))

    @property
    def dim(self) -> int:
        return len(self.bounds)

    @property
    def lo(self) -> np.ndarray:
        return np.array([b[0] for b in self.bounds])

    @property
    def hi(self) -> np.ndarray:
        return np.array([b[1] for b in self.bounds])

    @property
    def lengths(self) -> np.ndarray:
        return self.hi - self.lo

    @property
    def volume(self) -> float:
        return float(np.prod(self.lengths))

    def contains(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(points)
        return np.all((pts >= self.lo) & (pts < self.hi), axis=1)

    def boundary_distance(self, points: np.ndarray) -> np.ndarray:
        """Distance from each point to the nearest face of the box."""
        pts = np.atleast_2d(points)
        return np.minimum(pts - self.lo, self.hi - pts).min(axis=1)

    def to_json(self) -> dict:
        return {"dim": self.dim, "bounds": [list(b) for b in self.bounds]}


@dataclass(frozen=True)
class PointSet:
    """A finite sample of a Poisson process, black nodes or red eavesdroppers."""

    kind: str  # "black" or "red"
    intensity: float
    window: Window
    points: np.ndarray  # shape (n, dim), float64
    seed: Seed | None = None

    def __post_init__(self):
        if self.kind not in ("black", "red"):
            raise ValueError(f"kind must be 'black' or 'red', got {self.kind!r}")
        pts = np.asarray(self.points, dtype=np.float64).reshape(-1, self.window.dim)
        object.__setattr__(self, "points", pts)
        if len(pts) and not self.window.contains(pts).all():
            raise ValueError("every point must lie inside the window")

    def __len__(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.window.dim

    def to_csv(self) -> str:
        header = ",".join(f"x{i + 1}" for i in range(self.dim))
        rows = [",".join(repr(float(c)) for c in p) for p in self.points]
        return "\n".join([header] + rows) + "\n"

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "intensity": self.intensity,
            "window": self.window.to_json(),
            "seed": self.seed.to_json() if self.seed is not None else None,
            "points": self.points.tolist(),
        }

    def to_json_str(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


def ball_volume(d: int) -> float:
    """Volume of the unit ball in R^d, pi^(d/2) / Gamma(1 + d/2)."""
    if d < 1:
        raise ValueError(f"dimension must be >= 1, got {d}")
    if d <= 100:
        return math.pi ** (d / 2) / math.gamma(1 + d / 2)
    # log form: the direct ratio overflows long before the value does
    return math.exp((d / 2) * math.log(math.pi) - math.lgamma(1 + d / 2))


def ball_surface(d: int) -> float:
    """Surface area of the unit sphere in R^d, 2 pi^(d/2) / Gamma(d/2)."""
    if d < 1:
        raise ValueError(f"dimension must be >= 1, got {d}")
    if d <= 100:
        return 2 * math.pi ** (d / 2) / math.gamma(d / 2)
    return 2 * math.exp((d / 2) * math.log(math.pi) - math.lgamma(d / 2))


def sample_ppp_from(gen: np.random.Generator, intensity: float, window: Window,
                    kind: str = "black", seed: Seed | None = None) -> PointSet:
    """Draw one Poisson sample from an already positioned generator.

    Count N ~ Poisson(intensity * volume), then N independent uniforms in the
    half-open box [lo, hi).  Exposed separately from sample_ppp so several
    processes can be drawn in sequence from a single substream.
    """
    if intensity < 0:
        raise ValueError(f"intensity must be >= 0, got {intensity}")
    expected = intensity * window.volume
    if expected > _MAX_EXPECTED_COUNT:
        raise ValueError(f"expected count {expected:.3e} overflows exact integer range")
    n = int(gen.poisson(expected))
    pts = window.lo + gen.random((n, window.dim)) * window.lengths
    return PointSet(kind=kind, intensity=float(intensity), window=window, points=pts, seed=seed)


def sample_ppp(intensity: float, window: Window, seed: Seed, kind: str = "black") -> PointSet:
    """Sample a Poisson process of the given intensity; deterministic in seed."""
    return sample_ppp_from(seed.generator(), intensity, window, kind=kind, seed=seed)


def radial_nearest_distance(d: int, intensity: float, k: int, seed: Seed) -> float:
    """Distance from the origin to the k-th nearest point of a Poisson process.

    Uses the radial law directly: the ball volumes to successive points are a
    unit-rate Poisson arrival process, so the k-th distance is
    (Gamma(k, 1) / (intensity * alpha_d))^(1/d).  Sampling the gamma variate as
    a cumulative sum of exponentials couples draws across k for a fixed seed:
    k=1 and k=2 from one seed satisfy d1 <= d2 realization-wise.
    """
    if intensity <= 0:
        raise ValueError(f"intensity must be > 0, got {intensity}")
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    gen = seed.generator()
    v = gen.standard_exponential(k).sum()
    return float((v / (intensity * ball_volume(d))) ** (1.0 / d))
