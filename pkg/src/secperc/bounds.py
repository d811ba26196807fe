"""Closed-form percolation bounds.

Two families.  The rolling-disc bound controls the probability that some
black point in a strip between two adjacent squares of side 2r + 2s fails
to link forward, by watching a disc of radius r roll from one square's
central disc to the other's; minimizing it over (r, s) certifies that
long-range connectivity survives at a given eavesdropper intensity.  The
hexagon-tiling bound runs the other way: it finds the smallest intensity
at which closed hexagons (no black point, a red in every sixth-triangle)
form circuits that sever every undirected edge, so percolation cannot
occur above it.
"""

from __future__ import annotations

import dataclasses
import json
import math

import numpy as np
from scipy import optimize

from .quadrature import adaptive_simpson

VARIANTS = ("U", "O", "B")

# Optimizer search box; the refinement stage may leave it but not the
# validity region r > 0, s >= 0.
_GRID_R = np.linspace(0.5, 5.0, 64)
_GRID_S = np.linspace(0.0, 8.0, 64)


def _check_variant(variant: str) -> None:
    if variant not in VARIANTS:
        raise ValueError(f"variant must be one of {VARIANTS}, got {variant!r}")


def disc_intersection_area(r1: float, r2: float, dist: float) -> float:
    """Exact intersection area of discs with radii r1, r2 at center
    distance dist.

    Symmetric in the radii; pi * min(r1, r2)**2 once one disc contains
    the other, 0 once they separate.  The general case is the sum of the
    two circular segments cut off by the radical line.
    """
    if r1 < 0 or r2 < 0 or dist < 0:
        raise ValueError("radii and distance must be nonnegative")
    if dist >= r1 + r2:
        return 0.0
    if dist <= abs(r1 - r2):
        return math.pi * min(r1, r2) ** 2
    # signed distance from each center to the radical line; negative d1
    # means the line falls behind center 1 and its segment exceeds a
    # half-disc, which the acos form handles without branching
    d1 = (dist * dist + r1 * r1 - r2 * r2) / (2.0 * dist)
    d2 = dist - d1
    seg1 = r1 * r1 * math.acos(max(-1.0, min(1.0, d1 / r1)))
    seg2 = r2 * r2 * math.acos(max(-1.0, min(1.0, d2 / r2)))
    seg1 -= d1 * math.sqrt(max(0.0, r1 * r1 - d1 * d1))
    seg2 -= d2 * math.sqrt(max(0.0, r2 * r2 - d2 * d2))
    return seg1 + seg2


@dataclasses.dataclass(frozen=True)
class LuneGeometry:
    """Areas seen from a point v on the rim of a rolling disc of radius r
    when a candidate forward neighbour u sits inside the disc at distance
    t, with s the clearance the search is allowed to use.

    area_near is the disc around v through u; area_pair_union the union
    of the equal discs around v and u (their centers lie on each other's
    boundary); area_gate the part of the near disc already inside the
    rolling disc, where no closer candidate can hide.
    """

    r: float
    s: float
    t: float

    def __post_init__(self):
        if self.r <= 0:
            raise ValueError(f"r must be positive, got {self.r}")
        if self.s < 0:
            raise ValueError(f"s must be nonnegative, got {self.s}")
        if not 0.0 <= self.t <= min(self.s, 2.0 * self.r):
            raise ValueError(f"t={self.t} outside [0, min(s, 2r)]")

    @property
    def area_near(self) -> float:
        return math.pi * self.t * self.t

    @property
    def area_pair_union(self) -> float:
        return 2.0 * math.pi * self.t * self.t - disc_intersection_area(
            self.t, self.t, self.t
        )

    @property
    def area_gate(self) -> float:
        return disc_intersection_area(self.t, self.r, self.r)


def rolling_ball_integrand(variant: str, lam: float, r: float, t: float) -> float:
    """Density, at candidate distance t, of the event that the nearest
    forward candidate exists but its edge is blocked.

    The block probability depends on the variant: B needs both
    surrounding discs clear of reds, O only the one around the source,
    U fails only when both directions are blocked.
    """
    _check_variant(variant)
    if lam < 0:
        raise ValueError(f"lam must be nonnegative, got {lam}")
    if r <= 0:
        raise ValueError(f"r must be positive, got {r}")
    if not 0.0 <= t <= 2.0 * r:
        raise ValueError(f"t={t} outside [0, 2r]")
    geom = LuneGeometry(r=r, s=2.0 * r, t=t)
    gate = math.exp(-geom.area_gate)
    if variant == "B":
        return (1.0 - math.exp(-lam * geom.area_pair_union)) * gate
    if variant == "U":
        a = math.exp(-lam * geom.area_near)
        return (1.0 - 2.0 * a + math.exp(-lam * geom.area_pair_union)) * gate
    return (1.0 - math.exp(-lam * geom.area_near)) * gate


@dataclasses.dataclass(frozen=True)
class BoundReport:
    """Result of one rolling-disc bound evaluation.

    p bounds the probability that the linking event between two adjacent
    squares fails; quadrature_error is the contribution of the numeric
    integral's error estimate to p.
    """

    variant: str
    lam: float
    r: float
    s: float
    p: float
    quadrature_error: float

    def __post_init__(self):
        _check_variant(self.variant)
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"p={self.p} outside [0, 1]")

    def to_csv(self) -> str:
        row = ",".join(
            [self.variant]
            + [repr(float(x)) for x in (self.lam, self.r, self.s, self.p)]
        )
        return "variant,lambda,r,s,p\n" + row + "\n"

    def to_json(self) -> dict:
        return {
            "variant": self.variant,
            "lambda": self.lam,
            "r": self.r,
            "s": self.s,
            "p": self.p,
            "quadrature_error": self.quadrature_error,
        }

    def to_json_str(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


def rolling_ball_bound(
    variant: str, lam: float, r: float, s: float, tol: float = 1e-9
) -> BoundReport:
    """Bound the probability that the linking event between adjacent
    squares of side 2r + 2s fails.

    Two terms: the chance the source disc holds no black point at all,
    plus the expected number of strip points with no forward neighbour,
    each charged the no-candidate weight or the blocked-edge integrand.
    The 2-D integral over candidate positions collapses to 1-D because
    every factor depends only on the candidate distance t; the angular
    width of candidates at distance t is 2*acos(t / 2r).
    """
    _check_variant(variant)
    if lam < 0:
        raise ValueError(f"lam must be nonnegative, got {lam}")
    if r <= 0:
        raise ValueError(f"r must be positive, got {r}")
    if s < 0:
        raise ValueError(f"s must be nonnegative, got {s}")
    if tol <= 0:
        raise ValueError(f"tol must be positive, got {tol}")
    scale = 2.0 * r * (2.0 * r + 2.0 * s)
    no_candidate = math.exp(-disc_intersection_area(r, s, r))
    t_max = min(s, 2.0 * r)
    if lam == 0.0 or t_max == 0.0:
        integral, err = 0.0, 0.0
    else:
        two_r = 2.0 * r

        def weighted(t: float) -> float:
            width = 2.0 * t * math.acos(max(-1.0, min(1.0, t / two_r)))
            return rolling_ball_integrand(variant, lam, r, t) * width

        integral, err = adaptive_simpson(weighted, 0.0, t_max, tol)
    p = math.exp(-math.pi * r * r) + scale * (no_candidate + integral)
    p = min(1.0, max(0.0, p))
    return BoundReport(
        variant=variant, lam=lam, r=r, s=s, p=p, quadrature_error=scale * err
    )


def optimize_bound(variant: str, lam: float) -> BoundReport:
    """Minimize the rolling-disc failure bound over the geometry (r, s).

    Deterministic: a fixed 64x64 grid scan locates the basin, then
    Nelder-Mead with a fixed initial simplex polishes it.  Out-of-domain
    probes are charged a penalty above any attainable p.
    """
    _check_variant(variant)
    if lam <= 0:
        raise ValueError(f"lam must be positive, got {lam}")
    best = None
    for r in _GRID_R:
        for s in _GRID_S:
            rep = rolling_ball_bound(variant, lam, float(r), float(s), tol=1e-6)
            if best is None or rep.p < best.p:
                best = rep

    def objective(x) -> float:
        r, s = float(x[0]), float(x[1])
        if r <= 0.05 or s < 0.0:
            return 2.0
        return rolling_ball_bound(variant, lam, r, s, tol=1e-8).p

    start = np.array([best.r, best.s])
    simplex = np.array([start, start + [0.08, 0.0], start + [0.0, 0.08]])
    res = optimize.minimize(
        objective,
        start,
        method="Nelder-Mead",
        options={
            "initial_simplex": simplex,
            "xatol": 1e-4,
            "fatol": 1e-9,
            "maxiter": 400,
        },
    )
    r_opt, s_opt = float(res.x[0]), float(res.x[1])
    if r_opt > 0.05 and s_opt >= 0.0:
        refined = rolling_ball_bound(variant, lam, r_opt, s_opt, tol=1e-9)
        if refined.p <= best.p:
            return refined
    return best


def hexagon_closed_probability(lam: float, delta: float) -> float:
    """Probability that a hexagon of side delta is closed: it holds no
    black point while each of its six equilateral triangles holds a red."""
    if lam < 0:
        raise ValueError(f"lam must be nonnegative, got {lam}")
    if delta < 0:
        raise ValueError(f"delta must be nonnegative, got {delta}")
    tri = math.sqrt(3.0) / 4.0 * delta * delta
    return (1.0 - math.exp(-lam * tri)) ** 6 * math.exp(-6.0 * tri)


def hexagon_optimal_side(lam: float) -> float:
    """Side length maximizing the closed-hexagon probability at fixed lam.

    Stationarity reduces to exp(-lam * tri) = 1 / (1 + lam) with tri the
    triangle area, solved in closed form.
    """
    if lam <= 0:
        raise ValueError(f"lam must be positive, got {lam}")
    return math.sqrt(4.0 * math.log1p(lam) / (math.sqrt(3.0) * lam))


def hexagon_threshold_value(lam: float) -> float:
    """Closed-hexagon probability at the optimal side length, in the
    closed form (lam/(1+lam))**6 * (1+lam)**(-6/lam)."""
    if lam <= 0:
        raise ValueError(f"lam must be positive, got {lam}")
    return (lam / (1.0 + lam)) ** 6 * (1.0 + lam) ** (-6.0 / lam)


def hexagon_bound(tol: float = 1e-3) -> float:
    """Smallest intensity whose best hexagon tiling is closed with
    probability at least 1/2.

    Above it, circuits of closed hexagons surround the origin almost
    surely and no undirected edge can cross them, so the undirected graph
    does not percolate.  Bisection on [1, 1000] to absolute tolerance tol.
    """
    if tol <= 0:
        raise ValueError(f"tol must be positive, got {tol}")
    lo, hi = 1.0, 1000.0
    if not hexagon_threshold_value(lo) < 0.5 < hexagon_threshold_value(hi):
        raise RuntimeError("bisection bracket does not straddle 1/2")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if hexagon_threshold_value(mid) >= 0.5:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)
