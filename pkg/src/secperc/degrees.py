"""Degree laws of the secrecy graph and the dominating branching process.

Outdegree is geometric with mean 1/lambda in every dimension.  The indegree
law has a usable density only in dimension 1, where the nearest-neighbour
spacing density is f1(t) = 4 t e^(-2t); the pmf is its Poisson mixture.
The out-cluster is dominated by a Galton-Watson process whose offspring law
is that same geometric, which yields the generation-size pmf and the
extinction probability min(1, lambda).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import chi2 as _chi2

from .graph import SecrecyGraph
from .ppp import Seed
from .quadrature import adaptive_simpson


@dataclass(frozen=True)
class DegreeHistogram:
    counts: np.ndarray  # counts[k] = number of core vertices with degree k
    n: int
    side: str           # "in" or "out"

    def to_csv(self) -> str:
        rows = [f"{k},{int(c)}" for k, c in enumerate(self.counts)]
        return "\n".join(["k,count"] + rows) + "\n"

    def mean(self) -> float:
        k = np.arange(len(self.counts))
        return float((k * self.counts).sum() / self.n) if self.n else 0.0


def outdegree_pmf(lam: float, k) -> float | np.ndarray:
    """P(outdegree = k) = (1/(1+lam))^k * lam/(1+lam), geometric with mean 1/lam."""
    if lam <= 0:
        raise ValueError(f"lambda must be > 0, got {lam}")
    k = np.asarray(k)
    out = (1.0 / (1.0 + lam)) ** k * (lam / (1.0 + lam))
    return float(out) if out.ndim == 0 else out


def indegree_pmf_d1(lam: float, k: int, tol: float = 1e-9) -> float:
    """P(indegree = k) in dimension 1 by quadrature of the f1 Poisson mixture.

    Integrand: (1/k!) f1(t) e^(-t/lam) (t/lam)^k with f1(t) = 4 t e^(-2t).
    The cutoff T is chosen so the analytic tail bound (2T+1) e^(-2T), valid
    for every k since the Poisson factor is at most 1, stays below tol/2.
    """
    if lam <= 0:
        raise ValueError(f"lambda must be > 0, got {lam}")
    if k < 0 or tol <= 0:
        raise ValueError("need k >= 0 and tol > 0")
    lgk = math.lgamma(k + 1)
    log_lam = math.log(lam)

    def integrand(t: float) -> float:
        if t <= 0.0:
            return 0.0
        logv = math.log(4.0) + math.log(t) - 2.0 * t - t / lam \
            + k * (math.log(t) - log_lam) - lgk
        return math.exp(logv) if logv > -745.0 else 0.0

    T = 8.0
    while (2.0 * T + 1.0) * math.exp(-2.0 * T) > tol / 2.0:
        T *= 2.0
    value, _ = adaptive_simpson(integrand, 0.0, T, tol / 2.0)
    return value


def empirical_degree_hist(g: SecrecyGraph, side: str, margin: float | None = None) -> DegreeHistogram:
    """Degree histogram over core vertices (margin from every face) only.

    Degrees are counted on the full graph; the margin merely restricts which
    vertices contribute, since guards near the boundary are overestimated.
    """
    if side not in ("in", "out"):
        raise ValueError(f"side must be 'in' or 'out', got {side!r}")
    if margin is None:
        margin = 0.1 * float(g.window.lengths.min())
    if not 0 < margin < float(g.window.lengths.min()) / 2:
        raise ValueError(f"margin {margin} must be in (0, half the shortest side)")
    core = g.window.boundary_distance(g.blacks.points) >= margin
    if side == "out":
        deg = np.diff(g.indptr)[core]
    else:
        deg = np.bincount(g.indices, minlength=g.n)[core]
    counts = np.bincount(deg) if len(deg) else np.zeros(1, dtype=np.int64)
    return DegreeHistogram(counts=counts, n=int(core.sum()), side=side)


def gw_generation_pmf(mu: float, n: int, j: int) -> float:
    """P(|generation n| = j) for geometric offspring with mean mu > 1.

    Evaluated in the scale-free form (dividing through by mu^n), which stays
    finite for large n; the n = 0 root generation falls out as a point mass
    at j = 1.
    """
    if mu <= 1:
        raise ValueError(f"mu must be > 1, got {mu}")
    if n < 0 or j < 0:
        raise ValueError("need n >= 0 and j >= 0")
    a = mu ** (-n)
    if j == 0:
        return (1.0 - a) / (mu - a)
    b = mu ** (-(n + 1))
    coeff = a * (mu - 1.0) ** 2 / (mu - a) ** 2
    ratio = (1.0 - a) / (1.0 - b)
    return coeff * ratio ** (j - 1)


@dataclass(frozen=True)
class GWRun:
    offspring_mean: float
    generation_sizes: list[int]
    extinct: bool
    capped: bool

    @property
    def total_progeny(self) -> int:
        return sum(self.generation_sizes)


def gw_simulate(lam: float, max_gen: int = 100_000, progeny_cap: int = 1_000_000,
                seed: Seed = Seed(0)) -> GWRun:
    """Simulate one Galton-Watson run with geometric(mean 1/lam) offspring.

    One uniform draw per individual, inverted through the geometric CDF.
    Runs that exceed progeny_cap stop early and are flagged capped (counted
    as non-extinct downstream, which biases extinction frequencies down).
    """
    if lam <= 0:
        raise ValueError(f"lambda must be > 0, got {lam}")
    if max_gen < 1 or progeny_cap < 1:
        raise ValueError("caps must be positive")
    gen = seed.generator()
    logq = math.log(1.0 / (1.0 + lam))
    sizes = [1]
    total = 1
    z = 1
    extinct = False
    capped = False
    while z > 0 and len(sizes) <= max_gen:
        if total > progeny_cap:
            capped = True
            break
        u = 1.0 - gen.random(z)  # in (0, 1], keeps the log finite
        z = int(np.floor(np.log(u) / logq).sum())
        sizes.append(z)
        total += z
        if z == 0:
            extinct = True
    return GWRun(offspring_mean=1.0 / lam, generation_sizes=sizes,
                 extinct=extinct, capped=capped)


@dataclass(frozen=True)
class GWBatch:
    lam: float
    runs: int
    extinct_frac: float
    capped_frac: float

    def to_json_str(self) -> str:
        return json.dumps({"lambda": self.lam, "runs": self.runs,
                           "extinct_frac": self.extinct_frac,
                           "capped_frac": self.capped_frac}, sort_keys=True)


def gw_batch(lam: float, runs: int, max_gen: int = 100_000,
             progeny_cap: int = 1_000_000, master: int = 0) -> GWBatch:
    """Extinction and cap frequencies over independent substreams (master, i)."""
    extinct = 0
    capped = 0
    for i in range(runs):
        r = gw_simulate(lam, max_gen, progeny_cap, Seed(master, i))
        extinct += r.extinct
        capped += r.capped
    return GWBatch(lam=lam, runs=runs, extinct_frac=extinct / runs,
                   capped_frac=capped / runs)


def extinction_probability(lam: float) -> float:
    """Smallest fixed point of the offspring generating function: min(1, lam)."""
    if lam <= 0:
        raise ValueError(f"lambda must be > 0, got {lam}")
    return min(1.0, lam)


def chi_square_gof(counts: np.ndarray, pmf, min_expected: float = 5.0):
    """Chi-square goodness of fit of observed degree counts against a pmf.

    pmf(k) must give the model probability of each k.  Bins are merged from
    the right until every expected count reaches min_expected; the final bin
    absorbs the model's tail mass, so probabilities sum to one.  Returns
    (statistic, dof, p_value).
    """
    counts = np.asarray(counts, dtype=float)
    n = counts.sum()
    if n <= 0:
        raise ValueError("empty histogram")
    kmax = len(counts) - 1
    probs = np.array([pmf(k) for k in range(kmax + 1)], dtype=float)
    tail = max(0.0, 1.0 - probs.sum())
    obs = list(counts) + [0.0]
    exp = list(n * probs) + [n * tail]
    # merge the tail leftward until the last bin is heavy enough
    while len(exp) > 2 and exp[-1] < min_expected:
        e, o = exp.pop(), obs.pop()
        exp[-1] += e
        obs[-1] += o
    # then merge any light interior bins into their right neighbour
    i = len(exp) - 2
    while i >= 0:
        if exp[i] < min_expected and len(exp) > 2:
            e, o = exp.pop(i), obs.pop(i)
            exp[i] += e  # the old right neighbour now sits at i
            obs[i] += o
        i -= 1
    obs_a, exp_a = np.array(obs), np.array(exp)
    stat = float((((obs_a - exp_a) ** 2) / exp_a).sum())
    dof = len(exp_a) - 1
    return stat, dof, float(_chi2.sf(stat, dof))
