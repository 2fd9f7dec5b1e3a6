"""Empirical geometry of probability metric spaces.

Three estimators for the concentration function alpha(eps) = 1 - inf
{ mass of the open eps-neighbourhood of A : mass(A) >= 1/2 }:

* ``exact-enumeration`` - the true infimum on finite spaces of at most 24
  points, by scanning every inclusion-minimal admissible subset.
* ``ball-family`` - the infimum restricted to median-radius metric balls,
  with neighbourhood masses computed exactly from the distance matrix.
* ``lipschitz-family`` - the infimum restricted to median sublevel sets of
  1-Lipschitz probe functions, with neighbourhood masses bounded through
  the probes themselves (no pairwise distances needed).

The family methods restrict the infimum to a declared family, so they are
LOWER bounds on alpha; every estimate carries its method tag.  Covering
numbers come with a greedy farthest-point upper bound and an exact search
for small instances, and the blow-up experiment reports the three measured
quantities of the cheap-distance story side by side without asserting any
composed inequality.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np

from . import kernels
from .metrics import DissimilarityMeasure, check_one_lipschitz
from .prefilter import ApproxMeasure

ENUMERATION_LIMIT = 24
EXACT_COVER_LIMIT = 20


class EnumerationLimitError(ValueError):
    """Exact enumeration requested on a space above the 24-point limit."""


class LipschitzProbeError(ValueError):
    """A claimed 1-Lipschitz function stretched a sampled pair."""


@dataclass
class FiniteSpace:
    """A finite weighted metric space; weights sum to one."""

    points: list
    weights: np.ndarray
    measure: DissimilarityMeasure
    _dist: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        if len(w) != len(self.points):
            raise ValueError("one weight per point required")
        if w.min(initial=0.0) < 0:
            raise ValueError("weights must be nonnegative")
        if abs(w.sum() - 1.0) > 1e-9:
            raise ValueError(f"weights sum to {w.sum()!r}, not 1")
        self.weights = w

    @classmethod
    def uniform(cls, points: Sequence, measure: DissimilarityMeasure) -> "FiniteSpace":
        n = len(points)
        return cls(list(points), np.full(n, 1.0 / n), measure)

    @property
    def distance_matrix(self) -> np.ndarray:
        if self._dist is None:
            n = len(self.points)
            d = np.empty((n, n))
            for i in range(n):
                d[i] = self.measure.batch_to(self.points, self.points[i])
            self._dist = d
        return self._dist

    def diameter(self) -> float:
        return float(self.distance_matrix.max(initial=0.0))

    def __len__(self) -> int:
        return len(self.points)


@dataclass
class SampledSpace:
    """A probability metric space given by a seeded sampler and a measure."""

    sampler: Callable[[np.random.Generator, int], list]
    measure: DissimilarityMeasure

    def empirical(self, count: int, seed: int = 0) -> FiniteSpace:
        rng = np.random.default_rng(np.random.SeedSequence(seed).spawn(1)[0])
        return FiniteSpace.uniform(self.sampler(rng, count), self.measure)


Space = Union[FiniteSpace, SampledSpace]


def hamming_cube_space(bits: int) -> FiniteSpace:
    """{0,1}^bits with the unnormalized Hamming metric and uniform mass."""
    from .metrics import HammingDistance

    points = ["".join(p) for p in itertools.product("01", repeat=bits)]
    return FiniteSpace.uniform(points, HammingDistance(bits, "01"))


def default_grid(space: Space, steps: int = 32, sample_count: int = 512,
                 seed: int = 0) -> np.ndarray:
    """32 geometric steps spanning [diameter/100, diameter]."""
    if isinstance(space, FiniteSpace):
        diam = space.diameter()
    else:
        diam = space.empirical(sample_count, seed).diameter()
    if diam <= 0:
        return np.array([1.0])
    return np.geomspace(diam / 100.0, diam, steps)


@dataclass
class ConcentrationEstimate:
    """An empirical alpha(eps) curve on an increasing grid.

    Family methods are lower bounds on the true alpha; the exact method is
    the truth.  alpha(0) = 1/2 by convention.
    """

    grid: np.ndarray
    alpha: np.ndarray
    method: str  # exact-enumeration | ball-family | lipschitz-family
    sample_sizes: dict
    seed: Optional[int] = None

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=np.float64)
        self.alpha = np.asarray(self.alpha, dtype=np.float64)
        if np.any(np.diff(self.grid) <= 0) or self.grid[0] <= 0:
            raise ValueError("grid must be positive and strictly increasing")
        if np.any(np.diff(self.alpha) > 1e-12):
            raise ValueError("alpha must be nonincreasing in eps")
        if self.alpha.min(initial=0.0) < -1e-12 or self.alpha.max(initial=0.0) > 0.5 + 1e-12:
            raise ValueError("alpha values must lie in [0, 1/2]")

    def alpha_at(self, eps: float) -> float:
        """Step lookup: the value at the largest grid point <= eps (an upper
        bound on alpha(eps) since alpha is nonincreasing); 1/2 below the
        grid."""
        if eps <= 0 or eps < self.grid[0]:
            return 0.5
        idx = int(np.searchsorted(self.grid, eps, side="right")) - 1
        return float(self.alpha[idx])


def weighted_median(values: np.ndarray, weights: np.ndarray) -> float:
    """0.5 empirical quantile, lower-midpoint convention on exact-half ties."""
    order = np.argsort(values, kind="stable")
    v = np.asarray(values, dtype=np.float64)[order]
    cum = np.cumsum(np.asarray(weights, dtype=np.float64)[order])
    idx = int(np.searchsorted(cum, 0.5 - 1e-12))
    if abs(cum[idx] - 0.5) <= 1e-12 and idx + 1 < len(v) and v[idx + 1] > v[idx]:
        return float((v[idx] + v[idx + 1]) / 2.0)
    return float(v[idx])


def _ball_family_alpha(space: FiniteSpace, grid: np.ndarray, centre_ids: Sequence[int]) -> np.ndarray:
    d = space.distance_matrix
    w = space.weights
    alpha = np.zeros(len(grid))
    for c in centre_ids:
        dc = d[c]
        radius = weighted_median(dc, w)
        members = dc <= radius + 1e-12
        dist_to_a = d[:, members].min(axis=1)
        masses = (dist_to_a[None, :] < grid[:, None]) @ w
        np.maximum(alpha, 1.0 - masses, out=alpha)
    alpha = np.clip(alpha, 0.0, 0.5)
    alpha[alpha < 1e-12] = 0.0
    return alpha


def _lipschitz_family_alpha(values_per_probe: list[np.ndarray], w: np.ndarray,
                            grid: np.ndarray) -> np.ndarray:
    alpha = np.zeros(len(grid))
    for vals in values_per_probe:
        m = weighted_median(vals, w)
        below = (vals[None, :] < m + grid[:, None]) @ w
        above = (vals[None, :] > m - grid[:, None]) @ w
        np.maximum(alpha, 1.0 - np.minimum(below, above), out=alpha)
    alpha = np.clip(alpha, 0.0, 0.5)
    alpha[alpha < 1e-12] = 0.0
    return alpha


def estimate_concentration(space: Space, grid: Optional[np.ndarray] = None,
                           method: str = "auto", seed: int = 0,
                           sample_count: int = 1024, probe_count: int = 32,
                           probes: Optional[Sequence[Callable]] = None) -> ConcentrationEstimate:
    """Estimate the concentration function on the grid.

    `probes` (1-Lipschitz callables on points) extend the lipschitz-family;
    distance functions to sampled centres are always included.  Identical
    seeds produce identical estimates bit for bit.
    """
    if grid is None:
        grid = default_grid(space, seed=seed)
    grid = np.asarray(grid, dtype=np.float64)

    if method == "auto":
        if isinstance(space, FiniteSpace):
            method = "exact-enumeration" if len(space) <= ENUMERATION_LIMIT else "ball-family"
        else:
            method = "lipschitz-family"

    if method == "exact-enumeration":
        if not isinstance(space, FiniteSpace):
            raise EnumerationLimitError("exact enumeration needs a finite space")
        if len(space) > ENUMERATION_LIMIT:
            raise EnumerationLimitError(
                f"exact enumeration is limited to {ENUMERATION_LIMIT} points, got {len(space)}")
        alpha = kernels.exact_alpha_enumeration(space.distance_matrix,
                                                space.weights, grid)
        return ConcentrationEstimate(grid, alpha, "exact-enumeration",
                                     {"points": len(space)}, seed)

    finite = space if isinstance(space, FiniteSpace) else space.empirical(sample_count, seed)
    rng = np.random.default_rng(np.random.SeedSequence(seed).spawn(2)[1])

    if method == "ball-family":
        if len(finite) <= 512:
            centres = list(range(len(finite)))
        else:
            centres = sorted(rng.choice(len(finite), size=probe_count, replace=False).tolist())
        alpha = _ball_family_alpha(finite, grid, centres)
        sizes = {"points": len(finite), "centres": len(centres)}
        return ConcentrationEstimate(grid, alpha, "ball-family", sizes, seed)

    if method == "lipschitz-family":
        w = finite.weights
        values = []
        centre_ids = rng.choice(len(finite), size=min(probe_count, len(finite)),
                                replace=False)
        for c in sorted(centre_ids.tolist()):
            values.append(finite.measure.batch_to(finite.points, finite.points[c]))
        for g in probes or []:
            values.append(np.array([float(g(p)) for p in finite.points]))
        alpha = _lipschitz_family_alpha(values, w, grid)
        sizes = {"points": len(finite), "probes": len(values)}
        return ConcentrationEstimate(grid, alpha, "lipschitz-family", sizes, seed)

    raise ValueError(f"unknown method {method!r}")


@dataclass
class MedianConcentrationResult:
    median: float
    mass: float            # measured mass of f^-1(M - eps, M + eps)
    bound: float           # 1 - 2 * alpha(eps)
    satisfied: bool
    asserted: bool         # True when alpha was exact (the bound is a theorem)


def median_concentration_check(space: Space, f: Callable, epsilon: float,
                               alpha: ConcentrationEstimate,
                               pair_sample: int = 256, seed: int = 0,
                               sample_count: int = 4096) -> MedianConcentrationResult:
    """Measure how much mass a 1-Lipschitz function keeps near its median
    and compare against 1 - 2*alpha(eps).

    With an exact alpha the inequality is guaranteed; with a family lower
    bound the comparison is reported, not asserted.
    """
    finite = space if isinstance(space, FiniteSpace) else space.empirical(sample_count, seed)
    rng = np.random.default_rng(seed)
    ids = rng.integers(0, len(finite), size=(pair_sample, 2))
    pairs = [(finite.points[i], finite.points[j]) for i, j in ids]
    violation = check_one_lipschitz(f, finite.measure, pairs)
    if violation is not None:
        raise LipschitzProbeError(f"probe is not 1-Lipschitz: {violation}")

    values = np.array([float(f(p)) for p in finite.points])
    m = weighted_median(values, finite.weights)
    inside = (values > m - epsilon) & (values < m + epsilon)
    mass = float(finite.weights[inside].sum())
    bound = 1.0 - 2.0 * alpha.alpha_at(epsilon)
    return MedianConcentrationResult(
        median=m, mass=mass, bound=bound,
        satisfied=mass >= bound - 1e-12,
        asserted=alpha.method == "exact-enumeration",
    )


# ---------------------------------------------------------------------------
# covering numbers

@dataclass
class CoverReport:
    epsilon: float
    n_balls: int
    entropy: float  # log2(n_balls)
    method: str     # greedy-upper | exact-small
    centers: list[int]


def _greedy_cover(d: np.ndarray, epsilon: float) -> list[int]:
    n = d.shape[0]
    centers = [0]
    nearest = d[0].copy()
    while nearest.max(initial=0.0) >= epsilon:
        c = int(np.argmax(nearest))
        centers.append(c)
        np.minimum(nearest, d[c], out=nearest)
    return centers


def covering_number(points: Sequence, measure: DissimilarityMeasure, epsilon: float,
                    method: str = "auto", search_budget: int = 2_000_000) -> CoverReport:
    """Minimal number of open eps-balls (centred at points) covering the set.

    Greedy farthest-point gives the upper bound; an exact search proves
    minimality when the point count (<= 20) or the combination budget
    allows, and is skipped otherwise.
    """
    n = len(points)
    if n == 0:
        raise ValueError("covering_number needs a nonempty point set")
    d = np.empty((n, n))
    for i in range(n):
        d[i] = measure.batch_to(points, points[i])

    greedy = _greedy_cover(d, epsilon)
    n_greedy = len(greedy)
    if method not in ("auto", "exact", "greedy"):
        raise ValueError(f"unknown method {method!r}")

    if method != "greedy":
        ball = []
        for c in range(n):
            mask = 0
            for x in np.nonzero(d[c] < epsilon)[0].tolist():
                mask |= 1 << x
            ball.append(mask)
        full = (1 << n) - 1
        affordable = n <= EXACT_COVER_LIMIT or sum(
            math.comb(n, m) for m in range(1, n_greedy)) <= search_budget
        if affordable:
            for m in range(1, n_greedy):
                found = None
                for combo in itertools.combinations(range(n), m):
                    mask = 0
                    for c in combo:
                        mask |= ball[c]
                    if mask == full:
                        found = list(combo)
                        break
                if found is not None:
                    return CoverReport(epsilon, m, math.log2(m), "exact-small", found)
            return CoverReport(epsilon, n_greedy, math.log2(n_greedy),
                               "exact-small", greedy)
        if method == "exact":
            raise ValueError(f"exact cover search needs <= {EXACT_COVER_LIMIT} points "
                             "or a larger search budget")

    return CoverReport(epsilon, n_greedy, math.log2(n_greedy), "greedy-upper", greedy)


# ---------------------------------------------------------------------------
# blow-up experiment

class BlowupAuditError(ValueError):
    """The hypothesis (rho < eps/3) => (d < delta/3) failed on a sample."""


@dataclass
class BlowupReport:
    epsilon: float
    delta: float
    worst_mass: float           # largest mu(O_delta(x*)) under d over sampled centres
    worst_query_index: int
    masses: np.ndarray
    cover: CoverReport          # of (Omega, d) at eps/3
    alpha: ConcentrationEstimate  # of (Omega, rho)


def blowup_experiment(space: Space, rho: Optional[DissimilarityMeasure],
                      approx: ApproxMeasure, epsilon: float, delta: float,
                      query_count: int = 64, audit_pairs: int = 2000,
                      seed: int = 0, sample_count: int = 1024) -> BlowupReport:
    """Probe the cheap-distance blow-up: how much mass a delta-ball under d
    captures, next to the covering number of (Omega, d) at eps/3 and the
    concentration estimate of (Omega, rho).

    The printed composition of these quantities in the source inequality is
    ambiguous, so the three are reported side by side and nothing further
    is asserted.
    """
    finite = space if isinstance(space, FiniteSpace) else space.empirical(sample_count, seed)
    rho = rho or finite.measure
    d = approx.fast

    rng = np.random.default_rng(seed)
    ids = rng.integers(0, len(finite), size=(audit_pairs, 2))
    for i, j in ids:
        x, y = finite.points[int(i)], finite.points[int(j)]
        if rho.distance(x, y) < epsilon / 3.0 and d.distance(x, y) >= delta / 3.0:
            raise BlowupAuditError(
                f"hypothesis failed on pair ({i}, {j}): rho={rho.distance(x, y):g}, "
                f"d={d.distance(x, y):g}")

    w = finite.weights
    if query_count >= len(finite):
        centres = list(range(len(finite)))
    else:
        centres = sorted(rng.choice(len(finite), size=query_count, replace=False).tolist())
    masses = np.empty(len(centres))
    for qi, c in enumerate(centres):
        dc = d.batch_to(finite.points, finite.points[c])
        masses[qi] = float(w[dc < delta].sum())
    worst = int(np.argmax(masses))

    cover = covering_number(finite.points, d, epsilon / 3.0)
    alpha = estimate_concentration(
        FiniteSpace(finite.points, w, rho), method="auto", seed=seed)
    return BlowupReport(epsilon=epsilon, delta=delta,
                        worst_mass=float(masses[worst]),
                        worst_query_index=centres[worst], masses=masses,
                        cover=cover, alpha=alpha)


# ---------------------------------------------------------------------------
# record format (shared with the CLI)

def format_estimate_record(est: ConcentrationEstimate) -> str:
    """Structured text with fields exactly: method, seed, grid, values,
    sample sizes."""
    sizes = " ".join(f"{k}={v}" for k, v in sorted(est.sample_sizes.items()))
    return "\n".join([
        f"method: {est.method}",
        f"seed: {est.seed}",
        "grid: " + " ".join(repr(float(x)) for x in est.grid),
        "values: " + " ".join(repr(float(x)) for x in est.alpha),
        f"sample_sizes: {sizes}",
    ])


def parse_estimate_record(text: str) -> ConcentrationEstimate:
    fields = {}
    for line in text.strip().splitlines():
        key, _, val = line.partition(":")
        fields[key.strip()] = val.strip()
    sizes = dict(kv.split("=") for kv in fields["sample_sizes"].split())
    return ConcentrationEstimate(
        grid=np.array([float(x) for x in fields["grid"].split()]),
        alpha=np.array([float(x) for x in fields["values"].split()]),
        method=fields["method"],
        sample_sizes={k: int(v) for k, v in sizes.items()},
        seed=None if fields["seed"] == "None" else int(fields["seed"]),
    )
