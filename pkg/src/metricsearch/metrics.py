"""Points, dissimilarity measures, metric validation, and metric transforms.

Points are plain Python values: coordinate tuples for vector domains, `str`
for symbol domains, `Histogram` objects for distribution domains.  A
`DissimilarityMeasure` knows which points it accepts, evaluates pairs, and
can batch-evaluate a dataset against one query through the kernel backend.

Real-valued comparisons use absolute tolerance 1e-9 (exact for
integer-valued measures) throughout the package.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import kernels

ABS_TOL = 1e-9
REL_TOL = 1e-12


class DomainMismatchError(ValueError):
    """A point is incompatible with a measure's domain metadata."""


class TransformError(ValueError):
    """A transform parameterization violates F(0)=0 / monotone / concave."""


class DissimilarityMeasure:
    """A named, evaluable distance (or pseudometric) on a domain of points.

    Subclasses set `kind`, implement `_dist` and `check_point`, and may
    override `batch_to` for vectorized evaluation.  Measures are immutable
    after construction; evaluation is pure and safe for concurrent use.
    """

    kind: str = "abstract"
    is_pseudo: bool = False
    integer_valued: bool = False

    def check_point(self, p) -> None:
        raise NotImplementedError

    def _dist(self, x, y) -> float:
        raise NotImplementedError

    def distance(self, x, y) -> float:
        self.check_point(x)
        self.check_point(y)
        return self._dist(x, y)

    __call__ = distance

    def batch_to(self, points: Sequence, q) -> np.ndarray:
        """Distances from every point of `points` to `q` (one array)."""
        self.check_point(q)
        return np.array([self._dist(p, q) for p in points], dtype=np.float64)

    def signature(self) -> str:
        """Canonical description used by index persistence to detect mismatch."""
        return self.kind

    def __repr__(self) -> str:
        return f"<{type(self).__name__} {self.signature()}>"


def _as_coords(p, arity: int) -> np.ndarray:
    a = np.asarray(p, dtype=np.float64)
    if a.ndim != 1 or len(a) != arity:
        raise DomainMismatchError(f"expected a coordinate tuple of arity {arity}, got {p!r}")
    return a


class EuclideanDistance(DissimilarityMeasure):
    kind = "euclidean"

    def __init__(self, arity: int):
        if arity < 1:
            raise ValueError("arity must be positive")
        self.arity = int(arity)

    def check_point(self, p) -> None:
        _as_coords(p, self.arity)

    def _dist(self, x, y) -> float:
        return math.dist(x, y)

    def batch_to(self, points, q) -> np.ndarray:
        self.check_point(q)
        x = np.asarray(points, dtype=np.float64).reshape(len(points), self.arity)
        return kernels.euclidean_to_many(x, np.asarray(q, dtype=np.float64))

    def signature(self) -> str:
        return f"euclidean:{self.arity}"


class L1Distance(DissimilarityMeasure):
    kind = "l1"

    def __init__(self, arity: int):
        if arity < 1:
            raise ValueError("arity must be positive")
        self.arity = int(arity)

    def check_point(self, p) -> None:
        _as_coords(p, self.arity)

    def _dist(self, x, y) -> float:
        return float(sum(abs(a - b) for a, b in zip(x, y)))

    def batch_to(self, points, q) -> np.ndarray:
        self.check_point(q)
        x = np.asarray(points, dtype=np.float64).reshape(len(points), self.arity)
        return kernels.l1_to_many(x, np.asarray(q, dtype=np.float64))

    def signature(self) -> str:
        return f"l1:{self.arity}"


class HammingDistance(DissimilarityMeasure):
    """Positionwise mismatch count on equal-length strings."""

    kind = "hamming"
    integer_valued = True

    def __init__(self, length: int, alphabet: Optional[str] = None):
        if length < 1:
            raise ValueError("length must be positive")
        self.length = int(length)
        self.alphabet = alphabet

    def check_point(self, p) -> None:
        if not isinstance(p, str) or len(p) != self.length:
            raise DomainMismatchError(f"expected a string of length {self.length}, got {p!r}")
        if self.alphabet is not None and any(c not in self.alphabet for c in p):
            raise DomainMismatchError(f"string {p!r} uses symbols outside {self.alphabet!r}")

    def _dist(self, x, y) -> float:
        return sum(a != b for a, b in zip(x, y))

    def batch_to(self, points, q) -> np.ndarray:
        self.check_point(q)
        enc = np.array([[ord(c) for c in s] for s in points], dtype=np.uint32)
        qe = np.array([ord(c) for c in q], dtype=np.uint32)
        return kernels.hamming_to_many(enc, qe).astype(np.float64)

    def signature(self) -> str:
        return f"hamming:{self.length}"


class EditDistance(DissimilarityMeasure):
    """String edit distance (insert / delete / substitute), unit costs by
    default.  Custom costs must keep insert == delete (symmetry) and
    substitute <= insert + delete (triangle inequality)."""

    kind = "edit"

    def __init__(self, alphabet: Optional[str] = None, insert_cost: float = 1.0,
                 delete_cost: float = 1.0, substitute_cost: float = 1.0):
        if min(insert_cost, delete_cost, substitute_cost) <= 0:
            raise ValueError("edit costs must be positive")
        if insert_cost != delete_cost:
            raise ValueError("insert and delete costs must match (symmetry)")
        if substitute_cost > insert_cost + delete_cost:
            raise ValueError("substitute cost above insert+delete breaks the triangle inequality")
        self.alphabet = alphabet
        self.insert_cost = float(insert_cost)
        self.delete_cost = float(delete_cost)
        self.substitute_cost = float(substitute_cost)
        self._unit = (insert_cost, delete_cost, substitute_cost) == (1.0, 1.0, 1.0)
        self.integer_valued = all(
            float(c).is_integer() for c in (insert_cost, delete_cost, substitute_cost))

    def check_point(self, p) -> None:
        if not isinstance(p, str):
            raise DomainMismatchError(f"expected a string, got {p!r}")
        if self.alphabet is not None and any(c not in self.alphabet for c in p):
            raise DomainMismatchError(f"string {p!r} uses symbols outside {self.alphabet!r}")

    def _weighted(self, x: str, y: str) -> float:
        prev = [j * self.insert_cost for j in range(len(y) + 1)]
        for i in range(1, len(x) + 1):
            cur = [i * self.delete_cost] + [0.0] * len(y)
            for j in range(1, len(y) + 1):
                sub = prev[j - 1] + (0.0 if x[i - 1] == y[j - 1] else self.substitute_cost)
                cur[j] = min(prev[j] + self.delete_cost, cur[j - 1] + self.insert_cost, sub)
            prev = cur
        return prev[len(y)]

    def _dist(self, x, y) -> float:
        if self._unit:
            return kernels.levenshtein(x, y)
        return self._weighted(x, y)

    def batch_to(self, points, q) -> np.ndarray:
        self.check_point(q)
        if self._unit:
            return kernels.levenshtein_many(list(points), q).astype(np.float64)
        return np.array([self._weighted(p, q) for p in points])

    def signature(self) -> str:
        if self._unit:
            return "edit"
        return f"edit:{self.insert_cost:g},{self.delete_cost:g},{self.substitute_cost:g}"


class ProjectedEuclidean(DissimilarityMeasure):
    """Euclidean distance of a coordinate-subset projection.

    A contraction of the full Euclidean distance: d <= rho for every pair.
    Coordinates are 0-based.
    """

    kind = "projected"
    is_pseudo = True  # distinct points can project together

    def __init__(self, arity: int, coords: Sequence[int]):
        coords = sorted(set(int(c) for c in coords))
        if not coords:
            raise ValueError("projection needs a nonempty coordinate set")
        if coords[0] < 0 or coords[-1] >= arity:
            raise ValueError(f"coordinates out of range for arity {arity}")
        self.arity = int(arity)
        self.coords = tuple(coords)

    def check_point(self, p) -> None:
        _as_coords(p, self.arity)

    def _dist(self, x, y) -> float:
        return math.sqrt(sum((x[c] - y[c]) ** 2 for c in self.coords))

    def batch_to(self, points, q) -> np.ndarray:
        self.check_point(q)
        x = np.asarray(points, dtype=np.float64).reshape(len(points), self.arity)
        qa = np.asarray(q, dtype=np.float64)
        idx = list(self.coords)
        return kernels.euclidean_to_many(np.ascontiguousarray(x[:, idx]), qa[idx])

    def signature(self) -> str:
        return f"projected:euclidean:{self.arity}:{','.join(map(str, self.coords))}"


class CallableMeasure(DissimilarityMeasure):
    """Wraps an arbitrary pair function; used for ad-hoc and test measures."""

    def __init__(self, fn: Callable[[object, object], float], kind: str = "custom",
                 is_pseudo: bool = False, integer_valued: bool = False):
        self.fn = fn
        self.kind = kind
        self.is_pseudo = is_pseudo
        self.integer_valued = integer_valued

    def check_point(self, p) -> None:
        pass

    def _dist(self, x, y) -> float:
        return float(self.fn(x, y))

    def signature(self) -> str:
        return f"custom:{self.kind}"


# ---------------------------------------------------------------------------
# metric transforms

_TRANSFORM_FAMILIES = ("identity", "power", "log1p", "bounded", "cap")


@dataclass(frozen=True)
class TransformFn:
    """A concave nondecreasing function with F(0) = 0, applied to distances.

    Families: identity; power(p) = t**p for 0 < p <= 1; log1p = log(1+t);
    bounded = t/(1+t); cap(c) = min(t, c).  Construction validates the
    parameter range and re-checks F(0)=0, monotonicity, and midpoint
    concavity on a geometric grid (closed-form families, user parameters).
    """

    family: str
    param: Optional[float] = None

    def __post_init__(self):
        if self.family not in _TRANSFORM_FAMILIES:
            raise TransformError(f"unknown transform family {self.family!r}")
        if self.family == "power":
            if self.param is None or not (0.0 < self.param <= 1.0):
                raise TransformError("power transform needs 0 < p <= 1")
        elif self.family == "cap":
            if self.param is None or self.param <= 0.0:
                raise TransformError("cap transform needs c > 0")
        elif self.param is not None:
            raise TransformError(f"{self.family} transform takes no parameter")
        self.validate_on_grid()

    def __call__(self, t):
        t = np.asarray(t, dtype=np.float64)
        if self.family == "identity":
            out = t
        elif self.family == "power":
            out = np.power(t, self.param)
        elif self.family == "log1p":
            out = np.log1p(t)
        elif self.family == "bounded":
            out = t / (1.0 + t)
        else:  # cap
            out = np.minimum(t, self.param)
        return float(out) if out.ndim == 0 else out

    def validate_on_grid(self, upper: float = 10.0, size: int = 1024) -> None:
        """Check F(0)=0, nondecreasing, and midpoint concavity on [0, upper]."""
        if abs(float(self(0.0))) > ABS_TOL:
            raise TransformError(f"{self.describe()} has F(0) != 0")
        grid = np.geomspace(upper / size, upper, size)
        grid = np.concatenate(([0.0], grid))
        vals = self(grid)
        if np.any(np.diff(vals) < -ABS_TOL):
            raise TransformError(f"{self.describe()} is not nondecreasing on [0, {upper}]")
        mid = self((grid[:-1] + grid[1:]) / 2.0)
        if np.any(mid < (vals[:-1] + vals[1:]) / 2.0 - ABS_TOL):
            raise TransformError(f"{self.describe()} fails midpoint concavity on [0, {upper}]")

    def describe(self) -> str:
        return self.family if self.param is None else f"{self.family}:{self.param:g}"


class TransformedMeasure(DissimilarityMeasure):
    """F(rho) for a base measure rho and a TransformFn F."""

    kind = "transformed"

    def __init__(self, base: DissimilarityMeasure, transform: TransformFn):
        self.base = base
        self.transform = transform
        self.is_pseudo = base.is_pseudo

    def check_point(self, p) -> None:
        self.base.check_point(p)

    def _dist(self, x, y) -> float:
        return float(self.transform(self.base._dist(x, y)))

    def batch_to(self, points, q) -> np.ndarray:
        return self.transform(self.base.batch_to(points, q))

    def signature(self) -> str:
        return f"transformed({self.base.signature()},{self.transform.describe()})"


def metric_transform(measure: DissimilarityMeasure, transform: TransformFn,
                     sample: Optional[Sequence] = None) -> TransformedMeasure:
    """Replace rho by F(rho).  The result is a metric whenever rho is.

    When `sample` is given, the transform is re-validated on a grid spanning
    ten times the largest observed sample distance.
    """
    if sample is not None and len(sample) >= 2:
        top = max(
            measure.distance(sample[i], sample[j])
            for i in range(len(sample))
            for j in range(i + 1, len(sample))
        )
        if top > 0:
            transform.validate_on_grid(upper=10.0 * top)
    return TransformedMeasure(measure, transform)


# ---------------------------------------------------------------------------
# validation

@dataclass(frozen=True)
class AxiomViolation:
    axiom: str  # nonnegativity | symmetry | zero-diagonal | identity | triangle
    witness: tuple
    values: tuple

    def __str__(self) -> str:
        return f"{self.axiom} violated at {self.witness}: {self.values}"


@dataclass
class MetricValidationReport:
    passed: bool
    violations: list[AxiomViolation] = field(default_factory=list)
    pairs_checked: int = 0
    triples_checked: int = 0


def validate_metric(measure: DissimilarityMeasure, sample: Sequence,
                    pseudo_allowed: Optional[bool] = None,
                    max_violations: int = 8) -> MetricValidationReport:
    """Check the metric axioms on every pair and triple of `sample`.

    `pseudo_allowed` skips identity-of-indiscernibles (defaults to the
    measure's own flag).  Integer-valued measures are compared exactly,
    real-valued ones within tolerance.
    """
    if len(sample) < 3:
        raise ValueError("metric validation needs a sample of at least 3 points")
    if pseudo_allowed is None:
        pseudo_allowed = measure.is_pseudo
    tol = 0.0 if measure.integer_valued else ABS_TOL

    n = len(sample)
    report = MetricValidationReport(passed=True)

    def record(v: AxiomViolation):
        report.passed = False
        if len(report.violations) < max_violations:
            report.violations.append(v)

    d = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            d[i, j] = measure.distance(sample[i], sample[j])
    report.pairs_checked = n * n

    for i in range(n):
        if abs(d[i, i]) > tol:
            record(AxiomViolation("zero-diagonal", (i,), (d[i, i],)))
        for j in range(i + 1, n):
            if d[i, j] < -tol:
                record(AxiomViolation("nonnegativity", (i, j), (d[i, j],)))
            if abs(d[i, j] - d[j, i]) > tol:
                record(AxiomViolation("symmetry", (i, j), (d[i, j], d[j, i])))
            if not pseudo_allowed and d[i, j] <= tol and sample[i] != sample[j]:
                record(AxiomViolation("identity", (i, j), (d[i, j],)))

    for i in range(n):
        for j in range(n):
            if j == i:
                continue
            for k in range(n):
                if k == i or k == j:
                    continue
                report.triples_checked += 1
                if d[i, k] > d[i, j] + d[j, k] + tol:
                    record(AxiomViolation("triangle", (i, j, k), (d[i, k], d[i, j], d[j, k])))
    return report


@dataclass(frozen=True)
class LipschitzViolation:
    pair: tuple
    gap: float  # |f(x)-f(y)|
    distance: float


def check_one_lipschitz(f: Callable, measure: DissimilarityMeasure,
                        pairs: Sequence[tuple], tol: float = ABS_TOL) -> Optional[LipschitzViolation]:
    """Return the first pair with |f(x)-f(y)| > rho(x,y) + tol, else None."""
    for x, y in pairs:
        gap = abs(float(f(x)) - float(f(y)))
        d = measure.distance(x, y)
        if gap > d + tol:
            return LipschitzViolation((x, y), gap, d)
    return None
