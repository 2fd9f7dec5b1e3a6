"""Replace-the-distance pipelines: query under a cheap distance with an
adjusted radius, verify the candidates under the exact distance, and account
for the false hits.

An `ApproxMeasure` pairs the cheap distance d with an affine radius modulus
delta(eps) = s*eps + c whose guarantee is

    rho(x, y) < eps  =>  d(x, y) < delta(eps)   for every eps > 0,

equivalent (as eps decreases to rho) to d <= s*rho + c pairwise.  The audit
samples that pairwise inequality and the pipeline refuses to run on an
approximation that fails it, so range results stay exact: the modulus rules
out false dismissals and step-3 verification removes the false hits.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .index import IndexTree
from .metrics import ABS_TOL, DissimilarityMeasure, EuclideanDistance, ProjectedEuclidean
from .workloads import Workload


class ModulusAuditError(ValueError):
    """The sampled modulus guarantee failed; the pipeline refuses to run."""


@dataclass(frozen=True)
class RadiusModulus:
    slope: float
    intercept: float = 0.0

    def __post_init__(self):
        if self.slope < 0 or self.intercept < 0:
            raise ValueError("modulus needs slope >= 0 and intercept >= 0")

    def __call__(self, eps: float) -> float:
        return self.slope * eps + self.intercept


@dataclass(frozen=True)
class AuditResult:
    passed: bool
    pairs_checked: int
    witness: Optional[tuple] = None  # ((x, y), rho, d, bound)


@dataclass
class ApproxMeasure:
    """A cheap distance plus its radius modulus.  Constructors are
    responsible for the guarantee; `audit` screens it on samples."""

    fast: DissimilarityMeasure
    modulus: RadiusModulus
    _audited: dict = field(default_factory=dict, repr=False)

    def audit(self, workload: Workload, n_pairs: int = 10_000,
              seed: int = 0, force: bool = False) -> AuditResult:
        """Screen d <= s*rho + c on sampled query pairs, plus every dataset
        pair when the dataset is small.  Failures carry a witness."""
        key = id(workload)
        if not force and key in self._audited:
            return self._audited[key]
        rho = workload.measure
        pairs: list[tuple] = []
        queries = workload.sample_queries(np.random.default_rng(seed), 2 * n_pairs)
        pairs.extend(zip(queries[:n_pairs], queries[n_pairs:]))
        if len(workload.dataset) <= 200:
            data = workload.dataset
            pairs.extend((data[i], data[j])
                         for i in range(len(data)) for j in range(i + 1, len(data)))
        result = AuditResult(passed=True, pairs_checked=len(pairs))
        for x, y in pairs:
            dv = self.fast.distance(x, y)
            rv = rho.distance(x, y)
            bound = self.modulus.slope * rv + self.modulus.intercept
            if dv > bound + ABS_TOL:
                result = AuditResult(False, len(pairs), ((x, y), rv, dv, bound))
                break
        self._audited[key] = result
        return result


@dataclass
class PipelineStats:
    candidates: int = 0
    verified_hits: int = 0
    false_hits: int = 0
    fast_evaluations: int = 0
    exact_evaluations: int = 0
    candidate_source: str = "linear"  # linear | index

    @property
    def false_hit_rate(self) -> float:
        return self.false_hits / max(self.candidates, 1)


def project_measure(base: EuclideanDistance, coords: Sequence[int]) -> ApproxMeasure:
    """Coordinate-projection search: d is the Euclidean distance of the
    projected tuples, a contraction of rho, so delta(eps) = eps."""
    if not isinstance(base, EuclideanDistance):
        raise TypeError("projection prefilter needs a Euclidean base measure")
    return ApproxMeasure(ProjectedEuclidean(base.arity, coords), RadiusModulus(1.0, 0.0))


def exact_as_approx(measure: DissimilarityMeasure) -> ApproxMeasure:
    """The trivial pipeline: d = rho with delta(eps) = eps (zero false hits)."""
    return ApproxMeasure(measure, RadiusModulus(1.0, 0.0))


def filtered_range_query(workload: Workload, approx: ApproxMeasure, centre,
                         epsilon: float, approx_index: Optional[IndexTree] = None,
                         audit_seed: int = 0) -> tuple[np.ndarray, PipelineStats]:
    """Exact range query through the three-step pipeline.

    Candidates come from a delta-range query under the cheap distance
    (through `approx_index` when one over d is supplied, else a linear
    scan), then each candidate is verified under rho.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    audit = approx.audit(workload, seed=audit_seed)
    if not audit.passed:
        raise ModulusAuditError(f"modulus audit failed with witness {audit.witness}")
    delta = approx.modulus(epsilon)
    stats = PipelineStats()

    if approx_index is not None:
        if approx_index.measure is not approx.fast:
            raise ValueError("approx_index must be built over the approximation's distance")
        cand, qstats = approx_index.range_query(centre, delta)
        stats.fast_evaluations = qstats.distance_evaluations
        stats.candidate_source = "index"
    else:
        d = approx.fast.batch_to(workload.dataset, centre)
        stats.fast_evaluations = len(workload.dataset)
        cand = np.nonzero(d < delta)[0]
        stats.candidate_source = "linear"

    stats.candidates = len(cand)
    if len(cand):
        exact = workload.measure.batch_to([workload.dataset[i] for i in cand], centre)
        stats.exact_evaluations = len(cand)
        keep = exact < epsilon
        result = np.sort(np.asarray(cand)[keep])
        stats.verified_hits = int(keep.sum())
    else:
        result = np.empty(0, dtype=np.int64)
    stats.false_hits = stats.candidates - stats.verified_hits
    return result, stats


@dataclass
class FalseHitProfile:
    epsilon: float
    delta: float
    rates: np.ndarray
    worst_rate: float
    worst_query_index: int
    worst_query: object
    records: list[dict]


def false_hit_profile(workload: Workload, approx: ApproxMeasure, epsilon: float,
                      query_count: int, seed: int = 0) -> FalseHitProfile:
    """Empirical distribution of the false-hit rate over sampled queries.

    Deterministic under a fixed seed; the worst query is reported along with
    one structured record per query for the report writer.
    """
    queries = workload.sample_queries(np.random.default_rng(seed), query_count)
    delta = approx.modulus(epsilon)
    rates = np.zeros(query_count)
    records = []
    for qi, q in enumerate(queries):
        _, stats = filtered_range_query(workload, approx, q, epsilon,
                                        audit_seed=seed)
        rates[qi] = stats.false_hit_rate
        records.append({
            "query_id": qi,
            "epsilon": epsilon,
            "delta": delta,
            "candidates": stats.candidates,
            "false_hits": stats.false_hits,
            "rate": rates[qi],
        })
    worst = int(np.argmax(rates))
    return FalseHitProfile(epsilon=epsilon, delta=delta, rates=rates,
                           worst_rate=float(rates[worst]), worst_query_index=worst,
                           worst_query=queries[worst], records=records)
