"""Similarity workloads: a measure, a finite dataset, and a query sampler.

The sampler plays the role of the query distribution; everything downstream
(queries, prefilter audits, concentration estimates) draws from it through
an explicit seeded generator so runs are reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .metrics import (
    DissimilarityMeasure,
    EditDistance,
    EuclideanDistance,
    HammingDistance,
    L1Distance,
)

QuerySampler = Callable[[np.random.Generator, int], list]


@dataclass
class Workload:
    """The quadruple: query domain (implied by the measure), dissimilarity
    measure, query distribution, and finite dataset."""

    measure: DissimilarityMeasure
    dataset: list
    query_sampler: QuerySampler
    description: str = ""
    _checked: bool = field(default=False, repr=False)

    def __post_init__(self):
        if not self.dataset:
            raise ValueError("workload dataset must be nonempty")
        for p in self.dataset:
            self.measure.check_point(p)
        self._checked = True

    @property
    def domain(self) -> str:
        """Point kind plus metadata, as carried by the measure."""
        return self.measure.signature()

    def sample_queries(self, seed_or_rng, count: int) -> list:
        rng = np.random.default_rng(seed_or_rng) if not isinstance(
            seed_or_rng, np.random.Generator) else seed_or_rng
        queries = self.query_sampler(rng, count)
        for q in queries:
            self.measure.check_point(q)
        return queries

    def __len__(self) -> int:
        return len(self.dataset)


def _vector_sampler(dim: int, low: float, high: float) -> QuerySampler:
    def sample(rng: np.random.Generator, count: int) -> list:
        pts = rng.uniform(low, high, size=(count, dim))
        return [tuple(p) for p in pts]
    return sample


def uniform_cube_workload(dim: int, n_points: int, seed: int = 0,
                          measure: str = "euclidean",
                          low: float = 0.0, high: float = 1.0) -> Workload:
    """Points and queries uniform over a box, Euclidean or L1 measure."""
    rng = np.random.default_rng(seed)
    data = [tuple(p) for p in rng.uniform(low, high, size=(n_points, dim))]
    m = EuclideanDistance(dim) if measure == "euclidean" else L1Distance(dim)
    return Workload(m, data, _vector_sampler(dim, low, high),
                    description=f"uniform[{low},{high}]^{dim} n={n_points} ({measure})")


def _string_sampler(alphabet: str, lengths: Sequence[int]) -> QuerySampler:
    letters = list(alphabet)
    lengths = list(lengths)

    def sample(rng: np.random.Generator, count: int) -> list:
        out = []
        for _ in range(count):
            k = int(rng.choice(lengths))
            out.append("".join(rng.choice(letters, size=k)))
        return out
    return sample


def hamming_workload(length: int, n_points: int, seed: int = 0,
                     alphabet: str = "01") -> Workload:
    """Fixed-length strings under positionwise mismatch count."""
    rng = np.random.default_rng(seed)
    letters = list(alphabet)
    data = ["".join(rng.choice(letters, size=length)) for _ in range(n_points)]
    return Workload(HammingDistance(length, alphabet), data,
                    _string_sampler(alphabet, [length]),
                    description=f"hamming len={length} |alphabet|={len(alphabet)} n={n_points}")


def edit_workload(n_points: int, seed: int = 0, alphabet: str = "abcd",
                  min_len: int = 3, max_len: int = 10) -> Workload:
    """Variable-length strings under unit-cost edit distance."""
    rng = np.random.default_rng(seed)
    letters = list(alphabet)
    data = ["".join(rng.choice(letters, size=int(rng.integers(min_len, max_len + 1))))
            for _ in range(n_points)]
    return Workload(EditDistance(alphabet), data,
                    _string_sampler(alphabet, range(min_len, max_len + 1)),
                    description=f"edit |alphabet|={len(alphabet)} n={n_points}")
