"""Distances on the convex hull of a finite metric ground space.

Histograms are weight vectors over a `GroundSpace`.  The transport distance
is solved exactly as an uncapacitated min-cost transshipment on the complete
graph over the ground elements, returning the optimal decomposition and a
dual potential that certifies optimality on every call.  Quadratic-form
distances and the square-root-transform Euclidean embedding (the
`1 - d_ij` matrix construction used in colour retrieval) live here too.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Union

import numpy as np

from . import kernels
from .metrics import ABS_TOL, DissimilarityMeasure, DomainMismatchError

DUAL_TOL = 1e-7
WEIGHT_SUM_TOL = 1e-9
RENORMALIZE_TOL = 1e-6
EIGEN_CLIP = 1e-6


class NotEmbeddableError(ValueError):
    """The requested Gram matrix has an eigenvalue below -1e-6."""


class ExpansiveMapError(ValueError):
    """A ground-element map stretched some pair beyond its ground distance."""

    def __init__(self, i: int, j: int, stretched: float, allowed: float):
        self.witness = (i, j)
        super().__init__(
            f"map is expansive on pair ({i}, {j}): |f(ci)-f(cj)| = {stretched:.9g} "
            f"> rho = {allowed:.9g}"
        )


class GroundSpace:
    """A finite metric space: elements plus a validated distance table."""

    def __init__(self, elements: Sequence, distances: np.ndarray, name: str = ""):
        d = np.asarray(distances, dtype=np.float64)
        n = len(elements)
        if d.shape != (n, n):
            raise ValueError(f"distance table shape {d.shape} does not match {n} elements")
        if np.abs(np.diag(d)).max(initial=0.0) > ABS_TOL:
            raise ValueError("distance table has a nonzero diagonal")
        if d.min(initial=0.0) < -ABS_TOL:
            raise ValueError("distance table has negative entries")
        if np.abs(d - d.T).max(initial=0.0) > ABS_TOL:
            raise ValueError("distance table is not symmetric")
        # triangle inequality over all triples, vectorized one mid-point at a time
        for k in range(n):
            if np.any(d > d[:, [k]] + d[[k], :] + ABS_TOL):
                i, j = np.argwhere(d > d[:, [k]] + d[[k], :] + ABS_TOL)[0]
                raise ValueError(
                    f"triangle inequality fails: d({i},{j}) > d({i},{k}) + d({k},{j})"
                )
        self.elements = tuple(elements)
        self.distances = d
        self.distances.setflags(write=False)
        self.name = name or f"ground-{n}"

    @classmethod
    def from_points(cls, coords: Sequence[Sequence[float]],
                    metric: Optional[Callable] = None, name: str = "") -> "GroundSpace":
        pts = np.asarray(coords, dtype=np.float64)
        if metric is None:
            diff = pts[:, None, :] - pts[None, :, :]
            d = np.sqrt((diff * diff).sum(axis=-1))
        else:
            n = len(pts)
            d = np.array([[metric(pts[i], pts[j]) for j in range(n)] for i in range(n)])
        return cls([tuple(p) for p in pts], d, name=name)

    def __len__(self) -> int:
        return len(self.elements)

    def __repr__(self) -> str:
        return f"<GroundSpace {self.name!r} n={len(self)}>"


class Histogram:
    """An element of the convex hull of a ground space: nonnegative weights
    summing to one."""

    __slots__ = ("ground", "weights")

    def __init__(self, ground: GroundSpace, weights):
        w = np.asarray(weights, dtype=np.float64).copy()
        if w.shape != (len(ground),):
            raise ValueError(f"expected {len(ground)} weights, got shape {w.shape}")
        if w.min(initial=0.0) < -ABS_TOL:
            raise ValueError("histogram weights must be nonnegative")
        if abs(w.sum() - 1.0) > WEIGHT_SUM_TOL:
            raise ValueError(f"histogram weights sum to {w.sum()!r}, not 1")
        np.clip(w, 0.0, None, out=w)
        w.setflags(write=False)
        self.ground = ground
        self.weights = w

    @classmethod
    def point_mass(cls, ground: GroundSpace, index: int) -> "Histogram":
        w = np.zeros(len(ground))
        w[index] = 1.0
        return cls(ground, w)

    @classmethod
    def uniform(cls, ground: GroundSpace) -> "Histogram":
        return cls(ground, np.full(len(ground), 1.0 / len(ground)))

    @classmethod
    def from_counts(cls, ground: GroundSpace, counts) -> "Histogram":
        c = np.asarray(counts, dtype=np.float64)
        return cls(ground, c / c.sum())

    def __eq__(self, other) -> bool:
        return (isinstance(other, Histogram) and other.ground is self.ground
                and np.array_equal(other.weights, self.weights))

    def __hash__(self):
        return hash((id(self.ground), self.weights.tobytes()))

    def __repr__(self) -> str:
        return f"<Histogram over {self.ground.name} nnz={np.count_nonzero(self.weights)}>"


@dataclass(frozen=True)
class TransportPlan:
    """A feasible decomposition: flows[i, j] >= 0 moving weight from ground
    element i to ground element j; net divergence matches mu1 - mu2."""

    flows: np.ndarray

    def net_divergence(self) -> np.ndarray:
        return self.flows.sum(axis=1) - self.flows.sum(axis=0)

    def cost(self, ground: GroundSpace) -> float:
        return float((self.flows * ground.distances).sum())


@dataclass(frozen=True)
class TransportSolution:
    cost: float
    plan: TransportPlan
    potentials: np.ndarray  # 1-Lipschitz dual certificate on the ground space


def _same_ground(mu1: Histogram, mu2: Histogram, ground: Optional[GroundSpace]) -> GroundSpace:
    if ground is None:
        ground = mu1.ground
    if mu1.ground is not ground or mu2.ground is not ground:
        raise DomainMismatchError("histograms live over different ground spaces")
    return ground


def kantorovich(mu1: Histogram, mu2: Histogram,
                ground: Optional[GroundSpace] = None) -> TransportSolution:
    """Optimal-transport distance between two histograms, with certificate.

    The plan realizes the cost; the potentials phi satisfy
    |phi_i - phi_j| <= rho(c_i, c_j) and phi . (mu1 - mu2) = cost, which
    proves optimality (checked per call, tolerance 1e-7).

    Ground distances satisfy the triangle inequality, so the optimum is
    attained on direct arcs between the support of mu1 - mu2; the solver
    runs on that support and the dual is extended to the remaining
    elements by inf-convolution.
    """
    ground = _same_ground(mu1, mu2, ground)
    n = len(ground)
    b = mu1.weights - mu2.weights
    support = np.nonzero(np.abs(b) > 1e-15)[0]
    flows = np.zeros((n, n))
    potentials = np.zeros(n)
    if len(support) > 1:
        sub = np.ascontiguousarray(ground.distances[np.ix_(support, support)])
        sub_flows, sub_phi = kernels.solve_transport(sub, b[support])
        flows[np.ix_(support, support)] = sub_flows
        # McShane extension keeps the potential 1-Lipschitz off the support
        potentials = (sub_phi[None, :] + ground.distances[:, support]).min(axis=1)

    cost = float((flows * ground.distances).sum())
    dual = float(potentials @ b)
    if abs(dual - cost) > DUAL_TOL:
        raise RuntimeError(f"transport dual gap {abs(dual - cost):g} exceeds {DUAL_TOL:g}")
    if len(ground) > 1:
        lip = np.abs(potentials[:, None] - potentials[None, :]) - ground.distances
        if lip.max() > DUAL_TOL:
            raise RuntimeError("transport potentials are not 1-Lipschitz")
    div_err = np.abs((flows.sum(axis=1) - flows.sum(axis=0)) - b).max(initial=0.0)
    if div_err > WEIGHT_SUM_TOL:
        raise RuntimeError(f"transport plan divergence error {div_err:g}")
    return TransportSolution(cost=cost, plan=TransportPlan(flows), potentials=potentials)


class KantorovichDistance(DissimilarityMeasure):
    """Transport distance as a measure over Histogram points."""

    kind = "kantorovich"

    def __init__(self, ground: GroundSpace):
        self.ground = ground

    def check_point(self, p) -> None:
        if not isinstance(p, Histogram) or p.ground is not self.ground:
            raise DomainMismatchError(f"expected a histogram over {self.ground.name}")

    def _dist(self, x, y) -> float:
        return kantorovich(x, y, self.ground).cost

    def signature(self) -> str:
        return f"kantorovich:{self.ground.name}"


# ---------------------------------------------------------------------------
# affine extension of nonexpansive ground maps

class AffineExtension:
    """The barycentre extension of a nonexpansive map on ground elements.

    Maps mu to sum_i lambda_i f(c_i); agrees with f on point masses, is
    affine in mu, and is 1-Lipschitz from the transport distance to the
    Euclidean norm of the target.
    """

    def __init__(self, ground: GroundSpace, targets: np.ndarray):
        self.ground = ground
        self.targets = targets

    def __call__(self, mu: Histogram) -> np.ndarray:
        if mu.ground is not self.ground:
            raise DomainMismatchError("histogram is over a different ground space")
        return mu.weights @ self.targets


def extend_map(f: Union[Callable, Sequence], ground: GroundSpace) -> AffineExtension:
    """Extend a map on ground elements to histograms; reject expansive maps.

    `f` is a callable on ground elements or a sequence of target coordinates,
    one per element.  Nonexpansiveness (Euclidean target norm) is checked on
    every ground pair; the first stretched pair is reported.
    """
    if callable(f):
        targets = np.asarray([np.atleast_1d(np.asarray(f(c), dtype=np.float64))
                              for c in ground.elements])
    else:
        targets = np.asarray(f, dtype=np.float64)
        if targets.ndim == 1:
            targets = targets[:, None]
    if len(targets) != len(ground):
        raise ValueError("need one target per ground element")
    diff = targets[:, None, :] - targets[None, :, :]
    norms = np.sqrt((diff * diff).sum(axis=-1))
    gap = norms - ground.distances
    if gap.max(initial=0.0) > ABS_TOL:
        i, j = np.unravel_index(np.argmax(gap), gap.shape)
        raise ExpansiveMapError(int(i), int(j), float(norms[i, j]),
                                float(ground.distances[i, j]))
    return AffineExtension(ground, targets)


# ---------------------------------------------------------------------------
# quadratic distances and the sqrt-transform embedding

class InvalidFormError(ValueError):
    """Quadratic form produced a negative value beyond tolerance."""


class QuadraticForm:
    """A symmetric matrix, positive semidefinite on zero-sum vectors.

    Differences of histograms are zero-sum, so this is the minimal condition
    making the induced distance a pseudometric on histograms.
    """

    def __init__(self, matrix: np.ndarray):
        a = np.asarray(matrix, dtype=np.float64)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("quadratic form must be a square matrix")
        if np.abs(a - a.T).max(initial=0.0) > ABS_TOL:
            raise ValueError("quadratic form must be symmetric")
        n = a.shape[0]
        centering = np.eye(n) - np.full((n, n), 1.0 / n)
        restricted = centering @ a @ centering
        eigs = np.linalg.eigvalsh((restricted + restricted.T) / 2.0)
        if eigs.min(initial=0.0) < -ABS_TOL * max(1.0, np.abs(a).max()):
            raise InvalidFormError(
                f"form is not PSD on zero-sum vectors (eigenvalue {eigs.min():.3g})"
            )
        self.matrix = a
        self.matrix.setflags(write=False)

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]


def quadratic_distance(mu1: Histogram, mu2: Histogram, form: QuadraticForm) -> float:
    """sqrt((mu1-mu2) A (mu1-mu2)^T); zero for equal histograms, symmetric."""
    if len(mu1.ground) != form.dimension or len(mu2.ground) != form.dimension:
        raise DomainMismatchError(
            f"form dimension {form.dimension} does not match the ground space"
        )
    delta = mu1.weights - mu2.weights
    val = float(delta @ form.matrix @ delta)
    if val < -ABS_TOL:
        raise InvalidFormError(f"quadratic value {val:g} is negative beyond tolerance")
    return math.sqrt(max(val, 0.0))


class QuadraticFormDistance(DissimilarityMeasure):
    kind = "quadratic"
    is_pseudo = True

    def __init__(self, ground: GroundSpace, form: QuadraticForm):
        if form.dimension != len(ground):
            raise ValueError("form dimension does not match the ground space")
        self.ground = ground
        self.form = form

    def check_point(self, p) -> None:
        if not isinstance(p, Histogram) or p.ground is not self.ground:
            raise DomainMismatchError(f"expected a histogram over {self.ground.name}")

    def _dist(self, x, y) -> float:
        return quadratic_distance(x, y, self.form)

    def signature(self) -> str:
        return f"quadratic:{self.ground.name}"


def qbic_form(ground: GroundSpace) -> QuadraticForm:
    """The similarity-matrix form a_ij = 1 - d_ij with d the ground distances
    max-normalized into [0, 1]."""
    d = ground.distances
    top = d.max(initial=0.0)
    norm = d / top if top > 0 else d
    return QuadraticForm(1.0 - norm)


def embed_sqrt_transform(ground: GroundSpace, tol: float = EIGEN_CLIP) -> np.ndarray:
    """Euclidean embedding realizing the sqrt metric transform of the ground.

    Requires ground distances with max <= 1 (the caller normalizes).  Factors
    the Gram matrix (1 - d_ij) / 2 built from the similarity matrix
    a_ij = 1 - d_ij; the embedded points then satisfy
    ||y_i - y_j|| = sqrt(d_ij) and share a common norm (sphere membership).
    Eigenvalues in [-tol, 0] are clipped to 0; anything lower means the
    sqrt transform of this ground space is not Euclidean at this tolerance.
    """
    d = ground.distances
    if d.max(initial=0.0) > 1.0 + ABS_TOL:
        raise ValueError("ground distances must be normalized to max <= 1 before embedding")
    gram = (1.0 - d) / 2.0
    eigvals, eigvecs = np.linalg.eigh(gram)
    if eigvals.min(initial=0.0) < -tol:
        raise NotEmbeddableError(
            f"sqrt transform is not Euclidean at tolerance {tol:g} "
            f"(eigenvalue {eigvals.min():.3g})"
        )
    eigvals = np.clip(eigvals, 0.0, None)
    order = np.argsort(eigvals)[::-1]
    keep = order[eigvals[order] > 0.0]
    return eigvecs[:, keep] * np.sqrt(eigvals[keep])


# ---------------------------------------------------------------------------
# histogram record format (one record per line, shared with the CLI)

def format_histogram_record(h: Histogram) -> str:
    return " ".join([h.ground.name] + [repr(float(w)) for w in h.weights])


def parse_histogram_record(line: str, ground: GroundSpace) -> Histogram:
    """Parse `<ground id> w1 ... wn`; renormalize weight sums within 1e-6 of
    one, reject anything further off."""
    parts = line.split()
    if not parts:
        raise ValueError("empty histogram record")
    gid, raw = parts[0], parts[1:]
    if gid != ground.name:
        raise ValueError(f"record names ground space {gid!r}, expected {ground.name!r}")
    if len(raw) != len(ground):
        raise ValueError(f"expected {len(ground)} weights, got {len(raw)}")
    w = np.array([float(x) for x in raw])
    if w.min(initial=0.0) < 0.0:
        raise ValueError("histogram weights must be nonnegative")
    total = w.sum()
    if abs(total - 1.0) > RENORMALIZE_TOL:
        raise ValueError(f"weight sum {total!r} deviates beyond renormalization tolerance")
    return Histogram(ground, w / total)
