"""The colour-retrieval workload: an equilateral colour triangle, its
hexagonal lattice segmentation, random images over the lattice, histogram
and average-colour maps, and the prefilter blow-up experiment.

An image with k pixels is an int array of k lattice-point ids.  Image space
carries the normalized sum metric (1/k) * sum_i rho_C(x_i, y_i) - the choice
under which the histogram map is 1-Lipschitz into the transport distance and
the exp(-eps^2 k / 4) concentration scale applies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .histogram import GroundSpace, Histogram, extend_map

SIDE = 1.0
CIRCUMRADIUS = SIDE / math.sqrt(3.0)
INRADIUS = SIDE * math.sqrt(3.0) / 6.0
TRIANGLE_AREA = SIDE * SIDE * math.sqrt(3.0) / 4.0


@dataclass(frozen=True)
class ColourSpace:
    """The model colour space: an equilateral triangle with side one."""

    r: tuple = (0.0, 0.0)
    g: tuple = (1.0, 0.0)
    b: tuple = (0.5, math.sqrt(3.0) / 2.0)

    def __post_init__(self):
        for u, v in ((self.r, self.g), (self.g, self.b), (self.b, self.r)):
            if abs(math.dist(u, v) - SIDE) > 1e-9:
                raise ValueError("colour triangle must be equilateral with side one")

    @property
    def centroid(self) -> np.ndarray:
        return (np.asarray(self.r) + np.asarray(self.g) + np.asarray(self.b)) / 3.0


COLOUR_TRIANGLE = ColourSpace()


@dataclass(frozen=True)
class ColourLattice:
    """A hexagonal grid of colours inside the triangle, vertices included,
    with its induced Euclidean ground space."""

    spacing: float
    coords: np.ndarray  # (n, 2)
    ground: GroundSpace

    def __len__(self) -> int:
        return len(self.coords)

    @property
    def distance_matrix(self) -> np.ndarray:
        return self.ground.distances


def build_lattice(spacing: float, space: ColourSpace = COLOUR_TRIANGLE) -> ColourLattice:
    """Triangular rows at the given spacing, clipped to the triangle.

    The spacing must divide the unit side evenly: otherwise a grid through
    all three vertices cannot keep the minimal pairwise distance equal to
    the spacing.  Spacings above one are rejected outright.
    """
    if not 0.0 < spacing <= 1.0:
        raise ValueError("spacing must lie in (0, 1]")
    steps = round(1.0 / spacing)
    if abs(1.0 / spacing - steps) > 1e-9:
        raise ValueError("spacing must divide the triangle side evenly")

    r = np.asarray(space.r)
    g = np.asarray(space.g)
    b = np.asarray(space.b)
    rows = []
    for j in range(steps + 1):
        along = (b - r) * (j / steps)
        for i in range(steps + 1 - j):
            rows.append(r + along + (g - r) * (i / steps))
    coords = np.asarray(rows)
    ground = GroundSpace.from_points(coords, name=f"colour-lattice:{spacing:g}")
    return ColourLattice(spacing=spacing, coords=coords, ground=ground)


def barycentric(point, space: ColourSpace = COLOUR_TRIANGLE) -> np.ndarray:
    """Barycentric coordinates of a planar point w.r.t. the triangle."""
    r, g, b = (np.asarray(v, dtype=np.float64) for v in (space.r, space.g, space.b))
    m = np.column_stack([g - r, b - r])
    uv = np.linalg.solve(m, np.asarray(point, dtype=np.float64) - r)
    return np.array([1.0 - uv.sum(), uv[0], uv[1]])


def image_metric(x: np.ndarray, y: np.ndarray, lattice: ColourLattice) -> float:
    """Normalized sum metric on images: (1/k) * sum of pixel colour distances."""
    x = np.asarray(x, dtype=np.int64)
    y = np.asarray(y, dtype=np.int64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("images must be id vectors of equal length")
    return float(lattice.distance_matrix[x, y].mean())


def sample_images(lattice: ColourLattice, k: int, count: int,
                  seed: int = 0) -> np.ndarray:
    """`count` images of `k` pixels each, uniform and independent per pixel."""
    if k < 1 or count < 1:
        raise ValueError("k and count must be positive")
    rng = np.random.default_rng(seed)
    return rng.integers(0, len(lattice), size=(count, k), dtype=np.int64)


def histogram_map(image: np.ndarray, lattice: ColourLattice) -> Histogram:
    """The colour histogram of an image: weight of c = pixel share of c."""
    image = np.asarray(image, dtype=np.int64)
    counts = np.bincount(image, minlength=len(lattice))
    return Histogram(lattice.ground, counts / len(image))


def average_colour(h: Histogram, lattice: ColourLattice) -> np.ndarray:
    """Barycentre of the histogram: the affine extension of the identity
    embedding, hence 1-Lipschitz from the transport distance to the plane."""
    if h.ground is not lattice.ground:
        raise ValueError("histogram is over a different ground space")
    return h.weights @ lattice.coords


def average_colour_extension(lattice: ColourLattice):
    """The same map obtained through the generic affine-extension machinery."""
    return extend_map(lattice.coords, lattice.ground)


def _batched_average_colours(lattice: ColourLattice, k: int, count: int,
                             seed: int, batch: int = 256):
    rng = np.random.default_rng(seed)
    done = 0
    while done < count:
        m = min(batch, count - done)
        ids = rng.integers(0, len(lattice), size=(m, k), dtype=np.int64)
        yield lattice.coords[ids].mean(axis=1)
        done += m


def ball_area_ratio(epsilon: float, seed: int = 0,
                    mc_points: int = 1_000_000) -> tuple[float, float]:
    """Area of the eps-disc around the centroid relative to the triangle.

    Closed form while the disc stays interior (eps <= inradius), Monte Carlo
    with reported standard error once it meets the boundary.
    """
    if epsilon <= INRADIUS + 1e-12:
        return math.pi * epsilon * epsilon / TRIANGLE_AREA, 0.0
    rng = np.random.default_rng(seed)
    # uniform on the triangle via the sqrt trick on barycentric coordinates
    r = np.asarray(COLOUR_TRIANGLE.r)
    g = np.asarray(COLOUR_TRIANGLE.g)
    b = np.asarray(COLOUR_TRIANGLE.b)
    u = np.sqrt(rng.uniform(size=mc_points))
    v = rng.uniform(size=mc_points)
    pts = (1 - u)[:, None] * r + (u * (1 - v))[:, None] * g + (u * v)[:, None] * b
    centre = COLOUR_TRIANGLE.centroid
    inside = np.hypot(pts[:, 0] - centre[0], pts[:, 1] - centre[1]) < epsilon
    p = float(inside.mean())
    return p, math.sqrt(p * (1 - p) / mc_points)


@dataclass
class ColourBlowupReport:
    k: int
    epsilon: float
    spacing: float
    sample_count: int
    seed: int
    measured_mass: float        # share of images an avg-colour prefilter keeps
    measured_stderr: float
    mass_lower_bound: float     # 1 - 2 exp(-eps^2 k / 8)
    concentration_bound: float  # (1/2) exp(-eps^2 k / 4)
    ball_area_ratio: float
    ball_area_stderr: float

    def record(self) -> dict:
        return {
            "k": self.k,
            "epsilon": self.epsilon,
            "spacing": self.spacing,
            "sample_count": self.sample_count,
            "seed": self.seed,
            "measured_mass": self.measured_mass,
            "measured_stderr": self.measured_stderr,
            "mass_lower_bound": self.mass_lower_bound,
            "concentration_bound": self.concentration_bound,
            "ball_area_ratio": self.ball_area_ratio,
            "ball_area_stderr": self.ball_area_stderr,
        }


def qbic_blowup_experiment(lattice: ColourLattice, k: int, epsilon: float,
                           sample_count: int, seed: int = 0,
                           centre: Optional[np.ndarray] = None) -> ColourBlowupReport:
    """Measure the average-colour prefilter blow-up at the triangle centroid.

    The query centre is (any histogram with) average colour at the centroid;
    the measured mass is the fraction of sampled images whose average colour
    falls strictly within eps of it - exactly the images an eps-range
    average-colour prefilter cannot exclude.  Reported side by side with the
    concentration-driven lower bound on that mass, the concentration
    function scale, and the tiny relative area of the corresponding disc in
    the colour triangle.
    """
    if centre is None:
        centre = COLOUR_TRIANGLE.centroid
    hits = 0
    for avg in _batched_average_colours(lattice, k, sample_count, seed):
        hits += int((np.hypot(avg[:, 0] - centre[0], avg[:, 1] - centre[1]) < epsilon).sum())
    mass = hits / sample_count
    stderr = math.sqrt(max(mass * (1 - mass), 1e-12) / sample_count)
    ratio, ratio_se = ball_area_ratio(epsilon, seed=seed)
    return ColourBlowupReport(
        k=k, epsilon=epsilon, spacing=lattice.spacing, sample_count=sample_count,
        seed=seed, measured_mass=mass, measured_stderr=stderr,
        mass_lower_bound=1.0 - 2.0 * math.exp(-epsilon * epsilon * k / 8.0),
        concentration_bound=0.5 * math.exp(-epsilon * epsilon * k / 4.0),
        ball_area_ratio=ratio, ball_area_stderr=ratio_se,
    )
