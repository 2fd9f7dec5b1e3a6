"""metricsearch: exact similarity search over general metric spaces.

Vantage-point tree indexing with 1-Lipschitz certification pruning,
replace-the-distance prefiltering, transport and quadratic-form distances on
histograms, metric transforms, and empirical concentration-of-measure and
covering-number estimation, with a desk-scale colour-retrieval experiment.

Hot kernels run through a compiled extension when available
(``metricsearch.kernels.BACKEND`` tells which backend is active).
"""

from .kernels import BACKEND
from .metrics import (
    ABS_TOL,
    CallableMeasure,
    DissimilarityMeasure,
    DomainMismatchError,
    EditDistance,
    EuclideanDistance,
    HammingDistance,
    L1Distance,
    ProjectedEuclidean,
    TransformedMeasure,
    TransformFn,
    check_one_lipschitz,
    metric_transform,
    validate_metric,
)
from .histogram import (
    GroundSpace,
    Histogram,
    KantorovichDistance,
    QuadraticForm,
    QuadraticFormDistance,
    TransportPlan,
    TransportSolution,
    embed_sqrt_transform,
    extend_map,
    kantorovich,
    qbic_form,
    quadratic_distance,
)
from .workloads import (
    Workload,
    edit_workload,
    hamming_workload,
    uniform_cube_workload,
)
from .index import (
    BuildConfig,
    IndexTree,
    NodeCertificate,
    build_vp_tree,
    exact_set_distance,
    load_index,
    save_index,
)
from .prefilter import (
    ApproxMeasure,
    PipelineStats,
    RadiusModulus,
    exact_as_approx,
    false_hit_profile,
    filtered_range_query,
    project_measure,
)
from .concentration import (
    ConcentrationEstimate,
    CoverReport,
    FiniteSpace,
    SampledSpace,
    blowup_experiment,
    covering_number,
    estimate_concentration,
    hamming_cube_space,
    median_concentration_check,
)
from .colour import (
    COLOUR_TRIANGLE,
    ColourLattice,
    ColourSpace,
    average_colour,
    build_lattice,
    histogram_map,
    image_metric,
    qbic_blowup_experiment,
    sample_images,
)

__version__ = "0.1.0"
