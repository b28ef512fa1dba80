"""Low-distortion embeddings of stars and k-ary trees into l1^d.

Lower-bound machinery (embedding -> unrelated measure families, with
certificates and bound evaluators) next to the matching upper-bound
constructions and a small distortion-minimization oracle.
"""

__version__ = "0.1.0"

from .bounds import BoundReport, evaluate_lower_bound, volume_lower_bound
from .constructions import (
    KahaneMap,
    compose_sqrt_embedding,
    default_star_parameters,
    equilateral_set,
    isometric_tree_embedding,
    kahane_map,
    perturb_within_distortion,
    random_sign_star_embedding,
    random_tree_embedding,
    tree_to_star_embedding,
)
from .measures import (
    FiniteMeasure,
    MeasureFamily,
    ProbabilityMeasure,
    check_delta_bound,
    delta_family,
    is_dominated,
    is_unrelated,
    min_measure,
    normalize,
    restrict,
    support_size,
    tv_distance,
)
from .metric import (
    Embedding,
    FiniteMetricSpace,
    distortion,
    kary_tree_metric,
    lipschitz_constant,
    normalize_to_one_lipschitz,
    star_metric,
)
from .pipeline import (
    PipelineCertificate,
    embedding_to_measures,
    run_pipeline,
    sparse_select,
    stage_one_to_two,
    stage_three_to_four,
    stage_two_to_three,
    verify_certificate,
)
from .search import brute_force_min_distortion, min_distortion_star
