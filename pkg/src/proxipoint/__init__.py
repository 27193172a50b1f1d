"""Best proximity points of non-self maps via proximal contractions and implicit relations."""

__version__ = "0.1.0"

from .dsl import MappingSpec, RelationExpr, eval_map, parse_map, parse_relation
from .engine import (
    CertReport,
    ProximalInstance,
    ProximalPair,
    Tolerances,
    certify_contraction,
    compute_proximal_pair,
    proximal_step,
)
from .metric import (
    Box,
    DistanceCertificate,
    FiniteSet,
    Interval,
    Metric,
    Segment,
    Union,
    distance_between_regions,
    metric_eval,
    region_contains,
    region_project,
    region_sample,
)
from .relations import ClassReport, catalog_relation, check_class_A, check_class_Aprime
from .solvers import (
    IterationTrace,
    NestedFamily,
    SolveResult,
    check_uniqueness,
    estimate_rate,
    solve_first_kind,
    solve_second_kind,
    solve_strong,
)
