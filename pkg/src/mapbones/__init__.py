"""Bones, entropy surfaces and isentropes for alternating compositions of
two unimodal interval maps: exact combinatorics in the stunted-tent model
square, numerically traced curves for logistic compositions, lap-growth
entropy estimation, and skeleton cell complexes with a combinatorial
correspondence between the two parameter spaces.
"""

__version__ = "0.1.0"

from .errors import BudgetError, DomainError, InfeasibleError, TraceError
from .symbolic import (
    EQ, GT, INCOMPARABLE, LT,
    Itinerary, JointOrderData, KneadingData, KneadingSequence, OrderData,
    Symbol, admissible_order_data, check_admissible, check_admissible_joint,
    compare_itineraries, compare_kneading, compare_ksequences,
    is_tight_st, itinerary_to_order_data, joint_itineraries,
    kneading_from_pair_itineraries, order_data_to_bicritical_itinerary,
)
from .families import (
    Dyadic, HyperbolicClassification, OrbitRecord, OrbitStatus, ParamPoint,
    classify_hyperbolic, critical_points_q_composition,
    detect_periodic_critical, eval_logistic, eval_stunted,
    eval_stunted_float, orbit_to_csv, pair_orbit, q_param, st_param,
    zero_is_repelling,
)
from .st_bones import (
    DistinguishedPoint, StBone, classify_st_parameter, st_bicritical_params,
    st_bone, st_crossings, st_distinguished_points, st_secondary_intersection,
)
from .q_bones import (
    QBone, QIntersection, QVertex, polyline_self_intersections,
    q_boundary_endpoints, q_primary_intersection, q_secondary_intersections,
    q_trace_bone, traced_bone, transversality_check,
)
from .entropy import (
    EntropyEstimate, EntropyGrid, MonotonicityReport, entropy_estimate,
    entropy_grid, entropy_monotonicity_audit, grid_to_csv, grid_to_pgm,
    lap_count, lap_profile, neg_count,
)
from .skeleton import (
    CorrespondenceResult, Isentrope, RefinementReport, SkeletonComplex,
    build_skeleton, isentrope_extract, label_components, refinement_audit,
    render_overlay, vertex_correspondence,
)
