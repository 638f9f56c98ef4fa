"""islnet: simulator and structure optimizer for mega-constellation ISL networks."""

from .constants import C_LIGHT_KM_S, EARTH_RADIUS_KM, MU_EARTH_KM3_S2
from .dynamics import (
    AsrSample,
    AvailabilityModel,
    AvailabilityTrace,
    asr,
    availability_ratio,
    calibrate_fail_coefficient,
    edge_asr_samples,
    edge_dynamics,
    normalize_asr,
    simulate_availability,
)
from .geometry import (
    ConstellationConfig,
    OrbitalElements,
    RelativeGeometry,
    SatelliteId,
    SatelliteState,
    WalkerKind,
    constellation_positions,
    constellation_states,
    deviation_angle,
    generate_constellation,
    propagate,
    relative_geometry,
)
from .optimizer import (
    CandidateStructure,
    FrontierPoint,
    InfeasibleError,
    ObjectiveReport,
    OptimizerConfig,
    StructureEvaluator,
    brute_force_best,
    objective,
    optimize_structure,
    pareto_frontier,
)
from .performance import capacity_gbps, capacity_series, max_flow_bound_gbps, throughput
from .routing import (
    PathRecord,
    UnreachableError,
    batch_route_stats,
    geodetic_to_ecef,
    great_circle_km,
    nearest_satellites,
    path_stretch,
    route,
    rtt,
    rtt_ms,
)
from .structure import (
    ConnectionFeature,
    GridMode,
    IslGraph,
    LatticeKind,
    Motif,
    SpanningPattern,
    StructureWarning,
    build_feature_graph,
    build_topology,
    enumerate_candidate_motifs,
    feature_between,
    feature_order,
    parse_feature,
    parse_motif,
    prm_gen,
)
from .traffic import PopulationGrid, TrafficDemand, gravity_demands

__version__ = "0.1.0"
