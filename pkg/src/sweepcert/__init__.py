"""Finite-time stability certificates for elastoplastic spring networks.

Given a network of elastoplastic springs under one displacement-controlled
loading, this package constructs the associated polyhedral sweeping
process, enumerates the candidate terminal facets of the moving constraint,
certifies finite-time convergence of all stress trajectories with an
explicit arrival-time bound, and cross-validates certificates by direct
catching-up simulation.
"""

from .certificate import (
    Certificate,
    assemble_certificate,
    compute_component_map,
    compute_diameter_bound,
    compute_gain,
    compute_margin,
)
from .construction import (
    SweepingProcess,
    assemble_process,
    build_process,
    compute_free_motions,
    compute_self_stress_basis,
    compute_state_basis,
    moving_offset,
    offset_rate,
    state_from_stress,
    stress_from_state,
)
from .enumeration import (
    FacetCandidate,
    SignedIndex,
    compute_vertex,
    enumerate_flip_families,
    enumerate_pinned,
    enumerate_scenarios,
    feasibility_check,
)
from .errors import SweepcertError
from .geometry import (
    AMetric,
    ConeSpec,
    a_inner,
    a_norm,
    cone_decompose_strict,
    cone_membership,
    distance_to_cone_boundary,
    project_polyhedron,
    project_span,
    qp_project,
    translation_property_check,
)
from .network import Loading, NetworkSpec, ValidatedNetwork, from_document, to_document, validate_network
from .report import AnalysisReport, PipelineConfig, run_pipeline
from .simulator import (
    Trajectory,
    arrival_check,
    catching_up_step,
    lyapunov_monitor,
    reparameterization_test,
    simulate,
)

__version__ = "0.1.0"

__all__ = [
    "AMetric", "AnalysisReport", "Certificate", "ConeSpec", "FacetCandidate",
    "Loading", "NetworkSpec", "PipelineConfig", "SignedIndex", "SweepcertError",
    "SweepingProcess", "Trajectory", "ValidatedNetwork",
    "a_inner", "a_norm", "arrival_check", "assemble_certificate", "assemble_process",
    "build_process", "catching_up_step", "compute_component_map",
    "compute_diameter_bound", "compute_free_motions", "compute_gain",
    "compute_margin", "compute_self_stress_basis", "compute_state_basis",
    "compute_vertex", "cone_decompose_strict", "cone_membership",
    "distance_to_cone_boundary", "enumerate_flip_families", "enumerate_pinned",
    "enumerate_scenarios", "feasibility_check", "from_document", "lyapunov_monitor",
    "moving_offset", "offset_rate", "project_polyhedron", "project_span",
    "qp_project", "reparameterization_test", "run_pipeline", "simulate",
    "state_from_stress", "stress_from_state", "to_document",
    "translation_property_check", "validate_network",
]
