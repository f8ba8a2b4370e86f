"""Linear hyperbolic systems on metric graphs with stationary and dynamic
vertex conditions: well-posedness certificates, a constructive stationary
solver, energy-consistent time stepping and qualitative invariance checks."""
from .netgraph import MetricGraph, build_graph, incidence, trace_layout
from .system import (HyperbolicSystem, Tolerances, EdgeData, MatrixField, VertexCondition, edge_data,
                     vertex_condition, validate_assumptions, assemble_Tv, assemble_T_global)
from .state import StateVector, SmoothState, inner_d, norm_d, random_domain_state
from .wellposed import basis_condition, classify, min_lambda, ClassificationReport
from .resolvent import solve_A0, apply_A, roundtrip_error, SingularBoundarySystem
from .evolve import assemble_discrete_generator, simulate, energy
from .qualinv import check_real, check_positive, check_linf, dynamic_probe, qual_report
from .models import instantiate, list_models
from .config import load_config, system_from_dict, system_to_dict

__all__ = [
    "MetricGraph", "build_graph", "incidence", "trace_layout",
    "HyperbolicSystem", "Tolerances", "EdgeData", "MatrixField", "VertexCondition", "edge_data",
    "vertex_condition", "validate_assumptions", "assemble_Tv", "assemble_T_global",
    "StateVector", "SmoothState", "inner_d", "norm_d", "random_domain_state",
    "basis_condition", "classify", "min_lambda", "ClassificationReport",
    "solve_A0", "apply_A", "roundtrip_error", "SingularBoundarySystem",
    "assemble_discrete_generator", "simulate", "energy",
    "check_real", "check_positive", "check_linf", "dynamic_probe", "qual_report",
    "instantiate", "list_models", "load_config", "system_from_dict", "system_to_dict",
]
