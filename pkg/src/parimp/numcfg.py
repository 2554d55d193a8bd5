"""Single bag of numeric tolerances, threaded explicitly through the API."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class NumericConfig:
    # polynomial root finding
    root_merge_tol: float = 1e-9        # roots closer than this are one root
    residual_factor: float = 1e-9       # |p(root)| <= factor * max|coeff|
    root_max_iter: int = 500

    # map evaluation
    pole_tol: float = 1e-300
    overflow_limit: float = 1e100
    degree_guard: int = 64

    # holomorphic index quadrature
    quad_nodes_start: int = 1024
    quad_nodes_max: int = 65536
    quad_tol: float = 1e-10
    contour_node_tol: float = 1e-12     # |z - f(z)| below this on a node: error
    contour_floor: float = 1e-6         # minimum auto contour radius
    contour_min_r: float = 1e-8         # hard precondition on r

    # splitting / records
    boundary_root_tol: float = 1e-8
    record_check_tol: float = 1e-8
    horo_parabolic_tol: float = 1e-12

    # horocyclic track classification
    divergence_threshold: float = 50.0
    bounded_threshold: float = 10.0

    # vector field flow
    rk_rtol: float = 1e-10
    rk_atol: float = 1e-12
    stall_tol: float = 1e-11
    arclength_budget_factor: float = 1e6

    # gate detection
    endpoint_match_factor: float = 10.0  # times root_merge_tol

    # external rays
    ray_newton_tol: float = 1e-13
    ray_newton_max_iter: int = 60


DEFAULT = NumericConfig()
