"""Numerical tolerance settings shared across the toolkit.

Every tolerance used by the library is collected here with its default so
runs can tighten or relax them in one place (CLI: --tolerance overrides).
"""

from __future__ import annotations

from dataclasses import dataclass, replace


@dataclass(frozen=True)
class Tolerances:
    # chart construction
    domain_margin: float = 1e-3          # delta excluded around coordinate singularities
    metric_fd_step: float = 1e-5         # central-difference step scale for metric derivatives
    spd_eigen_floor: float = 1e-10       # metric positive-definiteness threshold
    quad_abs: float = 1e-10              # adaptive quadrature for s(r) and lengths
    spline_err: float = 1e-9             # interpolation error bound for s(r)

    # tensor calculus
    christoffel_symmetry: float = 1e-12
    gamma_fd_step: float = 1e-4          # coefficient-differentiation oracle step
    curvature_antisymmetry: float = 1e-9
    formula_vs_oracle_rel: float = 1e-4
    ricci_symmetry: float = 1e-9
    weighted_sec_match: float = 1e-6
    orthonormal_tol: float = 1e-8
    volume_form_residual: float = 1e-8
    codazzi_zero: float = 1e-7
    metric_condition_max: float = 1e12

    # geodesics / transport
    ode_rtol: float = 1e-9
    ode_atol: float = 1e-11
    speed_drift: float = 1e-7
    speed_law_rel: float = 1e-6
    shoot_endpoint: float = 1e-8
    shoot_directions: int = 64
    minimality_slack: float = 1e-6
    loop_closure: float = 1e-9
    transport_linearity: float = 1e-9
    holonomy_det: float = 1e-6
    holonomy_compose: float = 1e-7
    orthogonality: float = 1e-7
    algebra_ds: float = 1e-4
    algebra_trace: float = 1e-4
    rank_rel_threshold: float = 1e-6
    parallel_field_cert: float = 1e-6
    distribution_angle: float = 1e-5

    # comparison checks
    inner_cutoff: float = 1e-3           # radial delta below which analytic limits are used
    m_k_series_cutoff: float = 1e-4      # switch m_K to its Laurent expansion near s=0
    riccati_tol: float = 1e-4
    mean_curv_tol: float = 1e-5
    vol_elem_tol: float = 1e-7
    laplacian_tol: float = 1e-5
    volume_tol: float = 1e-6
    myers_tol: float = 1e-4
    one_dim_tol: float = 1e-6
    hypothesis_points: int = 50
    hypothesis_vectors: int = 200
    radial_quad_abs: float = 1e-8

    def with_overrides(self, **kwargs) -> "Tolerances":
        return replace(self, **kwargs)


DEFAULT = Tolerances()
