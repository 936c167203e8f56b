"""Parallel transport for the weighted connection, holonomy, and parallel fields.

Transport solves v'^k + (Gamma^alpha)^k_ij sigma'^i v^j = 0 along piecewise-C1
curves, restarting at corners with the carried vector.  Holonomy elements are
transport matrices around closed loops expressed in a frame at the basepoint
(coordinate frame by default, matching the explicit matrices computed for the
round-sphere loop families).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import solve_ivp

from .charts import ManifoldChart
from .expressions import Expr, ScalarField, parse_scalar_field
from .geodesy import CurvePath, g_norm
from .settings import DEFAULT, Tolerances
from .tensorcalc import weighted_coeffs

__all__ = [
    "HolonomyElement",
    "AlgebraElement",
    "parallel_transport",
    "transport_matrix",
    "holonomy_element",
    "orthonormal_frame",
    "sphere_latitude_family",
    "sphere_rectangle_family",
    "LoopFamily",
    "named_family",
    "algebra_element",
    "generated_algebra_dim",
    "parallel_field_residual",
    "distribution_invariance",
    "DistributionReport",
]


@dataclass(frozen=True)
class HolonomyElement:
    basepoint: np.ndarray
    frame: np.ndarray  # columns are the frame vectors in coordinates
    matrix: np.ndarray  # transport around the loop, expressed in the frame
    loop_descriptor: str = ""

    @property
    def det(self) -> float:
        return float(np.linalg.det(self.matrix))


@dataclass(frozen=True)
class AlgebraElement:
    matrix: np.ndarray
    family_name: str
    parameter_at: float

    @property
    def trace(self) -> float:
        return float(np.trace(self.matrix))


def transport_matrix(chart: ManifoldChart, curve: CurvePath,
                     tol: Tolerances | None = None) -> np.ndarray:
    """Matrix W with W[:, j] = transport of the j-th coordinate basis vector."""
    tol = tol or chart.tol
    n = chart.dim
    V = np.eye(n)
    for seg in curve.segments:
        def rhs(t, y):
            x = seg.position(t)
            xdot = seg.velocity(t)
            gamma = weighted_coeffs(chart, x).gamma
            mat = -np.einsum("kij,i->kj", gamma, xdot)
            return (mat @ y.reshape(n, n)).reshape(-1)

        sol = solve_ivp(rhs, (seg.t0, seg.t1), V.reshape(-1), method="RK45",
                        rtol=tol.ode_rtol, atol=tol.ode_atol)
        if not sol.success:
            raise RuntimeError(f"transport integration failed: {sol.message}")
        V = sol.y[:, -1].reshape(n, n)
    return V


def parallel_transport(chart: ManifoldChart, curve: CurvePath, v0,
                       tol: Tolerances | None = None) -> np.ndarray:
    """Transport v0 along the curve with the weighted connection."""
    return transport_matrix(chart, curve, tol) @ np.asarray(v0, dtype=float)


def orthonormal_frame(chart: ManifoldChart, p) -> np.ndarray:
    """g-orthonormal frame by Gram-Schmidt on the coordinate vectors."""
    g = chart.metric(p)
    n = chart.dim
    frame = np.eye(n)
    for i in range(n):
        v = frame[:, i].copy()
        for j in range(i):
            v -= (frame[:, j] @ g @ v) * frame[:, j]
        nv = math.sqrt(float(v @ g @ v))
        frame[:, i] = v / nv
    return frame


def holonomy_element(chart: ManifoldChart, loop: CurvePath,
                     frame_mode: str = "coordinate",
                     tol: Tolerances | None = None,
                     descriptor: str = "") -> HolonomyElement:
    """Transport a frame at the basepoint around the closed loop.

    The loop must close in coordinates (modulo declared periodic
    identifications).  frame_mode selects the basepoint frame in which the
    matrix is expressed: "coordinate" (default; the round-sphere example
    matrices are written in (d/dr, d/dtheta)) or "orthonormal".
    """
    tol = tol or chart.tol
    if not chart.coords_close(loop.start, loop.end, tol.loop_closure):
        raise ValueError(
            f"loop is not closed: start {loop.start!r}, end {loop.end!r}")
    if frame_mode == "coordinate":
        frame = np.eye(chart.dim)
    elif frame_mode == "orthonormal":
        frame = orthonormal_frame(chart, loop.start)
    else:
        raise ValueError(f"unknown frame mode {frame_mode!r}")
    W = transport_matrix(chart, loop, tol)
    matrix = np.linalg.solve(frame, W @ frame)
    return HolonomyElement(loop.start.copy(), frame, matrix, descriptor)


# ---------------------------------------------------------------------------
# Loop families on the round sphere (basepoint on the equator)


def sphere_latitude_family(s: float, delta: float = 1e-3,
                           closed: bool = True) -> CurvePath:
    """Radial push to latitude r = s, full circle, radial return.

    Pieces, based at (pi/2, 0): (t, 0) out to r = s; (s, t - s) around the
    full circle; radially back to the equator at theta = 2*pi (identified
    with 0).  With closed=True (default) the loop is anchored by a final
    run back along the equator, so the family passes through the identity
    at s = pi/2 and its s-derivative is a genuine Lie-algebra element of
    the holonomy group (zero trace).  closed=False gives the bare
    three-piece loop, whose value at s = pi/2 is the equator holonomy
    [[1, 0], [-2*pi, 1]] rather than the identity.
    """
    r0 = math.pi / 2
    s = float(s)
    if not delta <= s <= math.pi - delta:
        raise ValueError(f"latitude {s} outside [{delta}, {math.pi - delta}]")
    pts = [(r0, 0.0), (s, 0.0), (s, 2 * math.pi), (r0, 2 * math.pi)]
    if closed:
        pts.append((r0, 0.0))
    return _sphere_polyline(pts)


def sphere_rectangle_family(s: float, xi: float | None = None,
                            delta: float = 1e-3) -> CurvePath:
    """Coordinate rectangle [pi/2, xi] x [0, s] traversed positively.

    Radially out to r = xi at theta = 0, across to theta = s, radially back
    to the equator, and home along the equator.  The default corner radius
    is xi = arccos((1 - sqrt(5))/2), which makes the radial-conjugated
    angular generator strictly off-diagonal.
    """
    r0 = math.pi / 2
    if xi is None:
        xi = math.acos((1.0 - math.sqrt(5.0)) / 2.0)
    pts = [(r0, 0.0), (xi, 0.0)]
    if s != 0.0:
        pts += [(xi, s), (r0, s)]
    else:
        pts += [(r0, 0.0)]
    pts += [(r0, 0.0)]
    return _sphere_polyline(pts)


def _sphere_polyline(pts) -> CurvePath:
    cleaned = [pts[0]]
    for p in pts[1:]:
        if p != cleaned[-1]:
            cleaned.append(p)
    return CurvePath.polyline([np.array(p) for p in cleaned])


@dataclass(frozen=True)
class LoopFamily:
    name: str
    loop_at: Callable[[float], CurvePath]


def named_family(name: str, chart: ManifoldChart) -> LoopFamily:
    if name == "sphere_latitude_family":
        delta = max(1e-3, math.pi - chart.safe_domain.upper[0]
                    if math.isfinite(chart.safe_domain.upper[0]) else 1e-3)
        return LoopFamily(name, lambda s: sphere_latitude_family(s, delta))
    if name == "sphere_rectangle_family":
        return LoopFamily(name, lambda s: sphere_rectangle_family(s))
    raise ValueError(f"unknown loop family {name!r}")


def algebra_element(chart: ManifoldChart, family: LoopFamily | str, s0: float,
                    ds: float | None = None, frame_mode: str = "coordinate",
                    tol: Tolerances | None = None) -> AlgebraElement:
    """d/ds of the holonomy family at s0 by Richardson-extrapolated central
    differences of h_s itself (the family is differentiated directly, not
    via h_{s+ds} h_s^{-1})."""
    tol = tol or chart.tol
    ds = tol.algebra_ds if ds is None else float(ds)
    if isinstance(family, str):
        family = named_family(family, chart)

    def h(s: float) -> np.ndarray:
        return holonomy_element(chart, family.loop_at(s), frame_mode, tol).matrix

    def central(step: float) -> np.ndarray:
        return (h(s0 + step) - h(s0 - step)) / (2.0 * step)

    d1 = central(ds)
    d2 = central(ds / 2.0)
    matrix = (4.0 * d2 - d1) / 3.0
    return AlgebraElement(matrix, family.name, float(s0))


def generated_algebra_dim(elements: Sequence[AlgebraElement | np.ndarray],
                          depth: int = 4, rel_threshold: float = 1e-6) -> int:
    """Dimension of the Lie algebra spanned by the elements and iterated
    commutators up to the given depth (rank of the flattened span)."""
    mats = [np.asarray(e.matrix if isinstance(e, AlgebraElement) else e, dtype=float)
            for e in elements]
    if not mats:
        raise ValueError("need at least one element")
    basis = list(mats)
    current = list(mats)
    for _ in range(depth):
        new = []
        for a in current:
            for b in basis:
                new.append(a @ b - b @ a)
        if not new:
            break
        basis.extend(new)
        current = new
        if len(basis) > 400:
            break
    stacked = np.stack([m.reshape(-1) for m in basis])
    svals = np.linalg.svd(stacked, compute_uv=False)
    if svals[0] == 0.0:
        return 0
    return int(np.sum(svals > rel_threshold * svals[0]))


# ---------------------------------------------------------------------------
# Parallel fields and invariant distributions


def _as_vector_field(chart: ManifoldChart, field) -> list[Expr]:
    out = []
    for comp in field:
        if isinstance(comp, str):
            comp = parse_scalar_field(comp, chart.coords).expr
        elif isinstance(comp, ScalarField):
            comp = comp.bind(chart.coords).expr
        elif not isinstance(comp, Expr):
            raise TypeError("vector-field components must be expressions")
        out.append(comp)
    if len(out) != chart.dim:
        raise ValueError(f"field needs {chart.dim} components")
    return out


def _field_value(chart: ManifoldChart, comps: list[Expr], p) -> np.ndarray:
    env = chart.env(p)
    return np.array([c.evaluate(env) for c in comps])


def covariant_derivative_along(chart: ManifoldChart, comps: list[Expr],
                               p, direction) -> np.ndarray:
    """(nabla^alpha_X V)^k = X^i (d_i V^k + (Gamma^alpha)^k_ij V^j) at p."""
    p = np.asarray(p, dtype=float)
    X = np.asarray(direction, dtype=float)
    env = chart.env(p)
    V = np.array([c.evaluate(env) for c in comps])
    dV = np.array([[c.diff(x).evaluate(env) for c in comps] for x in chart.coords])
    gamma = weighted_coeffs(chart, p).gamma
    return np.einsum("i,ik->k", X, dV) + np.einsum("kij,i,j->k", gamma, X, V)


def parallel_field_residual(chart: ManifoldChart, field,
                            test_curves: Sequence[CurvePath],
                            samples_per_curve: int = 33) -> float:
    """max |nabla^alpha_{sigma'} V|_g over the curves; certified alpha-parallel
    below the parallel_field_cert tolerance."""
    comps = _as_vector_field(chart, field)
    worst = 0.0
    for curve in test_curves:
        ts = np.linspace(curve.t0, curve.t1, samples_per_curve)
        for t in ts:
            x = curve.position(t)
            deriv = covariant_derivative_along(chart, comps, x, curve.velocity(t))
            worst = max(worst, g_norm(chart, x, deriv))
    return worst


@dataclass
class DistributionReport:
    max_principal_angle: float
    lower_block_norm: float | None = None
    fiber_block_gap: float | None = None


def _principal_angle(chart: ManifoldChart, p, span_a: np.ndarray,
                     span_b: np.ndarray) -> float:
    """Largest principal angle between two subspaces, in the g inner product."""
    g = chart.metric(p)
    L = np.linalg.cholesky(g)

    def orth(cols):
        q, _ = np.linalg.qr(L.T @ cols)
        return q

    qa, qb = orth(span_a), orth(span_b)
    svals = np.linalg.svd(qa.T @ qb, compute_uv=False)
    svals = np.clip(svals, -1.0, 1.0)
    return float(np.arccos(np.min(svals)))


def distribution_invariance(chart: ManifoldChart, distribution, loops,
                            fiber_loops: Sequence[CurvePath] | None = None,
                            fiber_density: ScalarField | str | None = None,
                            tol: Tolerances | None = None) -> DistributionReport:
    """Transport a basis of the distribution around each loop and measure the
    largest principal angle to the original span.

    For warped-product charts (chart.product with psi on the base), the
    holonomy block structure is also verified: the block below the base
    rows must vanish and, when fiber_loops/fiber_density describe the
    projected loops, the fiber block must equal the fiber alpha_2-holonomy.
    """
    tol = tol or chart.tol
    fields = [_as_vector_field(chart, f) for f in distribution]
    worst_angle = 0.0
    lower = None
    fiber_gap = None
    for idx, loop in enumerate(loops):
        p = loop.start
        span0 = np.stack([_field_value(chart, f, p) for f in fields], axis=1)
        if np.linalg.matrix_rank(span0) < span0.shape[1]:
            raise ValueError("distribution fields are dependent at a basepoint")
        W = transport_matrix(chart, loop, tol)
        angle = _principal_angle(chart, p, span0, W @ span0)
        worst_angle = max(worst_angle, angle)
        if chart.product is not None and chart.product.warped:
            nb = chart.product.base_dim
            block = np.max(np.abs(W[nb:, :nb]))
            lower = block if lower is None else max(lower, block)
            if fiber_loops is not None and fiber_density is not None:
                fiber = chart.product.fiber
                if isinstance(fiber_density, str):
                    fd = parse_scalar_field(fiber_density, fiber.coords)
                else:
                    fd = fiber_density.bind(fiber.coords)
                # alpha_2 = d(phi_2) as a raw one-form on the fiber
                override = tuple(fd.expr.diff(c) for c in fiber.coords)
                fiber_chart = fiber.replace(alpha_override=override)
                h2 = transport_matrix(fiber_chart, fiber_loops[idx], tol)
                gap = np.max(np.abs(W[nb:, nb:] - h2))
                fiber_gap = gap if fiber_gap is None else max(fiber_gap, gap)
    return DistributionReport(worst_angle, lower, fiber_gap)
