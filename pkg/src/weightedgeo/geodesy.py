"""Geodesic integration, the reparametrization s(t), and the distance s(p,q).

g-geodesics and alpha-geodesics solve x'' + Gamma(x', x') = 0 with the
respective coefficients, integrated by an adaptive embedded Runge-Kutta 5(4)
pair with dense output.  Along a unit-speed g-geodesic the weighted
reparametrization is s(t) = int_0^t exp(-2 f/(n-1)) dt'; s(p,q) is the
minimum of total s over minimizing connectors found by multi-start shooting
refined with a damped Newton iteration on the endpoint map.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicHermiteSpline

from .charts import ManifoldChart
from .settings import DEFAULT, Tolerances
from .tensorcalc import christoffel, weighted_coeffs

__all__ = [
    "CurvePath",
    "ReparRecord",
    "GeodesicError",
    "ConnectorNotFound",
    "integrate_geodesic",
    "reparametrize",
    "conformal_length",
    "repar_distance",
    "RepDistanceResult",
    "unit_vector",
    "sphere_directions",
]

_GAUSS7_NODES, _GAUSS7_WEIGHTS = np.polynomial.legendre.leggauss(7)


class GeodesicError(RuntimeError):
    pass


class ConnectorNotFound(GeodesicError):
    pass


@dataclass
class PathSegment:
    t0: float
    t1: float
    position: object  # Callable[[float], np.ndarray]
    velocity: object  # Callable[[float], np.ndarray]


@dataclass
class CurvePath:
    """Piecewise-C1 curve in chart coordinates with velocity samples."""

    segments: list[PathSegment]
    ts: np.ndarray
    xs: np.ndarray  # (m, n)
    vs: np.ndarray  # (m, n)
    parametrization: str = "raw"  # unit_speed_g | alpha_normalized | raw
    truncated: bool = False
    note: str = ""

    @property
    def t0(self) -> float:
        return self.segments[0].t0

    @property
    def t1(self) -> float:
        return self.segments[-1].t1

    @property
    def start(self) -> np.ndarray:
        return self.xs[0]

    @property
    def end(self) -> np.ndarray:
        return self.xs[-1]

    def _segment_at(self, t: float) -> PathSegment:
        for seg in self.segments:
            if t <= seg.t1 or seg is self.segments[-1]:
                if t >= seg.t0 - 1e-12:
                    return seg
        raise ValueError(f"parameter {t} outside [{self.t0}, {self.t1}]")

    def position(self, t: float) -> np.ndarray:
        return np.asarray(self._segment_at(t).position(t), dtype=float)

    def velocity(self, t: float) -> np.ndarray:
        return np.asarray(self._segment_at(t).velocity(t), dtype=float)

    def sample(self, m: int) -> tuple[np.ndarray, np.ndarray]:
        ts = np.linspace(self.t0, self.t1, m)
        return ts, np.array([self.position(t) for t in ts])

    @classmethod
    def polyline(cls, points, speed: float = 1.0) -> "CurvePath":
        """Piecewise-linear path through coordinate points at constant
        coordinate speed; corners are genuine C1 breaks."""
        pts = [np.asarray(p, dtype=float) for p in points]
        if len(pts) < 2:
            raise ValueError("polyline needs at least two points")
        segments = []
        ts = [0.0]
        xs = [pts[0]]
        vs = []
        t = 0.0
        for a, b in zip(pts[:-1], pts[1:]):
            length = float(np.linalg.norm(b - a))
            if length == 0.0:
                continue
            dt = length / speed
            v = (b - a) / dt

            def pos(tt, a=a, t0=t, v=v):
                return a + (tt - t0) * v

            segments.append(PathSegment(t, t + dt, pos, lambda tt, v=v: v))
            t += dt
            ts.append(t)
            xs.append(b)
            vs.append(v)
        if not segments:
            raise ValueError("polyline is degenerate (zero total length)")
        vs.append(vs[-1])
        return cls(segments, np.array(ts), np.array(xs), np.array(vs))

    def reversed(self) -> "CurvePath":
        total = self.t1
        segments = []
        for seg in reversed(self.segments):
            t0, t1 = total - seg.t1, total - seg.t0

            def pos(tt, seg=seg, total=total):
                return seg.position(total - tt)

            def vel(tt, seg=seg, total=total):
                return -np.asarray(seg.velocity(total - tt))

            segments.append(PathSegment(t0, t1, pos, vel))
        ts = total - self.ts[::-1]
        return CurvePath(segments, ts, self.xs[::-1].copy(), -self.vs[::-1].copy(),
                         self.parametrization, self.truncated, self.note)

    @classmethod
    def concatenate(cls, paths: list["CurvePath"]) -> "CurvePath":
        segments = []
        ts = [0.0]
        xs = [paths[0].xs[0]]
        vs = [paths[0].vs[0]]
        offset = 0.0
        for path in paths:
            shift = offset - path.t0
            for seg in path.segments:
                def pos(tt, seg=seg, shift=shift):
                    return seg.position(tt - shift)

                def vel(tt, seg=seg, shift=shift):
                    return seg.velocity(tt - shift)

                segments.append(PathSegment(seg.t0 + shift, seg.t1 + shift, pos, vel))
            ts.extend(path.ts[1:] + shift)
            xs.extend(path.xs[1:])
            vs.extend(path.vs[1:])
            offset = segments[-1].t1
        return cls(segments, np.array(ts), np.array(xs), np.array(vs))


def g_norm(chart: ManifoldChart, p, v) -> float:
    v = np.asarray(v, dtype=float)
    return math.sqrt(max(0.0, float(v @ chart.metric(p) @ v)))


def unit_vector(chart: ManifoldChart, p, v) -> np.ndarray:
    nv = g_norm(chart, p, v)
    if nv == 0:
        raise ValueError("cannot normalize the zero vector")
    return np.asarray(v, dtype=float) / nv


def _geodesic_rhs(chart: ManifoldChart, connection: str):
    n = chart.dim
    coeffs = christoffel if connection == "levi_civita" else weighted_coeffs

    def rhs(t, y):
        x, v = y[:n], y[n:]
        gamma = coeffs(chart, x).gamma
        acc = -np.einsum("kij,i,j->k", gamma, v, v)
        return np.concatenate([v, acc])

    return rhs


def _boundary_event(chart: ManifoldChart):
    n = chart.dim

    def event(t, y):
        margin = chart.boundary_margin(y[:n])
        if chart.predicate is not None and not chart.predicate(y[:n]):
            return -1.0
        return margin if math.isfinite(margin) else 1.0

    event.terminal = True
    event.direction = -1
    return event


def integrate_geodesic(chart: ManifoldChart, p, v, T: float,
                       connection: str = "levi_civita",
                       tol: Tolerances | None = None) -> CurvePath:
    """Solve the geodesic equation for the chosen connection up to time T.

    The path is truncated (and flagged) if it reaches the safe-domain
    boundary before time T.
    """
    tol = tol or chart.tol
    p = np.asarray(p, dtype=float)
    v = np.asarray(v, dtype=float)
    if connection not in ("levi_civita", "weighted"):
        raise ValueError(f"unknown connection {connection!r}")
    if not chart.contains(p):
        raise GeodesicError(f"initial point {p!r} outside the safe domain")
    if np.allclose(v, 0):
        raise GeodesicError("zero initial velocity")
    n = chart.dim
    rhs = _geodesic_rhs(chart, connection)
    sol = solve_ivp(rhs, (0.0, float(T)), np.concatenate([p, v]), method="RK45",
                    rtol=tol.ode_rtol, atol=tol.ode_atol, dense_output=True,
                    events=[_boundary_event(chart)])
    if sol.status == -1:
        raise GeodesicError(f"integration failed: {sol.message}")
    truncated = sol.status == 1
    dense = sol.sol

    def pos(t):
        return dense(t)[:n]

    def vel(t):
        return dense(t)[n:]

    ts = sol.t
    xs = sol.y[:n].T.copy()
    vs = sol.y[n:].T.copy()
    tag = "raw"
    if connection == "levi_civita" and abs(g_norm(chart, p, v) - 1.0) < 1e-12:
        tag = "unit_speed_g"
    elif connection == "weighted" and chart.dim > 1:
        c0 = g_norm(chart, p, v) * math.exp(-2.0 * chart.phi_value(p))
        if abs(c0 - 1.0) < 1e-12:
            tag = "alpha_normalized"
    seg = PathSegment(0.0, float(ts[-1]), pos, vel)
    return CurvePath([seg], ts, xs, vs, parametrization=tag, truncated=truncated,
                     note="hit safe-domain boundary" if truncated else "")


def _repar_integrand(chart: ManifoldChart):
    c = -2.0 / (chart.dim - 1)

    def integrand(x):
        return math.exp(c * chart.f_value(x))

    return integrand


def _segment_quad(fn, a: float, b: float) -> float:
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    return half * float(sum(w * fn(mid + half * u)
                            for u, w in zip(_GAUSS7_NODES, _GAUSS7_WEIGHTS)))


@dataclass
class ReparRecord:
    """s(t) along a unit-speed g-geodesic and its total."""

    path: CurvePath
    s_of_t: object  # Callable[[float], float]
    total_s: float
    s_nodes: np.ndarray


def reparametrize(path: CurvePath, chart: ManifoldChart,
                  require_unit_speed: bool = True) -> ReparRecord:
    """s(t) = int exp(-2 f/(n-1)) dt along the path (unit-speed g-geodesic)."""
    if require_unit_speed and path.parametrization != "unit_speed_g":
        raise ValueError("reparametrize expects a unit-speed g-geodesic")
    integrand = _repar_integrand(chart)
    ts = path.ts
    svals = np.zeros(len(ts))
    for i in range(1, len(ts)):
        svals[i] = svals[i - 1] + _segment_quad(lambda t: integrand(path.position(t)),
                                                ts[i - 1], ts[i])
    derivs = np.array([integrand(path.position(t)) for t in ts])
    # Hermite data reproduces ds/dt = e^{-2f/(n-1)} exactly at the nodes
    s_of_t = CubicHermiteSpline(ts, svals, derivs)
    return ReparRecord(path, s_of_t, float(svals[-1]), svals)


def conformal_length(path: CurvePath, chart: ManifoldChart) -> float:
    """Length in h = e^{-4f/(n-1)} g, i.e. int e^{-2f/(n-1)} |gamma'|_g dt."""
    integrand = _repar_integrand(chart)

    def density(t):
        x = path.position(t)
        return integrand(x) * g_norm(chart, x, path.velocity(t))

    total = 0.0
    for seg in path.segments:
        # subdivide each smooth segment for the fixed-order rule
        knots = np.linspace(seg.t0, seg.t1, 17)
        for a, b in zip(knots[:-1], knots[1:]):
            total += _segment_quad(density, a, b)
    return total


# ---------------------------------------------------------------------------
# Boundary-value problem: minimizing connectors and s(p, q)


def sphere_directions(n: int, count: int, rng: np.random.Generator | None = None) -> np.ndarray:
    """Deterministic spread of directions on S^{n-1} in coordinate space."""
    if n == 1:
        return np.array([[1.0], [-1.0]])
    if n == 2:
        angles = 2 * math.pi * np.arange(count) / count
        return np.stack([np.cos(angles), np.sin(angles)], axis=1)
    if n == 3:
        # Fibonacci spiral on S^2
        i = np.arange(count) + 0.5
        phi = math.pi * (3.0 - math.sqrt(5.0)) * i
        z = 1.0 - 2.0 * i / count
        rho = np.sqrt(np.maximum(0.0, 1.0 - z * z))
        return np.stack([rho * np.cos(phi), rho * np.sin(phi), z], axis=1)
    rng = rng or np.random.default_rng(0)
    pts = rng.normal(size=(count, n))
    return pts / np.linalg.norm(pts, axis=1, keepdims=True)


def _wrap_difference(chart: ManifoldChart, x: np.ndarray, q: np.ndarray) -> np.ndarray:
    """x - q with periodic coordinates wrapped to the nearest representative."""
    d = x - q
    for i, period in chart.periodic.items():
        d[i] = (d[i] + 0.5 * period) % period - 0.5 * period
    return d


def _shoot(chart: ManifoldChart, p: np.ndarray, w: np.ndarray,
           tol: Tolerances) -> np.ndarray | None:
    """Endpoint of the time-1 geodesic with initial velocity w (None if truncated)."""
    try:
        path = integrate_geodesic(chart, p, w, 1.0, "levi_civita", tol)
    except GeodesicError:
        return None
    if path.truncated:
        return None
    return path.end


@dataclass
class RepDistanceResult:
    value: float
    lengths: list[float]
    totals: list[float]
    velocities: list[np.ndarray]
    paths: list[CurvePath] = field(default_factory=list)

    @property
    def count(self) -> int:
        return len(self.totals)


def minimal_connectors(chart: ManifoldChart, p, q, n_directions: int = 64,
                       tol: Tolerances | None = None,
                       max_newton: int = 40) -> RepDistanceResult:
    """Find minimizing g-geodesics from p to q by multi-start shooting.

    Shooting unknown is the initial velocity w of exp_p; multi-start seeds
    are g-unit directions scaled by a coordinate-distance estimate, the best
    candidates (by closest approach) are polished with a damped Newton
    iteration using a forward-difference Jacobian of the endpoint map.
    """
    tol = tol or chart.tol
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if not chart.contains(p):
        raise GeodesicError(f"p={p!r} outside safe domain")
    if not chart.contains(q):
        raise GeodesicError(f"q={q!r} outside safe domain")
    n = chart.dim
    d_coord = float(np.linalg.norm(_wrap_difference(chart, q.copy(), p)))
    if d_coord == 0.0:
        return RepDistanceResult(0.0, [0.0], [0.0], [np.zeros(n)])
    inj = chart.injectivity_at(p)
    t_cap = min(inj * 1.05, 4.0 * d_coord + 1.0) if math.isfinite(inj) else 4.0 * d_coord + 1.0

    # coarse scan: closest approach along each direction
    candidates = []
    for u in sphere_directions(n, n_directions):
        try:
            u_g = unit_vector(chart, p, u)
            path = integrate_geodesic(chart, p, u_g, t_cap, "levi_civita", tol)
        except GeodesicError:
            continue
        ts = np.linspace(path.t0, path.t1, 160)
        best_t, best_d = None, math.inf
        for t in ts[1:]:
            d = float(np.linalg.norm(_wrap_difference(chart, path.position(t), q)))
            if d < best_d:
                best_d, best_t = d, t
        if best_t is not None:
            candidates.append((best_d, best_t * u_g))
    candidates.sort(key=lambda c: c[0])

    solutions: list[np.ndarray] = []
    for _, w0 in candidates[:8]:
        w = w0.copy()
        end = _shoot(chart, p, w, tol)
        if end is None:
            continue
        res = _wrap_difference(chart, end, q)
        for _ in range(max_newton):
            if np.linalg.norm(res) < tol.shoot_endpoint:
                break
            jac = np.empty((n, n))
            h = 1e-7 * max(1.0, float(np.linalg.norm(w)))
            for m in range(n):
                e = np.zeros(n)
                e[m] = h
                end_m = _shoot(chart, p, w + e, tol)
                if end_m is None:
                    jac = None
                    break
                jac[:, m] = (_wrap_difference(chart, end_m, q) - res) / h
            if jac is None:
                break
            try:
                step = np.linalg.solve(jac, -res)
            except np.linalg.LinAlgError:
                break
            # damped update
            scale = 1.0
            improved = False
            for _ in range(12):
                w_new = w + scale * step
                end_new = _shoot(chart, p, w_new, tol)
                if end_new is not None:
                    res_new = _wrap_difference(chart, end_new, q)
                    if np.linalg.norm(res_new) < np.linalg.norm(res):
                        w, res = w_new, res_new
                        improved = True
                        break
                scale *= 0.5
            if not improved:
                break
        if np.linalg.norm(res) < tol.shoot_endpoint:
            if not any(np.linalg.norm(w - s) < 1e-6 * max(1.0, np.linalg.norm(s))
                       for s in solutions):
                solutions.append(w)

    if not solutions:
        raise ConnectorNotFound(
            f"no geodesic connector found from {p!r} to {q!r} within the iteration budget")

    lengths = [g_norm(chart, p, w) for w in solutions]
    shortest = min(lengths)
    keep = [(w, L) for w, L in zip(solutions, lengths)
            if L <= shortest + tol.minimality_slack and
            L <= chart.injectivity_at(p) + tol.minimality_slack]
    totals, vels, kept_lengths, paths = [], [], [], []
    for w, L in keep:
        u = w / L
        path = integrate_geodesic(chart, p, u, L, "levi_civita", tol)
        rec = reparametrize(path, chart)
        totals.append(rec.total_s)
        vels.append(w)
        kept_lengths.append(L)
        paths.append(path)
    return RepDistanceResult(min(totals), kept_lengths, totals, vels, paths)


def repar_distance(chart: ManifoldChart, p, q, n_directions: int = 64,
                   tol: Tolerances | None = None) -> float:
    """Reparametrized distance s(p,q): minimum total s over minimal connectors."""
    return minimal_connectors(chart, p, q, n_directions, tol).value
