"""Chart-based manifolds with density and the built-in catalog.

All computation is chart-local: a ManifoldChart carries coordinate names, a
metric (expression-valued where closed forms exist), a density function f,
and a declared safe domain excluding coordinate singularities.  The density
stores f; phi = f/(n-1) is derived on demand.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import CubicHermiteSpline
from scipy.optimize import brentq

from .expressions import (
    Call,
    EvaluationDomainError,
    Expr,
    External,
    Mul,
    Num,
    Pow,
    ScalarField,
    Var,
    compile_expr,
    parse_scalar_field,
    substitute,
)
from .models import sn_k, sn_k_positive_limit
from .settings import DEFAULT, Tolerances

__all__ = [
    "Box",
    "ManifoldChart",
    "ProductStructure",
    "CatalogError",
    "ParameterError",
    "catalog_build",
    "catalog_names",
    "catalog_manifest",
    "with_density",
    "rigidity_metric_build",
    "saturated_rigidity_domain",
]


class CatalogError(ValueError):
    """Unknown catalog name."""


class ParameterError(ValueError):
    """Catalog parameters outside the documented range."""


@dataclass(frozen=True)
class Box:
    """Axis-aligned coordinate box; infinite bounds mean unbounded."""

    lower: tuple[float, ...]
    upper: tuple[float, ...]

    def contains(self, p, margin: float = 0.0) -> bool:
        for x, lo, hi in zip(p, self.lower, self.upper):
            if not (lo + margin <= x <= hi - margin):
                return False
        return True

    def boundary_margin(self, p) -> float:
        """Distance to the nearest declared bound (+inf if unbounded)."""
        m = math.inf
        for x, lo, hi in zip(p, self.lower, self.upper):
            if math.isfinite(lo):
                m = min(m, x - lo)
            if math.isfinite(hi):
                m = min(m, hi - x)
        return m

    @classmethod
    def unbounded(cls, dim: int) -> "Box":
        return cls((-math.inf,) * dim, (math.inf,) * dim)


@dataclass(frozen=True)
class ProductStructure:
    """Metadata for warped/twisted product charts g = g_B + e^{2 psi} g_F."""

    base: "ManifoldChart"
    fiber: "ManifoldChart"
    psi: ScalarField
    base_dim: int
    fiber_dim: int
    warped: bool  # psi depends on the base coordinates only


class ManifoldChart:
    """A single coordinate chart with metric, density and safe domain.

    Immutable after construction; all evaluation methods are pure.  The
    metric is given either by an expression matrix (analytic derivatives)
    or a raw callable (central-difference derivatives with step
    1e-5 * max(1, |coordinate|)).
    """

    def __init__(
        self,
        name: str,
        coords: Sequence[str],
        metric_exprs: Sequence[Sequence[Expr]] | None = None,
        metric_fn: Callable[[np.ndarray], np.ndarray] | None = None,
        density: ScalarField | None = None,
        safe_domain: Box | None = None,
        predicate: Callable[[np.ndarray], bool] | None = None,
        periodic: dict[int, float] | None = None,
        injectivity_radius: float | Callable[[np.ndarray], float] = math.inf,
        product: ProductStructure | None = None,
        alpha_override: Sequence[Expr] | None = None,
        extras: dict | None = None,
        tol: Tolerances = DEFAULT,
    ):
        if metric_exprs is None and metric_fn is None:
            raise ValueError("chart needs metric_exprs or metric_fn")
        self.name = name
        self.coords = tuple(coords)
        self.dim = len(self.coords)
        self.metric_exprs = (
            None if metric_exprs is None else tuple(tuple(row) for row in metric_exprs)
        )
        self.metric_fn = metric_fn
        self.density = (density or ScalarField.zero(self.coords)).bind(self.coords)
        self.safe_domain = safe_domain or Box.unbounded(self.dim)
        self.predicate = predicate
        self.periodic = dict(periodic or {})
        self.injectivity_radius = injectivity_radius
        self.product = product
        self.alpha_override = None if alpha_override is None else tuple(alpha_override)
        self.extras = dict(extras or {})
        self.tol = tol
        self._d1: tuple | None = None  # [k][i][j] = d_k g_ij expressions
        self._d2: tuple | None = None  # [l][k][i][j] = d_l d_k g_ij expressions
        self._cm = None   # compiled metric entries (upper triangle)
        self._cd1 = None
        self._cd2 = None

    # -- coordinates -------------------------------------------------------

    def env(self, p) -> dict:
        return dict(zip(self.coords, (float(x) for x in p)))

    def point(self, mapping: dict[str, float]) -> np.ndarray:
        return np.array([float(mapping[c]) for c in self.coords])

    def contains(self, p, margin: float = 0.0) -> bool:
        if not self.safe_domain.contains(p, margin):
            return False
        return self.predicate(np.asarray(p, dtype=float)) if self.predicate else True

    def boundary_margin(self, p) -> float:
        return self.safe_domain.boundary_margin(p)

    def coords_close(self, a, b, tol: float) -> bool:
        """Coordinate equality modulo declared periods."""
        for i, (x, y) in enumerate(zip(a, b)):
            d = abs(x - y)
            if i in self.periodic:
                period = self.periodic[i]
                d = min(d % period, period - (d % period))
            if d > tol:
                return False
        return True

    def injectivity_at(self, p) -> float:
        r = self.injectivity_radius
        return float(r(p)) if callable(r) else float(r)

    # -- metric ------------------------------------------------------------

    def metric(self, p) -> np.ndarray:
        if self.metric_exprs is not None:
            n = self.dim
            if self._cm is None:
                self._cm = [[compile_expr(self.metric_exprs[i][j], self.coords)
                             for j in range(n)] for i in range(n)]
            g = np.empty((n, n))
            try:
                for i in range(n):
                    for j in range(i, n):
                        g[i, j] = g[j, i] = self._cm[i][j](p)
            except (ValueError, ZeroDivisionError, OverflowError):
                env = self.env(p)
                for i in range(n):
                    for j in range(i, n):
                        g[i, j] = g[j, i] = self.metric_exprs[i][j].evaluate(env)
            return g
        return np.asarray(self.metric_fn(np.asarray(p, dtype=float)), dtype=float)

    def _sym_d1(self):
        if self._d1 is None:
            n = self.dim
            self._d1 = tuple(
                tuple(tuple(self.metric_exprs[i][j].diff(self.coords[k]) for j in range(n))
                      for i in range(n))
                for k in range(n)
            )
        return self._d1

    def _sym_d2(self):
        if self._d2 is None:
            n = self.dim
            d1 = self._sym_d1()
            self._d2 = tuple(
                tuple(tuple(tuple(d1[k][i][j].diff(self.coords[l]) for j in range(n))
                            for i in range(n))
                      for k in range(n))
                for l in range(n)
            )
        return self._d2

    def metric_derivatives(self, p) -> np.ndarray:
        """dg[k, i, j] = d_k g_ij, analytic when the metric is expression-valued."""
        n = self.dim
        if self.metric_exprs is not None:
            d1 = self._sym_d1()
            if self._cd1 is None:
                self._cd1 = [[[compile_expr(d1[k][i][j], self.coords)
                               for j in range(n)] for i in range(n)] for k in range(n)]
            out = np.empty((n, n, n))
            try:
                for k in range(n):
                    for i in range(n):
                        for j in range(i, n):
                            out[k, i, j] = out[k, j, i] = self._cd1[k][i][j](p)
            except (ValueError, ZeroDivisionError, OverflowError):
                env = self.env(p)
                for k in range(n):
                    for i in range(n):
                        for j in range(i, n):
                            out[k, i, j] = out[k, j, i] = d1[k][i][j].evaluate(env)
            return out
        p = np.asarray(p, dtype=float)
        out = np.empty((n, n, n))
        for k in range(n):
            h = self.tol.metric_fd_step * max(1.0, abs(p[k]))
            e = np.zeros(n)
            e[k] = h
            out[k] = (self.metric(p + e) - self.metric(p - e)) / (2 * h)
        return out

    def has_analytic_metric(self) -> bool:
        return self.metric_exprs is not None

    def metric_second_derivatives(self, p) -> np.ndarray:
        """d2g[l, k, i, j] = d_l d_k g_ij (symbolic; FD-of-FD fallback)."""
        n = self.dim
        if self.metric_exprs is not None:
            d2 = self._sym_d2()
            if self._cd2 is None:
                self._cd2 = [[[[compile_expr(d2[l][k][i][j], self.coords)
                                for j in range(n)] for i in range(n)]
                              for k in range(n)] for l in range(n)]
            out = np.empty((n, n, n, n))
            try:
                for l in range(n):
                    for k in range(n):
                        for i in range(n):
                            for j in range(i, n):
                                out[l, k, i, j] = out[l, k, j, i] = self._cd2[l][k][i][j](p)
            except (ValueError, ZeroDivisionError, OverflowError):
                env = self.env(p)
                for l in range(n):
                    for k in range(n):
                        for i in range(n):
                            for j in range(i, n):
                                out[l, k, i, j] = out[l, k, j, i] = d2[l][k][i][j].evaluate(env)
            return out
        p = np.asarray(p, dtype=float)
        out = np.empty((n, n, n, n))
        for l in range(n):
            h = self.tol.gamma_fd_step * max(1.0, abs(p[l]))
            e = np.zeros(n)
            e[l] = h
            out[l] = (self.metric_derivatives(p + e) - self.metric_derivatives(p - e)) / (2 * h)
        return out

    # -- density -----------------------------------------------------------

    def f_value(self, p) -> float:
        return self.density(p)

    def f_gradient(self, p) -> np.ndarray:
        return self.density.gradient(p)

    def f_hessian(self, p) -> np.ndarray:
        return self.density.hessian(p)

    def phi_value(self, p) -> float:
        self._need_weighted()
        return self.f_value(p) / (self.dim - 1)

    def alpha_components(self, p) -> np.ndarray:
        """alpha_i = d_i f/(n-1), or the injected raw 1-form when overridden."""
        if self.alpha_override is not None:
            env = self.env(p)
            return np.array([a.evaluate(env) for a in self.alpha_override])
        self._need_weighted()
        return self.f_gradient(p) / (self.dim - 1)

    def alpha_derivatives(self, p) -> np.ndarray:
        """da[k, i] = d_k alpha_i."""
        if self.alpha_override is not None:
            env = self.env(p)
            n = self.dim
            out = np.empty((n, n))
            for i, a in enumerate(self.alpha_override):
                for k, c in enumerate(self.coords):
                    out[k, i] = a.diff(c).evaluate(env)
            return out
        self._need_weighted()
        return self.f_hessian(p) / (self.dim - 1)

    def _need_weighted(self) -> None:
        if self.dim < 2:
            raise ValueError("weighted quantities need dimension n > 1")

    # -- construction helpers ----------------------------------------------

    def replace(self, **kwargs) -> "ManifoldChart":
        base = dict(
            name=self.name,
            coords=self.coords,
            metric_exprs=self.metric_exprs,
            metric_fn=self.metric_fn,
            density=self.density,
            safe_domain=self.safe_domain,
            predicate=self.predicate,
            periodic=self.periodic,
            injectivity_radius=self.injectivity_radius,
            product=self.product,
            alpha_override=self.alpha_override,
            extras=self.extras,
            tol=self.tol,
        )
        base.update(kwargs)
        return ManifoldChart(**base)

    def __repr__(self):
        return f"ManifoldChart({self.name!r}, coords={self.coords})"


def with_density(chart: ManifoldChart, f: ScalarField | str) -> ManifoldChart:
    if isinstance(f, str):
        f = parse_scalar_field(f, chart.coords)
    return chart.replace(density=f.bind(chart.coords))


# ---------------------------------------------------------------------------
# Catalog

_LETTERS = ("x", "y", "z", "w", "u", "v")


def _euclidean_coords(n: int) -> tuple[str, ...]:
    if n <= len(_LETTERS):
        return _LETTERS[:n]
    return tuple(f"x{i + 1}" for i in range(n))


def _require_dim(params: dict, minimum: int) -> int:
    n = params.get("n")
    if n is None or int(n) != n or n < minimum:
        raise ParameterError(f"dimension n must be an integer >= {minimum}, got {n!r}")
    return int(n)


def _sphere_factor_exprs(coords: Sequence[str], scale: Expr) -> list[Expr]:
    """Diagonal entries of scale * g_{S^m} in nested polar coordinates."""
    out = []
    running = scale
    for c in coords:
        out.append(running)
        running = Mul(running, Pow(Call("sin", Var(c)), Num(2.0)))
    return out


def _diag_exprs(entries: Sequence[Expr]) -> list[list[Expr]]:
    n = len(entries)
    return [[entries[i] if i == j else Num(0.0) for j in range(n)] for i in range(n)]


def build_euclidean(params: dict, tol: Tolerances = DEFAULT) -> ManifoldChart:
    n = _require_dim(params, 1)
    coords = tuple(params.get("coords") or _euclidean_coords(n))
    return ManifoldChart(
        name=f"euclidean({n})",
        coords=coords,
        metric_exprs=_diag_exprs([Num(1.0)] * n),
        tol=tol,
    )


def build_sphere_polar(params: dict, tol: Tolerances = DEFAULT) -> ManifoldChart:
    n = _require_dim(params, 2)
    delta = float(params.get("delta", tol.domain_margin))
    if not 0 < delta < 1:
        raise ParameterError(f"delta must lie in (0, 1), got {delta!r}")
    coords = tuple(params.get("coords") or (("r", "theta") if n == 2 else
                                            ("r",) + tuple(f"theta{i}" for i in range(1, n))))
    entries = [Num(1.0)] + _sphere_factor_exprs(coords[1:], Pow(Call("sin", Var(coords[0])), Num(2.0)))
    lower = [delta] + [delta] * (n - 2) + [-math.inf]
    upper = [math.pi - delta] + [math.pi - delta] * (n - 2) + [math.inf]
    return ManifoldChart(
        name=f"sphere_polar({n})",
        coords=coords,
        metric_exprs=_diag_exprs(entries),
        safe_domain=Box(tuple(lower), tuple(upper)),
        periodic={n - 1: 2 * math.pi},
        injectivity_radius=math.pi,
        tol=tol,
    )


def build_hyperbolic_warped(params: dict, tol: Tolerances = DEFAULT) -> ManifoldChart:
    n = _require_dim(params, 2)
    k = float(params.get("k", 1.0))
    coords = tuple(params.get("coords") or (("r", "y") if n == 2 else
                                            ("r",) + tuple(f"y{i}" for i in range(1, n))))
    warp = Call("exp", Mul(Num(2.0 * k), Var(coords[0])))
    entries = [Num(1.0)] + [warp] * (n - 1)
    fiber = build_euclidean({"n": n - 1, "coords": coords[1:]}, tol) if n > 1 else None
    base = build_euclidean({"n": 1, "coords": coords[:1]}, tol)
    psi = ScalarField(Mul(Num(k), Var(coords[0])), coords, source=f"{k}*{coords[0]}")
    product = ProductStructure(base, fiber, psi, 1, n - 1, warped=True) if n > 1 else None
    return ManifoldChart(
        name=f"hyperbolic_warped({n},k={k})",
        coords=coords,
        metric_exprs=_diag_exprs(entries),
        product=product,
        tol=tol,
    )


def build_expansion_example(params: dict, tol: Tolerances = DEFAULT) -> ManifoldChart:
    n = _require_dim(params, 2)
    a = float(params.get("A", 1.0))
    chart = build_hyperbolic_warped({"n": n, "k": 1.0}, tol)
    f = ScalarField(Mul(Num(a), Var(chart.coords[0])), chart.coords, source=f"{a}*r")
    return chart.replace(name=f"expansion_example({n},A={a})", density=f)


def _as_chart(spec, tol: Tolerances, used_names: set[str]) -> ManifoldChart:
    """Resolve a base/fiber spec (chart or {'name':..., 'parameters':...})."""
    if isinstance(spec, ManifoldChart):
        chart = spec
    else:
        name = spec["name"]
        sub_params = dict(spec.get("parameters", {}))
        if "coords" in spec:
            sub_params["coords"] = tuple(spec["coords"])
        chart = catalog_build(name, sub_params, tol)
    if chart.metric_exprs is None:
        raise ParameterError("product factors need expression-valued metrics")
    # rename colliding coordinates using the free letter pool
    rename: dict[str, Expr] = {}
    new_coords = []
    pool = [c for c in _LETTERS if c not in used_names] + [
        f"c{i}" for i in range(len(used_names) + chart.dim + 2)]
    for c in chart.coords:
        if c in used_names:
            fresh = next(p for p in pool if p not in used_names and p not in chart.coords)
            rename[c] = Var(fresh)
            new_coords.append(fresh)
            used_names.add(fresh)
            pool.remove(fresh)
        else:
            new_coords.append(c)
            used_names.add(c)
    if rename:
        exprs = [[substitute(e, rename) for e in row] for row in chart.metric_exprs]
        periodic = chart.periodic
        chart = ManifoldChart(
            name=chart.name,
            coords=new_coords,
            metric_exprs=exprs,
            safe_domain=chart.safe_domain,
            periodic=periodic,
            injectivity_radius=chart.injectivity_radius,
            tol=tol,
        )
    return chart


def _build_product(params: dict, tol: Tolerances, twisted: bool) -> ManifoldChart:
    if "base" not in params or "fiber" not in params:
        raise ParameterError("product charts need 'base' and 'fiber' entries")
    used: set[str] = set()
    base = _as_chart(params["base"], tol, used)
    fiber = _as_chart(params["fiber"], tol, used)
    coords = base.coords + fiber.coords
    psi_src = params.get("psi", "0")
    psi = parse_scalar_field(psi_src, coords)
    if not twisted:
        forbidden = psi.expr.variables().intersection(fiber.coords)
        if forbidden:
            raise ParameterError(
                f"warped products need psi on the base only; psi uses {sorted(forbidden)}")
    nb, nf = base.dim, fiber.dim
    n = nb + nf
    warp = Call("exp", Mul(Num(2.0), psi.expr))
    exprs = [[Num(0.0)] * n for _ in range(n)]
    for i in range(nb):
        for j in range(nb):
            exprs[i][j] = base.metric_exprs[i][j]
    for i in range(nf):
        for j in range(nf):
            entry = fiber.metric_exprs[i][j]
            if not (isinstance(entry, Num) and entry.value == 0.0):
                exprs[nb + i][nb + j] = Mul(warp, entry)
    lower = base.safe_domain.lower + fiber.safe_domain.lower
    upper = base.safe_domain.upper + fiber.safe_domain.upper
    periodic = dict(base.periodic)
    periodic.update({nb + k: v for k, v in fiber.periodic.items()})
    kind = "twisted_product" if twisted else "warped_product"
    return ManifoldChart(
        name=f"{kind}({base.name},{fiber.name},psi={psi_src})",
        coords=coords,
        metric_exprs=exprs,
        safe_domain=Box(lower, upper),
        periodic=periodic,
        product=ProductStructure(base, fiber, psi, nb, nf, warped=not twisted),
        tol=tol,
    )


def build_warped_product(params: dict, tol: Tolerances = DEFAULT) -> ManifoldChart:
    return _build_product(params, tol, twisted=False)


def build_twisted_product(params: dict, tol: Tolerances = DEFAULT) -> ManifoldChart:
    return _build_product(params, tol, twisted=True)


# -- rigidity metrics --------------------------------------------------------


def _repar_integrand(f: ScalarField, n: int) -> Callable[[float], float]:
    c = -2.0 / (n - 1)
    return lambda t: math.exp(c * f([t]))


def _build_s_interpolant(f: ScalarField, n: int, r_max: float,
                         tol: Tolerances) -> CubicHermiteSpline:
    """Cumulative s(r) = int_0^r e^{-2f/(n-1)} dt as a Hermite spline.

    Node derivative data is the exact integrand, so the interpolant error is
    O(h^4); nodes are doubled until the midpoint error is below spline_err.
    """
    integrand = _repar_integrand(f, n)
    n_nodes = 65
    while True:
        rs = np.linspace(0.0, r_max, n_nodes)
        vals = np.zeros(n_nodes)
        for i in range(1, n_nodes):
            seg, _ = quad(integrand, rs[i - 1], rs[i], epsabs=tol.quad_abs, epsrel=1e-12)
            vals[i] = vals[i - 1] + seg
        derivs = np.array([integrand(r) for r in rs])
        spline = CubicHermiteSpline(rs, vals, derivs)
        mids = 0.5 * (rs[:-1] + rs[1:])
        err = 0.0
        for i, m in enumerate(mids[:: max(1, len(mids) // 16)]):
            seg, _ = quad(integrand, 0.0, m, epsabs=tol.quad_abs, epsrel=1e-12)
            err = max(err, abs(spline(m) - seg))
        if err < tol.spline_err or n_nodes >= 4097:
            return spline
        n_nodes = 2 * (n_nodes - 1) + 1


def rigidity_metric_build(params: dict, tol: Tolerances = DEFAULT) -> ManifoldChart:
    """Rotationally symmetric chart dr^2 + e^{2f/(n-1)} sn_K^2(s(r)) g_{S^{n-1}}.

    By construction Ric_f^1(d/dr, d/dr) = (n-1) K e^{-4f/(n-1)}: the equality
    case of the mean-curvature comparison.
    """
    n = _require_dim(params, 2)
    K = float(params.get("K", 1.0))
    f_source = params.get("f", "0")
    delta = float(params.get("delta", tol.domain_margin))
    r_max = float(params.get("r_max", 6.0))
    if r_max <= delta:
        raise ParameterError(f"radial domain ({delta}, {r_max}) is empty")
    f = parse_scalar_field(f_source, ("r",))
    spline = _build_s_interpolant(f, n, r_max, tol)
    s_limit = sn_k_positive_limit(K)
    r_regular = r_max
    if K > 0:
        s_end = float(spline(r_max))
        if s_end > s_limit * (1 + 1e-12):
            r_degenerate = brentq(lambda r: float(spline(r)) - s_limit, 0.0, r_max)
            if "r_max" in params:
                raise EvaluationDomainError(
                    f"s(r) exceeds pi/sqrt(K)={s_limit!r} at r={r_degenerate!r} "
                    f"inside the declared domain (metric degenerates)")
            # default domain: shrink to just inside the degeneration radius
            r_max = r_degenerate * (1 - 1e-9)
            spline = _build_s_interpolant(f, n, r_max, tol)
            s_end = float(spline(r_max))
        if s_end > s_limit - 1e-5:
            # diameter-saturated chart: the angular metric vanishes at the far
            # end, so the declared domain stops just short of the degeneracy
            # (the s(r) record still covers the full construction)
            r_regular = brentq(lambda r: float(spline(r)) - (s_limit - 1e-5),
                               0.0, r_max)

    coords = ("r", "theta") if n == 2 else ("r",) + tuple(f"theta{i}" for i in range(1, n))
    s_node = External("s", lambda r: float(spline(r)),
                      lambda arg: Call("exp", Mul(Num(-2.0 / (n - 1)),
                                                  substitute(f.expr, {"r": arg}))),
                      Var("r"))
    sn_expr: Expr
    if K > 0:
        rt = math.sqrt(K)
        sn_expr = Mul(Num(1.0 / rt), Call("sin", Mul(Num(rt), s_node)))
    elif K < 0:
        rt = math.sqrt(-K)
        sn_expr = Mul(Num(1.0 / rt), Call("sinh", Mul(Num(rt), s_node)))
    else:
        sn_expr = s_node
    radial_coef = Mul(Call("exp", Mul(Num(2.0 / (n - 1)), f.expr)), Pow(sn_expr, Num(2.0)))
    entries = [Num(1.0)] + _sphere_factor_exprs(coords[1:], radial_coef)
    lower = [delta] + [delta] * (n - 2) + [-math.inf]
    upper = [r_regular] + [math.pi - delta] * (n - 2) + [math.inf]
    density = ScalarField(f.expr, coords, source=f_source)
    return ManifoldChart(
        name=f"rigidity_metric({n},K={K},f={f_source})",
        coords=coords,
        metric_exprs=_diag_exprs(entries),
        density=density,
        safe_domain=Box(tuple(lower), tuple(upper)),
        periodic={n - 1: 2 * math.pi},
        extras={"K": K, "s_of_r": spline, "f_source": f_source, "r_max": r_max},
        tol=tol,
    )


def saturated_rigidity_domain(f_source: str, n: int, K: float,
                              tol: Tolerances = DEFAULT, r_cap: float = 100.0) -> float:
    """Radius D with int_0^D e^{-2f/(n-1)} dt = pi/sqrt(K) (diameter-rigid charts)."""
    if K <= 0:
        raise ParameterError("saturation needs K > 0")
    f = parse_scalar_field(f_source, ("r",))
    integrand = _repar_integrand(f, n)
    target = math.pi / math.sqrt(K)

    def total(r):
        val, _ = quad(integrand, 0.0, r, epsabs=tol.quad_abs, epsrel=1e-12, limit=200)
        return val - target

    if total(r_cap) < 0:
        raise ParameterError(
            f"s(r) never reaches pi/sqrt(K)={target!r} below r={r_cap!r}; "
            "the density decays too fast to saturate the diameter bound")
    return brentq(total, 1e-12, r_cap, xtol=1e-13, rtol=1e-15)


# -- registry ----------------------------------------------------------------

_CATALOG: dict[str, tuple[Callable[[dict, Tolerances], ManifoldChart], dict]] = {
    "euclidean": (build_euclidean, {"n": "int >= 1", "coords": "optional tuple of names"}),
    "sphere_polar": (build_sphere_polar, {"n": "int >= 2", "delta": "float in (0,1), default 1e-3"}),
    "hyperbolic_warped": (build_hyperbolic_warped, {"n": "int >= 2", "k": "float, default 1"}),
    "warped_product": (build_warped_product,
                       {"base": "catalog spec", "fiber": "catalog spec",
                        "psi": "expression in base coordinates"}),
    "twisted_product": (build_twisted_product,
                        {"base": "catalog spec", "fiber": "catalog spec",
                         "psi": "expression in base and fiber coordinates"}),
    "rigidity_metric": (rigidity_metric_build,
                        {"n": "int >= 2", "K": "float", "f": "expression in r",
                         "r_max": "float, default 6.0", "delta": "float, default 1e-3"}),
    "expansion_example": (build_expansion_example, {"n": "int >= 2", "A": "float"}),
}


def catalog_names() -> tuple[str, ...]:
    return tuple(sorted(_CATALOG))


def catalog_build(name: str, parameters: dict | None = None,
                  tol: Tolerances = DEFAULT) -> ManifoldChart:
    if name not in _CATALOG:
        raise CatalogError(f"unknown catalog name {name!r}; known: {', '.join(catalog_names())}")
    builder, _ = _CATALOG[name]
    return builder(dict(parameters or {}), tol)


def catalog_manifest() -> dict:
    """Machine-readable catalog: names, parameter schemas, coordinate layout."""
    return {
        name: {"parameters": schema}
        for name, (_, schema) in sorted(_CATALOG.items())
    }
