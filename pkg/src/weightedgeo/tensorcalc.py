"""Christoffel symbols, weighted connection coefficients, and curvature.

Sign conventions: R(X,Y)Z = nabla_X nabla_Y Z - nabla_Y nabla_X Z - nabla_[X,Y] Z,
with component layout R[k, i, j, l] = (R(e_i, e_j) e_l)^k, and
Ric(Y,Z) = tr[X -> R(X,Y)Z].

Two independent curvature paths are kept on purpose:

* the analytic route assembles the weighted curvature from the Levi-Civita
  tensor (exact coefficient derivatives from the metric's symbolic second
  derivatives) plus the Hessian/gradient correction terms of the density;
* the coefficient oracle differentiates the weighted connection
  coefficients by central differences and forms dGamma + GammaGamma
  directly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .charts import ManifoldChart
from .expressions import Call, Expr, Mul, Num, ScalarField, parse_scalar_field
from .settings import DEFAULT, Tolerances

__all__ = [
    "SingularMetricError",
    "ConnectionCoefficients",
    "christoffel",
    "weighted_coeffs",
    "riemann_lc",
    "ricci_lc",
    "riemann_alpha_formula",
    "riemann_alpha_oracle",
    "curvature_alpha",
    "ric_f",
    "ric_alpha_trace",
    "weighted_sec",
    "hess_scalar",
    "drift_laplacian_scalar",
    "volume_form_parallel_residual",
    "codazzi_residual",
    "nabla_alpha_g_residual",
    "alpha_curvature_operator",
]


class SingularMetricError(ValueError):
    pass


@dataclass(frozen=True)
class ConnectionCoefficients:
    point: np.ndarray
    gamma: np.ndarray  # [k, i, j] = Gamma^k_ij, symmetric in (i, j)
    flavor: str  # "levi_civita" | "weighted"


def metric_inverse(chart: ManifoldChart, p, g: np.ndarray | None = None) -> np.ndarray:
    g = chart.metric(p) if g is None else g
    cond = np.linalg.cond(g)
    if not np.isfinite(cond) or cond > chart.tol.metric_condition_max:
        raise SingularMetricError(
            f"metric at {np.asarray(p)!r} is numerically singular (cond={cond:.3e})")
    return np.linalg.inv(g)


def _gamma_from_metric(g_inv: np.ndarray, dg: np.ndarray) -> np.ndarray:
    # Gamma^k_ij = 1/2 g^{kl} (d_i g_jl + d_j g_il - d_l g_ij)
    bracket = np.einsum("ijl->lij", dg) + np.einsum("jil->lij", dg) - dg
    return 0.5 * np.einsum("kl,lij->kij", g_inv, bracket)


def christoffel(chart: ManifoldChart, p) -> ConnectionCoefficients:
    p = np.asarray(p, dtype=float)
    g_inv = metric_inverse(chart, p)
    gamma = _gamma_from_metric(g_inv, chart.metric_derivatives(p))
    return ConnectionCoefficients(p, gamma, "levi_civita")


def weighted_coeffs(chart: ManifoldChart, p) -> ConnectionCoefficients:
    """(Gamma^alpha)^k_ij = Gamma^k_ij - alpha_i delta^k_j - alpha_j delta^k_i."""
    p = np.asarray(p, dtype=float)
    gamma = christoffel(chart, p).gamma.copy()
    alpha = chart.alpha_components(p)
    n = chart.dim
    eye = np.eye(n)
    gamma -= np.einsum("i,kj->kij", alpha, eye) + np.einsum("j,ki->kij", alpha, eye)
    return ConnectionCoefficients(p, gamma, "weighted")


def christoffel_derivatives(chart: ManifoldChart, p) -> np.ndarray:
    """dGamma[m, k, i, j] = d_m Gamma^k_ij, exact for expression metrics."""
    p = np.asarray(p, dtype=float)
    n = chart.dim
    if chart.has_analytic_metric():
        g_inv = metric_inverse(chart, p)
        dg = chart.metric_derivatives(p)
        d2g = chart.metric_second_derivatives(p)
        # d_m g^{kl} = -g^{ka} d_m g_ab g^{bl}
        dginv = -np.einsum("ka,mab,bl->mkl", g_inv, dg, g_inv)
        bracket = np.einsum("ijl->lij", dg) + np.einsum("jil->lij", dg) - dg
        dbracket = (np.einsum("mijl->mlij", d2g) + np.einsum("mjil->mlij", d2g)
                    - np.einsum("mlij->mlij", d2g))
        return 0.5 * (np.einsum("mkl,lij->mkij", dginv, bracket)
                      + np.einsum("kl,mlij->mkij", g_inv, dbracket))
    out = np.empty((n, n, n, n))
    for m in range(n):
        h = chart.tol.gamma_fd_step * max(1.0, abs(p[m]))
        e = np.zeros(n)
        e[m] = h
        out[m] = (christoffel(chart, p + e).gamma - christoffel(chart, p - e).gamma) / (2 * h)
    return out


def _riemann_from(gamma: np.ndarray, dgamma: np.ndarray) -> np.ndarray:
    # R[k,i,j,l] = d_i Gamma^k_jl - d_j Gamma^k_il + Gamma^k_im Gamma^m_jl - Gamma^k_jm Gamma^m_il
    term = np.einsum("ikjl->kijl", dgamma) - np.einsum("jkil->kijl", dgamma)
    quad = np.einsum("kim,mjl->kijl", gamma, gamma)
    return term + quad - np.einsum("kjm,mil->kijl", gamma, gamma)


def riemann_lc(chart: ManifoldChart, p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    gamma = christoffel(chart, p).gamma
    return _riemann_from(gamma, christoffel_derivatives(chart, p))


def ricci_lc(chart: ManifoldChart, p) -> np.ndarray:
    return np.einsum("kkjl->jl", riemann_lc(chart, p))


def hess_scalar(chart: ManifoldChart, p, u: ScalarField) -> np.ndarray:
    """Covariant Hessian (Hess u)_ij = d_i d_j u - Gamma^k_ij d_k u."""
    p = np.asarray(p, dtype=float)
    u = u.bind(chart.coords)
    gamma = christoffel(chart, p).gamma
    return u.hessian(p) - np.einsum("kij,k->ij", gamma, u.gradient(p))


def _hess_from_grad(chart: ManifoldChart, p, grad: np.ndarray, hess_partials: np.ndarray,
                    gamma: np.ndarray) -> np.ndarray:
    return hess_partials - np.einsum("kij,k->ij", gamma, grad)


def riemann_alpha_formula(chart: ManifoldChart, p) -> np.ndarray:
    """Weighted curvature via the analytic decomposition (closed alpha only):

    R^a(X,Y)Z = R(X,Y)Z + Hess(phi)(Y,Z) X - Hess(phi)(X,Z) Y
                + dphi(Y) dphi(Z) X - dphi(X) dphi(Z) Y.
    """
    if chart.alpha_override is not None:
        raise ValueError("analytic curvature formula requires alpha = d(phi); "
                         "use the coefficient oracle for raw one-forms")
    p = np.asarray(p, dtype=float)
    n = chart.dim
    riem = riemann_lc(chart, p)
    gamma = christoffel(chart, p).gamma
    dphi = chart.f_gradient(p) / (n - 1)
    hphi = _hess_from_grad(chart, p, dphi * (n - 1), chart.f_hessian(p), gamma) / (n - 1)
    bil = hphi + np.outer(dphi, dphi)
    eye = np.eye(n)
    riem = riem + np.einsum("jl,ki->kijl", bil, eye) - np.einsum("il,kj->kijl", bil, eye)
    return riem


def weighted_coeffs_derivatives(chart: ManifoldChart, p) -> np.ndarray:
    dgamma = christoffel_derivatives(chart, p)
    dalpha = chart.alpha_derivatives(p)
    n = chart.dim
    eye = np.eye(n)
    return dgamma - np.einsum("mi,kj->mkij", dalpha, eye) - np.einsum("mj,ki->mkij", dalpha, eye)


def riemann_alpha_oracle(chart: ManifoldChart, p,
                         step: float | None = None) -> np.ndarray:
    """Weighted curvature from central differences of the weighted coefficients."""
    p = np.asarray(p, dtype=float)
    n = chart.dim
    step = chart.tol.gamma_fd_step if step is None else step
    gamma = weighted_coeffs(chart, p).gamma
    dgamma = np.empty((n, n, n, n))
    for m in range(n):
        h = step * max(1.0, abs(p[m]))
        e = np.zeros(n)
        e[m] = h
        dgamma[m] = (weighted_coeffs(chart, p + e).gamma
                     - weighted_coeffs(chart, p - e).gamma) / (2 * h)
    return _riemann_from(gamma, dgamma)


def curvature_alpha(chart: ManifoldChart, p, X, Y, Z,
                    method: str = "formula") -> np.ndarray:
    """R^alpha(X, Y) Z as a coordinate vector at p."""
    if method == "formula":
        riem = riemann_alpha_formula(chart, p)
    elif method == "oracle":
        riem = riemann_alpha_oracle(chart, p)
    else:
        raise ValueError(f"unknown curvature method {method!r}")
    return np.einsum("kijl,i,j,l->k", riem, np.asarray(X, float),
                     np.asarray(Y, float), np.asarray(Z, float))


def ric_alpha_trace(chart: ManifoldChart, p, Y, Z, method: str = "formula") -> float:
    """tr[X -> R^alpha(X, Y) Z], the Ricci tensor of the weighted connection."""
    if method == "formula":
        riem = riemann_alpha_formula(chart, p)
    else:
        riem = riemann_alpha_oracle(chart, p)
    return float(np.einsum("kkjl,j,l->", riem, np.asarray(Y, float), np.asarray(Z, float)))


def ric_f_matrix(chart: ManifoldChart, p, N: float) -> np.ndarray:
    """Full N-Bakry-Emery Ricci tensor as an (n, n) matrix at p."""
    p = np.asarray(p, dtype=float)
    n = chart.dim
    if not math.isinf(N) and N == n:
        raise ValueError("the Bakry-Emery parameter N must differ from the dimension n")
    ric = ricci_lc(chart, p)
    gamma = christoffel(chart, p).gamma
    hf = _hess_from_grad(chart, p, chart.f_gradient(p), chart.f_hessian(p), gamma)
    out = ric + hf
    if not math.isinf(N):
        df = chart.f_gradient(p)
        out = out - np.outer(df, df) / (N - n)
    return out


def ric_f(chart: ManifoldChart, p, Y, Z, N: float) -> float:
    """N-Bakry-Emery Ricci tensor Ric + Hess f - df (x) df / (N - n) at (Y, Z)."""
    p = np.asarray(p, dtype=float)
    n = chart.dim
    if not math.isinf(N) and N == n:
        raise ValueError("the Bakry-Emery parameter N must differ from the dimension n")
    Y = np.asarray(Y, float)
    Z = np.asarray(Z, float)
    ric = ricci_lc(chart, p)
    gamma = christoffel(chart, p).gamma
    hf = _hess_from_grad(chart, p, chart.f_gradient(p), chart.f_hessian(p), gamma)
    val = np.einsum("jl,j,l->", ric + hf, Y, Z)
    if not math.isinf(N):
        df = chart.f_gradient(p)
        val -= (df @ Y) * (df @ Z) / (N - n)
    return float(val)


def weighted_sec(chart: ManifoldChart, p, X, Y) -> float:
    """sec(X,Y) + Hess phi(Y,Y) + dphi(Y)^2 for a g-orthonormal pair (X, Y)."""
    p = np.asarray(p, dtype=float)
    X = np.asarray(X, float)
    Y = np.asarray(Y, float)
    g = chart.metric(p)
    tol = chart.tol.orthonormal_tol
    if (abs(X @ g @ X - 1) > tol or abs(Y @ g @ Y - 1) > tol or abs(X @ g @ Y) > tol):
        raise ValueError("weighted_sec requires a g-orthonormal pair")
    n = chart.dim
    riem = riemann_lc(chart, p)
    sec = float(X @ g @ np.einsum("kijl,i,j,l->k", riem, X, Y, Y))
    gamma = christoffel(chart, p).gamma
    dphi = chart.f_gradient(p) / (n - 1)
    hphi = _hess_from_grad(chart, p, chart.f_gradient(p), chart.f_hessian(p), gamma) / (n - 1)
    return sec + float(Y @ hphi @ Y) + float(dphi @ Y) ** 2


def drift_laplacian_scalar(chart: ManifoldChart, p, u: ScalarField | str) -> float:
    """Delta u - g(grad f, grad u)."""
    p = np.asarray(p, dtype=float)
    if isinstance(u, str):
        u = parse_scalar_field(u, chart.coords)
    u = u.bind(chart.coords)
    g_inv = metric_inverse(chart, p)
    hess = hess_scalar(chart, p, u)
    lap = float(np.einsum("ij,ij->", g_inv, hess))
    drift = float(chart.f_gradient(p) @ g_inv @ u.gradient(p))
    return lap - drift


def volume_form_parallel_residual(chart: ManifoldChart, p, direction) -> float:
    """|(nabla^alpha_X omega)(E_1, ..., E_n)| for the candidate parallel form.

    omega = e^{-(n+1) f/(n-1)} sqrt(det g) dx^1 ^ ... ^ dx^n for density
    charts.  With a raw alpha override (test hook, no potential) the
    density correction is absent and omega is the Riemannian volume form;
    the residual is then nonzero exactly when alpha fails to be closed.
    """
    p = np.asarray(p, dtype=float)
    X = np.asarray(direction, float)
    n = chart.dim
    g = chart.metric(p)
    g_inv = metric_inverse(chart, p, g)
    dg = chart.metric_derivatives(p)
    det = float(np.linalg.det(g))
    dlog_sqrtdet = 0.5 * np.einsum("ij,kij->k", g_inv, dg)
    if chart.alpha_override is None:
        w = math.exp(-(n + 1) / (n - 1) * chart.f_value(p)) * math.sqrt(det)
        dlogw = dlog_sqrtdet - (n + 1) / (n - 1) * chart.f_gradient(p)
    else:
        w = math.sqrt(det)
        dlogw = dlog_sqrtdet
    gamma_w = weighted_coeffs(chart, p).gamma
    trace = np.einsum("iji->j", gamma_w)
    return abs(float(X @ (w * dlogw - w * trace)))


def _as_expr_matrix(chart: ManifoldChart, T) -> list[list[Expr]]:
    n = chart.dim
    rows = []
    for row in T:
        out = []
        for entry in row:
            if isinstance(entry, str):
                entry = parse_scalar_field(entry, chart.coords).expr
            elif isinstance(entry, ScalarField):
                entry = entry.bind(chart.coords).expr
            elif not isinstance(entry, Expr):
                entry = Num(float(entry))
            out.append(entry)
        rows.append(out)
    if len(rows) != n or any(len(r) != n for r in rows):
        raise ValueError(f"tensor must be {n}x{n} for this chart")
    return rows


def codazzi_residual(chart: ManifoldChart, p, T, weighted: bool = False) -> float:
    """max |(nabla_Z T)(X,Y) - (nabla_Y T)(X,Z)| over coordinate triples.

    With weighted=True the residual is computed for e^{-phi} T under the
    weighted connection; both residuals vanish together at generic points.
    """
    p = np.asarray(p, dtype=float)
    n = chart.dim
    rows = _as_expr_matrix(chart, T)
    env = chart.env(p)
    vals = np.array([[e.evaluate(env) for e in row] for row in rows])
    if not np.allclose(vals, vals.T, atol=1e-12):
        raise ValueError("codazzi_residual requires a symmetric 2-tensor")
    if weighted:
        phi_expr = Mul(Num(1.0 / (n - 1)), chart.density.expr)
        weight = Call("exp", Mul(Num(-1.0), phi_expr))
        rows = [[Mul(weight, e) for e in row] for row in rows]
        gamma = weighted_coeffs(chart, p).gamma
        vals = np.array([[e.evaluate(env) for e in row] for row in rows])
    else:
        gamma = christoffel(chart, p).gamma
    dT = np.empty((n, n, n))
    for k, c in enumerate(chart.coords):
        for i in range(n):
            for j in range(n):
                dT[k, i, j] = rows[i][j].diff(c).evaluate(env)
    # (nabla_k T)_ij = d_k T_ij - Gamma^m_ki T_mj - Gamma^m_kj T_im
    nabla = dT - np.einsum("mki,mj->kij", gamma, vals) - np.einsum("mkj,im->kij", gamma, vals)
    return float(np.max(np.abs(nabla - np.einsum("kij->jik", nabla))))


def nabla_alpha_g_residual(chart: ManifoldChart, p) -> float:
    """Residual of (nabla^alpha_Z g)(X,Y) = 2 a(Z) g(X,Y) + a(X) g(Z,Y) + a(Y) g(X,Z)."""
    p = np.asarray(p, dtype=float)
    g = chart.metric(p)
    dg = chart.metric_derivatives(p)
    gamma = weighted_coeffs(chart, p).gamma
    nabla = dg - np.einsum("mki,mj->kij", gamma, g) - np.einsum("mkj,im->kij", gamma, g)
    alpha = chart.alpha_components(p)
    rhs = (2 * np.einsum("k,ij->kij", alpha, g) + np.einsum("i,kj->kij", alpha, g)
           + np.einsum("j,ik->kij", alpha, g))
    return float(np.max(np.abs(nabla - rhs)))


def alpha_curvature_operator(chart: ManifoldChart, p, Y,
                             method: str = "formula") -> np.ndarray:
    """Matrix of X -> R^alpha(X, Y) Y in coordinate components."""
    riem = riemann_alpha_formula(chart, p) if method == "formula" else riemann_alpha_oracle(chart, p)
    Y = np.asarray(Y, float)
    return np.einsum("kijl,j,l->ki", riem, Y, Y)
