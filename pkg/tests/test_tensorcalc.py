import math

import numpy as np
import pytest

from weightedgeo import tensorcalc as tc
from weightedgeo.charts import ManifoldChart, catalog_build, with_density
from weightedgeo.expressions import parse_expression

SPHERE = catalog_build("sphere_polar", {"n": 2})
SPHERE_COS = with_density(SPHERE, "cos(r)")
EUCLID2 = catalog_build("euclidean", {"n": 2})
EUCLID3 = catalog_build("euclidean", {"n": 3})
HYP = catalog_build("hyperbolic_warped", {"n": 2, "k": 1})

CATALOG_WITH_DENSITY = [
    (with_density(EUCLID2, "0"), [0.2, 0.6]),
    (with_density(EUCLID2, "x*y/3"), [0.4, -0.7]),
    (SPHERE_COS, [1.2, 0.5]),
    (with_density(HYP, "r"), [0.3, 0.4]),
    (catalog_build("expansion_example", {"n": 2, "A": 3.0}), [0.1, -0.2]),
    (catalog_build("rigidity_metric", {"n": 2, "K": 1.0, "f": "r/4"}), [0.9, 1.1]),
    (with_density(catalog_build("sphere_polar", {"n": 3}), "cos(r)/2"), [1.3, 1.1, 0.2]),
]


def rel_gap(a, b, floor=1e-7):
    a, b = np.asarray(a), np.asarray(b)
    denom = max(float(np.max(np.abs(a))), float(np.max(np.abs(b))), floor / 1e-4)
    return float(np.max(np.abs(a - b))) / denom


# -- Christoffel symbols -----------------------------------------------------


def test_euclidean_christoffel_zero():
    co = tc.christoffel(EUCLID3, [0.3, 1.0, -2.0])
    assert np.max(np.abs(co.gamma)) == 0.0


def test_sphere_christoffel_closed_form():
    co = tc.christoffel(SPHERE, [1.0, 0.4])
    assert abs(co.gamma[0, 1, 1] - (-math.sin(1) * math.cos(1))) < 1e-12
    assert abs(co.gamma[1, 0, 1] - 1 / math.tan(1)) < 1e-12


def test_hyperbolic_christoffel_closed_form():
    co = tc.christoffel(HYP, [0.0, 0.7])
    assert abs(co.gamma[1, 0, 1] - 1.0) < 1e-12
    assert abs(co.gamma[0, 1, 1] - (-1.0)) < 1e-12


def test_christoffel_vs_koszul_finite_differences():
    # oracle: central differences of the metric through the Koszul formula
    p = np.array([1.1, 0.3])
    g_inv = np.linalg.inv(SPHERE.metric(p))
    h = 1e-6
    n = 2
    dg = np.empty((n, n, n))
    for k in range(n):
        e = np.zeros(n)
        e[k] = h
        dg[k] = (SPHERE.metric(p + e) - SPHERE.metric(p - e)) / (2 * h)
    bracket = np.einsum("ijl->lij", dg) + np.einsum("jil->lij", dg) - dg
    oracle = 0.5 * np.einsum("kl,lij->kij", g_inv, bracket)
    assert rel_gap(tc.christoffel(SPHERE, p).gamma, oracle) < 1e-6


@pytest.mark.parametrize("chart,p", CATALOG_WITH_DENSITY)
def test_connection_coefficients_torsion_free(chart, p):
    for co in (tc.christoffel(chart, p), tc.weighted_coeffs(chart, p)):
        assert np.max(np.abs(co.gamma - np.transpose(co.gamma, (0, 2, 1)))) < 1e-12


def test_weighted_coeffs_constant_density_equals_christoffel():
    chart = with_density(SPHERE, "1/2")
    p = [0.9, 0.1]
    assert np.allclose(tc.weighted_coeffs(chart, p).gamma,
                       tc.christoffel(chart, p).gamma)


def test_weighted_coeffs_defining_formula():
    chart = with_density(EUCLID2, "y")
    cw = tc.weighted_coeffs(chart, [0.0, 0.0]).gamma
    assert abs(cw[0, 0, 1] - (-1.0)) < 1e-15
    assert abs(cw[1, 1, 1] - (-2.0)) < 1e-15
    assert abs(cw[0, 0, 0]) < 1e-15


def test_weighted_coeffs_sphere_radial():
    for r in (0.5, 1.0, 2.2):
        cw = tc.weighted_coeffs(SPHERE_COS, [r, 0.3]).gamma
        assert abs(cw[0, 0, 0] - 2 * math.sin(r)) < 1e-12


def test_weighted_transport_oracle_short_segment():
    # first-principles difference: transport d/dt v + Gamma(v, sigma') = 0 over a
    # short segment vs the matrix exponential of the frozen coefficients
    chart = with_density(EUCLID2, "y")
    p = np.array([0.3, -0.1])
    v = np.array([0.7, 0.4])
    u = np.array([1.0, 2.0]) / math.sqrt(5)
    h = 1e-5
    gamma = tc.weighted_coeffs(chart, p).gamma
    v_formula = v - h * np.einsum("kij,i,j->k", gamma, u, v)
    # finite difference of covariant derivative: numeric integration (Euler
    # midpoint) of the same ODE with position-dependent coefficients
    mid = p + 0.5 * h * u
    gamma_mid = tc.weighted_coeffs(chart, mid).gamma
    v_mid = v - 0.5 * h * np.einsum("kij,i,j->k", gamma, u, v)
    v_oracle = v - h * np.einsum("kij,i,j->k", gamma_mid, u, v_mid)
    assert np.max(np.abs(v_formula - v_oracle)) < 5e-10


# -- curvature ---------------------------------------------------------------


def test_flat_no_density_curvature_zero():
    chart = with_density(EUCLID3, "0")
    out = tc.curvature_alpha(chart, [0.1, 0.2, 0.3], [1, 0, 0], [0, 1, 0], [0, 0, 1])
    assert np.max(np.abs(out)) < 1e-14


def test_antisymmetry_in_first_slots():
    X = np.array([0.3, 1.1])
    Z = np.array([-0.5, 0.8])
    out = tc.curvature_alpha(SPHERE_COS, [1.0, 0.2], X, X, Z)
    assert np.max(np.abs(out)) < 1e-12
    Y = np.array([0.9, -0.4])
    a = tc.curvature_alpha(SPHERE_COS, [1.0, 0.2], X, Y, Z)
    b = tc.curvature_alpha(SPHERE_COS, [1.0, 0.2], Y, X, Z)
    assert np.max(np.abs(a + b)) < 1e-9


def test_equator_curvature_value():
    # R^alpha(dr, dtheta)dtheta radial component = 1 at the equator
    p = [math.pi / 2, 0.0]
    out = tc.curvature_alpha(SPHERE_COS, p, [1, 0], [0, 1], [0, 1])
    assert abs(out[0] - 1.0) < 1e-10


@pytest.mark.parametrize("chart,p", CATALOG_WITH_DENSITY)
def test_formula_vs_coefficient_oracle(chart, p):
    rng = np.random.default_rng(42)
    for _ in range(50):
        X, Y, Z = rng.normal(size=(3, chart.dim))
        a = tc.curvature_alpha(chart, p, X, Y, Z, "formula")
        b = tc.curvature_alpha(chart, p, X, Y, Z, "oracle")
        assert rel_gap(a, b) < 1e-4


@pytest.mark.parametrize("chart,p", CATALOG_WITH_DENSITY)
def test_trace_identity_ric_f_one(chart, p):
    rng = np.random.default_rng(7)
    for _ in range(10):
        Y, Z = rng.normal(size=(2, chart.dim))
        tr = tc.ric_alpha_trace(chart, p, Y, Z)
        ric = tc.ric_f(chart, p, Y, Z, N=1)
        assert rel_gap(tr, ric) < 1e-4


def test_first_bianchi_for_levi_civita_part():
    rng = np.random.default_rng(11)
    for chart, p in CATALOG_WITH_DENSITY:
        riem = tc.riemann_lc(chart, p)
        X, Y, Z = rng.normal(size=(3, chart.dim))
        total = (np.einsum("kijl,i,j,l->k", riem, X, Y, Z)
                 + np.einsum("kijl,i,j,l->k", riem, Y, Z, X)
                 + np.einsum("kijl,i,j,l->k", riem, Z, X, Y))
        assert np.max(np.abs(total)) < 1e-8


def test_ricci_symmetry():
    for chart, p in CATALOG_WITH_DENSITY:
        rng = np.random.default_rng(5)
        Y, Z = rng.normal(size=(2, chart.dim))
        for N in (1, 3.5, math.inf):
            if N == chart.dim:
                continue
            a = tc.ric_f(chart, p, Y, Z, N)
            b = tc.ric_f(chart, p, Z, Y, N)
            assert abs(a - b) < 1e-9 * max(1.0, abs(a))


def test_ric_f_rejects_N_equal_dimension():
    with pytest.raises(ValueError):
        tc.ric_f(EUCLID2, [0, 0], [1, 0], [1, 0], N=2)


def test_ric_f_flat_zero():
    assert tc.ric_f(with_density(EUCLID2, "0"), [0.3, 0.1], [1, 0], [0, 1], N=math.inf) == 0.0


def test_expansion_example_paper_values():
    chart = catalog_build("expansion_example", {"n": 2, "A": 3.0})
    p = [0.4, -0.8]
    er = np.array([1.0, 0.0])
    # Ric(dr, dr) = -(n-1) = -1 for the warped metric
    ric = tc.ricci_lc(chart, p)
    assert abs(ric[0, 0] - (-1.0)) < 1e-9
    assert abs(tc.ric_f(chart, p, er, er, N=1) - 8.0) < 1e-6


def test_rigidity_radial_ricci_identity():
    chart = catalog_build("rigidity_metric", {"n": 2, "K": 1.0, "f": "r/4"})
    er = np.array([1.0, 0.0])
    for r in (0.5, 1.0, 2.0):
        val = tc.ric_f(chart, [r, 0.7], er, er, N=1)
        expected = math.exp(-r)  # (n-1) K e^{-4f/(n-1)}
        assert abs(val - expected) < 1e-8


def test_weighted_sec_matches_curvature_path():
    p = [1.1, 0.4]
    g = SPHERE_COS.metric(p)
    X = np.array([1.0, 0.0])
    Y = np.array([0.0, 1.0]) / math.sqrt(g[1, 1])
    direct = tc.weighted_sec(SPHERE_COS, p, X, Y)
    via_curv = float(X @ g @ tc.curvature_alpha(SPHERE_COS, p, X, Y, Y))
    assert abs(direct - via_curv) < 1e-6


def test_weighted_sec_values():
    # round sphere f=0: sec = 1 for any orthonormal pair
    p = [0.9, 0.2]
    g = SPHERE.metric(p)
    X = np.array([1.0, 0.0])
    Y = np.array([0.0, 1.0]) / math.sqrt(g[1, 1])
    assert abs(tc.weighted_sec(with_density(SPHERE, "0"), p, X, Y) - 1.0) < 1e-10
    # equator with f = cos r: still 1 (Hess phi and dphi(Y) vanish there)
    p = [math.pi / 2, 0.0]
    assert abs(tc.weighted_sec(SPHERE_COS, p, [1, 0], [0, 1]) - 1.0) < 1e-10


def test_weighted_sec_rejects_non_orthonormal():
    with pytest.raises(ValueError):
        tc.weighted_sec(SPHERE_COS, [1.0, 0.0], [1, 0], [0, 1])  # |dtheta| != 1


def test_drift_laplacian_values():
    assert abs(tc.drift_laplacian_scalar(with_density(EUCLID2, "0"),
                                         [0.3, 0.4], "x^2 + y^2") - 4.0) < 1e-12
    assert abs(tc.drift_laplacian_scalar(with_density(EUCLID2, "x"),
                                         [0.3, 0.4], "x") - (-1.0)) < 1e-12
    assert abs(tc.drift_laplacian_scalar(with_density(SPHERE, "0"),
                                         [1.0, 0.5], "r") - 1 / math.tan(1.0)) < 1e-10


def test_drift_laplacian_fd_oracle():
    # finite-difference Laplacian on the sphere chart
    chart = SPHERE_COS
    p = np.array([1.2, 0.7])
    u = "sin(r)*cos(theta)"
    from weightedgeo.expressions import parse_scalar_field

    fld = parse_scalar_field(u, chart.coords)
    h = 1e-4
    g_inv = np.linalg.inv(chart.metric(p))
    hess = np.empty((2, 2))
    for i in range(2):
        for j in range(2):
            ei = np.zeros(2)
            ej = np.zeros(2)
            ei[i] = h
            ej[j] = h
            hess[i, j] = (fld(p + ei + ej) - fld(p + ei - ej)
                          - fld(p - ei + ej) + fld(p - ei - ej)) / (4 * h * h)
    gamma = tc.christoffel(chart, p).gamma
    grad = fld.gradient(p)
    lap = float(np.einsum("ij,ij->", g_inv, hess - np.einsum("kij,k->ij", gamma, grad)))
    drift = float(chart.f_gradient(p) @ g_inv @ grad)
    assert abs(tc.drift_laplacian_scalar(chart, p, u) - (lap - drift)) < 1e-6


# -- volume form, Codazzi, metric-parallelism --------------------------------


@pytest.mark.parametrize("chart,p", CATALOG_WITH_DENSITY)
def test_volume_form_parallel_for_exact_alpha(chart, p):
    rng = np.random.default_rng(2)
    for _ in range(5):
        X = rng.normal(size=chart.dim)
        assert tc.volume_form_parallel_residual(chart, p, X) < 1e-8


def test_volume_form_nonclosed_hook():
    hook = EUCLID2.replace(alpha_override=(parse_expression("y"), parse_expression("0")))
    res = tc.volume_form_parallel_residual(hook, [0.3, 0.8], [1.0, 0.0])
    assert res > 1e-3
    assert abs(res - 3 * 0.8) < 1e-12  # (n+1) |alpha(X)| on the flat plane


def test_codazzi_metric_tensor():
    T = [["1", "0"], ["0", "sin(r)^2"]]
    assert tc.codazzi_residual(SPHERE, [1.1, 0.4], T, weighted=False) < 1e-12


def test_codazzi_weighted_conformal_metric():
    # e^{-phi} g is Codazzi for the weighted connection when T = g
    T = [["1", "0"], ["0", "sin(r)^2"]]
    assert tc.codazzi_residual(SPHERE_COS, [1.1, 0.4], T, weighted=True) < 1e-12


def test_codazzi_residuals_vanish_together():
    rng = np.random.default_rng(9)
    for _ in range(3):
        p = [rng.uniform(0.5, 2.5), rng.uniform(0, 2)]
        T = [["1", "0"], ["0", "sin(r)^2"]]
        a = tc.codazzi_residual(SPHERE_COS, p, T, weighted=False)
        b = tc.codazzi_residual(SPHERE_COS, p, T, weighted=True)
        assert (a < 1e-7) == (b < 1e-7)


def test_codazzi_perturbed_tensor_fails_both_ways():
    T = [["1", "x^2*y"], ["x^2*y", "1 + x*y^2"]]
    chart = with_density(EUCLID2, "x/2")
    p = [0.8, 0.6]
    assert tc.codazzi_residual(chart, p, T, weighted=False) > 1e-3
    assert tc.codazzi_residual(chart, p, T, weighted=True) > 1e-3


def test_codazzi_rejects_asymmetric():
    with pytest.raises(ValueError):
        tc.codazzi_residual(EUCLID2, [0.5, 0.2], [["1", "x"], ["0", "1"]])


def test_nabla_alpha_g_identity_and_nonvanishing():
    # the displayed identity holds identically
    for chart, p in CATALOG_WITH_DENSITY:
        assert tc.nabla_alpha_g_residual(chart, p) < 1e-10
    # while the raw covariant derivative of g is nonzero for non-constant f
    chart = SPHERE_COS
    p = [1.2, 0.4]
    g = chart.metric(p)
    dg = chart.metric_derivatives(p)
    gamma = tc.weighted_coeffs(chart, p).gamma
    nabla = dg - np.einsum("mki,mj->kij", gamma, g) - np.einsum("mkj,im->kij", gamma, g)
    assert np.max(np.abs(nabla)) > 1e-3


def test_compatible_metric_eigenvalue_check():
    # fixture alpha = 0, gtilde = g: R^alpha(., Y)Y is g-symmetric and its
    # eigenvalues on the complement of Y match the sign of the sectional curvature
    chart = with_density(SPHERE, "0")
    p = [1.0, 0.3]
    g = chart.metric(p)
    Y = np.array([0.4, 0.6])
    L = tc.alpha_curvature_operator(chart, p, Y)
    M = g @ L
    assert np.max(np.abs(M - M.T)) < 1e-8
    from scipy.linalg import eigh

    evals = np.sort(eigh(M, g, eigvals_only=True))
    # one zero eigenvalue (direction Y), the rest positive like sec = +1
    assert abs(evals[0]) < 1e-9
    assert evals[1] > 0


def test_singular_metric_reported():
    bad = ManifoldChart("degenerate", ("x", "y"),
                        metric_fn=lambda p: np.array([[1.0, 0.0], [0.0, 1e-15]]))
    with pytest.raises(tc.SingularMetricError):
        tc.christoffel(bad, [0.0, 0.0])
