import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from weightedgeo import comparison as cmp
from weightedgeo.charts import (
    catalog_build,
    saturated_rigidity_domain,
    with_density,
)
from weightedgeo.models import ModelParams, m_k, sn_k

EUCLID2 = catalog_build("euclidean", {"n": 2})
SPHERE = catalog_build("sphere_polar", {"n": 2})
SPHERE_COS = with_density(SPHERE, "cos(r)")
RIGID = catalog_build("rigidity_metric", {"n": 2, "K": 1.0, "f": "r/4"})
EQUATOR = [math.pi / 2, 0.0]


# -- model functions ----------------------------------------------------------


def test_sn_k_cases():
    assert sn_k(0.0, 1.7) == 1.7
    assert abs(sn_k(1.0, 0.4) - math.sin(0.4)) < 1e-15
    assert abs(sn_k(-4.0, 0.3) - math.sinh(0.6) / 2.0) < 1e-15


def test_m_k_values():
    assert abs(m_k(ModelParams(2, 1.0), math.pi / 2)) < 1e-15
    val = m_k(ModelParams(3, -1.0), 1.0)
    assert abs(val - 2.0 / math.tanh(1.0)) < 1e-12


def test_m_k_against_riccati_ode():
    # oracle: integrate m' = -m^2/(n-1) - (n-1)K from the 1/s asymptote
    n, K = 3, -1.0
    params = ModelParams(n, K)
    s0 = 1e-3
    m0 = (n - 1) * (1.0 / s0 - K * s0 / 3.0 - K * K * s0**3 / 45.0)
    sol = solve_ivp(lambda s, m: [-m[0] ** 2 / (n - 1) - (n - 1) * K],
                    (s0, 1.0), [m0], rtol=1e-12, atol=1e-12, dense_output=True)
    assert abs(sol.y[0, -1] - m_k(params, 1.0)) < 1e-8


def test_m_k_riccati_residual_grid():
    for n, K in ((2, 1.0), (2, -1.0), (3, 0.5), (4, 0.0)):
        params = ModelParams(n, K)
        for s in np.linspace(0.2, 1.4, 13):
            h = 5e-4
            d1 = (m_k(params, s + h) - m_k(params, s - h)) / (2 * h)
            d2 = (m_k(params, s + h / 2) - m_k(params, s - h / 2)) / h
            dm = (4 * d2 - d1) / 3  # Richardson-extrapolated derivative
            residual = dm + m_k(params, s) ** 2 / (n - 1) + (n - 1) * K
            assert abs(residual) < 1e-8


def test_m_k_series_matches_exact_near_cutoff():
    # the Laurent expansion and the cot formula agree across the switch point
    for K in (1.0, -1.0):
        params = ModelParams(2, K)
        s = 1.2e-4
        exact = m_k(params, s, series_cutoff=0.0)
        series = m_k(params, s, series_cutoff=1e-3)
        assert abs(exact - series) < 1e-10 * abs(exact)


def test_m_k_domain_errors():
    with pytest.raises(ValueError):
        m_k(ModelParams(2, 1.0), math.pi + 0.1)
    with pytest.raises(ValueError):
        m_k(ModelParams(2, 1.0), 0.0)


# -- radial profiles ----------------------------------------------------------


def test_flat_profile_closed_form():
    prof = cmp.radial_profile(EUCLID2, [0.2, -0.4], [0.8, 0.6], 2.0)
    mask = prof.r > 0.05
    assert np.max(np.abs(prof.area[mask] - prof.r[mask])) < 1e-9
    assert np.max(np.abs(prof.lam[mask] - 1.0 / prof.r[mask])) < 1e-8
    assert np.max(np.abs(prof.s - prof.r)) < 1e-10


def test_sphere_profile_closed_form():
    prof = cmp.radial_profile(SPHERE, EQUATOR, [0.3, 0.8], 2.4)
    mask = prof.r > 0.05
    assert np.max(np.abs(prof.area[mask] - np.sin(prof.r[mask]))) < 1e-8
    assert np.max(np.abs(prof.lam[mask] - 1.0 / np.tan(prof.r[mask]))) < 1e-7


def test_profile_truncates_at_conjugate_point():
    prof = cmp.radial_profile(SPHERE, [1.0, 0.5], [0.0, 1.0 / math.sin(1.0)], 6.0)
    assert prof.truncated
    assert prof.conjugate_r is not None
    assert abs(prof.conjugate_r - math.pi) < 0.05


def test_profile_consistency_dlog_area_f():
    # d/ds log A_f computed (a) by differencing log A_f against s and (b) as
    # lambda must agree (the volume-element identity)
    prof = cmp.radial_profile(SPHERE_COS, EQUATOR, [0.7, 0.5], 1.8, n_samples=1601)
    mask = prof.r > 0.2
    log_af = np.log(prof.area_f[mask])
    svals = prof.s[mask]
    lam = prof.lam[mask]
    mid = slice(1, -1)
    slopes = (log_af[2:] - log_af[:-2]) / (svals[2:] - svals[:-2])
    rel = np.abs(slopes - lam[mid]) / np.maximum(1.0, np.abs(lam[mid]))
    assert np.max(rel) < 1e-4


def test_rigidity_equality_lambda_equals_m_K():
    prof = cmp.chart_polar_profile(RIGID, [0.0], r_max=4.0)
    params = ModelParams(2, 1.0)
    worst = max(abs(prof.lam[i] - m_k(params, prof.s[i]))
                for i in range(len(prof.r)) if prof.r[i] >= 1e-3)
    assert worst < 1e-5


def test_rigidity_equality_propagates_inward():
    prof = cmp.chart_polar_profile(RIGID, [0.0], r_max=3.0)
    params = ModelParams(2, 1.0)
    gaps = np.array([abs(prof.lam[i] - m_k(params, prof.s[i]))
                     for i in range(len(prof.r))])
    hits = np.where(gaps < 1e-6)[0]
    assert len(hits) > 0
    r0_idx = hits[-1]
    assert np.all(gaps[: r0_idx + 1] < 1e-5)


def test_small_r_asymptotics_lambda_times_s():
    # lambda * s -> n - 1 as r -> delta, Richardson extrapolated
    prof = cmp.radial_profile(SPHERE_COS, EQUATOR, [1.0, 0.4], 0.2, n_samples=801)
    def value(r):
        i = int(np.argmin(np.abs(prof.r - r)))
        return prof.lam[i] * prof.s[i]
    v1, v2 = value(0.02), value(0.01)
    extrapolated = 2 * v2 - v1
    assert abs(extrapolated - 1.0) < 1e-3


# -- checks -------------------------------------------------------------------


def test_riccati_equality_cases():
    prof = cmp.radial_profile(with_density(EUCLID2, "0"), [0.0, 0.0], [1.0, 0.0], 2.0)
    rep = cmp.riccati_check(prof, EUCLID2)
    assert rep.passed and abs(rep.margin) < 1e-6
    prof = cmp.radial_profile(SPHERE, EQUATOR, [1.0, 0.0], 2.6)
    rep = cmp.riccati_check(prof, SPHERE)
    assert rep.passed


def test_riccati_with_density_random_directions():
    rng = np.random.default_rng(0)
    for _ in range(4):
        u = rng.normal(size=2)
        prof = cmp.radial_profile(SPHERE_COS, EQUATOR, u, 1.6)
        rep = cmp.riccati_check(prof, SPHERE_COS)
        assert rep.passed


def test_mean_curvature_equalities_and_rigidity():
    prof = cmp.radial_profile(with_density(EUCLID2, "0"), [0.0, 0.0], [0.6, 0.8], 2.0)
    rep = cmp.mean_curvature_check(prof, ModelParams(2, 0.0))
    assert rep.passed and rep.margin > -1e-9
    prof = cmp.chart_polar_profile(RIGID, [0.3], r_max=3.5)
    rep = cmp.mean_curvature_check(prof, ModelParams(2, 1.0))
    assert rep.passed and abs(rep.margin) < 1e-5


def test_mean_curvature_with_sampled_K():
    K = cmp.infimum_curvature_quotient(SPHERE_COS, EQUATOR, 1.2, n_points=40)
    hyp = cmp.sample_hypothesis(SPHERE_COS, K, EQUATOR, 1.2, n_points=20,
                                n_vectors=60)
    assert hyp.ok
    prof = cmp.radial_profile(SPHERE_COS, EQUATOR, [0.8, 0.6], 1.2)
    rep = cmp.mean_curvature_check(prof, ModelParams(2, K), hyp)
    assert rep.passed


def test_volume_element_monotone_cases():
    prof = cmp.radial_profile(with_density(EUCLID2, "0"), [0.0, 0.0], [1.0, 0.0], 2.0)
    rep = cmp.volume_element_monotone(prof, ModelParams(2, 0.0))
    assert rep.passed
    ratios = [row["ratio"] for row in rep.samples]
    assert max(abs(q - 1.0) for q in ratios) < 1e-8
    prof = cmp.radial_profile(SPHERE, EQUATOR, [1.0, 0.0], 2.6)
    rep = cmp.volume_element_monotone(prof, ModelParams(2, 1.0))
    assert rep.passed
    ratios = [row["ratio"] for row in rep.samples]
    assert max(abs(q - 1.0) for q in ratios) < 1e-7


def test_volume_element_monotone_with_density():
    K = cmp.infimum_curvature_quotient(SPHERE_COS, EQUATOR, 1.4, n_points=40)
    prof = cmp.radial_profile(SPHERE_COS, EQUATOR, [0.4, 0.9], 1.6)
    rep = cmp.volume_element_monotone(prof, ModelParams(2, K))
    assert rep.passed


def test_laplacian_comparison_flat_equality():
    pts = [[0.5, 0.2], [0.8, -0.3], [0.2, 0.9]]
    rep = cmp.laplacian_comparison_check(EUCLID2, [0.0, 0.0], pts, K=0.0,
                                         n_directions=8)
    assert rep.passed and abs(rep.margin) < 1e-7


def test_laplacian_comparison_sphere_equality():
    pts = [[1.2, 0.4], [1.7, 5.9]]
    rep = cmp.laplacian_comparison_check(SPHERE, EQUATOR, pts, K=1.0,
                                         n_directions=8)
    assert rep.passed and abs(rep.margin) < 1e-6


def test_laplacian_comparison_expansion_example():
    chart = catalog_build("expansion_example", {"n": 2, "A": 3.0})
    hyp = cmp.sample_hypothesis(chart, 0.0, [0.0, 0.0], 0.8, n_points=15,
                                n_vectors=60)
    assert hyp.ok  # Ric_f^1 = 8 > 0 radially, and positive on the box
    pts = [[0.5, 0.1], [-0.4, 0.5]]
    rep = cmp.laplacian_comparison_check(chart, [0.0, 0.0], pts, K=0.0,
                                         n_directions=8, hypothesis=hyp)
    assert rep.passed


def test_volume_comparison_flat_equalities():
    for mode in ("f_volume_annuli", "mu_level_sets"):
        rep = cmp.volume_comparison_check(EUCLID2, [0.0, 0.0], mode,
                                          (0.0, 0.5), (0.0, 1.0), K=0.0,
                                          n_directions=8)
        assert rep.passed
        row = rep.samples[0]
        assert abs(row["ratio_lhs"] - row["ratio_rhs"]) < 1e-6


def test_volume_comparison_sphere_equalities():
    for mode in ("f_volume_annuli", "mu_level_sets"):
        rep = cmp.volume_comparison_check(SPHERE, EQUATOR, mode,
                                          (0.0, 0.5), (0.0, 1.0), K=1.0,
                                          n_directions=8)
        assert rep.passed
        row = rep.samples[0]
        assert abs(row["ratio_lhs"] - row["ratio_rhs"]) < 1e-6


def test_volume_comparison_sphere_density_and_monte_carlo():
    K = cmp.infimum_curvature_quotient(SPHERE_COS, EQUATOR, 1.2, n_points=40)
    hyp = cmp.sample_hypothesis(SPHERE_COS, K, EQUATOR, 1.2, n_points=20,
                                n_vectors=60)
    rep = cmp.volume_comparison_check(SPHERE_COS, EQUATOR, "f_volume_annuli",
                                      (0.0, 0.5), (0.0, 1.0), K=K,
                                      n_directions=24, hypothesis=hyp)
    assert rep.passed and rep.margin > 0
    # Monte Carlo oracle for Vol_f(B(p, 0.5)): the geodesic distance from the
    # equator point has the closed form cos d = sin r cos theta; sampling is
    # restricted to a coordinate box containing the ball
    rng = np.random.default_rng(123)
    n_mc = 4 * 10**6
    r_lo, r_hi = math.pi / 2 - 0.5, math.pi / 2 + 0.5
    t_lo, t_hi = -0.6, 0.6
    r = rng.uniform(r_lo, r_hi, n_mc)
    th = rng.uniform(t_lo, t_hi, n_mc)
    d = np.arccos(np.clip(np.sin(r) * np.cos(th), -1.0, 1.0))
    weights = np.exp(-np.cos(r)) * np.sin(r)
    box = (r_hi - r_lo) * (t_hi - t_lo)
    vol_mc = box * np.mean(weights * (d <= 0.5))
    ball = rep.samples[0]["ball_value"]
    assert abs(ball - vol_mc) / vol_mc < 2.5e-3  # seeded MC noise bound


def test_ball_ratio_monotone_in_radius():
    # Vol_f(B(p,r)) / nu_p(n,K,r) non-increasing in r (ball corollary)
    K = cmp.infimum_curvature_quotient(SPHERE_COS, EQUATOR, 1.4, n_points=30)
    ratios = []
    for radius in (0.4, 0.8, 1.2):
        rep = cmp.volume_comparison_check(SPHERE_COS, EQUATOR, "f_volume_annuli",
                                          (0.0, radius), (0.0, radius), K=K,
                                          n_directions=12)
        row = rep.samples[0]
        ratios.append(row["ball_value"] / (row["ball_bound"]
                                           / math.exp(SPHERE_COS.f_value(EQUATOR))))
    assert ratios[0] >= ratios[1] - 1e-9
    assert ratios[1] >= ratios[2] - 1e-9


def test_bounded_f_flat_tightness():
    rep = cmp.bounded_f_bounds(with_density(EUCLID2, "0"), [0.0, 0.0], 1.0,
                               K=0.0, n_directions=8)
    row = rep.samples[0]
    assert abs(row["vol_f"] - math.pi) < 1e-8
    assert abs(row["flat_bound"] - math.pi) < 1e-8
    assert rep.passed


def test_bounded_f_constant_density_tight():
    chart = with_density(EUCLID2, "3/4")
    rep = cmp.bounded_f_bounds(chart, [0.0, 0.0], 1.0, K=0.0, n_directions=8)
    row = rep.samples[0]
    assert abs(row["vol_f"] - math.pi * math.exp(-0.75)) < 1e-8
    assert abs(row["flat_bound"] - row["vol_f"]) < 1e-8


def test_bounded_f_sphere_density():
    rep = cmp.bounded_f_bounds(SPHERE_COS, EQUATOR, 0.5, K=0.0, n_directions=8)
    assert rep.passed and rep.margin > 0


def test_myers_round_sphere_saturates_at_antipode():
    rep = cmp.myers_check(SPHERE, EQUATOR, 1.0, n_directions=8)
    assert rep.passed
    reach = max(row["s_reach"] for row in rep.samples)
    assert math.pi - 0.05 <= reach <= math.pi + 1e-4


def test_myers_rigidity_saturation():
    D = saturated_rigidity_domain("-r/4", 2, 1.0)
    chart = catalog_build("rigidity_metric",
                          {"n": 2, "K": 1.0, "f": "-r/4", "r_max": D})
    rep = cmp.myers_check(chart, [1e-3, 0.0], 1.0, n_directions=4)
    assert rep.passed
    assert rep.details["saturation_gap"] < 1e-4


def test_myers_hypothesis_unmet_on_flat_space():
    hyp = cmp.sample_hypothesis(EUCLID2, 1.0, [0.0, 0.0], 1.0, n_points=10,
                                n_vectors=40)
    assert not hyp.ok
    rep = cmp.myers_check(EUCLID2, [0.0, 0.0], 1.0, n_directions=4, hypothesis=hyp)
    assert rep.verdict == "hypothesis-unmet"


def test_expansion_example_fails_plain_K_bound():
    # Ric_f^1 >= K g holds with K large, but the e^{-4f/(n-1)}-scaled bound
    # fails when sampling toward r -> -infinity
    chart = catalog_build("expansion_example", {"n": 2, "A": 3.0})
    hyp = cmp.sample_hypothesis(chart, 1.0, [-2.0, 0.0], 1.5, n_points=25,
                                n_vectors=60)
    assert not hyp.ok


def test_mu_finiteness_on_saturated_chart():
    D = saturated_rigidity_domain("-r/4", 2, 1.0)
    chart = catalog_build("rigidity_metric",
                          {"n": 2, "K": 1.0, "f": "-r/4", "r_max": D})
    rep = cmp.mu_finiteness_check(chart, 1.0)
    assert rep.passed
    row = rep.samples[0]
    assert row["mu_total"] <= row["bound"] + 1e-4


# -- one-dimensional closed forms ----------------------------------------------


def test_one_dim_flat_zero_density():
    rows = cmp.one_dim_closed_forms(0, 0.0, 1.0, (0.0, 2.0))
    for row in rows:
        assert row["lambda_closed"] == 0.0
        assert abs(row["emf_closed"] - 1.0) < 1e-15
        assert abs(row["lambda_numeric"]) < 1e-10


@pytest.mark.parametrize("K,a,c,s_range", [
    (1, 1.0, math.pi / 2, (0.3, 2.6)),
    (0, 0.5, 1.0, (0.0, 2.0)),
    (-1, 1.0, math.pi / 2, (0.25, 2.0)),
    (1, 2.0, 1.0, (0.2, 1.8)),
])
def test_one_dim_closed_forms_match_integration(K, a, c, s_range):
    rows = cmp.one_dim_closed_forms(K, a, c, s_range)
    worst = max(max(abs(r["lambda_closed"] - r["lambda_numeric"]),
                    abs(r["emf_closed"] - r["emf_numeric"])) for r in rows)
    assert worst < 1e-6


def test_one_dim_specific_values():
    rows = cmp.one_dim_closed_forms(1, 1.0, math.pi / 2, (0.3, math.pi / 2))
    last = rows[-1]
    assert abs(last["lambda_closed"]) < 1e-12  # cot(pi/2) = 0
    rows = cmp.one_dim_closed_forms(-1, 1.0, math.pi / 2, (0.5, 1.0))
    last = rows[-1]
    assert abs(last["lambda_closed"] - 1.0 / math.tanh(1.0)) < 1e-12


def test_one_dim_rejects_vanishing_density():
    with pytest.raises(ValueError):
        cmp.one_dim_closed_forms(1, 1.0, math.pi / 2, (0.5, 3.2))
