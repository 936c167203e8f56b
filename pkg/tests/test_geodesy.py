import math

import numpy as np
import pytest

from weightedgeo import geodesy as geo
from weightedgeo.charts import catalog_build, with_density

EUCLID2 = catalog_build("euclidean", {"n": 2})
SPHERE = catalog_build("sphere_polar", {"n": 2})
SPHERE_COS = with_density(SPHERE, "cos(r)")


def test_euclidean_straight_line():
    path = geo.integrate_geodesic(EUCLID2, [0, 0], [1, 0], 1.0)
    assert np.allclose(path.end, [1.0, 0.0], atol=1e-12)
    assert path.parametrization == "unit_speed_g"


def test_equator_is_a_geodesic():
    path = geo.integrate_geodesic(SPHERE, [math.pi / 2, 0.0], [0.0, 1.0], math.pi)
    assert np.max(np.abs(path.xs[:, 0] - math.pi / 2)) < 1e-10
    assert abs(path.end[1] - math.pi) < 1e-9


def test_unit_speed_drift():
    path = geo.integrate_geodesic(SPHERE, [1.0, 0.2], [0.6, 0.9 / math.sin(1.0)], 2.0)
    v0 = geo.g_norm(SPHERE, [1.0, 0.2], [0.6, 0.9 / math.sin(1.0)])
    drift = max(abs(geo.g_norm(SPHERE, path.position(t), path.velocity(t)) - v0)
                for t in np.linspace(0, path.t1, 60))
    assert drift < 1e-7 * max(1.0, v0)


def test_weighted_geodesic_on_axis_of_constant_phi():
    chart = with_density(EUCLID2, "y")  # phi = y, constant on the x-axis
    path = geo.integrate_geodesic(chart, [0, 0], [1, 0], 1.0, "weighted")
    assert np.max(np.abs(path.xs[:, 1])) < 1e-12
    speeds = [geo.g_norm(chart, path.position(t), path.velocity(t))
              for t in np.linspace(0, 1, 30)]
    assert max(abs(s - 1) for s in speeds) < 1e-9


def test_speed_law_along_weighted_geodesics():
    # |gamma'| e^{-2 phi} is constant along alpha-geodesics
    for v0 in ([0.4, 0.5], [1.0, -0.2], [0.0, 0.8]):
        path = geo.integrate_geodesic(SPHERE_COS, [1.0, 0.3], v0, 1.2, "weighted")
        vals = []
        for t in np.linspace(0, path.t1, 50):
            x = path.position(t)
            vals.append(geo.g_norm(SPHERE_COS, x, path.velocity(t))
                        * math.exp(-2.0 * SPHERE_COS.phi_value(x)))
        vals = np.array(vals)
        assert vals.std() < 1e-6 * vals.mean()


def test_image_coincidence_weighted_vs_levi_civita():
    # the alpha-geodesic and the g-geodesic with the same initial direction
    # have the same image (projective equivalence)
    p = [1.0, 0.3]
    v = np.array([0.5, 0.45])
    wpath = geo.integrate_geodesic(SPHERE_COS, p, v, 1.0, "weighted")
    upath = geo.integrate_geodesic(SPHERE_COS, p, v / geo.g_norm(SPHERE_COS, p, v), 3.0)
    # match points by g-arclength from p: the two parametrizations trace the
    # same image, so positions at equal arclength coincide
    ts = np.linspace(0.0, wpath.t1, 400)
    speeds = [geo.g_norm(SPHERE_COS, wpath.position(t), wpath.velocity(t)) for t in ts]
    arc = np.concatenate([[0.0], np.cumsum(0.5 * (np.array(speeds[1:]) + speeds[:-1])
                                           * np.diff(ts))])
    hausdorff = 0.0
    for t, a in zip(ts, arc):
        if a > upath.t1:
            break
        hausdorff = max(hausdorff, float(np.linalg.norm(
            wpath.position(t) - upath.position(a))))
    assert hausdorff < 1e-6


def test_geodesic_truncates_at_boundary():
    path = geo.integrate_geodesic(SPHERE, [0.5, 0.0], [-1.0, 0.0], 3.0)
    assert path.truncated
    assert path.end[0] <= 0.5
    assert path.end[0] >= SPHERE.safe_domain.lower[0] - 1e-9


def test_geodesic_rejects_bad_input():
    with pytest.raises(geo.GeodesicError):
        geo.integrate_geodesic(SPHERE, [1.0, 0.0], [0.0, 0.0], 1.0)
    with pytest.raises(ValueError):
        geo.integrate_geodesic(SPHERE, [1.0, 0.0], [1.0, 0.0], 1.0, "affine")


# -- reparametrization -------------------------------------------------------


def test_constant_density_scaling():
    chart = with_density(EUCLID2, "3/2")
    path = geo.integrate_geodesic(chart, [0, 0], [0.6, 0.8], 2.0)
    rec = geo.reparametrize(path, chart)
    assert abs(rec.total_s - math.exp(-3.0) * 2.0) < 1e-12
    # s_of_t is strictly increasing with the right node derivatives
    svals = rec.s_nodes
    assert np.all(np.diff(svals) > 0)


def test_equator_with_vanishing_density():
    path = geo.integrate_geodesic(SPHERE_COS, [math.pi / 2, 0.0], [0.0, 1.0], 1.5)
    rec = geo.reparametrize(path, SPHERE_COS)
    assert abs(rec.total_s - 1.5) < 1e-10  # f = cos(pi/2) = 0 along the equator


def test_radial_ray_closed_form():
    chart = with_density(catalog_build("euclidean", {"n": 2, "coords": ("r", "z")}), "r")
    path = geo.integrate_geodesic(chart, [0, 0], [1, 0], 1.0)
    rec = geo.reparametrize(path, chart)
    assert abs(rec.total_s - (1 - math.exp(-2.0)) / 2.0) < 1e-12
    assert abs(geo.conformal_length(path, chart) - rec.total_s) < 1e-10


def test_repar_derivative_at_nodes():
    path = geo.integrate_geodesic(SPHERE_COS, [1.0, 0.2], [1.0, 0.0], 1.0)
    rec = geo.reparametrize(path, SPHERE_COS)
    ds = rec.s_of_t.derivative()
    for t in path.ts:
        x = path.position(t)
        expected = math.exp(-2.0 * SPHERE_COS.f_value(x))
        assert abs(float(ds(t)) - expected) < 1e-8


def test_reparametrize_requires_unit_speed():
    path = geo.integrate_geodesic(EUCLID2, [0, 0], [2.0, 0.0], 1.0)
    with pytest.raises(ValueError):
        geo.reparametrize(path, EUCLID2)


# -- conformal length and the h-metric inequality -----------------------------


def test_conformal_length_flat():
    path = geo.integrate_geodesic(with_density(EUCLID2, "0"), [0, 0], [0.6, 0.8], 1.0)
    assert abs(geo.conformal_length(path, EUCLID2) - 1.0) < 1e-12


def test_detour_exceeds_h_distance():
    chart = with_density(EUCLID2, "x")
    straight = geo.CurvePath.polyline([[0.0, 0.0], [1.0, 0.0]])
    detour = geo.CurvePath.polyline([[0.0, 0.0], [0.5, 0.7], [1.0, 0.0]])
    d_h = geo.conformal_length(straight, chart)
    assert geo.conformal_length(detour, chart) > d_h + 1e-3


# -- s(p, q) -----------------------------------------------------------------


def test_repar_distance_flat():
    d = geo.repar_distance(EUCLID2, [0, 0], [1.2, -0.5], n_directions=12)
    assert abs(d - math.hypot(1.2, 0.5)) < 1e-7


def test_repar_distance_scaling_constant_f():
    chart = with_density(EUCLID2, "1/2")
    d = geo.repar_distance(chart, [0, 0], [0.9, 0.4], n_directions=12)
    assert abs(d - math.exp(-1.0) * math.hypot(0.9, 0.4)) < 1e-7


def test_repar_distance_sphere_equator():
    d = geo.repar_distance(SPHERE, [math.pi / 2, 0.0], [math.pi / 2, 1.0],
                           n_directions=12)
    assert abs(d - 1.0) < 1e-7


def test_repar_distance_symmetry():
    pairs = [([1.0, 0.2], [1.8, 1.1]), ([0.7, 0.0], [1.2, -0.6])]
    for p, q in pairs:
        d1 = geo.repar_distance(SPHERE_COS, p, q, n_directions=12)
        d2 = geo.repar_distance(SPHERE_COS, q, p, n_directions=12)
        assert abs(d1 - d2) < 1e-7


def test_two_point_s_versus_h_distance():
    # s(p,x) + s(q,x) >= d^h(p,q): no triangle inequality for s itself, but
    # the conformal metric provides the lower bound
    chart = SPHERE_COS
    p, q, x = [1.0, 0.1], [1.6, 0.9], [1.3, 0.5]
    spx = geo.repar_distance(chart, p, x, n_directions=12)
    sqx = geo.repar_distance(chart, q, x, n_directions=12)
    connectors = geo.minimal_connectors(chart, p, q, 12)
    d_h = min(geo.conformal_length(path, chart) for path in connectors.paths)
    assert spx + sqx >= d_h - 1e-6


def test_connector_not_found_outside_domain():
    with pytest.raises(geo.GeodesicError):
        geo.repar_distance(SPHERE, [1.0, 0.0], [math.pi + 1.0, 0.0])


def test_alpha_completeness_diagnostic():
    # expanding example: s accumulates toward r -> -infty; report both ray
    # directions of the diagnostic (finite one way, growing the other)
    chart = catalog_build("expansion_example", {"n": 2, "A": 3.0})
    fwd = geo.integrate_geodesic(chart, [0.0, 0.0], [1.0, 0.0], 6.0)
    bwd = geo.integrate_geodesic(chart, [0.0, 0.0], [-1.0, 0.0], 6.0)
    s_fwd = geo.reparametrize(fwd, chart).total_s   # integrand e^{-6r} decays
    s_bwd = geo.reparametrize(bwd, chart).total_s   # integrand e^{+6r} grows
    assert s_fwd < 0.2
    assert s_bwd > 100.0
    record = {"ray +r": s_fwd, "ray -r": s_bwd}
    assert set(record) == {"ray +r", "ray -r"}


def test_polyline_and_concatenate_round_trip():
    loop = geo.CurvePath.polyline([[0, 0], [1, 0], [1, 1], [0, 0]])
    assert abs(loop.t1 - (2 + math.sqrt(2))) < 1e-12
    rev = loop.reversed()
    assert np.allclose(rev.start, loop.end)
    joined = geo.CurvePath.concatenate([loop, rev])
    assert np.allclose(joined.end, loop.start)
