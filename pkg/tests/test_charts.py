import math

import numpy as np
import pytest

from weightedgeo.charts import (
    CatalogError,
    ParameterError,
    catalog_build,
    catalog_manifest,
    catalog_names,
    rigidity_metric_build,
    saturated_rigidity_domain,
    with_density,
)
from weightedgeo.expressions import EvaluationDomainError


def random_interior_points(chart, count, seed=0, fallback=1.5):
    rng = np.random.default_rng(seed)
    lo = np.array([v if math.isfinite(v) else -fallback for v in chart.safe_domain.lower])
    hi = np.array([v if math.isfinite(v) else fallback for v in chart.safe_domain.upper])
    pts = []
    while len(pts) < count:
        p = lo + rng.random(chart.dim) * (hi - lo)
        if chart.contains(p):
            pts.append(p)
    return pts


ENTRIES = [
    ("euclidean", {"n": 3}),
    ("sphere_polar", {"n": 2}),
    ("sphere_polar", {"n": 3}),
    ("hyperbolic_warped", {"n": 2, "k": 1.0}),
    ("hyperbolic_warped", {"n": 3, "k": 0.5}),
    ("expansion_example", {"n": 2, "A": 3.0}),
    ("rigidity_metric", {"n": 2, "K": 1.0, "f": "r/4"}),
    ("rigidity_metric", {"n": 2, "K": -1.0, "f": "r/8", "r_max": 2.0}),
    ("warped_product", {"base": {"name": "euclidean", "parameters": {"n": 1}},
                        "fiber": {"name": "euclidean", "parameters": {"n": 1}},
                        "psi": "x"}),
    ("twisted_product", {"base": {"name": "euclidean", "parameters": {"n": 1}},
                         "fiber": {"name": "euclidean", "parameters": {"n": 1}},
                         "psi": "x + y/4"}),
]


@pytest.mark.parametrize("name,params", ENTRIES)
def test_catalog_metrics_symmetric_positive_definite(name, params):
    chart = catalog_build(name, params)
    for p in random_interior_points(chart, 100, seed=hash(name) % 2**32):
        g = chart.metric(p)
        assert np.allclose(g, g.T, atol=1e-13)
        assert np.linalg.eigvalsh(g)[0] > 1e-10


@pytest.mark.parametrize("name,params", ENTRIES)
def test_metric_derivatives_match_central_differences(name, params):
    chart = catalog_build(name, params)
    for p in random_interior_points(chart, 8, seed=1):
        dg = chart.metric_derivatives(p)
        n = chart.dim
        for k in range(n):
            h = 1e-5 * max(1.0, abs(p[k]))
            e = np.zeros(n)
            e[k] = h
            fd = (chart.metric(p + e) - chart.metric(p - e)) / (2 * h)
            scale = max(1.0, np.max(np.abs(fd)))
            assert np.max(np.abs(dg[k] - fd)) / scale < 1e-5


def test_sphere_polar_metric_value():
    chart = catalog_build("sphere_polar", {"n": 2})
    g = chart.metric([math.pi / 2, 0.0])
    assert np.allclose(g, np.eye(2), atol=1e-15)


def test_euclidean_metric_identity():
    chart = catalog_build("euclidean", {"n": 3})
    g = chart.metric([0.4, -2.0, 13.0])
    assert np.array_equal(g, np.eye(3))


def test_hyperbolic_metric_value():
    chart = catalog_build("hyperbolic_warped", {"n": 2, "k": 1})
    g = chart.metric([1.0, 0.0])
    assert abs(g[0, 0] - 1.0) < 1e-15
    assert abs(g[1, 1] - math.exp(2.0)) < 1e-12


def test_rigidity_reduces_to_sphere_for_f_zero():
    rig = catalog_build("rigidity_metric", {"n": 2, "K": 1.0, "f": "0",
                                            "r_max": math.pi - 1e-3})
    sph = catalog_build("sphere_polar", {"n": 2})
    rng = np.random.default_rng(3)
    for _ in range(20):
        p = np.array([rng.uniform(1e-3, math.pi - 1e-3), rng.uniform(0, 2 * math.pi)])
        assert np.max(np.abs(rig.metric(p) - sph.metric(p))) < 1e-10


def test_rigidity_flat_case():
    rig = catalog_build("rigidity_metric", {"n": 2, "K": 0.0, "f": "0", "r_max": 3.0})
    p = [1.7, 0.4]
    g = rig.metric(p)
    assert abs(g[1, 1] - 1.7**2) < 1e-10


def test_rigidity_coefficient_value():
    # s(1) = int_0^1 e^{-t/2} dt, then coefficient e^{1/2} sin^2(s(1))
    rig = catalog_build("rigidity_metric", {"n": 2, "K": 1.0, "f": "r/4"})
    s1 = 2.0 * (1.0 - math.exp(-0.5))
    expected = math.exp(0.5) * math.sin(s1) ** 2
    assert abs(rig.metric([1.0, 0.3])[1, 1] - expected) < 1e-8


def test_rigidity_domain_error_for_oversized_domain():
    with pytest.raises(EvaluationDomainError):
        rigidity_metric_build({"n": 2, "K": 1.0, "f": "0", "r_max": 3.5})


def test_saturated_domain_value():
    D = saturated_rigidity_domain("-r/4", 2, 1.0)
    assert abs(D - 2.0 * math.log(1.0 + math.pi / 2.0)) < 1e-10


def test_saturation_unreachable_for_decaying_density():
    with pytest.raises(ParameterError):
        saturated_rigidity_domain("r/4", 2, 1.0)


def test_unknown_catalog_name():
    with pytest.raises(CatalogError):
        catalog_build("klein_bottle", {})


def test_bad_parameters():
    with pytest.raises(ParameterError):
        catalog_build("euclidean", {"n": 0})
    with pytest.raises(ParameterError):
        catalog_build("sphere_polar", {"n": 1})
    with pytest.raises(ParameterError):
        catalog_build("warped_product", {"base": {"name": "euclidean", "parameters": {"n": 1}},
                                         "fiber": {"name": "euclidean", "parameters": {"n": 1}},
                                         "psi": "y"})  # psi on the fiber


def test_product_coordinates_renamed():
    chart = catalog_build("warped_product",
                          {"base": {"name": "euclidean", "parameters": {"n": 1}},
                           "fiber": {"name": "euclidean", "parameters": {"n": 1}},
                           "psi": "0"})
    assert chart.coords == ("x", "y")
    assert chart.product is not None and chart.product.warped


def test_twisted_product_metric_value():
    chart = catalog_build("twisted_product",
                          {"base": {"name": "euclidean", "parameters": {"n": 1}},
                           "fiber": {"name": "euclidean", "parameters": {"n": 1}},
                           "psi": "x*y"})
    g = chart.metric([0.5, 2.0])
    assert abs(g[1, 1] - math.exp(2.0 * 0.5 * 2.0)) < 1e-12


def test_manifest_lists_all_entries():
    manifest = catalog_manifest()
    assert set(manifest) == set(catalog_names())
    for entry in manifest.values():
        assert "parameters" in entry


def test_density_attachment_and_phi():
    chart = with_density(catalog_build("sphere_polar", {"n": 2}), "cos(r)")
    p = [1.0, 0.2]
    assert abs(chart.f_value(p) - math.cos(1.0)) < 1e-15
    assert abs(chart.phi_value(p) - math.cos(1.0)) < 1e-15
    assert np.allclose(chart.alpha_components(p), [-math.sin(1.0), 0.0])


def test_density_with_unknown_coordinate_rejected():
    chart = catalog_build("sphere_polar", {"n": 2})
    with pytest.raises(Exception):
        with_density(chart, "cos(q)")
