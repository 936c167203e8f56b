"""Numerical toolkit for Riemannian manifolds with density.

The weighted connection nabla^alpha (alpha = df/(n-1)) drives everything:
its curvature recovers the 1-Bakry-Emery Ricci tensor, its geodesic
reparametrization defines the distance-like quantity s(p, q), its parallel
volume form fixes the measure mu, and its holonomy sits in SL_n.  The
subpackages provide chart-based manifolds with a catalog of example spaces
(charts), tensor calculus with cross-validated curvature paths (tensorcalc),
geodesic integration and the reparametrized distance (geodesy), parallel
transport and holonomy (transport), comparison-theorem verification
(comparison), and a config-driven CLI (cli, experiments).
"""

from .charts import (
    Box,
    ManifoldChart,
    catalog_build,
    catalog_manifest,
    rigidity_metric_build,
    with_density,
)
from .expressions import ScalarField, parse_scalar_field
from .models import ModelParams, m_k, sn_k
from .settings import DEFAULT, Tolerances

__all__ = [
    "Box",
    "ManifoldChart",
    "catalog_build",
    "catalog_manifest",
    "rigidity_metric_build",
    "with_density",
    "ScalarField",
    "parse_scalar_field",
    "ModelParams",
    "m_k",
    "sn_k",
    "DEFAULT",
    "Tolerances",
]

__version__ = "0.1.0"
