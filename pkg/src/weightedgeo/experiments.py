"""Config-driven experiment harness behind the command-line interface.

An ExperimentSpec names a manifold (catalog entry or inline sources), a task
with arguments, an output target, a seed, and tolerance overrides.  Specs are
validated against EXPERIMENT_SCHEMA before any computation; identical spec +
seed produces byte-identical CSV bytes.

Exit codes: 0 pass/success, 1 check failure, 2 hypothesis-unmet,
3 numerical error.
"""

from __future__ import annotations

import dataclasses
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np
from jsonschema import Draft202012Validator

from . import comparison as cmp
from . import geodesy, tensorcalc, transport
from .charts import (
    ManifoldChart,
    catalog_build,
    catalog_manifest,
    saturated_rigidity_domain,
    with_density,
)
from .expressions import parse_scalar_field
from .models import ModelParams
from .settings import DEFAULT, Tolerances

__all__ = [
    "ExperimentSpec",
    "RunResult",
    "EXPERIMENT_SCHEMA",
    "validate_spec",
    "resolve_manifold",
    "run",
    "reproduction_bundle",
    "run_reproduction",
    "format_rows_csv",
    "format_rows_table",
]

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_HYPOTHESIS = 2
EXIT_NUMERICAL = 3


EXPERIMENT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "weightedgeo experiment spec",
    "type": "object",
    "required": ["manifold", "task"],
    "additionalProperties": False,
    "properties": {
        "manifold": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "name": {"type": "string"},
                "parameters": {"type": "object"},
                "density": {"type": "string"},
                "coords": {"type": "array", "items": {"type": "string"}},
                "inline_metric": {
                    "type": "array",
                    "items": {"type": "array", "items": {"type": "string"}},
                },
                "alpha_override": {"type": "array", "items": {"type": "string"}},
            },
        },
        "task": {
            "type": "object",
            "required": ["operation"],
            "additionalProperties": False,
            "properties": {
                "operation": {"type": "string"},
                "arguments": {"type": "object"},
            },
        },
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "path": {"type": ["string", "null"]},
                "format": {"enum": ["csv", "pretty-table"]},
            },
        },
        "seed": {"type": "integer"},
        "tolerances": {"type": "object"},
    },
}

_VALIDATOR = Draft202012Validator(EXPERIMENT_SCHEMA)


class SpecError(ValueError):
    pass


def validate_spec(spec: dict) -> None:
    errors = sorted(_VALIDATOR.iter_errors(spec), key=lambda e: list(e.path))
    if errors:
        msgs = "; ".join(
            f"{'/'.join(str(p) for p in e.path) or '<root>'}: {e.message}" for e in errors)
        raise SpecError(f"experiment spec invalid: {msgs}")


@dataclass
class ExperimentSpec:
    manifold: dict
    task: dict
    output: dict = field(default_factory=dict)
    seed: int = 0
    tolerances: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentSpec":
        validate_spec(data)
        return cls(
            manifold=data["manifold"],
            task=data["task"],
            output=data.get("output", {}),
            seed=int(data.get("seed", 0)),
            tolerances=data.get("tolerances", {}),
        )

    def to_dict(self) -> dict:
        return {
            "manifold": self.manifold,
            "task": self.task,
            "output": self.output,
            "seed": self.seed,
            "tolerances": self.tolerances,
        }


@dataclass
class RunResult:
    exit_code: int
    rows: list[dict]
    summary: str
    csv_text: str = ""


def resolve_manifold(mspec: dict, tol: Tolerances) -> ManifoldChart:
    if "inline_metric" in mspec:
        coords = tuple(mspec.get("coords") or ())
        if not coords:
            raise SpecError("inline_metric requires explicit coords")
        entries = [[parse_scalar_field(src, coords).expr for src in row]
                   for row in mspec["inline_metric"]]
        chart = ManifoldChart("inline", coords, metric_exprs=entries, tol=tol)
    else:
        name = mspec.get("name")
        if not name:
            raise SpecError("manifold needs a catalog 'name' or an 'inline_metric'")
        chart = catalog_build(name, mspec.get("parameters", {}), tol)
    if "density" in mspec:
        chart = with_density(chart, mspec["density"])
    if "alpha_override" in mspec:
        override = tuple(parse_scalar_field(src, chart.coords).expr
                         for src in mspec["alpha_override"])
        chart = chart.replace(alpha_override=override)
    return chart


def _floatlist(value) -> np.ndarray:
    if isinstance(value, str):
        return np.array([float(x) for x in value.split(",")])
    return np.asarray(value, dtype=float)


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    if isinstance(x, (list, tuple, np.ndarray)):
        return " ".join(_fmt(v) for v in np.asarray(x).reshape(-1))
    return str(x)


def format_rows_csv(rows: list[dict], summary: str) -> str:
    """RFC-4180-style CSV: CRLF lines, '.' decimal, 17 significant digits."""
    buf = io.StringIO()
    if rows:
        header = list(rows[0].keys())
        buf.write(",".join(header) + "\r\n")
        for row in rows:
            cells = []
            for key in header:
                cell = _fmt(row.get(key, ""))
                if "," in cell or '"' in cell or "\n" in cell:
                    cell = '"' + cell.replace('"', '""') + '"'
                cells.append(cell)
            buf.write(",".join(cells) + "\r\n")
    buf.write("# " + summary + "\r\n")
    return buf.getvalue()


def format_rows_table(rows: list[dict], summary: str) -> str:
    if not rows:
        return summary + "\n"
    header = list(rows[0].keys())
    cols = [[key] + [_fmt(r.get(key, "")) for r in rows] for key in header]
    widths = [max(len(c) for c in col) for col in cols]
    lines = []
    for i in range(len(rows) + 1):
        lines.append("  ".join(col[i].ljust(w) for col, w in zip(cols, widths)))
        if i == 0:
            lines.append("  ".join("-" * w for w in widths))
    lines.append(summary)
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Tasks


def _matrix_rows(name: str, matrix: np.ndarray, extra: dict | None = None) -> list[dict]:
    row: dict = {"item": name}
    n = matrix.shape[0]
    for i in range(n):
        for j in range(matrix.shape[1]):
            row[f"m{i}{j}"] = float(matrix[i, j])
    row.update(extra or {})
    return [row]


def task_build_manifold(chart: ManifoldChart, args: dict, tol: Tolerances,
                        seed: int) -> RunResult:
    rng = np.random.default_rng(seed)
    n_check = int(args.get("spd_samples", 25))
    lo = np.array([v if math.isfinite(v) else -2.0 for v in chart.safe_domain.lower])
    hi = np.array([v if math.isfinite(v) else 2.0 for v in chart.safe_domain.upper])
    worst = math.inf
    for _ in range(n_check):
        p = lo + rng.random(chart.dim) * (hi - lo)
        if not chart.contains(p):
            continue
        worst = min(worst, float(np.linalg.eigvalsh(chart.metric(p))[0]))
    rows = [{
        "name": chart.name,
        "dim": chart.dim,
        "coords": " ".join(chart.coords),
        "density": chart.density.pretty(),
        "min_metric_eigenvalue": worst,
    }]
    ok = worst > tol.spd_eigen_floor
    summary = (f"build-manifold: {chart.name}, n={chart.dim}, "
               f"SPD {'ok' if ok else 'VIOLATED'} (min eig {worst:.3e})")
    return RunResult(EXIT_PASS if ok else EXIT_FAIL, rows, summary)


def task_manifest(chart, args, tol, seed) -> RunResult:
    rows = [{"name": k, "parameters": json.dumps(v["parameters"], sort_keys=True)}
            for k, v in catalog_manifest().items()]
    return RunResult(EXIT_PASS, rows, "catalog manifest")


def task_curvature(chart: ManifoldChart, args: dict, tol: Tolerances,
                   seed: int) -> RunResult:
    p = _floatlist(args["point"])
    X = _floatlist(args["X"])
    Y = _floatlist(args["Y"])
    Z = _floatlist(args["Z"])
    N = args.get("N", 1)
    N = math.inf if N in ("inf", "infinity") else float(N)
    formula = tensorcalc.curvature_alpha(chart, p, X, Y, Z, "formula")
    oracle = tensorcalc.curvature_alpha(chart, p, X, Y, Z, "oracle")
    gap = float(np.max(np.abs(formula - oracle)))
    denom = max(float(np.max(np.abs(formula))), float(np.max(np.abs(oracle))), 1e-3)
    ricf = tensorcalc.ric_f(chart, p, Y, Z, N)
    trace = tensorcalc.ric_alpha_trace(chart, p, Y, Z)
    rows = [{
        "R_alpha_formula": formula,
        "R_alpha_oracle": oracle,
        "paths_rel_gap": gap / denom,
        "ric_f_N": ricf,
        "ric_alpha_trace": trace,
    }]
    ok = gap / denom < tol.formula_vs_oracle_rel
    summary = (f"curvature: paths agree to {gap / denom:.3e} "
               f"({'ok' if ok else 'DISAGREE'}); Ric_f^{N}={ricf:.6g}")
    return RunResult(EXIT_PASS if ok else EXIT_FAIL, rows, summary)


def task_geodesic(chart: ManifoldChart, args: dict, tol: Tolerances,
                  seed: int) -> RunResult:
    p = _floatlist(args["point"])
    v = _floatlist(args["vector"])
    T = float(args.get("T", 1.0))
    connection = args.get("connection", "levi_civita")
    path = geodesy.integrate_geodesic(chart, p, v, T, connection, tol)
    n = chart.dim
    rows = []
    rec = None
    if path.parametrization == "unit_speed_g":
        rec = geodesy.reparametrize(path, chart)
    ts = np.linspace(path.t0, path.t1, int(args.get("samples", 65)))
    run_s = 0.0
    prev = path.t0
    for t in ts:
        x = path.position(t)
        vv = path.velocity(t)
        if rec is not None:
            sval = rec.s_of_t(t)
        else:
            seg = geodesy._segment_quad(
                lambda u: math.exp(-2.0 / (n - 1) * chart.f_value(path.position(u)))
                * geodesy.g_norm(chart, path.position(u), path.velocity(u)),
                prev, t) if chart.dim > 1 else 0.0
            run_s += seg
            prev = t
            sval = run_s
        row = {"t": float(t), "s": float(sval)}
        row.update({f"x{i + 1}": float(x[i]) for i in range(n)})
        row.update({f"v{i + 1}": float(vv[i]) for i in range(n)})
        rows.append(row)
    summary = (f"geodesic[{connection}]: t in [{path.t0:.6g}, {path.t1:.6g}], "
               f"end {_fmt(path.end)}"
               + (", truncated at safe-domain boundary" if path.truncated else ""))
    return RunResult(EXIT_PASS, rows, summary)


def task_repar_distance(chart: ManifoldChart, args: dict, tol: Tolerances,
                        seed: int) -> RunResult:
    p = _floatlist(args["p"])
    q = _floatlist(args["q"])
    nd = int(args.get("n_directions", tol.shoot_directions))
    res = geodesy.minimal_connectors(chart, p, q, nd, tol)
    rows = [{"s_pq": res.value, "connectors": res.count,
             "lengths": res.lengths, "totals": res.totals}]
    summary = f"repar-distance: s(p,q) = {res.value:.12g} over {res.count} minimal connector(s)"
    return RunResult(EXIT_PASS, rows, summary)


def _resolve_curve(chart: ManifoldChart, args: dict, tol: Tolerances):
    if "loop_points" in args or "curve_points" in args:
        pts = [np.asarray(_floatlist(p)) for p in args.get("loop_points", args.get("curve_points"))]
        return geodesy.CurvePath.polyline(pts)
    if "family" in args:
        fam = transport.named_family(args["family"], chart)
        return fam.loop_at(float(args.get("s0", 0.0)))
    raise SpecError("transport tasks need loop_points/curve_points or a named family")


def task_transport(chart: ManifoldChart, args: dict, tol: Tolerances,
                   seed: int) -> RunResult:
    curve = _resolve_curve(chart, args, tol)
    v0 = _floatlist(args["vector"])
    out = transport.parallel_transport(chart, curve, v0, tol)
    rows = [{"v_in": v0, "v_out": out}]
    return RunResult(EXIT_PASS, rows, f"transport: {_fmt(v0)} -> {_fmt(out)}")


def _orthogonality_distance(chart: ManifoldChart, basepoint, h: np.ndarray) -> float:
    G = chart.metric(basepoint)
    return float(np.max(np.abs(h.T @ G @ h - G)))


def task_holonomy(chart: ManifoldChart, args: dict, tol: Tolerances,
                  seed: int) -> RunResult:
    loop = _resolve_curve(chart, args, tol)
    frame_mode = args.get("frame", "coordinate")
    hol = transport.holonomy_element(chart, loop, frame_mode, tol,
                                     descriptor=args.get("family", "loop"))
    det = hol.det
    rows = _matrix_rows("holonomy", hol.matrix, {
        "loop_id": args.get("family", "loop"),
        "parameter": float(args.get("s0", 0.0)),
        "det": det,
        "distance_to_orthogonal": _orthogonality_distance(chart, hol.basepoint, hol.matrix),
    })
    ok = abs(abs(det) - 1.0) < tol.holonomy_det
    summary = f"holonomy: det={det:.12g} ({'unimodular ok' if ok else 'DET DRIFT'})"
    if "expect" in args:
        expect = np.array(args["expect"], dtype=float)
        gap = float(np.max(np.abs(hol.matrix - expect)))
        rows[0]["expect_gap"] = gap
        match = gap <= float(args.get("expect_tol", 1e-5))
        summary += (f"; match expected +-{args.get('expect_tol', 1e-5)}: "
                    f"{'yes' if match else 'NO'} (gap {gap:.3e})")
        ok = ok and match
    return RunResult(EXIT_PASS if ok else EXIT_FAIL, rows, summary)


def task_holonomy_algebra(chart: ManifoldChart, args: dict, tol: Tolerances,
                          seed: int) -> RunResult:
    family = args["family"]
    s0 = float(args["s0"])
    ds = float(args.get("ds", tol.algebra_ds))
    elem = transport.algebra_element(chart, family, s0, ds, tol=tol)
    rows = _matrix_rows("algebra_element", elem.matrix,
                        {"family": family, "s0": s0, "trace": elem.trace})
    summary = f"holonomy-algebra: {family}@{s0:.6g}, trace {elem.trace:.3e}"
    exit_code = EXIT_PASS
    if "expect" in args:
        expect = np.array(args["expect"], dtype=float)
        gap = float(np.max(np.abs(elem.matrix - expect)))
        rows[0]["expect_gap"] = gap
        match = gap <= float(args.get("expect_tol", 1e-3))
        summary += f"; match paper +-{args.get('expect_tol', 1e-3)}: {'yes' if match else 'NO'} (gap {gap:.3e})"
        if not match:
            exit_code = EXIT_FAIL
    return RunResult(exit_code, rows, summary)


def task_algebra_dim(chart: ManifoldChart, args: dict, tol: Tolerances,
                     seed: int) -> RunResult:
    elems = []
    for fam_spec in args["elements"]:
        elem = transport.algebra_element(chart, fam_spec["family"],
                                         float(fam_spec["s0"]),
                                         float(fam_spec.get("ds", tol.algebra_ds)),
                                         tol=tol)
        elems.append(elem)
    dim = transport.generated_algebra_dim(elems, int(args.get("depth", 4)),
                                          tol.rank_rel_threshold)
    rows = [{"dim": dim, "elements": len(elems)}]
    exit_code = EXIT_PASS
    summary = f"algebra-dim: {dim}"
    if "expect" in args:
        ok = dim == int(args["expect"])
        summary += f" (expected {args['expect']}: {'yes' if ok else 'NO'})"
        if not ok:
            exit_code = EXIT_FAIL
    return RunResult(exit_code, rows, summary)


def task_parallel_field(chart: ManifoldChart, args: dict, tol: Tolerances,
                        seed: int) -> RunResult:
    comps = args["field"]
    curves = []
    if "loops" in args:
        for pts in args["loops"]:
            curves.append(geodesy.CurvePath.polyline([_floatlist(p) for p in pts]))
    else:
        rng = np.random.default_rng(seed)
        center = _floatlist(args.get("center", [0.0] * chart.dim))
        radius = float(args.get("radius", 0.5))
        for _ in range(int(args.get("n_curves", 20))):
            pts = [center + rng.uniform(-radius, radius, chart.dim) for _ in range(4)]
            pts.append(pts[0])
            curves.append(geodesy.CurvePath.polyline(pts))
    residual = transport.parallel_field_residual(chart, comps, curves)
    ok = residual < tol.parallel_field_cert
    rows = [{"residual": residual, "certified_parallel": ok, "curves": len(curves)}]
    summary = (f"parallel-field: residual {residual:.3e} "
               f"({'alpha-parallel' if ok else 'not parallel'})")
    exit_code = EXIT_PASS
    if "expect_parallel" in args and bool(args["expect_parallel"]) != ok:
        exit_code = EXIT_FAIL
        summary += " [unexpected]"
    return RunResult(exit_code, rows, summary)


def task_distribution(chart: ManifoldChart, args: dict, tol: Tolerances,
                      seed: int) -> RunResult:
    fields = args["fields"]
    loops = [geodesy.CurvePath.polyline([_floatlist(p) for p in pts])
             for pts in args["loops"]]
    fiber_loops = None
    if "fiber_loops" in args:
        fiber_loops = [geodesy.CurvePath.polyline([_floatlist(p) for p in pts])
                       for pts in args["fiber_loops"]]
    report = transport.distribution_invariance(
        chart, fields, loops, fiber_loops, args.get("fiber_density"), tol)
    ok = report.max_principal_angle < tol.distribution_angle
    rows = [{"max_principal_angle": report.max_principal_angle,
             "lower_block_norm": report.lower_block_norm,
             "fiber_block_gap": report.fiber_block_gap,
             "invariant": ok}]
    summary = (f"distribution: max principal angle {report.max_principal_angle:.3e} "
               f"({'invariant' if ok else 'not invariant'})")
    exit_code = EXIT_PASS
    if "expect_invariant" in args and bool(args["expect_invariant"]) != ok:
        exit_code = EXIT_FAIL
        summary += " [unexpected]"
    return RunResult(exit_code, rows, summary)


def task_volume_form(chart: ManifoldChart, args: dict, tol: Tolerances,
                     seed: int) -> RunResult:
    rng = np.random.default_rng(seed)
    center = _floatlist(args.get("center", [0.5] * chart.dim))
    radius = float(args.get("radius", 0.4))
    worst = 0.0
    rows = []
    for _ in range(int(args.get("n_points", 12))):
        p = center + rng.uniform(-radius, radius, chart.dim)
        if not chart.contains(p):
            continue
        direction = rng.normal(size=chart.dim)
        direction /= np.linalg.norm(direction)
        res = tensorcalc.volume_form_parallel_residual(chart, p, direction)
        worst = max(worst, res)
        rows.append({"point": p, "residual": res})
    expect_parallel = bool(args.get("expect_parallel", True))
    ok = (worst < tol.volume_form_residual) == expect_parallel
    if not expect_parallel:
        ok = worst > 1e-3
    summary = f"volume-form: max residual {worst:.3e}"
    return RunResult(EXIT_PASS if ok else EXIT_FAIL, rows, summary)


def _hypothesis_for(chart, args, tol, seed):
    K = args.get("K", 0.0)
    center = _floatlist(args["point"])
    radius = float(args.get("sample_radius", 1.0))
    if K == "sampled":
        K = cmp.infimum_curvature_quotient(chart, center, radius,
                                           int(args.get("sample_points", 50)), seed)
    K = float(K)
    hyp = cmp.sample_hypothesis(chart, K, center, radius, seed=seed, tol=tol)
    return K, hyp


def task_check(chart: ManifoldChart, args: dict, tol: Tolerances,
               seed: int) -> RunResult:
    theorem = args["theorem"]
    nd = int(args.get("n_directions", 16))
    point = _floatlist(args.get("point", [0.0] * chart.dim))

    if theorem == "mu_finiteness":
        report = cmp.mu_finiteness_check(chart, float(args["K"]), tol)
        return _report_result(report)

    if theorem == "riccati":
        r_max = float(args.get("r_max", 2.0))
        rng = np.random.default_rng(seed)
        margin = math.inf
        rows = []
        worst = None
        for _ in range(nd):
            u = rng.normal(size=chart.dim)
            prof = cmp.radial_profile(chart, point, u, r_max, tol=tol)
            rep = cmp.riccati_check(prof, chart, tol)
            if rep.margin < margin:
                margin, worst = rep.margin, rep
            rows.extend(rep.samples[:: max(1, len(rep.samples) // 16)])
        report = cmp.ComparisonReport("riccati", margin, tol.riccati_tol,
                                      cmp._verdict(margin, tol.riccati_tol), rows)
        return _report_result(report)

    K, hyp = _hypothesis_for(chart, args, tol, seed)
    params = ModelParams(chart.dim, K)

    if theorem in ("mean_curvature", "volume_element"):
        r_max = float(args.get("r_max", 2.0))
        rng = np.random.default_rng(seed)
        margin = math.inf
        rows = []
        for _ in range(nd):
            u = rng.normal(size=chart.dim)
            prof = cmp.radial_profile(chart, point, u, r_max, tol=tol)
            rep = (cmp.mean_curvature_check(prof, params, hyp, tol)
                   if theorem == "mean_curvature"
                   else cmp.volume_element_monotone(prof, params, hyp, tol))
            margin = min(margin, rep.margin)
            rows.extend(rep.samples[:: max(1, len(rep.samples) // 16)])
        report = cmp.ComparisonReport(theorem, margin, rep.tolerance,
                                      cmp._verdict(margin, rep.tolerance, hyp.ok),
                                      rows, hypothesis_margin=hyp.margin)
        return _report_result(report)

    if theorem == "laplacian":
        rng = np.random.default_rng(seed)
        radius = float(args.get("radius", 1.0))
        pts = []
        while len(pts) < int(args.get("n_points", 6)):
            x = point + rng.uniform(-radius, radius, chart.dim)
            if chart.contains(x) and np.linalg.norm(x - point) > 0.2:
                pts.append(x)
        report = cmp.laplacian_comparison_check(chart, point, pts, K, nd, hyp, tol)
        return _report_result(report)

    if theorem == "volume_comparison":
        mode = args.get("mode", "f_volume_annuli")
        inner = tuple(float(x) for x in args.get("inner", (0.0, 0.5)))
        outer = tuple(float(x) for x in args.get("outer", (0.0, 1.0)))
        report = cmp.volume_comparison_check(chart, point, mode, inner, outer,
                                             K, nd, hyp, tol=tol)
        return _report_result(report)

    if theorem == "bounded_f":
        report = cmp.bounded_f_bounds(chart, point, float(args.get("r", 0.5)), K,
                                      nd, tol)
        return _report_result(report)

    if theorem == "myers":
        report = cmp.myers_check(chart, point, K, nd, hyp, tol)
        if "expect_saturation" in args and report.passed:
            gap = report.details.get("saturation_gap")
            if gap is None or gap > tol.myers_tol:
                report.verdict = "fail"
                report.details["saturation_failed"] = True
        return _report_result(report)

    raise SpecError(f"unknown theorem id {theorem!r}")


def _report_result(report: cmp.ComparisonReport) -> RunResult:
    code = {"pass": EXIT_PASS, "fail": EXIT_FAIL,
            "hypothesis-unmet": EXIT_HYPOTHESIS}[report.verdict]
    rows = report.samples if report.samples else [{"margin": report.margin}]
    summary = report.summary_line()
    if report.details:
        compact = {k: v for k, v in report.details.items() if k != "truncation_radii"}
        if compact:
            summary += f" details={json.dumps(compact, default=_fmt, sort_keys=True)}"
    return RunResult(code, rows, summary)


def task_one_dim(chart, args: dict, tol: Tolerances, seed: int) -> RunResult:
    K = int(args["K"])
    a = float(args["a"])
    c = float(args["c"])
    s_range = tuple(float(x) for x in args["s_range"])
    rows = cmp.one_dim_closed_forms(K, a, c, s_range, int(args.get("samples", 21)), tol)
    worst = max(max(abs(r["lambda_closed"] - r["lambda_numeric"]),
                    abs(r["emf_closed"] - r["emf_numeric"])) for r in rows)
    ok = worst < tol.one_dim_tol
    summary = (f"one-dim K={K}: closed forms vs u''=K u^-3 integration, "
               f"max gap {worst:.3e} ({'ok' if ok else 'DISAGREE'})")
    return RunResult(EXIT_PASS if ok else EXIT_FAIL, rows, summary)


_TASKS = {
    "build-manifold": task_build_manifold,
    "manifest": task_manifest,
    "curvature": task_curvature,
    "geodesic": task_geodesic,
    "repar-distance": task_repar_distance,
    "transport": task_transport,
    "holonomy": task_holonomy,
    "holonomy-algebra": task_holonomy_algebra,
    "algebra-dim": task_algebra_dim,
    "parallel-field": task_parallel_field,
    "distribution": task_distribution,
    "volume-form": task_volume_form,
    "check": task_check,
    "one-dim": task_one_dim,
}


def run(spec: ExperimentSpec | dict) -> RunResult:
    """Validate and execute a spec; numerical failures exit with code 3."""
    if isinstance(spec, dict):
        spec = ExperimentSpec.from_dict(spec)
    else:
        validate_spec(spec.to_dict())
    tol = DEFAULT.with_overrides(**spec.tolerances)
    try:
        chart = None
        if spec.task["operation"] != "manifest":
            chart = resolve_manifold(spec.manifold, tol)
        op = spec.task["operation"]
        if op not in _TASKS:
            raise SpecError(f"unknown operation {op!r}; known: {', '.join(sorted(_TASKS))}")
        result = _TASKS[op](chart, spec.task.get("arguments", {}), tol, spec.seed)
    except SpecError:
        raise
    except Exception as exc:  # numerical failure surface
        result = RunResult(EXIT_NUMERICAL, [],
                           f"{spec.task.get('operation', '?')}: numerical error: "
                           f"{type(exc).__name__}: {exc}")
    fmt = spec.output.get("format", "csv")
    text = (format_rows_csv(result.rows, result.summary) if fmt == "csv"
            else format_rows_table(result.rows, result.summary))
    result.csv_text = text
    path = spec.output.get("path")
    if path:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    return result


# ---------------------------------------------------------------------------
# Reproduction bundle

_PI = math.pi
_PAPER_A = [[1.0, -1.0], [2.0 / _PI + 4.0 * _PI / 3.0, -1.0]]
_C_GOLDEN = (1.0 - math.sqrt(5.0)) / 2.0
_PAPER_B = [[0.0, _C_GOLDEN * math.exp(-_C_GOLDEN)], [1.0, 0.0]]

_SPHERE_COS = {"name": "sphere_polar", "parameters": {"n": 2}, "density": "cos(r)"}
_HYPERBOLIC = {"name": "hyperbolic_warped", "parameters": {"n": 2, "k": 1}, "density": "r"}
_EUCLID2 = {"name": "euclidean", "parameters": {"n": 2}}


def _square_loop():
    return [[0, 0], [1, 0], [1, 1], [0, 1], [0, 0]]


def reproduction_bundle() -> dict[str, dict]:
    """Built-in spec bundle: one entry per reproduced example or check.

    `expected_exit` tags the outcome each spec is known to produce.  The
    latitude-family algebra element is listed with expected_exit 1: the
    transport machinery that reproduces every other value in this example
    (including B to 1e-9) yields a different matrix than the one printed
    for A, whose derivative scale is fixed by the equator holonomy.
    """
    D = saturated_rigidity_domain("-r/4", 2, 1.0)
    bundle: dict[str, dict] = {
        "s2-algebra-B": {
            "expected_exit": EXIT_PASS,
            "description": "round-sphere rectangle loop family: B matrix and trace",
            "spec": {
                "manifold": _SPHERE_COS,
                "task": {"operation": "holonomy-algebra",
                         "arguments": {"family": "sphere_rectangle_family", "s0": 0.0,
                                       "expect": _PAPER_B, "expect_tol": 1e-3}},
            },
        },
        "s2-algebra-A": {
            "expected_exit": EXIT_FAIL,
            "description": "round-sphere latitude loop family vs the printed A matrix",
            "spec": {
                "manifold": _SPHERE_COS,
                "task": {"operation": "holonomy-algebra",
                         "arguments": {"family": "sphere_latitude_family", "s0": _PI / 2,
                                       "expect": _PAPER_A, "expect_tol": 1e-3}},
            },
        },
        "s2-algebra-dim": {
            "expected_exit": EXIT_PASS,
            "description": "latitude+rectangle elements generate a 3-dimensional algebra",
            "spec": {
                "manifold": _SPHERE_COS,
                "task": {"operation": "algebra-dim",
                         "arguments": {"elements": [
                             {"family": "sphere_latitude_family", "s0": _PI / 2},
                             {"family": "sphere_rectangle_family", "s0": 0.0}],
                             "expect": 3}},
            },
        },
        "warped-unipotent": {
            "expected_exit": EXIT_PASS,
            "description": "product plane with fiber density y^2: unipotent holonomy "
                           "(closed-form displacement -2e)",
            "spec": {
                "manifold": {**_EUCLID2, "density": "y^2"},
                "task": {"operation": "holonomy",
                         "arguments": {"loop_points": _square_loop(),
                                       "expect": [[1.0, -2.0 * math.e], [0.0, 1.0]],
                                       "expect_tol": 1e-5}},
            },
        },
        "warped-unipotent-printed-value": {
            "expected_exit": EXIT_FAIL,
            "description": "same loop vs the printed constant -2/e, which omits the "
                           "fiber-transport scaling of the parallel field",
            "spec": {
                "manifold": {**_EUCLID2, "density": "y^2"},
                "task": {"operation": "holonomy",
                         "arguments": {"loop_points": _square_loop(),
                                       "expect": [[1.0, -2.0 * math.exp(-1.0)],
                                                  [0.0, 1.0]],
                                       "expect_tol": 1e-5}},
            },
        },
        "hyperbolic-parallel-field": {
            "expected_exit": EXIT_PASS,
            "description": "e^{2r} d/dr is parallel along any curve in the warped plane",
            "spec": {
                "manifold": _HYPERBOLIC,
                "task": {"operation": "parallel-field",
                         "arguments": {"field": ["exp(2*r)", "0"],
                                       "center": [0.0, 0.0], "radius": 0.7,
                                       "n_curves": 20, "expect_parallel": True}},
            },
        },
        "hyperbolic-parallel-field-2": {
            "expected_exit": EXIT_PASS,
            "description": "d/dy + y e^{2r} d/dr is parallel in the warped plane",
            "spec": {
                "manifold": _HYPERBOLIC,
                "task": {"operation": "parallel-field",
                         "arguments": {"field": ["y*exp(2*r)", "1"],
                                       "center": [0.0, 0.0], "radius": 0.7,
                                       "n_curves": 20, "expect_parallel": True}},
            },
        },
        "expansion-ricci": {
            "expected_exit": EXIT_PASS,
            "description": "expanding warped line over flat fiber: Ric_f^1(dr,dr) = 8",
            "spec": {
                "manifold": {"name": "expansion_example", "parameters": {"n": 2, "A": 3}},
                "task": {"operation": "curvature",
                         "arguments": {"point": [0.3, -0.2], "X": [0, 1],
                                       "Y": [1, 0], "Z": [1, 0], "N": 1}},
            },
        },
        "one-dim-K1": {
            "expected_exit": EXIT_PASS,
            "description": "one-dimensional closed forms, spherical case",
            "spec": {"manifold": _EUCLID2,
                     "task": {"operation": "one-dim",
                              "arguments": {"K": 1, "a": 1.0, "c": _PI / 2,
                                            "s_range": [0.3, 2.6]}}},
        },
        "one-dim-K0": {
            "expected_exit": EXIT_PASS,
            "description": "one-dimensional closed forms, flat case",
            "spec": {"manifold": _EUCLID2,
                     "task": {"operation": "one-dim",
                              "arguments": {"K": 0, "a": 0.5, "c": 1.0,
                                            "s_range": [0.0, 2.0]}}},
        },
        "one-dim-Km1": {
            "expected_exit": EXIT_PASS,
            "description": "one-dimensional closed forms, hyperbolic case",
            "spec": {"manifold": _EUCLID2,
                     "task": {"operation": "one-dim",
                              "arguments": {"K": -1, "a": 1.0, "c": _PI / 2,
                                            "s_range": [0.25, 2.0]}}},
        },
        "riccati-sphere-density": {
            "expected_exit": EXIT_PASS,
            "description": "Riccati inequality for lambda along random directions",
            "spec": {"manifold": _SPHERE_COS,
                     "task": {"operation": "check",
                              "arguments": {"theorem": "riccati",
                                            "point": [_PI / 2, 0.0], "r_max": 1.4,
                                            "n_directions": 6}}},
        },
        "mean-curvature-rigidity": {
            "expected_exit": EXIT_PASS,
            "description": "equality case: lambda = m_K(s) on a rigidity chart",
            "spec": {"manifold": {"name": "rigidity_metric",
                                  "parameters": {"n": 2, "K": 1.0, "f": "r/4"}},
                     "task": {"operation": "check",
                              "arguments": {"theorem": "mean_curvature",
                                            "point": [0.35, 0.4], "K": 1.0,
                                            "r_max": 1.2, "n_directions": 4,
                                            "sample_radius": 0.3}}},
        },
        "volume-element-sphere-density": {
            "expected_exit": EXIT_PASS,
            "description": "e^{-f} A / sn_K^{n-1}(s) non-increasing, sampled K",
            "spec": {"manifold": _SPHERE_COS,
                     "task": {"operation": "check",
                              "arguments": {"theorem": "volume_element",
                                            "point": [_PI / 2, 0.0], "K": "sampled",
                                            "r_max": 1.4, "n_directions": 6,
                                            "sample_radius": 1.0}}},
        },
        "laplacian-euclidean": {
            "expected_exit": EXIT_PASS,
            "description": "flat-space Laplacian comparison is an equality",
            "spec": {"manifold": _EUCLID2,
                     "task": {"operation": "check",
                              "arguments": {"theorem": "laplacian", "K": 0.0,
                                            "point": [0.0, 0.0], "radius": 1.0,
                                            "n_points": 4, "n_directions": 8}}},
        },
        "volume-comparison-sphere-density": {
            "expected_exit": EXIT_PASS,
            "description": "relative f-volume comparison on the weighted sphere",
            "spec": {"manifold": _SPHERE_COS,
                     "task": {"operation": "check",
                              "arguments": {"theorem": "volume_comparison",
                                            "point": [_PI / 2, 0.0], "K": "sampled",
                                            "mode": "f_volume_annuli",
                                            "inner": [0.0, 0.5], "outer": [0.0, 1.0],
                                            "n_directions": 8, "sample_radius": 1.0}}},
        },
        "bounded-f-sphere": {
            "expected_exit": EXIT_PASS,
            "description": "bounded-density volume and Laplacian bounds",
            "spec": {"manifold": _SPHERE_COS,
                     "task": {"operation": "check",
                              "arguments": {"theorem": "bounded_f", "K": 0.0,
                                            "point": [_PI / 2, 0.0], "r": 0.5,
                                            "n_directions": 8}}},
        },
        "myers-round-sphere": {
            "expected_exit": EXIT_PASS,
            "description": "weighted Myers bound on the round sphere (f = 0)",
            "spec": {"manifold": {"name": "sphere_polar", "parameters": {"n": 2}},
                     "task": {"operation": "check",
                              "arguments": {"theorem": "myers", "K": 1.0,
                                            "point": [_PI / 2, 0.0],
                                            "n_directions": 8, "sample_radius": 1.0}}},
        },
        "myers-rigidity-saturation": {
            "expected_exit": EXIT_PASS,
            "description": "diameter rigidity: total s equals pi/sqrt(K)",
            "spec": {"manifold": {"name": "rigidity_metric",
                                  "parameters": {"n": 2, "K": 1.0, "f": "-r/4",
                                                 "r_max": D}},
                     "task": {"operation": "check",
                              "arguments": {"theorem": "myers", "K": 1.0,
                                            "point": [1e-3, 0.0], "n_directions": 4,
                                            "sample_radius": 0.5,
                                            "expect_saturation": True}}},
        },
        "myers-flat-hypothesis-unmet": {
            "expected_exit": EXIT_HYPOTHESIS,
            "description": "flat space fails the K > 0 curvature hypothesis",
            "spec": {"manifold": _EUCLID2,
                     "task": {"operation": "check",
                              "arguments": {"theorem": "myers", "K": 1.0,
                                            "point": [0.0, 0.0],
                                            "n_directions": 4, "sample_radius": 1.0}}},
        },
        "mu-finiteness-rigidity": {
            "expected_exit": EXIT_PASS,
            "description": "mu(M) is finite and below the model bound",
            "spec": {"manifold": {"name": "rigidity_metric",
                                  "parameters": {"n": 2, "K": 1.0, "f": "-r/4",
                                                 "r_max": D}},
                     "task": {"operation": "check",
                              "arguments": {"theorem": "mu_finiteness", "K": 1.0}}},
        },
        "volume-form-parallel": {
            "expected_exit": EXIT_PASS,
            "description": "the weighted volume form is parallel for exact alpha",
            "spec": {"manifold": _SPHERE_COS,
                     "task": {"operation": "volume-form",
                              "arguments": {"center": [1.2, 0.5], "radius": 0.4,
                                            "expect_parallel": True}}},
        },
        "volume-form-nonclosed": {
            "expected_exit": EXIT_PASS,
            "description": "a non-closed alpha admits no parallel volume form",
            "spec": {"manifold": {**_EUCLID2, "alpha_override": ["y", "0"]},
                     "task": {"operation": "volume-form",
                              "arguments": {"center": [0.5, 0.8], "radius": 0.3,
                                            "expect_parallel": False}}},
        },
    }
    return bundle


def run_reproduction(name: str) -> tuple[RunResult, int]:
    bundle = reproduction_bundle()
    if name not in bundle:
        raise SpecError(f"unknown bundle entry {name!r}; see the list command")
    entry = bundle[name]
    result = run(ExperimentSpec.from_dict(entry["spec"]))
    return result, entry["expected_exit"]
