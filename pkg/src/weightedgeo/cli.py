"""Command-line front end for the weighted-geometry toolkit.

Commands mirror the library operations: build-manifold, curvature, geodesic,
repar-distance, transport, holonomy, holonomy-algebra, parallel-field,
distribution, check <theorem-id>, one-dim, reproduce <bundle-name>, list.

Exit codes: 0 pass/success, 1 check failure, 2 hypothesis-unmet,
3 numerical error.
"""

from __future__ import annotations

import json
import sys

import click
import yaml

from .experiments import (
    EXIT_NUMERICAL,
    ExperimentSpec,
    SpecError,
    format_rows_table,
    reproduction_bundle,
    run,
    run_reproduction,
)


def _manifold_spec(manifold: str, parameters: str | None, density: str | None) -> dict:
    spec: dict = {"name": manifold}
    if parameters:
        spec["parameters"] = json.loads(parameters)
    if density:
        spec["density"] = density
    return spec


def _emit(result, out: str | None, fmt: str) -> None:
    text = result.csv_text
    if out is None:
        click.echo(text, nl=False)
    else:
        click.echo(result.summary)
    sys.exit(result.exit_code)


def _execute(manifold_spec: dict, operation: str, arguments: dict,
             out: str | None, fmt: str, seed: int, tolerance: tuple[str, ...]) -> None:
    overrides = {}
    for item in tolerance:
        key, _, value = item.partition("=")
        if not value:
            raise click.UsageError(f"--tolerance expects name=value, got {item!r}")
        overrides[key] = float(value)
    spec = {
        "manifold": manifold_spec,
        "task": {"operation": operation, "arguments": arguments},
        "output": {"path": out, "format": fmt},
        "seed": seed,
        "tolerances": overrides,
    }
    try:
        result = run(ExperimentSpec.from_dict(spec))
    except SpecError as exc:
        raise click.UsageError(str(exc))
    _emit(result, out, fmt)


def _common(fn):
    fn = click.option("--manifold", required=True, help="catalog name")(fn)
    fn = click.option("--parameters", help="catalog parameters as JSON")(fn)
    fn = click.option("--density", help="density f as an expression")(fn)
    fn = click.option("--out", help="output file (default: stdout)")(fn)
    fn = click.option("--format", "fmt", default="csv",
                      type=click.Choice(["csv", "pretty-table"]))(fn)
    fn = click.option("--seed", default=0, type=int)(fn)
    fn = click.option("--tolerance", multiple=True,
                      help="tolerance override name=value (repeatable)")(fn)
    return fn


@click.group()
def main():
    """Numerical toolkit for manifolds with density and the weighted connection."""


@main.command("build-manifold")
@_common
@click.option("--manifest", "show_manifest", is_flag=True,
              help="print the machine-readable catalog manifest instead")
def build_manifold(manifold, parameters, density, out, fmt, seed, tolerance,
                   show_manifest):
    """Build a catalog chart and validate its metric."""
    op = "manifest" if show_manifest else "build-manifold"
    _execute(_manifold_spec(manifold, parameters, density), op, {}, out, fmt,
             seed, tolerance)


@main.command()
@_common
@click.option("--point", required=True, help="chart coordinates, comma separated")
@click.option("--vector", "vectors", multiple=True, required=True,
              help="X, Y, Z vectors (three occurrences)")
@click.option("--N", "n_param", default="1", help="Bakry-Emery parameter (or 'inf')")
def curvature(manifold, parameters, density, out, fmt, seed, tolerance,
              point, vectors, n_param):
    """Weighted curvature by both evaluation paths, plus Ric_f^N."""
    if len(vectors) != 3:
        raise click.UsageError("curvature needs --vector three times (X, Y, Z)")
    args = {"point": point, "X": vectors[0], "Y": vectors[1], "Z": vectors[2],
            "N": n_param}
    _execute(_manifold_spec(manifold, parameters, density), "curvature", args,
             out, fmt, seed, tolerance)


@main.command()
@_common
@click.option("--point", required=True)
@click.option("--vector", required=True)
@click.option("--time", "t_end", default=1.0, type=float)
@click.option("--connection", default="levi_civita",
              type=click.Choice(["levi_civita", "weighted"]))
def geodesic(manifold, parameters, density, out, fmt, seed, tolerance,
             point, vector, t_end, connection):
    """Integrate a geodesic and export t, s, x, v samples."""
    args = {"point": point, "vector": vector, "T": t_end, "connection": connection}
    _execute(_manifold_spec(manifold, parameters, density), "geodesic", args,
             out, fmt, seed, tolerance)


@main.command("repar-distance")
@_common
@click.option("--point", "points", multiple=True, required=True,
              help="p and q (two occurrences)")
@click.option("--directions", default=64, type=int)
def repar_distance(manifold, parameters, density, out, fmt, seed, tolerance,
                   points, directions):
    """Reparametrized distance s(p, q) by multi-start shooting."""
    if len(points) != 2:
        raise click.UsageError("repar-distance needs --point twice (p and q)")
    args = {"p": points[0], "q": points[1], "n_directions": directions}
    _execute(_manifold_spec(manifold, parameters, density), "repar-distance",
             args, out, fmt, seed, tolerance)


@main.command()
@_common
@click.option("--vector", required=True, help="vector to transport")
@click.option("--loop-point", "loop_points", multiple=True, required=True,
              help="polyline vertices, comma separated (repeatable)")
def transport(manifold, parameters, density, out, fmt, seed, tolerance,
              vector, loop_points):
    """Parallel transport along a polyline curve."""
    args = {"vector": vector, "curve_points": list(loop_points)}
    _execute(_manifold_spec(manifold, parameters, density), "transport", args,
             out, fmt, seed, tolerance)


@main.command()
@_common
@click.option("--loop-point", "loop_points", multiple=True,
              help="polyline vertices of a closed loop")
@click.option("--family", help="named loop family instead of explicit points")
@click.option("--s0", default=0.0, type=float, help="family parameter")
@click.option("--frame", default="coordinate",
              type=click.Choice(["coordinate", "orthonormal"]))
def holonomy(manifold, parameters, density, out, fmt, seed, tolerance,
             loop_points, family, s0, frame):
    """Holonomy element of a closed loop."""
    args: dict = {"frame": frame, "s0": s0}
    if family:
        args["family"] = family
    elif loop_points:
        args["loop_points"] = list(loop_points)
    else:
        raise click.UsageError("holonomy needs --loop-point ... or --family")
    _execute(_manifold_spec(manifold, parameters, density), "holonomy", args,
             out, fmt, seed, tolerance)


@main.command("holonomy-algebra")
@_common
@click.option("--family", required=True)
@click.option("--s0", required=True, type=float)
@click.option("--ds", default=1e-4, type=float)
def holonomy_algebra(manifold, parameters, density, out, fmt, seed, tolerance,
                     family, s0, ds):
    """Lie-algebra element d/ds of a holonomy loop family."""
    args = {"family": family, "s0": s0, "ds": ds}
    _execute(_manifold_spec(manifold, parameters, density), "holonomy-algebra",
             args, out, fmt, seed, tolerance)


@main.command("parallel-field")
@_common
@click.option("--field", "field_comps", multiple=True, required=True,
              help="vector-field components as expressions")
@click.option("--center", default=None, help="center of random test loops")
@click.option("--radius", default=0.5, type=float)
@click.option("--curves", default=20, type=int)
def parallel_field(manifold, parameters, density, out, fmt, seed, tolerance,
                   field_comps, center, radius, curves):
    """Residual of nabla^alpha V along random test loops."""
    args: dict = {"field": list(field_comps), "radius": radius, "n_curves": curves}
    if center:
        args["center"] = center
    _execute(_manifold_spec(manifold, parameters, density), "parallel-field",
             args, out, fmt, seed, tolerance)


@main.command()
@_common
@click.option("--field", "field_comps", multiple=True, required=True,
              help="spanning fields, one option per field, components comma separated "
                   "inside a JSON array of expressions")
@click.option("--loop", "loops", multiple=True, required=True,
              help="loop as JSON list of points (repeatable)")
def distribution(manifold, parameters, density, out, fmt, seed, tolerance,
                 field_comps, loops):
    """Invariance of a distribution under holonomy."""
    fields = [json.loads(f) for f in field_comps]
    loop_list = [json.loads(l) for l in loops]
    args = {"fields": fields, "loops": loop_list}
    _execute(_manifold_spec(manifold, parameters, density), "distribution",
             args, out, fmt, seed, tolerance)


@main.command()
@_common
@click.argument("theorem")
@click.option("--point", default=None)
@click.option("--K", "k_param", default="0", help="curvature bound K or 'sampled'")
@click.option("--r-max", default=2.0, type=float)
@click.option("--radius", "ball_r", default=0.5, type=float,
              help="ball radius for bounded_f / laplacian sampling")
@click.option("--inner", default="0,0.5", help="inner interval a,b")
@click.option("--outer", default="0,1.0", help="outer interval a,b")
@click.option("--mode", default="f_volume_annuli",
              type=click.Choice(["f_volume_annuli", "mu_level_sets"]))
@click.option("--directions", default=16, type=int)
def check(manifold, parameters, density, out, fmt, seed, tolerance, theorem,
          point, k_param, r_max, ball_r, inner, outer, mode, directions):
    """Run a comparison-theorem check (riccati, mean_curvature, volume_element,
    laplacian, volume_comparison, bounded_f, myers, mu_finiteness)."""
    k_val = "sampled" if k_param == "sampled" else float(k_param)
    args: dict = {"theorem": theorem, "K": k_val, "r_max": r_max,
                  "n_directions": directions, "mode": mode,
                  "inner": [float(x) for x in inner.split(",")],
                  "outer": [float(x) for x in outer.split(",")],
                  "r": ball_r, "radius": ball_r}
    if point:
        args["point"] = point
    _execute(_manifold_spec(manifold, parameters, density), "check", args,
             out, fmt, seed, tolerance)


@main.command("one-dim")
@click.option("--K", "k_param", required=True, type=int)
@click.option("--a", required=True, type=float)
@click.option("--c", required=True, type=float)
@click.option("--s-range", default="0.3,2.0")
@click.option("--out", default=None)
@click.option("--format", "fmt", default="csv",
              type=click.Choice(["csv", "pretty-table"]))
@click.option("--seed", default=0, type=int)
@click.option("--tolerance", multiple=True)
def one_dim(k_param, a, c, s_range, out, fmt, seed, tolerance):
    """One-dimensional closed forms vs direct integration."""
    args = {"K": k_param, "a": a, "c": c,
            "s_range": [float(x) for x in s_range.split(",")]}
    _execute({"name": "euclidean", "parameters": {"n": 2}}, "one-dim", args,
             out, fmt, seed, tolerance)


@main.command()
@click.argument("bundle_name")
@click.option("--out", default=None)
def reproduce(bundle_name, out):
    """Run a reproduction-bundle entry (or 'all')."""
    names = ([bundle_name] if bundle_name != "all"
             else list(reproduction_bundle().keys()))
    worst = 0
    for name in names:
        try:
            result, expected = run_reproduction(name)
        except SpecError as exc:
            raise click.UsageError(str(exc))
        status = "as-expected" if result.exit_code == expected else "UNEXPECTED"
        click.echo(f"[{name}] exit={result.exit_code} expected={expected} "
                   f"{status}: {result.summary}")
        if out:
            with open(f"{out}.{name}.csv", "w", newline="") as fh:
                fh.write(result.csv_text)
        if result.exit_code != expected:
            worst = max(worst, 1)
        if result.exit_code == EXIT_NUMERICAL:
            worst = max(worst, 3)
    sys.exit(worst)


@main.command("list")
def list_reproductions():
    """Table of the built-in reproduction bundle."""
    rows = []
    for name, entry in reproduction_bundle().items():
        rows.append({
            "name": name,
            "expected_exit": entry["expected_exit"],
            "operation": entry["spec"]["task"]["operation"],
            "description": entry["description"],
        })
    click.echo(format_rows_table(rows, f"{len(rows)} reproduction specs"), nl=False)


@main.command("run-spec")
@click.argument("spec_file", type=click.Path(exists=True))
def run_spec(spec_file):
    """Run an experiment spec from a YAML/JSON file."""
    with open(spec_file) as fh:
        data = yaml.safe_load(fh)
    try:
        result = run(ExperimentSpec.from_dict(data))
    except SpecError as exc:
        raise click.UsageError(str(exc))
    click.echo(result.csv_text, nl=False)
    sys.exit(result.exit_code)


if __name__ == "__main__":
    main()
