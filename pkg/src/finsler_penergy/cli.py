"""Command-line experiment runner (``fpe``).

Subcommands::

    fpe validate --config cfg   # randomized metric-axiom suite
    fpe geodesic --config cfg   # BVP solve or IVP shot, curve CSV + report
    fpe classify --config cfg   # index-form signatures, verdicts, bounds
    fpe survey   --config cfg   # sphere wraparound table

Common flags: --config PATH, --out PATH, --format json|csv, --seed INT,
--quiet, --figures.  The environment variable FPE_LOG=debug|info raises
the, otherwise silent, diagnostics on standard error.  Exit codes: 0 ok,
1 config error, 2 validation failure, 3 solver/geodesic failure.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import time

import numpy as np

from . import __version__, curve as curve_mod, jacobi, variation
from .config import ExperimentConfig, load_config
from .errors import ConfigError, FinslerError, NoConvergence, NotAGeodesic
from .metric import build_metric, validate_metric
from .report import report_paths, run_report, write_csv_rows, write_json_report

log = logging.getLogger("finsler_penergy")


def _setup_logging() -> None:
    level = {"debug": logging.DEBUG, "info": logging.INFO}.get(
        os.environ.get("FPE_LOG", "").lower(), logging.WARNING)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("[%(levelname)s] %(name)s: %(message)s"))
    root = logging.getLogger("finsler_penergy")
    root.handlers[:] = [handler]
    root.setLevel(level)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fpe",
        description="p-energy experiments on Finsler manifolds")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "validate": "run the randomized metric axiom suite",
        "geodesic": "solve or shoot a geodesic and report its energies",
        "classify": "classify a geodesic as a p-energy critical point",
        "survey": "sphere wraparound survey (no-global-extremum witness)",
    }
    for name, text in helps.items():
        cmd = sub.add_parser(name, help=text)
        cmd.add_argument("--config", required=True, help="flat key=value config file")
        cmd.add_argument("--out", default=None, help="report output path")
        cmd.add_argument("--format", choices=("json", "csv"), default=None)
        cmd.add_argument("--seed", type=int, default=None)
        cmd.add_argument("--quiet", action="store_true")
        cmd.add_argument("--figures", action="store_true",
                         help="render PNG figures next to the report")
    return parser


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    return obj


def _say(args, message: str) -> None:
    if not args.quiet:
        print(message)


def _emit(args, cfg: ExperimentConfig, command: str, results, timings,
          csv_rows=None, csv_fields=None) -> dict:
    fmt = cfg.get_str("output.format", "json")
    out = cfg.get_str("output.path", f"fpe_{command}")
    paths = report_paths(out, fmt)
    payload = run_report(command, cfg.values, _jsonable(results), _jsonable(timings))
    if fmt == "json":
        write_json_report(paths["report"], payload)
    else:
        if csv_rows is None:
            csv_rows, csv_fields = _flatten_for_csv(results)
        write_csv_rows(paths["report"], csv_rows, csv_fields)
    _say(args, f"report written to {paths['report']}")
    return paths


def _flatten_for_csv(results):
    if isinstance(results, dict):
        results = [results]
    rows = []
    fields = []
    for entry in results:
        row = {}
        for key, val in entry.items():
            if isinstance(val, dict):
                for k2, v2 in val.items():
                    row[f"{key}.{k2}"] = v2
            else:
                row[key] = val
        for k in row:
            if k not in fields:
                fields.append(k)
        rows.append(row)
    return [{k: _jsonable(v) for k, v in r.items()} for r in rows], fields


# -- curve sources -----------------------------------------------------------------


def _resolve_geodesic(cfg: ExperimentConfig, metric):
    """Produce a geodesic per the configured source; returns (curve, info)."""
    n_grid = cfg.grid_n
    if cfg.has("shoot.y0"):
        x0 = np.asarray(cfg.get_floats("curve.x0"))
        y0 = np.asarray(cfg.get_floats("shoot.y0"))
        t_end = cfg.get_float("shoot.t_end", 1.0)
        steps = cfg.get_int("shoot.steps", n_grid)
        log.info("shooting from %s with y0=%s, t_end=%s", x0, y0, t_end)
        shot = variation.shoot_geodesic(metric, x0, y0, t_end, steps)
        return shot, {"mode": "shoot", "t_end": t_end,
                      "final_point": shot.nodes[-1].tolist()}
    init = None
    if cfg.has("curve.file"):
        path = cfg.get_str("curve.file")
        init = (curve_mod.read_json(path) if path.endswith(".json")
                else curve_mod.read_csv(path))
        x0, x1 = init.x0, init.x1
    else:
        x0 = np.asarray(cfg.get_floats("curve.x0"))
        x1 = np.asarray(cfg.get_floats("curve.x1"))
    p_ref = next((p for p in cfg.p_list if p not in (0.0, 1.0)), 2.0)
    tol = cfg.tol("gradient", 1e-8)
    log.info("BVP solve %s -> %s at p=%s, tol=%g", x0, x1, p_ref, tol)
    solved = variation.solve_geodesic_bvp(
        metric, x0, x1, p_ref, init=init, tol=tol, n_intervals=n_grid)
    return solved, {"mode": "bvp", "p_ref": p_ref, "tol": tol}


# -- subcommands -------------------------------------------------------------------


def cmd_validate(cfg: ExperimentConfig, args) -> int:
    metric = build_metric(cfg.metric_name, cfg.metric_params(), strict=False)
    t0 = time.perf_counter()
    rep = validate_metric(metric, cfg.get_int("validate.samples", 1000), cfg.seed)
    result = rep.to_dict()
    paths = _emit(args, cfg, "validate", result,
                  {"total_s": time.perf_counter() - t0},
                  csv_rows=[c.to_dict() for c in rep.checks],
                  csv_fields=["check", "max_violation", "tolerance", "passed", "detail"])
    if cfg.get_bool("output.figures", False) or args.figures:
        from . import figures
        figures.validation_figure(result, paths["figure"])
        _say(args, f"figure written to {paths['figure']}")
    for chk in rep.checks:
        _say(args, f"  {chk.check:28s} max={chk.max_violation:.3e} "
                   f"{'ok' if chk.passed else 'FAIL'}")
    _say(args, f"validation {'passed' if rep.passed else 'FAILED'} for {metric.name}")
    return 0 if rep.passed else 2


def cmd_geodesic(cfg: ExperimentConfig, args) -> int:
    metric = build_metric(cfg.metric_name, cfg.metric_params())
    t0 = time.perf_counter()
    curve, info = _resolve_geodesic(cfg, metric)
    tables = variation.curve_connection_tables(metric, curve)
    residual = variation.interior_max_norm(
        curve, variation.geodesic_residual(metric, curve, tables).values)
    spread = curve_mod.speed_spread(metric, curve)
    length_val = curve_mod.length(metric, curve)
    per_p = []
    for p in cfg.p_list:
        grad = variation.p_energy_gradient_report(metric, curve, p, tables)
        per_p.append({
            "p": p,
            "E_p": curve_mod.p_energy(metric, curve, p).value,
            "first_variation_norm": grad.total_norm,
        })
    results = {
        "source": info,
        "length": length_val,
        "geodesic_residual": residual,
        "speed_spread": spread,
        "per_p": per_p,
    }
    csv_rows, csv_fields = _flatten_for_csv(per_p)
    paths = _emit(args, cfg, "geodesic", results,
                  {"total_s": time.perf_counter() - t0},
                  csv_rows=csv_rows, csv_fields=csv_fields)
    curve_mod.write_csv(curve, paths["curve_csv"])
    _say(args, f"curve written to {paths['curve_csv']}")
    if cfg.get_bool("output.figures", False) or args.figures:
        from . import figures
        lo, hi = curve.segment_bounds()[0]
        V, _ = curve.segment_derivatives(lo, hi)
        speeds = metric.eval_F_batch(curve.nodes[lo:hi + 1], V)
        figures.geodesic_figure(curve.params, curve.nodes, speeds, residual,
                                paths["figure"])
        _say(args, f"figure written to {paths['figure']}")
    _say(args, f"geodesic: L={length_val:.9g} residual={residual:.3e} "
               f"spread={spread:.3e}")
    return 0


def cmd_classify(cfg: ExperimentConfig, args) -> int:
    metric = build_metric(cfg.metric_name, cfg.metric_params())
    t0 = time.perf_counter()
    curve, info = _resolve_geodesic(cfg, metric)
    geo_tol = cfg.tol("geodesic", variation.GEO_TOL_DEFAULT)
    tables = variation.curve_connection_tables(metric, curve)
    conj = jacobi.find_conjugate_points(
        metric, curve, geo_tol,
        refinement_tol=cfg.tol("conjugate", jacobi.REFINEMENT_TOL),
        tables=tables)
    results = []
    fig_entries = []
    want_figures = cfg.get_bool("output.figures", False) or args.figures
    K = metric.constant_curvature
    for p in cfg.p_list:
        mat = variation.assemble_index_matrix(metric, curve, p, geo_tol, tables=tables)
        cls = variation.classify_critical_point(mat, conj)
        entry = cls.to_dict()
        entry["v"] = mat.v
        entry["E_p"] = curve_mod.p_energy(metric, curve, p).value
        entry["conjugate_params"] = list(conj.conjugate_params)
        if K is not None and K > 0 and (p < 0 or 0 < p < 1) and conj.m >= 1:
            lower, upper = jacobi.ep_extremum_bounds(K, conj.m, p)
            entry["bounds"] = {
                "lower": lower,
                "upper": upper,
                "in_bounds": bool(lower <= entry["E_p"] <= upper),
                "K": K,
                "m": conj.m,
            }
        results.append(entry)
        if want_figures:
            fig_entries.append({
                "p": p,
                "eigenvalues": {
                    "tangential": np.linalg.eigvalsh(mat.block("tangential")),
                    "orthogonal": np.linalg.eigvalsh(mat.block("orthogonal")),
                },
            })
        _say(args, f"  p={p:g}: verdict={cls.verdict} "
                   f"(conjugate points: {conj.m})")
    payload = {"source": info, "conjugate_report": conj.to_dict(), "per_p": results}
    csv_rows, csv_fields = _flatten_for_csv(results)
    paths = _emit(args, cfg, "classify", payload,
                  {"total_s": time.perf_counter() - t0},
                  csv_rows=csv_rows, csv_fields=csv_fields)
    if want_figures:
        from . import figures
        jac_sol = jacobi.orthogonal_jacobi_matrix(metric, curve, geo_tol,
                                                  tables=tables)
        figures.classification_figure(
            fig_entries, jac_sol.params, jac_sol.determinant_series,
            conj.conjugate_params, paths["figure"])
        _say(args, f"figure written to {paths['figure']}")
    return 0


def cmd_survey(cfg: ExperimentConfig, args) -> int:
    metric = build_metric(cfg.metric_name, cfg.metric_params())
    if metric.name != "sphere":
        raise ConfigError("the wraparound survey needs metric.name = sphere")
    t0 = time.perf_counter()
    x0 = np.asarray(cfg.get_floats("curve.x0"))
    x1 = np.asarray(cfg.get_floats("curve.x1"))
    wraps = cfg.get_int("survey.wraps", 4)
    rows = jacobi.sphere_wraparound_survey(
        metric, x0, x1, wraps, cfg.p_list, n_intervals=cfg.grid_n)
    fields = ["wraps", "length", "speed", "m", "endpoint_conjugate"]
    fields += [f"E_p={p:g}" for p in cfg.p_list]
    paths = _emit(args, cfg, "survey", rows,
                  {"total_s": time.perf_counter() - t0},
                  csv_rows=rows, csv_fields=fields)
    write_csv_rows(paths["table_csv"], _jsonable(rows), fields)
    _say(args, f"table written to {paths['table_csv']}")
    if cfg.get_bool("output.figures", False) or args.figures:
        from . import figures
        figures.survey_figure(rows, cfg.p_list, paths["figure"])
        _say(args, f"figure written to {paths['figure']}")
    for row in rows:
        _say(args, "  wraps=%d L=%.6g m=%d" % (row["wraps"], row["length"], row["m"]))
    return 0


_COMMANDS = {
    "validate": cmd_validate,
    "geodesic": cmd_geodesic,
    "classify": cmd_classify,
    "survey": cmd_survey,
}


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        overrides = {
            "output.path": args.out,
            "output.format": args.format,
            "seed": args.seed,
        }
        if args.figures:
            overrides["output.figures"] = "true"
        cfg = load_config(args.config, overrides)
    except (ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    try:
        return _COMMANDS[args.command](cfg, args)
    except (NoConvergence, NotAGeodesic) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 3
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (FinslerError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
