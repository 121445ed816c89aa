#!/usr/bin/env python3
"""
Gadget scattering toolkit - command-line frontend

Subcommands: analyze, smatrix, bound-states, winding, levinson,
completeness, evolve, fuzz. Reports are JSON on stdout (or --report),
status lines go to stderr. Exit codes: 0 pass, 1 verification failure or
numerical error, 2 input error.
"""

import argparse
import csv
import json
import logging
import math
import sys
from dataclasses import dataclass, field, fields
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from utils import __version__
from utils.errors import InputError, MatchingAmbiguous, NumericalError, ScatteringError, UsageError
from utils.graph_model import ScatteringGraph, ToleranceConfig, graph_to_dict, load_graph
from utils.settings import load_settings

logger = logging.getLogger("scattering")

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_INPUT = 2


class _Parser(argparse.ArgumentParser):
    """argparse that raises UsageError instead of exiting"""

    def error(self, message):
        raise UsageError(message, {"usage": self.format_usage().strip()})


def status(ok: Optional[bool], text: str) -> None:
    marker = "✅" if ok else ("⚠️ " if ok is None else "❌")
    print(f"{marker} {text}", file=sys.stderr)


# ------------------------------------------------------------ serialization

def jsonable(value: Any) -> Any:
    """Numbers, arrays and complex values as plain JSON types"""
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return jsonable(value.tolist())
    if isinstance(value, (complex, np.complexfloating)):
        return [float(value.real), float(value.imag)]
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.bool_):
        return bool(value)
    if hasattr(value, "value") and isinstance(getattr(value, "value"), str):
        return value.value
    return value


def census_dict(census, tol: ToleranceConfig) -> Dict[str, Any]:
    from utils.spectra import inside_roots_real

    return {
        "degree": census.degree,
        "roots": [{"value": r.value, "multiplicity": r.multiplicity, "class": r.cls} for r in census.roots],
        "alpha1": census.alpha1,
        "alpha2": census.alpha2,
        "alpha3": census.alpha3,
        "pairing_ok": census.pairing_ok,
        "max_inside_imag": inside_roots_real(census, tol),
    }


def catalog_dict(catalog) -> Dict[str, Any]:
    return {
        "confined": [{"lambda": c.lambda_c, "beta": c.beta, "class": c.cls} for c in catalog.confined],
        "unconfined": [
            {"x0": b.x0, "energy": b.energy, "alpha": b.alpha, "beta": b.beta, "norm_const": b.norm_const}
            for b in catalog.unconfined
        ],
        "half_bound": [{"x0": h.x0, "alpha": h.alpha, "beta": h.beta} for h in catalog.half_bound],
        "n_c": catalog.n_c,
        "n_b": catalog.n_b,
        "n_h": catalog.n_h,
        "dim_c_greater": catalog.dim_c_greater,
        "dim_c_less": catalog.dim_c_less,
        "dim_c_equal": catalog.dim_c_equal,
        "bound_state_count": catalog.bound_state_count,
    }


def branch_summary(table) -> Dict[str, Any]:
    """Sign changes of each tracked eigenvalue of γ(x) across the grid"""
    signs = np.sign(table.values)
    changes = np.sum(signs[1:] * signs[:-1] < 0, axis=0)
    return {
        "grid": [float(table.grid[0]), float(table.grid[-1]), len(table.grid)],
        "branch_count": table.branch_count,
        "min_overlap": table.min_overlap,
        "sign_changes": changes,
        "confined_energies": [c.lambda_c for c in table.confined],
    }


@dataclass
class AnalysisReport:
    graph: Dict[str, Any]
    tolerances: Dict[str, float]
    w: Dict[str, Any]
    census: Dict[str, Any]
    bound_states: Dict[str, Any]
    lemma3: Dict[str, Any]
    levinson: Dict[str, Any]
    derivative_checks: List[Dict[str, Any]] = field(default_factory=list)
    branches: Dict[str, Any] = field(default_factory=dict)
    completeness: Optional[Dict[str, Any]] = None
    version: str = __version__
    passed: bool = False

    def to_dict(self) -> Dict[str, Any]:
        data = {f.name: getattr(self, f.name) for f in fields(self)}
        data["pass"] = data.pop("passed")
        return jsonable(data)


def write_report(report: Dict[str, Any], path: Optional[str]) -> None:
    text = json.dumps(jsonable(report), indent=2, sort_keys=True)
    if path:
        with open(path, "w", encoding="utf-8") as f:
            f.write(text + "\n")
        status(True, f"Report written to {path}")
    else:
        print(text)


def write_csv(path: str, header: Sequence[str], rows: Sequence[Sequence[Any]]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(header)
        writer.writerows(rows)
    status(True, f"CSV written to {path}")


# ------------------------------------------------------------- commands

def _pick(value, default):
    return default if value is None else value


def _load(args, settings) -> ScatteringGraph:
    base = ToleranceConfig.from_mapping(settings["tolerances"])
    graph = load_graph(args.graph, base)
    overrides = {f.name: getattr(args, f"tol_{f.name}") for f in fields(ToleranceConfig)
                 if getattr(args, f"tol_{f.name}", None) is not None}
    if overrides:
        graph = graph.with_tolerances(ToleranceConfig.from_mapping(overrides, graph.tolerances))
    return graph


def cmd_analyze(args, settings) -> int:
    from utils.completeness import completeness_defect
    from utils.levinson import levinson_check
    from utils.spectra import (bound_state_catalog, derivative_check, eigenbranches, find_crossings,
                               lemma3_check, root_census, w_polynomial)

    graph = _load(args, settings)
    spectral = settings["spectra"]
    lev = settings["levinson"]

    w = w_polynomial(graph, spectral["trim_threshold"])
    census = root_census(w, graph.tolerances)
    catalog = bound_state_catalog(graph, census)
    lemma3 = lemma3_check(graph, census, catalog)
    levinson = levinson_check(graph, lev["initial_grid"], lev["max_refine"], lev["rounding_residual"],
                              census, catalog)
    checks = [derivative_check(graph, c.x0, c.order) for c in find_crossings(graph, census)]
    try:
        table = eigenbranches(graph, spectral["branch_grid_size"], spectral["branch_delta"])
        branches = branch_summary(table)
    except MatchingAmbiguous as e:
        logger.warning("Eigenbranch tracking skipped: %s", e.message)
        branches = {"error": e.to_dict()}

    completeness = None
    if args.completeness:
        comp = settings["completeness"]
        completeness = completeness_defect(
            graph, _pick(args.x_cut, comp["x_cut"]), None, comp["quad_limit"],
            comp["acceptance"], comp["half_bound_acceptance"], catalog,
        )

    passed = lemma3.passed and levinson.passed and all(c.passed for c in checks)
    passed = passed and (completeness is None or completeness.passed)

    report = AnalysisReport(
        graph=graph.summary(),
        tolerances=graph.tolerances.to_dict(),
        w={"coeffs": w.coeffs, "degree": w.degree, "trim_threshold": w.trim_threshold, "trimmed": w.trimmed},
        census=census_dict(census, graph.tolerances),
        bound_states=catalog_dict(catalog),
        lemma3=vars(lemma3),
        levinson=levinson.to_dict(),
        derivative_checks=[vars(c) for c in checks],
        branches=branches,
        completeness=completeness.to_dict() if completeness else None,
        passed=passed,
    )
    write_report(report.to_dict(), args.report)
    status(lemma3.passed, f"Root and state count identities (α = {census.alpha1}, {census.alpha2}, {census.alpha3})")
    status(levinson.passed, f"Levinson: winding {levinson.winding_phase}, rhs {levinson.rhs}")
    if completeness is not None:
        status(completeness.passed, f"Completeness defect {completeness.max_deviation:.2e}")
    return EXIT_PASS if passed else EXIT_FAIL


def cmd_smatrix(args, settings) -> int:
    from utils.smatrix import circle_table, s_matrix

    graph = _load(args, settings)
    if args.k is not None:
        z = complex(math.cos(args.k), math.sin(args.k))
    else:
        z = complex(args.z[0], args.z[1])
    sample = s_matrix(graph, z)

    report = {
        "graph": graph.summary(),
        "z": sample.z,
        "k": sample.k,
        "s": sample.s,
        "psi": sample.psi,
        "det_s": sample.det_s,
        "method": sample.method,
        "qform_deviation": sample.crosscheck,
        "block_check": sample.block_check,
        "unitarity_defect": sample.unitarity_defect() if sample.on_circle else None,
    }
    if args.csv:
        table = circle_table(graph, args.points)
        n = graph.n
        header = ["k"] + [f"{part}_S{i}{j}" for i in range(n) for j in range(n) for part in ("re", "im")]
        header.append("arg_det_s")
        rows = []
        for s in table:
            row = [s.k]
            for i in range(n):
                for j in range(n):
                    row += [float(s.s[i, j].real), float(s.s[i, j].imag)]
            row.append(float(np.angle(s.det_s)))
            rows.append(row)
        write_csv(args.csv, header, rows)

    ok = not sample.on_circle or sample.unitarity_defect() <= graph.tolerances.eps_unitary
    write_report(report, args.report)
    status(ok, f"S({sample.z:.6g}) evaluated")
    return EXIT_PASS if ok else EXIT_FAIL


def cmd_bound_states(args, settings) -> int:
    from utils.spectra import bound_state_catalog, root_census, w_polynomial

    graph = _load(args, settings)
    census = root_census(w_polynomial(graph, settings["spectra"]["trim_threshold"]), graph.tolerances)
    catalog = bound_state_catalog(graph, census)
    write_report({"graph": graph.summary(), "census": census_dict(census, graph.tolerances),
                  "bound_states": catalog_dict(catalog)}, args.report)
    status(True, f"n_c={catalog.n_c} n_b={catalog.n_b} n_h={catalog.n_h}")
    return EXIT_PASS


def cmd_winding(args, settings) -> int:
    from utils.levinson import phase_trace, winding_closed_form

    graph = _load(args, settings)
    lev = settings["levinson"]
    trace = phase_trace(graph, _pick(args.initial_grid, lev["initial_grid"]),
                        _pick(args.max_refine, lev["max_refine"]), lev["rounding_residual"])
    closed = winding_closed_form(graph)
    if args.csv:
        write_csv(args.csv, ["k", "unwrapped_phase"], trace.points)

    ok = trace.winding == closed
    write_report({
        "graph": graph.summary(),
        "winding_phase": trace.winding,
        "winding_closed_form": closed,
        "samples_used": trace.samples_used,
        "refinement_depth": trace.refinement_depth,
        "residual": trace.residual,
        "closed_form_deviation": trace.closed_form_deviation,
        "pass": ok,
    }, args.report)
    status(ok, f"Winding {trace.winding} (closed form {closed})")
    return EXIT_PASS if ok else EXIT_FAIL


def cmd_levinson(args, settings) -> int:
    from utils.levinson import levinson_check

    graph = _load(args, settings)
    lev = settings["levinson"]
    report = levinson_check(graph, lev["initial_grid"], lev["max_refine"], lev["rounding_residual"])
    write_report({"graph": graph.summary(), "levinson": report.to_dict()}, args.report)
    status(report.passed, f"Levinson: phase {report.winding_phase}, closed form "
                          f"{report.winding_closed_form}, rhs {report.rhs}")
    return EXIT_PASS if report.passed else EXIT_FAIL


def cmd_completeness(args, settings) -> int:
    from utils.completeness import completeness_defect

    graph = _load(args, settings)
    comp = settings["completeness"]
    report = completeness_defect(
        graph, _pick(args.x_cut, comp["x_cut"]), args.quad_target, comp["quad_limit"],
        comp["acceptance"], comp["half_bound_acceptance"],
    )
    write_report({"graph": graph.summary(), "completeness": report.to_dict()}, args.report)
    status(report.passed, f"Completeness defect {report.max_deviation:.2e} (acceptance {report.acceptance:g})")
    return EXIT_PASS if report.passed else EXIT_FAIL


def cmd_evolve(args, settings) -> int:
    from utils.dynamics import scatter_packet, snapshot_rows

    graph = _load(args, settings)
    dyn = settings["dynamics"]
    snapshots = [float(t) for t in args.snapshots.split(",")] if args.snapshots else []
    run = scatter_packet(
        graph, args.k0,
        sigma_x=_pick(args.sigma, dyn["sigma_x"]),
        j_in=args.path,
        L=_pick(args.L, dyn["length"]),
        x0=args.x0,
        t=args.t,
        buffer=dyn["buffer"],
        measure_fraction=dyn["measure_fraction"],
        leakage_threshold=dyn["leakage_threshold"],
        snapshot_times=snapshots,
    )
    if args.csv:
        write_csv(args.csv, ["t", "path", "x", "density"], snapshot_rows(graph, run))
    ok = run.max_deviation <= args.tolerance
    write_report({"graph": graph.summary(), "run": run.to_dict(), "pass": ok}, args.report)
    status(ok, f"Packet vs |S|²: max deviation {run.max_deviation:.3e}")
    return EXIT_PASS if ok else EXIT_FAIL


def fuzz_one(seed: int, index: int, options: Dict[str, Any], tolerances: ToleranceConfig) -> Dict[str, Any]:
    """One random gadget through the full battery of identity checks"""
    from utils.gallery import random_gadget
    from utils.levinson import levinson_check
    from utils.smatrix import circle_table
    from utils.spectra import (bound_state_catalog, circle_null_vectors_confined, inside_roots_real,
                               lemma3_check, root_census, w_polynomial)

    rng = np.random.default_rng([seed, index])
    n = int(rng.integers(1, options["max_n"] + 1))
    m = int(rng.integers(0, options["max_m"] + 1))
    graph = random_gadget(rng, n, m, options["weight"], options["complex_weights"], tolerances,
                          name=f"fuzz_{seed}_{index}")
    result: Dict[str, Any] = {"index": index, "n": n, "m": m}
    try:
        census = root_census(w_polynomial(graph), tolerances)
        catalog = bound_state_catalog(graph, census)
        lemma3 = lemma3_check(graph, census, catalog)
        levinson = levinson_check(graph, census=census, catalog=catalog)
        unitarity = max(s.unitarity_defect() for s in circle_table(graph, 64))
        result.update(
            winding=levinson.winding_phase,
            rhs=levinson.rhs,
            n_h=levinson.n_h,
            lemma3=lemma3.passed,
            levinson=levinson.passed,
            inside_imag=inside_roots_real(census, tolerances),
            circle_leak=circle_null_vectors_confined(graph, census),
            unitarity=unitarity,
        )
        result["pass"] = (lemma3.passed and levinson.passed and result["inside_imag"] <= 1e-7
                          and result["circle_leak"] <= 1e-8 and unitarity <= tolerances.eps_unitary)
    except NumericalError as e:
        result.update(error=e.to_dict())
        result["pass"] = False
    if not result["pass"]:
        result["graph_json"] = graph_to_dict(graph, include_tolerances=True)
    return result


def cmd_fuzz(args, settings) -> int:
    from concurrent.futures import ThreadPoolExecutor, as_completed
    from tqdm import tqdm

    options = dict(settings["fuzz"])
    for key in ("count", "max_n", "max_m", "weight", "workers"):
        value = getattr(args, key)
        if value is not None:
            options[key] = value
    if args.real_weights:
        options["complex_weights"] = False
    if options["max_n"] < 1 or options["max_m"] < 0 or options["count"] < 1:
        raise UsageError("count and max-n must be positive, max-m non-negative", options)

    tolerances = ToleranceConfig.from_mapping(settings["tolerances"])
    results = []
    with ThreadPoolExecutor(max_workers=options["workers"]) as pool:
        futures = [pool.submit(fuzz_one, args.seed, i, options, tolerances) for i in range(options["count"])]
        with tqdm(total=len(futures), desc="Fuzz", unit=" graph", ncols=100,
                  disable=args.no_progress, file=sys.stderr) as progress:
            for future in as_completed(futures):
                results.append(future.result())
                progress.update(1)
    results.sort(key=lambda r: r["index"])

    failures = [r for r in results if not r["pass"]]
    if failures and args.dump:
        with open(args.dump, "w", encoding="utf-8") as f:
            json.dump(failures[0]["graph_json"], f, indent=2)
        status(False, f"First failing graph written to {args.dump}")

    write_report({
        "seed": args.seed,
        "options": options,
        "tolerances": tolerances.to_dict(),
        "count": len(results),
        "failures": len(failures),
        "first_failure": failures[0] if failures else None,
        "parity_ok": all(r["winding"] % 2 == 0 for r in results if r.get("n_h") == 0),
        "pass": not failures,
        "version": __version__,
    }, args.report)
    status(not failures, f"{len(results) - len(failures)}/{len(results)} random gadgets passed")
    return EXIT_PASS if not failures else EXIT_FAIL


# ------------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--report", help="Write the JSON report here instead of stdout")
    common.add_argument("--config", help="Settings file (default: config.json next to app.py)")
    common.add_argument("--verbose", "-v", action="store_true", help="Debug logging")
    for f in fields(ToleranceConfig):
        common.add_argument(f"--tol-{f.name.replace('_', '-')}", dest=f"tol_{f.name}", type=float,
                            help=f"Override tolerance {f.name}")

    graph_opts = _Parser(add_help=False, parents=[common])
    graph_opts.add_argument("graph", help="Gadget JSON file")

    parser = _Parser(prog="app.py", description="Scattering on graphs: S-matrix, bound states, Levinson check")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("analyze", parents=[graph_opts], help="Full analysis report")
    p.add_argument("--completeness", action="store_true", help="Include the completeness check")
    p.add_argument("--x-cut", type=int, dest="x_cut")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("smatrix", parents=[graph_opts], help="Evaluate S at one point")
    where = p.add_mutually_exclusive_group(required=True)
    where.add_argument("--k", type=float, help="Point e^{ik} on the unit circle")
    where.add_argument("--z", type=float, nargs=2, metavar=("RE", "IM"), help="Arbitrary point z")
    p.add_argument("--csv", help="Also write S on a k-grid over the circle")
    p.add_argument("--points", type=int, default=256)
    p.set_defaults(func=cmd_smatrix)

    p = sub.add_parser("bound-states", parents=[graph_opts], help="Bound-state catalog")
    p.set_defaults(func=cmd_bound_states)

    p = sub.add_parser("winding", parents=[graph_opts], help="Winding number of det S")
    p.add_argument("--initial-grid", type=int, dest="initial_grid")
    p.add_argument("--max-refine", type=int, dest="max_refine")
    p.add_argument("--csv", help="Write (k, unwrapped phase)")
    p.set_defaults(func=cmd_winding)

    p = sub.add_parser("levinson", parents=[graph_opts], help="Levinson identity check")
    p.set_defaults(func=cmd_levinson)

    p = sub.add_parser("completeness", parents=[graph_opts], help="Completeness defect on a window")
    p.add_argument("--x-cut", type=int, dest="x_cut")
    p.add_argument("--quad-target", type=float, dest="quad_target")
    p.set_defaults(func=cmd_completeness)

    p = sub.add_parser("evolve", parents=[graph_opts], help="Wave-packet scattering")
    p.add_argument("--k0", type=float, required=True)
    p.add_argument("--sigma", type=float, help="Packet width in lattice sites")
    p.add_argument("--L", type=int, dest="L", help="Sites kept per path")
    p.add_argument("--t", type=float, help="Measurement time (default: packet at 0.7 L)")
    p.add_argument("--path", type=int, default=0, help="Incoming path")
    p.add_argument("--x0", type=float, help="Initial packet centre (default: L/2)")
    p.add_argument("--tolerance", type=float, default=2e-2, help="Allowed |P - |S|²|")
    p.add_argument("--snapshots", help="Comma-separated times for the density CSV")
    p.add_argument("--csv", help="Write |ψ|² snapshots")
    p.set_defaults(func=cmd_evolve)

    p = sub.add_parser("fuzz", parents=[common], help="Random gadget suite")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--count", type=int)
    p.add_argument("--max-n", type=int, dest="max_n")
    p.add_argument("--max-m", type=int, dest="max_m")
    p.add_argument("--weight", type=float)
    p.add_argument("--real-weights", action="store_true", dest="real_weights")
    p.add_argument("--workers", type=int)
    p.add_argument("--dump", default="fuzz_failure.json", help="Where to write the first failing graph")
    p.add_argument("--no-progress", action="store_true", dest="no_progress")
    p.set_defaults(func=cmd_fuzz)
    return parser


def _report_path(argv: Optional[Sequence[str]]) -> Optional[str]:
    """--report, found even when the rest of the command line does not parse"""
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--report")
    known, _ = pre.parse_known_args(sys.argv[1:] if argv is None else list(argv))
    return known.report


def run_cli(argv: Optional[Sequence[str]] = None) -> int:
    """Parse argv, run one subcommand and return its exit code"""
    parser = build_parser()
    report_path = _report_path(argv)
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("A subcommand is required", {"usage": parser.format_usage().strip()})
        logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                            format="%(asctime)s %(name)s %(levelname)s: %(message)s")
        settings = load_settings(args.config)
        return args.func(args, settings)
    except InputError as e:
        status(False, f"{type(e).__name__}: {e.message}")
        write_report(e.to_dict(), report_path)
        return EXIT_INPUT
    except ScatteringError as e:
        status(False, f"{type(e).__name__}: {e.message}")
        write_report(e.to_dict(), report_path)
        return EXIT_FAIL


def main():
    """Main function to run the toolkit"""
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
