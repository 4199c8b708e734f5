"""
pdm-superint command line.

Subcommands:
    list      catalog entries
    verify    [H, Q] = 0 and the determining equations for table integrals
    reduce    radial reduction, Liouville map and class fit
    spectrum  closed-form levels
    solve     finite-difference levels against the closed forms
    export    catalog documents and closed-form state tables

Exit status: 0 when everything passes, 1 on a failed check, 2 on usage or
configuration errors.
"""

import argparse
import csv
import io
import json
import logging
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from catalog import (
    CatalogError,
    Route,
    build_system,
    describe,
    entries,
    export_catalog,
    family_ids,
    get_entry,
)
from config import RunConfig
from numsolve import Grid, SolverError, dump_wavefunctions, numeric_spectrum
from reduction import ReductionError, check_map, classify_effective, reduce_family
from susy import SusyError, eigenfunction, normalize, spectrum
from symexpr import ALPHA_NAME, KAPPA_NAME, to_infix
from symmetry import (
    SymmetryError,
    admissible_selectors,
    apparent_integrals,
    clear_caches,
    commutes_with,
    hamiltonian_op,
    integral_residuals,
    verify_integral,
)

logger = logging.getLogger("pdm_superint")

Row = Dict[str, Any]

# (α, κ) pairs for κ-families when none are given
KAPPA_SETS = [(Fraction(8), Fraction(0)), (Fraction(5), Fraction(1)), (Fraction(1), Fraction(0)), (Fraction(3), Fraction(1))]
DEFAULT_ALPHA = Fraction(3)


class UsageError(Exception):
    """Bad command-line input; exit status 2."""


# ---------------------------------------------------------------- parsing helpers

def parse_range(text: str) -> List[int]:
    """``"2"`` -> [2], ``"0..3"`` -> [0, 1, 2, 3]."""
    try:
        if ".." in text:
            lo, hi = text.split("..", 1)
            values = list(range(int(lo), int(hi) + 1))
        else:
            values = [int(text)]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer or range: {text!r}") from None
    if not values or min(values) < 0:
        raise argparse.ArgumentTypeError(f"range must be non-empty and non-negative: {text!r}")
    return values


def parse_number(text: str) -> Fraction:
    """Exact parameter value: ``-2``, ``7/3`` or ``0.25``."""
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None


def format_value(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "yes" if value else "no"
    if isinstance(value, float):
        return f"{value:.12g}"
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, (tuple, list)):
        return "(" + ", ".join(format_value(v) for v in value) + ")"
    return str(value)


def _jsonable(value: Any) -> Any:
    if isinstance(value, float):
        return float(f"{value:.12g}") if math.isfinite(value) else str(value)
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, (tuple, list)):
        return [_jsonable(v) for v in value]
    return value


def render(rows: List[Row], columns: Sequence[str], fmt: str) -> str:
    """Rows as a json array, csv or an aligned text table."""
    if fmt == "json":
        return json.dumps([{c: _jsonable(r.get(c)) for c in columns} for r in rows], indent=2, ensure_ascii=False) + "\n"
    cells = [[format_value(r.get(c)) for c in columns] for r in rows]
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(columns)
        writer.writerows(cells)
        return buf.getvalue()
    widths = [max([len(c)] + [len(row[i]) for row in cells]) for i, c in enumerate(columns)]
    lines = ["  ".join(c.ljust(w) for c, w in zip(columns, widths)).rstrip()]
    lines.append("  ".join("-" * w for w in widths))
    lines += ["  ".join(v.ljust(w) for v, w in zip(row, widths)).rstrip() for row in cells]
    return "\n".join(lines) + "\n"


def emit(rows: List[Row], columns: Sequence[str], config: RunConfig) -> None:
    text = render(rows, columns, config.output_format)
    if config.output_path:
        Path(config.output_path).write_text(text)
        logger.info("wrote %d rows to %s", len(rows), config.output_path)
    else:
        sys.stdout.write(text)


def fan_out(task: Callable[[Any], Any], items: Iterable[Any], config: RunConfig) -> List[Any]:
    """Run tasks on the worker pool; results come back in submission order."""
    items = list(items)
    if config.workers == 1 or len(items) <= 1:
        return [task(item) for item in items]
    with ThreadPoolExecutor(max_workers=config.workers) as pool:
        return list(pool.map(task, items))


# ---------------------------------------------------------------- parameters

def explicit_params(entry, args) -> Dict[str, Fraction]:
    """α and κ from the flags; raises UsageError if the family needs more."""
    params: Dict[str, Fraction] = {}
    if entry.uses_alpha:
        if args.alpha is None:
            raise UsageError(f"{entry.id} needs --alpha")
        params[ALPHA_NAME] = args.alpha
    if entry.uses_kappa:
        if args.kappa is None:
            raise UsageError(f"{entry.id} needs --kappa")
        params[KAPPA_NAME] = args.kappa
    return params


def verification_params(entry, args) -> List[Dict[str, Fraction]]:
    """The flags when given, else the default α (and the κ test pairs)."""
    if not entry.uses_alpha:
        return [{}]
    if entry.uses_kappa:
        if args.alpha is not None and args.kappa is not None:
            return [{ALPHA_NAME: args.alpha, KAPPA_NAME: args.kappa}]
        return [{ALPHA_NAME: a, KAPPA_NAME: k} for a, k in KAPPA_SETS]
    return [{ALPHA_NAME: args.alpha if args.alpha is not None else DEFAULT_ALPHA}]


def _params_text(params: Dict[str, Fraction]) -> str:
    return " ".join(f"{k}={v}" for k, v in params.items())


# ---------------------------------------------------------------- commands

LIST_COLUMNS = ["family", "f", "V", "route", "effective", "integral"]


def cmd_list(args, config: RunConfig) -> int:
    emit([describe(e) for e in entries()], LIST_COLUMNS, config)
    return 0


VERIFY_COLUMNS = ["family", "params", "integral", "commutator", "determining", "variant", "passed"]


def _verify_one(job: Tuple[Any, Dict[str, Fraction], Any], config: RunConfig) -> Row:
    entry, params, selector = job
    first_order = entry.integral_kind == "first_order"
    label = selector[0] if first_order else "Q" + "".join(str(s) for s in selector)
    row: Row = {"family": str(entry.id), "params": _params_text(params), "integral": label}
    try:
        system = build_system(entry.id, params)
        if first_order:
            _, Q = selector
            report = commutes_with(
                hamiltonian_op(system), Q, system.bindings(), config.points, config.operator_tol,
                config.seed, system.singular_radii,
            )
            row.update(commutator=report.worst, variant="printed", passed=report.passed)
            return row
        report = verify_integral(system, selector, config.points, config.operator_tol, config.seed)
        layers = integral_residuals(system, selector, config.points, config.residual_tol, config.seed)
        variant = next((n.split(": ", 1)[1] for n in report.notes if n.startswith("variant")), "")
        row.update(
            commutator=report.worst,
            determining=layers.worst,
            variant=variant,
            passed=report.passed and layers.passed,
        )
    except (SymmetryError, CatalogError) as err:
        logger.error("%s %s: %s", entry.id, _params_text(params), err)
        row.update(variant=f"error: {err}", passed=False)
    return row


def cmd_verify(args, config: RunConfig) -> int:
    ids = family_ids() if args.all else args.family
    if not ids:
        raise UsageError("verify needs --all or at least one --family")
    jobs = []
    for fid in ids:
        entry = get_entry(fid)
        for params in verification_params(entry, args):
            if entry.integral_kind == "first_order":
                system = build_system(entry.id, params)
                jobs += [(entry, params, pair) for pair in apparent_integrals(system)]
            else:
                jobs += [(entry, params, sel) for sel in admissible_selectors(entry)]
    rows = fan_out(lambda job: _verify_one(job, config), jobs, config)
    emit(rows, VERIFY_COLUMNS, config)
    failed = [r for r in rows if not r["passed"]]
    logger.info("%d of %d integrals pass", len(rows) - len(failed), len(rows))
    return 1 if failed else 0


REDUCE_COLUMNS = ["family", "l", "route", "y", "domain_x", "domain_y", "class", "period", "weights", "slopes", "map_ok"]


def cmd_reduce(args, config: RunConfig) -> int:
    entry = get_entry(args.family)
    params = explicit_params(entry, args)
    routes = list(entry.route.classes) if args.route == "all" else [Route(args.route)]
    if not routes:
        raise UsageError(f"{entry.id} has no reduction route ({entry.route.note})")
    system = build_system(entry.id, params)

    def one(job) -> Row:
        l, route = job
        e = reduce_family(system, l, route)
        fit = classify_effective(e)
        return {
            "family": str(entry.id), "l": l, "route": route.value,
            "y": to_infix(e.y_of_x) if e.y_of_x is not None else "quadrature",
            "domain_x": e.domain_x, "domain_y": e.domain_y, "class": fit.tag.value,
            "period": fit.period, "weights": fit.weights, "slopes": fit.slopes, "map_ok": check_map(e),
        }

    rows = fan_out(one, [(l, r) for l in args.l for r in routes], config)
    emit(rows, REDUCE_COLUMNS, config)
    return 0 if all(r["map_ok"] for r in rows) else 1


SPECTRUM_COLUMNS = ["family", "l", "n", "E", "route", "class", "formula", "E_formula", "virtual", "note"]


def cmd_spectrum(args, config: RunConfig) -> int:
    entry = get_entry(args.family)
    params = explicit_params(entry, args)

    def one(job) -> Row:
        l, n = job
        row: Row = {"family": str(entry.id), "l": l, "n": n}
        try:
            s = spectrum(entry.id, params, l, n)
        except SusyError as err:
            row["note"] = str(err)
            return row
        row.update(E=s.energy, route=s.route.value, **{"class": s.tag.value}, formula=s.formula,
                   E_formula=s.formula_energy, virtual=s.virtual)
        return row

    rows = fan_out(one, [(l, n) for l in args.l for n in args.n], config)
    emit(rows, SPECTRUM_COLUMNS, config)
    return 1 if any(r.get("E") is None for r in rows) else 0


SOLVE_COLUMNS = ["n", "E_numeric", "E_closed", "diff", "error_estimate"]


def _closed_energies(entry, params, l: int, k: int) -> List[Optional[float]]:
    found: List[Optional[float]] = []
    for n in range(k):
        try:
            found.append(spectrum(entry.id, params, l, n).energy)
        except SusyError:
            found.append(None)
    return found


def _agrees(row: Row, tol: float) -> bool:
    if row["E_closed"] is None:
        return True
    return abs(row["diff"]) <= max(tol * abs(row["E_closed"]), row["error_estimate"] or 0.0)


def cmd_solve(args, config: RunConfig) -> int:
    """CSV columns: n, E_numeric (extrapolated), E_closed, diff, error_estimate."""
    entry = get_entry(args.family)
    params = explicit_params(entry, args)

    def one(l: int):
        closed = _closed_energies(entry, params, l, args.states)
        guesses = closed if all(c is not None for c in closed) else None
        result = numeric_spectrum(entry.id, params, l, args.states, config, guesses)
        rows = []
        for level, e_closed in zip(result.levels, closed):
            e_num = level.extrapolated if level.extrapolated is not None else level.energy
            rows.append({
                "n": level.n, "E_numeric": e_num, "E_closed": e_closed,
                "diff": None if e_closed is None else e_num - e_closed, "error_estimate": level.error,
            })
        return l, rows, result

    results = fan_out(one, args.l, config)
    rows = [row for _, part, _ in results for row in part]
    emit(rows, SOLVE_COLUMNS, config)
    if args.dump_wavefunctions:
        target = Path(args.dump_wavefunctions)
        for l, _, result in results:
            path = target if len(results) == 1 else target.with_name(f"{target.stem}_l{l}{target.suffix}")
            dump_wavefunctions(result.x, result.phi, path)
    bad = [r for r in rows if not _agrees(r, config.spectrum_tol)]
    for r in bad:
        logger.error("level %d: numeric %.12g vs closed form %.12g", r["n"], r["E_numeric"], r["E_closed"])
    return 1 if bad else 0


def _export_grid(state, config: RunConfig, x_max: Optional[float]) -> Grid:
    lo, hi = state.domain
    if math.isinf(hi):
        hi = lo + (x_max or 10 * config.x_scale)
    return Grid(x_min=lo, x_max=hi, n=config.grid_n, grading=config.grading)


def cmd_export(args, config: RunConfig) -> int:
    """Catalog JSON documents, plus normalized closed-form states when a family is given."""
    out = Path(args.directory)
    written = export_catalog(out)
    if args.family:
        entry = get_entry(args.family)
        params = explicit_params(entry, args)
        for l in args.l:
            states = [eigenfunction(entry.id, params, l, n) for n in args.n]
            grid = _export_grid(states[0], config, args.x_max)
            columns = [normalize(s, grid) for s in states]
            path = out / f"{entry.id}_l{l}_states.csv"
            written.append(dump_wavefunctions(grid.nodes(), np.column_stack(columns), path))
    emit([{"path": str(p)} for p in written], ["path"], config)
    return 0


# ---------------------------------------------------------------- parser

def _common() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key=value settings file")
    common.add_argument("--format", dest="output_format", choices=["json", "csv", "table"])
    common.add_argument("--output", dest="output_path", help="write the report here instead of stdout")
    common.add_argument("--seed", type=int)
    common.add_argument("--workers", type=int)
    common.add_argument("--points", type=int, help="random sample points per check")
    common.add_argument("--verbose", "-v", action="store_true")
    return common


def _family_flags(parser: argparse.ArgumentParser, required: bool = True) -> None:
    parser.add_argument("--family", required=required, help="catalog id, e.g. T2.1")
    parser.add_argument("--alpha", type=parse_number)
    parser.add_argument("--kappa", type=parse_number)


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(
        prog="pdm-superint",
        description="Superintegrable position-dependent-mass systems: checks, spectra and solvers",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("list", parents=[common], help="catalog entries")

    verify = sub.add_parser("verify", parents=[common], help="integrals of motion")
    verify.add_argument("--family", action="append", default=[], help="repeatable")
    verify.add_argument("--all", action="store_true", help="every catalog family")
    verify.add_argument("--alpha", type=parse_number)
    verify.add_argument("--kappa", type=parse_number)

    reduce = sub.add_parser("reduce", parents=[common], help="radial reduction and class fit")
    _family_flags(reduce)
    reduce.add_argument("--l", type=parse_range, default=[0])
    reduce.add_argument("--route", choices=["direct", "two_step", "all"], default="all")

    levels = sub.add_parser("spectrum", parents=[common], help="closed-form levels")
    _family_flags(levels)
    levels.add_argument("--l", type=parse_range, default=[0])
    levels.add_argument("--n", type=parse_range, default=[0])

    solve = sub.add_parser("solve", parents=[common], help="finite-difference levels")
    _family_flags(solve)
    solve.add_argument("--l", type=parse_range, default=[0])
    solve.add_argument("--states", type=int, default=1)
    solve.add_argument("--grid", dest="grid_n", type=int, help="number of grid nodes")
    solve.add_argument("--coordinate", choices=["auto", "x", "arctan", "y"])
    solve.add_argument("--dump-wavefunctions", metavar="PATH")

    export = sub.add_parser("export", parents=[common], help="catalog documents and state tables")
    _family_flags(export, required=False)
    export.add_argument("--directory", default="export")
    export.add_argument("--l", type=parse_range, default=[0])
    export.add_argument("--n", type=parse_range, default=[0])
    export.add_argument("--grid", dest="grid_n", type=int)
    export.add_argument("--x-max", type=float, help="truncation of an infinite domain")
    return parser


COMMANDS = {
    "list": cmd_list,
    "verify": cmd_verify,
    "reduce": cmd_reduce,
    "spectrum": cmd_spectrum,
    "solve": cmd_solve,
    "export": cmd_export,
}

CONFIG_FLAGS = ("seed", "workers", "points", "output_format", "output_path", "grid_n", "coordinate")


def configure_logging(verbose: bool) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
        force=True,
    )


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Entry point of the ``pdm-superint`` command."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exit_:
        return int(exit_.code or 0)
    configure_logging(args.verbose)
    try:
        overrides = {name: getattr(args, name, None) for name in CONFIG_FLAGS}
        config = RunConfig.from_sources(args.config, overrides)
        if getattr(args, "states", 1) < 1:
            raise UsageError("--states must be >= 1")
        return COMMANDS[args.command](args, config)
    except (UsageError, CatalogError, ValueError) as e:
        print(f"pdm-superint: error: {e}", file=sys.stderr)
        return 2
    except (ReductionError, SusyError, SolverError, SymmetryError) as e:
        print(f"pdm-superint: failed: {e}", file=sys.stderr)
        return 1
    finally:
        clear_caches()


if __name__ == "__main__":
    exit(main())
