"""Command-line interface: ``state``, ``spectrum``, ``wavefunction`` and ``critical``.

Every command writes one JSON object (``meta`` plus ``rows``) or a CSV table
to standard output or ``--out``.  Complex numbers become ``_re``/``_im``
pairs and multiprecision reals are printed with enough digits to round-trip
at the working precision.  Numerical settings come from flags, then from a
``key = value`` config file, then from the library defaults.

Exit codes: 0 success, 2 usage error, 3 solver failure, 4 partial results.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from dataclasses import fields
from importlib.metadata import PackageNotFoundError, version

from mpmath import mp, mpf
from mpmath.libmp import repr_dps, to_str

from .critical import critical_intensities
from .errors import LJError
from .numerics import SolverConfig
from .spectrum import (
    count_nodes,
    find_bound_states,
    rescale_to_c0,
    spectrum_dataset,
    wavefunction_tagged,
)

EXIT_OK, EXIT_USAGE, EXIT_SOLVER, EXIT_PARTIAL = 0, 2, 3, 4

log = logging.getLogger("ljexact")


class UsageError(Exception):
    """Invalid flag values or config file contents."""


# --------------------------------------------------------------------------
# number formatting
# --------------------------------------------------------------------------


def format_real(x, prec: int | None = None) -> str:
    """Decimal string that round-trips ``x`` at ``prec`` bits (floats use ``repr``)."""
    if isinstance(x, float):
        return repr(x)
    if isinstance(x, int):
        return str(x)
    if not hasattr(x, "_mpf_"):
        x = mpf(x)
    prec = prec or mp.prec
    return to_str(x._mpf_, repr_dps(prec))


def _put(row: dict, key: str, value, prec: int):
    if hasattr(value, "imag") and not isinstance(value, (int, float)) and not hasattr(value, "_mpf_"):
        row[f"{key}_re"] = format_real(value.real, prec)
        row[f"{key}_im"] = format_real(value.imag, prec)
    else:
        row[key] = format_real(value, prec)


# --------------------------------------------------------------------------
# configuration
# --------------------------------------------------------------------------

_CONFIG_FIELDS = {f.name: f for f in fields(SolverConfig)}


def _flag_name(name: str) -> str:
    return "--" + ("precision" if name == "precision_bits" else name.replace("_", "-"))


def read_config_file(path: str) -> dict:
    """Parse ``key = value`` lines (``#`` comments, optional quotes) into config fields."""
    out = {}
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise UsageError(f"cannot read config file: {exc}") from exc
    for number, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{number}: expected key = value")
        key, value = (part.strip() for part in line.split("=", 1))
        key = key.replace("-", "_")
        if key == "precision":
            key = "precision_bits"
        if key not in _CONFIG_FIELDS:
            raise UsageError(f"{path}:{number}: unknown setting {key!r}")
        out[key] = _convert(key, value.strip("'\""))
    return out


def _convert(key, value):
    kind = int if _CONFIG_FIELDS[key].type in (int, "int") else float
    try:
        return kind(value)
    except ValueError as exc:
        raise UsageError(f"{key}: cannot parse {value!r}") from exc


def build_config(args) -> SolverConfig:
    """Flags override the config file, which overrides the defaults."""
    values = read_config_file(args.config) if args.config else {}
    for name in _CONFIG_FIELDS:
        flag = getattr(args, name, None)
        if flag is not None:
            values[name] = flag
    try:
        return SolverConfig(**values)
    except (LJError, TypeError) as exc:
        raise UsageError(str(exc)) from exc


def _add_config_flags(p):
    g = p.add_argument_group("solver settings")
    g.add_argument("--config", help="file with key = value solver settings")
    for name, f in _CONFIG_FIELDS.items():
        kind = int if f.type in (int, "int") else float
        g.add_argument(_flag_name(name), dest=name, type=kind, default=None,
                       help=f"default {f.default}")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--out", help="output file (default: standard output)")


# --------------------------------------------------------------------------
# output
# --------------------------------------------------------------------------


def _package_version():
    try:
        return version("artifact")
    except PackageNotFoundError:
        return "unknown"


def render(command: str, config: SolverConfig | None, rows: list, fmt: str, extra: dict | None = None) -> str:
    """Serialize ``rows`` (dicts of strings) as JSON or CSV; deterministic."""
    meta = {"command": command, "version": _package_version()}
    if config is not None:
        meta["config"] = {name: getattr(config, name) for name in _CONFIG_FIELDS}
    if extra:
        meta.update(extra)
    if fmt == "json":
        return json.dumps({"meta": meta, "rows": rows}, indent=2) + "\n"
    buf = io.StringIO()
    header = []
    for row in rows:
        header.extend(k for k in row if k not in header)
    writer = csv.DictWriter(buf, fieldnames=header, lineterminator="\n")
    if header:
        writer.writeheader()
        writer.writerows(rows)
    for key in ("partial", "failures"):
        if key in meta:
            buf.write(f"# {key}: {json.dumps(meta[key])}\n")
    return buf.getvalue()


def _emit(text: str, path: str | None):
    if path:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------


def state_row(state, prec: int | None = None) -> dict:
    """Flat record of a bound state: energy, index, connection data and diagnostics.

    Values are printed at ``prec`` bits (default: the state's precision);
    ``precision_bits`` records the precision the state was assembled at.
    """
    bits = state.spec.precision_bits
    prec = prec or bits
    row = {"lambda": format_real(state.spec.lam, prec), "l": state.spec.l, "index": state.index}
    _put(row, "eps", state.energy, prec)
    _put(row, "nu1", state.pair.w1.nu, prec)
    for j in (3, 4, 5, 6):
        _put(row, f"T1{j}", state.factors[(1, j)], prec)
    _put(row, "A1", state.a1, prec)
    for key, value in rescale_to_c0(state).items() if state.pair.w1.coeff(0) else ():
        _put(row, f"{key}_c0", value, prec)
    _put(row, "norm", state.norm, prec)
    _put(row, "quantization_residual", state.quantization_residual, prec)
    r4, r6 = state.decay_residuals()
    _put(row, "decay_residual_w4", r4, prec)
    _put(row, "decay_residual_w6", r6, prec)
    _put(row, "wronskian_spread", max(state.factors.spread.values()), prec)
    _put(row, "region_inner", state.regions.inner, prec)
    _put(row, "region_outer", state.regions.outer, prec)
    row["precision_bits"] = bits
    return row


def _check_bracket(lo, hi):
    if not lo < hi < 0:
        raise UsageError("need eps-lo < eps-hi < 0")


def cmd_state(args) -> int:
    config = build_config(args)
    _check_bracket(args.eps_lo, args.eps_hi)
    failures = []
    states = find_bound_states(args.lam, args.l, args.eps_lo, args.eps_hi, args.grid, config, failures)
    rows = [state_row(s, config.precision_bits) for s in states]
    extra = {}
    if failures:
        extra = {"partial": True, "failures": [[format_real(e), str(x)] for e, x in failures]}
    _emit(render("state", config, rows, args.format, extra), args.out)
    if failures:
        return EXIT_PARTIAL if rows else EXIT_SOLVER
    return EXIT_OK


def _parse_l_set(text):
    try:
        values = sorted({int(x) for x in text.split(",") if x.strip()})
    except ValueError as exc:
        raise UsageError(f"bad l-set {text!r}") from exc
    if not values or values[0] < 0:
        raise UsageError("l-set must list non-negative integers")
    return values


def wide_table(data) -> str:
    """One row per lambda and one column per ``(l, index)`` curve, for plotting."""
    curves = sorted({(r.l, r.index) for r in data.rows})
    lams = sorted({r.lam for r in data.rows})
    lookup = {(r.lam, r.l, r.index): r.eps for r in data.rows}
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["lambda"] + [f"l{l}_n{n}" for l, n in curves])
    for lam in lams:
        cells = [lookup.get((lam, l, n)) for l, n in curves]
        writer.writerow([repr(lam)] + ["" if c is None else mp.nstr(c, 12) for c in cells])
    return buf.getvalue()


def cmd_spectrum(args) -> int:
    config = build_config(args)
    l_set = _parse_l_set(args.l_set)
    lo, hi = args.lambda_lo, args.lambda_hi
    if not 0 < lo < hi:
        raise UsageError("need 0 < lambda-lo < lambda-hi")
    if args.lambda_steps < 2:
        raise UsageError("lambda-steps must be at least 2")
    data = spectrum_dataset(lo, hi, args.lambda_steps, l_set, config, eps_top=args.eps_top)
    prec = config.precision_bits
    rows = [{"lambda": repr(r.lam), "l": r.l, "index": r.index, "eps": format_real(r.eps, prec)}
            for r in data.rows]
    extra = {}
    if data.failures:
        extra = {"partial": True, "failures": [[repr(lam), l, msg] for lam, l, msg in data.failures]}
    _emit(render("spectrum", config, rows, args.format, extra), args.out)
    if args.wide_out:
        _emit(wide_table(data), args.wide_out)
    return EXIT_PARTIAL if data.failures else EXIT_OK


def _z_grid(lo, hi, points, spacing):
    if not 0 < lo < hi or points < 2:
        raise UsageError("need 0 < z-min < z-max and at least 2 points")
    if spacing == "log":
        ratio = (hi / lo) ** (1 / (points - 1))
        return [lo * ratio ** k for k in range(points)]
    return [lo + (hi - lo) * k / (points - 1) for k in range(points)]


def cmd_wavefunction(args) -> int:
    config = build_config(args)
    eps_lo = args.eps_lo if args.eps_lo is not None else -0.999 * args.lam
    _check_bracket(eps_lo, args.eps_hi)
    failures = []
    states = find_bound_states(args.lam, args.l, eps_lo, args.eps_hi, args.grid, config, failures)
    chosen = [s for s in states if s.index == args.index]
    if not chosen:
        log.error("no state with index %d found for lambda=%s, l=%d", args.index, args.lam, args.l)
        return EXIT_SOLVER
    state = chosen[0]
    prec = config.precision_bits
    rows, bad = [], 0
    for z in _z_grid(args.z_min, args.z_max, args.points, args.spacing):
        try:
            value, tag = wavefunction_tagged(state, z)
            rows.append({"z": repr(z), "w": format_real(value, prec), "tag": tag})
        except LJError as exc:
            bad += 1
            rows.append({"z": repr(z), "w": "", "tag": f"error: {exc}"})
    extra = {"eps": format_real(state.energy, prec), "index": state.index, "nodes": count_nodes(state)}
    if bad:
        extra["partial"] = True
    _emit(render("wavefunction", config, rows, args.format, extra), args.out)
    return EXIT_SOLVER if bad else EXIT_OK


def cmd_critical(args) -> int:
    if args.count < 0:
        raise UsageError("count must be non-negative")
    if args.l < 0:
        raise UsageError("l must be non-negative")
    results = critical_intensities(args.l, args.count, lambda_max=args.lambda_max)
    rows = [
        {
            "l": r.l,
            "index": r.index,
            "lambda_crit": format_real(r.lambda_crit, 53),
            "growth_residual": format_real(r.growth_residual, 53),
        }
        for r in results
    ]
    _emit(render("critical", None, rows, args.format), args.out)
    return EXIT_OK if len(results) == args.count else EXIT_PARTIAL


# --------------------------------------------------------------------------
# argument parsing
# --------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ljexact", description=__doc__.split("\n\n")[0])
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("state", help="bound states of one (lambda, l) in an energy bracket")
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--l", type=int, required=True)
    p.add_argument("--eps-lo", type=float, required=True)
    p.add_argument("--eps-hi", type=float, required=True)
    p.add_argument("--grid", type=int, default=50, help="scan points (at least 50)")
    _add_config_flags(p)
    p.set_defaults(func=cmd_state)

    p = sub.add_parser("spectrum", help="energies on a lambda grid (plot-ready)")
    p.add_argument("--lambda-lo", type=float, default=1.0)
    p.add_argument("--lambda-hi", type=float, default=100.0)
    p.add_argument("--lambda-steps", type=int, default=100)
    p.add_argument("--l-set", default="0,1,2,3,4")
    p.add_argument("--eps-top", type=float, default=-1e-3)
    p.add_argument("--wide-out", help="also write one column per curve to this CSV file")
    _add_config_flags(p)
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("wavefunction", help="normalized wave function on a z grid")
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--l", type=int, required=True)
    p.add_argument("--index", type=int, default=0, help="number of nodes of the state")
    p.add_argument("--eps-lo", type=float, default=None)
    p.add_argument("--eps-hi", type=float, default=-1e-3)
    p.add_argument("--grid", type=int, default=50)
    p.add_argument("--z-min", type=float, default=0.05)
    p.add_argument("--z-max", type=float, default=8.0)
    p.add_argument("--points", type=int, default=200)
    p.add_argument("--spacing", choices=("log", "linear"), default="log")
    _add_config_flags(p)
    p.set_defaults(func=cmd_wavefunction)

    p = sub.add_parser("critical", help="critical intensities for one l")
    p.add_argument("--l", type=int, required=True)
    p.add_argument("--count", type=int, default=5)
    p.add_argument("--lambda-max", type=float, default=2000.0)
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--out")
    p.set_defaults(func=cmd_critical)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(f"ljexact: {exc}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"ljexact: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (LJError, ValueError, ArithmeticError) as exc:
        print(f"ljexact: solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
