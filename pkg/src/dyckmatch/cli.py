"""Command-line front end.

Exit status: 0 success, 1 invalid input (JSON error object on stderr),
2 failed internal check.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile

from . import asymptotics, counting, matching, oracle, paths, sampling
from .errors import DyckMatchError
from .paths import Ensemble, Instance, SignPath

DEFAULT_SEED = sampling.DEFAULT_SEED


class UsageError(DyckMatchError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_help(sys.stderr)
        raise UsageError(message)


# ---------------------------------------------------------------------------
# input helpers

def parse_n_list(text: str) -> list[int]:
    """``"5"``, ``"1,2,10"`` or ``"1:60"`` (inclusive) or ``"10:100:10"``."""
    out = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if ":" in part:
            bits = [int(b) for b in part.split(":")]
            start, stop = bits[0], bits[1]
            step = bits[2] if len(bits) > 2 else 1
            out.extend(range(start, stop + 1, step))
        else:
            out.append(int(part))
    if any(n < 0 for n in out):
        raise UsageError("N values must be non-negative")
    if not out:
        raise UsageError("empty N list")
    return out


def read_instance_csv(path: str) -> Instance:
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].lstrip().startswith("#")]
    points = []
    for r in rows:
        if len(r) < 2:
            raise UsageError(f"instance rows need colour and coordinate: {r}")
        try:
            points.append((r[0], float(r[1])))
        except ValueError:
            if points:
                raise UsageError(f"bad coordinate in row {r}") from None
            # header line
    return Instance.from_points(points)


def _load_path(args) -> tuple[SignPath, Instance | None]:
    if getattr(args, "instance", None):
        inst = read_instance_csv(args.instance)
        return paths.from_instance(inst), inst
    if args.path is None:
        raise UsageError("give --path or --instance")
    try:
        return SignPath.parse(args.path), None
    except (ValueError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot parse path: {exc}") from None


def _fmt(x: float) -> str:
    return repr(float(x)) if math.isfinite(x) else str(x)


def write_atomic(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit(text: str, out: str | None) -> None:
    if out:
        write_atomic(out, text)
    else:
        sys.stdout.write(text)


def _csv_text(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def _json_text(obj, compact: bool = False) -> str:
    return json.dumps(obj, indent=None if compact else 2) + "\n"


# ---------------------------------------------------------------------------
# subcommands

def cmd_count(args) -> int:
    path, _ = _load_path(args)
    fam = matching.count_optimal(path)
    _emit(_json_text({"Z": fam.Z, "S": matching.entropy(path)}), args.out)
    return 0


def cmd_solve(args) -> int:
    path, inst = _load_path(args)
    fam = matching.count_optimal(path)
    report = {
        "path": path.to_ud(),
        "N": path.size,
        "class": paths.classify(path).value,
        "Z": fam.Z,
        "S": matching.entropy(path),
        "closing_steps": [[c.index, c.hbar] for c in paths.closing_steps(path)],
        "ordered_matching": matching.ordered_matching(path.size).pairs(),
    }
    if args.format == "csv":
        _emit(_csv_text(["step", "hbar"], report["closing_steps"]), args.out)
        return 0
    if inst is not None:
        report["min_cost"] = matching.h_lb(inst)
    _emit(_json_text(report), args.out)
    return 0


def cmd_enumerate(args) -> int:
    path, _ = _load_path(args)
    if args.index is not None:
        result = matching.decode_mth(path, args.index).pairs()
    else:
        result = []
        for i, m in enumerate(matching.enumerate_optimal(path)):
            if args.limit is not None and i >= args.limit:
                break
            result.append(m.pairs())
    _emit(_json_text(result, compact=True), args.out)
    return 0


def cmd_oracle(args) -> int:
    import numpy as np

    if args.n > oracle.MAX_EXHAUSTIVE_N:
        raise UsageError(f"--n must be at most {oracle.MAX_EXHAUSTIVE_N}")
    rng = np.random.default_rng(args.seed)
    failures = []
    for t in range(args.instances):
        coords = rng.random(2 * args.n)
        inst = Instance(tuple(coords[:args.n]), tuple(coords[args.n:]))
        report = oracle.exhaustive_optima(inst)
        path = paths.from_instance(inst)
        fam = matching.count_optimal(path)
        enumerated = frozenset(matching.enumerate_optimal(path))
        if report.degeneracy != fam.Z or report.argmin_set != enumerated:
            failures.append({"instance": t, "path": path.to_ud(),
                             "brute": report.degeneracy, "formula": fam.Z})
    ok = not failures
    _emit(_json_text({"n": args.n, "instances": args.instances, "seed": args.seed,
                      "pass": ok, "failures": failures}), args.out)
    return 0 if ok else 2


def _moment_rows(ns, ensemble, k, method):
    rows = []
    for n in ns:
        if method == "brute":
            value = oracle.brute_moment(n, ensemble, k)
            m1 = oracle.brute_moment(n, ensemble, 1)
            resc = counting.rescale(n, k, m1, value) if n else math.nan
            res = counting.MomentResult(n, ensemble, k, value, "brute", resc)
        elif method == "gf":
            series = counting.gf_moment_series(ensemble, k, n)
            value = series.scaled[n] / counting.tn_scaled(n, ensemble) if n else 0.0
            s1 = counting.gf_moment_series(ensemble, 1, n)
            m1 = s1.scaled[n] / counting.tn_scaled(n, ensemble) if n else 0.0
            resc = counting.rescale(n, k, m1, value) if n else math.nan
            res = counting.MomentResult(n, ensemble, k, value, "gf_series", resc)
        else:
            res = counting.METHODS[method](n, ensemble, k)
        rows.append(res.as_row())
    return rows


def cmd_moments(args) -> int:
    ensemble = Ensemble.parse(args.ensemble)
    rows = _moment_rows(parse_n_list(args.n), ensemble, args.k, args.method)
    header = ["N", "ensemble", "k", "raw_moment", "rescaled_moment", "method"]
    if args.format == "csv" or (args.out and args.out.endswith(".csv")):
        text = _csv_text(header, [[r[h] for h in header] for r in rows])
    else:
        text = _json_text(rows)
    _emit(text, args.out)
    return 0


def cmd_gfcheck(args) -> int:
    ensemble = Ensemble.parse(args.ensemble)
    series = counting.gf_moment_series(ensemble, args.k, args.order)
    rows, worst = [], 0.0
    for n in range(1, args.order + 1):
        dp = counting.exact_moment_dp(n, ensemble, args.k).value
        expected = counting.tn_scaled(n, ensemble) * dp
        got = float(series.scaled[n])
        rel = abs(got - expected) / abs(expected) if expected else abs(got)
        worst = max(worst, rel)
        rows.append({"N": n, "gf_scaled": got, "dp_scaled": expected, "rel_error": rel})
    ok = worst <= args.tol
    _emit(_json_text({"ensemble": ensemble.value, "k": args.k, "order": args.order,
                      "max_rel_error": worst, "tol": args.tol, "pass": ok, "rows": rows}), args.out)
    return 0 if ok else 2


def cmd_sample(args) -> int:
    ensemble = Ensemble.parse(args.ensemble)
    stats, s = sampling.mc_entropy_stats(args.n, ensemble, args.samples, args.seed,
                                         args.bins, args.threads, raw=True)
    if args.dump_raw:
        write_atomic(args.dump_raw, "index,s\n" + "".join(f"{i},{v!r}\n" for i, v in enumerate(s.tolist())))
    _emit(_json_text(stats.to_dict()), args.out)
    return 0


def cmd_asymptotics(args) -> int:
    if args.report:
        ensemble = Ensemble.parse(args.ensemble)
        rep = asymptotics.convergence_report(parse_n_list(args.n_list), ensemble, args.k, args.method)
        header = ["N", "exact", "predicted", "deviation", "normalized_deviation"]
        rows = [[r.n, r.exact, r.predicted, r.deviation, r.normalized] for r in rep.rows]
        text = _csv_text(header, rows)
        if rep.flagged:
            sys.stderr.write("warning: normalized deviation not bounded over the top decade\n")
        _emit(text, args.out)
        return 0
    lines, ok = [], True
    for label, passed, diff in asymptotics.consistency_checks():
        ok &= passed
        lines.append(f"{'ok' if passed else 'FAIL'}  {label}  (|diff| = {diff:.3e})")
    for e in Ensemble:
        for k in (1, 2):
            lines.append(f"ok  <s^{k}>_{e.value} = {asymptotics.predicted_constants(e, k)!r}")
    lines.append(f"ok  variance quadrature = {asymptotics.variance_quadrature()!r}")
    _emit("\n".join(lines) + "\n", args.out)
    return 0 if ok else 2


# ---------------------------------------------------------------------------
# parser

def _add_path_args(p):
    p.add_argument("--path", help="U/D string or JSON array of +-1 steps")
    p.add_argument("--instance", help="two-column CSV file: colour, coordinate")


def _common_options(suppress: bool) -> argparse.ArgumentParser:
    # accepted both before and after the subcommand name
    common = argparse.ArgumentParser(add_help=False)
    default = argparse.SUPPRESS if suppress else None
    common.add_argument("--threads", type=int, default=default,
                        help="worker count (default: $DYCK_THREADS, else logical cores)")
    common.add_argument("--format", choices=["json", "csv"],
                        default=argparse.SUPPRESS if suppress else "json",
                        help="output format where both make sense")
    return common


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dyckmatch", parents=[_common_options(False)],
                     description="Optimal matchings, degeneracy and entropy statistics "
                                 "for 1D Euclidean matching with linear cost.")
    sub = parser.add_subparsers(dest="subcommand", parser_class=_Parser)
    sub_parents = [_common_options(True)]

    p = sub.add_parser("solve", parents=sub_parents, help="closing steps, Z, S and an optimal matching")
    _add_path_args(p)
    p.add_argument("--out", help="write result here instead of stdout")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("count", parents=sub_parents, help="degeneracy Z and entropy S = log Z")
    _add_path_args(p)
    p.add_argument("--out", help="write result here instead of stdout")
    p.set_defaults(func=cmd_count)

    p = sub.add_parser("enumerate", parents=sub_parents, help="list optimal matchings as 1-based pairs")
    _add_path_args(p)
    p.add_argument("--index", type=int, help="only the m-th optimal matching (1-based)")
    p.add_argument("--limit", type=int, help="stop after this many matchings")
    p.add_argument("--out", help="write result here instead of stdout")
    p.set_defaults(func=cmd_enumerate)

    p = sub.add_parser("oracle", parents=sub_parents, help="brute-force cross-checks")
    p.add_argument("action", choices=["verify"])
    p.add_argument("--n", type=int, required=True, help="instance size (<= 8)")
    p.add_argument("--instances", type=int, default=100, help="random instances to test")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED, help="RNG seed")
    p.add_argument("--out", help="write report here instead of stdout")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("moments", parents=sub_parents, help="exact finite-N moments of S")
    p.add_argument("--ensemble", choices=["bridge", "excursion"], required=True)
    p.add_argument("--k", type=int, choices=[1, 2], default=1, help="moment order")
    p.add_argument("--n", required=True, help="N values: '5', '1,2,3' or '1:60[:step]'")
    p.add_argument("--method", choices=["dp", "closed", "gf", "brute"], default="dp")
    p.add_argument("--out", help="output file (.csv selects CSV)")
    p.set_defaults(func=cmd_moments)

    p = sub.add_parser("gfcheck", parents=sub_parents, help="series coefficients against DP moments")
    p.add_argument("--ensemble", choices=["bridge", "excursion"], required=True)
    p.add_argument("--k", type=int, choices=[1, 2], default=1, help="moment order")
    p.add_argument("--order", type=int, default=50, help="highest power of z")
    p.add_argument("--tol", type=float, default=1e-8, help="relative tolerance")
    p.add_argument("--out", help="write report here instead of stdout")
    p.set_defaults(func=cmd_gfcheck)

    p = sub.add_parser("sample", parents=sub_parents, help="Monte Carlo statistics of the rescaled entropy")
    p.add_argument("--ensemble", choices=["bridge", "excursion"], required=True)
    p.add_argument("--n", type=int, required=True, help="path size N")
    p.add_argument("--samples", type=int, default=10_000, help="number of paths K")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED, help="RNG seed")
    p.add_argument("--bins", type=int, default=200, help="histogram bins")
    p.add_argument("--out", help="JSON statistics file")
    p.add_argument("--dump-raw", help="CSV file for per-sample s values")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("asymptotics", parents=sub_parents, help="limit constants and convergence tables")
    mode = p.add_mutually_exclusive_group(required=True)
    mode.add_argument("--check", action="store_true", help="run the constant consistency checks")
    mode.add_argument("--report", action="store_true", help="CSV table of exact vs predicted")
    p.add_argument("--ensemble", choices=["bridge", "excursion"], default="excursion")
    p.add_argument("--k", type=int, choices=[1, 2], default=1, help="moment order")
    p.add_argument("--n-list", default="100,1000", help="N values for --report")
    p.add_argument("--method", choices=["dp", "closed"], default="dp")
    p.add_argument("--out", help="write output here instead of stdout")
    p.set_defaults(func=cmd_asymptotics)
    return parser


def resolve_threads(value: int | None) -> int:
    if value is not None:
        return max(1, value)
    return sampling.default_threads()


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.subcommand is None:
            parser.print_help()
            return 1
        args.threads = resolve_threads(args.threads)
        return args.func(args)
    except DyckMatchError as exc:
        sys.stderr.write(json.dumps({"error": type(exc).__name__, "message": str(exc)}) + "\n")
        return 1
    except (OSError, ValueError) as exc:
        sys.stderr.write(json.dumps({"error": type(exc).__name__, "message": str(exc)}) + "\n")
        return 1
    except AssertionError as exc:
        sys.stderr.write(json.dumps({"error": "AssertionError", "message": str(exc)}) + "\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
