"""Command line front end: expansion, convergents, and statistics runs.

Output is machine readable (JSON lines or CSV) and byte-deterministic for a
fixed configuration and seed.  Exit codes: 0 success, 1 a statistics check
missed its tolerance, 2 malformed input or configuration.
"""

from __future__ import annotations

import argparse
import json
import os
import random
import sys
from fractions import Fraction

from . import cfsystems, ergodics
from .cfsystems import (
    Digit1D,
    SystemSpec,
    convergent,
    digit_from_obj,
    digit_to_obj,
    enumerate_branches,
    expand,
    expansion_records,
)
from .lft import iota
from .errors import PadicError
from .padic_core import (
    INF,
    PrimeCtx,
    format_rational,
    haar_sample_vector,
    parse_rational,
    valuation,
)

CSV_HEADER = "check,p,l,m,estimate,stderr,theoretical,pass"


class CliError(Exception):
    pass


def _parse_ell(s: str):
    if s == "inf":
        return INF
    try:
        v = int(s)
    except ValueError:
        raise CliError(f"invalid --l value {s!r}")
    if v < 0:
        raise CliError("--l must be >= 0 or 'inf'")
    return v


def _parse_bound(s: str) -> int:
    s = s.strip()
    if "^" in s:
        base, expo = s.split("^", 1)
        return int(base) ** int(expo)
    return int(s)


def _build_spec(args) -> SystemSpec:
    ctx = PrimeCtx(args.p)
    system = args.system
    ell = _parse_ell(args.l) if args.l is not None else None
    if system == "schneider":
        return SystemSpec.schneider(ctx)
    if system == "ruban":
        return SystemSpec.ruban(ctx)
    if system == "tl":
        if ell is None:
            raise CliError("--system tl requires --l")
        if args.m > 1:
            return SystemSpec.multi_dim(ctx, ell, args.m)
        return SystemSpec.one_dim(ctx, ell)
    if system == "jacobi-perron":
        return SystemSpec.multi_dim(ctx, INF if ell is None else ell, args.m)
    if system == "brun":
        return SystemSpec.brun(ctx, args.m)
    raise CliError(f"unknown system {system!r}")


def _parse_point(spec: SystemSpec, tokens: list[str], seed: int):
    """Point input: one 'num/den' per coordinate, or a single 'random:N'."""
    if len(tokens) == 1 and tokens[0].startswith("random:"):
        n = int(tokens[0].split(":", 1)[1])
        if n < 1:
            raise CliError("random:N requires N >= 1")
        coords = haar_sample_vector(spec.ctx, spec.m, n, random.Random(seed))
        return coords if spec.m > 1 else coords[0]
    if len(tokens) == 1 and "," in tokens[0]:
        tokens = tokens[0].split(",")
    if len(tokens) != spec.m:
        raise CliError(f"expected {spec.m} coordinates, got {len(tokens)}")
    coords = []
    for t in tokens:
        try:
            x = parse_rational(t)
        except (ValueError, ZeroDivisionError):
            raise CliError(f"cannot parse coordinate {t!r}")
        if x != 0 and valuation(x, spec.ctx) < 1:
            raise CliError(f"coordinate {t} is not in p*Z_p")
        coords.append(x)
    return tuple(coords) if spec.m > 1 else coords[0]


def _emit(line: str, out):
    out.write(line + "\n")


def cmd_expand(args, out) -> int:
    spec = _build_spec(args)
    point = _parse_point(spec, args.point, args.seed)
    exp = expand(spec, point, args.steps)
    for rec in expansion_records(spec, exp):
        _emit(json.dumps(rec, separators=(",", ":")), out)
    status = {"status": exp.status, "step": exp.stopped_at}
    _emit(json.dumps(status, separators=(",", ":")), out)
    return 0


def cmd_convergents(args, out) -> int:
    spec = _build_spec(args)
    if args.digits == "-":
        lines = sys.stdin.read().splitlines()
    else:
        with open(args.digits, "r", encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    digits = []
    for line in lines:
        line = line.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError:
            raise CliError(f"invalid digit record: {line!r}")
        if "digit" in obj:
            digits.append(digit_from_obj(obj["digit"]))
        elif "status" in obj:
            continue
        else:
            raise CliError(f"invalid digit record: {line!r}")
    point = None
    if args.point is not None:
        point = _parse_point(spec, args.point, args.seed)
    for j in range(1, len(digits) + 1):
        vec = convergent(spec, digits[:j])
        coords = vec if isinstance(vec, tuple) else (vec,)
        cols = [str(j - 1), " ".join(format_rational(c) for c in coords)]
        if point is not None:
            pt = point if isinstance(point, tuple) else (point,)
            ords = []
            for c, x in zip(coords, pt):
                diff = x - c
                if isinstance(diff, Fraction):
                    v = valuation(diff, spec.ctx)
                elif diff.is_exact_zero:
                    v = INF
                elif diff.is_zero_at_precision:
                    v = diff.abs_prec  # a lower bound; the true ord is deeper
                else:
                    v = diff.valuation()
                ords.append(v)
            vmin = min(ords)
            cols.append("inf" if vmin == INF else str(vmin))
        _emit("\t".join(cols), out)
    return 0


def cmd_branches(args, out) -> int:
    spec = _build_spec(args)
    bound = _parse_bound(args.bound) if args.bound else spec.ctx.p**4
    for digit, f in enumerate_branches(spec, bound):
        rec = {
            "digit": digit_to_obj(digit),
            "iota": format_rational(iota(f)),
            "lft": f.to_obj(),
        }
        _emit(json.dumps(rec, separators=(",", ":")), out)
    return 0


def _csv_row(out, check, p, l, m, estimate, stderr, theoretical, passed):
    theo = "" if theoretical is None else repr(float(theoretical))
    _emit(
        f"{check},{p},{l},{m},{repr(float(estimate))},{repr(float(stderr))},"
        f"{theo},{str(bool(passed)).lower()}",
        out,
    )


def _parse_word(spec: SystemSpec, text: str):
    """Word syntax for 1-D systems: '(k,v)' letters separated by ';'."""
    letters = []
    for part in text.split(";"):
        part = part.strip().strip("()")
        if not part:
            continue
        k_s, v_s = part.split(",", 1)
        letters.append(Digit1D(int(k_s), parse_rational(v_s.strip())))
    return tuple(letters)


def cmd_stats(args, out) -> int:
    spec = _build_spec(args)
    p = spec.ctx.p
    ell_s = spec.ell_str
    rows = []
    if args.check == "digit-means":
        rep_a, rep_b = ergodics.digit_mean_reports(
            spec,
            args.samples,
            args.steps,
            args.seed,
            precision=args.precision,
            threads=args.threads,
        )
        for functional, rep in (("a", rep_a), ("b", rep_b)):
            rows.append(
                (
                    f"digit-mean-{functional}",
                    rep.estimate,
                    rep.stderr,
                    rep.theoretical,
                    rep.within(4.0),
                )
            )
    elif args.check == "iota-sum":
        bound = _parse_bound(args.bound) if args.bound else p**20
        total = ergodics.iota_sum(spec, bound)
        if spec.kind == cfsystems.ONE_DIM:
            theo = ergodics.iota_sum_closed_form(spec, bound)
            passed = total == theo
        else:
            theo = None
            passed = 0 < total < 1
        rows.append(("iota-sum", total, 0.0, theo, passed))
    elif args.check == "mixing":
        if spec.kind != cfsystems.ONE_DIM:
            raise CliError("mixing check expects a one-dimensional system")
        if not args.wordA or not args.wordB:
            raise CliError("mixing check requires --wordA and --wordB")
        A = ergodics.SymbolicCylinder(spec, _parse_word(spec, args.wordA))
        B = ergodics.SymbolicCylinder(spec, _parse_word(spec, args.wordB))
        bound = _parse_bound(args.bound) if args.bound else None
        rep = ergodics.mixing_exact(A, B, args.n, iota_bound=bound)
        passed = abs(rep.lhs - rep.rhs) <= rep.tail_bound
        rows.append(("mixing", rep.lhs, 0.0, rep.rhs, passed))
    elif args.check == "invariance":
        rng = random.Random(args.seed)
        for idx in range(args.cylinders):
            c = ergodics.random_cylinder(rng, spec.ctx, spec.m, max_level=3)
            rep = ergodics.invariance_mc(
                spec, c, args.samples, args.seed + 1000 * (idx + 1), threads=args.threads
            )
            rows.append(
                (f"invariance-{idx}", rep.estimate, rep.stderr, rep.theoretical, rep.within(4.0))
            )
    else:
        raise CliError(f"unknown check {args.check!r}")

    if args.format == "json":
        for check, est, se, theo, passed in rows:
            _emit(
                json.dumps(
                    {
                        "check": check,
                        "p": p,
                        "l": ell_s,
                        "m": spec.m,
                        "estimate": float(est),
                        "stderr": float(se),
                        "theoretical": None if theo is None else float(theo),
                        "pass": bool(passed),
                    },
                    separators=(",", ":"),
                ),
                out,
            )
    else:
        _emit(CSV_HEADER, out)
        for check, est, se, theo, passed in rows:
            _csv_row(out, check, p, ell_s, spec.m, est, se, theo, passed)
    return 0 if all(r[4] for r in rows) else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="padic-cf",
        description="p-adic continued fraction algorithms and their statistics",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--p", type=int, required=True, help="prime base")
        sp.add_argument(
            "--system",
            required=True,
            choices=["schneider", "ruban", "tl", "jacobi-perron", "brun"],
        )
        sp.add_argument("--l", default=None, help="depth parameter, integer or 'inf'")
        sp.add_argument("--m", type=int, default=None, help="dimension")
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--precision", type=int, default=None, help="digits for random points")
        sp.add_argument("--steps", type=int, default=32)
        sp.add_argument("--threads", type=int, default=1)

    sp_expand = sub.add_parser("expand", help="emit the digit stream of a point")
    common(sp_expand)
    sp_expand.add_argument("point", nargs="+", help="'num/den' per coordinate or random:N")

    sp_conv = sub.add_parser("convergents", help="exact convergents of a digit file")
    common(sp_conv)
    sp_conv.add_argument("digits", help="JSON-lines digit file, or - for stdin")
    sp_conv.add_argument(
        "--point",
        nargs="+",
        default=None,
        help="optional reference point; adds an ord(x - convergent) column",
    )

    sp_br = sub.add_parser("branches", help="enumerate branches up to an iota bound")
    common(sp_br)
    sp_br.add_argument("--bound", default=None, help="iota bound, e.g. 2^6 (default p^4)")

    sp_stats = sub.add_parser("stats", help="statistics checks with CSV/JSON output")
    common(sp_stats)
    sp_stats.add_argument(
        "--check",
        required=True,
        choices=["digit-means", "iota-sum", "mixing", "invariance"],
    )
    sp_stats.add_argument("--samples", type=int, default=2000)
    sp_stats.add_argument("--bound", default=None, help="iota bound, e.g. 2^20")
    sp_stats.add_argument("--wordA", default=None)
    sp_stats.add_argument("--wordB", default=None)
    sp_stats.add_argument("--n", type=int, default=1, help="iterate count for mixing")
    sp_stats.add_argument("--cylinders", type=int, default=20)
    sp_stats.add_argument("--format", choices=["csv", "json"], default="csv")
    return parser


def _fill_defaults(args):
    if args.seed is None:
        env = os.environ.get("PADIC_CF_SEED")
        args.seed = int(env) if env else 0
    if args.m is None:
        args.m = 2 if args.system in ("jacobi-perron", "brun") else 1
    if args.precision is None:
        args.precision = 4 * args.steps
    elif args.precision < 4 * args.steps:
        print(
            f"warning: precision {args.precision} below 4*steps = {4 * args.steps}",
            file=sys.stderr,
        )


def main(argv: list[str] | None = None, out=None) -> int:
    parser = build_parser()
    out = out or sys.stdout
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        _fill_defaults(args)
        if args.command == "expand":
            return cmd_expand(args, out)
        if args.command == "convergents":
            return cmd_convergents(args, out)
        if args.command == "branches":
            return cmd_branches(args, out)
        if args.command == "stats":
            return cmd_stats(args, out)
        raise CliError(f"unknown command {args.command!r}")
    except NotImplementedError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (CliError, PadicError, ValueError, ZeroDivisionError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
