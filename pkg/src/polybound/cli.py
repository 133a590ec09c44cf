"""Command-line interface: ``polybound {bound,tau,reformulate-only} FILE [options]``.

Exit codes: 0 success, 1 input or usage error, 2 infeasibility proven,
3 undecided (a solver limit was reached first).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .driver import INFEASIBLE, UNDECIDED, BoundOptions, bound_global_minimum, tau_variant
from .export import export_milp
from .model import build_lower_program, build_upper_program
from .parser import read_program
from .poly import FEAS_TOL, ProgramError, normalize_program
from .reformulate import ReformParams, reformulate
from .report import BoundReport, reformulation_report, tau_report, write_report

EXIT_OK, EXIT_ERROR, EXIT_INFEASIBLE, EXIT_UNDECIDED = 0, 1, 2, 3


def _assignments(text: str | None, cast, flag: str) -> dict:
    out = {}
    if not text:
        return out
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        name, sep, value = item.partition("=")
        if not sep:
            raise ProgramError(f"{flag}: expected name=value, got {item!r}")
        try:
            out[name.strip()] = cast(value)
        except ValueError:
            raise ProgramError(f"{flag}: bad value {value!r} for {name.strip()}") from None
    return out


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="polybound", description="Interval bounds on the global minimum of polynomial programs.")
    sub = ap.add_subparsers(dest="mode", required=True)

    def common(p):
        p.add_argument("input", help="problem file in .pp format")
        p.add_argument("--sigma", help="unit variables per variable, e.g. x1=3,x2=2")
        p.add_argument("--kappa", help="error limit per variable, e.g. x1=0.375")
        p.add_argument("--default-sigma", type=int, default=0, help="sigma for variables not listed (default 0)")
        p.add_argument("--format", choices=("text", "json"), default="text")
        p.add_argument("--export", metavar="PATH", help="write the lifted model(s); .json gives native-json, otherwise MPS")
        p.add_argument("--no-meta", action="store_true", help="omit version, timestamp and timings from the report")
        p.add_argument("--output", "-o", metavar="PATH", help="write the report here instead of standard output")

    def solving(p):
        p.add_argument("--tol", type=float, default=FEAS_TOL, help="feasibility tolerance (default 1e-6)")
        p.add_argument("--time-limit", type=float, help="seconds per branch-and-bound solve")
        p.add_argument("--node-limit", type=int, help="nodes per branch-and-bound solve")
        p.add_argument("--threads", type=int, default=1, help="nodes solved concurrently")

    b = sub.add_parser("bound", help="bracket the global minimum")
    common(b)
    solving(b)
    b.add_argument("--refine", action="store_true", help="focused upper-bound search when the pessimistic program is infeasible")
    b.add_argument("--refine-rounds", type=int, default=1)
    b.add_argument("--oracle", action="store_true", help="cross-check each solve by exhaustive enumeration (at most 22 binaries)")
    b.add_argument("--plot", metavar="PATH", help="save a figure of the search progress and interval")

    t = sub.add_parser("tau", help="solve the single linearized program")
    common(t)
    solving(t)

    r = sub.add_parser("reformulate-only", help="build the lifted models without solving")
    common(r)
    return ap


def _params(args) -> ReformParams:
    sig = _assignments(args.sigma, int, "--sigma")
    kap = _assignments(args.kappa, float, "--kappa")
    return ReformParams(sigma=sig, kappa=kap, default_sigma=args.default_sigma)


def _check_names(pp, params: ReformParams) -> None:
    names = set(pp.names)
    for n in [*params.sigma, *params.kappa]:
        if n not in names:
            raise ProgramError(f"unknown variable {n!r} in --sigma/--kappa")


def _export(models: list, path: str) -> list[str]:
    path = Path(path)
    fmt = "native-json" if path.suffix == ".json" else "mps-fixed"
    written = []
    for k, m in enumerate(models):
        target = path if k == 0 else path.with_name(f"{path.stem}.{m.kind}{path.suffix}")
        res = export_milp(m, fmt)
        target.write_bytes(res.data)
        written.append(str(target))
        if res.renamed:
            side = target.with_name(target.name + ".names.json")
            side.write_text(json.dumps(res.renamed, indent=1, sort_keys=True) + "\n")
            written.append(str(side))
    return written


def run(argv: list[str] | None = None, stdout=None) -> int:
    """Entry point; returns the exit code."""
    out = stdout or sys.stdout
    args = build_parser().parse_args(argv)
    try:
        pp = read_program(args.input)
        params = _params(args)
        _check_names(pp, params)
        meta = not args.no_meta
        if args.mode == "reformulate-only":
            npp = normalize_program(pp)
            R = reformulate(npp, params)
            files = _export([build_lower_program(npp, R), build_upper_program(npp, R)], args.export) if args.export else []
            rep, code = reformulation_report(npp, R, files, meta), EXIT_OK
        elif args.mode == "tau":
            opts = _options(args)
            npp = normalize_program(pp)
            tr = tau_variant(npp, params, opts)
            R = tr.reformulation
            files = []
            if args.export:
                from .model import build_linearized_program

                files = _export([build_linearized_program(npp, R)], args.export)
            rep = tau_report(npp, R, tr, meta)
            rep["exports"] = files
            code = EXIT_UNDECIDED if tr.status in ("undecided",) else EXIT_OK
        else:
            opts = _options(args)
            res = bound_global_minimum(pp, params, opts)
            notes = []
            if args.export:
                models = [build_lower_program(res.program, res.reformulation), build_upper_program(res.program, res.reformulation, slack=opts.slack)]
                notes += [f"exported {f}" for f in _export(models, args.export)]
            if args.plot:
                from .figures import plot_bound_run

                notes.append(f"figure {plot_bound_run(res, args.plot)}")
            rep = BoundReport.from_result(res, notes)
            code = {INFEASIBLE: EXIT_INFEASIBLE, UNDECIDED: EXIT_UNDECIDED}.get(res.verdict, EXIT_OK)
        data = write_report(rep, args.format, meta)
    except (ProgramError, OSError, ValueError) as exc:
        print(f"polybound: error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    if args.output:
        Path(args.output).write_bytes(data)
    else:
        out.write(data.decode("utf-8"))
    return code


def _options(args) -> BoundOptions:
    return BoundOptions(
        tol=args.tol,
        node_limit=args.node_limit,
        time_limit=args.time_limit,
        threads=args.threads,
        refine=getattr(args, "refine", False),
        refine_rounds=getattr(args, "refine_rounds", 1),
        oracle=getattr(args, "oracle", False),
    )


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
