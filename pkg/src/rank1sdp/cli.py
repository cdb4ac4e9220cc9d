"""Command-line entry point: ``rank1sdp approx | gen | dump-sdp``.

Exit codes: 0 success, 2 bad input or usage, 3 relaxation not solved.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .generators import FAMILIES, generate
from .io import TensorFormatError, read_tensor, write_report, write_sdpa, write_tensor
from .moment import lift_odd, nonsym_relaxation, squared_form, sym_relaxation
from .pipeline import PipelineConfig, largest_mode_last, approx_auto, baseline, compare_methods
from .refine import RefineConfig
from .sdp import to_std
from .tensor import SymTensor

EXIT_OK, EXIT_INPUT, EXIT_SOLVER = 0, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="rank1sdp", description="Best rank-1 tensor approximation by moment relaxations.")
    p.add_argument("-v", "--verbose", action="store_true", help="log solver progress to stderr")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    a = sub.add_parser("approx", help="approximate a tensor read from a .tns file")
    a.add_argument("--input", required=True)
    a.add_argument("--method", choices=["sdp", "shopm", "hopm", "compare"], default="sdp")
    a.add_argument("--tol", type=float, help="solver gap and feasibility tolerance")
    a.add_argument("--max-iters", type=int, help="refinement and power-method iteration cap")
    a.add_argument("--json", metavar="PATH", help="write the JSON report here ('-' for stdout)")
    a.add_argument("--seed", type=int, default=0, help="accepted for reproducible scripts; runs are deterministic")
    a.add_argument("--no-timing", action="store_true", help="omit wall-clock seconds from JSON")
    a.add_argument("--text", action="store_true", help="print the text report even when --json is given")

    g = sub.add_parser("gen", help="write a generated test tensor")
    g.add_argument("--family", required=True, choices=sorted(FAMILIES))
    g.add_argument("--n", type=int, default=3)
    g.add_argument("--m", type=int, default=3)
    g.add_argument("--out", required=True)
    g.add_argument("--seed", type=int, default=None)

    d = sub.add_parser("dump-sdp", help="write the relaxation in SDPA sparse format")
    d.add_argument("--input", required=True)
    d.add_argument("--out", required=True)
    return p


def _config(args) -> PipelineConfig:
    cfg = PipelineConfig()
    if args.tol is not None:
        if args.tol <= 0:
            raise ValueError("--tol must be positive")
        cfg = replace(cfg, solver=replace(cfg.solver, gap_tol=args.tol, feas_tol=args.tol))
    if args.max_iters is not None:
        cfg = replace(cfg, refine=RefineConfig(max_iters=args.max_iters))
    return cfg


def _approx(args) -> int:
    t = read_tensor(args.input)
    cfg = _config(args)
    if args.method == "sdp":
        reports = approx_auto(t, cfg)
    elif args.method == "compare":
        reports = list(compare_methods(t, cfg).rows)
    else:
        reports = baseline(t, args.method, cfg)
    rows = reports if isinstance(reports, list) else [reports]
    timing = not args.no_timing
    if args.json:
        data = write_report(reports, "json", timing)
        if args.json == "-":
            sys.stdout.write(data.decode())
        else:
            Path(args.json).write_bytes(data)
    if not args.json or args.text:
        sys.stdout.write(write_report(reports, "text").decode())
    failed = any(r.solver.status not in ("optimal", "none") for r in rows)
    return EXIT_SOLVER if failed else EXIT_OK


def _dump(args) -> int:
    t = read_tensor(args.input)
    if isinstance(t, SymTensor):
        if t.m % 2:
            lifted, lf = lift_odd(t)
            p = replace(sym_relaxation(lifted, "max"), kind="odd-lifted", lifted=lf)
        else:
            p = sym_relaxation(t, "max")
    else:
        gram, dims = squared_form(t.transpose(largest_mode_last(t.dims)))
        p = nonsym_relaxation(gram, dims)
    std, _ = to_std(p)
    write_sdpa(std, args.out, comment=f"{p.kind} relaxation, pencil size {p.size}")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "approx":
            return _approx(args)
        if args.command == "gen":
            write_tensor(generate(args.family, args.n, args.m, args.seed), args.out)
            return EXIT_OK
        return _dump(args)
    except (TensorFormatError, ValueError, OSError) as exc:
        print(f"rank1sdp: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
