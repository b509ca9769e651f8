"""Command line driver: ``symqubo analyze|build|detect|estimate|regress``."""

from __future__ import annotations

import argparse
import glob
import json
import logging
import multiprocessing as mp
import os
import sys
import time
from collections import deque
from concurrent.futures import ProcessPoolExecutor

from .estimator import SymmetryDetector, build_formulation
from .mps import read_mps
from .qubo import QuboPlusModel, q_decomp, quboplus_to_json, write_qubo
from .reasonability import SignatureConfig, build_partition, max_decomp_class
from .report import instance_stats, read_stats_csv, regress, rows_to_csv, rows_to_json_ready, stats_row
from .resources import zephyr_estimate
from .validation import parse_form

EXIT_OK, EXIT_USAGE, EXIT_FAILED = 0, 1, 2

logger = logging.getLogger("symqubo")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("input")
    g.add_argument("--mps", action="append", default=[], metavar="PATH", help="MPS file (repeatable)")
    g = p.add_argument_group("signatures")
    g.add_argument("--sharpen-var-degree", action="store_true", help="variables must appear in equally many rows")
    g.add_argument("--sharpen-con-size", action="store_true", help="rows must hold equally many variables")
    g.add_argument("--no-bounds-signature", action="store_true", help="ignore variable bounds")
    g.add_argument("--no-sense-signature", action="store_true", help="ignore constraint senses")
    g.add_argument("--no-coefficient-signature", action="store_true",
                   help="ignore the multiset of matrix coefficients of each column and row")
    g.add_argument("--coeff-tolerance-digits", type=int, default=None, metavar="K",
                   help="compare coefficients after rounding to K significant digits")
    g = p.add_argument_group("sampling")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--restarts", type=int, default=64)
    g.add_argument("--sweeps", type=int, default=2000)
    g.add_argument("--exact-limit", type=int, default=24, help="largest model solved by exhaustive enumeration")
    g = p.add_argument_group("output")
    g.add_argument("--out", default=None, metavar="PATH", help="output file (default: stdout)")
    g.add_argument("--format", choices=("csv", "json"), default=None)
    g.add_argument("--jobs", type=int, default=1, metavar="K", help="worker processes / annealing threads")
    g.add_argument("--max-n", type=int, default=None, help="skip instances with more variables")
    g.add_argument("--max-q", type=int, default=None, help="skip building models with more QUBO variables")
    g.add_argument("--timeout", type=float, default=None, metavar="SEC",
                   help="analyze: give up on an instance after SEC seconds of wall-clock time")
    g.add_argument("-v", "--verbose", action="store_true")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = _Parser(prog="symqubo", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("analyze", parents=[common], help="size statistics per instance")
    p.add_argument("paths", nargs="*", help="MPS files or directories")

    p = sub.add_parser("build", parents=[common], help="write a formulation to .qubo or QUBO-Plus JSON")
    p.add_argument("path", nargs="?")
    p.add_argument("--form", default="reduced",
                   help="full, reduced, decomp:<class>, plus-full, plus-reduced, plus-decomp:<class>")
    p.add_argument("--fix-mode", choices=("constants", "penalty"), default="constants")

    p = sub.add_parser("detect", parents=[common], help="find and verify symmetries, report orbits")
    p.add_argument("path", nargs="?")
    p.add_argument("--form", default="reduced")
    p.add_argument("--fix-mode", choices=("constants", "penalty"), default="constants")

    p = sub.add_parser("estimate", parents=[common], help="Zephyr qubit bounds")
    p.add_argument("paths", nargs="*")
    p.add_argument("--q", type=int, action="append", default=[], help="QUBO variable count (repeatable)")
    p.add_argument("--of", choices=("reduced", "full", "maxdecomp"), default="reduced",
                   help="which formulation size to estimate for MPS inputs")

    p = sub.add_parser("regress", parents=[common], help="power regressions over an analyze CSV")
    p.add_argument("stats", help="CSV written by 'symqubo analyze'")
    return parser


def _config(args) -> SignatureConfig:
    return SignatureConfig(
        use_bounds=not args.no_bounds_signature,
        use_sense=not args.no_sense_signature,
        use_coefficients=not args.no_coefficient_signature,
        sharpen_var_degree=args.sharpen_var_degree,
        sharpen_con_size=args.sharpen_con_size,
        coeff_tolerance_digits=args.coeff_tolerance_digits,
    )


def _expand(paths: list[str]) -> list[str]:
    out = []
    for p in paths:
        if os.path.isdir(p):
            found = []
            for pattern in ("*.mps", "*.mps.gz", "*.MPS", "*.MPS.gz", "*.free.mps", "*.free.mps.gz"):
                found += glob.glob(os.path.join(p, pattern))
            out += sorted(set(found))
        else:
            out.append(p)
    return out


def _emit(text: str, out: str | None):
    if out is None:
        sys.stdout.write(text)
        return
    try:
        with open(out, "w") as fh:
            fh.write(text)
    except OSError as exc:
        raise UsageError(f"cannot write {out}: {exc}") from None


def _single_path(args) -> str:
    paths = ([args.path] if args.path else []) + args.mps
    if len(paths) != 1:
        raise UsageError("exactly one MPS input is required")
    return paths[0]


def _analyze_one(path: str, config: SignatureConfig, max_n: int | None, max_q: int | None) -> dict:
    name = os.path.basename(path)
    try:
        mip = read_mps(path)
        name = mip.name or name
        if max_n is not None and mip.n > max_n:
            return stats_row(None, name, f"skipped: n={mip.n} > max-n={max_n}")
        return stats_row(instance_stats(mip, config, max_q))
    except Exception as exc:  # one bad instance must not abort the batch
        return stats_row(None, name, f"{type(exc).__name__}: {exc}")


def _guarded_worker(conn, task):
    conn.send(_analyze_one(*task))
    conn.close()


def _analyze_guarded(tasks: list[tuple], jobs: int, timeout: float) -> list[dict]:
    """Run each instance in its own process and kill it at the deadline."""
    ctx = mp.get_context()
    rows: list[dict | None] = [None] * len(tasks)
    pending = deque(enumerate(tasks))
    running: dict[int, tuple] = {}
    while pending or running:
        while pending and len(running) < jobs:
            k, task = pending.popleft()
            recv, send = ctx.Pipe(duplex=False)
            proc = ctx.Process(target=_guarded_worker, args=(send, task), daemon=True)
            proc.start()
            send.close()
            running[k] = (proc, recv, time.monotonic() + timeout)
        for k, (proc, recv, deadline) in list(running.items()):
            name = os.path.basename(tasks[k][0])
            if recv.poll():
                try:
                    rows[k] = recv.recv()
                except EOFError:
                    rows[k] = stats_row(None, name, f"worker exited with code {proc.exitcode}")
            elif not proc.is_alive() and not recv.poll():
                rows[k] = stats_row(None, name, f"worker exited with code {proc.exitcode}")
            elif time.monotonic() > deadline:
                proc.kill()
                rows[k] = stats_row(None, name, f"timeout after {timeout:g} s")
            else:
                continue
            proc.join()
            recv.close()
            del running[k]
        time.sleep(0.005)
    return rows


def cmd_analyze(args) -> int:
    paths = _expand(args.paths + args.mps)
    if not paths:
        raise UsageError("no MPS inputs given (or the directory holds none)")
    if args.timeout is not None and not args.timeout > 0:
        raise UsageError("--timeout must be positive")
    config = _config(args)
    jobs = max(1, args.jobs)
    task_args = [(p, config, args.max_n, args.max_q) for p in paths]
    if args.timeout is not None:
        rows = _analyze_guarded(task_args, jobs, args.timeout)
    elif jobs == 1:
        rows = [_analyze_one(*a) for a in task_args]
    else:
        with ProcessPoolExecutor(jobs) as pool:
            rows = list(pool.map(_analyze_one, *zip(*task_args)))
    if args.format == "json":
        text = json.dumps(rows_to_json_ready(rows), indent=2) + "\n"
    else:
        text = rows_to_csv(rows)
    _emit(text, args.out)
    return EXIT_FAILED if all(r["error"] for r in rows) else EXIT_OK


def cmd_build(args) -> int:
    path = _single_path(args)
    try:
        parsed = parse_form(args.form)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    mip = read_mps(path)
    partition = build_partition(mip, _config(args))
    if args.max_q is not None:
        # decompositions are never larger than the reduced form
        q = mip.n**2 + mip.m**2 if parsed.base == "full" else partition.nu + partition.mu
        if q > args.max_q:
            raise RuntimeError(f"model would have about {q} variables, above --max-q {args.max_q}")
    try:
        model = build_formulation(mip, partition, args.form, args.fix_mode)
    except ValueError as exc:
        if "class" in str(exc):
            raise UsageError(str(exc)) from None
        raise
    if isinstance(model, QuboPlusModel):
        text = json.dumps(quboplus_to_json(model), indent=2) + "\n"
    else:
        text = write_qubo(model)
    _emit(text, args.out)
    return EXIT_OK


def cmd_detect(args) -> int:
    path = _single_path(args)
    try:
        parse_form(args.form)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    config = _config(args)
    detector = SymmetryDetector(
        form=args.form,
        fix_mode=args.fix_mode,
        exact_limit=args.exact_limit,
        seed=args.seed,
        restarts=args.restarts,
        sweeps=args.sweeps,
        n_jobs=max(1, args.jobs),
        use_bounds=config.use_bounds,
        use_sense=config.use_sense,
        use_coefficients=config.use_coefficients,
        sharpen_var_degree=config.sharpen_var_degree,
        sharpen_con_size=config.sharpen_con_size,
        coeff_tolerance_digits=config.coeff_tolerance_digits,
    )
    detector.fit(path)
    _emit(json.dumps(detector.report(), indent=2) + "\n", args.out)
    return EXIT_OK


def cmd_estimate(args) -> int:
    rows = []
    for q in args.q:
        rows.append({"name": f"q={q}", **_zephyr_row(q)})
    for path in _expand(args.paths + args.mps):
        mip = read_mps(path)
        partition = build_partition(mip, _config(args))
        if args.of == "full":
            q = mip.n**2 + mip.m**2
        elif args.of == "reduced":
            q = partition.nu + partition.mu
        else:
            q = q_decomp(partition, max_decomp_class(partition)[0])
        rows.append({"name": mip.name, **_zephyr_row(q)})
    if not rows:
        raise UsageError("give --q values or MPS inputs")
    if args.format == "json":
        text = json.dumps(rows, indent=2) + "\n"
    else:
        cols = ["name", "q", "g", "qubit_bound", "zephyr_total"]
        text = ",".join(cols) + "\n" + "".join(",".join(str(r[c]) for c in cols) + "\n" for r in rows)
    _emit(text, args.out)
    return EXIT_OK


def _zephyr_row(q: int) -> dict:
    try:
        z = zephyr_estimate(q)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    return {"q": z.q, "g": z.g, "qubit_bound": z.qubit_bound, "zephyr_total": z.zephyr_total}


def cmd_regress(args) -> int:
    try:
        with open(args.stats) as fh:
            rows = read_stats_csv(fh.read())
    except OSError as exc:
        raise UsageError(f"cannot read {args.stats}: {exc}") from None
    try:
        result = regress(rows)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    _emit(json.dumps(result, indent=2) + "\n", args.out)
    return EXIT_OK


COMMANDS = {
    "analyze": cmd_analyze,
    "build": cmd_build,
    "detect": cmd_detect,
    "estimate": cmd_estimate,
    "regress": cmd_regress,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"symqubo {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:
        print(f"symqubo {args.command}: failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
