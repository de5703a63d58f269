"""Command line: solve a DIMACS max-flow instance or a generated one."""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, dataclass
from typing import Sequence, TextIO

import numpy as np

from .basic import IterationTrace, SolverConfig
from .dimacs import parse_dimacs
from .driver import ALGORITHMS, max_flow_driver, route_target
from .errors import DimacsParseError, FlowError
from .exact import cut_capacity
from .generators import KINDS, generate_instance
from .graph import Graph

EXIT_OK, EXIT_INFEASIBLE, EXIT_PARSE, EXIT_DIAGNOSTIC = 0, 2, 3, 4


@dataclass(frozen=True)
class RunConfig:
    algorithm: str = "basic"
    target: int | None = None
    tol: float = 1e-10
    eta: float | None = None
    c_eta: float = 1.0
    validate: bool = False
    max_iters: int | None = None
    seed: int = 0
    metrics: str | None = None
    certificate: str = "certificate.json"
    engine: str = "auto"

    def solver_config(self) -> SolverConfig:
        return SolverConfig(tol=self.tol, validate=self.validate, max_iters=self.max_iters,
                            eta=self.eta, c_eta=self.c_eta, engine=self.engine)

    def to_json(self) -> dict:
        return asdict(self)


def format_flow(g: Graph, value: int, flow) -> str:
    lines = [f"s {int(value)}"]
    for u, v, x in zip(g.tail.tolist(), g.head.tolist(), np.asarray(flow).tolist()):
        if x != 0:
            lines.append(f"f {u + 1} {v + 1} {int(round(x))}")
    return "\n".join(lines) + "\n"


def write_metrics(path: str, trace: list[IterationTrace]) -> None:
    with open(path, "w") as fh:
        for rec in trace:
            fh.write(json.dumps(rec.to_json()) + "\n")


def emit_result(g: Graph, answer, cfg: RunConfig, out: TextIO | None = None) -> int:
    """Print the answer, write the metrics and certificate files, and return the exit code.

    ``answer`` is a :class:`DriverAnswer` (maximum-flow mode) or a
    :class:`TargetResult` (fixed-target mode).
    """
    out = out or sys.stdout
    trace = getattr(answer, "trace", [])
    if cfg.metrics:
        write_metrics(cfg.metrics, trace)
    if cfg.target is None:
        out.write(format_flow(g, answer.value, answer.flow))
        return EXIT_OK
    if answer.routed:
        out.write(format_flow(g, answer.F, answer.flow))
        return EXIT_OK
    if answer.certificate is not None:
        # the dual witness refers to the preconditioned instance the solver ran on
        doc = {"kind": "dual", "target": int(answer.F), **answer.certificate.to_json()}
    else:
        side = np.asarray(answer.source_side, dtype=bool)
        doc = {"kind": "cut", "F": int(answer.F), "capacity": cut_capacity(g, side),
               "source_side": [int(v) + 1 for v in np.flatnonzero(side)]}
    with open(cfg.certificate, "w") as fh:
        json.dump(doc, fh)
        fh.write("\n")
    out.write("s INFEASIBLE\n")
    out.write(f"c certificate {cfg.certificate}\n")
    return EXIT_INFEASIBLE


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_PARSE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="augflow", description=__doc__)
    p.add_argument("input", nargs="?", default="-", help="DIMACS file ('-' for stdin)")
    p.add_argument("--algorithm", choices=ALGORITHMS, default="basic")
    p.add_argument("--target", type=int, help="route exactly this value instead of maximizing")
    p.add_argument("--tol", type=float, default=1e-10, help="linear solve tolerance")
    p.add_argument("--eta", type=float, help="override the improved solver's exponent")
    p.add_argument("--c-eta", type=float, default=1.0, help="slack constant in the exponent")
    p.add_argument("--validate", action="store_true", help="check every proven bound at runtime")
    p.add_argument("--max-iters", type=int)
    p.add_argument("--seed", type=int, default=0, help="seed for --generate")
    p.add_argument("--metrics", help="write per-iteration records here as JSON lines")
    p.add_argument("--certificate", default="certificate.json",
                   help="where an infeasibility witness is written")
    p.add_argument("--engine", choices=("auto", "numpy", "numba"), default="auto")
    p.add_argument("--generate", metavar="KIND,N,M,U",
                   help=f"solve a generated instance; KIND is one of {', '.join(KINDS)}")
    return p


def _generated(text: str, seed: int) -> Graph:
    parts = text.split(",")
    if len(parts) != 4:
        raise DimacsParseError("--generate expects KIND,N,M,U")
    kind, *nums = parts
    try:
        n, m, U = (int(x) for x in nums)
    except ValueError:
        raise DimacsParseError("--generate expects integer N, M and U") from None
    return generate_instance(kind, n, m, U, seed)


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    cfg = RunConfig(args.algorithm, args.target, args.tol, args.eta, args.c_eta, args.validate,
                    args.max_iters, args.seed, args.metrics, args.certificate, args.engine)
    try:
        if args.generate:
            g = _generated(args.generate, args.seed)
        elif args.input == "-":
            g = parse_dimacs(sys.stdin.read())
        else:
            with open(args.input) as fh:
                g = parse_dimacs(fh.read())
    except (DimacsParseError, OSError) as exc:
        print(f"c parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except FlowError as exc:
        print(f"c bad instance: {exc}", file=sys.stderr)
        return EXIT_PARSE
    if cfg.target is not None and cfg.target < 0:
        print("c parse error: --target must be non-negative", file=sys.stderr)
        return EXIT_PARSE
    try:
        solver = cfg.solver_config()
        if cfg.target is None:
            answer = max_flow_driver(g, cfg.algorithm, solver)
        else:
            answer = route_target(g, cfg.target, cfg.algorithm, solver)
        return emit_result(g, answer, cfg)
    except FlowError as exc:
        print(f"c diagnostic: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DIAGNOSTIC


if __name__ == "__main__":
    sys.exit(main())
