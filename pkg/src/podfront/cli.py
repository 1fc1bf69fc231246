"""Command-line entry point: ``podfront <subcommand> ...``.

Subcommands: gen, frontier, indicators, hv, plotdata, verify. Any subcommand
accepts ``--config FILE`` with ``key = value`` lines (keys are flag names
without the leading dashes); flags given on the command line win.

Exit codes: 0 success, 1 solver/backend or verification failure, 2 usage.
"""
from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

from . import solver
from .core import TAU2, build_front, format_number, nadir, read_front, write_front
from .errors import BackendError, EndpointsTimeout, NumericalFailure, PodFrontError
from .frontier import SearchConfig, balanced_box, epsilon_constraint
from .instances import GenParams, generate_scenarios, read_instance, read_scenarios, synth_instance
from .instances import write_instance, write_scenarios
from .matheuristic import MatConfig, mat_frontier
from .metrics import hypervolume, value_report
from .models import CVaR, Expectation, WorstCase, build_model, evaluate_point

log = logging.getLogger("podfront")


class UsageError(Exception):
    pass


def _mode(args):
    if args.model == "m3":
        if args.alpha is None:
            raise UsageError("--model m3 requires --alpha")
        return CVaR(args.alpha)
    if args.alpha is not None:
        raise UsageError(f"--model {args.model} takes no --alpha")
    return Expectation() if args.model == "m1" else WorstCase()


def _load(args):
    inst = read_instance(args.instance)
    sc = read_scenarios(args.scenarios, inst.n)
    return inst, sc


def _add_data(p, model=True):
    p.add_argument("--instance", required=True, help="instance JSON")
    p.add_argument("--scenarios", required=True, help="scenario JSON")
    if model:
        p.add_argument("--model", choices=["m1", "m2", "m3"], default="m3")
        p.add_argument("--alpha", type=float, default=None)


def cmd_gen(args):
    inst = synth_instance(args.nodes, args.candidate_fraction, args.seed)
    params = GenParams(xi_bar=args.xi_bar, lambda1=args.lambda1, lambda2=args.lambda2, seed=args.seed)
    sc = generate_scenarios(inst, args.scenarios, params)
    write_instance(inst, args.out_instance)
    write_scenarios(sc, args.out_scenarios)
    return 0


def _backend(args):
    """Backend name for the run; a command template implies the external bridge."""
    if args.backend_command:
        solver.configure(backend_command=args.backend_command)
        return args.backend or "external"
    return args.backend


def cmd_frontier(args):
    mode = _mode(args)
    inst, sc = _load(args)
    model = build_model(inst, sc, mode)
    common = dict(d1=args.d1, d2=args.d2, total_time_limit=args.time_limit,
                  per_solve_time_limit=args.per_solve_limit, backend=_backend(args))
    if args.method == "mat":
        front = mat_frontier(model, MatConfig(tilim=args.tilim, l_prime=args.lb_radius,
                                              lb_rounds=args.lb_rounds, **common))
    elif args.method == "bb":
        front = balanced_box(model, SearchConfig(**common))
    else:
        front = epsilon_constraint(model, SearchConfig(**common))
    if not front.complete:
        log.warning("time limit reached; the front is incomplete")
    write_front(front, args.out)
    return 0


def cmd_indicators(args):
    mode = _mode(args)
    inst, sc = _load(args)
    front = read_front(args.front)
    report = value_report(front, inst, sc, mode, jobs=args.jobs, backend=_backend(args))
    Path(args.out).write_text(report.to_csv(), encoding="utf-8", newline="\n")
    return 0


def _reference(spec: str, front):
    if spec == "nadir":
        return nadir(front)
    path = Path(spec)
    if path.exists():
        return nadir(read_front(path))
    try:
        a, b = (float(v) for v in spec.split(","))
    except ValueError:
        raise UsageError(f"--ref must be 'nadir', a front CSV or 'f1,f2', got {spec!r}") from None
    return a, b


def cmd_hv(args):
    front = read_front(args.front)
    print(format_number(hypervolume(front, _reference(args.ref, front))))
    return 0


def cmd_plotdata(args):
    front = read_front(args.front)
    pts = sorted(front.points)
    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["kind", "f1", "f2"])
        for p in pts:
            w.writerow(["point", format_number(p.f1), format_number(p.f2)])
        if pts:
            w.writerow(["top", format_number(pts[0].f1), format_number(pts[0].f2)])
            w.writerow(["bottom", format_number(pts[-1].f1), format_number(pts[-1].f2)])
    return 0


def cmd_verify(args):
    mode = _mode(args)
    inst, sc = _load(args)
    front = read_front(args.front)
    problems = []
    for e in front:
        if len(e.y) != inst.n_candidates:
            problems.append(f"f1={e.f1}: y has {len(e.y)} entries, expected {inst.n_candidates}")
            continue
        f1, f2 = evaluate_point(inst, sc, mode, e.y)
        if f1 != e.f1 or abs(f2 - e.f2) > TAU2:
            problems.append(f"point ({e.f1}, {e.f2}) recomputes to ({f1}, {f2})")
    rebuilt = build_front(front.entries)
    if len(rebuilt) != len(front):
        problems.append("front contains dominated or duplicate points")
    for msg in problems:
        print(msg, file=sys.stderr)
    if problems:
        return 1
    print(f"ok: {len(front)} points verified")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="podfront", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", help="key = value defaults file")
        p.set_defaults(func=func)
        return p

    p = add("gen", cmd_gen, "generate a synthetic instance and scenarios")
    p.add_argument("--nodes", type=int, required=True)
    p.add_argument("--scenarios", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--lambda1", type=float, default=0.5)
    p.add_argument("--lambda2", type=float, default=0.5)
    p.add_argument("--xi-bar", type=float, default=1.0)
    p.add_argument("--candidate-fraction", type=float, default=0.5)
    p.add_argument("--out-instance", default="instance.json")
    p.add_argument("--out-scenarios", default="scenarios.json")

    p = add("frontier", cmd_frontier, "compute a Pareto front")
    _add_data(p)
    p.add_argument("--method", choices=["eps", "bb", "mat"], default="eps")
    p.add_argument("--time-limit", type=float, default=7200.0)
    p.add_argument("--per-solve-limit", type=float, default=None)
    p.add_argument("--d1", type=float, default=1.0)
    p.add_argument("--d2", type=float, default=1e-6)
    p.add_argument("--tilim", type=float, default=150.0)
    p.add_argument("--lb-radius", type=int, default=2)
    p.add_argument("--lb-rounds", type=int, default=5)
    p.add_argument("--backend", default=None, help="builtin or external (command from PR_BACKEND)")
    p.add_argument("--backend-command", default=None, help="external solver command with {mps} and {sol}")
    p.add_argument("--out", default="front.csv")

    p = add("indicators", cmd_indicators, "RVPI/RVSS per front point")
    _add_data(p)
    p.add_argument("--front", required=True)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--backend", default=None)
    p.add_argument("--backend-command", default=None)
    p.add_argument("--out", default="report.csv")

    p = add("hv", cmd_hv, "hypervolume of a front")
    p.add_argument("--front", required=True)
    p.add_argument("--ref", default="nadir", help="'nadir', a front CSV whose nadir is used, or 'f1,f2'")

    p = add("plotdata", cmd_plotdata, "front points and endpoints for plotting")
    p.add_argument("--front", required=True)
    p.add_argument("--out", default="plot.csv")

    p = add("verify", cmd_verify, "recheck a front against its instance")
    _add_data(p)
    p.add_argument("--front", required=True)
    return parser


def _read_config(path) -> dict[str, str]:
    out = {}
    for k, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{k}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        # dotted keys such as backend.command map to --backend-command
        out[key.lstrip("-").replace(".", "-").replace("_", "-")] = value
    return out


def _with_config(argv: list[str]) -> list[str]:
    """Prepend config values as flags so explicit flags, parsed later, win."""
    if "--config" not in argv and not any(a.startswith("--config=") for a in argv):
        return argv
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    cfg = _read_config(known.config)
    cmd_pos = next(i for i, a in enumerate(argv) if not a.startswith("-"))
    injected = []
    for key, value in cfg.items():
        injected += [f"--{key}", value]
    return argv[: cmd_pos + 1] + injected + argv[cmd_pos + 1:]


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        argv = _with_config(argv)
    except (UsageError, OSError, StopIteration) as exc:
        parser.print_usage(sys.stderr)
        print(f"podfront: error: {exc or 'missing subcommand'}", file=sys.stderr)
        return 2
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"podfront: error: {exc}", file=sys.stderr)
        return 2
    except (BackendError, EndpointsTimeout, NumericalFailure) as exc:
        print(f"podfront: solver failure: {exc}", file=sys.stderr)
        return 1
    except (PodFrontError, ValueError, OSError) as exc:
        print(f"podfront: error: {exc}", file=sys.stderr)
        return 2


def run(argv: list[str]) -> int:
    return main(argv)


if __name__ == "__main__":
    sys.exit(main())
