"""Command-line front end.

Exit codes: 0 on success, 1 when the solver fails, 2 on usage errors
(including unreadable instance files).
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import instance_file
from .experiments import ExperimentKind, ExperimentSpec, run_experiment
from .ifipm import StandardModel, Status, run_ifipm, within_neighborhood
from .lo_core import (
    FormTag,
    GeneratorSpec,
    Iterate,
    LoProblem,
    NeighborhoodParams,
    generate_degenerate_standard,
    generate_instance,
)
from .newton_systems import (
    SystemKind,
    assemble_comparison_system,
    condition_diagnostics,
    constant_block_matrix,
    select_basis,
)
from .refinement import run_ir
from .self_dual import ClassTag, classify, embed, to_standard
from .solvers import make_backend

EXIT_OK, EXIT_FAILURE, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def resolve_seed(seed: int | None) -> int:
    if seed is not None:
        return seed
    env = os.environ.get("OSSIPM_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError as exc:
        raise UsageError(f"OSSIPM_SEED must be an integer, got {env!r}") from exc


def _add_solver_flags(sp: argparse.ArgumentParser):
    sp.add_argument("--zeta", type=float, default=1e-6, help="target precision")
    sp.add_argument("--theta", type=float, default=0.2, help="neighborhood width")
    sp.add_argument("--eta", type=float, default=0.1, help="residual budget factor")
    sp.add_argument("--solver", choices=("lu", "noisy", "cgnr"), default="lu")
    sp.add_argument("--max-inner-iters", type=int, default=None,
                    help="CGNR iteration cap per linear solve")
    sp.add_argument("--seed", type=int, default=None, help="noise seed (falls back to $OSSIPM_SEED)")
    sp.add_argument("--trace-out", help="write the per-iteration trace CSV here")
    sp.add_argument("--refine", action="store_true", help="use iterative refinement")
    sp.add_argument("--zeta-hat", type=float, default=1e-2,
                    help="inner precision for iterative refinement")
    sp.add_argument("--out", help="write the solution here")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ossipm", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("solve", help="solve a standard-form instance")
    sp.add_argument("instance")
    _add_solver_flags(sp)

    sp = sub.add_parser("solve-canonical", help="solve a canonical instance via self-dual embedding")
    sp.add_argument("instance")
    _add_solver_flags(sp)
    sp.add_argument("--tau-tol", type=float, default=None)

    sp = sub.add_parser("generate", help="write a random instance")
    sp.add_argument("--m", type=int, default=4)
    sp.add_argument("--n", type=int, default=12)
    sp.add_argument("--cond", type=float, default=4.0, help="condition number of A")
    sp.add_argument("--norm", type=float, default=2.0, help="norm of A (and of b, c by default)")
    sp.add_argument("--norm-b", type=float, default=None)
    sp.add_argument("--norm-c", type=float, default=None)
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--degenerate", action="store_true",
                    help="primal-degenerate standard-form instance with a central start")
    sp.add_argument("--support", type=int, default=2, help="optimal support for --degenerate")
    sp.add_argument("--out", required=True)

    sp = sub.add_parser("experiment", help="run a parameter sweep")
    sp.add_argument("--kind", required=True, choices=[k.value for k in ExperimentKind])
    sp.add_argument("--out", required=True)
    sp.add_argument("--grid", type=float, nargs="+", default=None)
    sp.add_argument("--replications", type=int, default=5)
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--solver", choices=("lu", "noisy", "cgnr"), default="noisy")
    sp.add_argument("--eta", type=float, default=0.1)
    sp.add_argument("--theta", type=float, default=0.2)
    sp.add_argument("--zeta", type=float, default=1e-6)
    sp.add_argument("--zeta-hat", type=float, default=1e-2)
    sp.add_argument("--m", type=int, default=4)
    sp.add_argument("--n", type=int, default=12)
    sp.add_argument("--cond", type=float, default=4.0)
    sp.add_argument("--norm", type=float, default=2.0)
    sp.add_argument("--degenerate", action="store_true")
    sp.add_argument("--jobs", type=int, default=1)

    sp = sub.add_parser("diagnose", help="condition numbers of all Newton systems along a solve")
    sp.add_argument("instance")
    _add_solver_flags(sp)
    return ap


def _params(args, n: int) -> NeighborhoodParams:
    try:
        return NeighborhoodParams.for_dimension(n, theta=args.theta, eta=args.eta,
                                                zeta=args.zeta, zeta_hat=args.zeta_hat)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _backend(args):
    return make_backend(args.solver, seed=resolve_seed(args.seed),
                        max_inner_iters=args.max_inner_iters)


def _read(path: str) -> tuple[LoProblem, dict]:
    try:
        return instance_file.read(path)
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot read instance {path!r}: {exc}") from exc


def _write_vectors(path: str, **vectors):
    with open(path, "w") as fh:
        for name, v in vectors.items():
            fh.write(f"[{name}]\n")
            fh.writelines(format(float(x), ".17g") + "\n" for x in np.atleast_1d(v))


def _solve(model, start, params, args):
    backend = _backend(args)
    if args.refine:
        res = run_ir(model, start, params, backend)
        table = res
    else:
        res = run_ifipm(model, start, params, backend)
        table = res.trace
    if args.trace_out:
        with open(args.trace_out, "w") as fh:
            table.to_csv(fh)
    return res


def _solve_embedded(p: LoProblem, args) -> int:
    sd = embed(p)
    params = _params(args, sd.n_pairs)
    res = _solve(sd, sd.start(), params, args)
    print(f"status: {res.status.value}")
    if res.status is not Status.OPTIMAL:
        print(res.message, file=sys.stderr)
        return EXIT_FAILURE
    cls = classify(res.iterate, sd, getattr(args, "tau_tol", None))
    print(f"classification: {cls.tag.value}")
    print(f"tau: {cls.tau:.6e}  gamma: {cls.gamma:.6e}")
    if cls.tag is ClassTag.OPTIMAL:
        print(f"objective: {cls.objective:.10g}")
        if args.out:
            _write_vectors(args.out, x=cls.x, y=cls.y)
        return EXIT_OK
    if cls.tag is ClassTag.NEEDS_TIGHTER_ZETA:
        return EXIT_FAILURE
    return EXIT_OK


def _doubled_canonical(p: LoProblem) -> LoProblem:
    """``Ax = b`` written as ``Ax >= b, -Ax >= -b``."""
    return LoProblem(np.vstack([p.A, -p.A]), np.concatenate([p.b, -p.b]), p.c, FormTag.CANONICAL)


def cmd_solve(args) -> int:
    p, point = _read(args.instance)
    if p.form is FormTag.CANONICAL:
        return _solve_embedded(p, args)
    start = None
    if all(k in point for k in ("x", "y", "s")):
        start = Iterate(point["x"], point["y"], point["s"])
    model = StandardModel(p)
    params = _params(args, p.n)
    if start is None or not within_neighborhood(model, start, params.theta):
        print("no start in the neighborhood; using the self-dual embedding", file=sys.stderr)
        return _solve_embedded(_doubled_canonical(p), args)
    res = _solve(model, start, params, args)
    print(f"status: {res.status.value}")
    if res.status is not Status.OPTIMAL:
        print(res.message, file=sys.stderr)
        return EXIT_FAILURE
    it = res.iterate
    print(f"objective: {float(p.c @ it.x):.10g}")
    print(f"gap: {it.gap:.3e}")
    if args.out:
        _write_vectors(args.out, x=it.x, y=it.y, s=it.s)
    return EXIT_OK


def cmd_solve_canonical(args) -> int:
    p, _ = _read(args.instance)
    if p.form is not FormTag.CANONICAL:
        raise UsageError("solve-canonical expects a canonical instance")
    return _solve_embedded(p, args)


def cmd_generate(args) -> int:
    seed = resolve_seed(args.seed)
    try:
        if args.degenerate:
            p, start = generate_degenerate_standard(args.m, args.n, args.support, seed)
            instance_file.write(args.out, p, {"x": start.x, "y": start.y, "s": start.s})
        else:
            spec = GeneratorSpec(
                m_prime=args.m, n_prime=args.n, cond_A=args.cond, norm_A=args.norm,
                norm_b=args.norm if args.norm_b is None else args.norm_b,
                norm_c=args.norm if args.norm_c is None else args.norm_c, seed=seed,
            )
            p, _ = generate_instance(spec)
            instance_file.write(args.out, p)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    return EXIT_OK


def cmd_experiment(args) -> int:
    try:
        inst = GeneratorSpec(m_prime=args.m, n_prime=args.n, cond_A=args.cond,
                             norm_A=args.norm, norm_b=args.norm, norm_c=args.norm)
        spec = ExperimentSpec(
            kind=ExperimentKind(args.kind), instance=inst,
            grid=tuple(args.grid) if args.grid else None, replications=args.replications,
            seed=resolve_seed(args.seed), solver=args.solver, eta=args.eta, theta=args.theta,
            zeta=args.zeta, zeta_hat=args.zeta_hat, degenerate=args.degenerate, jobs=args.jobs,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    table = run_experiment(spec)
    with open(args.out, "w") as fh:
        table.to_csv(fh)
    failed = sum(1 for r in table.rows if r["status"] != Status.OPTIMAL.value)
    print(f"{len(table.rows)} rows written to {args.out} ({failed} not optimal)")
    return EXIT_OK


def cmd_diagnose(args) -> int:
    p, point = _read(args.instance)
    have_start = p.form is FormTag.STANDARD and all(k in point for k in ("x", "y", "s"))
    if have_start:
        model, start = StandardModel(p), Iterate(point["x"], point["y"], point["s"])
        have_start = within_neighborhood(model, start, args.theta)
    if have_start:
        std_problem, as_std, n = p, (lambda it: it), p.n
    else:
        sd = embed(p if p.form is FormTag.CANONICAL else _doubled_canonical(p))
        model, start, std_problem, as_std, n = sd, sd.start(), sd.embedded, to_standard, sd.n_pairs
    params = _params(args, n)
    basis = select_basis(std_problem)
    av = float(np.linalg.norm(std_problem.A @ basis.V, 2))
    print(f"||AV||: {av:.3e}")
    print(f"cond(A): {condition_diagnostics(std_problem.A).cond:.6e}")
    print(f"kappa_Q: {condition_diagnostics(constant_block_matrix(std_problem, basis)).cond:.6e}")
    rows = []

    def hook(k, it, sys_, rep):
        std_it = as_std(it)
        conds = [condition_diagnostics(
            assemble_comparison_system(kind, std_problem, std_it, params.beta).matrix).cond
            for kind in SystemKind]
        rows.append((k, it.mu, *conds))

    res = run_ifipm(model, start, params, _backend(args), on_step=hook)
    print(f"status: {res.status.value}  iterations: {res.iterations}")
    if rows:
        last = rows[-1]
        print("final cond: " + "  ".join(f"{k.value}={c:.3e}" for k, c in zip(SystemKind, last[2:])))
    if args.out:
        with open(args.out, "w") as fh:
            fh.write("k,mu," + ",".join(k.value for k in SystemKind) + "\n")
            for r in rows:
                fh.write(",".join([str(r[0])] + [repr(float(v)) for v in r[1:]]) + "\n")
    if args.trace_out:
        with open(args.trace_out, "w") as fh:
            res.trace.to_csv(fh)
    return EXIT_OK if res.status is Status.OPTIMAL else EXIT_FAILURE


_COMMANDS = {
    "solve": cmd_solve,
    "solve-canonical": cmd_solve_canonical,
    "generate": cmd_generate,
    "experiment": cmd_experiment,
    "diagnose": cmd_diagnose,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"ossipm: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
