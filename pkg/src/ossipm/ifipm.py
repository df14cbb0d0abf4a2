"""Short-step inexact-feasible interior point method.

Each iteration assembles the orthogonal-subspace system at the current
point, hands it to a linear-solver backend with the residual budget
``eta * mu``, and takes the full step.  Because the step is rebuilt from
null-space and row-space coordinates, primal and dual feasibility survive
any solver error; only the complementarity products see it.
"""

from __future__ import annotations

import csv
import dataclasses
import enum
import io
import math
from typing import Callable, Protocol

import numpy as np

from .lo_core import FEAS_TOL, Iterate, LoProblem, NeighborhoodParams, proximity
from .newton_systems import (
    NewtonDirection,
    OssSystem,
    SubspaceBasis,
    assemble_oss,
    recover_direction,
    select_basis,
)
from .solvers import SingularSystemError, SolveFn, SolveReport, SolverRequest

_norm = np.linalg.norm

TRACE_COLUMNS = ("k", "mu", "proximity", "residual", "cond_oss", "inner_iters",
                 "primal_res", "dual_res")


class Status(str, enum.Enum):
    OPTIMAL = "OptimalWithin"
    ITERATION_LIMIT = "IterationLimit"
    SOLVER_FAILURE = "SolverFailure"
    NEIGHBORHOOD_LOST = "NeighborhoodLost"


class PathModel(Protocol):
    """What the driver needs from a problem: pairs, feasibility, and the OSS."""

    @property
    def n_pairs(self) -> int: ...

    def feasibility(self, it) -> tuple[float, float]: ...

    def feasibility_scale(self) -> tuple[float, float]: ...

    def oss(self, it, beta: float) -> OssSystem: ...

    def step(self, it, sys: OssSystem, z: np.ndarray): ...


class StandardModel:
    """Standard-form problem with a fixed null-space basis."""

    def __init__(self, p: LoProblem, basis: SubspaceBasis | None = None):
        self.problem = p
        self.basis = basis if basis is not None else select_basis(p)

    @property
    def n_pairs(self) -> int:
        return self.problem.n

    def feasibility(self, it: Iterate) -> tuple[float, float]:
        p = self.problem
        return (float(_norm(p.A @ it.x - p.b)),
                float(_norm(p.A.T @ it.y + it.s - p.c)))

    def feasibility_scale(self) -> tuple[float, float]:
        return 1 + self.problem.norm_b, 1 + self.problem.norm_c

    def oss(self, it: Iterate, beta: float) -> OssSystem:
        return assemble_oss(self.problem, it, self.basis, beta)

    def step(self, it: Iterate, sys: OssSystem, z: np.ndarray) -> tuple[Iterate, NewtonDirection]:
        d = recover_direction(z, sys)
        return Iterate(it.x + d.dx, it.y + d.dy, it.s + d.ds), d

    def gap(self, it: Iterate) -> float:
        return it.gap

    def refine(self, it: Iterate, nabla: float, start: Iterate):
        from .refinement import build_refining_problem

        rp, warm = build_refining_problem(self.problem, it, nabla, start)
        return StandardModel(rp, self.basis), warm

    def compose(self, it: Iterate, hat: Iterate, nabla: float) -> Iterate:
        from .refinement import compose_solution

        return compose_solution(it, hat, nabla, self.problem)


def as_model(problem) -> PathModel:
    if isinstance(problem, LoProblem):
        return StandardModel(problem)
    return problem


def within_neighborhood(model: PathModel, it, theta: float, tol: float = FEAS_TOL) -> bool:
    a, b = it.pairs()
    if not (np.all(a > 0) and np.all(b > 0)):
        return False
    rp, rd = model.feasibility(it)
    sp, sd = model.feasibility_scale()
    if rp > tol * sp or rd > tol * sd:
        return False
    return proximity(it) <= theta


def step_gap_bounds(x: np.ndarray, s: np.ndarray, dx: np.ndarray, ds: np.ndarray,
                    beta: float, eta: float) -> tuple[float, float, float]:
    """``(lower, value, upper)`` for the post-step complementarity ``(x+dx)^T(s+ds)``."""
    n = x.size
    xs = float(x @ s)
    value = float((x + dx) @ (s + ds))
    return (beta - eta / math.sqrt(n)) * xs, value, (beta + eta / math.sqrt(n)) * xs


def check_step_gap(it, direction, params: NeighborhoodParams, rtol: float = 1e-12) -> bool:
    """True iff the step's complementarity lies in ``[(beta -+ eta/sqrt(n)) x^T s]``."""
    x, s = it.pairs()
    dx, ds = direction.pairs()
    lo, val, hi = step_gap_bounds(x, s, dx, ds, params.beta, params.eta)
    slack = rtol * abs(float(x @ s))
    return lo - slack <= val <= hi + slack


@dataclasses.dataclass(frozen=True)
class TraceRecord:
    k: int
    mu: float
    proximity: float
    residual: float
    cond_oss: float
    inner_iters: int
    primal_res: float
    dual_res: float
    gap_ok: bool = True
    residual_target: float = math.nan


@dataclasses.dataclass
class IpmTrace:
    records: list[TraceRecord] = dataclasses.field(default_factory=list)

    def __len__(self) -> int:
        return len(self.records)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records])

    def to_csv(self, fh=None) -> str | None:
        out = fh if fh is not None else io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        w.writerow(TRACE_COLUMNS)
        for r in self.records:
            w.writerow([r.k, *(repr(float(getattr(r, c))) for c in TRACE_COLUMNS[1:5]),
                        r.inner_iters, repr(float(r.primal_res)), repr(float(r.dual_res))])
        return out.getvalue() if fh is None else None


@dataclasses.dataclass
class IpmResult:
    iterate: object
    status: Status
    trace: IpmTrace
    mu0: float
    zeta: float
    final_primal_res: float = math.nan
    final_dual_res: float = math.nan
    message: str = ""

    @property
    def iterations(self) -> int:
        return len(self.trace)

    @property
    def mu(self) -> float:
        return self.iterate.mu

    def mu_history(self) -> np.ndarray:
        return np.append(self.trace.column("mu"), self.iterate.mu)


def iteration_bound(n: int, mu0: float, zeta: float) -> int:
    """Worst-case count ``ceil(sqrt(n)/0.01 * ln(mu0/zeta))``."""
    if mu0 <= zeta:
        return 0
    return math.ceil(math.sqrt(n) / 0.01 * math.log(mu0 / zeta))


StepHook = Callable[[int, object, OssSystem, SolveReport], None]


def run_ifipm(problem, start, params: NeighborhoodParams, backend: SolveFn, *,
              zeta: float | None = None, max_iters: int | None = None,
              on_step: StepHook | None = None, enforce_neighborhood: bool = True
              ) -> IpmResult:
    """Drive ``mu`` below ``zeta`` with full inexact-feasible Newton steps.

    Args:
      problem: A standard-form :class:`LoProblem` or any path model (for
        example a self-dual embedding).
      start: Starting point in the theta-neighborhood.
      params: theta, eta, beta and the default target ``zeta``.
      backend: Callable turning a :class:`SolverRequest` into a report.
      zeta: Overrides ``params.zeta``.
      max_iters: Overrides the default cap of ten times the worst-case bound.
      on_step: Called as ``on_step(k, iterate, system, report)`` before each
        step is applied.
      enforce_neighborhood: When False, later iterates only have to stay
        strictly positive and feasible; the start must still lie in the
        neighborhood.  Used by experiments that push ``eta`` past the range
        the convergence analysis covers.

    Raises:
      ValueError: If ``start`` is not in the neighborhood.
    """
    model = as_model(problem)
    zeta = params.zeta if zeta is None else zeta
    n = model.n_pairs
    if not within_neighborhood(model, start, params.theta):
        raise ValueError("starting point is not in the theta-neighborhood of the central path")
    mu0 = start.mu
    if max_iters is None:
        max_iters = 10 * max(iteration_bound(n, mu0, zeta), 1)
    trace = IpmTrace()
    it = start
    status = Status.OPTIMAL
    message = ""
    k = 0
    while it.mu > zeta:
        if k >= max_iters:
            status, message = Status.ITERATION_LIMIT, f"hit cap of {max_iters} iterations"
            break
        mu = it.mu
        sys = model.oss(it, params.beta)
        sv = np.linalg.svd(sys.M, compute_uv=False)
        norm_M = float(sv[0])
        cond = norm_M / float(sv[-1]) if sv[-1] > 0 else math.inf
        req = SolverRequest.from_eta(sys.M, sys.sigma, params.eta, mu, norm_M)
        try:
            rep = backend(req)
        except SingularSystemError as exc:
            status, message = Status.SOLVER_FAILURE, str(exc)
            break
        if not rep.converged or rep.achieved_residual > req.residual_target:
            status = Status.SOLVER_FAILURE
            message = (f"residual {rep.achieved_residual:.3e} exceeds budget "
                       f"{req.residual_target:.3e} (converged={rep.converged})")
            break
        if on_step is not None:
            on_step(k, it, sys, rep)
        nxt, direction = model.step(it, sys, rep.z)
        rp, rd = model.feasibility(it)
        trace.records.append(TraceRecord(
            k=k, mu=mu, proximity=proximity(it), residual=rep.achieved_residual,
            cond_oss=cond, inner_iters=rep.inner_iterations, primal_res=rp,
            dual_res=rd, gap_ok=check_step_gap(it, direction, params),
            residual_target=req.residual_target,
        ))
        it = nxt
        k += 1
        theta = params.theta if enforce_neighborhood else math.inf
        if not within_neighborhood(model, it, theta):
            status = Status.NEIGHBORHOOD_LOST
            message = f"iterate {k} left the theta-neighborhood"
            break
    rp, rd = model.feasibility(it)
    return IpmResult(iterate=it, status=status, trace=trace, mu0=mu0, zeta=zeta,
                     final_primal_res=rp, final_dual_res=rd, message=message)
