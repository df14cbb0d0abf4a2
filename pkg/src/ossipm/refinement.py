"""Iterative refinement around a fixed-precision inner IPM.

Given a feasible point ``(x, y, s)`` with gap ``x^T s``, the scaled
refining problem ``min nabla s^T x'  s.t. A x' = nabla b, x' >= 0`` (dual
``A^T y' + s' = nabla s``) is solved to gap ``zeta_hat`` and folded back via
``x_r = x + (x' - nabla x)/nabla``, ``y_r = y + y'/nabla``, ``s_r = c - A^T y_r``.
The composed gap is at most ``zeta_hat / nabla^2``, so with ``nabla = 1/x^T s``
the gap squares (times ``zeta_hat``) every round.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import math

import numpy as np

from .ifipm import IpmResult, Status, as_model, run_ifipm
from .lo_core import FEAS_TOL, Iterate, LoProblem, NeighborhoodParams
from .solvers import SolveFn

_norm = np.linalg.norm

ROUND_COLUMNS = ("round", "nabla", "gap", "inner_iters", "max_cond")


class RefinementError(RuntimeError):
    pass


def build_refining_problem(p: LoProblem, it: Iterate, nabla: float, start: Iterate,
                           tol: float = FEAS_TOL) -> tuple[LoProblem, Iterate]:
    """Refining instance ``(A, nabla*b, nabla*s)`` and its warm start.

    The warm start ``(nabla x0, nabla (y0 - y), nabla s0)`` is strictly feasible
    and has the same proximity as ``start``.
    """
    rp = _norm(p.A @ it.x - p.b)
    rd = _norm(p.A.T @ it.y + it.s - p.c)
    if rp > tol * (1 + p.norm_b) or rd > tol * (1 + p.norm_c):
        raise ValueError("iterate is not feasible for the problem")
    refined = LoProblem(p.A, nabla * p.b, nabla * it.s, p.form)
    warm = Iterate(nabla * start.x, nabla * (start.y - it.y), nabla * start.s)
    return refined, warm


def compose_solution(it: Iterate, hat: Iterate, nabla: float, p: LoProblem,
                     tol: float = 1e-10) -> Iterate:
    """Fold a refining solution back into the original problem.

    Raises:
      RefinementError: If the composed dual slack is negative beyond ``tol``.
    """
    x_hat = hat.x - nabla * it.x
    x_r = it.x + x_hat / nabla
    y_r = it.y + hat.y / nabla
    s_r = p.c - p.A.T @ y_r
    if np.any(s_r < -tol * (1 + p.norm_c)) or np.any(x_r < -tol * (1 + _norm(it.x))):
        raise RefinementError("composed point is not nonnegative; inner solve was too inexact")
    return Iterate(x_r, y_r, s_r)


@dataclasses.dataclass(frozen=True)
class RoundRecord:
    round: int
    nabla: float
    gap: float
    inner_iters: int
    max_cond: float
    first_cond: float
    primal_res: float
    dual_res: float


@dataclasses.dataclass
class RefinementResult:
    iterate: object
    status: Status
    rounds: list[RoundRecord]
    inner: list[IpmResult]
    message: str = ""

    @property
    def gap(self) -> float:
        x, s = self.iterate.pairs()
        return float(x @ s)

    def to_csv(self, fh=None) -> str | None:
        out = fh if fh is not None else io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        w.writerow(ROUND_COLUMNS)
        for r in self.rounds:
            w.writerow([r.round, repr(float(r.nabla)), repr(float(r.gap)), r.inner_iters,
                        repr(float(r.max_cond))])
        return out.getvalue() if fh is None else None


def max_rounds(zeta: float, zeta_hat: float) -> int:
    return math.ceil(math.log(zeta) / math.log(zeta_hat)) + 1


def run_ir(problem, start, params: NeighborhoodParams, backend: SolveFn) -> RefinementResult:
    """Refine until the gap ``x^T s`` is at most ``params.zeta``.

    Every inner solve stops at gap ``params.zeta_hat``.  The round cap is
    ``ceil(log zeta / log zeta_hat) + 1``; a round whose gap does not shrink
    by at least ``2*zeta_hat`` aborts the loop.
    """
    model = as_model(problem)
    zeta, zeta_hat = params.zeta, params.zeta_hat
    n = model.n_pairs
    cap = max_rounds(zeta, zeta_hat)
    rounds: list[RoundRecord] = []
    inner: list[IpmResult] = []

    def _inner(m, warm) -> IpmResult:
        res = run_ifipm(m, warm, params, backend, zeta=zeta_hat / n)
        inner.append(res)
        return res

    res = _inner(model, start)
    it = res.iterate
    nabla = 1.0
    if res.status is not Status.OPTIMAL:
        return RefinementResult(it, res.status, rounds, inner, res.message)
    rounds.append(_round_record(0, nabla, model, it, res))
    status, message = Status.OPTIMAL, ""
    k = 0
    while model.gap(it) > zeta:
        k += 1
        if k >= cap:
            status, message = Status.ITERATION_LIMIT, f"round cap {cap} reached"
            break
        prev_gap = model.gap(it)
        nabla = 1.0 / prev_gap
        refined, warm = model.refine(it, nabla, start)
        res = _inner(refined, warm)
        if res.status is not Status.OPTIMAL:
            status, message = res.status, f"round {k}: {res.message}"
            break
        try:
            it = model.compose(it, res.iterate, nabla)
        except RefinementError as exc:
            status, message = Status.SOLVER_FAILURE, f"round {k}: {exc}"
            break
        rounds.append(_round_record(k, nabla, model, it, res))
        if model.gap(it) > 2 * zeta_hat * prev_gap:
            status = Status.SOLVER_FAILURE
            message = f"round {k}: gap {model.gap(it):.3e} did not shrink from {prev_gap:.3e}"
            break
    return RefinementResult(it, status, rounds, inner, message)


def _round_record(k: int, nabla: float, model, it, res: IpmResult) -> RoundRecord:
    conds = res.trace.column("cond_oss")
    rp, rd = model.feasibility(it)
    return RoundRecord(
        round=k, nabla=nabla, gap=model.gap(it), inner_iters=res.iterations,
        max_cond=float(conds.max()) if conds.size else math.nan,
        first_cond=float(conds[0]) if conds.size else math.nan,
        primal_res=rp, dual_res=rd,
    )
