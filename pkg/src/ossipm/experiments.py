"""Parameter sweeps over generated instances, emitted as CSV tables.

Every row carries the resolved parameter set so a table can be audited on
its own.  Output is deterministic for a given spec: replication ``r`` uses
seed ``spec.seed + r`` both for the instance and for the noisy solver, and
rows are sorted by grid key before writing.
"""

from __future__ import annotations

import concurrent.futures
import csv
import dataclasses
import enum
import io
import statistics

import numpy as np

from .ifipm import run_ifipm
from .lo_core import GeneratorSpec, NeighborhoodParams, generate_degenerate_standard, generate_instance
from .newton_systems import SystemKind, assemble_comparison_system, condition_diagnostics
from .refinement import run_ir
from .self_dual import embed, to_standard
from .solvers import make_backend

COLUMNS = (
    "kind", "grid_value", "replication", "seed", "round", "k", "system", "value",
    "status", "iterations", "m_prime", "n_prime", "cond_A", "norm_A", "norm_b",
    "norm_c", "eta", "theta", "zeta", "zeta_hat", "solver",
)


class ExperimentKind(str, enum.Enum):
    ETA_SWEEP = "eta-sweep"
    COND_VS_MIN_SING = "cond-vs-min-sing"
    COND_VS_NORM_A = "cond-vs-norm-a"
    COND_VS_NORM_B = "cond-vs-norm-b"
    COND_VS_PRECISION = "cond-vs-precision"
    SYSTEM_COMPARISON = "system-comparison"
    IR_CONDITION_RESET = "ir-condition-reset"


DEFAULT_GRIDS = {
    ExperimentKind.ETA_SWEEP: (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9),
    ExperimentKind.COND_VS_MIN_SING: (2.0, 4.0, 8.0, 16.0),
    ExperimentKind.COND_VS_NORM_A: (1.0, 2.0, 4.0, 8.0),
    ExperimentKind.COND_VS_NORM_B: (1.0, 2.0, 4.0, 8.0),
    ExperimentKind.COND_VS_PRECISION: (1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8),
    ExperimentKind.SYSTEM_COMPARISON: (4.0, 1e3),
    ExperimentKind.IR_CONDITION_RESET: (1e-6,),
}

# Grid semantics: which field a grid value overrides.
_GRID_FIELD = {
    ExperimentKind.ETA_SWEEP: "eta",
    ExperimentKind.COND_VS_MIN_SING: "cond_A",
    ExperimentKind.COND_VS_NORM_A: "norm_A",
    ExperimentKind.COND_VS_NORM_B: "norm_b",
    ExperimentKind.COND_VS_PRECISION: "zeta",
    ExperimentKind.SYSTEM_COMPARISON: "cond_A",
    ExperimentKind.IR_CONDITION_RESET: "zeta",
}


@dataclasses.dataclass(frozen=True)
class ExperimentSpec:
    """One sweep.

    ``degenerate`` switches SystemComparison to the primal-degenerate
    standard-form family; its grid values are then the optimal support sizes.
    """

    kind: ExperimentKind
    instance: GeneratorSpec = GeneratorSpec()
    grid: tuple[float, ...] | None = None
    replications: int = 5
    seed: int = 0
    solver: str = "noisy"
    eta: float = 0.1
    theta: float = 0.2
    zeta: float = 1e-6
    zeta_hat: float = 1e-2
    degenerate: bool = False
    jobs: int = 1

    def __post_init__(self):
        object.__setattr__(self, "kind", ExperimentKind(self.kind))
        grid = DEFAULT_GRIDS[self.kind] if self.grid is None else tuple(float(g) for g in self.grid)
        object.__setattr__(self, "grid", grid)
        if not grid:
            raise ValueError("grid must not be empty")
        d = np.diff(grid)
        if not (np.all(d > 0) or np.all(d < 0)):
            raise ValueError("grid must be strictly monotone")
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        if self.jobs < 1:
            raise ValueError("jobs must be >= 1")


@dataclasses.dataclass(frozen=True)
class _Point:
    """Fully resolved settings for one (grid value, replication) run."""

    kind: ExperimentKind
    grid_value: float
    replication: int
    seed: int
    instance: GeneratorSpec
    eta: float
    theta: float
    zeta: float
    zeta_hat: float
    solver: str
    degenerate: bool

    def base_row(self) -> dict:
        g = self.instance
        return {
            "kind": self.kind.value, "grid_value": repr(self.grid_value),
            "replication": self.replication, "seed": self.seed, "round": "", "k": "",
            "system": "", "value": "", "status": "", "iterations": "",
            "m_prime": g.m_prime, "n_prime": g.n_prime, "cond_A": repr(g.cond_A),
            "norm_A": repr(g.norm_A), "norm_b": repr(g.norm_b), "norm_c": repr(g.norm_c),
            "eta": repr(self.eta), "theta": repr(self.theta), "zeta": repr(self.zeta),
            "zeta_hat": repr(self.zeta_hat), "solver": self.solver,
        }


def resolve_points(spec: ExperimentSpec) -> list[_Point]:
    field = _GRID_FIELD[spec.kind]
    points = []
    for g in spec.grid:
        for r in range(spec.replications):
            seed = spec.seed + r
            inst = dataclasses.replace(spec.instance, seed=seed)
            kw = dict(eta=spec.eta, theta=spec.theta, zeta=spec.zeta)
            if field in kw:
                kw[field] = g
            elif not (spec.degenerate and spec.kind is ExperimentKind.SYSTEM_COMPARISON):
                inst = dataclasses.replace(inst, **{field: g})
            points.append(_Point(spec.kind, g, r, seed, inst, zeta_hat=spec.zeta_hat,
                                 solver=spec.solver, degenerate=spec.degenerate, **kw))
    return points


def _params(pt: _Point, n: int) -> NeighborhoodParams:
    return NeighborhoodParams.for_dimension(n, theta=pt.theta, eta=pt.eta, zeta=pt.zeta,
                                            zeta_hat=pt.zeta_hat)


def _run_point(pt: _Point) -> list[dict]:
    try:
        return _dispatch(pt)
    except (ArithmeticError, ValueError, np.linalg.LinAlgError) as exc:
        row = pt.base_row()
        row["status"] = f"Error: {type(exc).__name__}: {exc}"
        return [row]


def _dispatch(pt: _Point) -> list[dict]:
    backend = make_backend(pt.solver, seed=pt.seed)
    kind = pt.kind
    if kind is ExperimentKind.SYSTEM_COMPARISON:
        return _system_comparison(pt, backend)
    p, _ = generate_instance(pt.instance)
    sd = embed(p)
    params = _params(pt, sd.n_pairs)
    if kind is ExperimentKind.IR_CONDITION_RESET:
        return _ir_reset(pt, sd, params, backend)
    # Large eta is allowed to leave the theta-neighborhood; only positivity
    # is required so the iteration count stays meaningful across the sweep.
    res = run_ifipm(sd, sd.start(), params, backend,
                    enforce_neighborhood=kind is not ExperimentKind.ETA_SWEEP)
    row = pt.base_row()
    row.update(status=res.status.value, iterations=res.iterations)
    if kind is ExperimentKind.ETA_SWEEP:
        row.update(system="OSS", value=res.iterations)
    else:
        conds = res.trace.column("cond_oss")
        row.update(system="OSS", value=repr(float(conds.max())) if conds.size else "")
    return [row]


def _system_comparison(pt: _Point, backend) -> list[dict]:
    """Per-iteration condition numbers of FNS, AS, NES and OSS along one trajectory."""
    if pt.degenerate:
        m, n = pt.instance.m_prime, pt.instance.n_prime
        prob, start = generate_degenerate_standard(m, n, int(pt.grid_value), pt.seed)
        model, std_problem, as_std = prob, prob, (lambda it: it)
        params = _params(pt, prob.n)
    else:
        p, _ = generate_instance(pt.instance)
        sd = embed(p)
        model, start, std_problem, as_std = sd, sd.start(), sd.embedded, to_standard
        params = _params(pt, sd.n_pairs)
    rows: list[dict] = []

    def hook(k, it, sys, rep):
        std_it = as_std(it)
        for kind in SystemKind:
            cs = assemble_comparison_system(kind, std_problem, std_it, params.beta)
            row = pt.base_row()
            row.update(k=k, system=kind.value, round=0,
                       value=repr(condition_diagnostics(cs.matrix).cond))
            rows.append(row)

    res = run_ifipm(model, start, params, backend, on_step=hook)
    for row in rows:
        row.update(status=res.status.value, iterations=res.iterations)
    return rows


def _ir_reset(pt: _Point, sd, params: NeighborhoodParams, backend) -> list[dict]:
    """OSS condition per iteration for refinement rounds and for one direct run.

    The direct run targets the same total gap as the refinement loop.
    """
    rows: list[dict] = []
    ir = run_ir(sd, sd.start(), params, backend)
    k = 0
    for rnd, inner in enumerate(ir.inner):
        for c in inner.trace.column("cond_oss"):
            row = pt.base_row()
            row.update(round=rnd, k=k, system="IR", value=repr(float(c)),
                       status=ir.status.value, iterations=sum(r.iterations for r in ir.inner))
            rows.append(row)
            k += 1
    direct = run_ifipm(sd, sd.start(), params, make_backend(pt.solver, seed=pt.seed),
                       zeta=params.zeta / sd.n_pairs)
    for k, c in enumerate(direct.trace.column("cond_oss")):
        row = pt.base_row()
        row.update(round=0, k=k, system="direct", value=repr(float(c)),
                   status=direct.status.value, iterations=direct.iterations)
        rows.append(row)
    return rows


@dataclasses.dataclass
class ExperimentTable:
    spec: ExperimentSpec
    rows: list[dict]

    def to_csv(self, fh=None) -> str | None:
        out = fh if fh is not None else io.StringIO()
        w = csv.DictWriter(out, fieldnames=COLUMNS, lineterminator="\n")
        w.writeheader()
        w.writerows(self.rows)
        return out.getvalue() if fh is None else None

    def values(self, grid_value: float, system: str | None = None) -> list[float]:
        """Measured values at one grid point, skipping failed rows."""
        out = []
        for r in self.rows:
            if float(r["grid_value"]) != grid_value or r["value"] == "":
                continue
            if system is not None and r["system"] != system:
                continue
            out.append(float(r["value"]))
        return out

    def summary(self) -> list[tuple[float, float]]:
        """Median value per grid point for the scalar kinds."""
        if self.spec.kind in (ExperimentKind.SYSTEM_COMPARISON, ExperimentKind.IR_CONDITION_RESET):
            raise ValueError("summary is defined for scalar sweeps only")
        out = []
        for g in self.spec.grid:
            v = self.values(g)
            out.append((g, statistics.median(v) if v else float("nan")))
        return out


def run_experiment(spec: ExperimentSpec) -> ExperimentTable:
    points = resolve_points(spec)
    if spec.jobs > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=spec.jobs) as ex:
            results = list(ex.map(_run_point, points))
    else:
        results = [_run_point(pt) for pt in points]
    order = {g: i for i, g in enumerate(spec.grid)}
    keyed = sorted(zip(points, results), key=lambda t: (order[t[0].grid_value], t[0].replication))
    rows = [row for _, rs in keyed for row in rs]
    return ExperimentTable(spec, rows)


def fitted_slope(x: np.ndarray, y: np.ndarray) -> float:
    """Least-squares slope of ``log y`` against ``log x``."""
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])
