"""Acceptance checks 1 to 10.

Run ``python3 tests/test_acceptance.py`` for one PASS/FAIL line per criterion,
or ``pytest tests/test_acceptance.py -s`` to see the same lines under pytest.
"""

import functools
import math
import sys

import numpy as np
import pytest

from ossipm.experiments import ExperimentSpec, fitted_slope, run_experiment
from ossipm.ifipm import Status, iteration_bound, run_ifipm
from ossipm.lo_core import (
    FormTag,
    GeneratorSpec,
    Iterate,
    LoProblem,
    NeighborhoodParams,
    canonical_point_to_standard,
    canonical_to_standard,
    generate_degenerate_standard,
    generate_instance,
    parameter_conditions,
    proximity,
)
from ossipm.newton_systems import (
    SystemKind,
    assemble_comparison_system,
    assemble_oss,
    condition_diagnostics,
    recover_direction,
    select_basis,
)
from ossipm.refinement import run_ir
from ossipm.self_dual import (
    ClassTag,
    SelfDualIterate,
    assemble_selfdual_oss,
    check_selfdual_orthogonality,
    classify,
    embed,
    recover_selfdual_direction,
)
from ossipm.solvers import SolverRequest, make_backend

SEEDS = range(20)
BACKENDS = ("lu", "noisy", "cgnr")


def report(number: int, title: str, ok: bool, detail: str) -> bool:
    print(f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {title}: {detail}")
    return ok


@functools.lru_cache(maxsize=None)
def instance(seed: int):
    p, planted = generate_instance(GeneratorSpec(seed=seed))
    return p, planted, embed(p)


@functools.lru_cache(maxsize=None)
def solve(seed: int, backend: str):
    _, _, sd = instance(seed)
    params = NeighborhoodParams.for_dimension(sd.n_pairs)
    return sd, params, run_ifipm(sd, sd.start(), params, make_backend(backend, seed=seed))


def criterion_1() -> bool:
    worst_ratio, worst_iters, ok = 0.0, 0.0, True
    for seed in SEEDS:
        for b in BACKENDS:
            sd, params, res = solve(seed, b)
            mu = res.mu_history()
            rate = 1 - 0.01 / math.sqrt(sd.n_pairs)
            ok &= res.status is Status.OPTIMAL
            ok &= bool(np.all(mu[1:] <= rate * mu[:-1] + 1e-12 * mu[:-1]))
            worst_ratio = max(worst_ratio, float(np.max(mu[1:] / mu[:-1])))
            bound = iteration_bound(sd.n_pairs, res.mu0, params.zeta)
            ok &= res.iterations <= bound
            worst_iters = max(worst_iters, res.iterations / bound)
    return report(1, "gap contraction", ok,
                  f"max mu ratio {worst_ratio:.5f}, max iterations/bound {worst_iters:.3f}")


def criterion_2() -> bool:
    worst = 0.0
    for seed in SEEDS:
        sd, _, res = solve(seed, "noisy")
        scale = 1 + np.linalg.norm(sd.q)
        r = max(res.trace.column("primal_res").max(), res.trace.column("dual_res").max(),
                res.final_primal_res, res.final_dual_res)
        worst = max(worst, float(r / scale))
    return report(2, "feasibility under noise", worst <= 1e-8,
                  f"max scaled residual {worst:.2e}")


def criterion_3() -> bool:
    worst = 0.0
    for seed in SEEDS:
        for b in ("noisy", "cgnr"):
            _, params, res = solve(seed, b)
            ratio = res.trace.column("residual") / (params.eta * res.trace.column("mu"))
            worst = max(worst, float(ratio.max()))
    return report(3, "residual contract", worst <= 1.0, f"max ||r||/(eta mu) {worst:.4f}")


def _random_standard_iterates(p, planted, rng, count):
    """Random interior feasible points of the standard form around the planted pair."""
    q = canonical_to_standard(p)
    base = canonical_point_to_standard(p, planted.x, planted.y)
    V = select_basis(q).V
    out = []
    for _ in range(count):
        dx = V @ rng.standard_normal(V.shape[1])
        dy = rng.standard_normal(q.m)
        ds = -q.A.T @ dy
        tx = 0.5 / max(1e-300, np.max(-dx / base.x))
        ts = 0.5 / max(1e-300, np.max(-ds / base.s))
        out.append(Iterate(base.x + min(1.0, tx) * dx, base.y + min(1.0, ts) * dy,
                           base.s + min(1.0, ts) * ds))
    return q, out


def _fns_dense(A, it, beta):
    m, n = A.shape
    K = np.block([
        [np.zeros((m, m)), A, np.zeros((m, n))],
        [A.T, np.zeros((n, n)), np.eye(n)],
        [np.zeros((n, m)), np.diag(it.s), np.diag(it.x)],
    ])
    rhs = np.concatenate([np.zeros(m + n), beta * it.mu - it.x * it.s])
    sol = np.linalg.solve(K, rhs)
    return sol[m:m + n], sol[:m], sol[m + n:]


def _random_selfdual_iterates(sd, rng, count):
    out = []
    z0, w0 = sd.start().z, sd.start().w
    for _ in range(count):
        lam = rng.standard_normal(sd.n_pairs)
        dw = sd.K @ lam
        t = 0.5 / max(np.max(lam / z0), np.max(-dw / w0), 1e-300)
        out.append(SelfDualIterate(z0 - min(1.0, t) * lam, w0 + min(1.0, t) * dw,
                                   sd.m_prime, sd.n_prime))
    return out


def _selfdual_dense(sd, it, beta):
    mat = np.diag(it.z) @ sd.K + np.diag(it.w)
    dz = np.linalg.solve(mat, beta * it.mu - it.z * it.w)
    return dz, sd.K @ dz


def criterion_4() -> bool:
    worst = 0.0
    beta = 0.9
    for seed in SEEDS:
        p, planted, sd = instance(seed)
        rng = np.random.default_rng(1000 + seed)
        q, its = _random_standard_iterates(p, planted, rng, 10)
        basis = select_basis(q)
        for it in its:
            sys_ = assemble_oss(q, it, basis, beta)
            d = recover_direction(np.linalg.solve(sys_.M, sys_.sigma), sys_)
            for got, want in zip((d.dx, d.dy, d.ds), _fns_dense(q.A, it, beta)):
                worst = max(worst, np.linalg.norm(got - want) / max(1.0, np.linalg.norm(want)))
        for it in _random_selfdual_iterates(sd, rng, 10):
            sys_ = assemble_selfdual_oss(sd, it, beta)
            d = recover_selfdual_direction(np.linalg.solve(sys_.M, sys_.sigma), sys_, sd)
            for got, want in zip((d.dz, d.dw), _selfdual_dense(sd, it, beta)):
                worst = max(worst, np.linalg.norm(got - want) / max(1.0, np.linalg.norm(want)))
    return report(4, "OSS matches full Newton system", worst <= 1e-8,
                  f"max relative difference {worst:.2e}")


def criterion_5() -> bool:
    av = dot = 0.0
    beta = 0.9
    for seed in SEEDS:
        p, planted, sd = instance(seed)
        rng = np.random.default_rng(2000 + seed)
        q, its = _random_standard_iterates(p, planted, rng, 3)
        for A, V in ((q.A, select_basis(q).V), (sd.A_embedded, sd.V_closed)):
            av = max(av, np.linalg.norm(A @ V, 2) / (np.linalg.norm(A, 2) * np.linalg.norm(V, 2)))
        basis = select_basis(q)
        noisy = make_backend("noisy", seed=seed)
        for it in its:
            sys_ = assemble_oss(q, it, basis, beta)
            exact = np.linalg.solve(sys_.M, sys_.sigma)
            perturbed = exact + 1e-3 * rng.standard_normal(exact.size)
            for z in (exact, perturbed, rng.standard_normal(exact.size)):
                d = recover_direction(z, sys_)
                dot = max(dot, abs(d.dx @ d.ds) / (np.linalg.norm(d.dx) * np.linalg.norm(d.ds)))
        for it in _random_selfdual_iterates(sd, rng, 3):
            sys_ = assemble_selfdual_oss(sd, it, beta)
            exact = np.linalg.solve(sys_.M, sys_.sigma)
            req = SolverRequest.from_eta(sys_.M, sys_.sigma, 0.1, it.mu)
            for z in (exact, noisy(req).z):
                d = recover_selfdual_direction(z, sys_, sd)
                val = check_selfdual_orthogonality(d)
                dot = max(dot, abs(val) / (np.linalg.norm(d.dz) * np.linalg.norm(d.dw)))
    ok = av <= 1e-12 and dot <= 1e-10
    return report(5, "orthogonality", ok, f"max ||AV|| rel {av:.1e}, max |dx.ds| rel {dot:.1e}")


TOY = LoProblem([[1.0, 1.0]], [1.0], [1.0, 0.0], FormTag.CANONICAL)


def criterion_6() -> bool:
    ok = True
    for seed in SEEDS:
        start = instance(seed)[2].start()
        ok &= proximity(start) == 0.0 and start.mu == 1.0
    sd = embed(TOY)
    params = NeighborhoodParams.for_dimension(sd.n_pairs)
    res = run_ifipm(sd, sd.start(), params, make_backend("noisy", seed=0))
    cls = classify(res.iterate, sd)
    ok &= res.status is Status.OPTIMAL and cls.tag is ClassTag.OPTIMAL
    obj = cls.objective if cls.objective is not None else math.inf
    ok &= abs(obj) <= 1e-4
    return report(6, "self-dual start and toy classification", ok,
                  f"class {cls.tag.value}, objective {obj:.2e}")


def criterion_7() -> bool:
    ok, rounds_used, worst = True, 0, 0.0
    for seed in range(5):
        for b in BACKENDS:
            _, _, sd = instance(seed)
            params = NeighborhoodParams.for_dimension(sd.n_pairs, zeta=1e-6, zeta_hat=1e-2)
            res = run_ir(sd, sd.start(), params, make_backend(b, seed=seed))
            ok &= res.status is Status.OPTIMAL and res.gap <= params.zeta
            ok &= len(res.rounds) <= 3
            rounds_used = max(rounds_used, len(res.rounds))
            for k, r in enumerate(res.rounds):
                ok &= r.gap <= params.zeta_hat / r.nabla ** 2 + 1e-12
                ok &= r.nabla >= (1 / params.zeta_hat) ** k * (1 - 1e-12)
                worst = max(worst, r.gap * r.nabla ** 2 / params.zeta_hat)
    return report(7, "iterative refinement", ok,
                  f"max rounds {rounds_used}, max gap*nabla^2/zeta_hat {worst:.3f}")


def _degenerate_slopes(seed: int):
    p, start = generate_degenerate_standard(seed=seed)
    params = NeighborhoodParams.for_dimension(p.n, zeta=1e-8)
    mus, conds = [], {SystemKind.OSS: [], SystemKind.NES: []}

    def hook(k, it, sys_, rep):
        mus.append(it.mu)
        for kind in conds:
            m = assemble_comparison_system(kind, p, it, params.beta).matrix
            conds[kind].append(condition_diagnostics(m).cond)

    run_ifipm(p, start, params, make_backend("lu"), on_step=hook)
    inv = 1 / np.array(mus)
    return {k.value: fitted_slope(inv, np.array(v)) for k, v in conds.items()}


def criterion_8() -> bool:
    ok, seen = True, []
    for seed in range(3):
        s = _degenerate_slopes(seed)
        ok &= 0.7 <= s["OSS"] <= 1.3 and 1.5 <= s["NES"] <= 2.5
        seen.append(f"OSS {s['OSS']:.2f}/NES {s['NES']:.2f}")
    return report(8, "condition-number slopes", ok, ", ".join(seen))


def criterion_9() -> bool:
    table = run_experiment(ExperimentSpec("eta-sweep", replications=5, solver="noisy"))
    med = dict(table.summary())
    seq = [med[g] for g in table.spec.grid]
    monotone = all(b >= a for a, b in zip(seq, seq[1:]))
    ratio = med[0.7] / med[0.1]
    ok = monotone and ratio <= 2
    return report(9, "eta sweep", ok,
                  f"medians {[int(v) for v in seq]}, non-decreasing {monotone}, "
                  f"ratio(0.7/0.1) {ratio:.3f}")


def criterion_10() -> bool:
    ns = list(range(1, 10001)) + [10**5, 10**6, 10**7, 10**9]
    accepted = all(parameter_conditions(0.2, 0.1, 1 - 0.11 / math.sqrt(n), n).ok() for n in ns)
    rejected = not parameter_conditions(0.2, 0.5, 1 - 0.11 / math.sqrt(100), 100).ok()
    steps = bad = 0
    for seed in SEEDS:
        for b in BACKENDS:
            flags = solve(seed, b)[2].trace.column("gap_ok")
            steps += len(flags)
            bad += int(np.sum(~flags.astype(bool)))
    ok = accepted and rejected and bad == 0
    return report(10, "parameter validator and step interval", ok,
                  f"defaults accepted {accepted}, (0.5, 0.2) rejected {rejected}, "
                  f"{bad}/{steps} steps outside interval")


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5,
            criterion_6, criterion_7, criterion_8, criterion_9, criterion_10]


@pytest.mark.parametrize("criterion", CRITERIA, ids=lambda f: f.__name__)
def test_acceptance(criterion):
    assert criterion()


if __name__ == "__main__":
    results = [c() for c in CRITERIA]
    print(f"{sum(results)}/{len(results)} criteria pass")
    sys.exit(0 if all(results) else 1)
