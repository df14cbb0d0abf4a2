import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ossipm.lo_core import Iterate, LoProblem, generate_degenerate_standard
from ossipm.newton_systems import (
    RankDeficientError,
    SystemKind,
    assemble_comparison_system,
    assemble_oss,
    condition_diagnostics,
    constant_block_matrix,
    direction_from_comparison,
    recover_direction,
    select_basis,
)


def random_instance(rng, m=4, n=12):
    """Random full-row-rank A with a strictly feasible interior point."""
    A = rng.standard_normal((m, n))
    x = rng.uniform(0.2, 3.0, n)
    s = rng.uniform(0.2, 3.0, n)
    y = rng.standard_normal(m)
    p = LoProblem(A, A @ x, A.T @ y + s)
    return p, Iterate(x, y, s)


def fns_oracle(p, it, beta):
    """Direct dense solve of the full Newton system."""
    A = p.A
    m, n = A.shape
    K = np.block([
        [np.zeros((m, m)), A, np.zeros((m, n))],
        [A.T, np.zeros((n, n)), np.eye(n)],
        [np.zeros((n, m)), np.diag(it.s), np.diag(it.x)],
    ])
    rhs = np.concatenate([np.zeros(m + n), beta * it.mu - it.x * it.s])
    sol = np.linalg.solve(K, rhs)
    return sol[m:m + n], sol[:m], sol[m + n:]


def test_basis_for_single_row():
    p = LoProblem([[1.0, 1.0]], [1.0], [1.0, 1.0])
    b = select_basis(p)
    assert list(b.index_set) == [0]
    assert np.allclose(b.V, [[1.0], [-1.0]])
    assert np.allclose(p.A @ b.V, 0)


def test_basis_identity_block_any_n():
    rng = np.random.default_rng(0)
    N = rng.standard_normal((3, 5))
    A = np.hstack([np.eye(3), N])
    b = select_basis(LoProblem(A, np.ones(3), np.ones(8)))
    assert list(b.index_set) == [0, 1, 2]
    assert np.allclose(b.V, np.vstack([N, -np.eye(5)]))


def test_basis_rejects_rank_deficient():
    A = np.array([[1.0, 2.0, 3.0], [1.0, 2.0, 3.0 + 1e-13]])
    p = LoProblem.__new__(LoProblem)
    object.__setattr__(p, "A", A)
    object.__setattr__(p, "b", np.ones(2))
    object.__setattr__(p, "c", np.ones(3))
    with pytest.raises(RankDeficientError):
        select_basis(p)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 6), st.integers(0, 8))
def test_basis_orthogonality(seed, m, extra):
    rng = np.random.default_rng(seed)
    n = m + extra
    A = rng.standard_normal((m, n))
    p = LoProblem(A, np.ones(m), np.ones(n))
    b = select_basis(p)
    if extra == 0:
        assert b.V.shape == (m, 0)
        return
    nA, nV = np.linalg.norm(A, 2), np.linalg.norm(b.V, 2)
    assert np.linalg.norm(A @ b.V, 2) <= 1e-12 * nA * nV
    assert np.linalg.norm(b.W.T @ b.V, 2) <= 1e-12 * nA * nV
    assert np.linalg.matrix_rank(b.V) == n - m


def test_random_4x12_basis():
    rng = np.random.default_rng(1)
    p, _ = random_instance(rng)
    b = select_basis(p)
    assert np.linalg.norm(p.A @ b.V, 2) <= 1e-12 * p.norm_A * np.linalg.norm(b.V, 2)
    assert np.linalg.svd(b.V, compute_uv=False)[-1] > 1e-8


def test_oss_central_point_beta_one_has_zero_rhs():
    p, start = generate_degenerate_standard(seed=2)
    sys = assemble_oss(p, start, select_basis(p), 1.0)
    assert np.array_equal(sys.sigma, np.zeros(p.n))
    basis = sys.basis
    assert np.allclose(sys.M, np.hstack([-p.A.T, basis.V]))


def test_oss_rhs_arithmetic():
    p = LoProblem([[1.0, 1.0]], [1.0], [1.0, 1.0])
    it = Iterate([0.5, 0.5], [0.0], [1.0, 1.0])
    sys = assemble_oss(p, it, select_basis(p), 0.0)
    assert sys.mu == 0.5
    assert np.allclose(sys.sigma, [-0.5, -0.5])
    assert sys.M.shape == (2, 2)


def test_oss_rejects_nonpositive():
    p = LoProblem([[1.0, 1.0]], [1.0], [1.0, 1.0])
    with pytest.raises(ValueError):
        assemble_oss(p, Iterate([1.0, 0.0], [0.0], [1.0, 1.0]), select_basis(p), 0.5)


@pytest.mark.parametrize("seed", range(5))
def test_exact_oss_matches_fns(seed):
    rng = np.random.default_rng(seed)
    p, it = random_instance(rng)
    beta = 0.9
    sys = assemble_oss(p, it, select_basis(p), beta)
    d = recover_direction(np.linalg.solve(sys.M, sys.sigma), sys)
    dx, dy, ds = fns_oracle(p, it, beta)
    for got, want in ((d.dx, dx), (d.dy, dy), (d.ds, ds)):
        assert np.linalg.norm(got - want) <= 1e-8 * max(1.0, np.linalg.norm(want))
    assert d.residual_norm <= 1e-10 * np.linalg.norm(sys.M, 2) * np.linalg.norm(d.lam)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_any_z_gives_feasible_orthogonal_direction(seed):
    rng = np.random.default_rng(seed)
    p, it = random_instance(rng)
    sys = assemble_oss(p, it, select_basis(p), 0.8)
    z = rng.standard_normal(p.n) * 10
    d = recover_direction(z, sys)
    assert np.linalg.norm(p.A @ d.dx) <= 1e-10 * p.norm_A * np.linalg.norm(d.dx)
    assert np.linalg.norm(p.A.T @ d.dy + d.ds) <= 1e-10 * p.norm_A * np.linalg.norm(d.dy)
    assert abs(d.dx @ d.ds) <= 1e-10 * np.linalg.norm(d.dx) * np.linalg.norm(d.ds)


def test_perturbed_solution_residual_bound():
    rng = np.random.default_rng(3)
    p, it = random_instance(rng)
    sys = assemble_oss(p, it, select_basis(p), 0.5)
    z = np.linalg.solve(sys.M, sys.sigma)
    dz = rng.standard_normal(p.n)
    dz *= 1e-3 / np.linalg.norm(dz)
    d = recover_direction(z + dz, sys)
    assert d.residual_norm <= np.linalg.norm(sys.M, 2) * 1e-3 * (1 + 1e-12)


def test_comparison_system_sizes():
    A = np.array([[1.0, 2.0, 3.0]])
    p = LoProblem(A, [6.0], [2.0, 3.0, 4.0])
    it = Iterate([1.0, 1.0, 1.0], [1.0], [1.0, 1.0, 1.0])
    sizes = {k: assemble_comparison_system(k, p, it).matrix.shape for k in SystemKind}
    assert sizes == {SystemKind.FNS: (7, 7), SystemKind.AS: (4, 4),
                     SystemKind.NES: (1, 1), SystemKind.OSS: (3, 3)}


def test_nes_is_spd():
    rng = np.random.default_rng(4)
    p, it = random_instance(rng)
    K = assemble_comparison_system("NES", p, it).matrix
    assert np.allclose(K, K.T, atol=1e-12 * np.abs(K).max())
    assert np.linalg.eigvalsh(K).min() > 0


@pytest.mark.parametrize("seed", range(3))
def test_all_systems_agree(seed):
    rng = np.random.default_rng(100 + seed)
    p, it = random_instance(rng)
    beta = 0.7
    ref = fns_oracle(p, it, beta)
    for kind in (SystemKind.FNS, SystemKind.AS, SystemKind.NES):
        cs = assemble_comparison_system(kind, p, it, beta)
        got = direction_from_comparison(kind, p, it, np.linalg.solve(cs.matrix, cs.rhs), beta)
        for g, w in zip(got, ref):
            assert np.linalg.norm(g - w) <= 1e-8 * max(1.0, np.linalg.norm(w)), kind
    cs = assemble_comparison_system(SystemKind.OSS, p, it, beta)
    sys = assemble_oss(p, it, select_basis(p), beta)
    d = recover_direction(np.linalg.solve(cs.matrix, cs.rhs), sys)
    for g, w in zip((d.dx, d.dy, d.ds), ref):
        assert np.linalg.norm(g - w) <= 1e-8 * max(1.0, np.linalg.norm(w))


def test_condition_diagnostics_examples():
    assert condition_diagnostics(np.eye(4)).cond == pytest.approx(1.0)
    r = condition_diagnostics(np.diag([4.0, 1.0]))
    assert r.cond == pytest.approx(4.0) and r.norm == pytest.approx(4.0)
    assert r.smallest_singular == pytest.approx(1.0) and r.nnz == 2
    assert condition_diagnostics(np.zeros((2, 2))).cond == np.inf
    with pytest.raises(ValueError):
        condition_diagnostics(np.zeros((0, 0)))


def test_constant_block_matrix_shape():
    rng = np.random.default_rng(5)
    p, _ = random_instance(rng)
    Q = constant_block_matrix(p, select_basis(p))
    assert Q.shape == (12, 24)
    assert np.isfinite(condition_diagnostics(Q).cond)
