"""Orthogonal-subspace Newton systems and the classical alternatives.

For an interior feasible point the Newton direction satisfies
``A dx = 0``, ``A^T dy + ds = 0`` and ``S dx + X ds = beta*mu*e - Xs``.
Writing ``dx = V lam`` with ``AV = 0`` and ``ds = -A^T dy`` leaves the square
system ``[-X A^T | S V] (dy; lam) = beta*mu*e - Xs``.  Any ``(dy, lam)``,
exact or not, produces a direction that keeps ``Ax = b`` and
``A^T y + s = c`` intact; inexactness only shows up in the complementarity
row.
"""

from __future__ import annotations

import dataclasses
import enum
from typing import NamedTuple

import numpy as np
import scipy.linalg

from .lo_core import Iterate, LoProblem

_norm = np.linalg.norm

PIVOT_TOL = 1e-10


class RankDeficientError(np.linalg.LinAlgError):
    pass


@dataclasses.dataclass(frozen=True, eq=False)
class SubspaceBasis:
    """Row-space basis ``W = A^T`` and null-space basis ``V`` of A.

    ``index_set`` holds the m basic column indices used to build V.
    """

    index_set: np.ndarray
    V: np.ndarray
    W: np.ndarray


def _signed_unit_basis(A: np.ndarray) -> np.ndarray | None:
    """Column indices forming a signed identity (e.g. surplus columns), if any."""
    m = A.shape[0]
    chosen = np.full(m, -1)
    nz = A != 0
    for j in np.flatnonzero(nz.sum(axis=0) == 1):
        i = int(np.flatnonzero(nz[:, j])[0])
        if chosen[i] < 0 and abs(A[i, j]) == 1.0:
            chosen[i] = j
    if np.all(chosen >= 0):
        return chosen
    return None


def select_basis(p: LoProblem) -> SubspaceBasis:
    """Pick m independent columns of A and build V with ``AV = 0``.

    A ready-made signed identity block (slack or surplus columns) is used when
    present.  Otherwise columns are chosen by partial-pivoting elimination on
    ``A^T``: each step takes the remaining column with the largest pivot.
    """
    A = p.A
    m, n = A.shape
    scale = p.norm_A
    basic = _signed_unit_basis(A)
    if basic is None:
        P, _, U = scipy.linalg.lu(A.T)
        pivots = np.abs(np.diag(U))
        if pivots.size < m or pivots.min() < PIVOT_TOL * scale:
            raise RankDeficientError(
                f"A is numerically rank deficient (smallest pivot {pivots.min():.3e})"
            )
        # A^T = P L U, so row i of P^T A^T is row perm[i] of A^T.
        perm = np.argmax(P, axis=0)
        basic = perm[:m]
    basic = np.asarray(basic)
    nonbasic = np.setdiff1d(np.arange(n), basic)
    A_B = A[:, basic]
    A_N = A[:, nonbasic]
    V = np.empty((n, n - m))
    V[basic] = scipy.linalg.solve(A_B, A_N) if n > m else np.empty((m, 0))
    V[nonbasic] = -np.eye(n - m)
    return SubspaceBasis(index_set=basic, V=V, W=A.T.copy())


@dataclasses.dataclass(frozen=True, eq=False)
class OssSystem:
    """Square system ``M z = sigma`` with ``M = [-X A^T | S V]``, ``z = (dy; lam)``."""

    M: np.ndarray
    sigma: np.ndarray
    basis: SubspaceBasis
    mu: float

    @property
    def n(self) -> int:
        return self.M.shape[0]


@dataclasses.dataclass(frozen=True, eq=False)
class NewtonDirection:
    dx: np.ndarray
    dy: np.ndarray
    ds: np.ndarray
    lam: np.ndarray
    residual_norm: float

    def pairs(self) -> tuple[np.ndarray, np.ndarray]:
        return self.dx, self.ds


def assemble_oss(p: LoProblem, it: Iterate, basis: SubspaceBasis, beta: float) -> OssSystem:
    if not it.is_interior():
        raise ValueError("iterate must be strictly positive")
    x, s = it.x, it.s
    mu = it.mu
    M = np.hstack([-x[:, None] * basis.W, s[:, None] * basis.V])
    sigma = beta * mu - x * s
    return OssSystem(M=M, sigma=sigma, basis=basis, mu=mu)


def recover_direction(z: np.ndarray, sys: OssSystem) -> NewtonDirection:
    """Split ``z = (dy; lam)`` and form ``dx = V lam``, ``ds = -A^T dy``."""
    z = np.asarray(z, dtype=np.float64)
    m = sys.basis.W.shape[1]
    dy, lam = z[:m], z[m:]
    dx = sys.basis.V @ lam
    ds = -(sys.basis.W @ dy)
    res = float(_norm(sys.sigma - sys.M @ z))
    return NewtonDirection(dx=dx, dy=dy, ds=ds, lam=lam, residual_norm=res)


class SystemKind(str, enum.Enum):
    FNS = "FNS"
    AS = "AS"
    NES = "NES"
    OSS = "OSS"


class ComparisonSystem(NamedTuple):
    kind: SystemKind
    matrix: np.ndarray
    rhs: np.ndarray


def _rhs_sigma(it: Iterate, beta: float) -> np.ndarray:
    return beta * it.mu - it.x * it.s


def assemble_comparison_system(kind: SystemKind | str, p: LoProblem, it: Iterate,
                               beta: float = 1.0) -> ComparisonSystem:
    """Coefficient matrix and right-hand side of FNS, AS or NES.

    Unknown ordering: FNS ``(dy, dx, ds)``, AS ``(dy, dx)``, NES ``dy``.
    """
    kind = SystemKind(kind)
    if not it.is_interior():
        raise ValueError("iterate must be strictly positive")
    A = p.A
    m, n = A.shape
    x, s = it.x, it.s
    sigma = _rhs_sigma(it, beta)
    if kind is SystemKind.FNS:
        K = np.zeros((m + 2 * n, m + 2 * n))
        K[:m, m:m + n] = A
        K[m:m + n, :m] = A.T
        K[m:m + n, m + n:] = np.eye(n)
        K[m + n:, m:m + n] = np.diag(s)
        K[m + n:, m + n:] = np.diag(x)
        rhs = np.concatenate([np.zeros(m + n), sigma])
    elif kind is SystemKind.AS:
        K = np.zeros((m + n, m + n))
        K[:m, m:] = A
        K[m:, :m] = A.T
        K[m:, m:] = -np.diag(s / x)
        rhs = np.concatenate([np.zeros(m), -sigma / x])
    elif kind is SystemKind.NES:
        K = (A * (x / s)) @ A.T
        rhs = -(A @ (sigma / s))
    else:
        basis = select_basis(p)
        sys = assemble_oss(p, it, basis, beta)
        return ComparisonSystem(kind, sys.M, sys.sigma)
    return ComparisonSystem(kind, K, rhs)


def direction_from_comparison(kind: SystemKind | str, p: LoProblem, it: Iterate,
                              solution: np.ndarray, beta: float = 1.0
                              ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Map a solution of FNS/AS/NES back to ``(dx, dy, ds)``."""
    kind = SystemKind(kind)
    m, n = p.A.shape
    x, s = it.x, it.s
    sigma = _rhs_sigma(it, beta)
    if kind is SystemKind.FNS:
        return solution[m:m + n], solution[:m], solution[m + n:]
    if kind is SystemKind.AS:
        dy, dx = solution[:m], solution[m:]
        return dx, dy, (sigma - s * dx) / x
    if kind is SystemKind.NES:
        dy = solution
        dx = (x / s) * (p.A.T @ dy) + sigma / s
        return dx, dy, -(p.A.T @ dy)
    raise ValueError("use recover_direction for the OSS")


class ConditionReport(NamedTuple):
    cond: float
    norm: float
    smallest_singular: float
    nnz: int


def condition_diagnostics(mat: np.ndarray) -> ConditionReport:
    mat = np.asarray(mat, dtype=np.float64)
    if mat.size == 0:
        raise ValueError("empty matrix")
    sv = np.linalg.svd(mat, compute_uv=False)
    smax, smin = float(sv[0]), float(sv[-1])
    cond = np.inf if smin == 0.0 else smax / smin
    return ConditionReport(cond=cond, norm=smax, smallest_singular=smin,
                           nnz=int(np.count_nonzero(mat)))


def constant_block_matrix(p: LoProblem, basis: SubspaceBasis) -> np.ndarray:
    """``Q = blockdiag(A, V^T)``, whose conditioning governs the OSS growth."""
    m, n = p.A.shape
    Q = np.zeros((n, 2 * n))
    Q[:m, :n] = p.A
    Q[m:, n:] = basis.V.T
    return Q
