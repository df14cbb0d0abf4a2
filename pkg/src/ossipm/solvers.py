"""Inexact linear-system backends for the Newton step.

Every backend receives ``M z = sigma`` together with the residual budget
``eta * mu`` and returns a :class:`SolveReport` whose residual is recomputed
here rather than taken from the backend.
"""

from __future__ import annotations

import dataclasses
import enum
from typing import Callable

import numpy as np
import scipy.linalg
from scipy.linalg import lapack

_norm = np.linalg.norm
_EPS = np.finfo(np.float64).eps


class SingularSystemError(np.linalg.LinAlgError):
    pass


class Backend(str, enum.Enum):
    LU = "LU"
    LU_NOISY = "LU_NOISY"
    CGNR = "CGNR"


@dataclasses.dataclass(frozen=True, eq=False)
class SolverRequest:
    """One linear solve with its accuracy contract.

    ``epsilon`` is the allowed solution error ``eta*mu/||M||``; meeting it
    guarantees ``||sigma - M z|| <= residual_target = eta*mu``.
    """

    M: np.ndarray
    sigma: np.ndarray
    epsilon: float
    residual_target: float
    norm_M: float | None = None

    @classmethod
    def from_eta(cls, M: np.ndarray, sigma: np.ndarray, eta: float, mu: float,
                 norm_M: float | None = None) -> SolverRequest:
        if norm_M is None:
            norm_M = float(_norm(M, 2))
        return cls(M=M, sigma=sigma, epsilon=eta * mu / norm_M,
                   residual_target=eta * mu, norm_M=norm_M)


@dataclasses.dataclass(frozen=True, eq=False)
class SolveReport:
    z: np.ndarray
    achieved_residual: float
    inner_iterations: int
    backend: Backend
    converged: bool = True


def _report(req: SolverRequest, z: np.ndarray, iters: int, backend: Backend,
            converged: bool = True) -> SolveReport:
    res = float(_norm(req.sigma - req.M @ z))
    return SolveReport(z=z, achieved_residual=res, inner_iterations=iters,
                       backend=backend, converged=converged)


def _lu_solve(M: np.ndarray, sigma: np.ndarray) -> np.ndarray:
    lu, piv = scipy.linalg.lu_factor(M, check_finite=True)
    anorm = np.linalg.norm(M, 1)
    rcond, info = lapack.dgecon(lu, anorm, norm="1")
    if info != 0 or not rcond > _EPS:
        raise SingularSystemError(f"matrix is singular to working precision (rcond={rcond:.3e})")
    return scipy.linalg.lu_solve((lu, piv), sigma)


def solve_exact_lu(req: SolverRequest) -> SolveReport:
    z = _lu_solve(req.M, req.sigma)
    return _report(req, z, 1, Backend.LU)


def solve_noisy(req: SolverRequest, rng: np.random.Generator) -> SolveReport:
    """Exact solve plus an isotropic error of norm exactly ``epsilon``.

    Reproduces the input-output contract of a quantum linear solver with
    tomography: the returned vector is ``epsilon``-close to the true solution,
    so the residual is at most ``||M|| * epsilon``.
    """
    z = _lu_solve(req.M, req.sigma)
    if req.epsilon > 0:
        u = rng.standard_normal(z.size)
        z = z + (req.epsilon / _norm(u)) * u
    return _report(req, z, 1, Backend.LU_NOISY)


def solve_cgnr(req: SolverRequest, max_iters: int | None = None) -> SolveReport:
    """Conjugate gradients on ``M^T M z = M^T sigma`` from ``z = 0``.

    Only products with M and M^T are formed.  Stops once the true residual
    ``||sigma - M z||`` meets the target.
    """
    M, sigma = req.M, req.sigma
    n = M.shape[1]
    if max_iters is None:
        max_iters = 10 * n
    z = np.zeros(n)
    r = sigma.copy()
    g = M.T @ r
    p = g.copy()
    gg = g @ g
    k = 0
    while _norm(sigma - M @ z) > req.residual_target:
        if k >= max_iters or gg == 0.0:
            return _report(req, z, k, Backend.CGNR, converged=False)
        w = M @ p
        alpha = gg / (w @ w)
        z = z + alpha * p
        r = r - alpha * w
        g = M.T @ r
        gg_new = g @ g
        p = g + (gg_new / gg) * p
        gg = gg_new
        k += 1
    return _report(req, z, k, Backend.CGNR)


def cgnr_history(M: np.ndarray, sigma: np.ndarray, iters: int) -> tuple[np.ndarray, np.ndarray]:
    """True and normal-equation residual norms of the first ``iters`` CGNR steps."""
    req = SolverRequest(M=M, sigma=sigma, epsilon=0.0, residual_target=0.0)
    true_res, normal_res = [], []
    for k in range(iters + 1):
        rep = solve_cgnr(req, max_iters=k)
        true_res.append(rep.achieved_residual)
        normal_res.append(float(_norm(M.T @ (sigma - M @ rep.z))))
    return np.array(true_res), np.array(normal_res)


@dataclasses.dataclass(frozen=True, eq=False)
class HermitianDilation:
    """``M' = [[0, M], [M^T, 0]] / ||M||`` with ``sigma' = (sigma; 0) / ||M||``.

    The lower half of the solution of ``M' z' = sigma'`` solves ``M z = sigma``.
    """

    M_prime: np.ndarray
    sigma_prime: np.ndarray
    scale: float

    def extract(self, z_prime: np.ndarray) -> np.ndarray:
        n = self.M_prime.shape[0] // 2
        return np.asarray(z_prime)[n:]

    def solve(self) -> np.ndarray:
        return self.extract(_lu_solve(self.M_prime, self.sigma_prime))


def dilate(M: np.ndarray, sigma: np.ndarray) -> HermitianDilation:
    M = np.asarray(M, dtype=np.float64)
    n = M.shape[0]
    if M.shape != (n, n):
        raise ValueError("M must be square")
    scale = float(_norm(M, 2))
    if scale == 0.0:
        raise ValueError("cannot dilate the zero matrix")
    Mp = np.zeros((2 * n, 2 * n))
    Mp[:n, n:] = M
    Mp[n:, :n] = M.T
    Mp /= scale
    sp = np.concatenate([np.asarray(sigma, dtype=np.float64), np.zeros(n)]) / scale
    return HermitianDilation(M_prime=Mp, sigma_prime=sp, scale=scale)


SolveFn = Callable[[SolverRequest], SolveReport]


def make_backend(name: str, *, seed: int | None = None,
                 max_inner_iters: int | None = None) -> SolveFn:
    """Backend callable for ``lu``, ``noisy`` or ``cgnr``."""
    name = name.lower()
    if name == "lu":
        return solve_exact_lu
    if name == "noisy":
        rng = np.random.default_rng(seed)
        return lambda req: solve_noisy(req, rng)
    if name == "cgnr":
        return lambda req: solve_cgnr(req, max_inner_iters)
    raise ValueError(f"unknown solver {name!r}; expected lu, noisy or cgnr")
