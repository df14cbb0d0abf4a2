"""Self-dual embedding of a canonical LO problem.

With ``z = (y, x, tau, gamma)`` and slacks ``w = (u, s, phi, rho)`` the
embedding reads ``w = K z + q >= 0, z >= 0`` where K is skew-symmetric and
``q = (0, 0, 0, N)``, ``N = n' + m' + 2``.  The all-ones point is exactly
central with ``mu = 1``.  In standard form the constraint matrix is
``[I | -K]`` acting on ``(w; z)`` and ``[-K; -I]`` spans its null space, so no
elimination is needed to build the orthogonal-subspace system.
"""

from __future__ import annotations

import dataclasses
import enum
from functools import cached_property

import numpy as np

from .lo_core import FEAS_TOL, FormTag, Iterate, LoProblem
from .newton_systems import OssSystem, SubspaceBasis

_norm = np.linalg.norm


@dataclasses.dataclass(frozen=True, eq=False)
class SelfDualIterate:
    """Point of the embedding: ``z = (y, x, tau, gamma)``, ``w = (u, s, phi, rho)``."""

    z: np.ndarray
    w: np.ndarray
    m_prime: int
    n_prime: int

    def __post_init__(self):
        for name in ("z", "w"):
            arr = np.array(getattr(self, name), dtype=np.float64).reshape(-1)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        N = self.m_prime + self.n_prime + 2
        if self.z.size != N or self.w.size != N:
            raise ValueError(f"blocks must have length {N}")

    @classmethod
    def from_blocks(cls, y, x, tau, gamma, u, s, phi, rho) -> SelfDualIterate:
        y, x, u, s = (np.asarray(v, dtype=np.float64).reshape(-1) for v in (y, x, u, s))
        z = np.concatenate([y, x, [tau, gamma]])
        w = np.concatenate([u, s, [phi, rho]])
        return cls(z, w, y.size, x.size)

    @property
    def y(self) -> np.ndarray:
        return self.z[:self.m_prime]

    @property
    def x(self) -> np.ndarray:
        return self.z[self.m_prime:self.m_prime + self.n_prime]

    @property
    def tau(self) -> float:
        return float(self.z[-2])

    @property
    def gamma(self) -> float:
        return float(self.z[-1])

    @property
    def u(self) -> np.ndarray:
        return self.w[:self.m_prime]

    @property
    def s(self) -> np.ndarray:
        return self.w[self.m_prime:self.m_prime + self.n_prime]

    @property
    def phi(self) -> float:
        return float(self.w[-2])

    @property
    def rho(self) -> float:
        return float(self.w[-1])

    @cached_property
    def mu(self) -> float:
        return float(self.z @ self.w) / self.z.size

    @property
    def gap(self) -> float:
        return float(self.z @ self.w)

    def pairs(self) -> tuple[np.ndarray, np.ndarray]:
        return self.z, self.w

    def scaled(self, alpha: float) -> SelfDualIterate:
        return SelfDualIterate(alpha * self.z, alpha * self.w, self.m_prime, self.n_prime)


@dataclasses.dataclass(frozen=True, eq=False)
class SelfDualDirection:
    dz: np.ndarray
    dw: np.ndarray
    lam: np.ndarray
    residual_norm: float
    m_prime: int
    n_prime: int

    def pairs(self) -> tuple[np.ndarray, np.ndarray]:
        return self.dz, self.dw

    def stacked(self) -> np.ndarray:
        """``(dw; dz)`` in the standard-form variable order (u, s, phi, rho, y, x, tau, gamma)."""
        return np.concatenate([self.dw, self.dz])


@dataclasses.dataclass(frozen=True, eq=False)
class SelfDualProblem:
    """Embedding data.  ``scale`` multiplies ``q`` (used by refinement rounds)."""

    source: LoProblem
    bbar: np.ndarray
    cbar: np.ndarray
    obar: float
    K: np.ndarray
    V_closed: np.ndarray
    scale: float = 1.0

    @property
    def m_prime(self) -> int:
        return self.source.m

    @property
    def n_prime(self) -> int:
        return self.source.n

    @property
    def n_pairs(self) -> int:
        return self.K.shape[0]

    @cached_property
    def q(self) -> np.ndarray:
        q = np.zeros(self.n_pairs)
        q[-1] = self.scale * self.n_pairs
        return q

    @cached_property
    def A_embedded(self) -> np.ndarray:
        N = self.n_pairs
        return np.hstack([np.eye(N), -self.K])

    @cached_property
    def embedded(self) -> LoProblem:
        """Standard form over ``(u, s, phi, rho, y, x, tau, gamma)``."""
        N = self.n_pairs
        c = np.concatenate([np.zeros(N), self.q])
        return LoProblem(self.A_embedded, self.q.copy(), c, FormTag.STANDARD)

    @cached_property
    def layout(self) -> dict[str, slice]:
        """Index map into the standard-form variable vector."""
        m, n = self.m_prime, self.n_prime
        N = self.n_pairs
        return {
            "u": slice(0, m), "s": slice(m, m + n), "phi": slice(m + n, m + n + 1),
            "rho": slice(m + n + 1, N), "y": slice(N, N + m),
            "x": slice(N + m, N + m + n), "tau": slice(N + m + n, N + m + n + 1),
            "gamma": slice(N + m + n + 1, 2 * N),
        }

    @cached_property
    def basis(self) -> SubspaceBasis:
        return SubspaceBasis(index_set=np.arange(self.n_pairs), V=self.V_closed,
                             W=self.A_embedded.T)

    def rescaled(self, scale: float) -> SelfDualProblem:
        return dataclasses.replace(self, scale=scale)

    def start(self) -> SelfDualIterate:
        """All-ones point, scaled with ``q``."""
        N = self.n_pairs
        e = np.full(N, self.scale)
        return SelfDualIterate(e, e.copy(), self.m_prime, self.n_prime)

    def slack_of(self, z: np.ndarray) -> np.ndarray:
        return self.K @ z + self.q

    # path-model interface

    def feasibility(self, it: SelfDualIterate) -> tuple[float, float]:
        r = float(_norm(it.w - self.K @ it.z - self.q))
        return r, r

    def feasibility_scale(self) -> tuple[float, float]:
        s = 1 + float(_norm(self.q))
        return s, s

    def oss(self, it: SelfDualIterate, beta: float) -> OssSystem:
        return assemble_selfdual_oss(self, it, beta)

    def step(self, it: SelfDualIterate, sys: OssSystem, lam: np.ndarray):
        d = recover_selfdual_direction(lam, sys, self)
        nxt = SelfDualIterate(it.z + d.dz, it.w + d.dw, self.m_prime, self.n_prime)
        return nxt, d

    def gap(self, it: SelfDualIterate) -> float:
        return it.gap

    def refine(self, it: SelfDualIterate, nabla: float, start: SelfDualIterate):
        # The refining problem of the embedding is the embedding with q scaled
        # by nabla, warm-started from nabla times the all-ones point.
        return self.rescaled(nabla * self.scale), start.scaled(nabla)

    def compose(self, it: SelfDualIterate, hat: SelfDualIterate, nabla: float) -> SelfDualIterate:
        from .refinement import compose_solution

        base = self.embedded
        composed = compose_solution(to_standard(it), to_standard(hat, shift=nabla * it.z),
                                    nabla, base)
        return from_standard(composed, self.m_prime, self.n_prime)


def to_standard(it: SelfDualIterate, shift: np.ndarray | None = None) -> Iterate:
    """Standard-form primal-dual triple ``x = (w; z)``, ``y = -z``, ``s = (z; w)``.

    ``shift`` is added to the dual multiplier; refinement rounds use it to
    express the rescaled embedding's dual in the shifted variables of the
    refining problem.
    """
    y = -it.z if shift is None else -it.z + shift
    return Iterate(np.concatenate([it.w, it.z]), y, np.concatenate([it.z, it.w]))


def from_standard(it: Iterate, m_prime: int, n_prime: int) -> SelfDualIterate:
    N = it.x.size // 2
    return SelfDualIterate(it.x[N:], it.x[:N], m_prime, n_prime)


def embed(p: LoProblem) -> SelfDualProblem:
    if p.form is not FormTag.CANONICAL:
        raise ValueError("embedding expects a canonical instance")
    A, b, c = p.A, p.b, p.c
    m, n = A.shape
    N = m + n + 2
    bbar = b - A.sum(axis=1) + 1.0
    cbar = A.sum(axis=0) + 1.0 - c
    obar = 1.0 + c.sum() - b.sum()
    K = np.zeros((N, N))
    iy, ix, it_, ig = slice(0, m), slice(m, m + n), m + n, m + n + 1
    K[iy, ix] = A
    K[iy, it_] = -b
    K[iy, ig] = bbar
    K[ix, iy] = -A.T
    K[ix, it_] = c
    K[ix, ig] = cbar
    K[it_, iy] = b
    K[it_, ix] = -c
    K[it_, ig] = obar
    K[ig, iy] = -bbar
    K[ig, ix] = -cbar
    K[ig, it_] = -obar
    V = np.vstack([-K, -np.eye(N)])
    return SelfDualProblem(source=p, bbar=bbar, cbar=cbar, obar=float(obar), K=K, V_closed=V)


def assemble_selfdual_oss(sd: SelfDualProblem, it: SelfDualIterate, beta: float) -> OssSystem:
    """``D V lam = R`` of size N; the step is ``(dw; dz) = V lam``."""
    z, w = it.z, it.w
    if not (np.all(z > 0) and np.all(w > 0)):
        raise ValueError("iterate must be strictly positive")
    mu = it.mu
    M = -(z[:, None] * sd.K) - np.diag(w)
    R = beta * mu - z * w
    return OssSystem(M=M, sigma=R, basis=sd.basis, mu=mu)


def recover_selfdual_direction(lam: np.ndarray, sys: OssSystem,
                               sd: SelfDualProblem) -> SelfDualDirection:
    lam = np.asarray(lam, dtype=np.float64)
    dw = -(sd.K @ lam)
    dz = -lam
    res = float(_norm(sys.sigma - sys.M @ lam))
    return SelfDualDirection(dz=dz, dw=dw, lam=lam, residual_norm=res,
                             m_prime=sd.m_prime, n_prime=sd.n_prime)


def selfdual_fns(sd: SelfDualProblem, it: SelfDualIterate, beta: float
                 ) -> tuple[np.ndarray, np.ndarray]:
    """Full Newton system of the embedding over ``(dw; dz)``: ``[A; D] dX = (0; R)``."""
    N = sd.n_pairs
    D = np.hstack([np.diag(it.z), np.diag(it.w)])
    mat = np.vstack([sd.A_embedded, D])
    rhs = np.concatenate([np.zeros(N), beta * it.mu - it.z * it.w])
    return mat, rhs


def check_selfdual_orthogonality(d: SelfDualDirection) -> float:
    """``dx^T ds + dy^T du + dtau dphi + dgamma drho``."""
    return float(d.dz @ d.dw)


class ClassTag(str, enum.Enum):
    OPTIMAL = "Optimal"
    PRIMAL_INFEASIBLE = "PrimalInfeasible"
    DUAL_INFEASIBLE = "DualInfeasibleOrUnboundedPrimal"
    BOTH_INFEASIBLE = "BothInfeasible"
    NEEDS_TIGHTER_ZETA = "NeedsTighterZeta"


@dataclasses.dataclass(frozen=True, eq=False)
class Classification:
    tag: ClassTag
    tau: float
    gamma: float
    x: np.ndarray | None = None
    y: np.ndarray | None = None
    s: np.ndarray | None = None
    u: np.ndarray | None = None
    objective: float | None = None
    c_dot_x: float | None = None
    b_dot_y: float | None = None


def default_tau_tol(it: SelfDualIterate) -> float:
    return 1e-4 * max(1.0, float(_norm(np.concatenate([it.z, it.w]))))


def classify(final: SelfDualIterate, sd: SelfDualProblem,
             tau_tol: float | None = None) -> Classification:
    """Read off the source problem's status from a near-optimal embedding point.

    Strict sign tests need clearance beyond ``tau_tol``; non-strict ones accept
    values within it.  A pattern matching no case is reported as
    ``NeedsTighterZeta``.
    """
    if tau_tol is None:
        tau_tol = default_tau_tol(final)
    p = sd.source
    tau, gamma = final.tau, final.gamma
    if tau > tau_tol:
        x, y = final.x / tau, final.y / tau
        return Classification(
            ClassTag.OPTIMAL, tau, gamma, x=x, y=y, s=final.s / tau, u=final.u / tau,
            objective=float(p.c @ x), c_dot_x=float(p.c @ final.x),
            b_dot_y=float(p.b @ final.y),
        )
    cx = float(p.c @ final.x)
    by = float(p.b @ final.y)
    cx_neg = cx < -tau_tol
    by_pos = by > tau_tol
    if cx_neg and by_pos:
        tag = ClassTag.BOTH_INFEASIBLE
    elif cx_neg:
        tag = ClassTag.DUAL_INFEASIBLE
    elif by_pos:
        tag = ClassTag.PRIMAL_INFEASIBLE
    else:
        tag = ClassTag.NEEDS_TIGHTER_ZETA
    return Classification(tag, tau, gamma, c_dot_x=cx, b_dot_y=by)


def is_feasible_point(sd: SelfDualProblem, it: SelfDualIterate, tol: float = FEAS_TOL) -> bool:
    r, _ = sd.feasibility(it)
    return r <= tol * sd.feasibility_scale()[0]
