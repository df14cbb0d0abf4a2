"""Linear optimization problem data, iterates, and central-path measures.

Standard form is ``min c^T x  s.t. Ax = b, x >= 0`` with dual
``max b^T y  s.t. A^T y + s = c, s >= 0``.  Canonical form is
``min c'^T x  s.t. A'x >= b', x >= 0`` with dual ``A'^T y <= c', y >= 0``.
"""

from __future__ import annotations

import dataclasses
import enum
import math
from functools import cached_property
from typing import NamedTuple

import numpy as np

_norm = np.linalg.norm

# Feasibility tolerance relative to (1 + data norm).
FEAS_TOL = 1e-8


class FormTag(str, enum.Enum):
    STANDARD = "standard"
    CANONICAL = "canonical"


@dataclasses.dataclass(frozen=True, eq=False)
class LoProblem:
    """A dense LO instance in standard or canonical form.

    Attributes:
      A: Constraint matrix (m x n).
      b: Right-hand side (m,).
      c: Cost vector (n,).
      form: Which form the data is stated in.
      n_original: For standard instances produced from a canonical one, the
        number of leading columns that belong to the original variables.
    """

    A: np.ndarray
    b: np.ndarray
    c: np.ndarray
    form: FormTag = FormTag.STANDARD
    n_original: int | None = None

    def __post_init__(self):
        A = np.array(self.A, dtype=np.float64, ndmin=2)
        b = np.array(self.b, dtype=np.float64).reshape(-1)
        c = np.array(self.c, dtype=np.float64).reshape(-1)
        m, n = A.shape
        if b.shape != (m,):
            raise ValueError(f"b must have shape ({m},), got {b.shape}")
        if c.shape != (n,):
            raise ValueError(f"c must have shape ({n},), got {c.shape}")
        form = FormTag(self.form)
        if form is FormTag.STANDARD:
            if m > n:
                raise ValueError(f"standard form needs m <= n, got m={m}, n={n}")
            if np.linalg.matrix_rank(A) != m:
                raise ValueError("standard form needs A with full row rank")
        for name, arr in (("A", A), ("b", b), ("c", c)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "form", form)

    @property
    def m(self) -> int:
        return self.A.shape[0]

    @property
    def n(self) -> int:
        return self.A.shape[1]

    @cached_property
    def norm_A(self) -> float:
        return float(_norm(self.A, 2))

    @cached_property
    def norm_b(self) -> float:
        return float(_norm(self.b))

    @cached_property
    def norm_c(self) -> float:
        return float(_norm(self.c))


@dataclasses.dataclass(frozen=True, eq=False)
class Iterate:
    """Primal-dual point (x, y, s) of a standard-form problem."""

    x: np.ndarray
    y: np.ndarray
    s: np.ndarray

    def __post_init__(self):
        for name in ("x", "y", "s"):
            arr = np.array(getattr(self, name), dtype=np.float64).reshape(-1)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.x.shape != self.s.shape:
            raise ValueError("x and s must have the same length")

    @property
    def n(self) -> int:
        return self.x.size

    @cached_property
    def mu(self) -> float:
        return float(self.x @ self.s) / self.n

    @property
    def gap(self) -> float:
        """Total complementarity x^T s."""
        return float(self.x @ self.s)

    def pairs(self) -> tuple[np.ndarray, np.ndarray]:
        return self.x, self.s

    def is_interior(self) -> bool:
        return bool(np.all(self.x > 0) and np.all(self.s > 0))


def _check_dims(p: LoProblem, it: Iterate):
    if it.x.size != p.n or it.s.size != p.n or it.y.size != p.m:
        raise ValueError(
            f"iterate dimensions (x={it.x.size}, y={it.y.size}, s={it.s.size}) "
            f"do not match problem (m={p.m}, n={p.n})"
        )


def primal_residual(p: LoProblem, it: Iterate) -> np.ndarray:
    """Ax - b."""
    _check_dims(p, it)
    return p.A @ it.x - p.b


def dual_residual(p: LoProblem, it: Iterate) -> np.ndarray:
    """A^T y + s - c."""
    _check_dims(p, it)
    return p.A.T @ it.y + it.s - p.c


def proximity(it) -> float:
    """Relative distance ``||XSe - mu e|| / mu`` to the central path.

    Works for any iterate exposing ``pairs()``.
    """
    x, s = it.pairs()
    xs = x * s
    mu = float(xs.sum()) / xs.size
    if mu == 0.0:
        raise ZeroDivisionError("proximity undefined at mu = 0")
    return float(_norm(xs - mu)) / mu


def is_feasible(p: LoProblem, it: Iterate, tol: float = FEAS_TOL) -> bool:
    rp = _norm(primal_residual(p, it))
    rd = _norm(dual_residual(p, it))
    return bool(rp <= tol * (1 + p.norm_b) and rd <= tol * (1 + p.norm_c))


class ParamConditions(NamedTuple):
    """Slack of each sufficient condition for polynomial convergence.

    A condition holds when its slack is >= 0.
    """

    contraction: float  # (1 - 0.01/sqrt(n)) - (beta + eta/sqrt(n))
    positivity: float  # beta - eta/sqrt(n)
    neighborhood: float  # theta*(beta - eta/sqrt(n)) - (step term + eta)

    def ok(self, tol: float = 1e-12) -> bool:
        return all(v >= -tol for v in self)


def parameter_conditions(theta: float, eta: float, beta: float, n: int) -> ParamConditions:
    """Evaluate the short-step parameter conditions for dimension ``n``.

    The neighborhood condition bounds the proximity after a full inexact step:
    the second-order term ``||dX dS e||`` is at most
    ``(sqrt(theta^2 + n(1-beta)^2) + eta)^2 / (2^{3/2}(1-theta)) * mu`` and the
    residual contributes at most ``eta * mu`` after removing its mean.
    """
    rn = math.sqrt(n)
    contraction = (1 - 0.01 / rn) - (beta + eta / rn)
    positivity = beta - eta / rn
    second_order = (math.sqrt(theta**2 + n * (1 - beta) ** 2) + eta) ** 2 / (
        2**1.5 * (1 - theta)
    )
    neighborhood = theta * positivity - (second_order + eta)
    return ParamConditions(contraction, positivity, neighborhood)


@dataclasses.dataclass(frozen=True)
class NeighborhoodParams:
    theta: float = 0.2
    eta: float = 0.1
    beta: float = 0.9
    zeta: float = 1e-6
    zeta_hat: float = 1e-2

    def __post_init__(self):
        if not 0 <= self.theta < 1:
            raise ValueError(f"theta must lie in [0, 1), got {self.theta}")
        if not 0 <= self.eta < 1:
            raise ValueError(f"eta must lie in [0, 1), got {self.eta}")
        if not 0 <= self.beta <= 1:
            raise ValueError(f"beta must lie in [0, 1], got {self.beta}")
        if self.zeta <= 0:
            raise ValueError("zeta must be positive")
        if not 0 < self.zeta_hat < 1:
            raise ValueError("zeta_hat must lie in (0, 1)")

    @classmethod
    def for_dimension(cls, n: int, *, theta: float = 0.2, eta: float = 0.1,
                      beta: float | None = None, zeta: float = 1e-6,
                      zeta_hat: float = 1e-2) -> NeighborhoodParams:
        """Defaults theta=0.2, eta=0.1, beta=1-0.11/sqrt(n)."""
        if beta is None:
            beta = 1.0 - 0.11 / math.sqrt(n)
        return cls(theta=theta, eta=eta, beta=beta, zeta=zeta, zeta_hat=zeta_hat)

    def conditions(self, n: int) -> ParamConditions:
        return parameter_conditions(self.theta, self.eta, self.beta, n)

    def validate(self, n: int) -> bool:
        return self.conditions(n).ok()


def min_valid_dimension(theta: float = 0.2, eta: float = 0.1, n_max: int = 10**6) -> int | None:
    """Smallest n at which (theta, eta, 1 - 0.11/sqrt(n)) passes all conditions."""
    for n in range(1, n_max + 1):
        beta = 1.0 - 0.11 / math.sqrt(n)
        if beta >= 0 and parameter_conditions(theta, eta, beta, n).ok():
            return n
    return None


def in_neighborhood(it: Iterate, params: NeighborhoodParams, p: LoProblem) -> bool:
    """Membership in N(theta): feasible, strictly positive, proximity <= theta."""
    if not it.is_interior():
        return False
    if not is_feasible(p, it):
        return False
    return proximity(it) <= params.theta


def canonical_to_standard(p: LoProblem) -> LoProblem:
    """Append surplus columns: ``A'x - w = b'`` becomes ``[A' | -I](x; w) = b'``."""
    if p.form is not FormTag.CANONICAL:
        raise ValueError("expected a canonical instance")
    m, n = p.A.shape
    A = np.hstack([p.A, -np.eye(m)])
    c = np.concatenate([p.c, np.zeros(m)])
    return LoProblem(A, p.b.copy(), c, FormTag.STANDARD, n_original=n)


def canonical_point_to_standard(p: LoProblem, x: np.ndarray, y: np.ndarray) -> Iterate:
    """Map a canonical primal-dual pair onto the surplus-augmented standard form."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    surplus = p.A @ x - p.b
    s_x = p.c - p.A.T @ y
    return Iterate(np.concatenate([x, surplus]), y, np.concatenate([s_x, y]))


@dataclasses.dataclass(frozen=True)
class GeneratorSpec:
    m_prime: int = 4
    n_prime: int = 12
    cond_A: float = 4.0
    norm_A: float = 2.0
    norm_b: float = 2.0
    norm_c: float = 2.0
    seed: int = 0

    def __post_init__(self):
        if self.m_prime < 1 or self.n_prime < 1:
            raise ValueError("dimensions must be positive")
        if not self.cond_A >= 1:
            raise ValueError(f"cond_A must be >= 1, got {self.cond_A}")
        if min(self.m_prime, self.n_prime) == 1 and self.cond_A != 1:
            raise ValueError("a single row or column only admits cond_A = 1")
        if min(self.norm_A, self.norm_b, self.norm_c) <= 0:
            raise ValueError("target norms must be positive")


@dataclasses.dataclass(frozen=True, eq=False)
class PlantedPoint:
    """Strictly feasible canonical pair: A'x > b', x > 0, A'^T y < c', y > 0."""

    x: np.ndarray
    y: np.ndarray


def generate_instance(spec: GeneratorSpec) -> tuple[LoProblem, PlantedPoint]:
    """Random canonical instance with prescribed spectrum and data norms."""
    rng = np.random.default_rng(spec.seed)
    m, n = spec.m_prime, spec.n_prime
    k = min(m, n)
    U, _ = np.linalg.qr(rng.standard_normal((m, m)))
    W, _ = np.linalg.qr(rng.standard_normal((n, n)))
    sing = spec.norm_A * np.geomspace(1.0, 1.0 / spec.cond_A, k)
    A = (U[:, :k] * sing) @ W[:, :k].T

    x = rng.uniform(0.5, 1.5, n)
    surplus = rng.uniform(0.1, 1.0, m)
    b = A @ x - surplus
    y = rng.uniform(0.5, 1.5, m)
    slack = rng.uniform(0.1, 1.0, n)
    c = A.T @ y + slack

    # Positive rescaling keeps the planted pair strictly feasible.
    alpha = spec.norm_b / _norm(b)
    b, x = alpha * b, alpha * x
    gamma = spec.norm_c / _norm(c)
    c, y = gamma * c, gamma * y
    p = LoProblem(A, b, c, FormTag.CANONICAL)
    return p, PlantedPoint(x, y)


def generate_degenerate_standard(m: int = 4, n: int = 12, support: int = 2,
                                 seed: int = 0) -> tuple[LoProblem, Iterate]:
    """Primal-degenerate standard instance with an exactly central start.

    The start is ``x = s = e``; the planted optimum has ``support < m`` positive
    primal entries and strict complementarity.  Returns ``(problem, start)``.
    """
    if not 0 < support < m <= n:
        raise ValueError("need 0 < support < m <= n")
    rng = np.random.default_rng(seed)
    idx = rng.permutation(n)
    P = idx[:support]
    x_opt = np.zeros(n)
    s_opt = np.zeros(n)
    x_opt[P] = 1.0
    s_opt[idx[support:]] = 1.0
    # x0 - x* must lie in Null(A) and s0 - s* in Row(A); the two are orthogonal.
    dx = 1.0 - x_opt
    ds = 1.0 - s_opt
    rows = rng.standard_normal((m - 1, n))
    rows -= np.outer(rows @ dx, dx) / (dx @ dx)
    A = np.vstack([ds, rows])
    y_opt = rng.standard_normal(m)
    # A^T (y0 - y*) = s* - s0 = -ds holds for y0 - y* = -e_1.
    y0 = y_opt.copy()
    y0[0] -= 1.0
    b = A @ x_opt
    c = A.T @ y_opt + s_opt
    p = LoProblem(A, b, c, FormTag.STANDARD)
    return p, Iterate(np.ones(n), y0, np.ones(n))
