"""Low-rank background subspace learning.

Two ADMM stages run back to back:

1. sparse coding of the pixels against the joint dictionary ``B = [A0, t]``
   (``A0`` from a truncated SVD of the scene), and
2. a nuclear-norm regularized least-squares fit of the background basis
   ``A`` given the background/target coefficient split from stage 1.

Both loops use the increasing-penalty schedule ``mu <- min(mu_max, gamma*mu)``
and stop on the primal residual alone.  The residual is tested after each
iteration; the iterates all start at zero, so testing it beforehand would
stop both loops before their first step.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import NumericalError, ValidationError
from .prox import SvdTriple, soft_threshold, spd_solve, svt, truncated_svd

__all__ = [
    "AdmmConfig",
    "AdmmTrace",
    "JointDictionary",
    "SparseCode",
    "BackgroundSubspace",
    "mu_schedule",
    "sparse_code",
    "learn_background",
    "run_lrbsl",
]


@dataclass(frozen=True)
class AdmmConfig:
    mu0: float = 1e-3
    mu_max: float = 1e10
    gamma: float = 1.2
    eps: float = 1e-6
    k_max: int = 200

    def __post_init__(self):
        if not (self.mu0 > 0 and self.mu_max > 0 and self.eps > 0):
            raise ValidationError("mu0, mu_max and eps must be positive")
        if self.mu0 > self.mu_max:
            raise ValidationError(f"mu0 ({self.mu0}) exceeds mu_max ({self.mu_max})")
        if not self.gamma > 1:
            raise ValidationError(f"gamma must exceed 1, got {self.gamma}")
        if int(self.k_max) != self.k_max or self.k_max < 1:
            raise ValidationError(f"k_max must be a positive integer, got {self.k_max}")


@dataclass
class AdmmTrace:
    """Per-run diagnostics of one ADMM loop.

    ``mus[k]`` is the penalty used in iteration ``k`` and ``residuals[k]``
    the primal residual measured at the end of it.
    """

    iterations: int = 0
    residual: float = np.inf
    converged: bool = False
    mus: list = field(default_factory=list)
    residuals: list = field(default_factory=list)

    def record(self, mu: float, residual: float, eps: float) -> bool:
        self.mus.append(mu)
        self.residuals.append(residual)
        self.iterations += 1
        self.residual = residual
        self.converged = residual < eps
        return self.converged


@dataclass(frozen=True)
class JointDictionary:
    """Background basis ``A`` (L x K) and target spectrum ``t`` (L,)."""

    background: np.ndarray
    target: np.ndarray

    def __post_init__(self):
        A = np.asarray(self.background, dtype=np.float64)
        t = np.asarray(self.target, dtype=np.float64).ravel()
        if A.ndim != 2 or A.shape[0] != t.size:
            raise ValidationError(
                f"background basis {A.shape} and target of length {t.size} do not conform"
            )
        object.__setattr__(self, "background", A)
        object.__setattr__(self, "target", t)

    @property
    def n_background(self) -> int:
        return self.background.shape[1]

    @property
    def assembled(self) -> np.ndarray:
        return np.column_stack([self.background, self.target])


@dataclass
class SparseCode:
    coef: np.ndarray  # (K+1, N): background rows then the target row
    trace: AdmmTrace
    objective: float = np.nan

    @property
    def background_rows(self) -> np.ndarray:
        return self.coef[:-1]

    @property
    def target_row(self) -> np.ndarray:
        return self.coef[-1:]


@dataclass
class BackgroundSubspace:
    values: np.ndarray  # (L, K)
    trace: AdmmTrace
    objective: float = np.nan
    coding: Optional[SparseCode] = None
    init: Optional[SvdTriple] = None


def mu_schedule(cfg: AdmmConfig):
    """Yield ``min(mu_max, mu0 * gamma**k)`` for ``k = 0 .. k_max-1``."""
    # closed form rather than repeated multiplication, so the sequence is exact
    for k in range(cfg.k_max):
        yield min(cfg.mu_max, cfg.mu0 * cfg.gamma ** k)


def _check_finite(name: str, k: int, *arrays) -> None:
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise NumericalError(f"{name}: non-finite iterate at iteration {k}")


def sparse_code(
    X,
    B: JointDictionary,
    lambda1: float,
    cfg: AdmmConfig = AdmmConfig(),
    callback: Optional[Callable[[int, dict], None]] = None,
) -> SparseCode:
    """L1-regularized coding of every pixel against ``B.assembled``.

    Minimizes ``0.5*||X - B S||_F^2 + lambda1*||S||_1`` with the splitting
    ``Z = S``.

    Parameters
    ----------
    X : ndarray, shape (L, N)
    B : JointDictionary
    lambda1 : float
        Weight of the L1 penalty, nonnegative.
    cfg : AdmmConfig
    callback : callable, optional
        Called as ``callback(k, {"S", "Z", "G", "mu"})`` after each iteration,
        where ``mu`` is the penalty used in that iteration.

    Returns
    -------
    SparseCode
    """
    if lambda1 < 0:
        raise ValidationError(f"lambda1 must be nonnegative, got {lambda1}")
    X = np.asarray(X, dtype=np.float64)
    Bm = B.assembled
    if X.ndim != 2 or X.shape[0] != Bm.shape[0]:
        raise ValidationError(f"pixel matrix {X.shape} does not conform to dictionary {Bm.shape}")

    n_atoms = Bm.shape[1]
    gram = Bm.T @ Bm
    BtX = Bm.T @ X
    eye = np.eye(n_atoms)
    S = np.zeros((n_atoms, X.shape[1]))
    Z = np.zeros_like(S)
    G = np.zeros_like(S)
    trace = AdmmTrace()
    for k, mu in enumerate(mu_schedule(cfg)):
        Z = soft_threshold(S + G / mu, lambda1 / mu)
        S = spd_solve(gram + mu * eye, BtX + mu * Z - G, name=f"B^T B + mu I (iteration {k})")
        G = G + mu * (S - Z)
        _check_finite("sparse_code", k, S, G)
        done = trace.record(mu, float(np.linalg.norm(S - Z)), cfg.eps)
        if callback is not None:
            callback(k, {"S": S, "Z": Z, "G": G, "mu": mu})
        if done:
            break

    objective = 0.5 * np.linalg.norm(X - Bm @ S) ** 2 + lambda1 * np.abs(S).sum()
    return SparseCode(S, trace, float(objective))


def learn_background(
    X,
    target,
    S1,
    S2,
    lambda2: float,
    cfg: AdmmConfig = AdmmConfig(),
    A0=None,
) -> BackgroundSubspace:
    """Fit the background basis ``A`` with a nuclear-norm penalty.

    Minimizes ``0.5*||X - A S1 - t S2||_F^2 + lambda2*||A||_*`` using the
    splitting ``D = A``.  The A-update solves against ``S1 S1^T + mu I``
    (K x K).  ``A0``, if given, seeds ``A`` and ``D`` instead of zeros.
    """
    if lambda2 < 0:
        raise ValidationError(f"lambda2 must be nonnegative, got {lambda2}")
    X = np.asarray(X, dtype=np.float64)
    t = np.asarray(target, dtype=np.float64).reshape(-1, 1)
    S1 = np.atleast_2d(np.asarray(S1, dtype=np.float64))
    S2 = np.atleast_2d(np.asarray(S2, dtype=np.float64))
    L, N = X.shape
    n_basis = S1.shape[0]
    if t.shape[0] != L or S1.shape[1] != N or S2.shape != (1, N):
        raise ValidationError(
            f"shapes do not conform: X {X.shape}, t {t.shape}, S1 {S1.shape}, S2 {S2.shape}"
        )

    cross = (X - t @ S2) @ S1.T
    gram = S1 @ S1.T
    eye = np.eye(n_basis)
    if A0 is None:
        A = np.zeros((L, n_basis))
    else:
        A = np.array(A0, dtype=np.float64)
        if A.shape != (L, n_basis):
            raise ValidationError(f"A0 has shape {A.shape}, expected {(L, n_basis)}")
    D = A.copy()
    G = np.zeros_like(A)
    trace = AdmmTrace()
    for k, mu in enumerate(mu_schedule(cfg)):
        D = svt(A + G / mu, lambda2 / mu)
        A = spd_solve(
            gram + mu * eye, cross + mu * D - G, side="right",
            name=f"S1 S1^T + mu I (iteration {k})",
        )
        G = G + mu * (A - D)
        _check_finite("learn_background", k, A, G)
        if trace.record(mu, float(np.linalg.norm(A - D)), cfg.eps):
            break

    fit = X - A @ S1 - t @ S2
    nuclear = np.linalg.svd(A, compute_uv=False).sum()
    objective = 0.5 * np.linalg.norm(fit) ** 2 + lambda2 * nuclear
    return BackgroundSubspace(A, trace, float(objective))


def run_lrbsl(
    X,
    target,
    K: int,
    lambda1: float = 1e-4,
    lambda2: float = 1e-4,
    cfg: AdmmConfig = AdmmConfig(),
    warm_start: bool = False,
) -> BackgroundSubspace:
    """Learn a ``K``-dimensional background basis for the scene ``X``.

    The SVD basis seeds the joint dictionary for the sparse-coding stage.
    The second stage starts from zero unless ``warm_start`` is set, in
    which case it starts from the SVD basis.
    """
    X = np.asarray(X, dtype=np.float64)
    t = np.asarray(target, dtype=np.float64).ravel()
    init = truncated_svd(X, K)
    coding = sparse_code(X, JointDictionary(init.left, t), lambda1, cfg)
    result = learn_background(
        X, t, coding.background_rows, coding.target_row, lambda2, cfg,
        A0=init.left if warm_start else None,
    )
    result.coding = coding
    result.init = init
    return result
