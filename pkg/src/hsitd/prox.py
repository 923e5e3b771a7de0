"""Dense linear-algebra kernels shared by the ADMM solvers."""

from __future__ import annotations

from typing import NamedTuple

import numpy as np
import scipy.linalg

from .errors import NumericalError, ValidationError

__all__ = ["SvdTriple", "soft_threshold", "svt", "truncated_svd", "spd_solve", "graph_trace"]


class SvdTriple(NamedTuple):
    left: np.ndarray  # (L, K), orthonormal columns
    singular: np.ndarray  # (K,), nonincreasing
    right: np.ndarray  # (N, K), orthonormal columns

    def reconstruct(self) -> np.ndarray:
        return (self.left * self.singular) @ self.right.T


def soft_threshold(M, tau: float) -> np.ndarray:
    """Elementwise shrinkage ``sign(m) * max(|m| - tau, 0)``.

    This is the proximal operator of ``tau * ||.||_1``.
    """
    if tau < 0:
        raise ValidationError(f"soft threshold must be nonnegative, got {tau}")
    M = np.asarray(M, dtype=np.float64)
    return np.sign(M) * np.maximum(np.abs(M) - tau, 0.0)


def svt(M, tau: float) -> np.ndarray:
    """Singular value thresholding, the proximal operator of ``tau * ||.||_*``."""
    if tau < 0:
        raise ValidationError(f"singular value threshold must be nonnegative, got {tau}")
    M = np.asarray(M, dtype=np.float64)
    if not np.all(np.isfinite(M)):
        raise NumericalError("svt: input contains non-finite entries")
    try:
        U, s, Vt = np.linalg.svd(M, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"svt: SVD failed ({exc})") from None
    s = np.maximum(s - tau, 0.0)
    keep = s > 0
    return (U[:, keep] * s[keep]) @ Vt[keep]


def truncated_svd(X, K: int) -> SvdTriple:
    """Top-``K`` singular triplets of ``X``.

    Signs are fixed so that the largest-magnitude entry of every left
    singular vector is positive (first such entry on ties); the matching
    right vector is flipped with it.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValidationError("truncated_svd expects a 2-D matrix")
    if not 1 <= K <= min(X.shape):
        raise ValidationError(f"K must lie in [1, {min(X.shape)}], got {K}")
    try:
        U, s, Vt = np.linalg.svd(X, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"truncated_svd: SVD failed ({exc})") from None
    U, s, V = U[:, :K], s[:K], Vt[:K].T
    pivot = np.argmax(np.abs(U), axis=0)
    signs = np.where(U[pivot, np.arange(K)] < 0, -1.0, 1.0)
    return SvdTriple(U * signs, s, V * signs)


def spd_solve(G, rhs, side: str = "left", name: str = "system") -> np.ndarray:
    """Solve ``G @ Y = rhs`` (``side='left'``) or ``Y @ G = rhs`` (``side='right'``)
    for symmetric positive-definite ``G`` via a Cholesky factorization.

    ``name`` is quoted in the error raised when ``G`` is not positive
    definite.
    """
    G = np.asarray(G, dtype=np.float64)
    rhs = np.asarray(rhs, dtype=np.float64)
    if side not in ("left", "right"):
        raise ValidationError(f"side must be 'left' or 'right', got {side!r}")
    if G.ndim != 2 or G.shape[0] != G.shape[1]:
        raise ValidationError(f"{name}: matrix must be square, got {G.shape}")
    scale = max(1.0, float(np.max(np.abs(G)))) if G.size else 1.0
    if np.max(np.abs(G - G.T), initial=0.0) > 1e-10 * scale:
        raise ValidationError(f"{name}: matrix is not symmetric")
    try:
        factor = scipy.linalg.cho_factor(G, lower=True, check_finite=True)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NumericalError(f"{name}: Cholesky factorization failed ({exc})") from None
    if side == "left":
        return scipy.linalg.cho_solve(factor, rhs, check_finite=False)
    # Y G = R  <=>  G Y^T = R^T  (G symmetric)
    return scipy.linalg.cho_solve(factor, rhs.T, check_finite=False).T


def graph_trace(S, lap) -> float:
    """``Tr(S @ lap @ S.T)`` for coefficients ``S`` (one column per node)."""
    S = np.asarray(S, dtype=np.float64)
    lap = np.asarray(lap, dtype=np.float64)
    if S.ndim == 1:
        S = S[np.newaxis, :]
    if lap.shape != (S.shape[1], S.shape[1]):
        raise ValidationError(f"Laplacian shape {lap.shape} does not match {S.shape[1]} nodes")
    return float(np.einsum("ij,ij->", S @ lap, S))
