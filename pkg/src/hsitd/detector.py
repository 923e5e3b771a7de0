"""Residual-ratio detector, spectral-angle baseline and ROC evaluation."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .cube import HsiCube, save_cube
from .errors import ValidationError
from .prox import spd_solve
from .subspace import JointDictionary

__all__ = [
    "RidgeWarning",
    "DetectionMap",
    "RocCurve",
    "h0_residuals",
    "h1_residuals",
    "detect",
    "roc_auc",
    "sam_baseline",
]

COND_LIMIT = 1e12
RIDGE_FACTOR = 1e-10


class RidgeWarning(UserWarning):
    """Emitted when the background Gram matrix needed a ridge to be solved."""


@dataclass
class DetectionMap:
    scores: np.ndarray  # (height, width)
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.scores = np.asarray(self.scores, dtype=np.float64)
        if self.scores.ndim == 1:
            self.scores = self.scores[np.newaxis, :]
        if self.scores.ndim != 2:
            raise ValidationError(f"detection scores must be 2-D, got shape {self.scores.shape}")
        if not np.all(np.isfinite(self.scores)):
            raise ValidationError("detection scores contain non-finite values")

    @property
    def height(self) -> int:
        return self.scores.shape[0]

    @property
    def width(self) -> int:
        return self.scores.shape[1]

    def to_cube(self) -> HsiCube:
        return HsiCube(self.scores[np.newaxis])

    def save(self, path, csv: bool = False) -> None:
        """Write the map as a single-band f64 cube, optionally with a
        ``row,col,score`` CSV next to it."""
        save_cube(self.to_cube(), path, dtype="f64")
        if csv:
            rows, cols = np.indices(self.scores.shape)
            lines = ["row,col,score"]
            lines.extend(
                f"{r},{c},{s!r}"
                for r, c, s in zip(rows.ravel(), cols.ravel(), self.scores.ravel().tolist())
            )
            Path(str(path) + ".csv").write_text("\n".join(lines) + "\n")


@dataclass
class RocCurve:
    thresholds: np.ndarray
    fpr: np.ndarray
    tpr: np.ndarray
    auc: float

    def to_csv(self) -> str:
        lines = ["threshold,fpr,tpr"]
        lines.extend(
            f"{th!r},{f!r},{t!r}"
            for th, f, t in zip(self.thresholds.tolist(), self.fpr.tolist(), self.tpr.tolist())
        )
        return "\n".join(lines) + "\n"


def _column_energy(R: np.ndarray) -> np.ndarray:
    return np.einsum("ij,ij->j", R, R)


def h0_residuals(X, A) -> np.ndarray:
    """Squared residual norm of each pixel after least-squares projection
    onto the columns of ``A``.

    If ``A^T A`` has condition number above 1e12 a ridge of
    ``1e-10 * trace(A^T A) / K`` is added and a :class:`RidgeWarning` is
    emitted.
    """
    X = np.asarray(X, dtype=np.float64)
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != X.shape[0]:
        raise ValidationError(f"background basis {A.shape} does not conform to pixels {X.shape}")
    gram = A.T @ A
    if np.linalg.cond(gram) > COND_LIMIT:
        ridge = RIDGE_FACTOR * np.trace(gram) / gram.shape[0]
        warnings.warn(
            f"background Gram matrix is ill-conditioned; adding ridge {ridge:.3g}",
            RidgeWarning,
            stacklevel=2,
        )
        gram = gram + ridge * np.eye(gram.shape[0])
    coef = spd_solve(gram, A.T @ X, name="A^T A (background least squares)")
    return _column_energy(X - A @ coef)


def h1_residuals(X, B: JointDictionary, S) -> np.ndarray:
    """Squared residual norm of each column of ``X - B S``."""
    X = np.asarray(X, dtype=np.float64)
    Bm = B.assembled
    S = np.asarray(S, dtype=np.float64)
    if S.shape != (Bm.shape[1], X.shape[1]) or Bm.shape[0] != X.shape[0]:
        raise ValidationError(
            f"shapes do not conform: X {X.shape}, B {Bm.shape}, S {S.shape}"
        )
    return _column_energy(X - Bm @ S)


def detect(h0, h1, eps_guard: float = 1e-12, shape=None, metadata=None) -> DetectionMap:
    """Per-pixel ratio ``h0 / (h1 + eps_guard)``.

    ``shape`` gives the ``(height, width)`` of the map; by default it is a
    single row.
    """
    h0 = np.asarray(h0, dtype=np.float64).ravel()
    h1 = np.asarray(h1, dtype=np.float64).ravel()
    if h0.shape != h1.shape:
        raise ValidationError(f"residual vectors differ in length: {h0.size} vs {h1.size}")
    if not eps_guard > 0:
        raise ValidationError(f"eps_guard must be positive, got {eps_guard}")
    scores = h0 / (h1 + eps_guard)
    if shape is not None:
        scores = scores.reshape(shape)
    return DetectionMap(scores, dict(metadata or {}))


def roc_auc(scores, mask) -> RocCurve:
    """ROC over every distinct score threshold and its trapezoidal area.

    A pixel is declared a target when its score is >= the threshold.  The
    first point, at threshold ``+inf``, is (0, 0); the last, at the minimum
    score, is (1, 1).  Tied scores are handled jointly, so the area equals
    ``P(s_t > s_b) + 0.5 * P(s_t == s_b)``.
    """
    if isinstance(scores, DetectionMap):
        scores = scores.scores
    scores = np.asarray(scores, dtype=np.float64)
    mask = np.asarray(mask, dtype=bool)
    if scores.shape != mask.shape:
        raise ValidationError(f"score map {scores.shape} and mask {mask.shape} differ in shape")
    s = scores.ravel()
    y = mask.ravel()
    n_pos = int(y.sum())
    n_neg = y.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValidationError("ROC needs both target and background pixels in the mask")

    order = np.argsort(-s, kind="mergesort")
    s_sorted = s[order]
    y_sorted = y[order]
    tp = np.cumsum(y_sorted)
    fp = np.cumsum(~y_sorted)
    # last index of each run of equal scores
    last = np.r_[np.nonzero(np.diff(s_sorted))[0], s.size - 1]
    tpr = np.r_[0.0, tp[last] / n_pos]
    fpr = np.r_[0.0, fp[last] / n_neg]
    thresholds = np.r_[np.inf, s_sorted[last]]
    auc = float(np.sum(np.diff(fpr) * (tpr[1:] + tpr[:-1]) / 2.0))
    return RocCurve(thresholds, fpr, tpr, auc)


def sam_baseline(X, target, shape=None) -> DetectionMap:
    """Cosine of the spectral angle between each pixel and ``target``.

    All-zero pixels score 0.
    """
    X = np.asarray(X, dtype=np.float64)
    t = np.asarray(target, dtype=np.float64).ravel()
    t_norm = np.linalg.norm(t)
    if t_norm == 0:
        raise ValidationError("target spectrum is all zero")
    if t.size != X.shape[0]:
        raise ValidationError(f"target has {t.size} bands, pixels have {X.shape[0]}")
    norms = np.sqrt(_column_energy(X))
    dots = t @ X
    scores = np.divide(dots, norms * t_norm, out=np.zeros_like(dots), where=norms > 0)
    if shape is not None:
        scores = scores.reshape(shape)
    return DetectionMap(scores, {"method": "sam"})
