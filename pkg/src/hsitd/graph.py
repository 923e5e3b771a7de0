"""Local-region graphs and graph-Laplacian regularized sparse coding.

The image is tiled into ``omega x omega`` blocks (edge blocks may be
smaller).  Inside each block two pixels are joined by a unit-weight edge when
their squared spectral distance is below ``sigma``.  The coding problem

    0.5*||X - B S||_F^2 + lambda3 * sum_l Tr(S_l L_l S_l^T) + lambda4*||S||_1

is solved by ADMM with two copies of ``S``: ``V1`` carries the graph term
(solved block by block) and ``V2`` the L1 term.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.spatial.distance import cdist

from .errors import ValidationError
from .prox import graph_trace, soft_threshold, spd_solve
from .subspace import AdmmConfig, AdmmTrace, JointDictionary, SparseCode, _check_finite, mu_schedule

__all__ = [
    "RegionPartition",
    "RegionGraph",
    "build_partition",
    "build_graphs",
    "glr_objective",
    "run_lrb_glr",
]


@dataclass(frozen=True)
class RegionPartition:
    """Rectangular tiling of a ``height x width`` image.

    ``regions[l]`` holds the pixel-matrix column indices (row-major pixel
    order) of block ``l``; blocks are listed row of blocks by row of blocks.
    """

    height: int
    width: int
    omega: int
    regions: tuple

    @property
    def n_regions(self) -> int:
        return len(self.regions)

    @property
    def n_pixels(self) -> int:
        return self.height * self.width


@dataclass(frozen=True)
class RegionGraph:
    weights: np.ndarray
    laplacian: np.ndarray

    @property
    def n_edges(self) -> int:
        return int(self.weights.sum()) // 2


def build_partition(height: int, width: int, omega: int = 10) -> RegionPartition:
    if omega < 1 or int(omega) != omega:
        raise ValidationError(f"omega must be a positive integer, got {omega}")
    if height < 1 or width < 1:
        raise ValidationError(f"image must be non-empty, got {height}x{width}")
    omega = int(omega)
    index = np.arange(height * width).reshape(height, width)
    regions = []
    for r0 in range(0, height, omega):
        for c0 in range(0, width, omega):
            block = index[r0:r0 + omega, c0:c0 + omega].ravel()
            block.flags.writeable = False
            regions.append(block)
    return RegionPartition(height, width, omega, tuple(regions))


def build_graphs(X, part: RegionPartition, sigma: float = 0.3) -> list:
    """Thresholded 0/1 weight matrix and Laplacian for every region."""
    if not sigma > 0:
        raise ValidationError(f"sigma must be positive, got {sigma}")
    X = np.asarray(X, dtype=np.float64)
    if X.shape[1] != part.n_pixels:
        raise ValidationError(
            f"pixel matrix has {X.shape[1]} columns but the partition covers {part.n_pixels}"
        )
    graphs = []
    for idx in part.regions:
        pixels = X[:, idx].T
        W = (cdist(pixels, pixels, "sqeuclidean") < sigma).astype(np.float64)
        np.fill_diagonal(W, 0.0)
        graphs.append(RegionGraph(W, np.diag(W.sum(axis=1)) - W))
    return graphs


def _check_layout(N: int, graphs, part: RegionPartition) -> None:
    if part.n_pixels != N:
        raise ValidationError(f"partition covers {part.n_pixels} pixels, scene has {N}")
    if len(graphs) != part.n_regions:
        raise ValidationError(f"{len(graphs)} graphs for {part.n_regions} regions")
    for l, (g, idx) in enumerate(zip(graphs, part.regions)):
        if g.laplacian.shape != (idx.size, idx.size):
            raise ValidationError(
                f"region {l}: Laplacian {g.laplacian.shape} does not match {idx.size} pixels"
            )


def glr_objective(X, B: JointDictionary, S, graphs, part, lambda3: float, lambda4: float) -> float:
    X = np.asarray(X, dtype=np.float64)
    fit = 0.5 * np.linalg.norm(X - B.assembled @ S) ** 2
    smooth = sum(graph_trace(S[:, idx], g.laplacian) for g, idx in zip(graphs, part.regions))
    return float(fit + lambda3 * smooth + lambda4 * np.abs(S).sum())


def run_lrb_glr(
    X,
    B: JointDictionary,
    graphs,
    part: RegionPartition,
    lambda3: float = 1.0,
    lambda4: float = 1.0,
    cfg: AdmmConfig = AdmmConfig(),
    callback: Optional[Callable[[int, dict], None]] = None,
) -> SparseCode:
    """Joint coefficients of ``X`` on ``B`` with region-graph smoothing.

    Iterates until ``||S - V1||_F + ||S - V2||_F < cfg.eps`` or ``cfg.k_max``
    iterations.  ``callback(k, state)`` is invoked after each iteration with
    the current ``S, V1, V2, H1, H2`` and ``mu``.
    """
    if lambda3 < 0 or lambda4 < 0:
        raise ValidationError(f"lambda3/lambda4 must be nonnegative, got {lambda3}, {lambda4}")
    X = np.asarray(X, dtype=np.float64)
    Bm = B.assembled
    if X.ndim != 2 or X.shape[0] != Bm.shape[0]:
        raise ValidationError(f"pixel matrix {X.shape} does not conform to dictionary {Bm.shape}")
    _check_layout(X.shape[1], graphs, part)

    n_atoms = Bm.shape[1]
    gram = Bm.T @ Bm
    BtX = Bm.T @ X
    eye = np.eye(n_atoms)
    eyes = {idx.size: np.eye(idx.size) for idx in part.regions}
    S = np.zeros((n_atoms, X.shape[1]))
    V1 = np.zeros_like(S)
    V2 = np.zeros_like(S)
    H1 = np.zeros_like(S)
    H2 = np.zeros_like(S)
    trace = AdmmTrace()
    for k, mu in enumerate(mu_schedule(cfg)):
        S = spd_solve(
            gram + 2 * mu * eye, BtX + mu * V1 - H1 + mu * V2 - H2,
            name=f"B^T B + 2 mu I (iteration {k})",
        )
        V1 = np.empty_like(S)
        for l, (g, idx) in enumerate(zip(graphs, part.regions)):
            V1[:, idx] = spd_solve(
                2 * lambda3 * g.laplacian + mu * eyes[idx.size],
                mu * S[:, idx] + H1[:, idx],
                side="right",
                name=f"2 lambda3 L + mu I (region {l}, iteration {k})",
            )
        V2 = soft_threshold(S + H2 / mu, lambda4 / mu)
        H1 = H1 + mu * (S - V1)
        H2 = H2 + mu * (S - V2)
        _check_finite("run_lrb_glr", k, S, V1, H1, H2)
        residual = float(np.linalg.norm(S - V1) + np.linalg.norm(S - V2))
        done = trace.record(mu, residual, cfg.eps)
        if callback is not None:
            callback(k, {"S": S, "V1": V1, "V2": V2, "H1": H1, "H2": H2, "mu": mu})
        if done:
            break

    objective = glr_objective(X, B, S, graphs, part, lambda3, lambda4)
    return SparseCode(S, trace, objective)
