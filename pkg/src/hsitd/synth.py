"""Seeded synthetic scenes with a planted low-rank background and targets."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .cube import HsiCube, save_cube, save_mask, save_spectrum, unflatten
from .errors import ValidationError

__all__ = ["SyntheticSpec", "SyntheticScene", "smooth_spectra", "generate_scene", "write_scene"]


@dataclass(frozen=True)
class SyntheticSpec:
    height: int = 50
    width: int = 50
    bands: int = 40
    background_rank: int = 8
    n_targets: int = 20
    target_abundance: float = 0.2
    noise_snr_db: float = 30.0  # math.inf for a noise-free scene
    seed: int = 7

    def __post_init__(self):
        for name in ("height", "width", "bands", "background_rank"):
            if getattr(self, name) < 1:
                raise ValidationError(f"{name} must be positive")
        if self.background_rank >= self.bands:
            raise ValidationError("background_rank must be smaller than bands")
        if not 0 <= self.n_targets < self.height * self.width:
            raise ValidationError("n_targets must be in [0, height*width)")
        if not 0 < self.target_abundance <= 1:
            raise ValidationError("target_abundance must lie in (0, 1]")
        if math.isnan(self.noise_snr_db):
            raise ValidationError("noise_snr_db must not be NaN")


@dataclass
class SyntheticScene:
    cube: HsiCube
    mask: np.ndarray  # (height, width) bool
    target: np.ndarray  # (bands,)
    endmembers: np.ndarray  # (bands, rank)
    abundances: np.ndarray  # (rank, N)


def smooth_spectra(rng: np.random.Generator, bands: int, n: int, floor: float = 0.1) -> np.ndarray:
    """``n`` smooth nonnegative curves with maximum 1.

    Each curve is a Gaussian random walk along the band axis, shifted so
    its minimum sits at ``floor`` times its range, then max-normalized.
    """
    walks = np.cumsum(rng.standard_normal((bands, n)), axis=0)
    walks -= walks.min(axis=0)
    walks += floor * walks.max(axis=0)
    return walks / walks.max(axis=0)


def generate_scene(spec: SyntheticSpec = SyntheticSpec()) -> SyntheticScene:
    rng = np.random.default_rng(spec.seed)
    n_pixels = spec.height * spec.width
    E = smooth_spectra(rng, spec.bands, spec.background_rank)
    F = rng.uniform(size=(spec.background_rank, n_pixels))
    F /= F.sum(axis=0)
    target = smooth_spectra(rng, spec.bands, 1)[:, 0]

    X = E @ F
    idx = rng.choice(n_pixels, size=spec.n_targets, replace=False)
    a = spec.target_abundance
    X[:, idx] = a * target[:, np.newaxis] + (1.0 - a) * X[:, idx]
    if math.isfinite(spec.noise_snr_db):
        power = np.mean(X ** 2)
        noise_std = math.sqrt(power / 10.0 ** (spec.noise_snr_db / 10.0))
        X = X + rng.normal(0.0, noise_std, size=X.shape)

    mask = np.zeros(n_pixels, dtype=bool)
    mask[idx] = True
    return SyntheticScene(
        unflatten(X, spec.height, spec.width),
        mask.reshape(spec.height, spec.width),
        target,
        E,
        F,
    )


def write_scene(scene: SyntheticScene, out_dir) -> dict:
    """Write ``scene.json/.raw``, ``mask.pgm`` and ``target.csv`` into ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"cube": out / "scene", "mask": out / "mask.pgm", "target": out / "target.csv"}
    save_cube(scene.cube, paths["cube"], dtype="f64")
    save_mask(scene.mask, paths["mask"])
    save_spectrum(scene.target, paths["target"])
    return paths
