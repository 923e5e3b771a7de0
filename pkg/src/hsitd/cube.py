"""Hyperspectral cube container, file IO and pixel-matrix conversion.

A cube is stored on disk as a JSON sidecar plus a raw little-endian payload
in band-sequential (BSQ) order.  In memory the values live in a
``(bands, height, width)`` float64 array, so flattening is a plain reshape
and pixel ``(row, col)`` becomes column ``row * width + col`` of the pixel
matrix.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import CubeFormatError, ValidationError

__all__ = [
    "HsiCube",
    "load_cube",
    "save_cube",
    "normalize",
    "flatten",
    "unflatten",
    "average_target_spectrum",
    "load_mask",
    "save_mask",
    "load_spectrum",
    "save_spectrum",
]

_DTYPES = {"f32": np.dtype("<f4"), "f64": np.dtype("<f8")}


@dataclass(frozen=True)
class HsiCube:
    """Immutable hyperspectral raster.

    Parameters
    ----------
    values : ndarray, shape (bands, height, width)
        Reflectance values, converted to float64.
    scale : float
        Factor the values have been divided by relative to the source data
        (1.0 for raw cubes).  Target spectra read from disk must be divided
        by the same factor to share the cube's scale.
    """

    values: np.ndarray
    scale: float = 1.0

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64, copy=True)
        if v.ndim != 3 or min(v.shape) < 1:
            raise ValidationError(
                f"cube values must be a non-empty (bands, height, width) array, got shape {v.shape}"
            )
        if not np.all(np.isfinite(v)):
            raise ValidationError("cube contains non-finite values")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "scale", float(self.scale))

    @property
    def bands(self) -> int:
        return self.values.shape[0]

    @property
    def height(self) -> int:
        return self.values.shape[1]

    @property
    def width(self) -> int:
        return self.values.shape[2]

    @property
    def n_pixels(self) -> int:
        return self.height * self.width


def _split_path(path) -> tuple[Path, Path]:
    p = Path(path)
    if p.suffix in (".json", ".raw"):
        p = p.with_suffix("")
    return p.with_name(p.name + ".json"), p.with_name(p.name + ".raw")


def load_cube(path) -> HsiCube:
    """Read a cube from ``<path>.json`` + ``<path>.raw``.

    ``path`` may be given with or without either suffix.
    """
    meta_path, raw_path = _split_path(path)
    try:
        meta = json.loads(meta_path.read_text())
    except FileNotFoundError:
        raise CubeFormatError(f"missing sidecar: {meta_path}") from None
    except (OSError, json.JSONDecodeError) as exc:
        raise CubeFormatError(f"corrupt sidecar {meta_path}: {exc}") from None
    if not isinstance(meta, dict):
        raise CubeFormatError(f"corrupt sidecar {meta_path}: expected a JSON object")

    try:
        dims = [meta["height"], meta["width"], meta["bands"]]
        dtype_name = meta.get("dtype", "f32")
        interleave = meta.get("interleave", "bsq")
        byte_order = meta.get("byte_order", "le")
    except KeyError as exc:
        raise CubeFormatError(f"sidecar {meta_path} lacks field {exc}") from None
    if not all(isinstance(d, int) and not isinstance(d, bool) and d > 0 for d in dims):
        raise CubeFormatError(f"sidecar {meta_path}: height/width/bands must be positive integers")
    if dtype_name not in _DTYPES:
        raise CubeFormatError(f"sidecar {meta_path}: unsupported dtype {dtype_name!r}")
    if interleave != "bsq":
        raise CubeFormatError(f"sidecar {meta_path}: only 'bsq' interleave is supported")
    if byte_order != "le":
        raise CubeFormatError(f"sidecar {meta_path}: only 'le' byte order is supported")

    height, width, bands = dims
    dtype = _DTYPES[dtype_name]
    try:
        payload = raw_path.read_bytes()
    except OSError as exc:
        raise CubeFormatError(f"cannot read payload {raw_path}: {exc}") from None
    expected = height * width * bands * dtype.itemsize
    if len(payload) != expected:
        raise CubeFormatError(
            f"payload size mismatch for {raw_path}: expected {expected} bytes "
            f"({bands}x{height}x{width} {dtype_name}), found {len(payload)}"
        )
    values = np.frombuffer(payload, dtype=dtype).reshape(bands, height, width)
    if not np.all(np.isfinite(values)):
        raise CubeFormatError(f"payload {raw_path} contains non-finite values")
    return HsiCube(values)


def save_cube(cube: HsiCube, path, dtype: str = "f64") -> None:
    """Write ``cube`` as ``<path>.json`` + ``<path>.raw``."""
    if dtype not in _DTYPES:
        raise ValidationError(f"unsupported dtype {dtype!r}")
    meta_path, raw_path = _split_path(path)
    meta_path.parent.mkdir(parents=True, exist_ok=True)
    meta = {
        "height": cube.height,
        "width": cube.width,
        "bands": cube.bands,
        "dtype": dtype,
        "interleave": "bsq",
        "byte_order": "le",
    }
    raw_path.write_bytes(np.ascontiguousarray(cube.values, dtype=_DTYPES[dtype]).tobytes())
    meta_path.write_text(json.dumps(meta, indent=2) + "\n")


def normalize(cube: HsiCube) -> HsiCube:
    """Divide every value by the cube's global maximum."""
    peak = float(cube.values.max())
    if peak <= 0.0:
        raise ValidationError("cannot normalize: cube maximum is not positive (degenerate scene)")
    return HsiCube(cube.values / peak, scale=cube.scale * peak)


def flatten(cube: HsiCube) -> np.ndarray:
    """Return the ``bands x (height*width)`` pixel matrix (row-major pixels)."""
    return cube.values.reshape(cube.bands, cube.n_pixels).copy()


def unflatten(X: np.ndarray, height: int, width: int, scale: float = 1.0) -> HsiCube:
    X = np.asarray(X)
    if X.ndim == 1:
        X = X[np.newaxis, :]
    if X.shape[1] != height * width:
        raise ValidationError(f"pixel matrix has {X.shape[1]} columns, expected {height * width}")
    return HsiCube(X.reshape(X.shape[0], height, width), scale=scale)


def average_target_spectrum(cube: HsiCube, mask: np.ndarray) -> np.ndarray:
    """Mean spectrum over the pixels flagged in ``mask``."""
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != (cube.height, cube.width):
        raise ValidationError(
            f"mask shape {mask.shape} does not match cube {(cube.height, cube.width)}"
        )
    flags = mask.ravel()
    if not flags.any():
        raise ValidationError("mask flags no target pixels")
    return flatten(cube)[:, flags].mean(axis=1)


def load_mask(path) -> np.ndarray:
    """Read an ASCII PGM (P2) mask; any positive value marks a target."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise CubeFormatError(f"cannot read mask {path}: {exc}") from None
    tokens = []
    for line in text.splitlines():
        tokens.extend(line.split("#", 1)[0].split())
    if not tokens or tokens[0] != "P2":
        raise CubeFormatError(f"mask {path} is not an ASCII PGM (P2) file")
    try:
        width, height, _maxval = (int(t) for t in tokens[1:4])
        pixels = np.array([int(t) for t in tokens[4:]], dtype=np.int64)
    except ValueError:
        raise CubeFormatError(f"mask {path} has non-integer tokens") from None
    if pixels.size != width * height:
        raise CubeFormatError(
            f"mask {path} declares {width}x{height} pixels but holds {pixels.size}"
        )
    return (pixels > 0).reshape(height, width)


def save_mask(mask: np.ndarray, path) -> None:
    mask = np.asarray(mask, dtype=bool)
    height, width = mask.shape
    lines = ["P2", f"{width} {height}", "1"]
    lines.extend(" ".join(str(int(v)) for v in row) for row in mask)
    Path(path).write_text("\n".join(lines) + "\n")


def load_spectrum(path) -> np.ndarray:
    """Read a target spectrum CSV: one reflectance per line."""
    path = Path(path)
    try:
        lines = path.read_text().splitlines()
    except OSError as exc:
        raise CubeFormatError(f"cannot read spectrum {path}: {exc}") from None
    try:
        values = np.array([float(s.split(",")[0]) for s in lines if s.strip()])
    except ValueError:
        raise CubeFormatError(f"spectrum {path} has a non-numeric line") from None
    if values.size == 0 or not np.all(np.isfinite(values)):
        raise CubeFormatError(f"spectrum {path} is empty or non-finite")
    return values


def save_spectrum(values: np.ndarray, path) -> None:
    # repr keeps a float64 round-trip exact
    Path(path).write_text("".join(f"{float(v)!r}\n" for v in np.asarray(values).ravel()))
