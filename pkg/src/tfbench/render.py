"""Heatmap rendering of time-frequency matrices, PNG output and the TFM format.

TFM binary layout (little-endian): magic ``b"TFM1"``, uint32 rows, uint32
cols, then rows*cols float32 values in row-major order. Axis metadata lives
in a JSON sidecar ``<name>.tfm.json`` holding kind, units, row_axis,
row_coords, time_step_s and the transform config.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from tfbench.stft import TfMatrix

TFM_MAGIC = b"TFM1"
DB_EPS = 1e-12


@dataclass(frozen=True)
class ColorMap:
    positions: tuple[float, ...]
    colors: tuple[tuple[int, int, int], ...]

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=np.float64)
        if len(pos) < 2 or len(pos) != len(self.colors):
            raise ValueError("need at least two control points with one color each")
        if pos[0] != 0.0 or pos[-1] != 1.0 or np.any(np.diff(pos) <= 0):
            raise ValueError("positions must increase strictly from 0.0 to 1.0")

    @classmethod
    def from_points(cls, points) -> "ColorMap":
        pos, cols = zip(*[(float(p), tuple(int(c) for c in rgb)) for p, rgb in points])
        return cls(tuple(pos), tuple(cols))

    def lookup(self, v: np.ndarray) -> np.ndarray:
        """Map values in [0, 1] to uint8 RGB by piecewise-linear interpolation."""
        v = np.clip(np.asarray(v, dtype=np.float64), 0.0, 1.0)
        cols = np.asarray(self.colors, dtype=np.float64)
        rgb = np.stack([np.interp(v, self.positions, cols[:, c]) for c in range(3)], axis=-1)
        return np.clip(np.round(rgb), 0, 255).astype(np.uint8)


# dark blue (low energy) to dark red (high energy)
JET_LIKE = ColorMap.from_points(
    [
        (0.0, (0, 0, 128)),
        (0.25, (0, 0, 255)),
        (0.5, (0, 255, 255)),
        (0.75, (255, 255, 0)),
        (0.875, (255, 0, 0)),
        (1.0, (128, 0, 0)),
    ]
)


@dataclass(frozen=True)
class RenderConfig:
    width: int = 128
    height: int = 128
    floor_db: float = 80.0
    colormap: ColorMap = JET_LIKE

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError("image dimensions must be positive")


@dataclass
class HeatmapImage:
    """8-bit RGB raster, ``pixels`` shaped (height, width, 3), top row first."""

    pixels: np.ndarray

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.ndim != 3 or px.shape[2] != 3 or px.shape[0] < 1 or px.shape[1] < 1:
            raise ValueError(f"pixels must have shape (H, W, 3), got {px.shape}")
        self.pixels = px.astype(np.uint8, copy=False)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]


def to_db(m: TfMatrix, floor_db: float = 80.0) -> TfMatrix:
    """``10*log10(v + 1e-12)`` clamped to ``[max - |floor_db|, max]``."""
    db = 10.0 * np.log10(m.values + DB_EPS)
    top = float(db.max())
    db = np.clip(db, top - abs(floor_db), top)
    return TfMatrix(db, m.row_axis, m.row_coords, m.time_step_s, m.kind, units="db", config=m.config)


def _bilinear_weights(n_in: int, n_out: int) -> np.ndarray:
    """Row-stochastic (n_out, n_in) triangle-filter resampling matrix.

    Pixel centres are aligned as in common image libraries. When shrinking,
    the triangle is widened by the reduction factor so every input row
    contributes; at equal sizes this is the identity.
    """
    scale = n_in / n_out
    support = max(scale, 1.0)
    centres = (np.arange(n_out) + 0.5) * scale
    src = np.arange(n_in) + 0.5
    w = np.maximum(0.0, 1.0 - np.abs(src[None, :] - centres[:, None]) / support)
    sums = w.sum(axis=1, keepdims=True)
    # extreme upsampling near an edge can leave a row with no support
    empty = sums[:, 0] == 0
    if np.any(empty):
        nearest = np.clip(np.floor(centres[empty]).astype(int), 0, n_in - 1)
        w[empty, nearest] = 1.0
        sums = w.sum(axis=1, keepdims=True)
    return w / sums


def resample(values: np.ndarray, out_height: int, out_width: int) -> np.ndarray:
    rows = _bilinear_weights(values.shape[0], out_height)
    cols = _bilinear_weights(values.shape[1], out_width)
    return rows @ values @ cols.T


def normalize_minmax(values: np.ndarray) -> np.ndarray:
    lo, hi = float(values.min()), float(values.max())
    if hi <= lo:
        return np.zeros_like(values, dtype=np.float64)
    return (values - lo) / (hi - lo)


def render_heatmap(m: TfMatrix, cmap: ColorMap = JET_LIKE, out_width: int = 128, out_height: int = 128) -> HeatmapImage:
    """Color-map ``m`` into an RGB image with time on x and row 0 at the bottom."""
    if out_width < 1 or out_height < 1:
        raise ValueError("output dimensions must be positive")
    norm = normalize_minmax(m.values)
    img = resample(norm, out_height, out_width)
    return HeatmapImage(cmap.lookup(img[::-1]))


def render(m: TfMatrix, config: RenderConfig = RenderConfig()) -> HeatmapImage:
    """dB scaling followed by ``render_heatmap``."""
    return render_heatmap(to_db(m, config.floor_db), config.colormap, config.width, config.height)


def save_png(path: str | Path, image: HeatmapImage) -> None:
    Image.fromarray(image.pixels, mode="RGB").save(Path(path), format="PNG")


def load_png(path: str | Path) -> HeatmapImage:
    with Image.open(Path(path)) as im:
        return HeatmapImage(np.asarray(im.convert("RGB")))


def sidecar_path(path: str | Path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".json") if path.suffix == ".tfm" else path.with_suffix(".tfm.json")


def write_tfm(path: str | Path, m: TfMatrix) -> Path:
    """Write the TFM binary and its JSON sidecar; returns the sidecar path."""
    path = Path(path)
    rows, cols = m.values.shape
    with open(path, "wb") as fh:
        fh.write(TFM_MAGIC)
        fh.write(struct.pack("<II", rows, cols))
        fh.write(m.values.astype("<f4").tobytes(order="C"))
    meta = {
        "kind": m.kind,
        "units": m.units,
        "row_axis": m.row_axis,
        "row_coords": [float(c) for c in m.row_coords],
        "time_step_s": m.time_step_s,
        "config": m.config,
    }
    side = sidecar_path(path)
    side.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return side


def read_tfm(path: str | Path) -> TfMatrix:
    path = Path(path)
    raw = path.read_bytes()
    if raw[:4] != TFM_MAGIC:
        raise ValueError(f"{path}: not a TFM file (bad magic {raw[:4]!r})")
    rows, cols = struct.unpack("<II", raw[4:12])
    expected = 12 + 4 * rows * cols
    if len(raw) != expected:
        raise ValueError(f"{path}: expected {expected} bytes for {rows}x{cols}, found {len(raw)}")
    values = np.frombuffer(raw, dtype="<f4", offset=12).reshape(rows, cols).astype(np.float64)
    meta = json.loads(sidecar_path(path).read_text(encoding="utf-8"))
    return TfMatrix(
        values=values,
        row_axis=meta["row_axis"],
        row_coords=np.asarray(meta["row_coords"]),
        time_step_s=float(meta["time_step_s"]),
        kind=meta["kind"],
        units=meta.get("units", "power"),
        config=meta.get("config", {}),
    )
