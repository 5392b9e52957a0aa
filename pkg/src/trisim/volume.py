"""Dense 3D field containers, FFT convention, and raw-volume file I/O.

Arrays are stored as C-ordered float64/complex128 with shape
``(nz, ny, nx)`` so that x is the fastest-varying index in memory; this
matches the on-disk layout exactly.  The FFT convention is fixed
globally: unnormalized forward transform, inverse carries the 1/N
factor, DC at index (0, 0, 0).  With that convention the circular
convolution theorem reads ``conv(a, b) = ifft(fft(a) * fft(b))`` with no
extra scaling.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import _fft
from .errors import FileFormatError, GridError


@dataclass(frozen=True)
class GridSpec:
    """Voxel counts and physical pitch (nanometers) of a 3D grid."""

    nx: int
    ny: int
    nz: int
    dx: float
    dy: float
    dz: float

    def __post_init__(self):
        for name in ("nx", "ny", "nz"):
            n = getattr(self, name)
            if not isinstance(n, (int, np.integer)) or n < 2:
                raise GridError(f"{name}={n}: voxel counts must be integers >= 2")
            if n % 2 != 0:
                raise GridError(f"{name}={n}: voxel counts must be even")
        for name in ("dx", "dy", "dz"):
            d = getattr(self, name)
            if not np.isfinite(d) or d <= 0:
                raise GridError(f"{name}={d}: voxel pitch must be positive and finite")

    @property
    def shape(self) -> tuple[int, int, int]:
        """Array shape (nz, ny, nx)."""
        return (self.nz, self.ny, self.nx)

    @property
    def voxel_count(self) -> int:
        return self.nx * self.ny * self.nz

    @property
    def extent_nm(self) -> tuple[float, float, float]:
        return (self.nx * self.dx, self.ny * self.dy, self.nz * self.dz)

    def binned(self, factor: int) -> "GridSpec":
        """Grid of the camera after block-averaging by `factor` per axis."""
        if factor < 1 or any(n % factor for n in (self.nx, self.ny, self.nz)):
            raise GridError(f"binning {factor} does not divide grid {self.shape}")
        return GridSpec(self.nx // factor, self.ny // factor, self.nz // factor,
                        self.dx * factor, self.dy * factor, self.dz * factor)

    def refined(self, factor: int) -> "GridSpec":
        """Inverse of `binned`: the fine grid this camera grid came from."""
        if factor < 1:
            raise GridError(f"refinement factor must be >= 1, got {factor}")
        return GridSpec(self.nx * factor, self.ny * factor, self.nz * factor,
                        self.dx / factor, self.dy / factor, self.dz / factor)


class Volume:
    """Real scalar field on a GridSpec. Values are float64, finite."""

    __slots__ = ("grid", "values")

    def __init__(self, grid: GridSpec, values: np.ndarray):
        values = np.asarray(values, dtype=np.float64)
        if values.shape != grid.shape:
            raise GridError(
               f"value shape {values.shape} does not match grid {grid.shape}")
        if not np.all(np.isfinite(values)):
            raise GridError("volume contains non-finite values")
        self.grid = grid
        self.values = values

    @classmethod
    def zeros(cls, grid: GridSpec) -> "Volume":
        return cls(grid, np.zeros(grid.shape))

    @classmethod
    def full(cls, grid: GridSpec, value: float) -> "Volume":
        return cls(grid, np.full(grid.shape, float(value)))

    def copy(self) -> "Volume":
        return Volume(self.grid, self.values.copy())


class Spectrum:
    """Complex frequency-domain field with the same grid bookkeeping."""

    __slots__ = ("grid", "values")

    def __init__(self, grid: GridSpec, values: np.ndarray):
        values = np.asarray(values, dtype=np.complex128)
        if values.shape != grid.shape:
            raise GridError(
                f"spectrum shape {values.shape} does not match grid {grid.shape}")
        self.grid = grid
        self.values = values


def fft_forward(v: Volume) -> Spectrum:
    """Unnormalized forward DFT; sample (0,0,0) holds the voxel sum."""
    return Spectrum(v.grid, _fft.fftn(v.values))


def fft_inverse(s: Spectrum) -> Volume:
    """Inverse DFT with the 1/N factor; imaginary residue is discarded."""
    return Volume(s.grid, _fft.ifftn(s.values).real)


def inner_product(a: Volume, b: Volume) -> float:
    """Plain voxel-sum inner product (no pitch weighting)."""
    if a.grid != b.grid:
        raise GridError(f"grid mismatch: {a.grid.shape} vs {b.grid.shape}")
    return float(np.dot(a.values.ravel(), b.values.ravel()))


def norm(v: Volume) -> float:
    return float(np.linalg.norm(v.values.ravel()))


def l2_normalize(v: Volume) -> Volume:
    n = norm(v)
    if n == 0.0:
        raise GridError("degenerate volume: zero l2 norm")
    return Volume(v.grid, v.values / n)


def clamp_nonnegative(v: Volume) -> Volume:
    return Volume(v.grid, np.maximum(v.values, 0.0))


SIDE_CAR_ORDER = "x-fastest"
SIDE_CAR_DTYPE = "f32le"


def save_volume(v: Volume, path: str | Path) -> Path:
    """Write raw little-endian float32 plus a JSON sidecar.

    The raw file holds values in x-fastest order; the sidecar shares the
    basename with a .json suffix.  Internal doubles are quantized to
    float32 on write.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    v.values.astype("<f4").tofile(path)
    g = v.grid
    sidecar = {
        "dims": [g.nx, g.ny, g.nz],
        "voxel_nm": [g.dx, g.dy, g.dz],
        "order": SIDE_CAR_ORDER,
        "dtype": SIDE_CAR_DTYPE,
    }
    path.with_suffix(".json").write_text(json.dumps(sidecar, indent=2) + "\n")
    return path


def load_volume(path: str | Path) -> Volume:
    path = Path(path)
    sidecar_path = path.with_suffix(".json")
    if not path.exists():
        raise FileFormatError(f"volume file not found: {path}")
    if not sidecar_path.exists():
        raise FileFormatError(f"missing JSON sidecar: {sidecar_path}")
    try:
        meta = json.loads(sidecar_path.read_text())
    except json.JSONDecodeError as e:
        raise FileFormatError(f"unreadable sidecar {sidecar_path}: {e}") from e
    for key in ("dims", "voxel_nm", "order", "dtype"):
        if key not in meta:
            raise FileFormatError(f"sidecar {sidecar_path} missing key '{key}'")
    if meta["order"] != SIDE_CAR_ORDER or meta["dtype"] != SIDE_CAR_DTYPE:
        raise FileFormatError(
            f"unsupported volume layout {meta['order']}/{meta['dtype']}")
    nx, ny, nz = (int(d) for d in meta["dims"])
    dx, dy, dz = (float(d) for d in meta["voxel_nm"])
    grid = GridSpec(nx, ny, nz, dx, dy, dz)
    raw = np.fromfile(path, dtype="<f4")
    if raw.size != grid.voxel_count:
        raise FileFormatError(
            f"{path}: {raw.size} values on disk, sidecar declares {grid.voxel_count}")
    return Volume(grid, raw.astype(np.float64).reshape(grid.shape))
