"""MSE / SSIM evaluation protocol and line profiles.

Both metrics run after a fixed preprocessing protocol: truth and
restored volumes are l2-normalized, then negative values of the
restored volume are set to zero (normalization first, clamping second).
A global positive rescale of either input therefore cannot change the
reported numbers.  An identically zero restored volume is left as zeros
rather than rejected, so a null reconstruction scores mse = 1/N.

SSIM is the volumetric mean of local SSIM with a separable 3D Gaussian
window (sigma 1.5, 11^3 support), K1 = 0.01, K2 = 0.03, and dynamic
range equal to the max of the normalized truth.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import correlate1d
from scipy.signal import find_peaks

from .errors import MetricsError
from .volume import Volume


@dataclass(frozen=True)
class MetricsReport:
    mse: float
    ssim: float
    method: str = ""
    scheme: str = ""
    iters: int = 0

    def to_dict(self) -> dict:
        return {"mse": self.mse, "ssim": self.ssim, "method": self.method,
                "scheme": self.scheme, "iters": self.iters}


def _protocol(truth: Volume, restored: Volume) -> tuple[np.ndarray, np.ndarray]:
    if truth.grid != restored.grid:
        raise MetricsError(
            f"grid mismatch: truth {truth.grid.shape} vs restored "
            f"{restored.grid.shape}")
    t_norm = float(np.linalg.norm(truth.values.ravel()))
    if t_norm == 0.0:
        raise MetricsError("degenerate truth volume (zero norm)")
    r_norm = float(np.linalg.norm(restored.values.ravel()))
    t = truth.values / t_norm
    r = restored.values / r_norm if r_norm > 0 else np.zeros_like(restored.values)
    return t, np.maximum(r, 0.0)


def mse(truth: Volume, restored: Volume) -> float:
    t, r = _protocol(truth, restored)
    diff = t - r
    return float(np.mean(diff * diff))


def _gaussian_window(size: int, sigma: float) -> np.ndarray:
    half = size // 2
    x = np.arange(-half, half + 1, dtype=np.float64)
    w = np.exp(-0.5 * (x / sigma) ** 2)
    return w / w.sum()


def ssim3d(truth: Volume, restored: Volume, window_size: int = 11,
           window_sigma: float = 1.5, k1: float = 0.01, k2: float = 0.03,
           dynamic_range: float | None = None) -> float:
    """Mean local SSIM after the normalization protocol.

    `dynamic_range` defaults to the max of the normalized truth, which
    on sparse volumes makes the stabilizing constants tiny and the
    metric very hard on background noise.  Pass 1.0 for the saturating
    convention many published pipelines use on l2-normalized data.
    """
    t, r = _protocol(truth, restored)
    if min(truth.grid.shape) < window_size:
        raise MetricsError(
            f"grid {truth.grid.shape} smaller than SSIM window {window_size}^3")
    win = _gaussian_window(window_size, window_sigma)

    def smooth(a: np.ndarray) -> np.ndarray:
        for axis in range(3):
            a = correlate1d(a, win, axis=axis, mode="reflect")
        return a

    if dynamic_range is None:
        dynamic_range = float(t.max())
    c1 = (k1 * dynamic_range) ** 2
    c2 = (k2 * dynamic_range) ** 2
    mu_t = smooth(t)
    mu_r = smooth(r)
    var_t = smooth(t * t) - mu_t * mu_t
    var_r = smooth(r * r) - mu_r * mu_r
    cov = smooth(t * r) - mu_t * mu_r
    ssim_map = ((2 * mu_t * mu_r + c1) * (2 * cov + c2)
                / ((mu_t * mu_t + mu_r * mu_r + c1) * (var_t + var_r + c2)))
    return float(np.mean(ssim_map))


def evaluate(truth: Volume, restored: Volume, method: str = "",
             scheme: str = "", iters: int = 0) -> MetricsReport:
    return MetricsReport(mse=mse(truth, restored), ssim=ssim3d(truth, restored),
                         method=method, scheme=scheme, iters=iters)


PROFILE_AXES = ("x", "y", "z")


def line_profile(v: Volume, axis: str, anchor: tuple[int, int, int]
                 ) -> np.ndarray:
    """1D samples along a lateral (x or y) or axial (z) line through the
    anchor voxel; returns an (n, 2) array of (position_nm, value).
    Positions are voxel centers."""
    if axis not in PROFILE_AXES:
        raise MetricsError(f"axis must be one of {PROFILE_AXES}, got '{axis}'")
    ix, iy, iz = anchor
    g = v.grid
    if not (0 <= ix < g.nx and 0 <= iy < g.ny and 0 <= iz < g.nz):
        raise MetricsError(f"anchor {anchor} outside grid {(g.nx, g.ny, g.nz)}")
    if axis == "x":
        vals, pitch, n = v.values[iz, iy, :], g.dx, g.nx
    elif axis == "y":
        vals, pitch, n = v.values[iz, :, ix], g.dy, g.ny
    else:
        vals, pitch, n = v.values[:, iy, ix], g.dz, g.nz
    positions = (np.arange(n) + 0.5) * pitch
    return np.column_stack([positions, vals])


def profile_dip(profile: np.ndarray) -> float:
    """Dip statistic 1 - valley/mean(peaks) between the two tallest
    local maxima of a profile; 0 when fewer than two peaks exist."""
    vals = profile[:, 1] if profile.ndim == 2 else profile
    peaks, _ = find_peaks(vals)
    if len(peaks) < 2:
        return 0.0
    order = peaks[np.argsort(vals[peaks])[::-1][:2]]
    lo, hi = sorted(order)
    valley = float(vals[lo:hi + 1].min())
    peak_mean = float((vals[lo] + vals[hi]) / 2.0)
    if peak_mean <= 0:
        return 0.0
    return 1.0 - valley / peak_mean
