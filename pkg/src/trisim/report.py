"""Report artifacts: trace CSVs, slice PNGs, profile CSVs and the
matplotlib figures rendered next to them."""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib
import numpy as np

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .errors import MetricsError
from .metrics import line_profile
from .solver import TraceRecord
from .volume import Volume

PLANES = ("xy", "xz", "yz")


def write_trace_csv(trace: list[TraceRecord], path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iteration", "cost", "alpha", "gamma", "grad_norm",
                         "stop_reason"])
        for rec in trace:
            writer.writerow([rec.iteration, repr(rec.cost), repr(rec.alpha),
                             repr(rec.gamma), repr(rec.grad_norm),
                             rec.stop_reason])
    return path


def render_trace_figure(trace: list[TraceRecord], path: str | Path,
                        title: str = "") -> Path:
    path = Path(path)
    iters = [r.iteration for r in trace]
    costs = [r.cost for r in trace]
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.5))
    ax1.semilogy(iters, costs, "-o", ms=2.5)
    ax1.set_xlabel("iteration")
    ax1.set_ylabel("cost")
    ax1.set_title("data-fit cost")
    steps = [r for r in trace if r.iteration > 0]
    ax2.semilogy([r.iteration for r in steps],
                 [max(r.grad_norm, 1e-300) for r in steps], "-", label="|grad|")
    ax2.set_xlabel("iteration")
    ax2.set_ylabel("gradient norm")
    ax2.set_title("gradient norm")
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def extract_slice(v: Volume, plane: str, index: int) -> np.ndarray:
    if plane not in PLANES:
        raise MetricsError(f"plane must be one of {PLANES}, got '{plane}'")
    g = v.grid
    limits = {"xy": g.nz, "xz": g.ny, "yz": g.nx}
    if not (0 <= index < limits[plane]):
        raise MetricsError(
            f"slice index {index} outside [0, {limits[plane]}) for plane {plane}")
    if plane == "xy":
        return v.values[index, :, :]
    if plane == "xz":
        return v.values[:, index, :]
    return v.values[:, :, index]


def write_slice_png16(slice_values: np.ndarray, path: str | Path) -> Path:
    """16-bit grayscale PNG, intensity mapped over the slice min/max."""
    from PIL import Image

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lo = float(slice_values.min())
    hi = float(slice_values.max())
    span = hi - lo if hi > lo else 1.0
    scaled = np.round((slice_values - lo) / span * 65535.0).astype(np.uint16)
    Image.fromarray(scaled).save(path)
    return path


def write_profiles_csv(profiles: dict[str, np.ndarray], path: str | Path) -> Path:
    """Profiles as one CSV: axis, position_nm, value."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["axis", "position_nm", "value"])
        for axis, prof in profiles.items():
            for pos, val in prof:
                writer.writerow([axis, repr(float(pos)), repr(float(val))])
    return path


def render_profiles_figure(profiles: dict[str, np.ndarray], path: str | Path,
                           title: str = "") -> Path:
    path = Path(path)
    fig, ax = plt.subplots(figsize=(6, 3.5))
    for axis, prof in profiles.items():
        ax.plot(prof[:, 0], prof[:, 1], label=f"{axis} line")
    ax.set_xlabel("position (nm)")
    ax.set_ylabel("intensity")
    ax.legend()
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def slice_report(v: Volume, plane: str, index: int,
                 anchor: tuple[int, int, int], out_png: str | Path,
                 with_figure: bool = True) -> list[Path]:
    """The export-slice bundle: 16-bit PNG of the plane, a CSV with the
    in-plane line profiles through the anchor, and a rendered figure of
    those profiles."""
    out_png = Path(out_png)
    written = [write_slice_png16(extract_slice(v, plane, index), out_png)]
    axes = {"xy": ("x", "y"), "xz": ("x", "z"), "yz": ("y", "z")}[plane]
    profiles = {axis: line_profile(v, axis, anchor) for axis in axes}
    written.append(write_profiles_csv(
        profiles, out_png.with_name(out_png.stem + "_profiles.csv")))
    if with_figure:
        written.append(render_profiles_figure(
            profiles, out_png.with_name(out_png.stem + "_profiles.png"),
            title=f"{plane} slice {index}"))
    return written
