"""Synthetic shell-and-beads test object.

The default object is a hollow spherical shell (3 um outer diameter,
200 nm wall) with small beads (150 nm diameter) placed on a lateral ring
in the equatorial plane, consecutive centers 175 nm apart.  The ring
starts with a bead pair symmetric about the x axis, so the first two
bead centers share x and z exactly and a y-axis line profile crosses
both -- that pair is what the resolvability checks probe.

Voxelization is antialiased: each voxel value is the solid fraction
estimated from a 2x2x2 supersample (8 points at center +- pitch/4),
times the part amplitude.  Output is deterministic for a given spec.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import PhantomError
from .volume import GridSpec, Volume


@dataclass(frozen=True)
class RingLayout:
    """Beads on a lateral ring, equatorial plane, fixed center spacing."""

    radius_nm: float = 600.0
    spacing_nm: float = 175.0


@dataclass(frozen=True)
class ExplicitLayout:
    """Bead centers given directly in nm relative to the cube center."""

    centers_nm: tuple[tuple[float, float, float], ...]


@dataclass(frozen=True)
class PhantomSpec:
    grid: GridSpec
    cube_side_nm: float = 6400.0
    shell_diameter_nm: float = 3000.0
    shell_thickness_nm: float = 200.0
    bead_diameter_nm: float = 150.0
    bead_layout: RingLayout | ExplicitLayout | None = field(default_factory=RingLayout)
    shell_intensity: float = 1.0
    bead_intensity: float = 1.0

    def __post_init__(self):
        ex, ey, ez = self.grid.extent_nm
        for e in (ex, ey, ez):
            if not math.isclose(e, self.cube_side_nm, rel_tol=1e-9):
                raise PhantomError(
                    f"grid extent {e:.1f} nm does not match cube side "
                    f"{self.cube_side_nm:.1f} nm")
        if self.shell_diameter_nm > 0:
            outer_r = self.shell_diameter_nm / 2.0
            if outer_r > 0.4 * self.cube_side_nm:
                raise PhantomError(
                    "shell violates the 10% guard band "
                    f"(outer radius {outer_r:.0f} nm on a "
                    f"{self.cube_side_nm:.0f} nm cube)")
            if self.shell_thickness_nm <= 0 or self.shell_thickness_nm > outer_r:
                raise PhantomError("shell thickness must lie in (0, outer radius]")
        if isinstance(self.bead_layout, RingLayout):
            if self.bead_layout.spacing_nm < self.bead_diameter_nm:
                raise PhantomError(
                    "bead spacing smaller than bead diameter: beads overlap")
            if self.shell_diameter_nm > 0:
                inner_r = self.shell_diameter_nm / 2.0 - self.shell_thickness_nm
                if (self.bead_layout.radius_nm + self.bead_diameter_nm / 2.0
                        > inner_r):
                    raise PhantomError("bead ring does not fit inside the shell")


def bead_centers(spec: PhantomSpec) -> list[tuple[float, float, float]]:
    """Bead center coordinates in nm (absolute, cube corner at 0)."""
    c = spec.cube_side_nm / 2.0
    layout = spec.bead_layout
    if layout is None or spec.bead_diameter_nm <= 0:
        return []
    if isinstance(layout, ExplicitLayout):
        return [(c + x, c + y, c + z) for x, y, z in layout.centers_nm]
    r = layout.radius_nm
    half_angle = math.asin(layout.spacing_nm / (2.0 * r))
    step = 2.0 * half_angle
    count = int(2.0 * math.pi // step)
    angles = [-half_angle + k * step for k in range(count)]
    return [(c + r * math.cos(a), c + r * math.sin(a), c) for a in angles]


def bead_pair_anchor(spec: PhantomSpec) -> tuple[int, int, int]:
    """Voxel (ix, iy, iz) closest to the midpoint of the first bead
    pair; a y-line through it crosses both bead centers."""
    centers = bead_centers(spec)
    if len(centers) < 2:
        raise PhantomError("layout holds fewer than two beads")
    (x0, y0, z0), (x1, y1, z1) = centers[0], centers[1]
    mx, my, mz = (x0 + x1) / 2.0, (y0 + y1) / 2.0, (z0 + z1) / 2.0
    g = spec.grid

    def to_index(pos: float, d: float, n: int) -> int:
        return min(max(int(round(pos / d - 0.5)), 0), n - 1)

    return (to_index(mx, g.dx, g.nx), to_index(my, g.dy, g.ny),
            to_index(mz, g.dz, g.nz))


_SUB_OFFSETS = (-0.25, 0.25)


def generate_phantom(spec: PhantomSpec) -> Volume:
    g = spec.grid
    values = np.zeros(g.shape)
    c = spec.cube_side_nm / 2.0

    if spec.shell_diameter_nm > 0:
        outer_sq = (spec.shell_diameter_nm / 2.0) ** 2
        inner_sq = (spec.shell_diameter_nm / 2.0 - spec.shell_thickness_nm) ** 2
        # 4 lateral supersample distance maps, reused for every z slice
        lat_maps = []
        for oy in _SUB_OFFSETS:
            ys = (np.arange(g.ny) + 0.5 + oy) * g.dy - c
            for ox in _SUB_OFFSETS:
                xs = (np.arange(g.nx) + 0.5 + ox) * g.dx - c
                lat_maps.append(ys[:, None] ** 2 + xs[None, :] ** 2)
        for iz in range(g.nz):
            frac = np.zeros((g.ny, g.nx))
            for oz in _SUB_OFFSETS:
                z_sq = ((iz + 0.5 + oz) * g.dz - c) ** 2
                for lat in lat_maps:
                    r_sq = lat + z_sq
                    frac += (r_sq <= outer_sq) & (r_sq >= inner_sq)
            np.maximum(values[iz], spec.shell_intensity * frac / 8.0,
                       out=values[iz])

    bead_r = spec.bead_diameter_nm / 2.0
    for bx, by, bz in bead_centers(spec):
        _stamp_sphere(values, g, (bx, by, bz), bead_r, spec.bead_intensity)
    return Volume(g, values)


def _stamp_sphere(values: np.ndarray, g: GridSpec,
                  center: tuple[float, float, float], radius: float,
                  amplitude: float) -> None:
    """Union (max) an antialiased solid sphere into `values`."""
    bx, by, bz = center
    pad = radius + 0.75 * max(g.dx, g.dy, g.dz)
    ix0 = max(int((bx - pad) / g.dx), 0)
    ix1 = min(int((bx + pad) / g.dx) + 1, g.nx)
    iy0 = max(int((by - pad) / g.dy), 0)
    iy1 = min(int((by + pad) / g.dy) + 1, g.ny)
    iz0 = max(int((bz - pad) / g.dz), 0)
    iz1 = min(int((bz + pad) / g.dz) + 1, g.nz)
    if ix0 >= ix1 or iy0 >= iy1 or iz0 >= iz1:
        return
    r_sq = radius ** 2
    frac = np.zeros((iz1 - iz0, iy1 - iy0, ix1 - ix0))
    for oz in _SUB_OFFSETS:
        zs = (np.arange(iz0, iz1) + 0.5 + oz) * g.dz - bz
        for oy in _SUB_OFFSETS:
            ys = (np.arange(iy0, iy1) + 0.5 + oy) * g.dy - by
            for ox in _SUB_OFFSETS:
                xs = (np.arange(ix0, ix1) + 0.5 + ox) * g.dx - bx
                d_sq = (zs[:, None, None] ** 2 + ys[None, :, None] ** 2
                        + xs[None, None, :] ** 2)
                frac += d_sq <= r_sq
    region = values[iz0:iz1, iy0:iy1, ix0:ix1]
    np.maximum(region, amplitude * frac / 8.0, out=region)
