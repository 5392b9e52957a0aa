"""Three-wave SIM illumination patterns as separable components.

Each acquired image is described by an orientation theta and a lateral
phase phi.  The three-beam interference intensity, peak-normalized to 1,
decomposes into K=3 separable (lateral j_k(x,y), axial i_k(z)) pairs:

    I(x, z) = (1/9) * [3 + 4*cos(psi + phi)*cos(2*pi*w_m*z)
                         + 2*cos(2*psi + 2*phi)]

with psi(x, y) = 2*pi*(u_m/2)*(x*cos(theta) + y*sin(theta)).  u_m is the
highest lateral harmonic of the pattern (the beam fundamental sits at
u_m/2), so the resolution extension reads d/(1 + u_m/u_c).  The weights
3:4:2 follow from equal-amplitude beams and make the intensity exactly
nonnegative: min over phase/defocus equals (2|a|-1)^2/9 >= 0 for
a = cos(psi+phi).

All 15 pattern images share the same axial profiles {i_k}; only the
lateral images depend on (theta, phi).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import PatternError
from .optics import OpticsParams, signed_axial_coords
from .volume import GridSpec

PAPER_THETAS_DEG = (0.0, 60.0, 120.0)
PAPER_NUM_PHASES = 5
PAPER_UM_FACTOR = 0.8      # u_m = 0.8 * u_c
PAPER_WM_OVER_UM = 0.231   # w_m/u_m = w_c/u_c

# component weights of the peak-normalized three-beam intensity
_W_DC = 3.0 / 9.0
_W_FUND = 4.0 / 9.0
_W_HARM = 2.0 / 9.0


def paper_phases() -> tuple[float, ...]:
    """The 5 lateral phases: 2*pi/5 steps starting at 0."""
    return tuple(2.0 * np.pi * k / PAPER_NUM_PHASES for k in range(PAPER_NUM_PHASES))


@dataclass(frozen=True)
class PatternSpec:
    theta_deg: float
    phi_rad: float
    u_m: float
    w_m: float
    peak_normalized: bool = True


@dataclass(frozen=True)
class PatternComponent:
    """One separable term: lateral image j (ny, nx) and axial profile i (nz)."""

    lateral: np.ndarray
    axial: np.ndarray


def make_pattern_spec(optics: OpticsParams, theta_deg: float, phi_rad: float,
                      um_factor: float = PAPER_UM_FACTOR,
                      wm_over_um: float = PAPER_WM_OVER_UM) -> PatternSpec:
    u_m = um_factor * optics.u_c
    if u_m > optics.u_c * (1 + 1e-12):
        raise PatternError(
            f"pattern frequency beyond cutoff: u_m={u_m:.4e} > u_c={optics.u_c:.4e}")
    return PatternSpec(theta_deg=theta_deg, phi_rad=phi_rad,
                       u_m=u_m, w_m=wm_over_um * u_m)


def lateral_carrier(theta_deg: float, u_m: float, g: GridSpec) -> np.ndarray:
    """Complex fundamental exp(i*psi) on the (ny, nx) lateral grid.

    Sampled at x = ix*dx, y = iy*dy with ix, iy counting from 0; the
    pattern origin sits at voxel (0, 0).
    """
    theta = np.deg2rad(theta_deg)
    x = np.arange(g.nx) * g.dx
    y = np.arange(g.ny) * g.dy
    psi = 2.0 * np.pi * (u_m / 2.0) * (np.cos(theta) * x[None, :]
                                       + np.sin(theta) * y[:, None])
    return np.exp(1j * psi)


def axial_profiles(w_m: float, g: GridSpec) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """The shared axial profiles (i_1, i_2, i_3), FFT-origin-cornered."""
    z = signed_axial_coords(g)
    i1 = np.full(g.nz, _W_DC)
    i2 = _W_FUND * np.cos(2.0 * np.pi * w_m * z)
    i3 = np.full(g.nz, _W_HARM)
    return i1, i2, i3


def pattern_components(s: PatternSpec, g: GridSpec) -> list[PatternComponent]:
    """Decompose the pattern of one (theta, phi) image into K=3 components."""
    carrier = lateral_carrier(s.theta_deg, s.u_m, g)
    rot = np.exp(1j * s.phi_rad)
    j1 = np.ones((g.ny, g.nx))
    j2 = (rot * carrier).real
    j3 = (rot * rot * carrier * carrier).real
    i1, i2, i3 = axial_profiles(s.w_m, g)
    return [PatternComponent(j1, i1),
            PatternComponent(j2, i2),
            PatternComponent(j3, i3)]


def recombine(components: list[PatternComponent], g: GridSpec) -> np.ndarray:
    """Full 3D pattern sum_k j_k(x,y) * i_k(z), shape (nz, ny, nx)."""
    out = np.zeros(g.shape)
    for c in components:
        out += c.axial[:, None, None] * c.lateral[None, :, :]
    return out


def pattern_set(optics: OpticsParams, g: GridSpec,
                um_factor: float = PAPER_UM_FACTOR,
                wm_over_um: float = PAPER_WM_OVER_UM,
                thetas_deg: tuple[float, ...] = PAPER_THETAS_DEG,
                phases_rad: tuple[float, ...] | None = None,
                ) -> list[tuple[PatternSpec, list[PatternComponent]]]:
    """All 15 patterns, orientation-major then phase-ascending.

    The ordering is a file-naming contract: entry 5*t + p corresponds to
    thetas_deg[t] and phase index p.
    """
    if phases_rad is None:
        phases_rad = paper_phases()
    out = []
    for theta in thetas_deg:
        for phi in phases_rad:
            spec = make_pattern_spec(optics, theta, phi, um_factor, wm_over_um)
            out.append((spec, pattern_components(spec, g)))
    return out
