"""Generalized Wiener filter restoration for the full 15-image stack.

Per orientation the five phase images are separated per frequency
sample into the five pattern-harmonic bands m = -2..2 with the phase
matrix M[l, m] = exp(i*m*phi_l).  Band m carries the object spectrum
displaced by m times the lateral fundamental u_m/2 and filtered by its
band OTF (the m = +-1 OTFs contain the +-w_m axial sidebands of the
axially modulated kernel; there is no explicit axial shift).  Each band
is moved back onto the object frame by real-space demodulation with the
carrier (exact for circular signals), the matching band OTF is shifted
identically, and all orientations and bands are recombined with Wiener
weights:

    O_hat = sum conj(OTF_b) * band_b / (sum |OTF_b|^2 + w^2)

Camera-grid spectra are zero-embedded into the fine-grid frequency box
before shifting so the recombined support can extend beyond the camera
Nyquist rate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _fft
from .errors import GridError, GwfError
from .forward import AcquisitionData
from .illumination import axial_profiles, lateral_carrier
from .optics import OpticsParams, generate_psf
from .volume import GridSpec, Spectrum, Volume

BAND_ORDERS = (-2, -1, 0, 1, 2)


@dataclass(frozen=True)
class GWFConfig:
    wiener_param: float = 0.01
    apodization: bool = False

    def __post_init__(self):
        if self.wiener_param <= 0:
            raise GwfError("wiener_param must be positive")


def separation_matrix(phases: list[float]) -> np.ndarray:
    """5x5 matrix M[l, m] = exp(i*m*phi_l) for m = -2..2; unitary up to
    a factor sqrt(5) for the uniform 2*pi/5 phase set."""
    if len(phases) != 5:
        raise GwfError(f"band separation needs 5 phases, got {len(phases)}")
    phases_arr = np.asarray(phases, dtype=np.float64)
    m = np.asarray(BAND_ORDERS, dtype=np.float64)
    mat = np.exp(1j * phases_arr[:, None] * m[None, :])
    if np.linalg.cond(mat) > 1e8:
        raise GwfError("singular separation matrix (repeated phases)")
    return mat


def separate_bands(five_images: list[Spectrum], matrix: np.ndarray
                   ) -> list[Spectrum]:
    """Solve the per-frequency linear system; returns bands m = -2..2."""
    if len(five_images) != 5:
        raise GwfError(f"band separation needs 5 images, got {len(five_images)}")
    grid = five_images[0].grid
    for s in five_images:
        if s.grid != grid:
            raise GridError("band separation inputs on different grids")
    inv = np.linalg.inv(matrix)
    bands = []
    for row in inv:
        acc = np.zeros(grid.shape, dtype=np.complex128)
        for coef, img in zip(row, five_images):
            acc += coef * img.values
        bands.append(Spectrum(grid, acc))
    return bands


def embed_spectrum(values: np.ndarray, fine_shape: tuple[int, int, int]
                   ) -> np.ndarray:
    """Zero-pad a coarse DFT box into the center of a fine one."""
    if values.shape == tuple(fine_shape):
        return values.copy()
    out = np.zeros(fine_shape, dtype=np.complex128)
    shifted = np.fft.fftshift(values)
    slices = tuple(slice((nf - nc) // 2, (nf - nc) // 2 + nc)
                   for nf, nc in zip(fine_shape, values.shape))
    out[slices] = shifted
    return np.fft.ifftshift(out)


def band_kernels(h: Volume, w_m: float) -> dict[int, np.ndarray]:
    """Real-space band kernels: the object spectrum displaced by m
    carriers is filtered by kappa_1 (m=0), kappa_2/2 (m=+-1) and
    kappa_3/2 (m=+-2)."""
    i1, i2, i3 = axial_profiles(w_m, h.grid)
    k1 = h.values * i1[:, None, None]
    k2 = h.values * i2[:, None, None]
    k3 = h.values * i3[:, None, None]
    return {0: k1, 1: 0.5 * k2, -1: 0.5 * k2, 2: 0.5 * k3, -2: 0.5 * k3}


def _orientation_groups(data: AcquisitionData) -> list[tuple[float, list[int]]]:
    groups: dict[float, list[int]] = {}
    for idx, s in enumerate(data.specs):
        groups.setdefault(s.theta_deg, []).append(idx)
    return list(groups.items())


def run_gwf(data: AcquisitionData, optics: OpticsParams,
            config: GWFConfig) -> Volume:
    """Wiener-recombined restoration on the fine grid.  Output is the
    raw real part; l2 normalization and negative clamping happen in the
    metrics protocol downstream."""
    if len(data.images) != 15:
        raise GwfError("GWF requires 15 images")
    groups = _orientation_groups(data)
    if len(groups) != 3 or any(len(idxs) != 5 for _, idxs in groups):
        raise GwfError("GWF requires 3 orientations with 5 phases each")
    fine = data.fine_grid
    if optics.grid != fine:
        raise GridError("optics grid does not match the acquisition fine grid")

    h = generate_psf(optics)
    u_m, w_m = data.specs[0].u_m, data.specs[0].w_m
    kernels = band_kernels(h, w_m)
    scale = float(data.binning ** 3)

    num = np.zeros(fine.shape, dtype=np.complex128)
    den = np.zeros(fine.shape, dtype=np.float64)
    for theta, idxs in groups:
        phases = [data.specs[i].phi_rad for i in idxs]
        matrix = separation_matrix(phases)
        spectra = [Spectrum(data.images[i].grid, _fft.fftn(data.images[i].values))
                   for i in idxs]
        bands = separate_bands(spectra, matrix)
        carrier = lateral_carrier(theta, u_m, fine)
        for m, band in zip(BAND_ORDERS, bands):
            band_fine = embed_spectrum(band.values, fine.shape) * scale
            if m == 0:
                shifted = band_fine
                otf = _fft.fftn(kernels[0])
            else:
                demod = carrier[None, :, :] ** (-m)
                shifted = _fft.fftn(_fft.ifftn(band_fine) * demod)
                otf = _fft.fftn(kernels[m] * demod)
            num += np.conj(otf) * shifted
            den += (otf.real ** 2 + otf.imag ** 2)
    den += config.wiener_param ** 2

    combined = num / den
    if config.apodization:
        combined *= _triangular_apodization(fine, optics.u_c + u_m)
    return Volume(fine, _fft.ifftn(combined).real)


def _triangular_apodization(grid: GridSpec, u_max: float) -> np.ndarray:
    ux = np.fft.fftfreq(grid.nx, d=grid.dx)
    uy = np.fft.fftfreq(grid.ny, d=grid.dy)
    u_lat = np.sqrt(uy[:, None] ** 2 + ux[None, :] ** 2)
    taper = np.maximum(0.0, 1.0 - u_lat / u_max)
    return np.broadcast_to(taper[None, :, :], grid.shape)
