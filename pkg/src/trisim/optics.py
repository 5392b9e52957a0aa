"""Widefield PSF/OTF generation and cutoff frequencies.

The PSF is scalar-diffraction: a circular pupil of radius NA/lambda with
per-plane defocus phase exp(i*2*pi*z*sqrt((n/lambda)^2 - u^2)), squared
modulus of the amplitude spread per z.  Frequencies are in cycles/nm,
lengths in nm.  The axial coordinate runs FFT-origin-cornered (z = 0 at
index 0, negative z wrapped into the upper half), so the returned volume
is convolution-ready without shifting.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from . import _fft
from .errors import OpticsError
from .volume import GridSpec, Spectrum, Volume, fft_forward


@dataclass(frozen=True)
class OpticsParams:
    na: float
    n_imm: float
    lambda_nm: float
    grid: GridSpec

    def __post_init__(self):
        if not (0 < self.na < self.n_imm):
            raise OpticsError(
                f"need 0 < NA < n_imm, got NA={self.na}, n_imm={self.n_imm}")
        if self.lambda_nm <= 0:
            raise OpticsError(f"wavelength must be positive, got {self.lambda_nm}")

    @property
    def u_c(self) -> float:
        """Lateral incoherent cutoff 2*NA/lambda, cycles/nm."""
        return 2.0 * self.na / self.lambda_nm

    @property
    def w_c(self) -> float:
        """Axial cutoff; w_c/u_c = NA/(4*n_imm) which evaluates to 0.231
        for the 1.4 NA / 1.515 oil objective."""
        return self.u_c * self.na / (4.0 * self.n_imm)

    @property
    def lateral_resolution_nm(self) -> float:
        """Rayleigh-type widefield limit 0.61*lambda/NA."""
        return 0.61 * self.lambda_nm / self.na


def cutoff_frequencies(p: OpticsParams) -> tuple[float, float]:
    return p.u_c, p.w_c


def _fftfreq_grid(n: int, d: float) -> np.ndarray:
    return np.fft.fftfreq(n, d=d)


def signed_axial_coords(grid: GridSpec) -> np.ndarray:
    """Axial sample positions in nm, FFT-origin-cornered (0, dz, ...,
    -nz/2*dz, ..., -dz)."""
    return _fftfreq_grid(grid.nz, 1.0 / (grid.nz * grid.dz))


def generate_psf(p: OpticsParams) -> Volume:
    """Scalar-diffraction widefield PSF, unit sum, origin-cornered.

    Emits a warning when the lateral pitch undersamples the OTF support
    (dx > 1/(2*u_c)); errors when the lateral extent cannot hold the
    main lobe with room to decay (extent < 8*0.61*lambda/NA).
    """
    g = p.grid
    d_lat = p.lateral_resolution_nm
    if min(g.nx * g.dx, g.ny * g.dy) < 8.0 * d_lat:
        raise OpticsError(
            f"grid extent {min(g.nx * g.dx, g.ny * g.dy):.0f} nm too small for the "
            f"PSF main lobe (needs >= {8.0 * d_lat:.0f} nm)")
    nyq = 1.0 / (2.0 * p.u_c)
    if g.dx > nyq or g.dy > nyq:
        warnings.warn(
            f"lateral pitch {max(g.dx, g.dy):.1f} nm undersamples the OTF "
            f"(Nyquist-adequate pitch is {nyq:.1f} nm)", stacklevel=2)

    ux = _fftfreq_grid(g.nx, g.dx)
    uy = _fftfreq_grid(g.ny, g.dy)
    u_sq = uy[:, None] ** 2 + ux[None, :] ** 2
    pupil = u_sq <= (p.na / p.lambda_nm) ** 2
    # axial wavenumber of the plane-wave component at each pupil sample
    kz = np.sqrt(np.maximum((p.n_imm / p.lambda_nm) ** 2 - u_sq, 0.0))

    zs = signed_axial_coords(g)
    psf = np.empty(g.shape)
    for iz, z in enumerate(zs):
        amp = _fft.ifft2(pupil * np.exp(2j * np.pi * z * kz))
        psf[iz] = amp.real ** 2 + amp.imag ** 2
    psf /= psf.sum()
    return Volume(g, psf)


def compute_otf(h: Volume) -> Spectrum:
    """OTF of a unit-sum PSF: plain forward FFT, DC equals 1."""
    return fft_forward(h)
