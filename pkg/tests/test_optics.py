import numpy as np
import pytest

from trisim.errors import OpticsError
from trisim.optics import (OpticsParams, compute_otf, cutoff_frequencies,
                           generate_psf)
from trisim.volume import GridSpec, Volume


def psf_grid(n=64, d=40.0, nz=32, dz=80.0):
    return GridSpec(n, n, nz, d, d, dz)


def test_cutoff_frequencies_paper_values():
    p = OpticsParams(1.4, 1.515, 515.0, psf_grid())
    u_c, w_c = cutoff_frequencies(p)
    assert u_c == pytest.approx(2 * 1.4 / 515.0)
    assert u_c == pytest.approx(5.437e-3, rel=1e-3)
    assert round(w_c / u_c, 3) == 0.231
    assert w_c == pytest.approx(0.231 * u_c, rel=1e-2)
    assert w_c == pytest.approx(1.256e-3, rel=1e-3)


def test_optics_params_validation():
    g = psf_grid()
    with pytest.raises(OpticsError):
        OpticsParams(1.6, 1.515, 515.0, g)  # NA >= n
    with pytest.raises(OpticsError):
        OpticsParams(1.4, 1.515, -5.0, g)


def test_psf_unit_sum_and_nonnegative():
    p = OpticsParams(1.4, 1.515, 515.0, psf_grid())
    h = generate_psf(p)
    assert h.values.min() >= 0
    assert abs(h.values.sum() - 1.0) < 1e-9


def test_psf_axial_symmetry_and_peak_at_focus():
    p = OpticsParams(1.4, 1.515, 515.0, psf_grid())
    h = generate_psf(p).values
    # energy concentrates at the focal plane iz=0; planes +-z mirror
    assert np.argmax(h.max(axis=(1, 2))) == 0
    assert np.unravel_index(np.argmax(h), h.shape) == (0, 0, 0)
    for iz in range(1, 4):
        assert np.allclose(h[iz], h[-iz], atol=1e-12)


def test_psf_lateral_fwhm_matches_abbe_estimate():
    # fine lateral sampling so the half-maximum crossing interpolates well
    p = OpticsParams(1.4, 1.515, 515.0, GridSpec(128, 128, 8, 20.0, 20.0, 100.0))
    h = generate_psf(p).values
    infocus = np.fft.fftshift(h[0])
    row = infocus[64, :]
    half = row.max() / 2
    above = np.where(row >= half)[0]
    left, right = above.min(), above.max()

    def crossing(i_out, i_in):
        # row[i_out] < half <= row[i_in]; linear interpolation between them
        t = (half - row[i_out]) / (row[i_in] - row[i_out])
        return i_out + t * (i_in - i_out)

    fwhm_px = crossing(right + 1, right) - crossing(left - 1, left)
    fwhm_nm = fwhm_px * 20.0
    expected = 0.51 * 515.0 / 1.4  # ~188 nm
    assert abs(fwhm_nm - expected) / expected < 0.15


def test_otf_dc_is_one_and_lateral_support_bounded():
    p = OpticsParams(1.4, 1.515, 515.0, psf_grid())
    h = generate_psf(p)
    otf = compute_otf(h).values
    assert abs(otf[0, 0, 0] - 1.0) < 1e-9
    g = p.grid
    ux = np.fft.fftfreq(g.nx, g.dx)
    uy = np.fft.fftfreq(g.ny, g.dy)
    u_lat = np.sqrt(uy[:, None] ** 2 + ux[None, :] ** 2)
    beyond = np.broadcast_to((u_lat > p.u_c)[None, :, :], g.shape)
    assert np.abs(otf[beyond]).max() < 1e-4


def test_otf_of_delta_psf_is_flat():
    g = GridSpec(8, 8, 8, 50, 50, 50)
    vals = np.zeros(g.shape)
    vals[0, 0, 0] = 1.0
    otf = compute_otf(Volume(g, vals)).values
    assert np.abs(otf - 1.0).max() < 1e-12


def test_otf_real_for_symmetric_psf():
    p = OpticsParams(1.4, 1.515, 515.0, psf_grid())
    otf = compute_otf(generate_psf(p)).values
    assert np.abs(otf.imag).max() < 1e-9


def test_infocus_otf_lateral_magnitude_nonincreasing():
    # the classic diffraction OTF (pupil autocorrelation) of the
    # in-focus plane decays monotonically out to the cutoff; the full
    # 3D OTF section at w=0 oscillates for finite depth and is not
    # asserted here
    p = OpticsParams(1.4, 1.515, 515.0, psf_grid())
    h = generate_psf(p)
    otf2d = np.fft.fft2(h.values[0])
    lateral = np.abs(otf2d[0, : p.grid.nx // 2])
    diffs = np.diff(lateral)
    assert diffs.max() <= 1e-9 * lateral[0]


def test_psf_warns_when_undersampled():
    p = OpticsParams(1.4, 1.515, 515.0, GridSpec(32, 32, 8, 100.0, 100.0, 200.0))
    with pytest.warns(UserWarning, match="undersamples"):
        generate_psf(p)


def test_psf_errors_when_extent_too_small():
    p = OpticsParams(1.4, 1.515, 515.0, GridSpec(16, 16, 8, 50.0, 50.0, 100.0))
    with pytest.raises(OpticsError, match="too small"):
        generate_psf(p)
