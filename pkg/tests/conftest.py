import numpy as np
import pytest

from trisim.volume import GridSpec, Volume
from trisim.optics import OpticsParams


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed, detail in RESULTS:
        status = "PASS" if passed else "FAIL"
        line = f"{status}  {name}"
        if detail:
            line += f"  [{detail}]"
        terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(20240515)


@pytest.fixture
def grid16():
    return GridSpec(16, 16, 16, 50.0, 50.0, 50.0)


@pytest.fixture
def grid8():
    return GridSpec(8, 8, 8, 100.0, 100.0, 100.0)


def smooth_kernel(grid: GridSpec, rng, decay: float = 4.0) -> Volume:
    """Random nonnegative unit-sum kernel with mild spectral decay;
    a stand-in PSF for operator math tests at sizes too small for the
    physical PSF generator."""
    noise = rng.standard_normal(grid.shape)
    z = np.linspace(0, decay, grid.nz)[:, None, None]
    vals = np.abs(np.fft.ifftn(np.fft.fftn(noise) * np.exp(-(z ** 2))).real)
    vals /= vals.sum()
    return Volume(grid, vals)


@pytest.fixture
def kernel16(grid16, rng):
    return smooth_kernel(grid16, rng)


def paper_optics(grid: GridSpec) -> OpticsParams:
    return OpticsParams(na=1.4, n_imm=1.515, lambda_nm=515.0, grid=grid)


@pytest.fixture
def optics16(grid16):
    return paper_optics(grid16)
