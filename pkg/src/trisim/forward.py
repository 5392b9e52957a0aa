"""Acquisition operator, its exact adjoint, and Poisson noise.

One recorded image is g = Bin(sum_k conv3d(o*j_k, h*i_k)): the object is
modulated by the lateral pattern images, convolved (circularly, FFT)
with the axially-modulated PSF, and block-averaged down to the camera
grid.  The adjoint is A^T r = sum_k j_k * corr3d(Bin^T r, h*i_k) with
Bin^T replicating each camera voxel over its block scaled by 1/b^3, so
<A o, r> == <o, A^T r> holds to rounding.

`apply_forward`/`apply_adjoint` are the straightforward per-image
operators.  `ThreeWaveOperator` evaluates a whole pattern stack at once
and is what the solvers use: because every lateral pattern is a
harmonic of the per-orientation carrier exp(i*psi), the 15-image sweep
needs only 1 + 2*n_theta forward FFTs and one inverse FFT per carrier
order instead of four FFTs per image, and the camera binning is applied
to the handful of base fields rather than per image.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import _fft
from .errors import FileFormatError, GridError, NoiseError
from .illumination import (PatternComponent, PatternSpec, axial_profiles,
                           lateral_carrier, paper_phases)
from .volume import GridSpec, Volume, load_volume, save_volume


def bin_block(values: np.ndarray, b: int) -> np.ndarray:
    """Average each b^3 block (camera pixel aggregation)."""
    if b == 1:
        return values
    nz, ny, nx = values.shape
    if nz % b or ny % b or nx % b:
        raise GridError(f"binning {b} does not divide shape {values.shape}")
    return values.reshape(nz // b, b, ny // b, b, nx // b, b).mean(axis=(1, 3, 5))


def bin_adjoint(values: np.ndarray, b: int) -> np.ndarray:
    """Exact adjoint of `bin_block`: replicate each voxel, scale by 1/b^3."""
    if b == 1:
        return values
    nz, ny, nx = values.shape
    out = np.broadcast_to(values[:, None, :, None, :, None],
                          (nz, b, ny, b, nx, b))
    return out.reshape(nz * b, ny * b, nx * b) / float(b ** 3)


def _kernel(h: np.ndarray, axial: np.ndarray) -> np.ndarray:
    return h * axial[:, None, None]


def apply_forward(o: Volume, spec_components: list[PatternComponent],
                  h: Volume, binning: int) -> Volume:
    """Reference single-image forward operator."""
    if o.grid != h.grid:
        raise GridError(f"object grid {o.grid.shape} != PSF grid {h.grid.shape}")
    spec = np.zeros(o.grid.shape, dtype=np.complex128)
    for c in spec_components:
        modulated = o.values * c.lateral[None, :, :]
        spec += _fft.fftn(modulated) * _fft.fftn(_kernel(h.values, c.axial))
    fine = _fft.ifftn(spec).real
    return Volume(o.grid.binned(binning), bin_block(fine, binning))


def apply_adjoint(r: Volume, spec_components: list[PatternComponent],
                  h: Volume, binning: int) -> Volume:
    """Reference single-image adjoint: cross-correlation plus bin adjoint."""
    fine_grid = h.grid
    if r.grid != fine_grid.binned(binning):
        raise GridError(
            f"residual grid {r.grid.shape} != binned fine grid "
            f"{fine_grid.binned(binning).shape}")
    up = bin_adjoint(r.values, binning)
    up_spec = _fft.fftn(up)
    out = np.zeros(fine_grid.shape)
    for c in spec_components:
        corr = _fft.ifftn(up_spec * np.conj(_fft.fftn(_kernel(h.values, c.axial)))).real
        out += corr * c.lateral[None, :, :]
    return Volume(fine_grid, out)


@dataclass(frozen=True)
class _OrientationGroup:
    theta_deg: float
    phases: tuple[float, ...]
    indices: tuple[int, ...]


class ThreeWaveOperator:
    """Stack forward/adjoint for a list of three-wave pattern specs.

    Kernel spectra (shared by all images) and per-orientation carriers
    are cached at construction.  Accumulation over images runs in fixed
    index order, so results are deterministic.
    """

    def __init__(self, h: Volume, specs: list[PatternSpec], binning: int):
        if not specs:
            raise GridError("empty pattern list")
        u_m = specs[0].u_m
        w_m = specs[0].w_m
        for s in specs:
            if not (np.isclose(s.u_m, u_m) and np.isclose(s.w_m, w_m)):
                raise GridError("pattern specs disagree on modulation frequencies")
        self.fine_grid = h.grid
        self.binning = int(binning)
        self.coarse_grid = h.grid.binned(self.binning)
        self.specs = list(specs)
        self.u_m = u_m
        self.w_m = w_m

        # i1 and i3 are constants, so K1 and K3 are scalar multiples of
        # the plain OTF; only the axially modulated K2 needs its own box
        i1, i2, i3 = axial_profiles(w_m, self.fine_grid)
        self._H = _fft.fftn(h.values)
        self._w1 = float(i1[0])
        self._w3 = float(i3[0])
        self._K2 = _fft.fftn(_kernel(h.values, i2))

        groups: list[_OrientationGroup] = []
        self._carriers: dict[float, np.ndarray] = {}
        by_theta: dict[float, list[int]] = {}
        for idx, s in enumerate(specs):
            by_theta.setdefault(s.theta_deg, []).append(idx)
        for theta, idxs in by_theta.items():
            groups.append(_OrientationGroup(
                theta_deg=theta,
                phases=tuple(specs[i].phi_rad for i in idxs),
                indices=tuple(idxs)))
            self._carriers[theta] = lateral_carrier(theta, u_m, self.fine_grid)
        self._groups = groups

    @property
    def n_images(self) -> int:
        return len(self.specs)

    def forward_stack(self, o: np.ndarray) -> list[np.ndarray]:
        """Camera-grid images for every pattern, in spec order."""
        b = self.binning
        d0c = bin_block(_fft.ifftn(_fft.fftn(o) * self._K1).real, b)
        out: list[np.ndarray | None] = [None] * self.n_images
        for grp in self._groups:
            m = self._carriers[grp.theta_deg]
            w1 = _fft.ifftn(_fft.fftn(o * m[None, :, :]) * self._K2)
            w2 = _fft.ifftn(_fft.fftn(o * (m * m)[None, :, :]) * self._K3)
            w1r, w1i = bin_block(w1.real, b), bin_block(w1.imag, b)
            w2r, w2i = bin_block(w2.real, b), bin_block(w2.imag, b)
            del w1, w2
            for phi, idx in zip(grp.phases, grp.indices):
                out[idx] = (d0c
                            + np.cos(phi) * w1r - np.sin(phi) * w1i
                            + np.cos(2 * phi) * w2r - np.sin(2 * phi) * w2i)
        return out  # type: ignore[return-value]

    def adjoint_sum(self, residuals: list[np.ndarray]) -> np.ndarray:
        """sum_l A_l^T r_l on the fine grid."""
        if len(residuals) != self.n_images:
            raise GridError(
                f"expected {self.n_images} residuals, got {len(residuals)}")
        b = self.binning
        a0 = np.zeros(self.coarse_grid.shape)
        for r in residuals:
            a0 += r
        out = _fft.ifftn(_fft.fftn(bin_adjoint(a0, b)) * np.conj(self._K1)).real
        for grp in self._groups:
            m = self._carriers[grp.theta_deg]
            a1 = np.zeros(self.coarse_grid.shape, dtype=np.complex128)
            a2 = np.zeros(self.coarse_grid.shape, dtype=np.complex128)
            for phi, idx in zip(grp.phases, grp.indices):
                a1 += np.exp(1j * phi) * residuals[idx]
                a2 += np.exp(2j * phi) * residuals[idx]
            q1 = _fft.ifftn(_fft.fftn(bin_adjoint(a1, b)) * np.conj(self._K2))
            q2 = _fft.ifftn(_fft.fftn(bin_adjoint(a2, b)) * np.conj(self._K3))
            out += (m[None, :, :] * q1).real + ((m * m)[None, :, :] * q2).real
        return out


class ComponentOperator:
    """Generic stack operator from explicit per-image component lists.

    Slower than ThreeWaveOperator but makes no assumption about pattern
    structure; used for uniform-illumination toys and oracle tests.
    """

    def __init__(self, h: Volume, image_components: list[list[PatternComponent]],
                 binning: int):
        self.fine_grid = h.grid
        self.binning = int(binning)
        self.coarse_grid = h.grid.binned(self.binning)
        self._components = image_components
        self._kernel_spectra = [
            [_fft.fftn(_kernel(h.values, c.axial)) for c in comps]
            for comps in image_components
        ]

    @property
    def n_images(self) -> int:
        return len(self._components)

    def forward_stack(self, o: np.ndarray) -> list[np.ndarray]:
        out = []
        for comps, kspecs in zip(self._components, self._kernel_spectra):
            spec = np.zeros(self.fine_grid.shape, dtype=np.complex128)
            for c, K in zip(comps, kspecs):
                spec += _fft.fftn(o * c.lateral[None, :, :]) * K
            out.append(bin_block(_fft.ifftn(spec).real, self.binning))
        return out

    def adjoint_sum(self, residuals: list[np.ndarray]) -> np.ndarray:
        out = np.zeros(self.fine_grid.shape)
        for r, comps, kspecs in zip(residuals, self._components, self._kernel_spectra):
            up_spec = _fft.fftn(bin_adjoint(r, self.binning))
            for c, K in zip(comps, kspecs):
                out += _fft.ifftn(up_spec * np.conj(K)).real * c.lateral[None, :, :]
        return out


@dataclass
class AcquisitionData:
    """A recorded (or simulated) stack of camera images plus provenance."""

    images: list[Volume]
    specs: list[PatternSpec]
    scheme_name: str
    binning: int
    seed: int | None
    target_snr_db: float
    snr_db: float
    fine_grid: GridSpec

    def __post_init__(self):
        if len(self.images) not in (15, 7, 5):
            raise GridError(
                f"acquisition must hold 15, 7 or 5 images, got {len(self.images)}")
        g0 = self.images[0].grid
        for v in self.images:
            if v.grid != g0:
                raise GridError("acquisition images live on different grids")
        if self.binning < 1:
            raise GridError(f"binning must be >= 1, got {self.binning}")


def _achieved_snr_db(clean_sq_norm: float, clean: np.ndarray,
                     noisy: np.ndarray) -> float:
    err = noisy - clean
    err_sq = float(np.dot(err.ravel(), err.ravel()))
    if err_sq == 0.0:
        return np.inf
    return 10.0 * np.log10(clean_sq_norm / err_sq)


def _poisson_at_scale(clean: np.ndarray, s: float, seed) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return rng.poisson(s * clean).astype(np.float64) / s


def calibrated_poisson(clean: np.ndarray, target_snr_db: float, seed,
                       tol_db: float = 0.05) -> tuple[np.ndarray, float]:
    """Poisson(s*g)/s with the photon scale s bisected so the achieved
    SNR lands within tol_db of the target.  Deterministic per seed: the
    generator is re-seeded for every trial draw, so the accepted draw
    depends only on (clean, target, seed).
    """
    clean = np.asarray(clean, dtype=np.float64)
    if np.any(clean < -1e-12):
        raise NoiseError("negative intensities in noiseless data")
    clean = np.maximum(clean, 0.0)
    sq = float(np.dot(clean.ravel(), clean.ravel()))
    if sq == 0.0:
        raise NoiseError("cannot calibrate noise on an identically zero signal")
    if np.isinf(target_snr_db):
        return clean.copy(), np.inf

    lo, hi = 1e-6, 1e12

    def snr_at(s: float) -> tuple[np.ndarray, float]:
        noisy = _poisson_at_scale(clean, s, seed)
        return noisy, _achieved_snr_db(sq, clean, noisy)

    # analytic expectation E||noise||^2 = sum(g)/s gives a near-exact start
    s_guess = float(np.sum(clean)) / sq * 10.0 ** (target_snr_db / 10.0)
    s_guess = min(max(s_guess, lo), hi)
    noisy, got = snr_at(s_guess)
    if abs(got - target_snr_db) <= tol_db:
        return noisy, got

    _, snr_lo = snr_at(lo)
    _, snr_hi = snr_at(hi)
    if snr_lo > target_snr_db or snr_hi < target_snr_db:
        raise NoiseError(
            f"target SNR {target_snr_db} dB unreachable within photon-scale "
            f"bounds [{lo:g}, {hi:g}] (achievable range "
            f"[{snr_lo:.2f}, {snr_hi:.2f}] dB)")
    log_lo, log_hi = np.log10(lo), np.log10(hi)
    if got < target_snr_db:
        log_lo = np.log10(s_guess)
    else:
        log_hi = np.log10(s_guess)
    for _ in range(200):
        mid = 0.5 * (log_lo + log_hi)
        noisy, got = snr_at(10.0 ** mid)
        if abs(got - target_snr_db) <= tol_db:
            return noisy, got
        if got < target_snr_db:
            log_lo = mid
        else:
            log_hi = mid
        if log_hi - log_lo < 1e-15:
            break
    raise NoiseError(
        f"noise calibration did not converge to {target_snr_db} +- {tol_db} dB")


def add_poisson_noise(g: Volume, target_snr_db: float, seed
                      ) -> tuple[Volume, float]:
    """Poisson noise at a calibrated SNR on one volume (see
    `calibrated_poisson` for the scheme-level contract)."""
    noisy, achieved = calibrated_poisson(g.values, target_snr_db, seed)
    return Volume(g.grid, noisy), achieved


def simulate_acquisition(o_true: Volume, optics, scheme, snr_db: float,
                         seed, binning: int) -> AcquisitionData:
    """Noiseless forward model for every scheme pattern, binned to the
    camera grid, then Poisson noise calibrated once over the whole stack
    (one global photon scale, not per image)."""
    from .optics import generate_psf
    from .scheme import build_specs

    if np.any(o_true.values < 0):
        raise GridError("true object must be nonnegative")
    h = generate_psf(optics)
    specs = build_specs(scheme, optics)
    op = ThreeWaveOperator(h, specs, binning)
    clean = op.forward_stack(o_true.values)
    stack = np.stack(clean)
    if np.isinf(snr_db):
        noisy, achieved = stack, np.inf
    else:
        noisy, achieved = calibrated_poisson(stack, snr_db, seed)
    coarse = op.coarse_grid
    images = [Volume(coarse, noisy[i]) for i in range(len(specs))]
    return AcquisitionData(images=images, specs=specs, scheme_name=scheme.name,
                           binning=binning, seed=seed, target_snr_db=snr_db,
                           snr_db=achieved, fine_grid=o_true.grid)


MANIFEST_NAME = "acquisition.json"


def _phase_index(phi: float) -> int:
    for i, p in enumerate(paper_phases()):
        if np.isclose(phi, p, atol=1e-9):
            return i
    return -1


def image_filename(spec: PatternSpec, fallback_index: int) -> str:
    pi = _phase_index(spec.phi_rad)
    tag = pi if pi >= 0 else fallback_index
    return f"raw_t{int(round(spec.theta_deg))}_p{tag}.raw"


def save_acquisition(data: AcquisitionData, out_dir: str | Path,
                     optics) -> Path:
    """One volume file per raw image plus an acquisition.json manifest
    recording scheme, seed, SNR, optics, pattern frequencies, grids, and
    the image ordering."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    entries = []
    for i, (img, spec) in enumerate(zip(data.images, data.specs)):
        fname = image_filename(spec, i)
        save_volume(img, out_dir / fname)
        entries.append({"file": fname, "theta_deg": spec.theta_deg,
                        "phi_rad": spec.phi_rad})
    g = data.fine_grid
    manifest = {
        "scheme": data.scheme_name,
        "binning": data.binning,
        "seed": data.seed,
        "target_snr_db": _json_float(data.target_snr_db),
        "achieved_snr_db": _json_float(data.snr_db),
        "optics": {"na": optics.na, "n_imm": optics.n_imm,
                   "lambda_nm": optics.lambda_nm},
        "pattern": {"u_m": data.specs[0].u_m, "w_m": data.specs[0].w_m},
        "fine_grid": {"nx": g.nx, "ny": g.ny, "nz": g.nz,
                      "dx": g.dx, "dy": g.dy, "dz": g.dz},
        "images": entries,
    }
    path = out_dir / MANIFEST_NAME
    path.write_text(json.dumps(manifest, indent=2) + "\n")
    return path


def _json_float(x: float):
    return "inf" if np.isinf(x) else float(x)


def _parse_float(x) -> float:
    return np.inf if x == "inf" else float(x)


def load_acquisition(data_dir: str | Path):
    """Read an acquisition directory; returns (AcquisitionData, OpticsParams)
    with the optics bound to the fine reconstruction grid."""
    from .optics import OpticsParams

    data_dir = Path(data_dir)
    path = data_dir / MANIFEST_NAME
    if not path.exists():
        raise FileFormatError(f"missing manifest: {path}")
    try:
        manifest = json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise FileFormatError(f"unreadable manifest {path}: {e}") from e
    fg = manifest["fine_grid"]
    fine_grid = GridSpec(int(fg["nx"]), int(fg["ny"]), int(fg["nz"]),
                         float(fg["dx"]), float(fg["dy"]), float(fg["dz"]))
    u_m = float(manifest["pattern"]["u_m"])
    w_m = float(manifest["pattern"]["w_m"])
    images, specs = [], []
    for entry in manifest["images"]:
        images.append(load_volume(data_dir / entry["file"]))
        specs.append(PatternSpec(theta_deg=float(entry["theta_deg"]),
                                 phi_rad=float(entry["phi_rad"]),
                                 u_m=u_m, w_m=w_m))
    data = AcquisitionData(
        images=images, specs=specs, scheme_name=manifest["scheme"],
        binning=int(manifest["binning"]), seed=manifest["seed"],
        target_snr_db=_parse_float(manifest["target_snr_db"]),
        snr_db=_parse_float(manifest["achieved_snr_db"]),
        fine_grid=fine_grid)
    o = manifest["optics"]
    optics = OpticsParams(na=float(o["na"]), n_imm=float(o["n_imm"]),
                          lambda_nm=float(o["lambda_nm"]), grid=fine_grid)
    return data, optics
