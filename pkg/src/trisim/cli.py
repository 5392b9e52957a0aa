"""Command-line interface: phantom, simulate, reconstruct, evaluate,
export-slice.

Every command exits 0 on success; failures print a single
``error:<category>: <message>`` line to stderr and exit nonzero.
Flag precedence is CLI > --config file > --preset.
"""

from __future__ import annotations

import functools
import json
import sys
from pathlib import Path

import click
import numpy as np

from . import _fft
from .config import PRESET_NAMES, RunConfig, build_config, dump_config
from .errors import ConfigError, MetricsError, TrisimError
from .forward import load_acquisition, save_acquisition, simulate_acquisition
from .gwf import run_gwf
from .metrics import evaluate as evaluate_metrics
from .phantom import generate_phantom
from .report import (PLANES, render_trace_figure, slice_report,
                     write_trace_csv)
from .scheme import SCHEME_NAMES, scheme_pairs
from .solver import run_solver
from .volume import GridSpec, Volume, load_volume, save_volume
from .forward import bin_adjoint


@click.group()
def main():
    """Three-wave 3D-SIM simulation and restoration toolkit."""


def _fail(err: TrisimError) -> None:
    click.echo(f"error:{err.category}: {err}", err=True)
    sys.exit(1)


def guarded(f):
    @functools.wraps(f)
    def wrapper(*args, **kwargs):
        try:
            return f(*args, **kwargs)
        except TrisimError as err:
            _fail(err)
    return wrapper


def config_options(f):
    f = click.option("--preset", type=click.Choice(PRESET_NAMES), default="desk",
                     show_default=True, help="Base parameter set.")(f)
    f = click.option("--config", "config_file", type=click.Path(), default=None,
                     help="INI config file overriding the preset.")(f)
    f = click.option("--threads", type=int, default=None,
                     help="Cap FFT worker threads (default: all cores, or "
                          "TRISIM_THREADS).")(f)
    f = click.option("--dump-config", is_flag=True,
                     help="Print the effective configuration and exit.")(f)
    return f


def _setup(preset: str, config_file, threads, dump: bool,
           overrides: dict | None = None) -> RunConfig | None:
    if threads is not None:
        _fft.set_max_threads(threads)
    cfg = build_config(preset, config_file, overrides)
    if dump:
        click.echo(dump_config(cfg), nl=False)
        return None
    return cfg


def _parse_snr(raw: str | None) -> float | None:
    if raw is None:
        return None
    if raw.strip().lower() in ("inf", "+inf", "infinity"):
        return np.inf
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"bad --snr-db value '{raw}'") from None


@main.command("phantom")
@config_options
@click.option("--out", "out_path", required=True, type=click.Path(),
              help="Output volume path (.raw + .json sidecar).")
@guarded
def cmd_phantom(preset, config_file, threads, dump_config, out_path):
    """Generate the shell-and-beads ground-truth object."""
    cfg = _setup(preset, config_file, threads, dump_config)
    if cfg is None:
        return
    vol = generate_phantom(cfg.phantom_spec())
    save_volume(vol, out_path)
    click.echo(f"wrote {out_path} ({cfg.grid.object_n}^3)")


@main.command("simulate")
@config_options
@click.option("--object", "object_path", required=True, type=click.Path(),
              help="Ground-truth volume file.")
@click.option("--out-dir", required=True, type=click.Path(),
              help="Directory for raw images + acquisition.json.")
@click.option("--scheme", "scheme_name", type=click.Choice(SCHEME_NAMES),
              default=None, help="Acquisition scheme.")
@click.option("--snr-db", default=None,
              help="Target Poisson SNR in dB ('inf' for noiseless).")
@click.option("--seed", type=int, default=None, help="Noise seed.")
@click.option("--binning", type=int, default=None,
              help="Camera binning factor.")
@guarded
def cmd_simulate(preset, config_file, threads, dump_config, object_path,
                 out_dir, scheme_name, snr_db, seed, binning):
    """Simulate the raw SIM acquisition from a ground-truth object."""
    overrides = {
        ("scheme", "name"): scheme_name,
        ("noise", "snr_db"): _parse_snr(snr_db),
        ("noise", "seed"): seed,
        ("grid", "binning"): binning,
    }
    cfg = _setup(preset, config_file, threads, dump_config, overrides)
    if cfg is None:
        return
    o_true = load_volume(object_path)
    optics = cfg.optics_params()
    if optics.grid != o_true.grid:
        # the object file defines the fine grid; rebind optics to it
        optics = type(optics)(na=optics.na, n_imm=optics.n_imm,
                              lambda_nm=optics.lambda_nm, grid=o_true.grid)
    scheme = scheme_pairs(cfg.scheme.name)
    data = simulate_acquisition(o_true, optics, scheme, cfg.noise.snr_db,
                                cfg.noise.seed, cfg.grid.binning)
    save_acquisition(data, out_dir, optics)
    snr_txt = "inf" if np.isinf(data.snr_db) else f"{data.snr_db:.2f}"
    click.echo(f"wrote {len(data.images)} raw images to {out_dir} "
               f"(achieved SNR {snr_txt} dB)")


@main.command("reconstruct")
@config_options
@click.option("--data-dir", required=True, type=click.Path(),
              help="Acquisition directory (from `simulate`).")
@click.option("--out", "out_path", required=True, type=click.Path(),
              help="Restored volume path.")
@click.option("--method", type=click.Choice(["mb", "mbpc", "gwf"]),
              default=None, help="Restoration method.")
@click.option("--iters", type=int, default=None,
              help="Iteration count (default 150 full15 / 200 reduced).")
@click.option("--wiener", type=float, default=None,
              help="GWF Wiener parameter.")
@click.option("--no-figures", is_flag=True, help="Skip figure rendering.")
@guarded
def cmd_reconstruct(preset, config_file, threads, dump_config, data_dir,
                    out_path, method, iters, wiener, no_figures):
    """Restore the object from an acquisition directory."""
    overrides = {
        ("solver", "method"): method,
        ("solver", "iters"): iters,
        ("gwf", "wiener"): wiener,
    }
    cfg = _setup(preset, config_file, threads, dump_config, overrides)
    if cfg is None:
        return
    data, optics = load_acquisition(data_dir)
    cfg.scheme.name = data.scheme_name
    out_path = Path(out_path)
    if cfg.solver.method == "gwf":
        restored = run_gwf(data, optics, cfg.gwf_config())
        save_volume(restored, out_path)
        click.echo(f"wrote {out_path} (gwf, wiener={cfg.gwf.wiener})")
        return
    scheme = scheme_pairs(data.scheme_name)
    restored, trace = run_solver(data, scheme, optics, cfg.solver_config())
    save_volume(restored, out_path)
    trace_path = write_trace_csv(trace, out_path.with_suffix(".trace.csv"))
    if not no_figures:
        render_trace_figure(trace, out_path.with_suffix(".trace.png"),
                            title=f"{cfg.solver.method} on {data.scheme_name}")
    click.echo(f"wrote {out_path} ({cfg.solver.method}, "
               f"{trace[-1].iteration} iterations, final cost "
               f"{trace[-1].cost:.6e}); trace at {trace_path}")


@main.command("evaluate")
@click.option("--truth", "truth_path", required=True, type=click.Path())
@click.option("--restored", "restored_path", required=True, type=click.Path())
@click.option("--report", "report_path", required=True, type=click.Path())
@click.option("--upsample-restored", is_flag=True,
              help="Block-replicate a coarse restored volume onto the "
                   "truth grid before scoring.")
@click.option("--method", default="", help="Provenance tag for the report.")
@click.option("--scheme", default="", help="Provenance tag for the report.")
@click.option("--iters", type=int, default=0, help="Provenance tag.")
@guarded
def cmd_evaluate(truth_path, restored_path, report_path, upsample_restored,
                 method, scheme, iters):
    """Score a restored volume against the ground truth (MSE + SSIM)."""
    truth = load_volume(truth_path)
    restored = load_volume(restored_path)
    if restored.grid != truth.grid and upsample_restored:
        factor = truth.grid.nx // restored.grid.nx
        if factor < 1 or restored.grid.refined(factor) != truth.grid:
            raise MetricsError(
                f"cannot upsample {restored.grid.shape} onto {truth.grid.shape}")
        restored = Volume(truth.grid,
                          bin_adjoint(restored.values, factor) * factor ** 3)
    report = evaluate_metrics(truth, restored, method=method, scheme=scheme,
                              iters=iters)
    payload = json.dumps(report.to_dict(), indent=2)
    Path(report_path).write_text(payload + "\n")
    click.echo(payload)


@main.command("export-slice")
@click.option("--volume", "volume_path", required=True, type=click.Path())
@click.option("--plane", type=click.Choice(PLANES), default="xy",
              show_default=True)
@click.option("--index", type=int, default=None,
              help="Slice index (default: middle).")
@click.option("--anchor", default=None,
              help="Profile anchor voxel 'ix,iy,iz' (default: grid center).")
@click.option("--out", "out_path", required=True, type=click.Path(),
              help="Output PNG path; CSV profiles and a profile figure "
                   "are written alongside.")
@click.option("--no-figures", is_flag=True, help="Skip figure rendering.")
@guarded
def cmd_export_slice(volume_path, plane, index, anchor, out_path, no_figures):
    """Export a 16-bit grayscale slice PNG plus line-profile CSV/figure."""
    vol = load_volume(volume_path)
    g = vol.grid
    if index is None:
        index = {"xy": g.nz, "xz": g.ny, "yz": g.nx}[plane] // 2
    if anchor is None:
        anchor_idx = (g.nx // 2, g.ny // 2, g.nz // 2)
    else:
        try:
            parts = [int(p) for p in anchor.split(",")]
            assert len(parts) == 3
        except (ValueError, AssertionError):
            raise MetricsError(
                f"bad --anchor '{anchor}' (expected 'ix,iy,iz')") from None
        anchor_idx = (parts[0], parts[1], parts[2])
    written = slice_report(vol, plane, index, anchor_idx, out_path,
                           with_figure=not no_figures)
    for path in written:
        click.echo(f"wrote {path}")


if __name__ == "__main__":
    main()
