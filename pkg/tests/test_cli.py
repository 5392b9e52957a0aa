import json

import numpy as np
import pytest
from click.testing import CliRunner

from trisim.cli import main
from trisim.volume import load_volume


@pytest.fixture
def runner():
    return CliRunner()


def test_phantom_tiny(tmp_path, runner):
    out = tmp_path / "obj.raw"
    res = runner.invoke(main, ["phantom", "--preset", "tiny", "--out", str(out)])
    assert res.exit_code == 0, res.output
    vol = load_volume(out)
    assert vol.grid.nx == 32
    assert vol.values.max() > 0


def test_dump_config_roundtrips_through_cli(tmp_path, runner):
    res = runner.invoke(main, ["phantom", "--preset", "tiny", "--dump-config",
                               "--out", str(tmp_path / "x.raw")])
    assert res.exit_code == 0
    assert "[optics]" in res.output
    cfg_path = tmp_path / "dumped.ini"
    cfg_path.write_text(res.output)
    out = tmp_path / "obj.raw"
    res2 = runner.invoke(main, ["phantom", "--preset", "tiny",
                                "--config", str(cfg_path), "--out", str(out)])
    assert res2.exit_code == 0, res2.output


def test_error_lines_are_machine_parsable(tmp_path, runner):
    res = runner.invoke(main, ["evaluate", "--truth", str(tmp_path / "a.raw"),
                               "--restored", str(tmp_path / "b.raw"),
                               "--report", str(tmp_path / "r.json")])
    assert res.exit_code == 1
    err = res.output.strip().splitlines()[-1]
    assert err.startswith("error:io:")


@pytest.fixture(scope="module")
def pipeline_dir(tmp_path_factory):
    """One tiny end-to-end pipeline shared by the CLI tests."""
    root = tmp_path_factory.mktemp("pipeline")
    runner = CliRunner()
    obj = root / "obj.raw"
    r = runner.invoke(main, ["phantom", "--preset", "tiny", "--out", str(obj)])
    assert r.exit_code == 0, r.output
    data = root / "data"
    r = runner.invoke(main, ["simulate", "--preset", "tiny", "--object",
                             str(obj), "--out-dir", str(data),
                             "--scheme", "full15", "--snr-db", "15",
                             "--seed", "11"])
    assert r.exit_code == 0, r.output
    return root


def test_simulate_writes_manifest_and_images(pipeline_dir):
    data = pipeline_dir / "data"
    manifest = json.loads((data / "acquisition.json").read_text())
    assert manifest["scheme"] == "full15"
    assert len(manifest["images"]) == 15
    assert abs(manifest["achieved_snr_db"] - 15.0) <= 0.1
    assert (data / "raw_t0_p0.raw").exists()
    assert (data / "raw_t120_p4.raw").exists()


def test_reconstruct_mbpc_and_evaluate(pipeline_dir, runner):
    data = pipeline_dir / "data"
    out = pipeline_dir / "mbpc.raw"
    r = runner.invoke(main, ["reconstruct", "--preset", "tiny", "--data-dir",
                             str(data), "--out", str(out),
                             "--method", "mbpc", "--iters", "8"])
    assert r.exit_code == 0, r.output
    restored = load_volume(out)
    assert restored.values.min() >= 0.0
    assert (pipeline_dir / "mbpc.trace.csv").exists()
    assert (pipeline_dir / "mbpc.trace.png").exists()

    report = pipeline_dir / "report.json"
    r = runner.invoke(main, ["evaluate", "--truth", str(pipeline_dir / "obj.raw"),
                             "--restored", str(out), "--report", str(report),
                             "--method", "mbpc", "--scheme", "full15",
                             "--iters", "8"])
    assert r.exit_code == 0, r.output
    payload = json.loads(report.read_text())
    assert 0.0 <= payload["ssim"] <= 1.0
    assert payload["mse"] >= 0.0
    assert payload["method"] == "mbpc"


def test_reconstruct_gwf(pipeline_dir, runner):
    data = pipeline_dir / "data"
    out = pipeline_dir / "gwf.raw"
    r = runner.invoke(main, ["reconstruct", "--preset", "tiny", "--data-dir",
                             str(data), "--out", str(out), "--method", "gwf",
                             "--wiener", "0.01"])
    assert r.exit_code == 0, r.output
    assert load_volume(out).grid.nx == 32


def test_gwf_on_reduced_scheme_fails_cleanly(pipeline_dir, runner):
    reduced = pipeline_dir / "data5"
    r = runner.invoke(main, ["simulate", "--preset", "tiny", "--object",
                             str(pipeline_dir / "obj.raw"), "--out-dir",
                             str(reduced), "--scheme", "reduced5",
                             "--snr-db", "inf", "--seed", "0"])
    assert r.exit_code == 0, r.output
    r = runner.invoke(main, ["reconstruct", "--preset", "tiny", "--data-dir",
                             str(reduced), "--out",
                             str(pipeline_dir / "nope.raw"), "--method", "gwf"])
    assert r.exit_code == 1
    assert "error:gwf:" in r.output


def test_evaluate_grid_mismatch_needs_flag(pipeline_dir, runner, tmp_path):
    # restored on the camera grid vs truth on the fine grid
    coarse = pipeline_dir / "data" / "raw_t0_p0.raw"
    report = tmp_path / "r.json"
    args = ["evaluate", "--truth", str(pipeline_dir / "obj.raw"),
            "--restored", str(coarse), "--report", str(report)]
    r = runner.invoke(main, args)
    assert r.exit_code == 1
    assert "error:metrics:" in r.output
    r = runner.invoke(main, args + ["--upsample-restored"])
    assert r.exit_code == 0, r.output


def test_export_slice(pipeline_dir, runner):
    out = pipeline_dir / "slice.png"
    r = runner.invoke(main, ["export-slice", "--volume",
                             str(pipeline_dir / "obj.raw"), "--plane", "xy",
                             "--out", str(out)])
    assert r.exit_code == 0, r.output
    assert out.exists()
    assert (pipeline_dir / "slice_profiles.csv").exists()
    assert (pipeline_dir / "slice_profiles.png").exists()
    from PIL import Image
    img = Image.open(out)
    assert img.size == (32, 32)
    assert img.mode in ("I;16", "I")


def test_export_slice_bad_anchor(pipeline_dir, runner):
    r = runner.invoke(main, ["export-slice", "--volume",
                             str(pipeline_dir / "obj.raw"), "--anchor", "a,b",
                             "--out", str(pipeline_dir / "x.png")])
    assert r.exit_code == 1
    assert "error:metrics:" in r.output


def test_simulate_rejects_bad_snr(pipeline_dir, runner):
    r = runner.invoke(main, ["simulate", "--preset", "tiny", "--object",
                             str(pipeline_dir / "obj.raw"), "--out-dir",
                             str(pipeline_dir / "zz"), "--snr-db", "loud"])
    assert r.exit_code == 1
    assert "error:config:" in r.output
