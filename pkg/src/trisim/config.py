"""Run configuration: presets, INI files, and CLI overrides.

Precedence is CLI flag > config file > preset.  The file format is
plain INI (key/value under [section] headers) and round-trips through
``--dump-config``: loading a dumped file reproduces the configuration
exactly.

Presets share the same 6.4 um cube, optics, pattern and noise settings
and differ in grid resolution:

* paper -- 512^3 object / 256^3 camera (the scale the headline numbers
  were produced at; hours of compute).
* desk  -- 128^3 object / 64^3 camera; keeps every physical size so the
  resolution relationships survive, at tractable runtime.
* tiny  -- 32^3 object / 16^3 camera for CI, with the phantom features
  scaled 4x so they stay resolvable at the 200 nm pitch.
"""

from __future__ import annotations

import configparser
import dataclasses
import io
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError
from .gwf import GWFConfig
from .optics import OpticsParams
from .phantom import PhantomSpec, RingLayout
from .scheme import SCHEME_NAMES, AcquisitionScheme, scheme_pairs
from .solver import SolverConfig
from .volume import GridSpec

PRESET_NAMES = ("paper", "desk", "tiny")


@dataclass
class GridSection:
    object_n: int = 128
    binning: int = 2
    cube_side_nm: float = 6400.0


@dataclass
class OpticsSection:
    na: float = 1.4
    n_imm: float = 1.515
    lambda_nm: float = 515.0


@dataclass
class PatternSection:
    um_factor: float = 0.8
    wm_over_um: float = 0.231


@dataclass
class PhantomSection:
    shell_diameter_nm: float = 3000.0
    shell_thickness_nm: float = 200.0
    bead_diameter_nm: float = 150.0
    bead_spacing_nm: float = 175.0
    bead_ring_radius_nm: float = 600.0
    shell_intensity: float = 1.0
    bead_intensity: float = 1.0


@dataclass
class NoiseSection:
    snr_db: float = 15.0
    seed: int = 42


@dataclass
class SchemeSection:
    name: str = "full15"


@dataclass
class SolverSection:
    method: str = "mbpc"
    iters: int = 0          # 0 = per-scheme default (150 full15, 200 reduced)
    cost_rel_tol: float = 1e-9
    restart_every: int = 50


@dataclass
class GwfSection:
    wiener: float = 0.01
    apodization: bool = False


@dataclass
class RunConfig:
    preset: str = "desk"
    grid: GridSection = field(default_factory=GridSection)
    optics: OpticsSection = field(default_factory=OpticsSection)
    pattern: PatternSection = field(default_factory=PatternSection)
    phantom: PhantomSection = field(default_factory=PhantomSection)
    noise: NoiseSection = field(default_factory=NoiseSection)
    scheme: SchemeSection = field(default_factory=SchemeSection)
    solver: SolverSection = field(default_factory=SolverSection)
    gwf: GwfSection = field(default_factory=GwfSection)

    # -- derived objects ---------------------------------------------------

    def fine_grid(self) -> GridSpec:
        n = self.grid.object_n
        d = self.grid.cube_side_nm / n
        return GridSpec(n, n, n, d, d, d)

    def camera_grid(self) -> GridSpec:
        return self.fine_grid().binned(self.grid.binning)

    def optics_params(self) -> OpticsParams:
        return OpticsParams(na=self.optics.na, n_imm=self.optics.n_imm,
                            lambda_nm=self.optics.lambda_nm,
                            grid=self.fine_grid())

    def phantom_spec(self) -> PhantomSpec:
        p = self.phantom
        layout = None
        if p.bead_diameter_nm > 0 and p.bead_ring_radius_nm > 0:
            layout = RingLayout(radius_nm=p.bead_ring_radius_nm,
                                spacing_nm=p.bead_spacing_nm)
        return PhantomSpec(grid=self.fine_grid(),
                           cube_side_nm=self.grid.cube_side_nm,
                           shell_diameter_nm=p.shell_diameter_nm,
                           shell_thickness_nm=p.shell_thickness_nm,
                           bead_diameter_nm=p.bead_diameter_nm,
                           bead_layout=layout,
                           shell_intensity=p.shell_intensity,
                           bead_intensity=p.bead_intensity)

    def acquisition_scheme(self) -> AcquisitionScheme:
        return scheme_pairs(self.scheme.name)

    def resolved_iters(self) -> int:
        if self.solver.iters > 0:
            return self.solver.iters
        return 150 if self.scheme.name == "full15" else 200

    def solver_config(self) -> SolverConfig:
        return SolverConfig(method=self.solver.method,
                            max_iters=self.resolved_iters(),
                            cost_rel_tol=self.solver.cost_rel_tol,
                            restart_every=self.solver.restart_every)

    def gwf_config(self) -> GWFConfig:
        return GWFConfig(wiener_param=self.gwf.wiener,
                         apodization=self.gwf.apodization)


def preset_config(name: str) -> RunConfig:
    name = name.lower()
    if name not in PRESET_NAMES:
        raise ConfigError(f"unknown preset '{name}' (expected {PRESET_NAMES})")
    cfg = RunConfig(preset=name)
    if name == "paper":
        cfg.grid.object_n = 512
    elif name == "desk":
        cfg.grid.object_n = 128
    else:  # tiny: CI scale, phantom features scaled 4x vs paper
        cfg.grid.object_n = 32
        cfg.phantom.shell_thickness_nm = 800.0
        cfg.phantom.bead_diameter_nm = 600.0
        cfg.phantom.bead_spacing_nm = 700.0
        cfg.phantom.bead_ring_radius_nm = 350.0
    return cfg


_SECTIONS = ("grid", "optics", "pattern", "phantom", "noise", "scheme",
             "solver", "gwf")


def _set_field(section_obj, key: str, raw: str, where: str) -> None:
    match = {f.name: f for f in dataclasses.fields(section_obj)}
    if key not in match:
        raise ConfigError(f"unknown key '{key}' in section [{where}]")
    ftype = match[key].type
    try:
        if ftype in ("int", int):
            value = int(raw)
        elif ftype in ("float", float):
            value = float(raw)
        elif ftype in ("bool", bool):
            low = raw.strip().lower()
            if low in ("true", "yes", "on", "1"):
                value = True
            elif low in ("false", "no", "off", "0"):
                value = False
            else:
                raise ValueError(raw)
        else:
            value = raw
    except ValueError as e:
        raise ConfigError(
            f"bad value '{raw}' for [{where}] {key} (expected {ftype})") from e
    setattr(section_obj, key, value)


def apply_file(cfg: RunConfig, path: str | Path) -> RunConfig:
    parser = configparser.ConfigParser()
    read = parser.read(str(path))
    if not read:
        raise ConfigError(f"config file not found: {path}")
    for section in parser.sections():
        if section == "run":
            if parser.has_option("run", "preset"):
                cfg.preset = parser.get("run", "preset")
            continue
        if section not in _SECTIONS:
            raise ConfigError(f"unknown config section [{section}]")
        obj = getattr(cfg, section)
        for key, raw in parser.items(section):
            _set_field(obj, key, raw, section)
    return cfg


def apply_overrides(cfg: RunConfig, overrides: dict[tuple[str, str], object]
                    ) -> RunConfig:
    """Apply (section, key) -> value pairs (CLI flags, already typed)."""
    for (section, key), value in overrides.items():
        if value is None:
            continue
        if section not in _SECTIONS:
            raise ConfigError(f"unknown config section [{section}]")
        obj = getattr(cfg, section)
        if not hasattr(obj, key):
            raise ConfigError(f"unknown key '{key}' in section [{section}]")
        setattr(obj, key, value)
    return cfg


def build_config(preset: str = "desk", config_file: str | Path | None = None,
                 overrides: dict[tuple[str, str], object] | None = None
                 ) -> RunConfig:
    cfg = preset_config(preset)
    if config_file is not None:
        apply_file(cfg, config_file)
    if overrides:
        apply_overrides(cfg, overrides)
    _validate(cfg)
    return cfg


def _validate(cfg: RunConfig) -> None:
    if cfg.scheme.name not in SCHEME_NAMES:
        raise ConfigError(
            f"unknown scheme '{cfg.scheme.name}' (expected {SCHEME_NAMES})")
    if cfg.solver.method not in ("mb", "mbpc", "gwf"):
        raise ConfigError(f"unknown method '{cfg.solver.method}'")
    if cfg.grid.object_n % (2 * cfg.grid.binning) != 0:
        raise ConfigError(
            f"object_n={cfg.grid.object_n} must be divisible by twice the "
            f"binning ({cfg.grid.binning}) so both grids stay even")


def dump_config(cfg: RunConfig) -> str:
    """INI text that `apply_file` parses back to an identical config."""
    parser = configparser.ConfigParser()
    parser["run"] = {"preset": cfg.preset}
    for section in _SECTIONS:
        obj = getattr(cfg, section)
        parser[section] = {f.name: str(getattr(obj, f.name))
                           for f in dataclasses.fields(obj)}
    buf = io.StringIO()
    parser.write(buf)
    return buf.getvalue()
