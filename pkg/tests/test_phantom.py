import numpy as np
import pytest

from trisim.errors import PhantomError
from trisim.phantom import (ExplicitLayout, PhantomSpec, RingLayout,
                            bead_centers, bead_pair_anchor, generate_phantom)
from trisim.volume import GridSpec


def desk_spec():
    g = GridSpec(128, 128, 128, 50.0, 50.0, 50.0)
    return PhantomSpec(grid=g)


def test_paper_scale_voxel_arithmetic():
    # 512^3 over 6.4 um: 12.5 nm voxels, shell radius 120 voxels,
    # thickness 16 voxels (checked on the spec, not by rendering 512^3)
    g = GridSpec(512, 512, 512, 12.5, 12.5, 12.5)
    spec = PhantomSpec(grid=g)
    assert spec.shell_diameter_nm / 2 / g.dx == 120
    assert spec.shell_thickness_nm / g.dx == 16
    # desk: 50 nm voxels, bead diameter 3 voxels
    d = desk_spec()
    assert d.bead_diameter_nm / d.grid.dx == 3


def test_empty_spec_gives_zero_volume():
    g = GridSpec(32, 32, 32, 200.0, 200.0, 200.0)
    spec = PhantomSpec(grid=g, cube_side_nm=6400.0, shell_diameter_nm=0.0,
                       shell_thickness_nm=0.0, bead_layout=None)
    v = generate_phantom(spec)
    assert np.abs(v.values).max() == 0.0


def test_phantom_deterministic_and_bounded():
    spec = desk_spec()
    a = generate_phantom(spec)
    b = generate_phantom(spec)
    assert np.array_equal(a.values, b.values)
    assert a.values.min() >= 0.0
    assert a.values.max() <= 1.0 + 1e-12


def test_shell_geometry():
    spec = desk_spec()
    v = generate_phantom(spec).values
    g = spec.grid
    c = spec.cube_side_nm / 2
    coords = (np.arange(g.nx) + 0.5) * g.dx - c
    r = np.sqrt(coords[None, None, :] ** 2 + coords[None, :, None] ** 2
                + coords[:, None, None] ** 2)
    outer, inner = 1500.0, 1300.0
    # one-voxel margin still leaves the supersample cloud fully in-wall
    deep_inside = (r > inner + g.dx) & (r < outer - g.dx)
    assert deep_inside.any()
    assert v[deep_inside].min() == 1.0
    well_clear = r > outer + 2 * g.dx
    assert v[well_clear].max() == 0.0
    hollow = r < inner - 8 * g.dx  # inside the shell, clear of the bead ring
    center_region = hollow & (r < 400.0)
    assert v[center_region].max() == 0.0


def test_bead_ring_spacing():
    spec = desk_spec()
    centers = bead_centers(spec)
    assert len(centers) >= 2
    # consecutive centers 175 nm apart (the closing pair may be wider)
    for (a, b) in zip(centers[:-1], centers[1:]):
        d = np.linalg.norm(np.subtract(a, b))
        assert d == pytest.approx(175.0, abs=1e-9)
    # no pair closer than 175 nm
    arr = np.array(centers)
    for i in range(len(arr)):
        for j in range(i + 1, len(arr)):
            assert np.linalg.norm(arr[i] - arr[j]) >= 175.0 - 1e-9
    # all beads inside the shell hollow
    c = spec.cube_side_nm / 2
    for ctr in centers:
        r = np.linalg.norm(np.subtract(ctr, (c, c, c)))
        assert r + spec.bead_diameter_nm / 2 <= 1300.0


def test_first_bead_pair_is_y_aligned():
    spec = desk_spec()
    (x0, y0, z0), (x1, y1, z1) = bead_centers(spec)[:2]
    assert x0 == pytest.approx(x1)
    assert z0 == pytest.approx(z1)
    assert abs(y1 - y0) == pytest.approx(175.0)
    ix, iy, iz = bead_pair_anchor(spec)
    g = spec.grid
    assert abs((ix + 0.5) * g.dx - x0) <= g.dx
    assert abs((iy + 0.5) * g.dy - (y0 + y1) / 2) <= g.dy


def test_profile_through_pair_shows_separated_beads():
    # fine pitch so the 25 nm surface gap resolves to an exact zero
    g = GridSpec(128, 128, 32, 12.5, 12.5, 50.0)
    spec = PhantomSpec(grid=g, cube_side_nm=1600.0, shell_diameter_nm=0.0,
                       shell_thickness_nm=0.0,
                       bead_layout=ExplicitLayout(centers_nm=(
                           (0.0, -87.5, 0.0), (0.0, 87.5, 0.0))))
    v = generate_phantom(spec)
    from trisim.metrics import line_profile
    from trisim.phantom import bead_pair_anchor
    anchor = bead_pair_anchor(spec)
    prof = line_profile(v, "y", anchor)
    vals = prof[:, 1]
    assert vals.max() == 1.0
    mid = len(vals) // 2
    # zero gap between the two plateaus
    assert vals[mid - 1: mid + 1].min() == 0.0
    peaks = np.where(vals == 1.0)[0]
    assert peaks.min() < mid < peaks.max()


def test_phantom_validation_errors():
    g = GridSpec(64, 64, 64, 50.0, 50.0, 50.0)
    # wrong cube side for the grid
    with pytest.raises(PhantomError):
        PhantomSpec(grid=g, cube_side_nm=6400.0)
    g2 = GridSpec(128, 128, 128, 50.0, 50.0, 50.0)
    # shell too large for the guard band
    with pytest.raises(PhantomError, match="guard band"):
        PhantomSpec(grid=g2, shell_diameter_nm=6000.0)
    # overlapping beads
    with pytest.raises(PhantomError, match="overlap"):
        PhantomSpec(grid=g2, bead_layout=RingLayout(radius_nm=600.0,
                                                    spacing_nm=100.0))
    # ring outside the shell interior
    with pytest.raises(PhantomError, match="fit"):
        PhantomSpec(grid=g2, bead_layout=RingLayout(radius_nm=1290.0,
                                                    spacing_nm=175.0))


def test_antialiasing_fraction_values():
    # a bead centered between voxel centers produces boundary fractions
    g = GridSpec(32, 32, 32, 50.0, 50.0, 50.0)
    spec = PhantomSpec(grid=g, cube_side_nm=1600.0, shell_diameter_nm=0.0,
                       shell_thickness_nm=0.0,
                       bead_layout=ExplicitLayout(centers_nm=((25.0, 25.0, 25.0),)),
                       bead_diameter_nm=150.0)
    v = generate_phantom(spec).values
    fracs = np.unique(v)
    assert fracs.min() == 0.0
    assert fracs.max() == 1.0
    assert np.any((fracs > 0) & (fracs < 1))
    assert set(np.round(fracs * 8).astype(int)) <= set(range(9))
