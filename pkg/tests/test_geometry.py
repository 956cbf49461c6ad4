import math

import numpy as np
import pytest
from hypothesis import given, settings as hyp_settings, strategies as st

from phckit.geometry import (
    CavityDesign,
    GeometryError,
    HoleModification,
    LatticeSpec,
    enumerate_holes,
    l3,
    l3_s1,
    l3_sr3,
    rasterize,
    slab_dispersion_residual,
    slab_effective_index,
)

# independently computed fundamental TE effective index for a 240 nm
# slab of index 2.6 in air at 1100 nm (dense-grid root scan)
N_EFF_240NM_1100NM = 2.1970733309204533


# ----------------------------------------------------------- validation

def test_lattice_rejects_bad_radius():
    with pytest.raises(GeometryError):
        LatticeSpec(hole_radius_ratio=0.5)
    with pytest.raises(GeometryError):
        LatticeSpec(hole_radius_ratio=0.0)


def test_lattice_rejects_index_ordering():
    with pytest.raises(GeometryError):
        LatticeSpec(slab_index_n=1.0, background_index=1.0)
    with pytest.raises(GeometryError):
        LatticeSpec(background_index=0.5)


def test_design_rejects_duplicate_modification():
    with pytest.raises(GeometryError):
        CavityDesign(modifications=(HoleModification(1), HoleModification(1)))


def test_modification_rejects_negative_radius():
    design = CavityDesign(
        modifications=(HoleModification(1, radius_reduction_ratio=0.3),)
    )
    with pytest.raises(GeometryError):
        enumerate_holes(LatticeSpec(), design)  # r/a = 0.2553 < 0.3


def test_modification_index_must_fit_extent():
    design = CavityDesign(
        modifications=(HoleModification(12),), crystal_extent=(20, 13)
    )
    with pytest.raises(GeometryError):
        enumerate_holes(LatticeSpec(), design)


# --------------------------------------------------------- hole layouts

def _defect_row(holes):
    return sorted(h for h in holes if abs(h[1]) < 1e-12)


def test_l3_s1_edge_hole_position_and_radius():
    lattice = LatticeSpec(hole_radius_ratio=0.29)
    holes = _defect_row(enumerate_holes(lattice, l3_s1()))
    xs = [h[0] for h in holes]
    assert min(abs(x) for x in xs) == pytest.approx(2.21, abs=1e-12)
    for h in holes:
        if abs(abs(h[0]) - 2.21) < 1e-9:
            assert h[2] == pytest.approx(0.29, abs=1e-12)


def test_l3_sr3_modified_holes():
    holes = _defect_row(enumerate_holes(LatticeSpec(), l3_sr3()))
    expected = {
        2.3482: 0.2553 - 0.098,
        3.2476: 0.2553 - 0.0882,
        4.0573: 0.2553 - 0.0927,
    }
    for x_exp, r_exp in expected.items():
        matches = [h for h in holes if abs(abs(h[0]) - x_exp) < 1e-9]
        assert len(matches) == 2  # one on each side
        for h in matches:
            assert h[2] == pytest.approx(r_exp, abs=1e-12)


def test_l3_defect_row_count():
    holes = _defect_row(enumerate_holes(LatticeSpec(), l3()))
    # 20 periods along x: sites at integer x with |x| <= 10, minus 3 omitted
    assert len(holes) == 21 - 3
    assert all(abs(h[0]) >= 2.0 - 1e-9 for h in holes)


def test_hole_count_scales_with_defect_length():
    base = len(enumerate_holes(LatticeSpec(), CavityDesign(defect_length_x=1)))
    for lx in (3, 5, 7):
        n = len(enumerate_holes(LatticeSpec(), CavityDesign(defect_length_x=lx)))
        assert n == base - (lx - 1)


@given(
    lx=st.integers(min_value=1, max_value=6),
    n_mods=st.integers(min_value=0, max_value=3),
    ds=st.floats(min_value=0.0, max_value=0.4),
    dr=st.floats(min_value=0.0, max_value=0.2),
)
@hyp_settings(max_examples=50, deadline=None)
def test_hole_set_mirror_symmetry(lx, n_mods, ds, dr):
    mods = tuple(HoleModification(k + 1, ds / (k + 1), dr / (k + 2))
                 for k in range(n_mods))
    design = CavityDesign(defect_length_x=lx, modifications=mods,
                          crystal_extent=(16, 9))
    holes = enumerate_holes(LatticeSpec(), design)
    as_set = {(round(x, 12), round(y, 12), round(r, 12)) for x, y, r in holes}
    mirror_x = {(round(-x, 12), round(y, 12), round(r, 12)) for x, y, r in holes}
    mirror_y = {(round(x, 12), round(-y, 12), round(r, 12)) for x, y, r in holes}
    assert as_set == mirror_x == mirror_y


def test_enumeration_is_deterministic():
    a = enumerate_holes(LatticeSpec(), l3_sr3())
    b = enumerate_holes(LatticeSpec(), l3_sr3())
    assert a == b


# --------------------------------------------------------- rasterization

def test_rasterize_no_holes_is_uniform():
    lattice = LatticeSpec()
    grid = rasterize(lattice, [], 16, extent=(-2, 2, -2, 2))
    assert np.all(grid.permittivity == lattice.slab_index_n**2)


def test_rasterize_rejects_low_resolution():
    with pytest.raises(GeometryError):
        rasterize(LatticeSpec(), [], 4)


def test_fill_fraction_convergence():
    # average the error over several radii: a single radius is dominated by
    # how the circle happens to cut the subsample lattice
    lattice = LatticeSpec(hole_radius_ratio=0.3)
    radii = np.linspace(0.22, 0.38, 9)

    def mean_error(res):
        total = 0.0
        for r in radii:
            f = math.pi * r * r
            target = 1.0 * f + lattice.slab_index_n**2 * (1.0 - f)
            grid = rasterize(lattice, [(0.0, 0.0, float(r))], res,
                             extent=(-0.5, 0.5, -0.5, 0.5))
            total += abs(float(grid.permittivity.mean()) - target)
        return total / len(radii)

    assert mean_error(16) / mean_error(32) >= 1.8


def test_l3_sr3_grid_mirror_symmetric():
    holes = enumerate_holes(LatticeSpec(), l3_sr3())
    grid = rasterize(LatticeSpec(), holes, 16)
    eps = grid.permittivity
    assert float(np.max(np.abs(eps - eps[::-1, :]))) == 0.0
    assert float(np.max(np.abs(eps - eps[:, ::-1]))) == 0.0


def test_rasterize_values_bounded():
    holes = enumerate_holes(LatticeSpec(), l3_sr3())
    grid = rasterize(LatticeSpec(), holes, 16)
    assert grid.permittivity.min() >= 1.0 - 1e-12
    assert grid.permittivity.max() <= 2.6**2 + 1e-12


def test_rasterize_refinement_differences_shrink():
    lattice = LatticeSpec(hole_radius_ratio=0.3)
    ext = (-1.0, 1.0, -1.0, 1.0)
    hole = [(0.0, 0.0, 0.3)]

    def l1_diff(r):
        coarse = rasterize(lattice, hole, r, extent=ext).permittivity
        fine = rasterize(lattice, hole, 2 * r, extent=ext).permittivity
        up = np.repeat(np.repeat(coarse, 2, axis=0), 2, axis=1)
        return float(np.mean(np.abs(up - fine)))

    diffs = [l1_diff(r) for r in (8, 16, 32)]
    assert diffs[0] > diffs[1] > diffs[2]


# ------------------------------------------------------- effective index

def test_effective_index_thick_slab_limit():
    n = slab_effective_index(2.6, 1.0, 1e-3, 1.1e-6, "TE")
    assert abs(n - 2.6) < 1e-3


def test_effective_index_thin_slab_limit():
    n = slab_effective_index(2.6, 1.0, 1e-9, 1.1e-6, "TE")
    assert abs(n - 1.0) < 1e-3


def test_effective_index_reference_value():
    n = slab_effective_index(2.6, 1.0, 240e-9, 1100e-9, "TE")
    assert n == pytest.approx(N_EFF_240NM_1100NM, abs=1e-6)


def test_effective_index_satisfies_dispersion():
    for pol in ("TE", "TM"):
        n = slab_effective_index(2.6, 1.0, 240e-9, 1100e-9, pol)
        res = slab_dispersion_residual(n, 2.6, 1.0, 240e-9, 1100e-9, pol)
        # normalize by k0*n_core so the tolerance is scale-free
        assert abs(res) / (2 * math.pi / 1100e-9 * 2.6) < 1e-8


@given(
    n_core=st.floats(min_value=1.5, max_value=4.0),
    dn=st.floats(min_value=0.2, max_value=1.0),
    t_over_lam=st.floats(min_value=0.05, max_value=5.0),
)
@hyp_settings(max_examples=60, deadline=None)
def test_effective_index_bracketed(n_core, dn, t_over_lam):
    n_clad = max(1.0, n_core - dn)
    if n_core - n_clad < 0.1:
        return
    lam = 1.0e-6
    n = slab_effective_index(n_core, n_clad, t_over_lam * lam, lam, "TE")
    assert n_clad < n < n_core


def test_effective_index_rejects_bad_inputs():
    with pytest.raises(GeometryError):
        slab_effective_index(1.0, 2.0, 240e-9, 1100e-9)
    with pytest.raises(ValueError):
        slab_effective_index(2.6, 1.0, 240e-9, 1100e-9, "TEM")
