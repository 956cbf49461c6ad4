"""High-level cavity workflows: geometry -> grid -> FDTD -> resonances,
Q, and mode volume, with the 2D effective-index reduction applied by
default. These are the building blocks behind the CLI subcommands.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import bands as bands_mod
from . import fdtd, modal
from .geometry import (CavityDesign, DielectricGrid, LatticeSpec,
                       enumerate_holes, rasterize, slab_effective_index)


@dataclass(frozen=True)
class TwoDReduction:
    """Physical slab parameters feeding the effective-index reduction."""
    slab_thickness_m: float = 240e-9
    wavelength_m: float = 1100e-9
    polarization: str = "TE"

    def effective_index(self, n_core: float, n_clad: float = 1.0) -> float:
        return slab_effective_index(n_core, n_clad, self.slab_thickness_m,
                                    self.wavelength_m, self.polarization)


@dataclass(frozen=True)
class CavityRunSettings:
    resolution: int = 16
    smoothing: bool = True
    courant_factor: float = 0.5
    pml_layers: int = 10
    broadband_steps: int = 16384
    narrowband_steps: int = 20480
    broadband_fbw: float = 0.15
    narrowband_fbw: float = 0.015
    max_modes: int = 5
    reduction: TwoDReduction = field(default_factory=TwoDReduction)


@dataclass
class CavityResult:
    resonances: list[modal.ResonanceEstimate]
    isolated_resonances: list[modal.ResonanceEstimate]
    dominant: modal.ResonanceEstimate | None
    gap: tuple[float, float, float] | None
    mode_volume: modal.ModeVolumeResult | None
    snapshot_ey: np.ndarray | None
    symmetry_residual: tuple[float, float] | None
    ringdown_q: float | None
    grid: DielectricGrid
    effective_index: float
    timings: dict


def build_grid(lattice: LatticeSpec, design: CavityDesign,
               settings: CavityRunSettings) -> tuple[DielectricGrid, float]:
    n_eff = settings.reduction.effective_index(lattice.slab_index_n,
                                               lattice.background_index)
    holes = enumerate_holes(lattice, design)
    grid = rasterize(lattice, holes, settings.resolution,
                     smoothing=settings.smoothing,
                     epsilon_background=n_eff * n_eff)
    return grid, n_eff


def band_gap(lattice: LatticeSpec, n_eff: float,
             num_plane_waves: int = 121) -> tuple[float, float, float] | None:
    bs = bands_mod.pwe_te_bands(lattice, num_plane_waves=num_plane_waves,
                                effective_index=n_eff)
    return bands_mod.find_gap(bs)


def _center_sources(grid, f0, fbw):
    """Ey source pair straddling the cavity center: exactly even in x and y."""
    nx, ny = grid.permittivity.shape
    ic, jc = nx // 2, ny // 2
    prof = fdtd.GaussianPulse(f0, fbw)
    return (
        fdtd.SourceSpec(position=(ic, jc), component="Ey", profile=prof, amplitude=0.5),
        fdtd.SourceSpec(position=(ic, jc - 1), component="Ey", profile=prof, amplitude=0.5),
    )


def find_resonances(grid: DielectricGrid, band: tuple[float, float],
                    settings: CavityRunSettings) -> tuple[list, fdtd.RunResult]:
    """Broadband pass: pulse centered mid-band, ring-down inversion."""
    nx, ny = grid.permittivity.shape
    ic, jc = nx // 2, ny // 2
    f0 = 0.5 * (band[0] + band[1])
    cfg = fdtd.SimulationConfig(
        grid=grid, total_steps=settings.broadband_steps,
        courant_factor=settings.courant_factor,
        pml=fdtd.PmlSpec(layers=settings.pml_layers),
        sources=_center_sources(grid, f0, settings.broadband_fbw),
        monitors=(fdtd.PointProbe("probe", "Ey", (ic + 3, jc)),),
    )
    result = fdtd.run(cfg)
    signal = result.probes["probe"][2][result.source_off_step:]
    modes = modal.harmonic_inversion(signal, result.dt, band, settings.max_modes)
    return modes, result


def resolve_mode(grid: DielectricGrid, f_res: float, band: tuple[float, float],
                 settings: CavityRunSettings) -> dict:
    """Narrowband pass at f_res: isolates one mode, records a late snapshot,
    an energy trace, and a probe for the high-accuracy Q estimate."""
    nx, ny = grid.permittivity.shape
    ic, jc = nx // 2, ny // 2
    steps = settings.narrowband_steps
    cfg = fdtd.SimulationConfig(
        grid=grid, total_steps=steps,
        courant_factor=settings.courant_factor,
        pml=fdtd.PmlSpec(layers=settings.pml_layers),
        sources=_center_sources(grid, f_res, settings.narrowband_fbw),
        monitors=(
            fdtd.PointProbe("probe", "Ey", (ic + 3, jc)),
            fdtd.RegionSnapshot("snapshot", ("Ex", "Ey"), (steps - 1,)),
            fdtd.EnergyTrace(every=8),
        ),
    )
    result = fdtd.run(cfg)
    signal = result.probes["probe"][2][result.source_off_step:]
    modes = modal.harmonic_inversion(signal, result.dt, band, settings.max_modes)

    _, frame = result.snapshots["snapshot"][0]
    ey = frame["Ey"]
    ex = frame["Ex"]
    abs_ey = np.abs(ey)
    peak = float(abs_ey.max())
    sym = (
        float(np.max(np.abs(abs_ey - abs_ey[::-1, :])) / peak),
        float(np.max(np.abs(abs_ey - abs_ey[:, ::-1])) / peak),
    ) if peak > 0 else (0.0, 0.0)

    # ring-down Q from the energy trace after source turn-off
    rd_q = None
    if result.energy is not None:
        es, et, ev = result.energy
        mask = es > result.source_off_step + 200
        if int(mask.sum()) >= 8 and np.all(ev[mask] > 0):
            try:
                f_fit = modes[0].frequency if modes else f_res
                rd_q = modal.ringdown_q(ev[mask], et[mask], f_fit,
                                        max_nonlinearity=0.05)
            except modal.MultiExponentialError:
                rd_q = None

    return {"modes": modes, "ex": ex, "ey": ey, "symmetry": sym,
            "ringdown_q": rd_q, "result": result}


def collocate_e_squared(ex: np.ndarray, ey: np.ndarray) -> np.ndarray:
    """|E|^2 at cell centers from the staggered Ex (nx, ny+1), Ey (nx+1, ny)."""
    exc = 0.5 * (ex[:, :-1] + ex[:, 1:])
    eyc = 0.5 * (ey[:-1, :] + ey[1:, :])
    return exc**2 + eyc**2


def analyze_cavity(lattice: LatticeSpec, design: CavityDesign,
                   settings: CavityRunSettings | None = None,
                   lattice_constant_nm: float | None = None) -> CavityResult:
    """Full 2D pipeline: gap, broadband search, narrowband isolation,
    snapshot symmetry, mode area. lattice_constant_nm switches the mode
    volume report to physical units (otherwise a=1 units)."""
    settings = settings or CavityRunSettings()
    timings = {}
    grid, n_eff = build_grid(lattice, design, settings)
    gap = band_gap(lattice, n_eff)
    if gap is None:
        raise RuntimeError("lattice has no TE band gap at the effective index; "
                           "no confined cavity mode to search for")
    band = (gap[0], gap[1])

    modes, res1 = find_resonances(grid, band, settings)
    timings["broadband_s"] = res1.wall_time_seconds
    if not modes:
        return CavityResult(resonances=[], isolated_resonances=[],
                            dominant=None, gap=gap,
                            mode_volume=None, snapshot_ey=None,
                            symmetry_residual=None, ringdown_q=None,
                            grid=grid, effective_index=n_eff, timings=timings)

    fine = resolve_mode(grid, modes[0].frequency, band, settings)
    timings["narrowband_s"] = fine["result"].wall_time_seconds
    dominant = fine["modes"][0] if fine["modes"] else modes[0]

    e_sq = collocate_e_squared(fine["ex"], fine["ey"])
    wavelength = 1.0 / dominant.frequency  # units of a (c = 1)
    n_scale = 1.0
    if lattice_constant_nm is not None:
        n_scale = lattice_constant_nm  # nm per a; volumes still reported normalized
    mv = modal.mode_volume(e_sq, grid.permittivity, grid.dx**2, wavelength,
                           n_at_max=None)

    return CavityResult(
        resonances=modes,
        isolated_resonances=fine["modes"],
        dominant=dominant,
        gap=gap,
        mode_volume=mv,
        snapshot_ey=fine["ey"],
        symmetry_residual=fine["symmetry"],
        ringdown_q=fine["ringdown_q"],
        grid=grid,
        effective_index=n_eff,
        timings=timings,
    )
