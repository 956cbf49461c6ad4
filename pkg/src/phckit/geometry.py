"""Triangular-lattice slab cavity geometry: hole layouts, rasterization,
and the slab effective-index reduction used for 2D simulation.

Internal units: lengths in units of the lattice constant a unless a
physical value is passed explicitly (slab_effective_index takes meters).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq


class GeometryError(ValueError):
    """Invalid lattice or cavity design."""


@dataclass(frozen=True)
class LatticeSpec:
    """Triangular lattice of circular air holes in a high-index slab."""

    lattice_constant_a: float = 1.0
    slab_index_n: float = 2.6
    slab_thickness_ratio: float = 0.6
    hole_radius_ratio: float = 0.2553
    background_index: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.hole_radius_ratio < 0.5:
            raise GeometryError(
                f"hole_radius_ratio must be in (0, 0.5), got {self.hole_radius_ratio}"
            )
        if not self.slab_index_n > self.background_index >= 1.0:
            raise GeometryError(
                "require slab_index_n > background_index >= 1, got "
                f"n={self.slab_index_n}, bg={self.background_index}"
            )
        if self.slab_thickness_ratio <= 0:
            raise GeometryError("slab_thickness_ratio must be positive")
        if self.lattice_constant_a <= 0:
            raise GeometryError("lattice_constant_a must be positive")


@dataclass(frozen=True)
class HoleModification:
    """Shift/shrink of the k-th hole from each cavity end along the defect row.

    Positive axial_shift_ratio moves the hole away from the cavity center.
    The new radius is (r - dr) in units of a.
    """

    index_from_cavity_edge: int
    axial_shift_ratio: float = 0.0
    radius_reduction_ratio: float = 0.0

    def __post_init__(self):
        if self.index_from_cavity_edge < 1:
            raise GeometryError("index_from_cavity_edge must be >= 1")


@dataclass(frozen=True)
class CavityDesign:
    """Lx linear defect with mirror-symmetric edge-hole modifications."""

    defect_length_x: int = 3
    modifications: tuple[HoleModification, ...] = ()
    crystal_extent: tuple[int, int] = (20, 13)

    def __post_init__(self):
        if self.defect_length_x < 1:
            raise GeometryError("defect_length_x must be >= 1")
        object.__setattr__(self, "modifications", tuple(self.modifications))
        px, py = self.crystal_extent
        if px < 1 or py < 1:
            raise GeometryError("crystal_extent periods must be >= 1")
        seen = set()
        for m in self.modifications:
            if m.index_from_cavity_edge in seen:
                raise GeometryError(
                    f"duplicate modification index {m.index_from_cavity_edge}"
                )
            seen.add(m.index_from_cavity_edge)


@dataclass(frozen=True)
class DielectricGrid:
    """Relative permittivity on a uniform grid, cell-centered, row-major.

    origin is the physical coordinate of the center of cell [0, 0(, 0)],
    in units of a. extent is the full physical size per axis.
    """

    permittivity: np.ndarray
    resolution: int
    origin: tuple[float, ...]
    extent: tuple[float, ...]

    @property
    def dimensionality(self) -> int:
        return self.permittivity.ndim

    @property
    def dx(self) -> float:
        return 1.0 / self.resolution


ROW_SPACING = math.sqrt(3.0) / 2.0


def enumerate_holes(lattice: LatticeSpec, design: CavityDesign) -> list[tuple[float, float, float]]:
    """Return (center_x, center_y, radius) per hole, all in units of a.

    The defect row runs along x; rows are stacked at a*sqrt(3)/2 with the
    usual half-period offset between adjacent rows. For even defect
    lengths the whole lattice is shifted by a/2 so the omitted holes stay
    symmetric about the origin.
    """
    r = lattice.hole_radius_ratio
    nx, ny = design.crystal_extent
    half_w = nx / 2.0
    lx = design.defect_length_x

    # cavity center at origin; even Lx centers the defect between two sites
    base_offset = 0.5 if lx % 2 == 0 else 0.0
    omit_max = (lx - 1) / 2.0  # defect row sites with |x| <= omit_max are omitted
    first_side = omit_max + 1.0  # x of the first hole past each cavity end

    mods = {m.index_from_cavity_edge: m for m in design.modifications}
    for m in design.modifications:
        new_r = r - m.radius_reduction_ratio
        if new_r <= 0:
            raise GeometryError(
                f"modification {m.index_from_cavity_edge}: resulting radius "
                f"{new_r:.4f} is not positive"
            )
        x_mod = first_side + (m.index_from_cavity_edge - 1)
        if x_mod > half_w:
            raise GeometryError(
                f"modification index {m.index_from_cavity_edge} exceeds the "
                f"crystal extent ({nx} periods along x)"
            )

    holes: list[tuple[float, float, float]] = []
    imax = int(math.floor(half_w + 1e-9))
    rows_half = ny // 2  # periods_y counts total rows; keep the set y-symmetric
    for j in range(-rows_half, rows_half + 1):
        y = j * ROW_SPACING
        row_offset = base_offset + (0.5 if j % 2 else 0.0)
        for i in range(-imax - 1, imax + 2):
            x = i + row_offset
            if abs(x) > half_w + 1e-9:
                continue
            if j == 0:
                if abs(x) <= omit_max + 1e-9:
                    continue  # omitted defect hole
                k = int(round(abs(x) - first_side)) + 1
                if abs(abs(x) - (first_side + k - 1)) < 1e-9 and k in mods:
                    m = mods[k]
                    x = math.copysign(abs(x) + m.axial_shift_ratio, x)
                    holes.append((x, y, r - m.radius_reduction_ratio))
                    continue
            holes.append((x, y, r))
    holes.sort(key=lambda h: (h[1], h[0]))
    return holes


# canonical optimized designs from the L3 family
def l3() -> CavityDesign:
    return CavityDesign(defect_length_x=3)


def l3_s1() -> CavityDesign:
    return CavityDesign(
        defect_length_x=3,
        modifications=(HoleModification(1, axial_shift_ratio=0.21),),
    )


def l3_sr1() -> CavityDesign:
    return CavityDesign(
        defect_length_x=3,
        modifications=(
            HoleModification(1, axial_shift_ratio=0.21, radius_reduction_ratio=0.12),
        ),
    )


def l3_sr3() -> CavityDesign:
    return CavityDesign(
        defect_length_x=3,
        modifications=(
            HoleModification(1, axial_shift_ratio=0.3482, radius_reduction_ratio=0.098),
            HoleModification(2, axial_shift_ratio=0.2476, radius_reduction_ratio=0.0882),
            HoleModification(3, axial_shift_ratio=0.0573, radius_reduction_ratio=0.0927),
        ),
    )


NAMED_DESIGNS = {
    "l3": l3,
    "l3_s1": l3_s1,
    "l3_sr1": l3_sr1,
    "l3_sr3": l3_sr3,
}
for _x in range(4, 10):
    NAMED_DESIGNS[f"l{_x}"] = (lambda n: lambda: CavityDesign(defect_length_x=n))(_x)


def rasterize(
    lattice: LatticeSpec,
    holes: list[tuple[float, float, float]],
    resolution: int,
    smoothing: bool = True,
    extent: tuple[float, float, float, float] | None = None,
    margin: float = 1.0,
    subsamples: int = 4,
    epsilon_background: float | None = None,
) -> DielectricGrid:
    """Rasterize a hole list into a 2D permittivity grid.

    The grid is chosen symmetric about the origin so the mirror symmetry
    of the hole set survives discretization exactly. With smoothing on,
    boundary cells get the area-weighted average of the two permittivities
    estimated by subsamples x subsamples midpoint sampling.

    epsilon_background overrides the slab permittivity (used for the 2D
    effective-index reduction).
    """
    if resolution < 8:
        raise GeometryError(f"resolution must be >= 8 cells/a, got {resolution}")
    if subsamples < 4:
        raise GeometryError("subsamples must be >= 4")

    eps_slab = epsilon_background if epsilon_background is not None else lattice.slab_index_n**2
    eps_hole = lattice.background_index**2

    if extent is None:
        if holes:
            hx = max(abs(h[0]) + h[2] for h in holes) + margin
            hy = max(abs(h[1]) + h[2] for h in holes) + margin
        else:
            hx = hy = margin
        extent = (-hx, hx, -hy, hy)
    x_lo, x_hi, y_lo, y_hi = extent
    dx = 1.0 / resolution
    nx = max(2, int(round((x_hi - x_lo) / dx)))
    ny = max(2, int(round((y_hi - y_lo) / dx)))
    # recenter after rounding so symmetry axes stay aligned with the grid
    x_lo = 0.5 * (x_lo + x_hi) - 0.5 * nx * dx
    y_lo = 0.5 * (y_lo + y_hi) - 0.5 * ny * dx

    xc = x_lo + (np.arange(nx) + 0.5) * dx
    yc = y_lo + (np.arange(ny) + 0.5) * dx

    eps = np.full((nx, ny), eps_slab, dtype=np.float64)
    half_diag = dx * math.sqrt(2.0) / 2.0
    s = subsamples
    # midpoint subsample offsets within a cell
    off = (np.arange(s) + 0.5) / s - 0.5
    ox, oy = np.meshgrid(off * dx, off * dx, indexing="ij")

    for cx, cy, r in holes:
        i0 = max(0, int(np.searchsorted(xc, cx - r - dx)) - 1)
        i1 = min(nx, int(np.searchsorted(xc, cx + r + dx)) + 1)
        j0 = max(0, int(np.searchsorted(yc, cy - r - dx)) - 1)
        j1 = min(ny, int(np.searchsorted(yc, cy + r + dx)) + 1)
        if i0 >= i1 or j0 >= j1:
            continue
        X, Y = np.meshgrid(xc[i0:i1] - cx, yc[j0:j1] - cy, indexing="ij")
        d = np.hypot(X, Y)
        inside = d <= r - half_diag
        outside = d >= r + half_diag
        eps[i0:i1, j0:j1][inside] = eps_hole
        if smoothing:
            bi, bj = np.nonzero(~inside & ~outside)
            if bi.size:
                sx = X[bi, bj][:, None, None] + ox[None, :, :]
                sy = Y[bi, bj][:, None, None] + oy[None, :, :]
                frac = np.mean(sx**2 + sy**2 <= r * r, axis=(1, 2))
                eps[i0 + bi, j0 + bj] = frac * eps_hole + (1.0 - frac) * eps_slab
        else:
            boundary = ~inside & ~outside
            eps[i0:i1, j0:j1][boundary & (d <= r)] = eps_hole

    return DielectricGrid(
        permittivity=eps,
        resolution=resolution,
        origin=(float(xc[0]), float(yc[0])),
        extent=(nx * dx, ny * dx),
    )


class NoGuidedModeError(RuntimeError):
    """The requested guided mode is below cutoff."""


def slab_dispersion_residual(n_eff, n_core, n_clad, thickness, wavelength, polarization):
    """Residual of the symmetric-slab fundamental-mode dispersion relation.

    Even-mode relation: tan(kappa d / 2) = eta * gamma / kappa with
    eta = 1 for TE and (n_core/n_clad)^2 for TM. Written in a form
    continuous across the tan branch for bracketed root finding.
    """
    k0 = 2.0 * math.pi / wavelength
    kappa = k0 * np.sqrt(np.maximum(n_core**2 - np.asarray(n_eff) ** 2, 0.0))
    gamma = k0 * np.sqrt(np.maximum(np.asarray(n_eff) ** 2 - n_clad**2, 0.0))
    eta = 1.0 if polarization == "TE" else (n_core / n_clad) ** 2
    u = kappa * thickness / 2.0
    # kappa*sin(u) - eta*gamma*cos(u) = 0 avoids the tan singularity
    return kappa * np.sin(u) - eta * gamma * np.cos(u)


def slab_effective_index(
    n_core: float,
    n_clad: float,
    thickness: float,
    wavelength: float,
    polarization: str = "TE",
) -> float:
    """Effective index of the fundamental guided mode of a symmetric slab.

    thickness and wavelength in the same length unit (e.g. meters).
    """
    if polarization not in ("TE", "TM"):
        raise ValueError(f"polarization must be TE or TM, got {polarization!r}")
    if not n_core > n_clad:
        raise GeometryError("require n_core > n_clad")
    if thickness <= 0 or wavelength <= 0:
        raise GeometryError("thickness and wavelength must be positive")

    k0 = 2.0 * math.pi / wavelength
    # fundamental even mode: kappa*d/2 in [0, pi/2); restrict the n_eff
    # bracket accordingly so higher branches are excluded
    u_max = math.pi / 2.0 * (1 - 1e-12)
    n_lo = max(n_clad, math.sqrt(max(n_core**2 - (2 * u_max / (k0 * thickness)) ** 2, n_clad**2)))
    lo = n_lo + 1e-14 * n_core
    hi = n_core * (1 - 1e-14)

    f = lambda ne: slab_dispersion_residual(ne, n_core, n_clad, thickness, wavelength, polarization)
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return lo
    if not (flo < 0 < fhi or fhi < 0 < flo):
        # fundamental TE mode of a symmetric slab has no cutoff; guard for
        # future asymmetric extensions
        raise NoGuidedModeError("no guided fundamental mode found in bracket")
    return float(brentq(f, lo, hi, xtol=1e-15, rtol=1e-12, maxiter=200))
