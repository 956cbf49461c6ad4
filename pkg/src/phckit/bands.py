"""TE photonic band structure of the triangular hole lattice by plane-wave
expansion, plus band-gap location.

Frequencies are in units of a/lambda (i.e. omega*a / 2*pi*c with a=1, c=1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import j1

from .geometry import LatticeSpec

# reciprocal basis for a triangular lattice with a1 = (1,0), a2 = (1/2, sqrt3/2)
B1 = 2.0 * math.pi * np.array([1.0, -1.0 / math.sqrt(3.0)])
B2 = 2.0 * math.pi * np.array([0.0, 2.0 / math.sqrt(3.0)])

GAMMA = np.array([0.0, 0.0])
M_POINT = np.array([math.pi, math.pi / math.sqrt(3.0)])
K_POINT = np.array([4.0 * math.pi / 3.0, 0.0])


class BandSolveError(RuntimeError):
    """Eigensolver failure at a specific k point."""

    def __init__(self, k, cause):
        self.k = k
        super().__init__(f"eigensolver failed at k={k}: {cause}")


@dataclass(frozen=True)
class BandStructure:
    k_path: np.ndarray          # (nk, 2) reduced wave vectors, units 1/a
    frequencies: np.ndarray     # (nk, nbands), sorted per k, units a/lambda
    num_plane_waves: int
    k_labels: tuple[tuple[int, str], ...] = ()


def k_path_triangular(points_per_segment: int = 16) -> tuple[np.ndarray, tuple]:
    """Gamma-M-K-Gamma path with the given sampling per segment."""
    segs = [(GAMMA, M_POINT), (M_POINT, K_POINT), (K_POINT, GAMMA)]
    pts = []
    for a, b in segs:
        for t in np.linspace(0.0, 1.0, points_per_segment, endpoint=False):
            pts.append(a + t * (b - a))
    pts.append(GAMMA)
    n = points_per_segment
    labels = ((0, "G"), (n, "M"), (2 * n, "K"), (3 * n, "G"))
    return np.array(pts), labels


def _epsilon_matrix(eps_bg: float, eps_hole: float, r: float, G: np.ndarray) -> np.ndarray:
    """Fourier matrix eps(G - G') for circular holes on a triangular lattice."""
    fill = (2.0 * math.pi / math.sqrt(3.0)) * r * r
    dG = G[:, None, :] - G[None, :, :]
    gn = np.linalg.norm(dG, axis=2)
    x = gn * r
    with np.errstate(invalid="ignore", divide="ignore"):
        shape = np.where(gn < 1e-12, 0.5, j1(np.where(x > 0, x, 1.0)) / np.where(x > 0, x, 1.0))
    E = (eps_hole - eps_bg) * 2.0 * fill * shape
    E[gn < 1e-12] += eps_bg
    return E


def pwe_te_bands(
    lattice: LatticeSpec,
    k_points: np.ndarray | None = None,
    num_plane_waves: int = 121,
    num_bands: int = 4,
    effective_index: float | None = None,
) -> BandStructure:
    """Solve the TE master eigenproblem over the given k points.

    effective_index replaces the full slab index for the 2D reduction;
    defaults to lattice.slab_index_n. num_plane_waves must be a perfect
    square >= 121 (symmetric truncation).
    """
    side = math.isqrt(num_plane_waves)
    if side * side != num_plane_waves or num_plane_waves < 121:
        raise ValueError("num_plane_waves must be a perfect square >= 121")
    if side % 2 == 0:
        raise ValueError("num_plane_waves side must be odd for symmetric truncation")

    labels = ()
    if k_points is None:
        k_points, labels = k_path_triangular()
    k_points = np.asarray(k_points, dtype=float)

    n = effective_index if effective_index is not None else lattice.slab_index_n
    eps_bg = n * n
    eps_hole = lattice.background_index**2
    r = lattice.hole_radius_ratio

    s = side // 2
    mn = [(m, q) for m in range(-s, s + 1) for q in range(-s, s + 1)]
    G = np.array([m * B1 + q * B2 for m, q in mn])

    E = _epsilon_matrix(eps_bg, eps_hole, r, G)
    eta = np.linalg.inv(E)
    eta = 0.5 * (eta + eta.T)  # enforce exact symmetry

    freqs = np.empty((len(k_points), num_bands))
    for idx, k in enumerate(k_points):
        kG = k[None, :] + G
        M = (np.einsum("i,ij,j->ij", kG[:, 0], eta, kG[:, 0])
             + np.einsum("i,ij,j->ij", kG[:, 1], eta, kG[:, 1]))
        try:
            w2 = np.linalg.eigvalsh(M)
        except np.linalg.LinAlgError as exc:
            raise BandSolveError(k, exc) from exc
        w2 = np.maximum(w2[:num_bands], 0.0)
        freqs[idx] = np.sqrt(w2) / (2.0 * math.pi)

    return BandStructure(k_path=k_points, frequencies=freqs,
                         num_plane_waves=num_plane_waves, k_labels=labels)


def find_gap(bands: BandStructure) -> tuple[float, float, float] | None:
    """Gap between bands 1 and 2: (lower_edge, upper_edge, gap/midgap ratio)."""
    if bands.frequencies.shape[1] < 2:
        raise ValueError("need at least 2 bands to locate a gap")
    lower = float(np.max(bands.frequencies[:, 0]))
    upper = float(np.min(bands.frequencies[:, 1]))
    if lower >= upper:
        return None
    mid = 0.5 * (lower + upper)
    return lower, upper, (upper - lower) / mid


def export_bands_csv(bands: BandStructure, path) -> None:
    """CSV: k_index, k_x, k_y, band_index, frequency."""
    with open(path, "w") as fh:
        fh.write("k_index,k_x,k_y,band_index,frequency\n")
        for i, k in enumerate(bands.k_path):
            for b, f in enumerate(bands.frequencies[i]):
                fh.write(f"{i},{float(k[0])!r},{float(k[1])!r},{b},{float(f)!r}\n")
