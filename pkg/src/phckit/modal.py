"""Resonance extraction from time signals (matrix-pencil harmonic
inversion), ring-down Q fitting, and mode-volume evaluation.

Frequencies are linear (cycles per time unit); the field amplitude decays
as exp(-gamma*t), so Q = pi*f/gamma = omega/(2*gamma) and the energy decay
rate is kappa = 2*gamma.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import svd, lstsq


class SignalError(ValueError):
    """Signal violates a precondition of the estimator."""


class MultiExponentialError(RuntimeError):
    """Energy trace is not a single exponential decay."""


@dataclass(frozen=True)
class ResonanceEstimate:
    frequency: float
    decay_rate: float          # field amplitude rate gamma
    Q: float
    complex_amplitude: complex
    fit_error: float

    @property
    def amplitude(self) -> float:
        return abs(self.complex_amplitude)


@dataclass(frozen=True)
class ModeVolumeResult:
    volume_physical: float         # length^D
    volume_normalized: float       # units of (lambda/n)^D
    location_of_max: tuple[int, ...]


def harmonic_inversion(
    signal: np.ndarray,
    dt: float,
    search_band: tuple[float, float] | None = None,
    max_modes: int = 10,
    pencil: int | None = None,
    rank_tol: float = 1e-9,
) -> list[ResonanceEstimate]:
    """Decompose a real or complex time signal into damped sinusoids.

    Matrix-pencil estimation: SVD of the Hankel data matrix, generalized
    eigenvalues of the shifted pencil give the complex poles
    z_k = exp((i*2*pi*f_k - gamma_k) * dt); amplitudes by linear least
    squares on the Vandermonde system. Returns modes with f inside
    search_band, sorted by amplitude (descending).
    """
    signal = np.asarray(signal)
    n = signal.shape[0]
    if n < 256:
        raise SignalError(f"need >= 256 samples, got {n}")
    if dt <= 0:
        raise SignalError("dt must be positive")
    nyquist = 0.5 / dt
    if search_band is None:
        search_band = (0.0, nyquist)
    f_lo, f_hi = search_band
    if not (0.0 <= f_lo < f_hi <= nyquist * (1 + 1e-12)):
        raise SignalError(f"search band {search_band} outside (0, Nyquist={nyquist})")

    peak = float(np.max(np.abs(signal)))
    if peak == 0.0:
        return []

    if pencil is None:
        pencil = min(n // 3, 512)
    L = pencil
    rows = n - L
    # Hankel data matrix, rows x (L+1)
    idx = np.arange(rows)[:, None] + np.arange(L + 1)[None, :]
    Y = signal[idx]

    _, s, Vh = svd(Y, full_matrices=False)
    rank = int(np.sum(s > rank_tol * s[0]))
    rank = max(1, min(rank, max_modes * 2, L))

    V = Vh[:rank, :]
    V0 = V[:, :-1]
    V1 = V[:, 1:]
    # poles: eigenvalues of pinv(V0^T) @ V1^T restricted to the signal subspace
    z = np.linalg.eigvals(np.linalg.pinv(V0.T) @ V1.T)

    # amplitudes on the full record
    steps = np.arange(n)
    with np.errstate(over="ignore", invalid="ignore"):
        logz = np.log(z.astype(complex))
        vand = np.exp(np.outer(steps, logz))
    coeff, _, _, _ = lstsq(vand, signal.astype(complex), lapack_driver="gelsd")
    resid = float(np.linalg.norm(signal - vand @ coeff) / np.linalg.norm(signal))

    modes = []
    for zk, ck in zip(z, coeff):
        f = float(np.angle(zk)) / (2.0 * math.pi * dt)
        gamma = -float(np.log(np.abs(zk))) / dt
        if f <= 0:
            continue  # real signals carry conjugate pairs; keep positive f
        if not (f_lo <= f <= f_hi):
            continue
        if gamma < 0 and abs(gamma) > 1e-6 * 2 * math.pi * f:
            continue  # growing pole: numerical artifact
        gamma = max(gamma, 0.0)
        q = math.inf if gamma == 0.0 else math.pi * f / gamma
        amp = complex(ck)
        if np.isrealobj(signal):
            amp = 2.0 * amp  # fold in the conjugate partner
        modes.append(ResonanceEstimate(f, gamma, q, amp, resid))

    modes.sort(key=lambda m: abs(m.complex_amplitude), reverse=True)
    return modes[:max_modes]


def synthetic_ringdown(
    modes: list[tuple[float, float, complex]],
    n_samples: int,
    dt: float,
) -> np.ndarray:
    """Real signal sum of damped sinusoids given (frequency, Q, amplitude)."""
    t = np.arange(n_samples) * dt
    sig = np.zeros(n_samples)
    for f, q, amp in modes:
        gamma = math.pi * f / q
        sig += np.real(amp * np.exp((2j * math.pi * f - gamma) * t))
    return sig


def ringdown_q(
    energy: np.ndarray,
    time: np.ndarray,
    f_resonance: float,
    max_nonlinearity: float = 1e-3,
) -> float:
    """Q from a log-linear fit of an exponential energy decay.

    U(t) = U0 * exp(-omega*t/Q); refuses traces whose log is not linear
    (relative rms residual above max_nonlinearity of the log-range).
    Returns inf for a non-decaying trace.
    """
    energy = np.asarray(energy, dtype=float)
    time = np.asarray(time, dtype=float)
    if energy.shape != time.shape or energy.ndim != 1 or energy.size < 4:
        raise SignalError("energy and time must be equal-length 1D arrays (>= 4 points)")
    if np.any(energy <= 0):
        raise SignalError("energy trace must be strictly positive for a log fit")

    logu = np.log(energy)
    A = np.vstack([time, np.ones_like(time)]).T
    (slope, _), res, _, _ = np.linalg.lstsq(A, logu, rcond=None)
    span = float(np.ptp(logu))
    rms = math.sqrt(float(res[0]) / len(logu)) if res.size else 0.0
    if span < 1e-12:
        return math.inf  # constant energy: no decay
    if rms > max_nonlinearity * span:
        raise MultiExponentialError(
            f"log-energy not linear (rms residual {rms:.3g} vs span {span:.3g}); "
            "trace likely contains multiple modes"
        )
    if slope >= 0:
        return math.inf
    omega = 2.0 * math.pi * f_resonance
    return float(omega / (-slope))


def mode_volume(
    e_sq: np.ndarray,
    permittivity: np.ndarray,
    cell_volume: float,
    wavelength: float,
    n_at_max: float | None = None,
    boundary_warn_cells: int = 2,
) -> ModeVolumeResult:
    """Purcell-convention mode volume V = integral(eps |E|^2) / max(eps |E|^2).

    e_sq is |E|^2 collocated with the permittivity samples; cell_volume is
    dx^D in the same length units as wavelength. n_at_max defaults to
    sqrt(eps) at the energy-density maximum.
    """
    e_sq = np.asarray(e_sq, dtype=float)
    permittivity = np.asarray(permittivity, dtype=float)
    if e_sq.shape != permittivity.shape:
        raise ValueError("field and permittivity shapes differ")
    u = permittivity * e_sq
    umax = float(u.max())
    if umax <= 0:
        raise ValueError("field is identically zero")
    loc = np.unravel_index(int(np.argmax(u)), u.shape)

    # discretization sensitivity: warn when the maximum sits on a material edge
    w = boundary_warn_cells
    sl = tuple(slice(max(0, i - w), i + w + 1) for i in loc)
    neigh = permittivity[sl]
    if float(neigh.max() - neigh.min()) > 1e-6 * float(permittivity.max()):
        warnings.warn(
            "field maximum lies within 2 cells of a dielectric boundary; "
            "mode volume is discretization-sensitive",
            RuntimeWarning,
            stacklevel=2,
        )

    vol = float(u.sum()) * cell_volume / umax
    n_max = float(n_at_max) if n_at_max is not None else math.sqrt(float(permittivity[loc]))
    d = e_sq.ndim
    vol_norm = vol / (wavelength / n_max) ** d
    return ModeVolumeResult(vol, vol_norm, tuple(int(i) for i in loc))


def export_resonances_csv(modes: list[ResonanceEstimate], path) -> None:
    """CSV: frequency, Q, amplitude, fit_error."""
    with open(path, "w") as fh:
        fh.write("frequency,Q,amplitude,fit_error\n")
        for m in modes:
            fh.write(f"{m.frequency!r},{m.Q!r},{abs(m.complex_amplitude)!r},{m.fit_error!r}\n")
