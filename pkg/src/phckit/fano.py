"""Fano-lineshape fitting of resonant-scattering spectra.

Model: F(lam) = A * (q + 2*(lam - lam0)/G)^2 / (1 + (2*(lam - lam0)/G)^2) + B
with G the FWHM linewidth; Q = lam0 / G.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares


class SpectrumFormatError(ValueError):
    """Malformed or invalid spectrum data."""


class FitConvergenceError(RuntimeError):
    """Fit did not converge; carries the last iterate."""

    def __init__(self, message, last_params, residual):
        super().__init__(message)
        self.last_params = last_params
        self.residual = residual


@dataclass(frozen=True)
class Spectrum:
    wavelength: np.ndarray   # strictly increasing, nm
    intensity: np.ndarray
    uncertainty: np.ndarray | None = None

    def __post_init__(self):
        wl = np.asarray(self.wavelength, dtype=float)
        it = np.asarray(self.intensity, dtype=float)
        if wl.shape != it.shape or wl.ndim != 1:
            raise SpectrumFormatError("wavelength and intensity must be equal-length 1D")
        if wl.size < 8:
            raise SpectrumFormatError(f"need >= 8 points, got {wl.size}")
        if np.any(np.diff(wl) <= 0):
            raise SpectrumFormatError("wavelengths must be strictly increasing")
        if np.any(it < 0):
            raise SpectrumFormatError("intensities must be non-negative")
        object.__setattr__(self, "wavelength", wl)
        object.__setattr__(self, "intensity", it)


@dataclass(frozen=True)
class FanoFit:
    lambda_0: float
    fwhm: float
    q_fano: float
    amplitude: float
    offset: float
    residual_rms: float
    covariance: np.ndarray | None

    @property
    def Q(self) -> float:
        return self.lambda_0 / self.fwhm


def load_spectrum(source, fmt: str = "csv") -> Spectrum:
    """Parse a two-column numeric CSV (wavelength_nm, intensity).

    Accepts a path or an open text stream; an optional single header line
    is skipped. Malformed rows are reported with their line number;
    duplicate wavelengths are rejected.
    """
    if fmt.lower() != "csv":
        raise SpectrumFormatError(f"unsupported format {fmt!r}")
    if hasattr(source, "read"):
        lines = source.read().splitlines()
    else:
        with open(source) as fh:
            lines = fh.read().splitlines()

    rows = []
    for lineno, line in enumerate(lines, start=1):
        text = line.strip()
        if not text:
            continue
        parts = [p.strip() for p in text.split(",")]
        if len(parts) < 2:
            raise SpectrumFormatError(f"line {lineno}: expected 2 columns, got {len(parts)}")
        try:
            rows.append((float(parts[0]), float(parts[1])))
        except ValueError:
            if lineno == 1:
                continue  # header
            raise SpectrumFormatError(f"line {lineno}: non-numeric row {text!r}") from None

    if not rows:
        raise SpectrumFormatError("no numeric data rows found")
    rows.sort(key=lambda r: r[0])
    wl = np.array([r[0] for r in rows])
    it = np.array([r[1] for r in rows])
    if np.any(np.diff(wl) == 0):
        dup = wl[:-1][np.diff(wl) == 0][0]
        raise SpectrumFormatError(f"duplicate wavelength {dup}")
    return Spectrum(wavelength=wl, intensity=it)


def fano_model(wavelength, lambda_0, fwhm, q, amplitude, offset):
    x = 2.0 * (np.asarray(wavelength) - lambda_0) / fwhm
    return amplitude * (q + x) ** 2 / (1.0 + x * x) + offset


def _fano_jacobian(wl, lam0, fwhm, q, amp, off):
    x = 2.0 * (wl - lam0) / fwhm
    den = 1.0 + x * x
    qx = q + x
    # partials of the model wrt (lam0, fwhm, q, amp, off)
    dF_dx = amp * (2.0 * qx * den - qx**2 * 2.0 * x) / den**2
    dx_dlam0 = -2.0 / fwhm
    dx_dfwhm = -x / fwhm
    J = np.empty((wl.size, 5))
    J[:, 0] = dF_dx * dx_dlam0
    J[:, 1] = dF_dx * dx_dfwhm
    J[:, 2] = amp * 2.0 * qx / den
    J[:, 3] = qx**2 / den
    J[:, 4] = 1.0
    return J


def _auto_initial_guess(spec: Spectrum):
    wl, it = spec.wavelength, spec.intensity
    b0 = float(np.median(it))
    dev = np.abs(it - b0)
    i0 = int(np.argmax(dev))
    lam0 = float(wl[i0])
    # half-range of the extremum feature as a linewidth scale
    half = dev[i0] / 2.0
    above = np.nonzero(dev >= half)[0]
    if above.size >= 2:
        g0 = max(float(wl[above[-1]] - wl[above[0]]), float(np.min(np.diff(wl))))
    else:
        g0 = float(wl[-1] - wl[0]) / 10.0
    a0 = float(it[i0] - b0) / 2.0
    if a0 == 0.0:
        a0 = 1.0
    return np.array([lam0, g0, 1.0, a0, b0])


def fit_fano(spectrum: Spectrum, initial_guess=None, max_iterations: int = 200) -> FanoFit:
    """Least-squares Fano fit by damped Gauss-Newton (Levenberg-Marquardt)
    with the analytic Jacobian; converges on relative parameter change
    below 1e-10 or raises FitConvergenceError."""
    wl, it = spectrum.wavelength, spectrum.intensity
    if float(np.ptp(it)) == 0.0:
        raise SpectrumFormatError("flat spectrum: nothing to fit")

    p0 = np.asarray(initial_guess, dtype=float) if initial_guess is not None else _auto_initial_guess(spectrum)

    def resid(p):
        return fano_model(wl, *p) - it

    def jac(p):
        return _fano_jacobian(wl, *p)

    sol = least_squares(resid, p0, jac=jac, method="lm",
                        xtol=1e-10, ftol=1e-14, gtol=1e-14,
                        max_nfev=max_iterations * 10)
    lam0, fwhm, q, amp, off = sol.x
    if fwhm < 0:  # the model is even in (fwhm, q) -> (-fwhm, -q)
        fwhm, q = -fwhm, -q
    rms = float(np.sqrt(np.mean(sol.fun**2)))
    if not sol.success or fwhm <= 0:
        raise FitConvergenceError(
            f"Fano fit did not converge: {sol.message}", sol.x, rms)

    J = _fano_jacobian(wl, lam0, fwhm, q, amp, off)
    dof = max(wl.size - 5, 1)
    try:
        cov = np.linalg.inv(J.T @ J) * (rms * rms * wl.size / dof)
    except np.linalg.LinAlgError:
        cov = None

    return FanoFit(lambda_0=float(lam0), fwhm=float(fwhm), q_fano=float(q),
                   amplitude=float(amp), offset=float(off),
                   residual_rms=rms, covariance=cov)


def synthetic_fano_spectrum(lambda_0=1100.0, fwhm=0.1542, q=2.0, amplitude=1.0,
                            offset=0.1, span=3.0, n_points=500,
                            noise_fraction=0.0, rng=None) -> Spectrum:
    """Generate a Fano spectrum around lambda_0 (nm); multiplicative
    Gaussian noise of the given fraction when noise_fraction > 0."""
    wl = np.linspace(lambda_0 - span, lambda_0 + span, n_points)
    it = fano_model(wl, lambda_0, fwhm, q, amplitude, offset)
    if noise_fraction > 0:
        rng = rng if rng is not None else np.random.default_rng(0)
        it = it * (1.0 + noise_fraction * rng.standard_normal(wl.size))
        it = np.maximum(it, 0.0)
    return Spectrum(wavelength=wl, intensity=it)


def write_spectrum_csv(spec: Spectrum, path) -> None:
    with open(path, "w") as fh:
        fh.write("wavelength_nm,intensity\n")
        for w, i in zip(spec.wavelength, spec.intensity):
            fh.write(f"{float(w)!r},{float(i)!r}\n")


def write_fit_curve_csv(spec: Spectrum, fit: FanoFit, path) -> None:
    """CSV of (wavelength, measured, fitted) for external plotting."""
    fitted = fano_model(spec.wavelength, fit.lambda_0, fit.fwhm, fit.q_fano,
                        fit.amplitude, fit.offset)
    with open(path, "w") as fh:
        fh.write("wavelength_nm,measured,fitted\n")
        for w, m, f in zip(spec.wavelength, spec.intensity, fitted):
            fh.write(f"{float(w)!r},{float(m)!r},{float(f)!r}\n")
