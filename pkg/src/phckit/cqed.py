"""Cavity-QED figures of merit for color-center emitters: Purcell factor,
indistinguishability, beta factor, emission-rate budget, emitter-cavity
coupling, and the strong-coupling threshold in the Q-V plane.

Rate conventions (documented, since they are easy to mix up):
  gamma_0      natural ZPL linewidth, linear Hz, = 1/(2*pi*tau)
  gamma_0_pop  population decay rate, angular, = 1/tau
  gamma_tot    total dephasing rate, linear Hz (same units as gamma_0)
  kappa        cavity energy decay rate, angular, = omega/Q
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from importlib import resources

import yaml
from scipy.optimize import brentq

C_LIGHT = 299_792_458.0  # m/s

PURCELL_PREFACTOR = 3.0 / (4.0 * math.pi**2)


@dataclass(frozen=True)
class EmitterSpec:
    """Color-center emitter parameters."""

    name: str
    zpl_wavelength: float       # meters
    lifetime_tau: float         # seconds
    debye_waller: float         # fraction of emission into the ZPL
    dephasing_gamma_tot: float  # linear Hz
    host_index_n: float

    def __post_init__(self):
        if min(self.zpl_wavelength, self.lifetime_tau, self.debye_waller,
               self.host_index_n) <= 0 or self.dephasing_gamma_tot < 0:
            raise ValueError("emitter parameters must be positive")
        if self.debye_waller > 1.0:
            raise ValueError("debye_waller must be <= 1")

    @property
    def gamma_0(self) -> float:
        """Natural ZPL linewidth, linear Hz."""
        return 1.0 / (2.0 * math.pi * self.lifetime_tau)

    @property
    def gamma_0_pop(self) -> float:
        """Population decay rate, angular (1/s)."""
        return 1.0 / self.lifetime_tau


@dataclass(frozen=True)
class CavityFigures:
    Q: float
    V_normalized: float           # (lambda/n)^3 units
    resonance_wavelength: float   # meters
    dipole_overlap_xi: float = 1.0

    def __post_init__(self):
        if self.Q <= 0 or self.V_normalized <= 0 or self.resonance_wavelength <= 0:
            raise ValueError("Q, V, and wavelength must be positive")
        if not 0.0 <= self.dipole_overlap_xi <= 1.0:
            raise ValueError("dipole overlap must be in [0, 1]")


@dataclass(frozen=True)
class RateBudget:
    gamma_0: float
    Gamma_cav: float
    Gamma_off: float

    @property
    def Gamma_tot(self) -> float:
        return self.Gamma_cav + self.Gamma_off


def purcell(cavity: CavityFigures) -> float:
    """F_P = (3 / 4 pi^2) * (Q / V) * xi with V in (lambda0/n)^3 units."""
    return PURCELL_PREFACTOR * cavity.Q / cavity.V_normalized * cavity.dipole_overlap_xi


def rates_from_purcell(f_purcell: float, gamma_0: float) -> RateBudget:
    """Emission budget: cavity-coupled rate F_P*gamma_0, off-cavity rate
    approximated by the bulk rate gamma_0."""
    if f_purcell < 0 or gamma_0 < 0:
        raise ValueError("rates must be non-negative")
    return RateBudget(gamma_0=gamma_0, Gamma_cav=f_purcell * gamma_0, Gamma_off=gamma_0)


def indistinguishability_from_rates(budget: RateBudget, gamma_tot: float) -> float:
    """I = Gamma_tot / (Gamma_tot + 2*gamma_tot)."""
    return budget.Gamma_tot / (budget.Gamma_tot + 2.0 * gamma_tot)


def indistinguishability(f_purcell: float, gamma_tot: float, gamma_0: float) -> float:
    """I = (F_P + 1) / (F_P + 1 + 2*gamma_tot/gamma_0)."""
    if min(f_purcell, gamma_tot, gamma_0) < 0:
        raise ValueError("rates must be non-negative")
    if gamma_0 == 0.0:
        raise ZeroDivisionError("gamma_0 must be positive")
    return (f_purcell + 1.0) / (f_purcell + 1.0 + 2.0 * gamma_tot / gamma_0)


def beta_from_rates(budget: RateBudget, debye_waller: float) -> float:
    """beta = DW*Gamma_cav / (DW*Gamma_cav + Gamma_off)."""
    num = debye_waller * budget.Gamma_cav
    den = num + budget.Gamma_off
    return 0.0 if den == 0.0 else num / den


def beta_factor(f_purcell: float, debye_waller: float) -> float:
    """beta = F_P / (F_P + 1/DW)."""
    if f_purcell < 0:
        raise ValueError("F_P must be non-negative")
    if not 0.0 < debye_waller <= 1.0:
        raise ValueError("debye_waller must be in (0, 1]")
    return f_purcell / (f_purcell + 1.0 / debye_waller)


def cavity_kappa(Q: float, wavelength: float) -> float:
    """Energy decay rate kappa = omega/Q, angular."""
    return 2.0 * math.pi * C_LIGHT / wavelength / Q


def coupling_g(f_purcell: float, emitter: EmitterSpec, Q: float, wavelength: float) -> float:
    """Emitter-cavity coupling g = sqrt(F_P * gamma_0_pop * kappa) / 2 (angular).

    Uses the weak-coupling identity F_P = 4 g^2 / (kappa * gamma_0_pop).
    """
    if f_purcell < 0:
        raise ValueError("F_P must be non-negative")
    kappa = cavity_kappa(Q, wavelength)
    return 0.5 * math.sqrt(f_purcell * emitter.gamma_0_pop * kappa)


def strong_coupling_threshold_Q(
    v_normalized: float,
    emitter: EmitterSpec,
    wavelength: float | None = None,
) -> float:
    """Q* solving g(Q) = |kappa(Q) - gamma_0_pop| / 4 with xi = 1.

    Since F_P * kappa is Q-independent, g depends only on V; the root is
    found by bracketed solving of the full |kappa - gamma_0| expression.
    Returns inf when the emitter decay vanishes (threshold unreachable).
    """
    if v_normalized <= 0:
        raise ValueError("V must be positive")
    lam = wavelength if wavelength is not None else emitter.zpl_wavelength
    omega = 2.0 * math.pi * C_LIGHT / lam
    g0 = emitter.gamma_0_pop
    if g0 <= 0 or not math.isfinite(g0):
        return math.inf
    # g is Q-independent: g = sqrt(prefactor * omega * gamma_0_pop / V) / 2
    g = 0.5 * math.sqrt(PURCELL_PREFACTOR * omega * g0 / v_normalized)

    def h(q):
        return g - abs(omega / q - g0) / 4.0

    q_lo, q_hi = 1.0, omega / g0 * 0.999999 if omega / g0 > 2.0 else 2.0
    # bracket on the kappa > gamma_0 branch, where kappa decreases with Q
    if h(q_lo) <= 0 and h(q_hi) >= 0:
        return float(brentq(h, q_lo, q_hi, rtol=1e-13, maxiter=200))
    if h(q_lo) > 0:
        # already above threshold at Q=1; fall back to the closed form
        return omega / (4.0 * g + g0)
    raise RuntimeError("no strong-coupling threshold bracket found")


def threshold_curve(
    v_values,
    emitter: EmitterSpec,
    wavelength: float | None = None,
) -> list[tuple[float, float]]:
    """(V, Q*) pairs tracing the strong-coupling boundary; Q* grows as sqrt(V)."""
    out = []
    prev = None
    for v in v_values:
        if prev is not None and v <= prev:
            raise ValueError("V range must be strictly increasing")
        prev = v
        out.append((float(v), strong_coupling_threshold_Q(v, emitter, wavelength)))
    return out


def load_emitter_database(path=None) -> dict[str, EmitterSpec]:
    """Emitter database; defaults to the bundled divacancy entries."""
    if path is None:
        text = resources.files("phckit.data").joinpath("emitters.yaml").read_text()
    else:
        with open(path) as fh:
            text = fh.read()
    raw = yaml.safe_load(text)
    db = {}
    for name, e in raw.items():
        db[name] = EmitterSpec(
            name=name,
            zpl_wavelength=float(e["zpl_wavelength_nm"]) * 1e-9,
            lifetime_tau=float(e["lifetime_ns"]) * 1e-9,
            debye_waller=float(e["debye_waller"]),
            dephasing_gamma_tot=float(e["dephasing_mhz"]) * 1e6,
            host_index_n=float(e["host_index_n"]),
        )
    return db
