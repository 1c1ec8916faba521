"""Bath spectral densities: built-in families, evaluation, unit-interval rescaling.

A bath is fully characterized by a spectral density J(omega) >= 0 supported on
[0, omega_c] plus optional discrete lines (omega_j, w_j), where each line adds
w_j to the integral of J.  Energies are in cm^-1, line weights in cm^-2.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import quad

from .errors import DivergentIntegral, InvalidParameter, QuadratureFailure

FOUR_PI = 4.0 * math.pi


@dataclass(frozen=True)
class SpectralDensity:
    """Continuous density J_c plus discrete lines on (0, omega_c]."""

    continuous: Callable[[np.ndarray | float], np.ndarray | float]
    omega_c: float
    lines: tuple[tuple[float, float], ...] = ()
    family: str = "custom"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.omega_c > 0:
            raise InvalidParameter(f"omega_c must be positive, got {self.omega_c}")
        for om, w in self.lines:
            if not w > 0:
                raise InvalidParameter(f"line weight must be positive, got {w}")
            if not 0 < om <= self.omega_c:
                raise InvalidParameter(
                    f"line frequency {om} outside (0, omega_c={self.omega_c}]"
                )


@dataclass(frozen=True)
class UnitMeasure:
    """Support-rescaled measure on [0, 1]: weight(k) = omega_c * J_c(omega_c k)."""

    weight: Callable[[np.ndarray | float], np.ndarray | float]
    lines: tuple[tuple[float, float], ...]  # (k_j, w_j), k_j in (0, 1]
    total_mass: float  # cm^-2, equals integral of J over [0, omega_c]
    omega_c: float

    def __post_init__(self):
        if not self.total_mass > 0:
            raise InvalidParameter(f"total mass must be positive, got {self.total_mass}")
        for k, _ in self.lines:
            if not 0 < k <= 1:
                raise InvalidParameter(f"line position {k} outside (0, 1]")


class SzegoVerdict(enum.Enum):
    IN_CLASS = "in_class"
    OUT_OF_CLASS = "out_of_class"
    INCONCLUSIVE = "inconclusive"


# ---------------------------------------------------------------------------
# Built-in families
# ---------------------------------------------------------------------------

def power_law(alpha: float, s: float, omega_c: float) -> SpectralDensity:
    """J(omega) = alpha * omega_c**(1-s) * omega**s, hard cutoff at omega_c."""
    if s <= -1:
        raise InvalidParameter(f"power-law exponent s={s} <= -1 is not normalizable")
    if alpha <= 0:
        raise InvalidParameter(f"alpha must be positive, got {alpha}")
    if omega_c <= 0:
        raise InvalidParameter(f"omega_c must be positive, got {omega_c}")
    pref = alpha * omega_c ** (1.0 - s)

    def j(omega):
        omega = np.asarray(omega, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            val = pref * omega**s
        return np.where((omega >= 0) & (omega <= omega_c), val, 0.0)

    return SpectralDensity(j, omega_c, (), "power_law",
                           {"alpha": alpha, "s": s, "omega_c": omega_c})


def overdamped_brownian(lam: float, gamma: float,
                        omega_c: float | None = None) -> SpectralDensity:
    """J(omega) = 8*lam*gamma*omega / (omega^2 + gamma^2), truncated at omega_c.

    The Lorentzian form has no intrinsic cutoff but the chain mapping needs a
    finite bandwidth; omega_c defaults to 20*gamma, which retains ~97% of the
    reorganization energy ((2/pi)*arctan(20)).
    """
    if lam <= 0 or gamma <= 0:
        raise InvalidParameter(
            f"lam and gamma must be positive, got lam={lam}, gamma={gamma}")
    if omega_c is None:
        omega_c = 20.0 * gamma
    if omega_c <= 0:
        raise InvalidParameter(f"omega_c must be positive, got {omega_c}")

    def j(omega):
        omega = np.asarray(omega, dtype=float)
        val = 8.0 * lam * gamma * omega / (omega**2 + gamma**2)
        return np.where((omega >= 0) & (omega <= omega_c), val, 0.0)

    return SpectralDensity(j, omega_c, (), "overdamped_brownian",
                           {"lam": lam, "gamma": gamma, "omega_c": omega_c})


def adolphs_renger(lam: float, s_h: float, omega_h: float, omega_1: float,
                   omega_2: float, omega_c: float) -> SpectralDensity:
    """Two super-Ohmic omega^5 terms plus one high-energy line at omega_h.

    The continuous part is normalized so its reorganization energy is exactly
    lam (up to the omega_c truncation); the line carries weight
    4*pi*s_h*omega_h^2 and contributes s_h*omega_h to the reorganization
    energy.  s_h = 0 drops the line.
    """
    if lam <= 0 or omega_h <= 0 or omega_1 <= 0 or omega_2 <= 0 or omega_c <= 0:
        raise InvalidParameter("adolphs_renger parameters must be positive")
    if s_h < 0:
        raise InvalidParameter(f"s_h must be >= 0, got {s_h}")
    if omega_h >= omega_c:
        raise InvalidParameter(
            f"line frequency omega_h={omega_h} must lie below omega_c={omega_c}")
    norm = math.factorial(9) * (1000.0 * omega_1**5 + 4.3 * omega_2**5)
    pref = 2.0 * math.pi * lam / norm

    def j(omega):
        omega = np.asarray(omega, dtype=float)
        om = np.maximum(omega, 0.0)
        val = pref * (1000.0 * om**5 * np.exp(-np.sqrt(om / omega_1))
                      + 4.3 * om**5 * np.exp(-np.sqrt(om / omega_2)))
        return np.where((omega >= 0) & (omega <= omega_c), val, 0.0)

    lines = ((omega_h, FOUR_PI * s_h * omega_h**2),) if s_h > 0 else ()
    return SpectralDensity(j, omega_c, lines, "adolphs_renger",
                           {"lam": lam, "s_h": s_h, "omega_h": omega_h,
                            "omega_1": omega_1, "omega_2": omega_2,
                            "omega_c": omega_c})


def tabulated(omega_samples: Sequence[float], j_samples: Sequence[float],
              lines: Sequence[tuple[float, float]] = (),
              omega_c: float | None = None) -> SpectralDensity:
    """Linear interpolation through (omega, J) samples, zero outside their range."""
    om = np.asarray(omega_samples, dtype=float)
    jv = np.asarray(j_samples, dtype=float)
    if om.ndim != 1 or om.shape != jv.shape or om.size < 2:
        raise InvalidParameter("need two 1-d sample arrays of equal length >= 2")
    if np.any(np.diff(om) <= 0):
        raise InvalidParameter("omega samples must be strictly increasing")
    if np.any(jv < 0):
        raise InvalidParameter("tabulated J values must be nonnegative")
    if omega_c is None:
        omega_c = float(om[-1])

    def j(omega):
        omega = np.asarray(omega, dtype=float)
        return np.interp(omega, om, jv, left=0.0, right=0.0)

    return SpectralDensity(j, omega_c, tuple(lines), "tabulated", {})


# ---------------------------------------------------------------------------
# Integration toward the origin with divergence detection
# ---------------------------------------------------------------------------

def _integral_to_zero(f, upper: float, what: str) -> float:
    """Integrate f over (0, upper] with dyadic refinement toward 0.

    Raises DivergentIntegral when the per-piece integrals fail to decay,
    which is how a non-integrable origin shows up under halving.
    """
    total = 0.0
    prev = math.inf
    nondecay = 0
    hi = upper
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for level in range(1100):
            lo = hi / 2.0
            inc, _ = quad(f, lo, hi, epsabs=0.0, epsrel=1e-12, limit=200)
            if not np.isfinite(inc):
                raise DivergentIntegral(f"{what}: non-finite piece on [{lo}, {hi}]")
            total += inc
            scale = max(abs(total), 1e-300)
            if level >= 3 and abs(inc) <= 1e-14 * scale:
                return total
            # halving the interval must eventually shrink the pieces; sustained
            # non-decay over 60 octaves means a log-or-worse origin singularity
            nondecay = nondecay + 1 if abs(inc) >= 0.9995 * prev else 0
            if nondecay >= 60 and abs(inc) > 1e-12 * scale:
                raise DivergentIntegral(
                    f"{what}: integrand not integrable at omega -> 0")
            prev = abs(inc)
            if lo < 1e-280:
                if nondecay > 0 and abs(inc) > 1e-12 * scale:
                    raise DivergentIntegral(
                        f"{what}: integrand not integrable at omega -> 0")
                return total  # geometric decay exhausted double range
            hi = lo
    return total


def reorganization_energy(density: SpectralDensity) -> float:
    """(1/4pi) * [ integral of J_c(omega)/omega + sum_j w_j/omega_j ], in cm^-1."""
    if density.family == "power_law" and density.params["s"] <= 0:
        raise DivergentIntegral(
            f"J/omega is not integrable at 0 for power-law s={density.params['s']}")
    cont = _integral_to_zero(lambda w: float(density.continuous(w)) / w,
                             density.omega_c, "reorganization energy")
    line_part = sum(w / om for om, w in density.lines)
    return (cont + line_part) / FOUR_PI


def total_integral(density: SpectralDensity) -> float:
    """Integral of J over [0, omega_c] including line weights, in cm^-2."""
    cont = _integral_to_zero(lambda w: float(density.continuous(w)),
                             density.omega_c, "spectral density mass")
    return cont + sum(w for _, w in density.lines)


def to_unit_measure(density: SpectralDensity) -> UnitMeasure:
    """Rescale the support to [0, 1]: weight(k) = omega_c * J_c(omega_c * k)."""
    omega_c = density.omega_c
    jc = density.continuous

    def weight(k):
        return omega_c * np.asarray(jc(omega_c * np.asarray(k, dtype=float)))

    lines = tuple((om / omega_c, w) for om, w in density.lines)
    return UnitMeasure(weight, lines, total_integral(density), omega_c)


def coupling_measure(density: SpectralDensity) -> UnitMeasure:
    """The measure whose tridiagonalization gives the simulation chain:
    to_unit_measure scaled by 1/(4 pi).

    The spectroscopic J is normalized so that lambda = (1/4pi) int J/omega is
    the reorganization energy; the squared microscopic couplings are
    therefore J/(4 pi) (a delta line w*delta(omega - omega_0) couples one
    oscillator at strength sqrt(w/(4 pi)), e.g. sqrt(S)*omega_0 for a line of
    weight 4 pi S omega_0^2).  Mapping this measure makes the chain's polaron
    shift equal the density's reorganization energy.
    """
    base = to_unit_measure(density)

    def weight(k):
        return np.asarray(base.weight(k)) / FOUR_PI

    lines = tuple((k, w / FOUR_PI) for k, w in base.lines)
    return UnitMeasure(weight, lines, base.total_mass / FOUR_PI, base.omega_c)


# ---------------------------------------------------------------------------
# Szego classification
# ---------------------------------------------------------------------------

def szego_class_check(measure: UnitMeasure, tol: float,
                      levels: int = 12) -> SzegoVerdict:
    """Classify the continuous weight against the log-integrability condition.

    The relevant integral is of ln(weight(k)) against the arcsine density
    1/sqrt(1-(2k-1)^2); substituting k = (1-cos(pi t))/2 removes the endpoint
    weight singularity.  Exclusion windows around the endpoints and detected
    zeros are halved `levels` times; the verdict follows the trend of the
    partial integrals.  This is a numerical diagnostic, so INCONCLUSIVE is the
    honest fallback.
    """
    grid = (np.arange(4096) + 0.5) / 4096.0
    try:
        vals = np.asarray(measure.weight(grid), dtype=float)
    except Exception:
        return SzegoVerdict.INCONCLUSIVE
    if vals.shape != grid.shape or np.any(~np.isfinite(vals)):
        return SzegoVerdict.INCONCLUSIVE
    nonpos = vals <= 0.0
    # a run of >= 2 adjacent nonpositive samples means ln(weight) = -inf on a
    # set of positive measure: certainly outside the class
    if np.any(nonpos[:-1] & nonpos[1:]):
        return SzegoVerdict.OUT_OF_CLASS

    zero_ts = [math.acos(1.0 - 2.0 * k) / math.pi for k in grid[nonpos]]

    def g(t):
        k = 0.5 * (1.0 - math.cos(math.pi * t))
        w = float(measure.weight(k))
        if w <= 0.0:
            return -math.inf
        return math.log(w)

    partials = []
    delta0 = 0.02
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for level in range(levels + 1):
            delta = delta0 * 0.5**level
            cuts = [(0.0, delta), (1.0 - delta, 1.0)]
            cuts += [(tz - delta, tz + delta) for tz in zero_ts]
            merged: list[list[float]] = []
            for lo, hi in sorted(cuts):
                lo, hi = max(lo, 0.0), min(hi, 1.0)
                if merged and lo <= merged[-1][1]:
                    merged[-1][1] = max(merged[-1][1], hi)
                else:
                    merged.append([lo, hi])
            segments = []
            pos = 0.0
            for lo, hi in merged:
                if lo > pos:
                    segments.append((pos, lo))
                pos = max(pos, hi)
            if pos < 1.0:
                segments.append((pos, 1.0))
            value = 0.0
            ok = True
            for lo, hi in segments:
                inc, _ = quad(g, lo, hi, epsabs=1e-12, epsrel=1e-10, limit=200)
                if not np.isfinite(inc):
                    ok = False
                    break
                value += inc
            if not ok:
                return SzegoVerdict.OUT_OF_CLASS
            partials.append(0.5 * math.pi * value)

    diffs = np.diff(partials)
    if len(diffs) >= 3 and np.all(diffs[-3:] < -tol):
        return SzegoVerdict.OUT_OF_CLASS
    if len(diffs) >= 2 and np.all(np.abs(diffs[-2:]) < tol):
        return SzegoVerdict.IN_CLASS
    return SzegoVerdict.INCONCLUSIVE
