"""Physical chain assembly and diagnostics.

Recurrence coefficients become a 1D oscillator chain via eps_n = omega_c *
alpha_n, t_n = omega_c * sqrt(beta_{n+1}), with the system coupled to site 0
at strength eta = sqrt(beta_0).  The full simulation lattice is
[chain1 reversed | two-level system block | chain2] with strictly
nearest-neighbor bonds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.stats import linregress

from .errors import (
    Breakdown,
    DomainError,
    InsufficientCoefficients,
    InvalidParameter,
    NonHermitianTerm,
    NotConverged,
    UnsupportedTopology,
)
from .orthopoly import RecurrenceCoefficients
from .units import CM1_TO_RAD_PER_PS

ASYMPTOTIC_EPS_FRACTION = 0.5  # eps_n -> omega_c/2 deep in any Szego-class chain
ASYMPTOTIC_T_FRACTION = 0.25  # t_n -> omega_c/4


@dataclass(frozen=True)
class ChainParams:
    """Site energies, hoppings and head coupling of one bath chain (cm^-1).

    `t` has `length` entries when the source coefficients extend one step past
    the truncation (t[length-1] is the coupling to the first dropped site,
    used by the terminal-environment diagnostic), else `length - 1`.
    """

    eps: np.ndarray
    t: np.ndarray
    eta: float
    omega_c: float
    length: int

    def __post_init__(self):
        if len(self.eps) != self.length:
            raise InvalidParameter("eps must have `length` entries")
        if len(self.t) not in (self.length, self.length - 1):
            raise InvalidParameter("t must have length or length-1 entries")
        if self.eta < 0:
            raise InvalidParameter(f"eta must be nonnegative, got {self.eta}")
        slack = 1e-9 * self.omega_c
        if np.any(self.eps <= -slack) or np.any(self.eps >= self.omega_c + slack):
            raise Breakdown("site energy outside (0, omega_c)")
        if np.any(self.t <= 0) or np.any(self.t > 0.5 * self.omega_c + slack):
            raise Breakdown("hopping outside (0, omega_c/2]")


@dataclass(frozen=True)
class SystemSpec:
    """Few-state quantum system in the single-excitation site basis."""

    n_sites: int
    h_matrix: np.ndarray  # cm^-1, Hermitian
    coupling_ops: tuple[np.ndarray, ...] = ()

    def __post_init__(self):
        h = np.asarray(self.h_matrix)
        if h.shape != (self.n_sites, self.n_sites):
            raise InvalidParameter("h_matrix dimension must equal n_sites")
        if not np.allclose(h, h.conj().T, atol=1e-12 * max(1.0, np.abs(h).max())):
            raise NonHermitianTerm("system Hamiltonian is not Hermitian")
        if not self.coupling_ops:
            projectors = tuple(
                np.diag(np.eye(self.n_sites)[i]) for i in range(self.n_sites))
            object.__setattr__(self, "coupling_ops", projectors)
        for op in self.coupling_ops:
            if np.asarray(op).shape != (self.n_sites, self.n_sites):
                raise InvalidParameter("coupling operator dimension mismatch")


def dimer(j_coupling: float, eps1: float, eps2: float) -> SystemSpec:
    """Two-site system: local energies eps1, eps2 and tunneling amplitude J."""
    h = np.array([[eps1, j_coupling], [j_coupling, eps2]], dtype=float)
    return SystemSpec(2, h)


@dataclass(frozen=True)
class LatticeSite:
    kind: str  # chain1 | system | chain2
    dim: int
    onsite: np.ndarray  # cm^-1


@dataclass(frozen=True)
class LatticeHamiltonian:
    """Strictly nearest-neighbor 1D lattice; bonds[i] couples entries i, i+1."""

    sites: tuple[LatticeSite, ...]
    bonds: tuple[np.ndarray, ...]
    system_index: int

    def __post_init__(self):
        if len(self.bonds) != len(self.sites) - 1:
            raise InvalidParameter("need exactly one bond per adjacent pair")
        for site in self.sites:
            _require_hermitian(site.onsite, f"onsite term of {site.kind}")
            if site.onsite.shape != (site.dim, site.dim):
                raise InvalidParameter("onsite dimension mismatch")
        for i, h in enumerate(self.bonds):
            d = self.sites[i].dim * self.sites[i + 1].dim
            if h.shape != (d, d):
                raise InvalidParameter(f"bond {i} has shape {h.shape}, expected {d}")
            _require_hermitian(h, f"bond {i}")

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(site.dim for site in self.sites)

    @property
    def n_entries(self) -> int:
        return len(self.sites)


def _require_hermitian(m: np.ndarray, what: str):
    scale = max(1.0, float(np.abs(m).max()))
    if not np.allclose(m, m.conj().T, atol=1e-12 * scale):
        raise NonHermitianTerm(f"{what} is not Hermitian")


# ---------------------------------------------------------------------------
# Chain construction and diagnostics
# ---------------------------------------------------------------------------

def build_chain(rc: RecurrenceCoefficients, omega_c: float,
                length: int) -> ChainParams:
    """Scale dimensionless recurrence coefficients to a physical chain."""
    if length < 1:
        raise InvalidParameter("chain length must be >= 1")
    if rc.n_max < length:
        raise InsufficientCoefficients(
            f"need {length} coefficients for a length-{length} chain, "
            f"have {rc.n_max}")
    eps = omega_c * rc.alpha[:length]
    n_t = length + 1 if rc.n_max >= length + 1 else length
    t = omega_c * np.sqrt(rc.beta[1:n_t])
    return ChainParams(eps, t, math.sqrt(rc.beta[0]), omega_c, length)


@dataclass(frozen=True)
class AsymptoteReport:
    n_star: int
    residuals: np.ndarray


def asymptote_convergence(chain: ChainParams, tol: float) -> AsymptoteReport:
    """Smallest n past which both eps/omega_c and t/omega_c sit within tol of
    their universal limits (1/2 and 1/4), plus the residual sequence."""
    if chain.length < 4:
        raise InvalidParameter("need at least 4 chain sites")
    res_eps = np.abs(chain.eps / chain.omega_c - ASYMPTOTIC_EPS_FRACTION)
    res_t = np.abs(chain.t / chain.omega_c - ASYMPTOTIC_T_FRACTION)
    residuals = res_eps.copy()
    k = min(len(res_t), chain.length)
    residuals[:k] = np.maximum(res_eps[:k], res_t[:k])
    suffix = np.maximum.accumulate(residuals[::-1])[::-1]
    hits = np.nonzero(suffix < tol)[0]
    if hits.size == 0:
        raise NotConverged(
            f"residuals never fall below tol={tol:g} within {chain.length} sites "
            f"(final residual {residuals[-1]:.3e})")
    return AsymptoteReport(int(hits[0]), residuals)


def residual_decay_exponent(report: AsymptoteReport, n_lo: int = 20,
                            n_hi: int = 100) -> float:
    """Fitted p in residual ~ 1/n^p over [n_lo, n_hi] (log-log regression)."""
    n = np.arange(len(report.residuals))
    mask = (n >= n_lo) & (n <= n_hi) & (report.residuals > 0)
    if mask.sum() < 4:
        raise InvalidParameter("not enough positive residuals in the fit window")
    fit = linregress(np.log(n[mask]), np.log(report.residuals[mask]))
    return -float(fit.slope)


def dispersion(q: float, omega_c: float) -> float:
    """Excitation frequency of the homogeneous chain region at wavevector q."""
    if not 0.0 <= q <= 1.0:
        raise DomainError(f"wavevector q={q} outside [0, 1]")
    return 0.5 * omega_c * (1.0 - math.cos(math.pi * q))


def terminal_spectral_density(chain: ChainParams, n_cut: int,
                              n_modes: int) -> tuple[np.ndarray, np.ndarray]:
    """Eigenmodes of the chain tail past site n_cut, as the effective
    environment seen by that site.

    Returns (frequencies, squared couplings): diagonalizing the tridiagonal
    tail (asymptotic values omega_c/2, omega_c/4 beyond stored coefficients)
    gives modes at omega_k coupled to site n_cut with strength
    (t_{n_cut} * v_k[0])^2.  The couplings sum to t_{n_cut}^2.
    """
    if not 0 <= n_cut < chain.length:
        raise DomainError(f"n_cut={n_cut} outside [0, length)")
    if n_modes < 1:
        raise DomainError("need at least one tail mode")
    wc = chain.omega_c

    def eps_at(site: int) -> float:
        return float(chain.eps[site]) if site < chain.length else 0.5 * wc

    def t_at(site: int) -> float:
        return float(chain.t[site]) if site < len(chain.t) else 0.25 * wc

    diag = np.array([eps_at(n_cut + 1 + i) for i in range(n_modes)])
    off = np.array([t_at(n_cut + 1 + i) for i in range(n_modes - 1)])
    t_head = t_at(n_cut)
    if n_modes == 1:
        return diag.copy(), np.array([t_head**2])
    freqs, vecs = eigh_tridiagonal(diag, off)
    strength = (t_head * vecs[0, :]) ** 2
    return freqs, strength


def semicircle_deviation(freqs: np.ndarray, strength: np.ndarray,
                         omega_c: float, n_bins: int = 40) -> float:
    """Normalized L2 distance between the binned tail-coupling density and the
    semicircle profile sqrt(omega*(omega_c-omega)) with fitted amplitude."""
    edges = np.linspace(0.0, omega_c, n_bins + 1)
    binned, _ = np.histogram(freqs, bins=edges, weights=strength)

    def semicircle_mass(a: float, b: float) -> float:
        # antiderivative of sqrt(w(wc-w)) in theta = arccos(1-2w/wc):
        # (wc^2/8)(theta - sin(theta)cos(theta))
        th_a = math.acos(max(-1.0, min(1.0, 1.0 - 2.0 * a / omega_c)))
        th_b = math.acos(max(-1.0, min(1.0, 1.0 - 2.0 * b / omega_c)))
        prim = lambda th: th - math.sin(th) * math.cos(th)
        return omega_c**2 / 8.0 * (prim(th_b) - prim(th_a))

    model = np.array([semicircle_mass(a, b) for a, b in zip(edges[:-1], edges[1:])])
    u = binned / binned.sum()
    v = model / model.sum()
    return float(np.linalg.norm(u - v) / np.linalg.norm(v))


def light_cone_exit_time(length: int, omega_c: float) -> float:
    """Time (ps) for the ballistic front (speed omega_c/2 sites per unit time)
    to reach the far end of a length-`length` chain."""
    v = 0.5 * omega_c * CM1_TO_RAD_PER_PS  # sites per ps
    return length / v


# ---------------------------------------------------------------------------
# Lattice assembly
# ---------------------------------------------------------------------------

def boson_ops(dim: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(annihilator, number, position-like b+b^dag) truncated to `dim` levels."""
    b = np.zeros((dim, dim))
    idx = np.arange(1, dim)
    b[idx - 1, idx] = np.sqrt(idx)
    return b, b.T @ b, b + b.T


def assemble_lattice(system: SystemSpec, chain1: ChainParams,
                     chain2: ChainParams, local_dim: int) -> LatticeHamiltonian:
    """Nearest-neighbor lattice [chain1 reversed | system | chain2].

    The system block is a single entry of dimension 2; each boundary bond
    carries eta_i * V_i (x) (b + b^dag); interior bonds carry
    t_n (b^dag b' + b'^dag b); chain on-site terms are eps_n b^dag b with
    bosons truncated to local_dim levels.
    """
    if system.n_sites != 2:
        raise UnsupportedTopology(
            f"only the two-site system block is supported, got {system.n_sites}")
    if local_dim < 2:
        raise InvalidParameter("local_dim must be >= 2")
    b, num, x = boson_ops(local_dim)
    hop = np.kron(b.T, b) + np.kron(b, b.T)

    sites: list[LatticeSite] = []
    bonds: list[np.ndarray] = []
    for n in range(chain1.length - 1, -1, -1):
        sites.append(LatticeSite("chain1", local_dim, chain1.eps[n] * num))
        if n > 0:
            bonds.append(chain1.t[n - 1] * hop)
    bonds.append(chain1.eta * np.kron(x, system.coupling_ops[0]))
    sites.append(LatticeSite("system", 2, np.asarray(system.h_matrix)))
    bonds.append(chain2.eta * np.kron(system.coupling_ops[1], x))
    for n in range(chain2.length):
        sites.append(LatticeSite("chain2", local_dim, chain2.eps[n] * num))
        if n < chain2.length - 1:
            bonds.append(chain2.t[n] * hop)
    return LatticeHamiltonian(tuple(sites), tuple(bonds), chain1.length)
