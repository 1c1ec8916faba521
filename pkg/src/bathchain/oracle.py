"""Independent verification engines: dense exact propagation and closed forms.

`dense_evolve` is ground truth for any lattice whose Hilbert dimension fits
the cap: one Hermitian eigendecomposition, no time-discretization error.  The
analytic helpers cover the decoupled dimer (Rabi) and the single-oscillator
pure-dephasing limit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .chain import LatticeHamiltonian
from .errors import DimensionMismatch, TooLarge
from .mps import COHERENCE_12, P_SITE1, P_SITE2, Trajectory
from .units import CM1_TO_RAD_PER_PS

DENSE_DIMENSION_CAP = 20_000


@dataclass(frozen=True)
class DenseSystem:
    matrix: np.ndarray  # cm^-1, Hermitian, full tensor-product basis
    dims: tuple[int, ...]
    system_index: int

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]


def _embed(op: np.ndarray, start: int, dims: tuple[int, ...],
           span: int = 1) -> np.ndarray:
    left = int(np.prod(dims[:start], initial=1))
    right = int(np.prod(dims[start + span:], initial=1))
    return np.kron(np.kron(np.eye(left), op), np.eye(right))


def dense_build(lat: LatticeHamiltonian,
                cap: int = DENSE_DIMENSION_CAP) -> DenseSystem:
    """Exact dense matrix of the truncated lattice Hamiltonian."""
    dims = lat.dims
    dim = int(np.prod(dims))
    if dim > cap:
        raise TooLarge(f"dense dimension {dim} exceeds cap {cap}")
    h = np.zeros((dim, dim))
    for i, site in enumerate(lat.sites):
        h = h + _embed(site.onsite, i, dims)
    for i, bond in enumerate(lat.bonds):
        h = h + _embed(bond, i, dims, span=2)
    return DenseSystem(h, dims, lat.system_index)


def dense_product_state(sys: DenseSystem,
                        system_vector: np.ndarray) -> np.ndarray:
    """Vacuum chains tensored with the given system amplitudes."""
    v = np.asarray(system_vector, dtype=complex)
    v = v / np.linalg.norm(v)
    psi = np.array([1.0 + 0.0j])
    for i, d in enumerate(sys.dims):
        local = v if i == sys.system_index else np.eye(d, dtype=complex)[0]
        psi = np.kron(psi, local)
    return psi


def _cut_entropy(psi: np.ndarray, dims: tuple[int, ...], cut: int) -> float:
    left = int(np.prod(dims[: cut + 1]))
    s = np.linalg.svd(psi.reshape(left, -1), compute_uv=False)
    p = s**2
    p = p[p > 1e-300]
    p = p / p.sum()
    return float(-(p * np.log(p)).sum())


def dense_evolve(sys: DenseSystem, psi0: np.ndarray, times: np.ndarray,
                 track_occupations: bool = False) -> Trajectory:
    """psi(t) by Hermitian eigendecomposition; same observables as the TEBD
    engine (populations, coherence, max cut entropy)."""
    if psi0.shape != (sys.dimension,):
        raise DimensionMismatch(
            f"state has dimension {psi0.shape}, H is {sys.dimension}")
    lam, vec = np.linalg.eigh(sys.matrix)
    coeff = vec.conj().T @ psi0
    dims = sys.dims
    p1_op = _embed(P_SITE1, sys.system_index, dims)
    p2_op = _embed(P_SITE2, sys.system_index, dims)
    c12_op = _embed(COHERENCE_12, sys.system_index, dims)
    num_ops = None
    if track_occupations:
        num_ops = [None if i == sys.system_index
                   else _embed(np.diag(np.arange(d, dtype=float)), i, dims)
                   for i, d in enumerate(dims)]

    times = np.asarray(times, dtype=float)
    p1s, p2s, rec, imc, smax, occ_rows = [], [], [], [], [], []
    for t in times:
        psi = vec @ (np.exp(-1j * lam * CM1_TO_RAD_PER_PS * t) * coeff)
        p1s.append(float(np.real(np.vdot(psi, p1_op @ psi))))
        p2s.append(float(np.real(np.vdot(psi, p2_op @ psi))))
        c = complex(np.vdot(psi, c12_op @ psi))
        rec.append(c.real)
        imc.append(c.imag)
        smax.append(max(_cut_entropy(psi, dims, cut)
                        for cut in range(len(dims) - 1)))
        if track_occupations:
            occ_rows.append([np.nan if op is None
                             else float(np.real(np.vdot(psi, op @ psi)))
                             for op in num_ops])
    return Trajectory(
        times=times.copy(),
        p_site1=np.array(p1s),
        p_site2=np.array(p2s),
        re_coherence=np.array(rec),
        im_coherence=np.array(imc),
        max_bond_entropy=np.array(smax),
        discarded_weight=np.zeros_like(times),
        occupations=np.array(occ_rows) if track_occupations else None,
    )


# ---------------------------------------------------------------------------
# Closed forms
# ---------------------------------------------------------------------------

def rabi_analytic(delta_cm1: float, j_cm1: float, t_ps) -> np.ndarray:
    """Initial-site population of the decoupled dimer.

    p1(t) = 1 - (4J^2/(D^2+4J^2)) sin^2(sqrt(D^2+4J^2) t / 2) with the energy
    splitting D and tunneling J converted to rad/ps.
    """
    t = np.asarray(t_ps, dtype=float)
    d = delta_cm1 * CM1_TO_RAD_PER_PS
    j = j_cm1 * CM1_TO_RAD_PER_PS
    omega_sq = d * d + 4.0 * j * j
    if omega_sq == 0.0:
        return np.ones_like(t)
    amp = 4.0 * j * j / omega_sq
    return 1.0 - amp * np.sin(0.5 * math.sqrt(omega_sq) * t) ** 2


def single_mode_analytic(eps0_cm1: float, eta_cm1: float, t_ps) -> np.ndarray:
    """|c12(t)| / |c12(0)| for a dimer with J = 0 whose site 1 couples to a
    single oscillator at eps0 through the projector |1><1|.

    Displaced-oscillator algebra gives
    exp[-(eta/eps0)^2 (1 - cos(eps0 t))]: site 2 leaves the oscillator in the
    vacuum while site 1 drags it around a coherent-state circle, and the
    overlap of the two bath states is the decoherence factor.  Revives fully
    at t = 2 pi / eps0.
    """
    t = np.asarray(t_ps, dtype=float)
    w0 = eps0_cm1 * CM1_TO_RAD_PER_PS
    if eta_cm1 == 0.0:
        return np.ones_like(t)
    ratio_sq = (eta_cm1 / eps0_cm1) ** 2
    return np.exp(-ratio_sq * (1.0 - np.cos(w0 * t)))
