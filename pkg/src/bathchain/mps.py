"""Matrix-product-state TEBD evolution of the assembled lattice.

The state is kept in mixed-canonical form: tensors left of the orthogonality
center are left-isometries, tensors right of it right-isometries, and the
center tensor carries the norm.  Two-site Trotter gates are swept over even
and odd bonds; each gate is followed by a rank truncation whose discarded
squared singular values accumulate into the error budget.  Truncated states
are deliberately NOT renormalized, so the norm deficit tracks the recorded
discarded weight.

Tensor legs are ordered (left bond, physical, right bond), written vL p vR in
the contraction comments.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .chain import LatticeHamiltonian
from .errors import (
    DimensionMismatch,
    DomainError,
    InvalidParameter,
    TruncationOverflow,
)
from .units import CM1_TO_RAD_PER_PS

P_SITE1 = np.diag([1.0, 0.0])
P_SITE2 = np.diag([0.0, 1.0])
COHERENCE_12 = np.array([[0.0, 1.0], [0.0, 0.0]])  # |1><2|


def _top_spectrum(gram: np.ndarray, k_cap: int) -> tuple[np.ndarray, np.ndarray,
                                                          float]:
    """Descending top-k_cap eigenpairs of a Hermitian Gram matrix plus its
    trace.  Switches to a partial solver when only a small slice of a large
    matrix is needed."""
    p = gram.shape[0]
    gram = 0.5 * (gram + gram.conj().T)
    trace = float(np.trace(gram).real)
    if p > 300 and 3 * k_cap < p:
        lam, vecs = scipy.linalg.eigh(gram, subset_by_index=[p - k_cap, p - 1],
                                      check_finite=False)
    else:
        lam, vecs = np.linalg.eigh(gram)
        lam, vecs = lam[-k_cap:], vecs[:, -k_cap:]
    return np.maximum(lam[::-1], 0.0), vecs[:, ::-1], trace


@dataclass
class EvolutionConfig:
    dt: float = 1e-3  # ps
    t_final: float = 1.0  # ps
    trotter_order: int = 2
    chi_max: int = 30
    trunc_tol: float = 1e-10
    local_dim: int = 11
    measure_stride: int = 10
    abort_discard: float = 1e-3  # per-step discarded weight that aborts the run
    track_occupations: bool = False

    def __post_init__(self):
        if self.dt <= 0:
            raise InvalidParameter(f"dt must be positive, got {self.dt}")
        if self.t_final < self.dt:
            raise InvalidParameter("t_final must be at least one step")
        if self.trotter_order not in (1, 2):
            raise InvalidParameter(f"trotter_order must be 1 or 2")
        if self.chi_max < 1 or self.local_dim < 2 or self.measure_stride < 1:
            raise InvalidParameter("chi_max >= 1, local_dim >= 2, stride >= 1")
        if self.trunc_tol < 0:
            raise InvalidParameter("trunc_tol must be >= 0")

    @property
    def n_steps(self) -> int:
        return max(1, int(round(self.t_final / self.dt)))


@dataclass
class Trajectory:
    times: np.ndarray  # ps
    p_site1: np.ndarray
    p_site2: np.ndarray
    re_coherence: np.ndarray
    im_coherence: np.ndarray
    max_bond_entropy: np.ndarray
    discarded_weight: np.ndarray  # cumulative at measurement time
    occupations: np.ndarray | None = None  # (n_meas, n_entries), bosons only


class MPSState:
    """Mixed-canonical MPS over the lattice entries."""

    def __init__(self, tensors: list[np.ndarray], center: int,
                 chi_max: int = 10**9, trunc_tol: float = 0.0):
        self.tensors = tensors
        self.bond_spectra: list[np.ndarray] = [
            np.array([1.0]) for _ in range(len(tensors) - 1)]
        self.center = center
        self.chi_max = chi_max
        self.trunc_tol = trunc_tol
        self.cumulative_discarded_weight = 0.0

    # -- structure -----------------------------------------------------

    @property
    def n_entries(self) -> int:
        return len(self.tensors)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(t.shape[1] for t in self.tensors)

    def copy(self) -> "MPSState":
        out = MPSState([t.copy() for t in self.tensors], self.center,
                       self.chi_max, self.trunc_tol)
        out.bond_spectra = [s.copy() for s in self.bond_spectra]
        out.cumulative_discarded_weight = self.cumulative_discarded_weight
        return out

    def norm_sq(self) -> float:
        c = self.tensors[self.center]
        return float(np.real(np.vdot(c, c)))

    # -- canonical moves -----------------------------------------------

    def _shift_right(self):
        i = self.center
        t = self.tensors[i]
        chi_l, d, chi_r = t.shape
        q, r = np.linalg.qr(t.reshape(chi_l * d, chi_r))
        self.tensors[i] = q.reshape(chi_l, d, q.shape[1])
        self.tensors[i + 1] = np.tensordot(r, self.tensors[i + 1], axes=(1, 0))
        self.center = i + 1

    def _shift_left(self):
        i = self.center
        t = self.tensors[i]
        chi_l, d, chi_r = t.shape
        q, r = np.linalg.qr(t.reshape(chi_l, d * chi_r).conj().T)
        self.tensors[i] = q.conj().T.reshape(q.shape[1], d, chi_r)
        self.tensors[i - 1] = np.tensordot(self.tensors[i - 1], r.conj().T,
                                           axes=(2, 0))
        self.center = i - 1

    def move_center_to(self, j: int):
        if not 0 <= j < self.n_entries:
            raise DomainError(f"entry {j} outside lattice")
        while self.center < j:
            self._shift_right()
        while self.center > j:
            self._shift_left()

    # -- measurement ---------------------------------------------------

    def expectation(self, op: np.ndarray, entry: int) -> complex:
        d = self.dims[entry]
        if np.asarray(op).shape != (d, d):
            raise DimensionMismatch(
                f"operator shape {np.asarray(op).shape} vs local dim {d}")
        self.move_center_to(entry)
        t = self.tensors[entry]  # vL p vR
        return complex(np.einsum("abc,bd,adc->", t.conj(), op, t))

    def two_site_expectation(self, h: np.ndarray, bond: int) -> complex:
        self.move_center_to(bond)
        a, b = self.tensors[bond], self.tensors[bond + 1]
        theta = np.tensordot(a, b, axes=(2, 0))  # vL pL pR vR
        chi_l, dl, dr, chi_r = theta.shape
        h4 = h.reshape(dl, dr, dl, dr)
        ht = np.tensordot(h4, theta, axes=([2, 3], [1, 2]))  # pL pR vL vR
        return complex(np.einsum("apqc,pqac->", theta.conj(), ht))

    def canonical_defect(self) -> float:
        """Largest deviation from the isometry conditions (audit)."""
        worst = 0.0
        for i, t in enumerate(self.tensors):
            chi_l, d, chi_r = t.shape
            if i < self.center:
                m = t.reshape(chi_l * d, chi_r)
                dev = np.abs(m.conj().T @ m - np.eye(chi_r)).max()
            elif i > self.center:
                m = t.reshape(chi_l, d * chi_r)
                dev = np.abs(m @ m.conj().T - np.eye(chi_l)).max()
            else:
                continue
            worst = max(worst, float(dev))
        return worst

    # -- gate application ----------------------------------------------

    def apply_two_site(self, gate4: np.ndarray, bond: int) -> float:
        """Apply a two-site gate at (bond, bond+1), truncate, return the
        discarded squared-singular-value weight."""
        i = bond
        if self.center < i:
            self.move_center_to(i)
        elif self.center > i + 1:
            self.move_center_to(i + 1)
        theta = np.tensordot(self.tensors[i], self.tensors[i + 1],
                             axes=(2, 0))  # vL pL pR vR
        chi_l, dl, dr, chi_r = theta.shape
        theta = np.tensordot(gate4, theta, axes=([2, 3], [1, 2]))  # pL pR vL vR
        theta = theta.transpose(2, 0, 1, 3).reshape(chi_l * dl, dr * chi_r)
        m, n = theta.shape
        # rank-revealing split via the Gram matrix of the smaller side: its
        # eigenvalues are the squared singular values, which is exactly what
        # the truncation policy consumes, and the discarded weight follows
        # from the trace without the discarded eigenpairs
        if m <= n:
            gram = theta @ theta.conj().T
        else:
            gram = theta.conj().T @ theta
        lam, vecs, trace = _top_spectrum(gram, min(self.chi_max, *gram.shape))
        k, discarded = self._rank(lam, trace)
        vk = vecs[:, :k]
        if m <= n:
            self.tensors[i] = vk.reshape(chi_l, dl, k)
            self.tensors[i + 1] = (vk.conj().T @ theta).reshape(k, dr, chi_r)
            self.center = i + 1
        else:
            self.tensors[i + 1] = vk.conj().T.reshape(k, dr, chi_r)
            self.tensors[i] = (theta @ vk).reshape(chi_l, dl, k)
            self.center = i
        self.bond_spectra[i] = np.sqrt(lam[:k])
        self.cumulative_discarded_weight += discarded
        return discarded

    def _rank(self, lam_desc: np.ndarray, trace: float) -> tuple[int, float]:
        """Keep count under the policy min(chi_max, smallest chi with relative
        discarded weight below trunc_tol); returns (k, discarded weight)."""
        if trace <= 0.0:
            return 1, 0.0
        kept = np.cumsum(lam_desc)
        discard_after = np.maximum(trace - kept, 0.0)
        budget = self.trunc_tol * trace
        small = np.nonzero(discard_after <= budget)[0]
        k = int(small[0]) + 1 if small.size else len(lam_desc)
        k = max(1, min(k, len(lam_desc)))
        return k, float(discard_after[k - 1])


# ---------------------------------------------------------------------------
# Construction
# ---------------------------------------------------------------------------

def product_state(lat: LatticeHamiltonian, system_vector: np.ndarray,
                  chi_max: int = 10**9, trunc_tol: float = 0.0) -> MPSState:
    """Product state: chains in the boson vacuum, system block as given."""
    v = np.asarray(system_vector, dtype=complex)
    if v.shape != (2,):
        raise DimensionMismatch("system vector must have two amplitudes")
    v = v / np.linalg.norm(v)
    tensors = []
    for idx, site in enumerate(lat.sites):
        amp = v if site.kind == "system" else np.eye(site.dim, dtype=complex)[0]
        tensors.append(amp.reshape(1, site.dim, 1))
    return MPSState(tensors, lat.system_index, chi_max, trunc_tol)


def init_vacuum(lat: LatticeHamiltonian, excited_site: int,
                chi_max: int = 10**9, trunc_tol: float = 0.0) -> MPSState:
    """Initial excitation on system site 1 or 2, chains in the vacuum."""
    if excited_site not in (1, 2):
        raise DomainError(f"excited_site must be 1 or 2, got {excited_site}")
    return product_state(lat, np.eye(2)[excited_site - 1], chi_max, trunc_tol)


# ---------------------------------------------------------------------------
# Observables
# ---------------------------------------------------------------------------

def measure_local(psi: MPSState, op: np.ndarray, entry: int) -> complex:
    """Exact local expectation with the center moved to `entry` (raw, i.e.
    not divided by the truncation-depleted norm)."""
    return psi.expectation(op, entry)


def bond_entropy(psi: MPSState, bond: int) -> float:
    """Von Neumann entropy -sum p ln p of the normalized bond spectrum."""
    if not 0 <= bond < psi.n_entries - 1:
        raise DomainError(f"bond {bond} outside lattice")
    s2 = psi.bond_spectra[bond] ** 2
    total = s2.sum()
    if total <= 0.0:
        return 0.0
    p = s2 / total
    p = p[p > 1e-300]
    return float(max(0.0, -(p * np.log(p)).sum()))


def energy_expectation(lat: LatticeHamiltonian, psi: MPSState) -> float:
    """Sum of on-site and bond expectations, cm^-1."""
    if psi.dims != lat.dims:
        raise DimensionMismatch("state and lattice dimensions differ")
    total = 0.0 + 0.0j
    for i, site in enumerate(lat.sites):
        total += psi.expectation(site.onsite, i)
    for i, h in enumerate(lat.bonds):
        total += psi.two_site_expectation(h, i)
    return float(total.real)


# ---------------------------------------------------------------------------
# Trotter gates
# ---------------------------------------------------------------------------

def _bond_hamiltonians(lat: LatticeHamiltonian) -> list[np.ndarray]:
    """Two-site blocks: bond term plus the adjacent on-site terms, each split
    half/half between its two bonds (fully at the lattice ends)."""
    n = lat.n_entries
    blocks = []
    for i in range(n - 1):
        dl, dr = lat.sites[i].dim, lat.sites[i + 1].dim
        wl = 1.0 if i == 0 else 0.5
        wr = 1.0 if i + 1 == n - 1 else 0.5
        h = (lat.bonds[i]
             + wl * np.kron(lat.sites[i].onsite, np.eye(dr))
             + wr * np.kron(np.eye(dl), lat.sites[i + 1].onsite))
        blocks.append(h)
    return blocks


def _gates(blocks: list[np.ndarray], dims: tuple[int, ...],
           dt_ps: float) -> list[np.ndarray]:
    """exp(-i h dt) per bond, reshaped to (pL, pR, pL', pR')."""
    gates = []
    for i, h in enumerate(blocks):
        lam, vec = np.linalg.eigh(h)
        u = (vec * np.exp(-1j * lam * CM1_TO_RAD_PER_PS * dt_ps)) @ vec.conj().T
        dl, dr = dims[i], dims[i + 1]
        gates.append(u.reshape(dl, dr, dl, dr))
    return gates


# ---------------------------------------------------------------------------
# Evolution
# ---------------------------------------------------------------------------

class _Engine:
    def __init__(self, lat: LatticeHamiltonian, psi: MPSState,
                 cfg: EvolutionConfig):
        self.lat = lat
        self.psi = psi
        self.cfg = cfg
        psi.chi_max = cfg.chi_max
        psi.trunc_tol = cfg.trunc_tol
        blocks = _bond_hamiltonians(lat)
        dims = lat.dims
        self.full = _gates(blocks, dims, cfg.dt)
        self.half = (_gates(blocks, dims, 0.5 * cfg.dt)
                     if cfg.trotter_order == 2 else None)
        self.even = list(range(0, lat.n_entries - 1, 2))
        self.odd = list(range(1, lat.n_entries - 1, 2))
        # entries outside [lo, hi] are still exact vacuum products; chain-only
        # gates annihilate the vacuum, so skipping them is exact.  Same-parity
        # gates act on disjoint pairs, so the window grows by at most one
        # entry per layer, tracking the TEBD light cone.
        self.lo = lat.system_index
        self.hi = lat.system_index
        self.step_discard = 0.0

    def _layer(self, bonds: list[int], gates: list[np.ndarray]):
        for i in bonds:
            if i + 1 < self.lo or i > self.hi:
                continue
            self.step_discard += self.psi.apply_two_site(gates[i], i)
            self.lo = min(self.lo, i)
            self.hi = max(self.hi, i + 1)

    def check_abort(self, t_now: float):
        if self.step_discard > self.cfg.abort_discard:
            raise TruncationOverflow(
                f"discarded weight {self.step_discard:.3e} in one step at "
                f"t={t_now:.4f} ps exceeds abort threshold "
                f"{self.cfg.abort_discard:.3e}; raise chi_max or trunc_tol")
        self.step_discard = 0.0

    def run_block(self, n_steps: int, t_start: float):
        """Advance n_steps with the symmetric-step halves of adjacent steps
        merged (order 2) or plain even/odd layers (order 1)."""
        if self.cfg.trotter_order == 1:
            for k in range(n_steps):
                self._layer(self.even, self.full)
                self._layer(self.odd, self.full)
                self.check_abort(t_start + (k + 1) * self.cfg.dt)
            return
        self._layer(self.even, self.half)
        for k in range(n_steps):
            self._layer(self.odd, self.full)
            if k < n_steps - 1:
                self._layer(self.even, self.full)
            else:
                self._layer(self.even, self.half)
            self.check_abort(t_start + (k + 1) * self.cfg.dt)


def tebd_evolve(lat: LatticeHamiltonian, psi0: MPSState,
                cfg: EvolutionConfig) -> Trajectory:
    """Trotterized real-time evolution with measurements every
    `measure_stride` steps (plus t = 0 and the final time)."""
    if psi0.dims != lat.dims:
        raise DimensionMismatch(
            f"state dims {psi0.dims} do not match lattice dims {lat.dims}")
    psi = psi0.copy()
    engine = _Engine(lat, psi, cfg)

    sys_idx = lat.system_index
    number_ops = {d: np.diag(np.arange(d, dtype=float)) for d in set(lat.dims)}

    times, p1s, p2s, rec, imc, smax, disc = [], [], [], [], [], [], []
    occ_rows = [] if cfg.track_occupations else None

    def record(t_now: float):
        p1 = psi.expectation(P_SITE1, sys_idx).real
        p2 = psi.expectation(P_SITE2, sys_idx).real
        c12 = psi.expectation(COHERENCE_12, sys_idx)
        times.append(t_now)
        p1s.append(p1)
        p2s.append(p2)
        rec.append(c12.real)
        imc.append(c12.imag)
        smax.append(max((bond_entropy(psi, b) for b in range(psi.n_entries - 1)),
                        default=0.0))
        disc.append(psi.cumulative_discarded_weight)
        if occ_rows is not None:
            row = [psi.expectation(number_ops[lat.sites[i].dim], i).real
                   if lat.sites[i].kind != "system" else np.nan
                   for i in range(lat.n_entries)]
            occ_rows.append(row)

    record(0.0)
    n_steps = cfg.n_steps
    done = 0
    while done < n_steps:
        block = min(cfg.measure_stride, n_steps - done)
        engine.run_block(block, done * cfg.dt)
        done += block
        record(done * cfg.dt)

    return Trajectory(
        times=np.array(times),
        p_site1=np.array(p1s),
        p_site2=np.array(p2s),
        re_coherence=np.array(rec),
        im_coherence=np.array(imc),
        max_bond_entropy=np.array(smax),
        discarded_weight=np.array(disc),
        occupations=np.array(occ_rows) if occ_rows is not None else None,
    )
