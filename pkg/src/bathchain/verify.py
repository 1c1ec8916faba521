"""Cross-oracle verification suite.

Every check pairs a production path with an independent route: closed forms
vs quadrature+tridiagonalization, Stieltjes vs Lanczos vs high-precision
moments, TEBD vs dense exact propagation, Trotter-order scaling, asymptotic
universality and the semicircular terminal environment.  The CLI verify mode
runs all of them and fails loudly on any miss.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .chain import (
    assemble_lattice,
    asymptote_convergence,
    build_chain,
    dimer,
    residual_decay_exponent,
    semicircle_deviation,
    terminal_spectral_density,
)
from .mps import EvolutionConfig, init_vacuum, tebd_evolve
from .oracle import dense_build, dense_evolve, dense_product_state, rabi_analytic
from .orthopoly import (
    jacobi_recurrence,
    lanczos_rkpw,
    little_q_jacobi_chain,
    log_discretize,
    log_measure,
    measure_to_recurrence,
    moment_oracle,
    quadrature_discretize,
    stieltjes,
)
from .specdens import overdamped_brownian, power_law, to_unit_measure


@dataclass
class VerifyCheck:
    name: str
    passed: bool
    measured: float
    tolerance: str
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        extra = f"  ({self.detail})" if self.detail else ""
        return (f"{status} {self.name}: measured={self.measured:.3e} "
                f"tolerance={self.tolerance}{extra}")


def tiny_crossval_lattice(local_dim: int = 3):
    """Canonical engine cross-validation instance: a gently coupled bath
    (keeps the dt = 1 fs Trotter error well under the 1e-5 gate) with fully
    resolvable dynamics; 2 chain sites per bath."""
    dens = overdamped_brownian(8.0, 25.0, 250.0)
    rc = measure_to_recurrence(to_unit_measure(dens), 3)
    c = build_chain(rc, dens.omega_c, 2)
    return assemble_lattice(dimer(40.0, 40.0, 0.0), c, c, local_dim)


def _rel_err(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.max(np.abs(a - b) / np.maximum(np.abs(b), 1e-300)))


def check_mapping_analytic(s: float = 1.0, n: int = 101) -> VerifyCheck:
    m = to_unit_measure(power_law(0.1, s, 1000.0))
    rc_num = measure_to_recurrence(m, n)
    rc_an = jacobi_recurrence(s, n, mass=m.total_mass)
    err = max(_rel_err(rc_num.alpha, rc_an.alpha), _rel_err(rc_num.beta, rc_an.beta))
    return VerifyCheck("mapping_analytic_vs_numeric", err < 1e-10, err, "< 1e-10",
                       f"power law s={s}, n<={n}")


def check_stieltjes_vs_lanczos() -> VerifyCheck:
    m = to_unit_measure(power_law(1.0, 1.0, 1.0))
    d = quadrature_discretize(m, 32, 24)
    rc_s = stieltjes(d, 60)
    rc_l = lanczos_rkpw(d, 60)
    err = max(_rel_err(rc_s.alpha, rc_l.alpha), _rel_err(rc_s.beta, rc_l.beta))
    return VerifyCheck("stieltjes_vs_lanczos", err < 1e-10, err, "< 1e-10")


def check_moment_oracle() -> VerifyCheck:
    m = to_unit_measure(power_law(1.0, 3.0, 1.0))
    d = quadrature_discretize(m, 24, 12)
    mo = moment_oracle(d, 6)
    lz = lanczos_rkpw(d, 6)
    err = max(_rel_err(mo.alpha, lz.alpha), _rel_err(mo.beta, lz.beta))
    return VerifyCheck("moments_vs_lanczos", err < 1e-10, err, "< 1e-10",
                       "40-digit Hankel determinants, n<=6")


def check_little_q() -> VerifyCheck:
    log = log_discretize(0.1, 1.0, 1.0, 2.0, 31)
    rc_q = little_q_jacobi_chain(log)
    rc_l = lanczos_rkpw(log_measure(log, 201), 31)
    err = max(_rel_err(rc_q.alpha, rc_l.alpha), _rel_err(rc_q.beta, rc_l.beta))
    return VerifyCheck("little_q_vs_lanczos", err < 1e-8, err, "< 1e-8",
                       "Delta=2, s=1, n<=30")


def check_rabi(dt: float = 1e-3) -> VerifyCheck:
    from .chain import ChainParams

    c = ChainParams(np.array([500.0]), np.zeros(0), 0.0, 1000.0, 1)
    lat = assemble_lattice(dimer(100.0, 100.0, 0.0), c, c, 3)
    cfg = EvolutionConfig(dt=dt, t_final=0.5, trotter_order=2, chi_max=16,
                          trunc_tol=0.0, local_dim=3,
                          measure_stride=max(1, int(round(0.01 / dt))))
    traj = tebd_evolve(lat, init_vacuum(lat, 1), cfg)
    err = float(np.max(np.abs(traj.p_site1 - rabi_analytic(100.0, 100.0,
                                                           traj.times))))
    return VerifyCheck("rabi_zero_coupling", err < 1e-6, err, "< 1e-6")


def _tebd_vs_dense_error(lat, dt: float, t_final: float = 0.5):
    ds = dense_build(lat)
    stride = max(1, int(round(0.01 / dt)))
    cfg = EvolutionConfig(dt=dt, t_final=t_final, trotter_order=2, chi_max=999,
                          trunc_tol=0.0, local_dim=3, measure_stride=stride)
    traj = tebd_evolve(lat, init_vacuum(lat, 1), cfg)
    ref = dense_evolve(ds, dense_product_state(ds, [1.0, 0.0]), traj.times)
    return float(np.max(np.abs(traj.p_site1 - ref.p_site1))), traj


def check_engine_cross(dt: float = 1e-3) -> tuple[VerifyCheck, VerifyCheck,
                                                  VerifyCheck]:
    """TEBD vs dense, Trotter scaling under dt halving, and conservation."""
    lat = tiny_crossval_lattice()
    err, traj = _tebd_vs_dense_error(lat, dt)
    err_half, _ = _tebd_vs_dense_error(lat, 0.5 * dt)
    ratio = err / max(err_half, 1e-300)
    cross = VerifyCheck("tebd_vs_dense", err < 1e-5, err, "< 1e-5",
                        f"dt={dt:g} ps, 2 chain sites per bath, d=3")
    scaling = VerifyCheck("trotter_scaling", 3.0 < ratio < 5.0, ratio,
                          "in [3, 5]", f"dt={dt:g} -> {0.5 * dt:g} ps")
    dev = float(np.max(np.abs(traj.p_site1 + traj.p_site2 - 1.0)
                       - traj.discarded_weight))
    conserve = VerifyCheck("excitation_conservation", dev < 1e-8, dev,
                           "< 1e-8 + discarded weight")
    return cross, scaling, conserve


def check_asymptotics() -> list[VerifyCheck]:
    out = []
    for s in (0.0, 1.0, 3.0):
        c = build_chain(jacobi_recurrence(s, 102), 1000.0, 101)
        rep = asymptote_convergence(c, 0.05)
        p = residual_decay_exponent(rep, 20, 100)
        out.append(VerifyCheck(f"asymptote_exponent_s{s:g}",
                               abs(p - 2.0) < 0.1, p, "2.0 +- 0.1"))
    dens = overdamped_brownian(100.0, 53.0)
    m = to_unit_measure(dens)
    c = build_chain(measure_to_recurrence(m, 101), dens.omega_c, 100)
    rep = asymptote_convergence(c, 0.02)
    out.append(VerifyCheck("asymptote_obo", rep.n_star < 60, float(rep.n_star),
                           "n_star < 60", "universal eps/2, omega_c/4 limits"))
    return out


def check_semicircle() -> VerifyCheck:
    from .chain import ChainParams

    length = 30
    c = ChainParams(np.full(length, 500.0), np.full(length, 250.0), 100.0,
                    1000.0, length)
    freqs, strength = terminal_spectral_density(c, length - 1, 2000)
    dev = semicircle_deviation(freqs, strength, c.omega_c)
    return VerifyCheck("terminal_semicircle", dev < 0.05, dev, "< 5%",
                       "2000 tail modes")


def run_verification(dt: float = 1e-3) -> list[VerifyCheck]:
    checks = [
        check_mapping_analytic(),
        check_stieltjes_vs_lanczos(),
        check_moment_oracle(),
        check_little_q(),
        check_rabi(dt),
    ]
    checks.extend(check_engine_cross(dt))
    checks.extend(check_asymptotics())
    checks.append(check_semicircle())
    return checks
