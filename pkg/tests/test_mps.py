"""Tests for the TEBD engine: canonical form, truncation accounting, and
agreement with the dense oracle."""

import numpy as np
import pytest

from bathchain.errors import (
    DimensionMismatch,
    DomainError,
    TruncationOverflow,
)
from bathchain.mps import (
    COHERENCE_12,
    P_SITE1,
    P_SITE2,
    EvolutionConfig,
    MPSState,
    _Engine,
    bond_entropy,
    energy_expectation,
    init_vacuum,
    measure_local,
    product_state,
    tebd_evolve,
)
from bathchain.oracle import dense_build, dense_evolve, dense_product_state, rabi_analytic
from bathchain.units import CM1_TO_RAD_PER_PS

from conftest import make_decoupled_lattice, make_obo_lattice


class TestInitVacuum:
    def test_excited_site_population(self, tiny_lattice):
        psi = init_vacuum(tiny_lattice, 1)
        sys_idx = tiny_lattice.system_index
        assert measure_local(psi, P_SITE1, sys_idx) == pytest.approx(1.0)
        assert measure_local(psi, P_SITE2, sys_idx) == pytest.approx(0.0)
        psi2 = init_vacuum(tiny_lattice, 2)
        assert measure_local(psi2, P_SITE2, sys_idx) == pytest.approx(1.0)

    def test_vacuum_occupations(self, tiny_lattice):
        psi = init_vacuum(tiny_lattice, 1)
        num = np.diag([0.0, 1.0, 2.0])
        for entry in (0, 1, 3, 4):
            assert measure_local(psi, num, entry) == pytest.approx(0.0)

    def test_normalized(self, tiny_lattice):
        assert init_vacuum(tiny_lattice, 1).norm_sq() == pytest.approx(1.0)

    def test_bad_site(self, tiny_lattice):
        with pytest.raises(DomainError):
            init_vacuum(tiny_lattice, 3)


class TestMeasureLocal:
    def test_hermitian_gives_real(self, tiny_lattice):
        cfg = EvolutionConfig(dt=1e-3, t_final=0.05, chi_max=20,
                              trunc_tol=1e-12, local_dim=3, measure_stride=50)
        psi = init_vacuum(tiny_lattice, 1)
        tebd_evolve(tiny_lattice, psi, cfg)
        val = measure_local(psi, np.diag([1.0, 0.0]), tiny_lattice.system_index)
        assert abs(val.imag) < 1e-12

    def test_dimension_mismatch(self, tiny_lattice):
        psi = init_vacuum(tiny_lattice, 1)
        with pytest.raises(DimensionMismatch):
            measure_local(psi, np.eye(4), 0)


class TestBondEntropy:
    def test_product_state(self, tiny_lattice):
        psi = init_vacuum(tiny_lattice, 1)
        for b in range(psi.n_entries - 1):
            assert bond_entropy(psi, b) == 0.0

    def test_maximally_entangled_cut(self):
        # |00> + |11> across a single bond, refreshed through the gate path
        t0 = np.zeros((1, 2, 2), dtype=complex)
        t0[0, 0, 0] = t0[0, 1, 1] = 1.0
        t1 = np.zeros((2, 2, 1), dtype=complex)
        t1[0, 0, 0] = t1[1, 1, 0] = 1.0 / np.sqrt(2.0)
        psi = MPSState([t0, t1], center=1)
        psi.apply_two_site(np.eye(4).reshape(2, 2, 2, 2), 0)
        assert bond_entropy(psi, 0) == pytest.approx(np.log(2.0), rel=1e-12)

    def test_bounded_by_log_chi(self, tiny_lattice):
        cfg = EvolutionConfig(dt=1e-3, t_final=0.1, chi_max=7, trunc_tol=0.0,
                              local_dim=3, measure_stride=100)
        psi = init_vacuum(tiny_lattice, 1)
        eng = _Engine(tiny_lattice, psi, cfg)
        eng.run_block(100, 0.0)
        for b in range(psi.n_entries - 1):
            chi = psi.bond_spectra[b].size
            assert bond_entropy(psi, b) <= np.log(max(chi, 2)) + 1e-12


class TestAgainstOracles:
    def test_rabi_limit(self):
        lat = make_decoupled_lattice(j=100.0, eps1=100.0, eps2=0.0)
        cfg = EvolutionConfig(dt=1e-3, t_final=0.5, trotter_order=2,
                              chi_max=99, trunc_tol=0.0, local_dim=3,
                              measure_stride=5)
        traj = tebd_evolve(lat, init_vacuum(lat, 1), cfg)
        ref = rabi_analytic(100.0, 100.0, traj.times)
        assert np.max(np.abs(traj.p_site1 - ref)) < 1e-6

    def test_tiny_lattice_vs_dense(self, tiny_lattice):
        ds = dense_build(tiny_lattice)
        times = np.arange(0.0, 0.5001, 0.01)
        ref = dense_evolve(ds, dense_product_state(ds, [1.0, 0.0]), times)
        cfg = EvolutionConfig(dt=1e-3, t_final=0.5, trotter_order=2,
                              chi_max=999, trunc_tol=0.0, local_dim=3,
                              measure_stride=10)
        traj = tebd_evolve(tiny_lattice, init_vacuum(tiny_lattice, 1), cfg)
        assert np.allclose(traj.times, times)
        # strongly coupled instance: pure Trotter error at dt = 1 fs
        assert np.max(np.abs(traj.p_site1 - ref.p_site1)) < 5e-4

    def test_trotter_second_order_scaling(self, tiny_lattice):
        ds = dense_build(tiny_lattice)
        times = np.arange(0.0, 0.2001, 0.02)
        ref = dense_evolve(ds, dense_product_state(ds, [1.0, 0.0]), times)
        errs = []
        for dt in (1e-3, 5e-4):
            cfg = EvolutionConfig(dt=dt, t_final=0.2, trotter_order=2,
                                  chi_max=999, trunc_tol=0.0, local_dim=3,
                                  measure_stride=int(round(0.02 / dt)))
            traj = tebd_evolve(tiny_lattice, init_vacuum(tiny_lattice, 1), cfg)
            errs.append(np.max(np.abs(traj.p_site1 - ref.p_site1)))
        assert 3.0 < errs[0] / errs[1] < 5.0

    def test_first_order_is_worse(self, tiny_lattice):
        ds = dense_build(tiny_lattice)
        times = np.arange(0.0, 0.1001, 0.02)
        ref = dense_evolve(ds, dense_product_state(ds, [1.0, 0.0]), times)
        errs = {}
        for order in (1, 2):
            cfg = EvolutionConfig(dt=1e-3, t_final=0.1, trotter_order=order,
                                  chi_max=999, trunc_tol=0.0, local_dim=3,
                                  measure_stride=20)
            traj = tebd_evolve(tiny_lattice, init_vacuum(tiny_lattice, 1), cfg)
            errs[order] = np.max(np.abs(traj.p_site1 - ref.p_site1))
        assert errs[1] > 5.0 * errs[2]


class TestConservationAndNorm:
    def test_truncated_run_accounting(self):
        lat = make_obo_lattice(lam=100.0, gamma=53.0, n_chain=6, local_dim=4)
        cfg = EvolutionConfig(dt=1e-3, t_final=0.15, chi_max=6, trunc_tol=1e-10,
                              local_dim=4, measure_stride=15)
        traj = tebd_evolve(lat, init_vacuum(lat, 1), cfg)
        cum = traj.discarded_weight
        assert cum[-1] > 0.0  # chi_max=6 actually truncates here
        assert np.all(np.diff(cum) >= 0.0)
        deviation = np.abs(traj.p_site1 + traj.p_site2 - 1.0)
        assert np.all(deviation <= 1e-8 + cum)

    def test_norm_deficit_bounded_by_discarded_weight(self):
        lat = make_obo_lattice(lam=100.0, gamma=53.0, n_chain=6, local_dim=4)
        cfg = EvolutionConfig(dt=1e-3, t_final=0.15, chi_max=6, trunc_tol=1e-10,
                              local_dim=4, measure_stride=150)
        psi = init_vacuum(lat, 1)
        eng = _Engine(lat, psi, cfg)
        eng.run_block(150, 0.0)
        deficit = 1.0 - psi.norm_sq()
        assert -1e-12 <= deficit <= psi.cumulative_discarded_weight * (1 + 1e-6) + 1e-12

    def test_truncation_overflow_raised(self):
        lat = make_obo_lattice(lam=400.0, gamma=53.0, n_chain=4, local_dim=5)
        cfg = EvolutionConfig(dt=1e-3, t_final=0.2, chi_max=1, trunc_tol=1e-10,
                              local_dim=5, measure_stride=10,
                              abort_discard=1e-6)
        with pytest.raises(TruncationOverflow):
            tebd_evolve(lat, init_vacuum(lat, 1), cfg)


class TestCanonicalForm:
    def test_audit_after_sweeps(self, tiny_lattice):
        cfg = EvolutionConfig(dt=1e-3, t_final=0.1, chi_max=10, trunc_tol=1e-10,
                              local_dim=3, measure_stride=100)
        psi = init_vacuum(tiny_lattice, 1)
        eng = _Engine(tiny_lattice, psi, cfg)
        eng.run_block(100, 0.0)
        assert psi.canonical_defect() < 1e-10

    def test_audit_after_center_moves(self, tiny_lattice):
        cfg = EvolutionConfig(dt=1e-3, t_final=0.05, chi_max=10,
                              trunc_tol=1e-10, local_dim=3, measure_stride=50)
        psi = init_vacuum(tiny_lattice, 1)
        eng = _Engine(tiny_lattice, psi, cfg)
        eng.run_block(50, 0.0)
        for j in (0, psi.n_entries - 1, psi.n_entries // 2):
            psi.move_center_to(j)
            assert psi.canonical_defect() < 1e-10


class TestLightCone:
    def test_occupation_front_is_causal(self):
        lat = make_obo_lattice(lam=100.0, gamma=53.0, n_chain=20, local_dim=4)
        cfg = EvolutionConfig(dt=1e-3, t_final=0.12, chi_max=12,
                              trunc_tol=1e-12, local_dim=4, measure_stride=20,
                              track_occupations=True)
        traj = tebd_evolve(lat, init_vacuum(lat, 1), cfg)
        omega_c = 20.0 * 53.0
        v = 0.5 * omega_c * CM1_TO_RAD_PER_PS  # ballistic front, sites per ps
        sys_idx = lat.system_index
        # the 1e-8 contour runs ahead of the main front (dispersive Bessel
        # precursor); a J_n(omega_c t/2)^2 ~ 1e-8 estimate puts its onset past
        # 0.4 * n/v for n >= 12, checked here with margin at 0.35
        for row, t in zip(traj.occupations, traj.times):
            for entry in range(lat.n_entries):
                if entry == sys_idx:
                    continue
                site = abs(entry - sys_idx) - 1  # chain site index from head
                if site >= 12 and t < 0.35 * site / v:
                    assert row[entry] < 1e-8

    def test_occupation_eventually_arrives(self):
        lat = make_obo_lattice(lam=100.0, gamma=53.0, n_chain=8, local_dim=4)
        cfg = EvolutionConfig(dt=1e-3, t_final=0.1, chi_max=12, trunc_tol=1e-12,
                              local_dim=4, measure_stride=100,
                              track_occupations=True)
        traj = tebd_evolve(lat, init_vacuum(lat, 1), cfg)
        head = lat.system_index - 1
        assert traj.occupations[-1][head] > 1e-4


class TestEnergyExpectation:
    def test_initial_energy_is_excited_site_energy(self, tiny_lattice):
        psi = init_vacuum(tiny_lattice, 1)
        assert energy_expectation(tiny_lattice, psi) == pytest.approx(100.0,
                                                                      abs=1e-10)

    def test_drift_bounded(self, tiny_lattice):
        cfg = EvolutionConfig(dt=1e-3, t_final=0.25, chi_max=999, trunc_tol=0.0,
                              local_dim=3, measure_stride=250)
        psi = init_vacuum(tiny_lattice, 1)
        e0 = energy_expectation(tiny_lattice, psi)
        eng = _Engine(tiny_lattice, psi, cfg)
        eng.run_block(250, 0.0)
        e1 = energy_expectation(tiny_lattice, psi)
        assert abs(e1 - e0) / abs(e0) < 1e-3

    def test_real_output(self, tiny_lattice):
        psi = init_vacuum(tiny_lattice, 2)
        assert isinstance(energy_expectation(tiny_lattice, psi), float)


def test_product_state_rejects_bad_vector(tiny_lattice):
    with pytest.raises(DimensionMismatch):
        product_state(tiny_lattice, np.array([1.0, 0.0, 0.0]))


def test_evolve_rejects_mismatched_state(tiny_lattice):
    other = make_obo_lattice(local_dim=4)
    psi = init_vacuum(other, 1)
    cfg = EvolutionConfig(dt=1e-3, t_final=0.01, local_dim=4, measure_stride=10)
    with pytest.raises(DimensionMismatch):
        tebd_evolve(tiny_lattice, psi, cfg)
