"""Shared lattice fixtures for the engine tests."""

import numpy as np
import pytest

from bathchain.chain import ChainParams, assemble_lattice, build_chain, dimer
from bathchain.orthopoly import measure_to_recurrence
from bathchain.specdens import overdamped_brownian, to_unit_measure


def make_obo_lattice(lam=100.0, gamma=53.0, omega_c=None, j=100.0, eps1=100.0,
                     eps2=0.0, n_chain=2, local_dim=3):
    """Dimer with overdamped-Brownian baths mapped to short chains."""
    dens = overdamped_brownian(lam, gamma, omega_c)
    rc = measure_to_recurrence(to_unit_measure(dens), n_chain + 1)
    c = build_chain(rc, dens.omega_c, n_chain)
    return assemble_lattice(dimer(j, eps1, eps2), c, c, local_dim)


def make_decoupled_lattice(j=100.0, eps1=100.0, eps2=0.0, local_dim=3):
    """Chains present but eta = 0: the dimer evolves freely (Rabi limit)."""
    c = ChainParams(np.array([500.0]), np.zeros(0), 0.0, 1000.0, 1)
    return assemble_lattice(dimer(j, eps1, eps2), c, c, local_dim)


def make_single_mode_lattice(eps0=180.0, eta=60.0, eps1=100.0, eps2=0.0,
                             local_dim=12):
    """J = 0 dimer; site 1 sees one oscillator, site 2 a decoupled spectator."""
    c1 = ChainParams(np.array([eps0]), np.zeros(0), eta, 1000.0, 1)
    c2 = ChainParams(np.array([eps0]), np.zeros(0), 0.0, 1000.0, 1)
    return assemble_lattice(dimer(0.0, eps1, eps2), c1, c2, local_dim)


@pytest.fixture(scope="session")
def tiny_lattice():
    return make_obo_lattice()
