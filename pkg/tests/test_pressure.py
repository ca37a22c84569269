import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nce.errors import DomainError, GuardError
from nce.pressure import (
    LocalHamiltonian,
    chain_diagonal,
    chain_hamiltonian,
    chain_log_partition,
    finite_pressure,
    gibbs_state,
    ising_open_log_partition,
    ising_transfer_pressure,
    peierls_bogoliubov_check,
    pressure_fd,
    pressure_property_suite,
    random_density,
    shift_pressure_estimate,
    tangent_check,
    variational_gap,
    variational_sup_check,
)

from .conftest import random_hermitian


def test_pressure_fd_examples():
    assert abs(pressure_fd(np.zeros((3, 3))) - math.log(3)) < 1e-15
    assert abs(pressure_fd(np.diag([0.0, 1.0])) - math.log(1 + math.exp(-1))) < 1e-15
    # no overflow for large energies
    assert abs(pressure_fd(np.diag([-800.0, 0.0])) - 800.0) < 1e-12


def test_gibbs_large_energy():
    g = gibbs_state(np.diag([50.0, 0.0]))
    assert np.all(np.isfinite(g.density))
    assert abs(g.density[1, 1] - 1 / (1 + math.exp(-50))) < 1e-15
    assert abs(g.log_partition - math.log(1 + math.exp(-50))) < 1e-15


def test_gibbs_gap_is_zero(rng):
    h = random_hermitian(4, rng)
    assert variational_gap(gibbs_state(h).density, h) < 1e-10


@given(st.integers(0, 2**31 - 1))
def test_variational_gap_nonnegative(seed):
    rng = np.random.default_rng(seed)
    h = random_hermitian(4, rng)
    rho = random_density(4, rng)
    assert variational_gap(rho, h) >= 0


def test_variational_sup_check(rng):
    h = random_hermitian(3, rng)
    rep = variational_sup_check(h, samples=50)
    assert rep["sampled_max"] <= rep["pressure"] + 1e-12
    assert rep["gibbs_gap"] < 1e-10


def test_peierls_bogoliubov(rng):
    h = random_hermitian(4, rng)
    equal = peierls_bogoliubov_check(h, h)
    assert equal["ok"] and abs(equal["lhs"] - equal["rhs"]) < 1e-14
    strict = peierls_bogoliubov_check(h, h + np.eye(4))
    assert strict["ok"] and strict["lhs"] < strict["rhs"]
    with pytest.raises(DomainError):
        peierls_bogoliubov_check(h, h - np.eye(4))


@given(st.integers(0, 2**31 - 1))
def test_tangent(seed):
    rng = np.random.default_rng(seed)
    assert tangent_check(random_hermitian(4, rng), random_hermitian(4, rng))["ok"]


def test_zero_hamiltonian_constant():
    seq = shift_pressure_estimate(LocalHamiltonian.zero(), 10)
    for k, v in zip(seq.horizons, seq.values):
        # k + 1 sites, normalization 1/(k + 1)
        assert abs(v - math.log(2)) < 1e-14


def test_single_site_diagonal():
    lh = LocalHamiltonian(2, 1, np.diag([0.0, 1.0]))
    for k in (0, 3, 9):
        assert abs(finite_pressure(lh, k) - math.log(1 + math.exp(-1))) < 1e-13


def test_single_site_nondiagonal_uses_spectrum():
    h1 = np.array([[0.3, 0.2 - 0.1j], [0.2 + 0.1j, -0.5]])
    lh = LocalHamiltonian(2, 1, h1)
    assert abs(finite_pressure(lh, 12) - pressure_fd(h1)) < 1e-13
    # dense path agrees at a small horizon
    assert abs(pressure_fd(chain_hamiltonian(lh, 3)) / 4 - pressure_fd(h1)) < 1e-13


@pytest.mark.parametrize("k", [1, 4, 10, 12])
def test_ising_matches_open_transfer(k):
    lh = LocalHamiltonian.ising(1.0)
    assert abs(finite_pressure(lh, k) - ising_open_log_partition(1.0, k + 2) / (k + 1)) < 1e-12


def test_ising_transfer_value():
    assert abs(ising_transfer_pressure(1.0) - math.log(2 * math.cosh(1.0))) < 1e-14


def test_diagonal_and_dense_agree(rng):
    term = np.diag(rng.standard_normal(4))
    lh = LocalHamiltonian(2, 2, term)
    for periodic in (False, True):
        dense = chain_hamiltonian(lh, 4, periodic)
        assert np.allclose(np.diag(dense).real, chain_diagonal(lh, 4, periodic))


def test_nondiagonal_chain_log_partition(rng):
    lh = LocalHamiltonian(2, 2, random_hermitian(4, rng))
    assert abs(chain_log_partition(lh, 3) - pressure_fd(chain_hamiltonian(lh, 3))) < 1e-12


def test_suite_ising():
    rep = pressure_property_suite(LocalHamiltonian.ising(), k=10)
    assert rep.ok, rep.to_json()
    assert rep.checks["coboundary"]["bound"] <= 0.2


def test_suite_nondiagonal(rng):
    lh = LocalHamiltonian(2, 2, random_hermitian(4, rng))
    rep = pressure_property_suite(lh, k=4, seed=2)
    assert rep.ok, rep.to_json()


def test_guards():
    with pytest.raises(GuardError):
        finite_pressure(LocalHamiltonian.ising(), 13)
    with pytest.raises(GuardError):
        chain_hamiltonian(LocalHamiltonian(2, 2, np.ones((4, 4))), 10)
    with pytest.raises(DomainError):
        LocalHamiltonian(2, 2, np.eye(2))


def test_periodic_k_min():
    seq = shift_pressure_estimate(LocalHamiltonian.ising(), 6, periodic=True)
    assert seq.horizons[0] == 1 and seq.boundary == "periodic"
    assert seq.aitken is not None
