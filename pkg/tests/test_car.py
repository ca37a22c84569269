import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nce.car import (
    MAX_MODES,
    SpectralSymbol,
    bogoliubov_entropy,
    build_car,
    dense,
    join_symbols,
    matrix_units,
    monomial_operator,
    product_state_on_units,
    quasifree_density,
    quasifree_eval,
)
from nce.errors import DomainError, GuardError

LOG2 = math.log(2)


def _random_one_particle(m, rng):
    z = rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))
    q, _ = np.linalg.qr(z)
    return q @ np.diag(rng.uniform(0, 1, m)) @ q.conj().T


def test_single_mode():
    car = build_car(1)
    assert np.allclose(dense(car.annihilators[0]), [[0, 1], [0, 0]])
    assert car.dim == 2


def test_relations_four_modes(rng):
    car = build_car(4)
    vecs = [rng.standard_normal(4) + 1j * rng.standard_normal(4) for _ in range(3)]
    d = car.relation_defects(vecs)
    assert d["anticommutator"] < 1e-12 and d["square"] < 1e-12


def test_combined_mode_is_annihilator():
    car = build_car(2)
    f = np.array([1, 1]) / math.sqrt(2)
    a = dense(car.a(f))
    ad = a.conj().T
    assert np.allclose(a @ ad + ad @ a, np.eye(4))
    assert np.allclose(a @ a, 0)


def test_antilinear():
    car = build_car(2)
    f = np.array([1.0, 0.0])
    assert np.allclose(dense(car.a(1j * f)), -1j * dense(car.a(f)))


@pytest.mark.parametrize("m", [1, 2, 3])
def test_matrix_units_generate_full_algebra(m):
    mu = matrix_units(build_car(m))
    assert all(v < 1e-12 for v in mu.defects().values())
    assert mu.generated_dimension() == 4**m


def test_build_guards():
    with pytest.raises(DomainError):
        build_car(0)
    with pytest.raises(GuardError):
        build_car(MAX_MODES + 1)


def test_quasifree_single_mode():
    car = build_car(1)
    a = np.array([[0.3]])
    f = np.array([1.0 + 0j])
    assert abs(quasifree_eval(car, a, [(True, f), (False, f)]) - 0.3) < 1e-14


def test_quasifree_unbalanced_is_zero(rng):
    car = build_car(2)
    a = _random_one_particle(2, rng)
    f = np.array([1.0, 0.5])
    assert quasifree_eval(car, a, [(True, f), (True, f), (False, f)]) == 0


def test_quasifree_requires_wick_order():
    car = build_car(1)
    f = np.array([1.0 + 0j])
    with pytest.raises(DomainError):
        quasifree_eval(car, np.array([[0.5]]), [(False, f), (True, f)])


def test_quasifree_rejects_out_of_range():
    with pytest.raises(DomainError):
        quasifree_eval(build_car(1), np.array([[1.5]]), [])


@given(st.integers(0, 2**31 - 1))
def test_quasifree_density_matches_determinant(seed):
    rng = np.random.default_rng(seed)
    m = 3
    car = build_car(m)
    a = _random_one_particle(m, rng)
    rho = quasifree_density(car, a)
    assert abs(np.trace(rho) - 1) < 1e-12
    vec = lambda: rng.standard_normal(m) + 1j * rng.standard_normal(m)
    f1, f2, g1, g2 = vec(), vec(), vec(), vec()
    mono = [(True, f2), (True, f1), (False, g1), (False, g2)]
    expected = quasifree_eval(car, a, mono)
    got = np.trace(rho @ monomial_operator(car, mono))
    assert abs(got - expected) < 1e-10 * max(1.0, abs(expected))


def test_product_state_on_units():
    rho = product_state_on_units([0.25, 0.5])
    assert np.allclose(np.diag(rho).real, np.kron([0.75, 0.25], [0.5, 0.5]))


def test_bogoliubov_constants():
    assert abs(bogoliubov_entropy(SpectralSymbol.constant(0.5)) - LOG2) < 1e-14
    assert abs(bogoliubov_entropy(SpectralSymbol.constant(0.5, 3)) - 3 * LOG2) < 1e-13
    assert bogoliubov_entropy(SpectralSymbol.constant(0.0)) == 0
    assert bogoliubov_entropy(SpectralSymbol.constant(0.5, 0)) == 0


def test_bogoliubov_half_on_subset():
    p = 0.3
    sym = SpectralSymbol(np.array([0.0, 2 * math.pi * p]), [np.array([0.5]), np.array([0.0])])
    assert abs(bogoliubov_entropy(sym) - p * LOG2) < 1e-13


def test_bogoliubov_panel_doubling():
    theta = np.linspace(0, 2 * math.pi, 17)[:-1]
    eigs = [np.array([0.5 + 0.4 * math.cos(t)]) for t in theta]
    sym = SpectralSymbol(theta, eigs)
    assert abs(bogoliubov_entropy(sym, 512) - bogoliubov_entropy(sym, 1024)) < 1e-8


def test_bogoliubov_disjoint_additivity():
    a = SpectralSymbol(np.array([0.0, 1.0]), [np.array([0.2]), np.array([0.7])])
    b = SpectralSymbol(np.array([0.0, 2.5]), [np.array([0.4, 0.9]), np.array([])])
    j = join_symbols(a, b)
    assert abs(bogoliubov_entropy(j) - bogoliubov_entropy(a) - bogoliubov_entropy(b)) < 1e-12


def test_bogoliubov_guards():
    with pytest.raises(DomainError):
        bogoliubov_entropy(SpectralSymbol.constant(0.5), 7)
    with pytest.raises(DomainError):
        SpectralSymbol(np.array([0.5]), [np.array([0.5])])
    with pytest.raises(DomainError):
        SpectralSymbol.constant(1.2)
    assert bogoliubov_entropy(SpectralSymbol(np.array([0.0]), [np.array([0.5])], infinite=True)) == math.inf
