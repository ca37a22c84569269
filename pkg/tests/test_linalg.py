import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nce.errors import DomainError
from nce.linalg import (
    TraceFunctional,
    as_hermitian,
    divided_differences,
    eigh,
    frechet_adjoint,
    jacobi_eigh,
    matrix_function,
    orthonormalize,
    support_projection,
    tau_two_norm,
)

from .conftest import random_hermitian, random_psd


def test_eigh_identity_and_pauli_x():
    np.testing.assert_allclose(eigh(np.eye(3)).eigenvalues, [1, 1, 1])
    np.testing.assert_allclose(eigh(np.array([[0, 1], [1, 0]])).eigenvalues, [-1, 1], atol=1e-15)


def test_eigh_round_trip_seed_42():
    h = random_hermitian(8, np.random.default_rng(42))
    assert np.max(np.abs(eigh(h).reconstruct() - h)) <= 1e-9


@pytest.mark.parametrize("n", [1, 2, 5, 16, 64])
def test_eigh_round_trip_sizes(n):
    h = random_hermitian(n, np.random.default_rng(n))
    dec = eigh(h)
    assert np.max(np.abs(dec.reconstruct() - h)) <= 1e-9 * max(1.0, np.max(np.abs(h)))
    assert np.all(np.diff(dec.eigenvalues) >= -1e-12)


@pytest.mark.parametrize("n", [2, 3, 6, 10])
def test_jacobi_matches_lapack(n):
    h = random_hermitian(n, np.random.default_rng(100 + n))
    dec = jacobi_eigh(h)
    np.testing.assert_allclose(dec.eigenvalues, np.linalg.eigvalsh(h), atol=1e-10)
    assert np.max(np.abs(dec.reconstruct() - h)) <= 1e-9


def test_non_hermitian_rejected_with_defect():
    with pytest.raises(DomainError, match="defect"):
        as_hermitian(np.array([[0, 1], [0, 0]]))


def test_eta_examples():
    np.testing.assert_allclose(matrix_function(np.eye(3), "eta"), 0, atol=1e-15)
    np.testing.assert_allclose(matrix_function(np.eye(2) / 2, "eta"), 0.5 * math.log(2) * np.eye(2), atol=1e-15)


def test_negative_eigenvalue_rejected_and_small_clamped():
    with pytest.raises(DomainError):
        matrix_function(np.diag([1.0, -1e-6]), "sqrt")
    np.testing.assert_allclose(matrix_function(np.diag([1.0, -1e-13]), "sqrt"), np.diag([1.0, 0.0]))
    with pytest.raises(DomainError):
        matrix_function(np.diag([1.0, 0.0]), "log")
    np.testing.assert_allclose(matrix_function(np.diag([math.e, 0.0]), "log", support=True), np.diag([1.0, 0.0]))


def test_unknown_function():
    with pytest.raises(DomainError):
        matrix_function(np.eye(2), "cosh")


@given(st.integers(1, 6), st.integers(0, 10_000))
def test_log_exp_round_trip(n, seed):
    x = random_psd(n, np.random.default_rng(seed), floor=0.1)
    back = matrix_function(matrix_function(x, "log"), "exp")
    assert np.max(np.abs(back - x)) <= 1e-8 * max(1.0, np.max(np.abs(x)))


def test_eta_operator_concavity():
    rng = np.random.default_rng(7)
    worst = math.inf
    for _ in range(100):
        n = int(rng.integers(1, 7))
        x, y = random_psd(n, rng), random_psd(n, rng)
        s = 1.0 / max(np.linalg.eigvalsh(x)[-1], np.linalg.eigvalsh(y)[-1])
        x, y = x * s, y * s
        gap = matrix_function((x + y) / 2, "eta") - 0.5 * matrix_function(x, "eta") - 0.5 * matrix_function(y, "eta")
        worst = min(worst, np.linalg.eigvalsh(gap)[0])
    assert worst >= -1e-9


def test_log_operator_monotone():
    rng = np.random.default_rng(8)
    for _ in range(100):
        n = int(rng.integers(1, 7))
        x = random_psd(n, rng, floor=0.05)
        y = x + random_psd(n, rng)
        assert np.linalg.eigvalsh(matrix_function(y, "log") - matrix_function(x, "log"))[0] >= -1e-9


def test_tau_two_norm_examples():
    tau = TraceFunctional.uniform(2)
    assert tau_two_norm(np.zeros((2, 2)), tau) == 0.0
    assert tau_two_norm(np.eye(2), tau) == pytest.approx(1.0, abs=1e-15)
    assert tau_two_norm(np.diag([1.0, 0.0]), tau) == pytest.approx(math.sqrt(0.5), abs=1e-15)
    with pytest.raises(DomainError):
        tau_two_norm(np.eye(3), tau)


def test_orthonormalize_examples():
    tau = TraceFunctional.uniform(2)
    assert len(orthonormalize([np.eye(2), np.eye(2)], tau)) == 1
    assert len(orthonormalize([np.diag([1.0, 0]), np.diag([0, 1.0])], tau)) == 2
    rng = np.random.default_rng(3)
    tau3 = TraceFunctional.uniform(3)
    mats = [rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3)) for _ in range(5)]
    basis = orthonormalize(mats, tau3)
    gram = np.array([[tau3.inner(a, b) for b in basis] for a in basis])
    np.testing.assert_allclose(gram, np.eye(len(basis)), atol=1e-10)


def test_trace_functional_validation():
    with pytest.raises(DomainError):
        TraceFunctional(np.array([0.5, -0.1]))
    tau = TraceFunctional(np.array([0.25, 0.75]))
    assert tau.is_normalized and not tau.is_uniform
    assert tau(np.diag([2.0, 4.0])) == pytest.approx(3.5)


def test_support_projection():
    p = support_projection(np.diag([1.0, 0.0, 2.0]))
    np.testing.assert_allclose(p, np.diag([1.0, 0.0, 1.0]), atol=1e-14)


def test_frechet_adjoint_matches_finite_difference():
    rng = np.random.default_rng(11)
    h = random_psd(4, rng, floor=0.2)
    weight = np.diag(rng.uniform(0.1, 1.0, 4))
    f = lambda t: -t * np.log(t)  # noqa: E731
    fp = lambda t: -np.log(t) - 1.0  # noqa: E731
    g = frechet_adjoint(h, weight, f, fp)
    dh = random_hermitian(4, rng)

    def value(a):
        w, v = np.linalg.eigh(a)
        return float(np.real(np.trace(weight @ (v * f(w)) @ v.conj().T)))

    eps = 1e-6
    fd = (value(h + eps * dh) - value(h - eps * dh)) / (2 * eps)
    assert abs(fd - np.real(np.trace(g @ dh))) <= 1e-7


def test_divided_differences_ties_use_derivative():
    dd = divided_differences(np.array([1.0, 1.0, 2.0]), np.exp, np.exp)
    assert dd[0, 1] == pytest.approx(math.e)
    assert dd[0, 2] == pytest.approx(math.e**2 - math.e)
