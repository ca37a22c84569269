import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nce.binary_shift import (
    MAX_DENSE_N,
    Bitstream,
    PeriodicityWarning,
    ToeplitzForm,
    center_dimension_oracle,
    concatenation_decomposition,
    dense_checks,
    gf2_rank,
    numerical_center_dimension,
    odd_pair_witness,
    pauli_matrix,
    sign_string_realization,
    structure_sequence,
    symplectic,
    witness_checks,
)
from nce.errors import DomainError, GuardError, InvariantError

LOG2 = math.log(2)


def _quiet(fn, *args, **kw):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", PeriodicityWarning)
        return fn(*args, **kw)


bitstreams = st.lists(st.integers(0, 1), min_size=4, max_size=24).map(lambda b: Bitstream(tuple(b)))


def test_single_generator():
    s = _quiet(structure_sequence, Bitstream((1, 0, 0)), 1)
    assert (s.c[0], s.d[0]) == (1, 0)
    assert abs(s.H[0] - LOG2) < 1e-15


def test_nearest_neighbour_pattern():
    b = Bitstream.from_set({1}, 8)
    s = _quiet(structure_sequence, b, 6)
    assert s.c[3] == 0 and s.d[3] == 2
    assert s.c == [1, 0, 1, 0, 1, 0]
    assert concatenation_decomposition(s).peaks == [1, 1, 1]


def test_gf2_rank_small():
    assert gf2_rank([0b11, 0b01, 0b10]) == 2
    assert gf2_rank([]) == 0
    assert gf2_rank([0, 0b100]) == 1


def test_toeplitz_is_alternating():
    f = ToeplitzForm.build(Bitstream.random(12, 5), 10)
    assert f.is_alternating()
    assert (f.n - f.rank()) == f.nullity()


def test_concatenation_examples():
    assert concatenation_decomposition([1, 0, 1, 0]).peaks == [1, 1]
    p = concatenation_decomposition([1, 2, 1, 0, 1, 2])
    assert p.peaks == [2] and p.residual == [1, 2]
    assert concatenation_decomposition([]).to_json() == {"peaks": [], "residual": []}
    with pytest.raises(InvariantError):
        concatenation_decomposition([1, 2, 3, 1])
    with pytest.raises(InvariantError):
        concatenation_decomposition([0, 1])


@given(bitstreams)
def test_structure_invariants(b):
    n_max = b.window + 1
    s = _quiet(structure_sequence, b, n_max)
    for n, c, d, m in zip(s.n_values, s.c, s.d, s.mean):
        assert n == 2 * d + c
        # mean_n - log2 / 2 = c_n log2 / (2n)
        assert abs(m - 0.5 * LOG2) <= c / n * LOG2 + 1e-15
    concatenation_decomposition(s)


@given(bitstreams)
def test_realization_rank_identity(b):
    n = min(b.window + 1, 12)
    r = sign_string_realization(b, n)
    assert r.matches()
    c = _quiet(structure_sequence, b, n).c[-1]
    assert center_dimension_oracle(r) == c


def test_oracle_examples():
    b = Bitstream.from_set({1}, 6)
    assert center_dimension_oracle(sign_string_realization(b, 4)) == 0
    assert center_dimension_oracle(sign_string_realization(b, 5)) == 1


def test_symplectic_and_pauli():
    x = pauli_matrix(1, 0, 1).toarray()
    z = pauli_matrix(0, 1, 1).toarray()
    y = pauli_matrix(1, 1, 1).toarray()
    assert np.allclose(x, [[0, 1], [1, 0]])
    assert np.allclose(z, np.diag([1, -1]))
    assert np.allclose(y, y.conj().T) and np.allclose(y @ y, np.eye(2))
    assert symplectic((1, 0), (0, 1)) == 1
    assert symplectic((1, 1), (1, 1)) == 0


@pytest.mark.parametrize("seed", range(4))
def test_dense_checks(seed):
    b = Bitstream.random(10, seed)
    r = sign_string_realization(b, 8, dense=True)
    d = dense_checks(r)
    assert d["adjoint"] < 1e-14 and d["square"] < 1e-14 and d["pattern"] < 1e-14
    assert d["trace"] < 1e-14


@pytest.mark.parametrize("seed", range(3))
def test_numerical_center_matches(seed):
    b = Bitstream.random(8, seed)
    for n in range(1, 7):
        r = sign_string_realization(b, n, dense=True)
        assert numerical_center_dimension(r) == 2 ** center_dimension_oracle(r)


def test_odd_pair_witness():
    b = Bitstream.from_set(range(1, 12, 2), 12)
    r = sign_string_realization(b, 8, dense=True)
    chk = witness_checks(odd_pair_witness(r))
    assert chk["commutator"] < 1e-14 and chk["adjoint"] < 1e-14 and chk["trace"] < 1e-14
    with pytest.raises(DomainError):
        odd_pair_witness(sign_string_realization(Bitstream.from_set({2}, 8), 4, dense=True))


def test_periodicity_warning():
    with pytest.warns(PeriodicityWarning):
        structure_sequence(Bitstream((1,) * 8), 4)
    assert Bitstream((1,) * 8).consistent_period() == 1
    assert Bitstream.from_set({1}, 9).consistent_period() is None


def test_guards():
    b = Bitstream((1, 0, 1))
    with pytest.raises(DomainError):
        structure_sequence(b, 5)
    with pytest.raises(DomainError):
        sign_string_realization(b, 5)
    with pytest.raises(GuardError):
        sign_string_realization(Bitstream.random(20, 0), MAX_DENSE_N + 1, dense=True)
    with pytest.raises(DomainError):
        Bitstream.parse("0121")
    assert Bitstream.parse("0110\n").to_text() == "0110"
