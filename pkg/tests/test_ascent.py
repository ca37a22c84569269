import numpy as np
import pytest

from nce.algebras import diagonal_algebra, full_algebra
from nce.ascent import Budget, _assemble, _random_c, ascend, maximize, multistart
from nce.entropy import CSObjective
from nce.linalg import TraceFunctional


@pytest.fixture
def objective():
    tau = TraceFunctional.uniform(3)
    return CSObjective([diagonal_algebra(tau)], tau)


def test_parametrization_is_partition(rng):
    x, *_ = _assemble(_random_c((4,), 3, rng))
    assert np.allclose(x.sum(axis=0), np.eye(3))
    for xi in x:
        assert np.linalg.eigvalsh(xi)[0] > -1e-12


def test_ascent_is_deterministic(objective):
    a = ascend(objective, (3,), 3, seed=7, iterations=50)
    b = ascend(objective, (3,), 3, seed=7, iterations=50)
    assert np.array_equal(a.stack, b.stack) and a.value == b.value


def test_ascent_does_not_decrease(objective):
    start = ascend(objective, (3,), 3, seed=1, iterations=0).value
    assert ascend(objective, (3,), 3, seed=1, iterations=200).value >= start - 1e-12


def test_masa_reaches_log_dim(objective):
    best, used, _ = maximize(objective, [3], 3, Budget(restarts=8, iterations=500), target=np.log(3))
    assert abs(best.value - np.log(3)) < 1e-6
    assert used <= 8


def test_workers_do_not_change_result(objective):
    one, u1 = multistart(objective, (3,), 3, Budget(restarts=8, iterations=60, seed=3, workers=1))
    two, u2 = multistart(objective, (3,), 3, Budget(restarts=8, iterations=60, seed=3, workers=2))
    assert one.value == two.value and u1 == u2 and one.seed == two.seed


def test_seed_offsets(objective):
    best, _ = multistart(objective, (3,), 3, Budget(restarts=4, iterations=10, seed=100))
    assert 100 <= best.seed < 104


def test_workers_from_environment(monkeypatch):
    monkeypatch.setenv("NCE_WORKERS", "3")
    assert Budget().resolved_workers() == 3
    assert Budget(workers=0).resolved_workers() == 1


def test_full_algebra_target_early_stop():
    tau = TraceFunctional.uniform(2)
    obj = CSObjective([full_algebra(tau)], tau)
    _, used, _ = maximize(obj, [2], 2, Budget(restarts=32, iterations=300), target=np.log(2))
    assert used < 32
