"""The acceptance criteria as executable checks.

Each ``criterion_N`` returns a :class:`CriterionResult`; :func:`run_all`
runs them in order. Tolerances are fixed here and not configurable.
"""

from __future__ import annotations

import itertools
import math
import time
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .algebras import StarSubalgebra, algebra_entropy, diagonal_algebra, full_algebra
from .ascent import _assemble, _random_c
from .binary_shift import (
    LOG2,
    Bitstream,
    PeriodicityWarning,
    center_dimension_oracle,
    concatenation_decomposition,
    dense_checks,
    odd_pair_witness,
    sign_string_realization,
    structure_sequence,
    witness_checks,
)
from .car import (
    SpectralSymbol,
    bogoliubov_entropy,
    build_car,
    matrix_units,
    monomial_operator,
    quasifree_density,
    quasifree_eval,
)
from .dynamics import (
    ShiftSystem,
    SiteBlock,
    approx_entropy_report,
    horizon_entropy,
    ks_truncation_report,
)
from .dynamics import matrix_units as site_matrix_units
from .entropy import eta_scalar, maximize_cs_entropy, relative_entropy, two_partition_gap
from .linalg import TraceFunctional
from .pressure import (
    LocalHamiltonian,
    gibbs_state,
    ising_transfer_pressure,
    peierls_bogoliubov_check,
    pressure_fd,
    pressure_property_suite,
    random_density,
    shift_pressure_estimate,
    variational_gap,
    variational_sup_check,
)


@dataclass
class CriterionResult:
    number: int
    title: str
    ok: bool
    detail: dict = field(default_factory=dict)
    seconds: float = 0.0

    def line(self) -> str:
        return f"criterion {self.number:2d} [{'PASS' if self.ok else 'FAIL'}] {self.title}"

    def to_json(self) -> dict:
        return {"number": self.number, "title": self.title, "ok": self.ok, "detail": self.detail}


def _random_hermitian(dim: int, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return scale * 0.5 * (g + g.conj().T)


def _random_density(dim: int, rng: np.random.Generator) -> np.ndarray:
    return random_density(dim, rng)


def criterion_1() -> CriterionResult:
    t0 = time.perf_counter()
    exact = {n: abs(algebra_entropy(full_algebra(TraceFunctional.uniform(n))) - math.log(n)) for n in range(2, 7)}
    exact_ok = all(e <= 1e-12 for e in exact.values())
    reached = {}
    for n in (2, 3):
        a = full_algebra(TraceFunctional.uniform(n))
        est = maximize_cs_entropy([a], a.tau)
        reached[n] = est.value
    opt_ok = all(reached[n] >= math.log(n) - 1e-3 for n in reached)
    secs = time.perf_counter() - t0
    detail = {"exact_defects": exact, "optimizer_values": reached, "seconds": secs}
    return CriterionResult(1, "H(M_n) = log n; optimizer reaches log n - 1e-3 in < 10 s", exact_ok and opt_ok and secs < 10, detail)


def criterion_2() -> CriterionResult:
    sys = ShiftSystem.n_shift(2, window=16)
    rep = horizon_entropy(sys, SiteBlock(1), 6)
    lower_ok = rep.lower_bound >= LOG2 - 1e-6
    upper_ok = rep.upper_bound is not None and abs(rep.upper_bound - LOG2) <= 1e-12
    k = 4
    qs = (1, 2, 3)
    reports = ks_truncation_report(sys, [2 * q + 1 for q in qs], k)
    literal = {q: r.lower_bound - (2 * q + k - 1) / k * LOG2 for q, r in zip(qs, reports)}
    recount = {q: r.lower_bound - (2 * q + k) / k * LOG2 for q, r in zip(qs, reports)}
    literal_ok = all(abs(v) <= 2e-3 for v in literal.values())
    detail = {
        "lower": rep.lower_bound,
        "upper": rep.upper_bound,
        "witness": rep.lower_witness,
        "truncation_minus_(2q+k-1)/k*log2": literal,
        "truncation_minus_(2q+k)/k*log2": recount,
    }
    return CriterionResult(2, "n-shift horizon bounds and truncation formula (2q+k-1)/k log 2", lower_ok and upper_ok and literal_ok, detail)


def criterion_3() -> CriterionResult:
    t0 = time.perf_counter()
    sys = ShiftSystem.bernoulli([0.3, 0.7], window=16)
    rep = horizon_entropy(sys, SiteBlock(1), 6)
    target = eta_scalar(0.3) + eta_scalar(0.7)
    secs = time.perf_counter() - t0
    ok = abs(rep.lower_bound - target) <= 0.05 and secs < 60
    return CriterionResult(3, "Bernoulli(0.3, 0.7) per-step CNT estimate at k = 6", ok, {"value": rep.lower_bound, "target": target, "seconds": secs})


def criterion_4() -> CriterionResult:
    defects = {}
    for lam, p in itertools.product((0.1, 0.25, 0.5, 0.8), (1, 2, 3)):
        v = bogoliubov_entropy(SpectralSymbol.constant(lam, p), panels=1024)
        defects[f"{lam}x{p}"] = abs(v - p * (eta_scalar(lam) + eta_scalar(1 - lam)))
    half = bogoliubov_entropy(SpectralSymbol.constant(0.5, 1), panels=1024)
    ok = all(d <= 1e-6 for d in defects.values()) and abs(half - LOG2) <= 1e-6
    return CriterionResult(4, "Bogoliubov entropy of constant symbols", ok, {"defects": defects, "half": half})


def criterion_5() -> CriterionResult:
    rng = np.random.default_rng(5)
    worst = 0.0
    for m in range(1, 7):
        sys = build_car(m)
        vecs = [rng.standard_normal(m) + 1j * rng.standard_normal(m) for _ in range(2)]
        worst = max(worst, *sys.relation_defects(vecs).values(), *matrix_units(sys).defects().values())
    systems = {m: build_car(m) for m in range(1, 6)}
    qf_worst = 0.0
    for _ in range(50):
        m = int(rng.integers(1, 6))
        sys = systems[m]
        w, _ = np.linalg.qr(rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m)))
        a_op = (w * rng.uniform(0, 1, m)) @ w.conj().T
        p = int(rng.integers(0, m + 1))
        vec = lambda: rng.standard_normal(m) + 1j * rng.standard_normal(m)  # noqa: E731
        mono = [(True, vec()) for _ in range(p)] + [(False, vec()) for _ in range(p)]
        explicit = np.trace(quasifree_density(sys, a_op) @ monomial_operator(sys, mono))
        qf_worst = max(qf_worst, abs(quasifree_eval(sys, a_op, mono) - explicit))
    ok = worst <= 1e-10 and qf_worst <= 1e-9
    return CriterionResult(5, "CAR relations, matrix units, quasifree determinant", ok, {"relation_defect": worst, "quasifree_defect": qf_worst})


def criterion_6() -> CriterionResult:
    mismatches, identity_fail, mean_fail, parse_fail = 0, 0, 0, 0
    streams = 24
    for seed in range(streams):
        b = Bitstream.random(16, seed)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", PeriodicityWarning)
            seq = structure_sequence(b, 16)
        for n, c, d, m in zip(seq.n_values, seq.c, seq.d, seq.mean):
            if center_dimension_oracle(sign_string_realization(b, n)) != c:
                mismatches += 1
            if n != 2 * d + c:
                identity_fail += 1
        floor = min(seq.mean)
        zeros = [m for c, m in zip(seq.c, seq.mean) if c == 0]
        if zeros and (floor != 0.5 * LOG2 or any(m != 0.5 * LOG2 for m in zeros)):
            mean_fail += 1
        try:
            concatenation_decomposition(seq)
        except Exception:
            parse_fail += 1
    ok = mismatches == identity_fail == mean_fail == parse_fail == 0
    detail = {"streams": streams, "oracle_mismatches": mismatches, "identity_failures": identity_fail, "mean_failures": mean_fail, "parse_failures": parse_fail}
    return CriterionResult(6, "binary shift structure sequences vs center oracle", ok, detail)


def criterion_7() -> CriterionResult:
    rng = np.random.default_rng(7)
    worst = {}
    for trial in range(3):
        evens = [k for k in range(2, 11, 2) if trial and rng.integers(0, 2)]
        b = Bitstream.from_set(list(range(1, 11, 2)) + evens, 10)
        r = sign_string_realization(b, 10, dense=True)
        checks = witness_checks(odd_pair_witness(r))
        checks["pattern"] = dense_checks(r)["pattern"]
        for key, v in checks.items():
            worst[key] = max(worst.get(key, 0.0), v)
    ok = all(v <= 1e-10 for v in worst.values())
    return CriterionResult(7, "odd-pair witness commutes and is traceless", ok, worst)


def criterion_8() -> CriterionResult:
    rng = np.random.default_rng(8)
    worst_gap, sup_fail = 0.0, 0
    for i in range(20):
        dim = int(rng.integers(2, 17))
        h = _random_hermitian(dim, rng, scale=float(rng.uniform(0.1, 3.0)))
        worst_gap = max(worst_gap, variational_gap(gibbs_state(h).density, h))
        res = variational_sup_check(h, samples=200, seed=i)
        if res["sampled_max"] > pressure_fd(h):
            sup_fail += 1
    ok = worst_gap <= 1e-8 and sup_fail == 0
    return CriterionResult(8, "Gibbs equality and sampled variational bound", ok, {"worst_gibbs_gap": worst_gap, "sup_failures": sup_fail})


def criterion_9() -> CriterionResult:
    rng = np.random.default_rng(9)
    fails = 0
    for _ in range(100):
        dim = int(rng.integers(2, 9))
        h = _random_hermitian(dim, rng)
        g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
        k = h + g @ g.conj().T * float(rng.uniform(0.0, 1.0))
        if not peierls_bogoliubov_check(h, k, tol=1e-9)["ok"]:
            fails += 1
    return CriterionResult(9, "Peierls-Bogoliubov on ordered pairs", fails == 0, {"failures": fails})


def criterion_10() -> CriterionResult:
    t0 = time.perf_counter()
    zero = shift_pressure_estimate(LocalHamiltonian.zero(2), 12)
    zero_ok = all(v == LOG2 for v in zero.values)
    h1 = np.array([[0.3, 0.2 - 0.1j], [0.2 + 0.1j, -0.5]])
    single = shift_pressure_estimate(LocalHamiltonian(2, 1, h1), 12)
    target = pressure_fd(h1)
    single_defect = max(abs(v - target) for v in single.values)
    ising = shift_pressure_estimate(LocalHamiltonian.ising(1.0), 12, k_min=12).last
    oracle = ising_transfer_pressure(1.0)
    secs = time.perf_counter() - t0
    ok = zero_ok and single_defect <= 1e-12 and abs(ising - oracle) <= 1e-3 and secs < 120
    detail = {"zero_exact": zero_ok, "single_site_defect": single_defect, "ising_p12": ising, "transfer_oracle": oracle, "ising_defect": abs(ising - oracle), "seconds": secs}
    return CriterionResult(10, "shift pressure: zero, single-site and Ising oracle at k = 12", ok, detail)


def _random_s2_partition(n: int, rng: np.random.Generator):
    shape = (int(rng.integers(1, 4)), int(rng.integers(1, 4)))
    x, *_ = _assemble(_random_c(shape, n, rng))
    return x


def criterion_11() -> CriterionResult:
    rng = np.random.default_rng(11)
    gap_min = math.inf
    for i in range(1000):
        n = 2 if i % 2 == 0 else 3
        tau = TraceFunctional.uniform(n)
        gap_min = min(gap_min, two_partition_gap(_random_s2_partition(n, rng), tau)[0])

    ident_worst, mono_worst, convex_worst = 0.0, -math.inf, -math.inf
    for _ in range(50):
        n = int(rng.integers(2, 5))
        tau = TraceFunctional.uniform(n)
        omega = _density_wrt(tau, rng)
        phi = _density_wrt(tau, rng)
        sub = _random_subalgebra(n, rng)
        lhs = relative_entropy(omega, sub.expect(phi), tau)
        rhs = relative_entropy(sub.expect(omega), sub.expect(phi), tau) + relative_entropy(omega, sub.expect(omega), tau)
        ident_worst = max(ident_worst, abs(lhs - rhs))
        # omega <= psi via psi = omega + positive
        g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        psi = omega + 0.3 * g @ g.conj().T
        mono_worst = max(mono_worst, relative_entropy(phi, psi, tau) - relative_entropy(phi, omega, tau))
        x1, x2, y1, y2 = (_density_wrt(tau, rng) for _ in range(4))
        joint = relative_entropy(0.5 * (x1 + x2), 0.5 * (y1 + y2), tau) - 0.5 * (relative_entropy(x1, y1, tau) + relative_entropy(x2, y2, tau))
        convex_worst = max(convex_worst, joint)

    ising = pressure_property_suite(LocalHamiltonian.ising(1.0), k=10, seed=0)
    z = np.diag([1.0, -1.0])
    diag_term = LocalHamiltonian(2, 2, np.diag(rng.uniform(-1, 1, 4))) + LocalHamiltonian(2, 1, 0.4 * z)
    other = pressure_property_suite(diag_term, k=10, seed=1)
    suites_ok = ising.ok and other.ok
    ok = gap_min >= -1e-9 and ident_worst <= 1e-8 and mono_worst <= 1e-9 and convex_worst <= 1e-8 and suites_ok
    detail = {
        "gap_min": gap_min,
        "expectation_identity_defect": ident_worst,
        "monotonicity_excess": mono_worst,
        "joint_convexity_excess": convex_worst,
        "pressure_suites": {"ising": ising.to_json(), "diagonal": other.to_json()},
    }
    return CriterionResult(11, "entropy and pressure property suites", ok, detail)


def _random_subalgebra(n: int, rng: np.random.Generator) -> StarSubalgebra:
    """A unitarily rotated masa, projection pair or ``M_2 (x) 1`` (when ``n = 4``)."""
    tau = TraceFunctional.uniform(n)
    u, _ = np.linalg.qr(rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)))
    kind = int(rng.integers(0, 3))
    if kind == 0:
        return diagonal_algebra(tau, u)
    if kind == 1 or n != 4:
        p = np.diag((np.arange(n) < int(rng.integers(1, n))).astype(complex))
        return StarSubalgebra.from_generators([u @ p @ u.conj().T], tau)
    x = np.kron(np.array([[0, 1], [1, 0]]), np.eye(2)).astype(complex)
    z = np.kron(np.diag([1.0, -1.0]), np.eye(2)).astype(complex)
    return StarSubalgebra.from_generators([u @ x @ u.conj().T, u @ z @ u.conj().T], tau)


def _density_wrt(tau: TraceFunctional, rng: np.random.Generator) -> np.ndarray:
    """A faithful density ``h`` with ``tau(h) = 1``."""
    n = tau.dim
    g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    h = g @ g.conj().T + 0.05 * np.eye(n)
    return h / float(np.real(tau(h)))


def criterion_12() -> CriterionResult:
    k = 6
    sys = ShiftSystem.n_shift(2, window=16)
    cs = horizon_entropy(sys, SiteBlock(1), k)
    cnt = horizon_entropy(ShiftSystem(2, 16, "bernoulli", np.eye(2) / 2), SiteBlock(1), k)
    approx = approx_entropy_report(sys, site_matrix_units(2), 0.1, k)
    gaps = [max(a, b) - u for a, b, u in zip(cs.per_step, cnt.per_step, approx.per_step)]
    ok = all(g <= 2e-3 for g in gaps)
    return CriterionResult(12, "lower bounds below approximation-entropy upper bounds (2-shift)", ok, {"cs": cs.per_step, "cnt": cnt.per_step, "approx": approx.per_step})


CRITERIA: list[Callable[[], CriterionResult]] = [
    criterion_1,
    criterion_2,
    criterion_3,
    criterion_4,
    criterion_5,
    criterion_6,
    criterion_7,
    criterion_8,
    criterion_9,
    criterion_10,
    criterion_11,
    criterion_12,
]


def run_criterion(number: int) -> CriterionResult:
    t0 = time.perf_counter()
    res = CRITERIA[number - 1]()
    res.seconds = time.perf_counter() - t0
    return res


def run_all() -> list[CriterionResult]:
    return [run_criterion(i) for i in range(1, len(CRITERIA) + 1)]
