"""Entropy functionals on finite-dimensional operator algebras.

Scalar and von Neumann entropy, Umegaki relative entropy, the multivariate
entropy ``H(N_1, ..., N_k)`` of a family of subalgebras (a supremum over
partitions of unity), the relative entropy ``H(N | P)`` of two subalgebras,
and the state-dependent entropy ``H_phi(N_1, ..., N_k)`` (a supremum over
decompositions of a state into positive functionals).

The suprema are estimated from below: every :class:`EntropyEstimate`
carries the witness at which its value was evaluated.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .algebras import StarSubalgebra, algebra_entropy, join
from .errors import DomainError
from .linalg import TraceFunctional, _eta, as_hermitian, eigh, matrix_function, support_projection, tau_two_norm

PSD_TOL = 1e-9
SUM_TOL = 1e-8
_TINY = 1e-300


def eta_scalar(t: float) -> float:
    """``-t log t`` with ``eta(0) = 0``."""
    if t < 0:
        raise DomainError(f"eta is defined on [0, inf); got {t}")
    return 0.0 if t == 0 else -t * math.log(t)


eta = _eta


def _eta_prime(t: np.ndarray) -> np.ndarray:
    return -np.log(np.maximum(t, _TINY)) - 1.0


def _check_psd(x: np.ndarray, name: str, tol: float = PSD_TOL) -> np.ndarray:
    x = as_hermitian(x)
    w = np.linalg.eigvalsh(x)
    if w.size and w[0] < -tol * max(1.0, abs(w[-1])):
        raise DomainError(f"{name} is not positive semidefinite (min eigenvalue {w[0]:.3e})")
    return x


def von_neumann_entropy(rho) -> float:
    """``S(rho) = sum_i eta(lambda_i)`` for a density matrix (``Tr rho = 1``)."""
    rho = _check_psd(rho, "density matrix")
    tr = float(np.real(np.trace(rho)))
    if abs(tr - 1.0) > SUM_TOL:
        raise DomainError(f"density matrix must have trace 1, got {tr}")
    w = np.linalg.eigvalsh(rho)
    return float(np.sum(_eta(np.clip(w, 0.0, None))))


def relative_entropy(x, y, tau: TraceFunctional) -> float:
    """``S(x, y) = tau(x (log x - log y))`` for positive ``x``, ``y``.

    Computed on the support of ``y``; returns ``inf`` when ``x`` has weight
    outside that support.
    """
    x = _check_psd(x, "x")
    y = _check_psd(y, "y")
    if x.shape != y.shape or x.shape[0] != tau.dim:
        raise DomainError("dimension mismatch")
    supp = support_projection(y)
    leak = float(np.real(tau(x @ (np.eye(tau.dim) - supp))))
    if leak > PSD_TOL:
        return math.inf
    wx, vx = eigh(x)
    wy, vy = eigh(y)
    logy = (vy * np.where(wy > 1e-10, np.log(np.maximum(wy, _TINY)), 0.0)) @ vy.conj().T
    xlogx = -(vx * _eta(np.clip(wx, 0.0, None))) @ vx.conj().T
    return float(np.real(tau(xlogx - x @ logy)))


# -- witnesses ---------------------------------------------------------------


@dataclass
class PartitionOfUnity:
    """Positive operators indexed by ``k``-tuples that sum to the identity.

    ``elements`` maps a multi-index to a PSD matrix; indices absent from the
    map are zero. Elements may instead be stored as their diagonals (1-d
    arrays) when the whole partition is diagonal (``diagonal=True``).
    """

    index_ranges: tuple[int, ...]
    elements: dict[tuple[int, ...], np.ndarray]
    diagonal: bool = False

    @property
    def arity(self) -> int:
        return len(self.index_ranges)

    @property
    def dim(self) -> int:
        return next(iter(self.elements.values())).shape[0]

    @classmethod
    def from_stack(cls, stack: np.ndarray) -> "PartitionOfUnity":
        ranges = stack.shape[:-2]
        elements = {idx: stack[idx] for idx in itertools.product(*map(range, ranges))}
        return cls(tuple(ranges), elements)

    def matrix(self, idx) -> np.ndarray:
        e = self.elements[idx]
        return np.diag(e).astype(complex) if self.diagonal else e

    def marginals(self) -> list[np.ndarray]:
        """``x^j_{i_j}``: the sum over all slots but ``j``, stacked per slot."""
        shape = (self.dim,) if self.diagonal else (self.dim, self.dim)
        out = [np.zeros((r,) + shape, dtype=complex) for r in self.index_ranges]
        for idx, e in self.elements.items():
            for j, i in enumerate(idx):
                out[j][i] += e
        return out

    def validate(self) -> None:
        shape = (self.dim,) if self.diagonal else (self.dim, self.dim)
        total = np.zeros(shape, dtype=complex)
        for idx, e in self.elements.items():
            if len(idx) != self.arity or any(not 0 <= i < r for i, r in zip(idx, self.index_ranges)):
                raise DomainError(f"multi-index {idx} outside ranges {self.index_ranges}")
            if self.diagonal:
                if np.min(e.real) < -PSD_TOL:
                    raise DomainError(f"element {idx} is not positive")
            else:
                _check_psd(e, f"element {idx}")
            total = total + e
        unit = np.ones(self.dim) if self.diagonal else np.eye(self.dim)
        if np.max(np.abs(total - unit)) > SUM_TOL:
            raise DomainError("partition elements do not sum to the identity")

    def to_json(self) -> dict:
        from .io import matrix_to_json

        return {
            "index_ranges": list(self.index_ranges),
            "elements": [{"index": list(idx), "matrix": matrix_to_json(self.matrix(idx))} for idx, e in sorted(self.elements.items())],
        }


@dataclass
class StateDecomposition:
    """Positive functionals ``phi_(i)(a) = tau(rho_(i) a)`` summing to ``phi``.

    ``densities`` are taken with respect to the normalized trace of the
    ambient algebra.
    """

    index_ranges: tuple[int, ...]
    densities: dict[tuple[int, ...], np.ndarray]
    diagonal: bool = False

    def matrix(self, idx) -> np.ndarray:
        d = self.densities[idx]
        return np.diag(d).astype(complex) if self.diagonal else d

    def validate(self, state: np.ndarray) -> None:
        total = sum(self.densities.values())
        if self.diagonal:
            state = np.real(np.diag(state)) if np.ndim(state) == 2 else state
        if np.max(np.abs(total - state)) > SUM_TOL:
            raise DomainError("decomposition does not sum to the state")
        for idx, d in self.densities.items():
            if self.diagonal:
                if np.min(np.real(d)) < -PSD_TOL:
                    raise DomainError(f"functional {idx} is not positive")
            else:
                _check_psd(d, f"functional {idx}")

    def marginals(self) -> list[np.ndarray]:
        first = next(iter(self.densities.values()))
        out = [np.zeros((r,) + first.shape, dtype=complex) for r in self.index_ranges]
        for idx, d in self.densities.items():
            for j, i in enumerate(idx):
                out[j][i] += d
        return out

    def to_json(self) -> dict:
        from .io import matrix_to_json

        return {
            "index_ranges": list(self.index_ranges),
            "elements": [{"index": list(idx), "matrix": matrix_to_json(self.matrix(idx))} for idx in sorted(self.densities)],
        }


@dataclass
class EntropyEstimate:
    """A certified lower bound: ``value`` is the objective at ``witness``."""

    value: float
    witness: PartitionOfUnity | StateDecomposition | None
    restarts_used: int
    converged: bool
    upper_bound: float | None = None
    extra: dict = field(default_factory=dict)

    def to_json(self, witness_file: str | None = None) -> dict:
        return {
            "value": self.value,
            "upper_bound": self.upper_bound,
            "restarts_used": self.restarts_used,
            "converged": self.converged,
            "witness_file": witness_file,
        }


# -- batched spectral helpers -------------------------------------------------


def _herm(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + np.conj(np.swapaxes(a, -1, -2)))


def _divided(w: np.ndarray, f, fp) -> np.ndarray:
    wa = w[..., :, None]
    wb = w[..., None, :]
    diff = wa - wb
    tie = np.abs(diff) <= 1e-10 * np.maximum(1.0, np.abs(wa))
    fw = f(w)
    num = fw[..., :, None] - fw[..., None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        out = num / np.where(tie, 1.0, diff)
    return np.where(tie, fp(0.5 * (wa + wb)), out)


def trace_eta(a: np.ndarray, weights: np.ndarray, grad: bool = False):
    """``tau(eta(a))`` for a stack of Hermitian ``a``; optionally its gradient.

    The gradient ``G`` satisfies ``d tau(eta(a))[da] = Tr(G da)`` and is
    the Daleckii-Krein expression built from divided differences of
    ``eta`` on the spectrum of ``a``.
    """
    w, v = np.linalg.eigh(_herm(a))
    wc = np.clip(w, 0.0, None)
    inner = np.einsum("...ka,k,...kb->...ab", np.conj(v), weights, v)
    diag = np.real(np.einsum("...aa->...a", inner))
    vals = np.sum(_eta(wc) * diag, axis=-1)
    if not grad:
        return vals
    dd = _divided(wc, _eta, _eta_prime)
    g = np.einsum("...ia,...ab,...jb->...ij", v, dd * inner, np.conj(v))
    return vals, _herm(g)


def _trace_eta_scalar(x: np.ndarray, weights: np.ndarray) -> np.ndarray:
    return np.real(np.einsum("...ii,i->...", x, weights))


def _slot_marginal(x: np.ndarray, j: int, k: int) -> np.ndarray:
    axes = tuple(a for a in range(k) if a != j)
    return x.sum(axis=axes) if axes else x


def _broadcast_slot(g: np.ndarray, j: int, k: int) -> np.ndarray:
    """Reshape a per-slot stack ``(r_j, N, N)`` to broadcast over ``(r_1..r_k, N, N)``."""
    shape = [1] * k + list(g.shape[1:])
    shape[j] = g.shape[0]
    return g.reshape(shape)


# -- objectives ---------------------------------------------------------------


class CSObjective:
    """``sum eta tau(x_(i)) - sum_j sum_{i_j} tau eta(E_{N_j} x^j_{i_j})``."""

    def __init__(self, algebras: Sequence, tau: TraceFunctional):
        self.algebras = [_on_trace(a, tau) for a in algebras]
        self.tau = tau
        self.k = len(algebras)

    def __call__(self, x: np.ndarray, grad: bool = False):
        w = self.tau.weights
        t = _trace_eta_scalar(x, w)
        value = float(np.sum(_eta(np.clip(t, 0.0, None))))
        if grad:
            g = _eta_prime(t)[..., None, None] * np.diag(w)
        for j, alg in enumerate(self.algebras):
            xj = _slot_marginal(x, j, self.k)
            ex = alg.expect(xj)
            if grad:
                vals, ga = trace_eta(ex, w, grad=True)
                g = g - _broadcast_slot(_herm(alg.expect_adjoint(ga)), j, self.k)
            else:
                vals = trace_eta(ex, w)
            value -= float(np.sum(vals))
        return (value, g) if grad else value


class RelativeObjective:
    """``sum_i tau eta(E_P x_i) - tau eta(E_N x_i)`` over ``x`` in ``S_1``."""

    def __init__(self, n, p, tau: TraceFunctional):
        self.n = _on_trace(n, tau)
        self.p = _on_trace(p, tau)
        self.tau = tau
        self.k = 1

    def __call__(self, x: np.ndarray, grad: bool = False):
        w = self.tau.weights
        out = []
        for sign, alg in ((1.0, self.p), (-1.0, self.n)):
            ex = alg.expect(x)
            if grad:
                vals, ga = trace_eta(ex, w, grad=True)
                out.append((sign * float(np.sum(vals)), sign * _herm(alg.expect_adjoint(ga))))
            else:
                out.append((sign * float(np.sum(trace_eta(ex, w))), None))
        value = out[0][0] + out[1][0]
        return (value, out[0][1] + out[1][1]) if grad else value


def _restricted_log(b: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(_herm(b))
    lw = np.where(w > 1e-12, np.log(np.maximum(w, _TINY)), 0.0)
    return np.einsum("...ia,...a,...ja->...ij", v, lw, np.conj(v))


class CNTObjective:
    """Decomposition functional for a state with ``tau``-density ``h``.

    Decompositions are parametrized as ``rho_(i) = h^(1/2) x_(i) h^(1/2)``
    with ``x`` a partition of unity; this reaches every decomposition when
    ``h`` is invertible.
    """

    def __init__(self, state: np.ndarray, algebras: Sequence, tau: TraceFunctional):
        self.tau = tau
        self.algebras = [_on_trace(a, tau) for a in algebras]
        self.k = len(algebras)
        w, v = np.linalg.eigh(_herm(np.asarray(state, dtype=complex)))
        self.sqrt_h = (v * np.sqrt(np.clip(w, 0.0, None))) @ v.conj().T
        self.h = _herm(np.asarray(state, dtype=complex))
        self.log_eh = [_restricted_log(a.expect(self.h)) for a in self.algebras]

    def densities(self, x: np.ndarray) -> np.ndarray:
        return self.sqrt_h @ x @ self.sqrt_h

    def value_of_densities(self, rho: np.ndarray, grad: bool = False):
        w = self.tau.weights
        wm = np.diag(w)
        t = _trace_eta_scalar(rho, w)
        value = float(np.sum(_eta(np.clip(t, 0.0, None))))
        if grad:
            g = _eta_prime(t)[..., None, None] * wm
        for j, alg in enumerate(self.algebras):
            a = alg.expect(_slot_marginal(rho, j, self.k))
            logb = self.log_eh[j]
            # S(a, b) = -tau eta(a) - tau(a log b)
            cross = np.real(np.einsum("...ij,ji,i->...", a, logb, w))
            if grad:
                vals, ga = trace_eta(a, w, grad=True)
                gs = -ga - _herm(logb @ wm)[None]
                g = g + _broadcast_slot(_herm(alg.expect_adjoint(gs)), j, self.k)
            else:
                vals = trace_eta(a, w)
            value += float(np.sum(-vals - cross))
        return (value, g) if grad else value

    def __call__(self, x: np.ndarray, grad: bool = False):
        rho = self.densities(x)
        if not grad:
            return self.value_of_densities(rho)
        value, g = self.value_of_densities(rho, grad=True)
        return value, _herm(self.sqrt_h @ g @ self.sqrt_h)


def _on_trace(alg, tau: TraceFunctional):
    if alg.ambient_dim != tau.dim:
        raise DomainError("algebra and trace live in different ambient dimensions")
    return alg.with_trace(tau) if hasattr(alg, "with_trace") else alg


# -- exact evaluations ----------------------------------------------------------


def cs_objective(p: PartitionOfUnity, algebras: Sequence, tau: TraceFunctional) -> float:
    """Exact value of the partition functional at ``p``."""
    if p.arity != len(algebras):
        raise DomainError(f"partition of arity {p.arity} for {len(algebras)} algebras")
    if p.dim != tau.dim:
        raise DomainError("partition and trace dimensions differ")
    algebras = [_on_trace(a, tau) for a in algebras]
    w = tau.weights
    if p.diagonal:
        value = sum(eta_scalar(max(float(np.real(e @ w)), 0.0)) for e in p.elements.values())
        for alg, marg in zip(algebras, p.marginals()):
            ed = alg.expect_diagonal(marg) if hasattr(alg, "expect_diagonal") else np.real(np.einsum("...ii->...i", alg.expect(np.stack([np.diag(m) for m in marg]))))
            value -= float(np.sum(_eta(np.clip(np.real(ed), 0.0, None)) * w))
        return float(value)
    value = sum(eta_scalar(max(float(np.real(np.einsum("ii,i->", e, w))), 0.0)) for e in p.elements.values())
    for alg, marg in zip(algebras, p.marginals()):
        value -= float(np.sum(trace_eta(alg.expect(marg), w)))
    return float(value)


def relative_objective(p: PartitionOfUnity, n, q, tau: TraceFunctional) -> float:
    stack = np.stack([p.matrix(idx) for idx in sorted(p.elements)])
    return RelativeObjective(n, q, tau)(stack)


def cnt_objective(d: StateDecomposition, algebras: Sequence, tau: TraceFunctional) -> float:
    """Exact value of the decomposition functional at ``d``."""
    algebras = [_on_trace(a, tau) for a in algebras]
    w = tau.weights
    total = 0.0
    for rho in d.densities.values():
        mass = float(np.real(rho @ w)) if d.diagonal else float(np.real(np.einsum("ii,i->", rho, w)))
        total += eta_scalar(max(mass, 0.0))
    h = sum(d.densities.values())
    for alg, marg in zip(algebras, d.marginals()):
        if d.diagonal:
            a = np.real(alg.expect_diagonal(marg))
            b = np.real(alg.expect_diagonal(h[None]))[0]
            total += float(np.sum(_diagonal_relative_entropy(a, b) @ w))
            continue
        a = alg.expect(marg)
        logb = _restricted_log(alg.expect(h[None])[0])
        cross = np.real(np.einsum("...ij,ji,i->...", a, logb, w))
        total += float(np.sum(-trace_eta(a, w) - cross))
    return float(total)


def _diagonal_relative_entropy(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Entrywise ``a (log a - log b)`` with ``0 log 0 = 0``; ``inf`` off the support of ``b``."""
    a = np.clip(a, 0.0, None)
    out = np.zeros_like(a)
    pos = a > 0
    bb = np.broadcast_to(b, a.shape)
    if np.any(pos & (bb <= 0)):
        return np.full(a.shape, np.inf)
    out[pos] = a[pos] * (np.log(a[pos]) - np.log(bb[pos]))
    return out


def two_partition_gap(x: np.ndarray, tau: TraceFunctional) -> tuple[float, float]:
    """For a partition ``x_(ij)`` with marginals ``x1_i``, ``x2_j``.

    Returns ``sum tau eta(x1_i) + sum tau eta(x2_j) - sum tau eta(x_ij)``
    (nonnegative) and the commutator statistic
    ``1/2 sum ||[x1_i^(1/2), x2_j^(1/2)]||_2``.
    """
    x = np.asarray(x, dtype=complex)
    if x.ndim != 4:
        raise DomainError("expected a stack of shape (r1, r2, N, N)")
    w = tau.weights
    rows, cols = x.sum(axis=1), x.sum(axis=0)
    value = float(np.sum(trace_eta(rows, w)) + np.sum(trace_eta(cols, w)) - np.sum(trace_eta(x, w)))
    sr = [matrix_function(r, "sqrt") for r in rows]
    sc = [matrix_function(c, "sqrt") for c in cols]
    comm = 0.5 * sum(tau_two_norm(a @ b - b @ a, tau) for a in sr for b in sc)
    return value, float(comm)


# -- joins and closed forms -----------------------------------------------------


def pairwise_commute(algebras: Sequence) -> bool:
    return all(a.commutes_with(b) for a, b in itertools.combinations(algebras, 2))


def commuting_join_entropy(algebras: Sequence, tau: TraceFunctional) -> float:
    """``H`` of the algebra generated by a pairwise commuting family."""
    algebras = [_on_trace(a, tau) for a in algebras]
    if not pairwise_commute(algebras):
        raise DomainError("commuting_join_entropy needs pairwise commuting algebras")
    if len(algebras) == 1:
        return algebra_entropy(algebras[0])
    if all(hasattr(a, "join_entropy") for a in algebras):
        return type(algebras[0]).join_entropy(algebras)
    return algebra_entropy(join(algebras))


def entropy_upper_bound(algebras: Sequence, tau: TraceFunctional, join_limit: int = 256) -> float:
    """Best available upper bound on ``H(N_1, ..., N_k)``.

    ``sum H(N_i)`` always applies; ``H(join)`` applies whenever the join can
    be materialized (ambient dimension at most ``join_limit``).
    """
    algebras = [_on_trace(a, tau) for a in algebras]
    bounds = [sum(algebra_entropy(a) if isinstance(a, StarSubalgebra) else a.entropy() for a in algebras)]
    if all(hasattr(a, "join_entropy") for a in algebras):
        bounds.append(type(algebras[0]).join_entropy(algebras))
    elif tau.dim <= join_limit and all(isinstance(a, StarSubalgebra) for a in algebras):
        try:
            bounds.append(algebra_entropy(join(algebras)))
        except DomainError:
            pass
    return float(min(bounds))


def trivial_partition(dim: int, k: int) -> PartitionOfUnity:
    return PartitionOfUnity((1,) * k, {(0,) * k: np.eye(dim, dtype=complex)})


# -- estimators -------------------------------------------------------------------


def _rank(alg) -> int:
    return int(alg.rank)


def _budget(budget):
    from .ascent import Budget

    if budget is None:
        return Budget()
    if isinstance(budget, dict):
        b = dict(budget)
        if b.get("index_ranges") is not None:
            b["index_ranges"] = tuple(b["index_ranges"])
        return Budget(**b)
    return budget


def maximize_cs_entropy(algebras: Sequence, tau: TraceFunctional, budget=None) -> EntropyEstimate:
    """Lower bound on ``H(N_1, ..., N_k)`` by multistart gradient ascent.

    The returned value is the partition functional re-evaluated at the
    witness; ``upper_bound`` is the smaller of ``H(join)`` (when the join is
    computable) and ``sum H(N_i)``.
    """
    from .ascent import maximize

    if not algebras:
        raise DomainError("need at least one algebra")
    algebras = [_on_trace(a, tau) for a in algebras]
    for a in algebras:
        if hasattr(a, "is_tracial") and not a.is_tracial():
            raise DomainError("tau must be tracial on every algebra")
    budget = _budget(budget)
    upper = entropy_upper_bound(algebras, tau)
    objective = CSObjective(algebras, tau)
    best, used, ranges = maximize(objective, [_rank(a) for a in algebras], tau.dim, budget, target=upper)
    witness = PartitionOfUnity.from_stack(best.stack)
    value = cs_objective(witness, algebras, tau)
    trivial_value = 0.0
    if value < trivial_value:
        witness, value = trivial_partition(tau.dim, len(algebras)), trivial_value
    return EntropyEstimate(value, witness, used, best.converged, upper, {"index_ranges": list(ranges)})


def relative_algebra_entropy(n, p, tau: TraceFunctional, budget=None) -> EntropyEstimate:
    """Lower bound on ``H(N | P)``; exactly 0 when ``N`` is contained in ``P``."""
    from .ascent import maximize

    n = _on_trace(n, tau)
    p = _on_trace(p, tau)
    if n.is_subalgebra_of(p):
        return EntropyEstimate(0.0, trivial_partition(tau.dim, 1), 0, True, 0.0)
    budget = _budget(budget)
    upper = algebra_entropy(n) if isinstance(n, StarSubalgebra) else n.entropy()
    objective = RelativeObjective(n, p, tau)
    best, used, ranges = maximize(objective, [_rank(n)], tau.dim, budget, target=upper)
    witness = PartitionOfUnity.from_stack(best.stack)
    value = float(objective(best.stack))
    if value < 0.0:
        witness, value = trivial_partition(tau.dim, 1), 0.0
    return EntropyEstimate(value, witness, used, best.converged, upper, {"index_ranges": list(ranges)})


def cnt_entropy(state_density, algebras: Sequence, budget=None, tau: TraceFunctional | None = None) -> EntropyEstimate:
    """Lower bound on ``H_phi(N_1, ..., N_k)`` for ``phi = tau(h .)``.

    ``state_density`` is the density ``h`` with respect to the normalized
    trace of the ambient algebra, so ``tau(h) = 1``.
    """
    from .ascent import maximize

    h = _check_psd(np.asarray(state_density, dtype=complex), "state density")
    tau = tau or TraceFunctional.uniform(h.shape[0])
    if h.shape[0] != tau.dim:
        raise DomainError("state and trace dimensions differ")
    mass = float(np.real(tau(h)))
    if abs(mass - 1.0) > SUM_TOL:
        raise DomainError(f"state density must satisfy tau(h) = 1, got {mass}")
    algebras = [_on_trace(a, tau) for a in algebras]
    budget = _budget(budget)
    objective = CNTObjective(h, algebras, tau)
    upper = cnt_upper_bound(h, algebras, tau)
    best, used, ranges = maximize(objective, [_rank(a) for a in algebras], tau.dim, budget, target=upper)
    rho = objective.densities(best.stack)
    witness = StateDecomposition(tuple(best.stack.shape[:-2]), {idx: rho[idx] for idx in itertools.product(*map(range, rho.shape[:-2]))})
    value = cnt_objective(witness, algebras, tau)
    if value < 0.0:
        witness = StateDecomposition((1,) * len(algebras), {(0,) * len(algebras): h})
        value = 0.0
    return EntropyEstimate(value, witness, used, best.converged, upper, {"index_ranges": list(ranges)})


def restricted_state_entropy(h: np.ndarray, alg, tau: TraceFunctional) -> float:
    """Von Neumann entropy of ``phi = tau(h .)`` restricted to ``N``.

    With ``E_N h`` the restricted density, ``z_j`` the central projections
    and ``n_j`` the block sizes, ``S(phi|_N) = tau eta(E_N h) - sum_j
    phi(z_j) log(tau(z_j) / n_j)``: the entropy of the distribution of
    ``phi`` over minimal projections of ``N``.
    """
    alg = _on_trace(alg, tau)
    h = np.asarray(h, dtype=complex)
    if hasattr(alg, "state_entropy"):
        return alg.state_entropy(h)
    a = alg.expect(h[None])[0]
    value = float(trace_eta(a, tau.weights))
    st = alg.structure
    for z, n, t in zip(st.central_projections, st.block_dims, st.central_traces):
        mass = float(np.real(tau(h @ z)))
        value -= mass * math.log(t / n)
    return value


def cnt_upper_bound(h: np.ndarray, algebras: Sequence, tau: TraceFunctional) -> float | None:
    """Smaller of ``sum S(phi|_N_i)`` and ``S(phi|_join)``."""
    bounds = [sum(restricted_state_entropy(h, a, tau) for a in algebras)]
    joined = _materialize_join(algebras, tau)
    if joined is not None:
        bounds.append(restricted_state_entropy(h, joined, tau))
    return float(min(bounds))


def _materialize_join(algebras: Sequence, tau: TraceFunctional, limit: int = 256):
    if all(hasattr(a, "join_all") for a in algebras):
        return type(algebras[0]).join_all(algebras)
    if tau.dim <= limit and all(isinstance(a, StarSubalgebra) for a in algebras):
        return join(algebras)
    return None
