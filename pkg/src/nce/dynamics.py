"""Shift systems on tensor chains and their finite-horizon entropies.

The infinite chain ``... M_d (x) M_d (x) ...`` with a product state is
translation invariant, so every quantity here is computed on the smallest
run of sites that supports it. The ``window`` of a :class:`ShiftSystem`
bounds that run: a query needing more consecutive sites is refused rather
than truncated.

Site-local algebras are :class:`LocalAlgebra` objects (the full matrix
algebra on a set of sites, tensored with the identity elsewhere); their
conditional expectations are normalized partial traces.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .algebras import StarSubalgebra, full_algebra
from .entropy import (
    PartitionOfUnity,
    StateDecomposition,
    _eta,
    cnt_entropy,
    cnt_objective,
    commuting_join_entropy,
    cs_objective,
    entropy_upper_bound,
    maximize_cs_entropy,
    pairwise_commute,
)
from .errors import DomainError, GuardError
from .linalg import TraceFunctional, as_hermitian

MAX_OPTIMIZER_DIM = 64
MAX_WITNESS_SITES = 16


# -- site-local algebras -------------------------------------------------------


class LocalAlgebra:
    """``M_d^(sites) (x) 1`` inside ``M_d^(n_sites)`` with the normalized trace."""

    def __init__(self, sites: Sequence[int], n_sites: int, d: int):
        sites = tuple(sorted(set(int(s) for s in sites)))
        if any(not 0 <= s < n_sites for s in sites):
            raise DomainError(f"sites {sites} outside a chain of {n_sites}")
        self.sites = sites
        self.n_sites = n_sites
        self.d = d
        self.rest = tuple(s for s in range(n_sites) if s not in sites)
        self.tau = TraceFunctional.uniform(self.ambient_dim)

    def __repr__(self) -> str:
        return f"LocalAlgebra(sites={self.sites}, n_sites={self.n_sites}, d={self.d})"

    @property
    def ambient_dim(self) -> int:
        return self.d**self.n_sites

    @property
    def rank(self) -> int:
        return self.d ** len(self.sites)

    @property
    def dim(self) -> int:
        return self.rank**2

    def entropy(self) -> float:
        return len(self.sites) * math.log(self.d)

    def with_trace(self, tau: TraceFunctional) -> "LocalAlgebra":
        if tau.dim != self.ambient_dim or not tau.is_uniform:
            raise DomainError("site-local algebras carry the uniform trace only")
        return self

    def is_tracial(self) -> bool:
        return True

    def commutes_with(self, other: "LocalAlgebra") -> bool:
        return not set(self.sites) & set(other.sites)

    def is_subalgebra_of(self, other) -> bool:
        if isinstance(other, LocalAlgebra):
            return set(self.sites) <= set(other.sites)
        return False

    @staticmethod
    def join_entropy(algebras: Sequence["LocalAlgebra"]) -> float:
        return LocalAlgebra.join_all(algebras).entropy()

    @staticmethod
    def join_all(algebras: Sequence["LocalAlgebra"]) -> "LocalAlgebra":
        a0 = algebras[0]
        sites = set().union(*(a.sites for a in algebras))
        return LocalAlgebra(sites, a0.n_sites, a0.d)

    def _perm(self) -> list[int]:
        return list(self.sites) + list(self.rest)

    def expect_diagonal(self, v: np.ndarray) -> np.ndarray:
        """``E`` on diagonal operators given as vectors of shape ``(..., D)``."""
        v = np.asarray(v)
        lead = v.shape[:-1]
        t = v.reshape(lead + (self.d,) * self.n_sites)
        axes = tuple(len(lead) + s for s in self.rest)
        m = t.mean(axis=axes, keepdims=True) if axes else t
        return np.broadcast_to(m, t.shape).reshape(v.shape)

    def expect(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=complex)
        lead = x.shape[:-2]
        n, d = self.n_sites, self.d
        if not self.rest:
            return x.copy()
        nl = len(lead)
        t = x.reshape(lead + (d,) * (2 * n))
        perm = self._perm()
        order = list(range(nl)) + [nl + p for p in perm] + [nl + n + p for p in perm]
        t = np.transpose(t, order)
        ds, dc = d ** len(self.sites), d ** len(self.rest)
        t = t.reshape(lead + (ds, dc, ds, dc))
        part = np.einsum("...acbc->...ab", t) / dc
        full = np.einsum("...ab,cf->...acbf", part, np.eye(dc))
        full = full.reshape(lead + (d,) * (2 * n))
        inv = np.argsort(perm)
        back = list(range(nl)) + [nl + i for i in inv] + [nl + n + i for i in inv]
        return np.transpose(full, back).reshape(x.shape)

    def expect_adjoint(self, m: np.ndarray) -> np.ndarray:
        return self.expect(m)

    def reduced(self, h: np.ndarray) -> np.ndarray:
        """Partial trace of a trace-one density onto the algebra's sites."""
        n, d = self.n_sites, self.d
        t = np.asarray(h, dtype=complex).reshape((d,) * (2 * n))
        perm = self._perm()
        t = np.transpose(t, perm + [n + p for p in perm])
        ds, dc = d ** len(self.sites), d ** len(self.rest)
        return np.einsum("acbc->ab", t.reshape(ds, dc, ds, dc))

    def state_entropy(self, h: np.ndarray) -> float:
        """Von Neumann entropy of ``phi = tau(h .)`` restricted to the algebra."""
        rho = self.reduced(np.asarray(h) / self.ambient_dim)
        return float(np.sum(_eta(np.clip(np.linalg.eigvalsh(as_hermitian(rho, 1e-8)), 0.0, None))))

    def as_star_subalgebra(self) -> StarSubalgebra:
        """Materialize as a :class:`StarSubalgebra` (small chains only)."""
        local = full_algebra(TraceFunctional.uniform(self.rank))
        return embed_block(local.basis, self.sites, self.n_sites, self.d)


def embed_block(basis: np.ndarray, sites: Sequence[int], n_sites: int, d: int) -> StarSubalgebra:
    """Place operators on ``sites`` (ascending) into ``M_d^(n_sites)``.

    ``basis`` holds ``tau``-orthonormal operators on ``d**len(sites)``
    dimensions for the uniform trace; tensoring with identities keeps them
    orthonormal for the uniform trace of the chain.
    """
    sites = list(sites)
    rest = [s for s in range(n_sites) if s not in sites]
    perm = sites + rest
    inv = list(np.argsort(perm))
    dc = d ** len(rest)
    out = []
    for b in basis:
        full = np.kron(b, np.eye(dc)).reshape((d,) * (2 * n_sites))
        full = np.transpose(full, inv + [n_sites + i for i in inv])
        out.append(full.reshape(d**n_sites, d**n_sites))
    return StarSubalgebra.from_basis(np.array(out), TraceFunctional.uniform(d**n_sites))


# -- systems -------------------------------------------------------------------


@dataclass(frozen=True)
class SiteBlock:
    """Operators on ``width`` consecutive sites.

    ``algebra`` is a subalgebra of ``M_d^(width)`` with the uniform trace;
    ``None`` means the full local algebra.
    """

    width: int
    algebra: StarSubalgebra | None = None

    @property
    def is_full(self) -> bool:
        return self.algebra is None or self.algebra.is_full


@dataclass(frozen=True)
class ShiftSystem:
    """Shift ``alpha^step`` on ``(x)_Z M_d`` with product state ``(x) site_state``.

    ``kind="trace-shift"`` uses the trace (``site_state`` must be ``1/d``);
    ``kind="bernoulli"`` uses the product state. ``step=0`` is the identity
    dynamics. ``window`` caps the number of consecutive sites any query may
    touch.
    """

    site_dim: int
    window: int
    kind: str = "trace-shift"
    site_state: np.ndarray | None = None
    step: int = 1

    def __post_init__(self):
        if self.site_dim < 1 or self.window < 1:
            raise DomainError("site dimension and window must be positive")
        if self.kind not in ("trace-shift", "bernoulli"):
            raise DomainError(f"unknown shift kind {self.kind!r}")
        d = self.site_dim
        state = np.eye(d) / d if self.site_state is None else as_hermitian(self.site_state)
        if state.shape != (d, d):
            raise DomainError("site state has the wrong dimension")
        w = np.linalg.eigvalsh(state)
        if w[0] < -1e-12 or abs(np.trace(state).real - 1.0) > 1e-10:
            raise DomainError("site state must be a density matrix")
        if self.kind == "trace-shift" and np.max(np.abs(state - np.eye(d) / d)) > 1e-12:
            raise DomainError("trace-shift systems use the tracial site state")
        object.__setattr__(self, "site_state", state)

    @classmethod
    def n_shift(cls, n: int, window: int = 16) -> "ShiftSystem":
        return cls(n, window)

    @classmethod
    def bernoulli(cls, probabilities: Sequence[float], window: int = 16) -> "ShiftSystem":
        p = np.asarray(probabilities, dtype=float)
        return cls(len(p), window, "bernoulli", np.diag(p))

    def inverse(self) -> "ShiftSystem":
        return ShiftSystem(self.site_dim, self.window, self.kind, self.site_state, -self.step)

    def power(self, p: int) -> "ShiftSystem":
        return ShiftSystem(self.site_dim, self.window, self.kind, self.site_state, self.step * p)

    def site_entropy(self) -> float:
        return float(np.sum(_eta(np.clip(np.linalg.eigvalsh(self.site_state), 0.0, None))))

    def translate_offsets(self, k: int) -> list[int]:
        return [j * self.step for j in range(k)]

    def span(self, width: int, k: int) -> tuple[int, list[list[int]]]:
        """Sites touched by ``alpha^j`` of a ``width``-site block, ``j < k``.

        Returns the number of sites in the run and, per translate, its site
        positions within the run.
        """
        offs = self.translate_offsets(k)
        lo = min(offs)
        hi = max(offs) + width
        n = hi - lo
        if n > self.window:
            raise GuardError(f"horizon {k} needs {n} consecutive sites; window is {self.window}")
        return n, [list(range(o - lo, o - lo + width)) for o in offs]


@dataclass
class HorizonReport:
    """Per-step entropy bounds ``(1/j) H(N, alpha(N), ..., alpha^(j-1)(N))``, ``j = 1..k``."""

    k: int
    per_step: list[float]
    upper: list[float | None]
    lower_witness: str
    restarts_used: int = 0
    extra: dict = field(default_factory=dict)

    @property
    def lower_bound(self) -> float:
        return self.per_step[-1]

    @property
    def upper_bound(self) -> float | None:
        return self.upper[-1]

    def consistent(self, tol: float = 1e-6) -> bool:
        return all(u is None or lo <= u + tol for lo, u in zip(self.per_step, self.upper))

    def to_json(self) -> dict:
        return {
            "k": self.k,
            "per_step": self.per_step,
            "upper": self.upper,
            "lower_witness": self.lower_witness,
            "restarts_used": self.restarts_used,
        }


# -- witnesses -------------------------------------------------------------------


def _configurations(n_sites: int, d: int) -> np.ndarray:
    return np.array(list(itertools.product(range(d), repeat=n_sites)), dtype=np.int64).reshape(-1, n_sites)


def _slot_index(conf: np.ndarray, sites: list[int], d: int) -> np.ndarray:
    idx = np.zeros(conf.shape[0], dtype=np.int64)
    for s in sites:
        idx = idx * d + conf[:, s]
    return idx


def diagonal_witness(n_sites: int, d: int, placements: list[list[int]], weights: np.ndarray | None = None):
    """Partition by the minimal projections of the diagonal masa of the run.

    The element indexed by ``(i_1, ..., i_k)`` is the diagonal product
    projection whose configuration restricts to ``i_j`` on translate ``j``
    (distinct configurations give distinct indices). With ``weights`` (the
    diagonal of a state density) the same projections yield the
    decomposition ``rho_(i) = h p_(i)``.
    """
    if n_sites > MAX_WITNESS_SITES:
        raise GuardError(f"diagonal witness on {n_sites} sites exceeds the guard of {MAX_WITNESS_SITES}")
    conf = _configurations(n_sites, d)
    slots = np.stack([_slot_index(conf, sites, d) for sites in placements], axis=1)
    dim = d**n_sites
    ranges = tuple(d ** len(s) for s in placements)
    elements = {}
    for c, key in enumerate(map(tuple, slots)):
        v = np.zeros(dim)
        v[c] = 1.0 if weights is None else weights[c]
        elements[key] = v
    if weights is None:
        return PartitionOfUnity(ranges, elements, diagonal=True)
    return StateDecomposition(ranges, elements, diagonal=True)


def _product_diagonal(p: np.ndarray, n_sites: int) -> np.ndarray:
    v = np.ones(1)
    for _ in range(n_sites):
        v = np.kron(v, p)
    return v


def _eigenbasis_probabilities(state: np.ndarray) -> np.ndarray:
    # the centralizer masa; a non-diagonal site density is rotated first
    return np.clip(np.linalg.eigvalsh(state), 0.0, None)[::-1]


def _horizon_step(sys: ShiftSystem, block: SiteBlock, j: int, budget) -> tuple[float, float | None, str, int]:
    n, placements = sys.span(block.width, j)
    d = sys.site_dim
    if block.is_full:
        algs = [LocalAlgebra(p, n, d) for p in placements]
        if sys.kind == "trace-shift":
            wit = diagonal_witness(n, d, placements)
            tau = TraceFunctional.uniform(d**n)
            return cs_objective(wit, algs, tau), entropy_upper_bound(algs, tau), "diagonal-partition", 0
        h = _product_diagonal(_eigenbasis_probabilities(sys.site_state), n) * d**n
        wit = diagonal_witness(n, d, placements, weights=h)
        tau = TraceFunctional.uniform(d**n)
        upper = LocalAlgebra.join_all(algs).state_entropy(np.diag(h))
        return cnt_objective(wit, algs, tau), upper, "centralizer-masa", 0
    if d**n > MAX_OPTIMIZER_DIM:
        raise GuardError(f"optimizer fallback needs ambient dimension {d ** n} > {MAX_OPTIMIZER_DIM}")
    algs = [embed_block(block.algebra.basis, p, n, d) for p in placements]
    tau = TraceFunctional.uniform(d**n)
    if sys.kind == "trace-shift":
        est = maximize_cs_entropy(algs, tau, budget)
    else:
        if np.max(np.abs(sys.site_state - np.diag(np.diag(sys.site_state)))) > 1e-12:
            raise DomainError("optimizer fallback for bernoulli systems needs a diagonal site state")
        h = np.diag(_product_diagonal(np.real(np.diag(sys.site_state)), n)) * d**n
        est = cnt_entropy(h, algs, budget, tau)
    upper = est.upper_bound
    if pairwise_commute(algs) and sys.kind == "trace-shift":
        upper = min(upper, commuting_join_entropy(algs, tau))
    return est.value, upper, "optimizer", est.restarts_used


def horizon_entropy(sys: ShiftSystem, block: SiteBlock, k: int, budget=None) -> HorizonReport:
    """Per-step bounds on ``H(N, alpha(N), ..., alpha^(j-1)(N)) / j`` for ``j = 1..k``.

    Full local blocks use exact witnesses: the diagonal product partition
    for the trace, the centralizer-masa decomposition for product states.
    Other blocks fall back to the optimizer on the materialized run.
    """
    if k < 1:
        raise DomainError("horizon must be positive")
    n, _ = sys.span(block.width, k)
    if not block.is_full and sys.site_dim**n > MAX_OPTIMIZER_DIM:
        raise GuardError(f"optimizer fallback needs ambient dimension {sys.site_dim ** n} > {MAX_OPTIMIZER_DIM}")
    lower, upper = [], []
    tag, used = "", 0
    for j in range(1, k + 1):
        lo, up, tag, u = _horizon_step(sys, block, j, budget)
        used += u
        lower.append(lo / j)
        upper.append(None if up is None else up / j)
    return HorizonReport(k, lower, upper, tag, used)


def ks_truncation_report(sys: ShiftSystem, widths: Sequence[int], k: int, budget=None) -> list[HorizonReport]:
    """Horizon reports for an increasing sequence of full local blocks.

    ``widths`` are the numbers of consecutive sites of ``P_1 <= P_2 <= ...``
    (``2q + 1`` for the central blocks ``P_q``).
    """
    widths = list(widths)
    if any(b < a for a, b in zip(widths, widths[1:])):
        raise DomainError("blocks must be increasing")
    return [horizon_entropy(sys, SiteBlock(w), k, budget) for w in widths]


# -- delta-rank ---------------------------------------------------------------------


@dataclass(frozen=True)
class LocalOperator:
    """An operator on ``d**width`` dimensions placed at site ``start``."""

    start: int
    matrix: np.ndarray

    def width(self, d: int) -> int:
        w = round(math.log(self.matrix.shape[0], d))
        if d**w != self.matrix.shape[0]:
            raise DomainError("local operator dimension is not a power of the site dimension")
        return w

    def shifted(self, p: int) -> "LocalOperator":
        return LocalOperator(self.start + p, self.matrix)


@dataclass(frozen=True)
class Candidate:
    """Approximating algebra on ``sites`` (no sites: the scalars).

    ``algebra`` is a subalgebra of ``M_d^(len(sites))`` with the uniform
    trace; ``None`` means the full local algebra.
    """

    sites: tuple[int, ...]
    algebra: StarSubalgebra | None = None

    @property
    def scalar(self) -> bool:
        return not self.sites

    def rank(self, d: int) -> int:
        if self.algebra is not None and self.sites:
            return int(self.algebra.rank)
        return d ** len(self.sites)


@dataclass
class DeltaRankQuery:
    omega: list[LocalOperator]
    delta: float
    candidates: list[Candidate] = field(default_factory=list)

    def __post_init__(self):
        if self.delta <= 0:
            raise DomainError("delta must be positive")
        for x in self.omega:
            if np.linalg.norm(x.matrix, 2) > 1 + 1e-9:
                raise DomainError("omega elements must have operator norm <= 1")


def _embed(x: LocalOperator, lo: int, n: int, d: int) -> np.ndarray:
    w = x.width(d)
    left = x.start - lo
    right = n - left - w
    if left < 0 or right < 0:
        raise DomainError("operator outside the materialized run")
    return np.kron(np.kron(np.eye(d**left), x.matrix), np.eye(d**right))


def subset_delta_check(omega: Sequence[LocalOperator], a: Candidate, delta: float, d: int, state: np.ndarray | None = None):
    """``omega`` within ``delta`` of the candidate in the 2-norm.

    The approximant for ``x`` is ``E_A(x)`` (trace-preserving conditional
    expectation, a contraction in operator norm). The norm is the trace norm
    ``tau(y* y)^(1/2)`` or, with a site ``state``, ``phi(y* y)^(1/2)`` for
    the product state. Returns ``(ok, distances)``.
    """
    dists = []
    for x in omega:
        w = x.width(d)
        lo = min([x.start] + list(a.sites))
        hi = max([x.start + w] + [s + 1 for s in a.sites])
        n = hi - lo
        xm = _embed(x, lo, n, d)
        if a.scalar:
            ex = np.trace(xm) / xm.shape[0] * np.eye(xm.shape[0])
        elif a.algebra is not None:
            ex = embed_block(a.algebra.basis, [s - lo for s in a.sites], n, d).expect(xm)
        else:
            ex = LocalAlgebra([s - lo for s in a.sites], n, d).expect(xm)
        r = xm - ex
        if state is None:
            val = np.real(np.trace(r.conj().T @ r)) / r.shape[0]
        else:
            rho = _product_density(state, n)
            val = np.real(np.trace(rho @ r.conj().T @ r))
        dists.append(float(math.sqrt(max(val, 0.0))))
    return all(t < delta for t in dists), dists


def _product_density(state: np.ndarray, n: int) -> np.ndarray:
    out = np.ones((1, 1))
    for _ in range(n):
        out = np.kron(out, state)
    return out


def interval_candidates(lo: int, hi: int) -> list[Candidate]:
    """Scalars and every full local algebra on a run of sites inside ``[lo, hi)``."""
    out = [Candidate(())]
    for a in range(lo, hi):
        for b in range(a + 1, hi + 1):
            out.append(Candidate(tuple(range(a, b))))
    return out


def delta_rank_upper(q: DeltaRankQuery, d: int, state: np.ndarray | None = None):
    """Smallest candidate rank passing :func:`subset_delta_check`.

    The scalars and the local algebra on the whole support of ``omega`` are
    always added, so a candidate passes. Returns ``(rank, candidate,
    distances)``; ``rank`` is an upper bound for the delta-rank.
    """
    lo = min(x.start for x in q.omega)
    hi = max(x.start + x.width(d) for x in q.omega)
    cands = list(q.candidates) + [Candidate(()), Candidate(tuple(range(lo, hi)))]
    cands = sorted(set(cands), key=lambda c: (c.rank(d), c.sites, c.algebra is not None))
    for c in cands:
        ok, dists = subset_delta_check(q.omega, c, q.delta, d, state)
        if ok:
            return c.rank(d), c, dists
    raise DomainError("no candidate approximates omega; the support algebra must contain it")


def matrix_units(d: int) -> list[LocalOperator]:
    out = []
    for i in range(d):
        for j in range(d):
            e = np.zeros((d, d), dtype=complex)
            e[i, j] = 1.0
            out.append(LocalOperator(0, e))
    return out


@dataclass
class ApproxEntropyReport:
    """``(1/k) log r(omega_k, delta)`` for ``k = 1..k_max`` (upper bounds)."""

    ranks: list[int]
    per_step: list[float]
    supports: list[tuple[int, ...]]

    def to_json(self) -> dict:
        return {"ranks": self.ranks, "per_step": self.per_step, "supports": [list(s) for s in self.supports]}


def approx_entropy_report(sys: ShiftSystem, omega: Sequence[LocalOperator], delta: float, k_max: int, state_norm: bool = False) -> ApproxEntropyReport:
    """Upper-bound sequence for the approximation entropy.

    At horizon ``k`` the set is ``omega_k = U_{j<k} alpha^j(omega)`` and the
    candidates are the scalars and the full local algebras on runs of sites
    inside the support of ``omega_k``. With ``state_norm`` the 2-norm of the
    product state replaces the trace norm.
    """
    d = sys.site_dim
    state = sys.site_state if state_norm else None
    ranks, vals, supports = [], [], []
    for k in range(1, k_max + 1):
        offs = sys.translate_offsets(k)
        om = [x.shifted(o) for o in offs for x in omega]
        lo = min(x.start for x in om)
        hi = max(x.start + x.width(d) for x in om)
        if hi - lo > sys.window:
            raise GuardError(f"horizon {k} needs {hi - lo} consecutive sites; window is {sys.window}")
        r, cand, _ = delta_rank_upper(DeltaRankQuery(om, delta, interval_candidates(lo, hi)), d, state)
        ranks.append(r)
        vals.append(math.log(r) / k)
        supports.append(tuple(s - lo for s in cand.sites))
    return ApproxEntropyReport(ranks, vals, supports)
