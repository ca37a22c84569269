"""Unital *-subalgebras of a full matrix algebra M_N.

An algebra is stored as a basis orthonormal for ``<a, b> = tau(a* b)``.
Its block structure (minimal central projections, block sizes ``n_j``,
multiplicities ``m_j`` and central traces ``t_j``) is recovered
numerically from that basis:

1. the center is the null space of commutators with a few generic elements,
2. a generic self-adjoint central element is split spectrally into the
   minimal central projections,
3. ``n_j`` is read off the dimension ``n_j**2`` of each central compression.

The trace-preserving conditional expectation is the ``tau``-orthogonal
projection onto the span of the basis.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError, InvariantError
from .linalg import TraceFunctional, _eta, as_matrix, orthonormalize

STRUCTURAL_TOL = 1e-8
ORTHOGONALITY_TOL = 1e-9
SPECTRAL_GAP = 1e-6
_MAX_RETRIES = 12


@dataclass(frozen=True)
class Block:
    n: int
    m: int
    t: float


@dataclass(frozen=True)
class AlgebraBlockSpec:
    """Direct sum of factors: block ``j`` is ``M_{n_j}`` repeated ``m_j`` times."""

    blocks: tuple[Block, ...]
    ambient_dim: int

    def __post_init__(self):
        object.__setattr__(self, "blocks", tuple(Block(*b) if not isinstance(b, Block) else b for b in self.blocks))
        if not self.blocks:
            raise DomainError("an algebra needs at least one block")
        for b in self.blocks:
            if b.n < 1 or b.m < 1 or not (0.0 < b.t <= 1.0 + 1e-12):
                raise DomainError(f"invalid block {b}")
        total = sum(b.n * b.m for b in self.blocks)
        if total != self.ambient_dim:
            raise DomainError(f"sum n_j*m_j = {total} does not match ambient dimension {self.ambient_dim}")

    @property
    def rank(self) -> int:
        return sum(b.n for b in self.blocks)

    @property
    def dim(self) -> int:
        return sum(b.n * b.n for b in self.blocks)


@dataclass(frozen=True)
class Masa:
    """Minimal projections of an algebra that sum to the identity."""

    projections: np.ndarray  # (rank, N, N)

    @property
    def rank(self) -> int:
        return self.projections.shape[0]


class StarSubalgebra:
    """A unital *-subalgebra of ``M_N`` with a ``tau``-orthonormal basis.

    Args:
        elements: matrices spanning the algebra (the identity is added).
        tau: trace functional defining the Hilbert-Schmidt geometry; it must
            be faithful on the ambient algebra.
        check: verify closure under adjoint and product on random elements.
    """

    def __init__(self, elements: Iterable[np.ndarray], tau: TraceFunctional, check: bool = True):
        if np.any(tau.weights <= 0):
            raise DomainError("the trace must be faithful on the ambient algebra")
        n = tau.dim
        mats = [np.eye(n, dtype=complex)] + [as_matrix(e) for e in elements]
        for e in mats:
            if e.shape != (n, n):
                raise DomainError(f"element of shape {e.shape} in ambient dimension {n}")
        self.tau = tau
        self.basis = np.array(orthonormalize(mats, tau))
        self._dual = np.conj(self.basis) * tau.weights[None, None, :]
        if check:
            self.check_closure()

    @classmethod
    def from_basis(cls, basis: np.ndarray, tau: TraceFunctional) -> "StarSubalgebra":
        """Wrap an already ``tau``-orthonormal basis that contains a multiple of 1."""
        obj = cls.__new__(cls)
        obj.tau = tau
        obj.basis = np.asarray(basis, dtype=complex)
        obj._dual = np.conj(obj.basis) * tau.weights[None, None, :]
        return obj

    @classmethod
    def from_generators(cls, generators: Sequence[np.ndarray], tau: TraceFunctional, max_dim: int | None = None) -> "StarSubalgebra":
        """The *-algebra generated by ``generators`` (and 1)."""
        n = tau.dim
        gens = []
        for g in generators:
            g = as_matrix(g)
            gens.extend([g, g.conj().T])
        basis = np.array(orthonormalize([np.eye(n, dtype=complex)], tau))
        frontier = basis
        cap = max_dim or n * n
        w = tau.weights
        while frontier.shape[0]:
            added = []
            for c in np.einsum("gkl,flm->fgkm", np.array(gens), frontier).reshape(-1, n, n):
                r = c
                for _ in range(2):
                    coeff = np.einsum("aki,ki,i->a", np.conj(basis), r, w)
                    r = r - np.einsum("a,akl->kl", coeff, basis)
                nrm = np.sqrt(max(tau.inner(r, r).real, 0.0))
                if nrm > ORTHOGONALITY_TOL * max(1.0, np.sqrt(max(tau.inner(c, c).real, 0.0))):
                    basis = np.concatenate([basis, (r / nrm)[None]])
                    added.append(basis.shape[0] - 1)
                    if basis.shape[0] > cap:
                        raise InvariantError(f"generated algebra exceeds dimension {cap}")
            frontier = basis[added]
        return cls.from_basis(basis, tau)

    # -- basic data ---------------------------------------------------------

    @property
    def ambient_dim(self) -> int:
        return self.tau.dim

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    @property
    def unit(self) -> np.ndarray:
        return np.eye(self.ambient_dim, dtype=complex)

    @property
    def is_full(self) -> bool:
        return self.dim == self.ambient_dim**2

    def with_trace(self, tau: TraceFunctional) -> "StarSubalgebra":
        if np.array_equal(tau.weights, self.tau.weights):
            return self
        return StarSubalgebra(list(self.basis), tau, check=False)

    def random_element(self, rng: np.random.Generator, hermitian: bool = False) -> np.ndarray:
        c = rng.normal(size=self.dim) + 1j * rng.normal(size=self.dim)
        x = np.einsum("a,akl->kl", c, self.basis)
        if hermitian:
            x = 0.5 * (x + x.conj().T)
        return x

    # -- conditional expectation -------------------------------------------

    def coefficients(self, x: np.ndarray) -> np.ndarray:
        return np.einsum("aki,...ki->...a", self._dual, x)

    def expect(self, x: np.ndarray) -> np.ndarray:
        """``E_N(x)`` for a matrix or a stack of matrices."""
        x = np.asarray(x, dtype=complex)
        if x.shape[-2:] != (self.ambient_dim, self.ambient_dim):
            raise DomainError(f"dimension mismatch: algebra in M_{self.ambient_dim}, operator {x.shape}")
        if self.is_full:
            return x.copy()
        return np.einsum("...a,akl->...kl", self.coefficients(x), self.basis)

    def expect_adjoint(self, m: np.ndarray) -> np.ndarray:
        """Adjoint of ``E_N`` for the pairing ``Tr(a b)``."""
        if self.is_full:
            return np.asarray(m, dtype=complex).copy()
        t = np.einsum("...lk,akl->...a", m, self.basis)
        return np.einsum("...a,aki->...ik", t, self._dual)

    def contains(self, x: np.ndarray, tol: float = STRUCTURAL_TOL) -> bool:
        x = as_matrix(x)
        r = x - self.expect(x)
        scale = max(1.0, float(np.sqrt(max(self.tau.inner(x, x).real, 0.0))))
        return float(np.sqrt(max(self.tau.inner(r, r).real, 0.0))) <= tol * scale

    def check_closure(self, seed: int = 0) -> None:
        """Raise :class:`InvariantError` unless adjoint- and product-closed."""
        rng = np.random.default_rng(seed)
        a = self.random_element(rng)
        b = self.random_element(rng)
        for name, x in (("adjoint", a.conj().T), ("product", a @ b)):
            if not self.contains(x):
                raise InvariantError(f"basis is not closed under {name}")

    def commutes_with(self, other: "StarSubalgebra", tol: float = ORTHOGONALITY_TOL) -> bool:
        rng = np.random.default_rng(0)
        for _ in range(2):
            a = self.random_element(rng)
            b = other.random_element(rng)
            scale = max(1.0, float(np.max(np.abs(a))) * float(np.max(np.abs(b))))
            if np.max(np.abs(a @ b - b @ a)) > tol * scale:
                return False
        return True

    def is_subalgebra_of(self, other: "StarSubalgebra", tol: float = STRUCTURAL_TOL) -> bool:
        return all(other.contains(b, tol) for b in self.basis)

    def is_tracial(self, tol: float = ORTHOGONALITY_TOL) -> bool:
        rng = np.random.default_rng(1)
        for _ in range(3):
            a = self.random_element(rng)
            b = self.random_element(rng)
            if abs(self.tau(a @ b) - self.tau(b @ a)) > tol * max(1.0, abs(self.tau(a @ b))):
                return False
        return True

    # -- block structure ----------------------------------------------------

    @cached_property
    def center_basis(self) -> np.ndarray:
        if self.dim == 1:
            return self.basis.copy()
        for seed in range(_MAX_RETRIES):
            rng = np.random.default_rng(seed)
            gens = [self.random_element(rng) for _ in range(2)]
            cols = []
            for g in gens:
                comm = np.einsum("akl,lm->akm", self.basis, g) - np.einsum("kl,alm->akm", g, self.basis)
                cols.append(comm.reshape(self.dim, -1))
            m = np.concatenate(cols, axis=1).T
            _, s, vh = np.linalg.svd(m, full_matrices=True)
            scale = max(s[0], 1.0) if s.size else 1.0
            rank = int(np.sum(s > STRUCTURAL_TOL * scale))
            null = vh[rank:].conj()
            z = np.einsum("ca,akl->ckl", null, self.basis)
            if self._all_central(z):
                return np.array(orthonormalize(list(z), self.tau))
        raise InvariantError("could not isolate the center")

    def _all_central(self, z: np.ndarray) -> bool:
        if z.shape[0] == 0:
            return False
        rng = np.random.default_rng(12345)
        x = self.random_element(rng)
        comm = z @ x - x @ z
        return float(np.max(np.abs(comm))) <= STRUCTURAL_TOL * max(1.0, float(np.max(np.abs(x))))

    @cached_property
    def structure(self) -> "BlockStructure":
        return _block_structure(self)

    @property
    def rank(self) -> int:
        return self.structure.rank

    def center(self) -> "StarSubalgebra":
        return StarSubalgebra.from_basis(self.center_basis, self.tau)

    def masa(self) -> Masa:
        return _masa(self)


@dataclass(frozen=True)
class BlockStructure:
    central_projections: np.ndarray  # (blocks, N, N)
    block_dims: tuple[int, ...]
    multiplicities: tuple[int, ...]
    central_traces: tuple[float, ...]

    @property
    def rank(self) -> int:
        return sum(self.block_dims)

    @property
    def num_blocks(self) -> int:
        return len(self.block_dims)

    def as_spec(self) -> AlgebraBlockSpec:
        blocks = tuple(Block(n, m, t) for n, m, t in zip(self.block_dims, self.multiplicities, self.central_traces))
        return AlgebraBlockSpec(blocks, int(sum(n * m for n, m in zip(self.block_dims, self.multiplicities))))


def _spectral_clusters(w: np.ndarray, gap: float) -> list[np.ndarray] | None:
    """Group sorted eigenvalues; ``None`` when two clusters are too close."""
    order = np.argsort(w)
    ws = w[order]
    scale = max(1.0, float(np.max(np.abs(ws), initial=0.0)))
    groups = [[order[0]]]
    for prev, cur, idx in zip(ws[:-1], ws[1:], order[1:]):
        if cur - prev > 1e-7 * scale:
            if cur - prev < gap * scale:
                return None
            groups.append([idx])
        else:
            groups[-1].append(idx)
    return [np.array(g) for g in groups]


def _block_structure(alg: StarSubalgebra) -> BlockStructure:
    zb = alg.center_basis
    tau = alg.tau
    n_center = zb.shape[0]
    herm = np.concatenate([0.5 * (zb + np.conj(np.swapaxes(zb, 1, 2))), 0.5j * (np.conj(np.swapaxes(zb, 1, 2)) - zb)])
    projections = None
    for seed in range(_MAX_RETRIES):
        rng = np.random.default_rng(seed)
        z = np.einsum("a,akl->kl", rng.normal(size=herm.shape[0]), herm)
        z = 0.5 * (z + z.conj().T)
        w, v = np.linalg.eigh(z)
        groups = _spectral_clusters(w, SPECTRAL_GAP)
        if groups is None or len(groups) != n_center:
            continue
        projections = np.array([v[:, g] @ v[:, g].conj().T for g in groups])
        break
    if projections is None:
        raise InvariantError("could not split the center into minimal projections")
    dims, mults, traces = [], [], []
    for p in projections:
        comp = alg.basis @ p
        gram = np.einsum("aki,bki,i->ab", np.conj(comp), comp, tau.weights)
        ev = np.linalg.eigvalsh(0.5 * (gram + gram.conj().T))
        d2 = int(np.sum(ev > STRUCTURAL_TOL * max(1.0, float(ev.max()))))
        nj = int(round(np.sqrt(d2)))
        if nj * nj != d2:
            raise InvariantError(f"central compression of dimension {d2} is not a full matrix block")
        rk = int(round(np.real(np.trace(p))))
        if rk % nj:
            raise InvariantError("projection rank not divisible by block size")
        dims.append(nj)
        mults.append(rk // nj)
        traces.append(float(np.real(tau(p))))
    order = np.argsort([-t for t in traces], kind="stable")
    return BlockStructure(
        central_projections=projections[order],
        block_dims=tuple(dims[i] for i in order),
        multiplicities=tuple(mults[i] for i in order),
        central_traces=tuple(traces[i] for i in order),
    )


def _masa(alg: StarSubalgebra) -> Masa:
    st = alg.structure
    projections = []
    for p, nj, mj in zip(st.central_projections, st.block_dims, st.multiplicities):
        if nj == 1:
            projections.append(p)
            continue
        w_p, v_p = np.linalg.eigh(p)
        rng_p = v_p[:, w_p > 0.5]
        for seed in range(_MAX_RETRIES):
            rng = np.random.default_rng(seed)
            y = alg.random_element(rng, hermitian=True)
            yr = rng_p.conj().T @ y @ rng_p
            w, v = np.linalg.eigh(0.5 * (yr + yr.conj().T))
            groups = _spectral_clusters(w, SPECTRAL_GAP)
            if groups is None or len(groups) != nj or any(len(g) != mj for g in groups):
                continue
            for g in groups:
                u = rng_p @ v[:, g]
                projections.append(u @ u.conj().T)
            break
        else:
            raise InvariantError("could not diagonalize a block of the algebra")
    return Masa(np.array(projections))


# -- constructors ------------------------------------------------------------


def build_block_algebra(spec: AlgebraBlockSpec) -> StarSubalgebra:
    """Canonical block-diagonal embedding of ``sum_j M_{n_j} (x) 1_{m_j}``.

    The trace on the ambient algebra gives each diagonal entry of block ``j``
    weight ``t_j / (n_j m_j)``, so the central traces are exactly ``t_j``.
    """
    n = spec.ambient_dim
    weights = np.empty(n)
    basis = []
    off = 0
    for b in spec.blocks:
        size = b.n * b.m
        weights[off : off + size] = b.t / size
        for i in range(b.n):
            for j in range(b.n):
                e = np.zeros((n, n), dtype=complex)
                for r in range(b.m):
                    e[off + r * b.n + i, off + r * b.n + j] = 1.0
                basis.append(e)
        off += size
    tau = TraceFunctional(weights / weights.sum())
    return StarSubalgebra(basis, tau)


def full_algebra(tau: TraceFunctional) -> StarSubalgebra:
    n = tau.dim
    basis = np.zeros((n * n, n, n), dtype=complex)
    for a in range(n):
        for b in range(n):
            basis[a * n + b, a, b] = 1.0 / np.sqrt(tau.weights[b])
    return StarSubalgebra.from_basis(basis, tau)


def scalar_algebra(tau: TraceFunctional) -> StarSubalgebra:
    n = tau.dim
    return StarSubalgebra.from_basis(np.eye(n, dtype=complex)[None] / np.sqrt(tau.weights.sum()), tau)


def diagonal_algebra(tau: TraceFunctional, unitary: np.ndarray | None = None) -> StarSubalgebra:
    """The diagonal masa, optionally conjugated by ``unitary``."""
    n = tau.dim
    basis = np.zeros((n, n, n), dtype=complex)
    for a in range(n):
        basis[a, a, a] = 1.0 / np.sqrt(tau.weights[a])
    if unitary is None:
        return StarSubalgebra.from_basis(basis, tau)
    u = np.asarray(unitary, dtype=complex)
    return StarSubalgebra([u @ b @ u.conj().T for b in basis], tau)


def join(algebras: Sequence[StarSubalgebra]) -> StarSubalgebra:
    """The *-algebra generated by a family sharing the same ambient."""
    if not algebras:
        raise DomainError("join of an empty family")
    tau = algebras[0].tau
    for a in algebras[1:]:
        if a.ambient_dim != tau.dim:
            raise DomainError("algebras do not share an ambient")
    if any(a.is_full for a in algebras):
        return full_algebra(tau)
    gens = [b for a in algebras for b in a.basis]
    return StarSubalgebra.from_generators(gens, tau)


# -- operations --------------------------------------------------------------


def conditional_expectation(n: StarSubalgebra, x, tau: TraceFunctional | None = None) -> np.ndarray:
    """Trace-preserving conditional expectation onto ``n``.

    ``E(x)`` is the unique element of ``n`` with ``tau(E(x) y) = tau(x y)``
    for all ``y`` in ``n``.
    """
    if tau is not None:
        if tau.dim != n.ambient_dim:
            raise DomainError("dimension mismatch between trace and algebra")
        n = n.with_trace(tau)
    return n.expect(as_matrix(x))


def rank_center_masa(n: StarSubalgebra) -> tuple[int, StarSubalgebra, Masa]:
    return n.rank, n.center(), n.masa()


def algebra_entropy(n: StarSubalgebra, tau: TraceFunctional | None = None) -> float:
    """``H(N) = sum_j n_j eta(t_j / n_j)`` over the blocks of ``N``.

    Raises:
        DomainError: if ``tau`` is not tracial on ``N``.
    """
    if tau is not None:
        n = n.with_trace(tau)
    if not n.is_tracial():
        raise DomainError("algebra entropy needs a trace that is tracial on the algebra")
    st = n.structure
    return float(sum(nj * _eta(np.array([t / nj]))[0] for nj, t in zip(st.block_dims, st.central_traces)))
