"""Finite-dimensional pressure and its shift-invariant limit.

``pressure_fd(H) = log Tr exp(-H)`` with the Gibbs state as the unique
maximizer of ``S(rho) - Tr(rho H)``. For a translation-invariant local
Hamiltonian on a chain, ``p_k = log Tr exp(-H_k) / (k + 1)`` with
``H_k = sum_(j=0..k) alpha^j(h)`` on ``k + s`` sites (open boundary).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .entropy import relative_entropy, von_neumann_entropy
from .errors import DomainError, GuardError, InvariantError
from .linalg import TraceFunctional, as_hermitian, eigh

SITE_BITS_GUARD = 14
MAX_DENSE_DIM = 2048


def _logsumexp_neg(w: np.ndarray) -> float:
    m = float(np.min(w))
    return -m + math.log(float(np.sum(np.exp(-(w - m)))))


def pressure_fd(h) -> float:
    """``log Tr exp(-H)`` from the spectrum, shifted for overflow safety."""
    return _logsumexp_neg(np.linalg.eigvalsh(as_hermitian(h)))


@dataclass
class GibbsState:
    density: np.ndarray
    log_partition: float


def gibbs_state(h) -> GibbsState:
    """``exp(-H) / Tr exp(-H)`` via the spectral calculus."""
    w, v = eigh(h)
    m = float(np.min(w))
    p = np.exp(-(w - m))
    z = float(np.sum(p))
    rho = (v * (p / z)) @ v.conj().T
    return GibbsState(0.5 * (rho + rho.conj().T), -m + math.log(z))


def variational_gap(rho, h) -> float:
    """``pressure_fd(H) - (S(rho) - Tr(rho H))``, nonnegative.

    Cross-checked against the identity ``gap = S(rho, Gibbs(H))``
    (relative entropy with the unnormalized trace).
    """
    h = as_hermitian(h)
    rho = as_hermitian(rho)
    if rho.shape != h.shape:
        raise DomainError("density and Hamiltonian dimensions differ")
    s = von_neumann_entropy(rho)
    energy = float(np.real(np.trace(rho @ h)))
    gap = pressure_fd(h) - (s - energy)
    g = gibbs_state(h)
    rel = relative_entropy(rho, g.density, TraceFunctional(np.ones(h.shape[0])))
    if abs(rel - gap) > 1e-8 * max(1.0, abs(gap), abs(energy)):
        raise InvariantError(f"variational gap {gap} disagrees with relative entropy {rel}")
    if gap < -1e-9:
        raise InvariantError(f"negative variational gap {gap}")
    return max(gap, 0.0)


def random_density(dim: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """A random density matrix (Ginibre construction)."""
    r = rank or dim
    g = rng.standard_normal((dim, r)) + 1j * rng.standard_normal((dim, r))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def variational_sup_check(h, samples: int = 200, seed: int = 0) -> dict:
    """Largest ``S(rho) - Tr(rho H)`` over random densities vs ``pressure_fd(H)``."""
    h = as_hermitian(h)
    rng = np.random.default_rng(seed)
    best = -math.inf
    for i in range(samples):
        rho = random_density(h.shape[0], rng, rank=1 + i % h.shape[0])
        best = max(best, von_neumann_entropy(rho) - float(np.real(np.trace(rho @ h))))
    p = pressure_fd(h)
    return {"sampled_max": best, "pressure": p, "gibbs_gap": variational_gap(gibbs_state(h).density, h)}


def peierls_bogoliubov_check(h, k, tol: float = 1e-9) -> dict:
    """``log Tr exp(H) <= log Tr exp(K)`` for ``H <= K``.

    Raises:
        DomainError: if ``K - H`` is not positive semidefinite.
    """
    h = as_hermitian(h)
    k = as_hermitian(k)
    gap = float(np.linalg.eigvalsh(k - h)[0])
    if gap < -1e-10 * max(1.0, float(np.max(np.abs(k - h)))):
        raise DomainError(f"precondition H <= K fails (min eigenvalue of K - H is {gap:.3e})")
    lhs = pressure_fd(-h)
    rhs = pressure_fd(-k)
    return {"ok": lhs <= rhs + tol, "lhs": lhs, "rhs": rhs}


def tangent_check(h, k, tol: float = 1e-9) -> dict:
    """``pressure_fd(H + K) - pressure_fd(H) >= -Tr(Gibbs(H) K)``."""
    h = as_hermitian(h)
    k = as_hermitian(k)
    lhs = pressure_fd(h + k) - pressure_fd(h)
    rhs = -float(np.real(np.trace(gibbs_state(h).density @ k)))
    return {"ok": lhs >= rhs - tol, "lhs": lhs, "rhs": rhs}


# -- chains ------------------------------------------------------------------------


@dataclass(frozen=True)
class LocalHamiltonian:
    """A term on ``support`` consecutive sites of ``d``-level systems, translated by the shift."""

    site_dim: int
    support: int
    term: np.ndarray

    def __post_init__(self):
        t = as_hermitian(self.term)
        if t.shape[0] != self.site_dim**self.support:
            raise DomainError(f"term must act on {self.site_dim}^{self.support} dimensions")
        object.__setattr__(self, "term", t)

    @property
    def norm(self) -> float:
        return float(np.max(np.abs(np.linalg.eigvalsh(self.term)), initial=0.0))

    @property
    def is_diagonal(self) -> bool:
        return bool(np.max(np.abs(self.term - np.diag(np.diag(self.term))), initial=0.0) == 0.0)

    @classmethod
    def zero(cls, d: int = 2) -> "LocalHamiltonian":
        return cls(d, 1, np.zeros((d, d)))

    @classmethod
    def ising(cls, coupling: float = 1.0) -> "LocalHamiltonian":
        """``-J sigma_z (x) sigma_z`` on two sites."""
        z = np.diag([1.0, -1.0])
        return cls(2, 2, -coupling * np.kron(z, z))

    def padded(self, support: int) -> "LocalHamiltonian":
        if support < self.support:
            raise DomainError("cannot shrink the support")
        extra = self.site_dim ** (support - self.support)
        return LocalHamiltonian(self.site_dim, support, np.kron(self.term, np.eye(extra)))

    def shifted_term(self) -> np.ndarray:
        """``alpha(h)`` as an operator on ``support + 1`` sites."""
        return np.kron(np.eye(self.site_dim), self.term)

    def __add__(self, other: "LocalHamiltonian") -> "LocalHamiltonian":
        s = max(self.support, other.support)
        a, b = self.padded(s), other.padded(s)
        return LocalHamiltonian(self.site_dim, s, a.term + b.term)

    def scaled(self, c: float) -> "LocalHamiltonian":
        return LocalHamiltonian(self.site_dim, self.support, c * self.term)


def _check_guard(lh: LocalHamiltonian, k: int) -> None:
    if (k + lh.support) * math.log2(lh.site_dim) > SITE_BITS_GUARD + 1e-12:
        raise GuardError(f"horizon {k} with support {lh.support} exceeds 2^{SITE_BITS_GUARD} dimensions")


def chain_diagonal(lh: LocalHamiltonian, k: int, periodic: bool = False) -> np.ndarray:
    """Diagonal of ``H_k`` for a diagonal term."""
    d, s = lh.site_dim, lh.support
    n = k + s if not periodic else k + 1
    if periodic and s > n:
        raise DomainError("periodic chain shorter than the interaction")
    diag = np.real(np.diag(lh.term)).reshape((d,) * s)
    total = np.zeros((d,) * n)
    for j in range(k + 1):
        sites = [(j + t) % n for t in range(s)]
        shape = [1] * n
        for t, site in enumerate(sites):
            shape[site] = d
        # move the term's axes into the positions of its sites
        order = np.argsort(sites)
        term = np.transpose(diag, order).reshape(shape)
        total = total + term
    return total.reshape(-1)


def chain_hamiltonian(lh: LocalHamiltonian, k: int, periodic: bool = False) -> np.ndarray:
    """Dense ``H_k`` on ``k + s`` sites (open) or ``k + 1`` sites (periodic)."""
    d, s = lh.site_dim, lh.support
    n = k + s if not periodic else k + 1
    if periodic and s > n:
        raise DomainError("periodic chain shorter than the interaction")
    dim = d**n
    if dim > MAX_DENSE_DIM:
        raise GuardError(f"dense chain Hamiltonian of dimension {dim} exceeds {MAX_DENSE_DIM}")
    total = np.zeros((dim, dim), dtype=complex)
    for j in range(k + 1):
        sites = [(j + q) % n for q in range(s)]
        rest = [q for q in range(n) if q not in sites]
        perm = sites + rest
        inv = list(np.argsort(perm))
        full = np.kron(lh.term, np.eye(d ** len(rest))).reshape((d,) * (2 * n))
        full = np.transpose(full, inv + [n + i for i in inv])
        total += full.reshape(dim, dim)
    return 0.5 * (total + total.conj().T)


def chain_log_partition(lh: LocalHamiltonian, k: int, periodic: bool = False) -> float:
    """``log Tr exp(-H_k)``; diagonal terms avoid forming the matrix.

    A single-site term is diagonalized by the product of its eigenbasis, so
    it also takes the diagonal path.
    """
    _check_guard(lh, k)
    if lh.support == 1 and not lh.is_diagonal:
        lh = LocalHamiltonian(lh.site_dim, 1, np.diag(np.linalg.eigvalsh(lh.term)))
    if lh.is_diagonal:
        return _logsumexp_neg(chain_diagonal(lh, k, periodic))
    return pressure_fd(chain_hamiltonian(lh, k, periodic))


def finite_pressure(lh: LocalHamiltonian, k: int, periodic: bool = False) -> float:
    """``p_k = log Tr exp(-H_k) / (k + 1)``."""
    return chain_log_partition(lh, k, periodic) / (k + 1)


@dataclass
class PressureSequence:
    horizons: list[int]
    values: list[float]
    boundary: str = "open"

    @property
    def last(self) -> float:
        return self.values[-1]

    @property
    def aitken(self) -> float | None:
        """Aitken delta-squared estimate from the last three values."""
        if len(self.values) < 3:
            return None
        a, b, c = self.values[-3:]
        den = c - 2 * b + a
        if abs(den) < 1e-15:
            return c
        return c - (c - b) ** 2 / den

    def to_json(self) -> dict:
        return {"horizons": self.horizons, "values": self.values, "last": self.last, "aitken": self.aitken, "boundary": self.boundary}


def shift_pressure_estimate(lh: LocalHamiltonian, k_max: int, periodic: bool = False, k_min: int = 0) -> PressureSequence:
    """``p_k`` for ``k = k_min..k_max``.

    Raises:
        GuardError: if ``(k_max + s) log2 d`` exceeds 14.
    """
    _check_guard(lh, k_max)
    if periodic:
        k_min = max(k_min, lh.support - 1)
    ks = list(range(k_min, k_max + 1))
    return PressureSequence(ks, [finite_pressure(lh, k, periodic) for k in ks], "periodic" if periodic else "open")


def transfer_matrix(coupling: float = 1.0, field_strength: float = 0.0) -> np.ndarray:
    """``T_(s,s') = exp(J s s' + h (s + s') / 2)`` for spins ``s = +-1``."""
    spins = np.array([1.0, -1.0])
    return np.exp(coupling * np.outer(spins, spins) + 0.5 * field_strength * (spins[:, None] + spins[None, :]))


def ising_transfer_pressure(coupling: float = 1.0, field_strength: float = 0.0, iterations: int = 10_000) -> float:
    """``log lambda_max(T)`` by power iteration (no eigensolver)."""
    t = transfer_matrix(coupling, field_strength)
    v = np.ones(2)
    lam = 0.0
    for _ in range(iterations):
        w = t @ v
        new = float(np.linalg.norm(w))
        v = w / new
        if abs(new - lam) <= 1e-15 * new:
            break
        lam = new
    return math.log(float(v @ t @ v))


def ising_open_log_partition(coupling: float, n_sites: int) -> float:
    """``log Z`` of the open Ising chain by transfer-matrix products."""
    t = transfer_matrix(coupling)
    v = np.ones(2)
    logz = 0.0
    for _ in range(n_sites - 1):
        v = t @ v
        s = float(v.sum())
        logz += math.log(s)
        v = v / s
    return logz + math.log(float(v.sum()))


# -- property suite -------------------------------------------------------------------


def _random_hermitian(dim: int, rng: np.random.Generator, diagonal: bool) -> np.ndarray:
    if diagonal:
        return np.diag(rng.standard_normal(dim)).astype(complex)
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return 0.5 * (g + g.conj().T)


@dataclass
class SuiteReport:
    checks: dict[str, dict] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(c["ok"] for c in self.checks.values())

    def to_json(self) -> dict:
        return {"ok": self.ok, "checks": self.checks}


def pressure_property_suite(lh: LocalHamiltonian, k: int = 10, seed: int = 0, c_shift: float = 0.7) -> SuiteReport:
    """Structural properties of ``p_k`` at a fixed horizon.

    Checks monotonicity under ``H <= K``, the constant shift identity, the
    Lipschitz bound, the coboundary defect ``|p_k(H + alpha(K) - K) - p_k(H)|
    <= 2 ||K|| / (k + 1)`` (both sides on a common padded support) and
    midpoint convexity along a segment. Random partners are diagonal when
    ``lh`` is, keeping the computation on the fast path.
    """
    rng = np.random.default_rng(seed)
    d, s = lh.site_dim, lh.support
    dim = d**s
    diag = lh.is_diagonal
    rep = SuiteReport()
    p = finite_pressure(lh, k)

    bump = _random_hermitian(dim, rng, diag)
    w, v = np.linalg.eigh(bump)
    psd = (v * np.abs(w)) @ v.conj().T
    upper = LocalHamiltonian(d, s, lh.term + psd)
    pu = finite_pressure(upper, k)
    rep.checks["monotone"] = {"ok": p >= pu - 1e-12, "p_H": p, "p_K": pu}

    shifted = LocalHamiltonian(d, s, lh.term + c_shift * np.eye(dim))
    ps = finite_pressure(shifted, k)
    rep.checks["constant_shift"] = {"ok": abs(ps - (p - c_shift)) <= 1e-12, "defect": abs(ps - (p - c_shift))}

    other = LocalHamiltonian(d, s, lh.term + 0.5 * _random_hermitian(dim, rng, diag))
    po = finite_pressure(other, k)
    dist = float(np.max(np.abs(np.linalg.eigvalsh(other.term - lh.term))))
    rep.checks["lipschitz"] = {"ok": abs(p - po) <= dist + 1e-12, "difference": abs(p - po), "norm": dist}

    kk = _random_hermitian(dim, rng, diag)
    kk = kk / float(np.max(np.abs(np.linalg.eigvalsh(kk))))
    kterm = LocalHamiltonian(d, s, kk)
    coboundary = LocalHamiltonian(d, s + 1, kterm.shifted_term() - kterm.padded(s + 1).term)
    base = lh.padded(s + 1)
    pb = finite_pressure(base, k)
    pc = finite_pressure(base + coboundary, k)
    bound = 2.0 * kterm.norm / (k + 1)
    rep.checks["coboundary"] = {"ok": abs(pc - pb) <= bound + 1e-12, "defect": abs(pc - pb), "bound": bound}

    lams = np.linspace(0.0, 1.0, 5)
    vals = [finite_pressure(LocalHamiltonian(d, s, t * lh.term + (1 - t) * other.term), k) for t in lams]
    mids = [vals[i] - 0.5 * (vals[i - 1] + vals[i + 1]) for i in range(1, 4)]
    rep.checks["convexity"] = {"ok": all(m <= 1e-12 for m in mids), "midpoint_excess": max(mids)}
    return rep
