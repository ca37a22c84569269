"""CAR algebra on finitely many modes, quasifree states, Bogoliubov entropy.

Annihilators come from the Jordan-Wigner construction: on ``(C^2)^m``,
``a_k = Z (x) ... (x) Z (x) s (x) 1 (x) ... (x) 1`` with ``s = [[0, 1], [0, 0]]``
in slot ``k`` and ``Z = diag(1, -1)``. For a mode vector ``f``,
``a(f) = sum conj(f_k) a_k`` is antilinear and ``a*(f) = sum f_k a_k*``,
so ``a(f) a*(g) + a*(g) a(f) = (f, g) 1`` with ``(f, g) = sum conj(f_k) g_k``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .errors import DomainError, GuardError, InvariantError
from .linalg import _eta, as_hermitian

MAX_MODES = 12
RELATION_TOL = 1e-10

_LOWER = sp.csr_array(np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex))
_Z = sp.csr_array(np.diag([1.0, -1.0]).astype(complex))


def _kron_all(mats: Sequence[np.ndarray]) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for m in mats:
        out = np.kron(out, m)
    return out


def _sparse_kron_all(mats) -> sp.csr_array:
    out = sp.csr_array(np.ones((1, 1), dtype=complex))
    for m in mats:
        out = sp.kron(out, m, format="csr")
    return out


def _maxabs(x) -> float:
    if sp.issparse(x):
        return float(abs(x).max()) if x.nnz else 0.0
    return float(np.max(np.abs(x), initial=0.0))


def dense(x) -> np.ndarray:
    return x.toarray() if sp.issparse(x) else np.asarray(x)


@dataclass
class CARSystem:
    """Annihilators ``a_1..a_m`` on ``2**m`` dimensions (sparse)."""

    modes: int
    annihilators: list[sp.csr_array]

    @property
    def dim(self) -> int:
        return 2**self.modes

    def a(self, f) -> sp.csr_array:
        f = self._mode_vector(f)
        out = sp.csr_array((self.dim, self.dim), dtype=complex)
        for c, a in zip(np.conj(f), self.annihilators):
            if c != 0:
                out = out + c * a
        return out

    def a_dagger(self, f) -> sp.csr_array:
        return self.a(f).conj().T

    def number(self, k: int) -> sp.csr_array:
        a = self.annihilators[k]
        return a.conj().T @ a

    def _mode_vector(self, f) -> np.ndarray:
        f = np.asarray(f, dtype=complex)
        if f.shape != (self.modes,):
            raise DomainError(f"mode vector must have length {self.modes}")
        return f

    def relation_defects(self, vectors: Sequence[np.ndarray] = ()) -> dict[str, float]:
        """Largest violations of the anticommutation relations.

        Checks all pairs of basis modes and, if given, all pairs of the extra
        ``vectors``.
        """
        eye = sp.eye_array(self.dim, dtype=complex, format="csr")
        anti, square = 0.0, 0.0
        a = self.annihilators
        for i, j in itertools.product(range(self.modes), repeat=2):
            ad = a[j].conj().T
            anti = max(anti, _maxabs(a[i] @ ad + ad @ a[i] - (i == j) * eye))
            anti = max(anti, _maxabs(a[i] @ a[j] + a[j] @ a[i]))
        for f, g in itertools.product(vectors, repeat=2):
            af, ag = self.a(f), self.a(g)
            agd = ag.conj().T
            anti = max(anti, _maxabs(af @ agd + agd @ af - np.vdot(f, g) * eye))
        for f in list(vectors) + [np.eye(self.modes)[k] for k in range(self.modes)]:
            af = self.a(f)
            square = max(square, _maxabs(af @ af))
        return {"anticommutator": float(anti), "square": float(square)}


def build_car(m: int) -> CARSystem:
    """Jordan-Wigner annihilators for ``m`` modes, relations verified."""
    if m < 1:
        raise DomainError("need at least one mode")
    if m > MAX_MODES:
        raise GuardError(f"{m} modes exceed the guard of {MAX_MODES} (dimension 2^{m})")
    eye = sp.eye_array(2, dtype=complex, format="csr")
    ops = [_sparse_kron_all([_Z] * k + [_LOWER] + [eye] * (m - k - 1)) for k in range(m)]
    sys = CARSystem(m, ops)
    defects = sys.relation_defects()
    if defects["anticommutator"] > RELATION_TOL or defects["square"] > 1e-12:
        raise InvariantError(f"CAR relations fail: {defects}")
    return sys


@dataclass
class MatrixUnitSystem:
    """For each mode ``n``, the units ``e^(n)_ij`` (``i, j`` in ``{1, 2}``, stored 0-based).

    ``e12 = a_n V_(n-1)`` with ``V_n = prod_(i<=n) (1 - 2 a_i* a_i)``,
    ``e21 = e12*``, ``e11 = a_n a_n*``, ``e22 = a_n* a_n``.
    """

    units: list[list[list[sp.csr_array]]]  # units[n][i][j] is e^(n)_(i+1, j+1)
    signs: list[sp.csr_array]  # V_1..V_m

    def unit(self, n: int, i: int, j: int):
        return self.units[n][i][j]

    def defects(self) -> dict[str, float]:
        m = len(self.units)
        dim = self.units[0][0][0].shape[-1]
        eye = sp.eye_array(dim, dtype=complex, format="csr")
        mult = adj = total = cross = 0.0
        for n in range(m):
            e = self.units[n]
            total = max(total, _maxabs(e[0][0] + e[1][1] - eye))
            for i, j, k, l in itertools.product(range(2), repeat=4):
                prod = e[i][j] @ e[k][l]
                mult = max(mult, _maxabs(prod - e[i][l]) if j == k else _maxabs(prod))
            for i, j in itertools.product(range(2), repeat=2):
                adj = max(adj, _maxabs(e[i][j].conj().T - e[j][i]))
        for n, p in itertools.combinations(range(m), 2):
            for i, j, k, l in itertools.product(range(2), repeat=4):
                x, y = self.units[n][i][j], self.units[p][k][l]
                cross = max(cross, _maxabs(x @ y - y @ x))
        return {"product": mult, "adjoint": adj, "sum": total, "cross": cross}

    def generated_dimension(self, max_modes: int = 6) -> int:
        """Dimension of the span of all products of one unit per mode."""
        m = len(self.units)
        if m > max_modes:
            raise GuardError(f"span count over 4^{m} products exceeds the guard of {max_modes} modes")
        mats = []
        dim = self.units[0][0][0].shape[-1]
        for choice in itertools.product(range(4), repeat=m):
            x = sp.eye_array(dim, dtype=complex, format="csr")
            for n, c in enumerate(choice):
                x = x @ self.units[n][c // 2][c % 2]
            mats.append(dense(x).ravel())
        return int(np.linalg.matrix_rank(np.array(mats), tol=1e-8))


def matrix_units(sys: CARSystem) -> MatrixUnitSystem:
    eye = sp.eye_array(sys.dim, dtype=complex, format="csr")
    v = eye
    units, signs = [], []
    for n in range(sys.modes):
        a = sys.annihilators[n]
        e12 = a @ v
        units.append([[a @ a.conj().T, e12], [e12.conj().T, a.conj().T @ a]])
        v = v @ (eye - 2.0 * sys.number(n))
        signs.append(v)
    mu = MatrixUnitSystem(units, signs)
    bad = {k: t for k, t in mu.defects().items() if t > RELATION_TOL}
    if bad:
        raise InvariantError(f"matrix-unit identities fail: {bad}")
    return mu


# -- quasifree states ------------------------------------------------------------


def _one_particle(a_op, m: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    a = as_hermitian(a_op)
    if a.shape != (m, m):
        raise DomainError(f"one-particle operator must be {m}x{m}")
    lam, w = np.linalg.eigh(a)
    if lam[0] < -1e-12 or lam[-1] > 1 + 1e-12:
        raise DomainError("one-particle operator must satisfy 0 <= A <= 1")
    return a, np.clip(lam, 0.0, 1.0), w


def quasifree_eval(sys: CARSystem, a_op, monomial: Sequence[tuple[bool, np.ndarray]]) -> complex:
    """``omega_A`` on a Wick-ordered monomial ``a*(f_n)...a*(f_1) a(g_1)...a(g_m)``.

    ``monomial`` lists factors left to right as ``(dagger, vector)``. The
    value is ``det((A g_i, f_j))`` when ``n = m`` and 0 otherwise.
    """
    a, _, _ = _one_particle(a_op, sys.modes)
    daggers = [bool(dg) for dg, _ in monomial]
    if daggers != sorted(daggers, reverse=True):
        raise DomainError("monomial must be Wick ordered (creators first)")
    fs = [sys._mode_vector(v) for dg, v in monomial if dg][::-1]
    gs = [sys._mode_vector(v) for dg, v in monomial if not dg]
    if len(fs) != len(gs):
        return 0.0 + 0.0j
    if not fs:
        return 1.0 + 0.0j
    m = np.array([[np.vdot(a @ g, f) for f in fs] for g in gs])
    return complex(np.linalg.det(m))


def quasifree_density(sys: CARSystem, a_op) -> np.ndarray:
    """Density matrix (trace one) of ``omega_A`` on ``2**m`` dimensions.

    With ``A = W diag(lam) W*`` and ``b_k = a(w_k)``, the state is the
    product of the commuting factors ``(1 - lam_k) b_k b_k* + lam_k b_k* b_k``.
    """
    _, lam, w = _one_particle(a_op, sys.modes)
    rho = sp.eye_array(sys.dim, dtype=complex, format="csr")
    for k in range(sys.modes):
        b = sys.a(w[:, k])
        rho = rho @ ((1 - lam[k]) * (b @ b.conj().T) + lam[k] * (b.conj().T @ b))
    rho = dense(rho)
    return 0.5 * (rho + rho.conj().T)


def monomial_operator(sys: CARSystem, monomial: Sequence[tuple[bool, np.ndarray]]) -> np.ndarray:
    out = sp.eye_array(sys.dim, dtype=complex, format="csr")
    for dagger, v in monomial:
        out = out @ (sys.a_dagger(v) if dagger else sys.a(v))
    return dense(out)


def product_state_on_units(lam: Sequence[float]) -> np.ndarray:
    """``(x) omega0_lam`` in the matrix-unit factorization (weights ``1-lam, lam``)."""
    return _kron_all([np.diag([1.0 - t, t]).astype(complex) for t in lam])


# -- Bogoliubov entropy -----------------------------------------------------------


@dataclass
class SpectralSymbol:
    """Sampled eigenvalues of ``A(theta)`` on ``[0, 2 pi)``.

    ``eigenvalues[i]`` lists the eigenvalues at ``theta[i]`` (its length is the
    multiplicity there, possibly 0); the symbol is constant from ``theta[i]``
    to the next sample, wrapping at ``2 pi``. ``infinite`` marks a symbol
    whose entropy is known to diverge; it is echoed, never computed.
    """

    theta: np.ndarray
    eigenvalues: list[np.ndarray]
    infinite: bool = False
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        theta = np.asarray(self.theta, dtype=float)
        if theta.ndim != 1 or theta.size == 0:
            raise DomainError("theta grid must be a nonempty list")
        if len(self.eigenvalues) != theta.size:
            raise DomainError("one eigenvalue list per theta sample is required")
        if theta[0] != 0.0:
            raise DomainError("theta grid must start at 0 to cover [0, 2 pi)")
        if np.any(np.diff(theta) <= 0) or theta[-1] >= 2 * math.pi:
            raise DomainError("theta grid must increase strictly within [0, 2 pi)")
        eigs = []
        for lam in self.eigenvalues:
            lam = np.asarray(lam, dtype=float).reshape(-1)
            if lam.size and (lam.min() < -1e-12 or lam.max() > 1 + 1e-12):
                raise DomainError("symbol eigenvalues must lie in [0, 1]")
            eigs.append(np.clip(lam, 0.0, 1.0))
        self.theta = theta
        self.eigenvalues = eigs

    @classmethod
    def constant(cls, lam: float, multiplicity: int = 1) -> "SpectralSymbol":
        return cls(np.array([0.0]), [np.full(multiplicity, lam)])

    def lengths(self) -> np.ndarray:
        return np.diff(np.append(self.theta, 2 * math.pi))

    def density(self) -> np.ndarray:
        """``sum (eta(lam) + eta(1 - lam))`` on each constant piece."""
        return np.array([float(np.sum(_eta(lam) + _eta(1.0 - lam))) for lam in self.eigenvalues])


def bogoliubov_entropy(symbol: SpectralSymbol, panels: int = 1024) -> float:
    """``(1/2 pi) int sum (eta(lam) + eta(1 - lam)) dtheta`` by composite Simpson.

    The ``panels`` Simpson panels are spread over the constant pieces of the
    symbol in proportion to their length, each piece receiving an even count
    of at least 2, so the rule never straddles a jump. Returns ``inf`` for a
    symbol flagged infinite.

    Raises:
        DomainError: if ``panels`` is odd or not positive.
    """
    if panels <= 0 or panels % 2:
        raise DomainError(f"composite Simpson needs an even number of panels, got {panels}")
    if symbol.infinite:
        return math.inf
    lengths = symbol.lengths()
    g = symbol.density()
    per_piece = np.maximum(2, 2 * np.round(panels * lengths / (2 * 2 * math.pi))).astype(int)
    terms = np.empty(len(lengths))
    for i, (L, gi, p) in enumerate(zip(lengths, g, per_piece)):
        h = L / p
        w = np.ones(p + 1)
        w[1:-1:2] = 4.0
        w[2:-1:2] = 2.0
        terms[i] = h / 3.0 * float(np.sum(w * gi))
    return max(0.0, float(np.sum(terms)) / (2 * math.pi))


def join_symbols(a: SpectralSymbol, b: SpectralSymbol) -> SpectralSymbol:
    """Symbol of ``A_1 (+) A_2``: eigenvalue lists concatenated on a common grid."""
    grid = np.union1d(a.theta, b.theta)

    def at(s: SpectralSymbol, t: float) -> np.ndarray:
        return s.eigenvalues[int(np.searchsorted(s.theta, t, side="right")) - 1]

    return SpectralSymbol(grid, [np.concatenate([at(a, t), at(b, t)]) for t in grid], a.infinite or b.infinite)
