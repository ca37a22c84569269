"""Dense complex Hermitian linear algebra.

Spectral decomposition, the scalar functions used throughout (``eta``,
``log``, ``exp``, ``sqrt``) lifted to Hermitian matrices, and the weighted
trace functional ``tau(x) = sum_i w_i x_ii`` with its Hilbert-Schmidt
geometry.

Matrices are plain ``numpy`` arrays. Functions that need a Hermitian input
validate it and return the symmetrized form ``(M + M*)/2``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .errors import DomainError

HERMITIAN_TOL = 1e-10
CLAMP_TOL = 1e-12
ORTHO_DROP_TOL = 1e-9


class SpectralDecomposition(NamedTuple):
    """Eigenvalues in ascending order and orthonormal eigenvector columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


def as_matrix(m) -> np.ndarray:
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2:
        raise DomainError(f"expected a 2-d matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise DomainError("matrix has non-finite entries")
    return a


def hermitian_defect(m: np.ndarray) -> float:
    return float(np.max(np.abs(m - m.conj().T), initial=0.0))


def as_hermitian(m, tol: float = HERMITIAN_TOL) -> np.ndarray:
    """Validate ``m`` as Hermitian and return ``(m + m*)/2``.

    Raises:
        DomainError: if ``m`` is not square or its Hermitian defect exceeds
            ``tol * max(1, max|m_ij|)``; the message reports the defect.
    """
    a = as_matrix(m)
    if a.shape[0] != a.shape[1]:
        raise DomainError(f"matrix must be square, got shape {a.shape}")
    scale = max(1.0, float(np.max(np.abs(a), initial=0.0)))
    defect = hermitian_defect(a)
    if defect > tol * scale:
        raise DomainError(f"matrix is not Hermitian: defect {defect:.3e}")
    return 0.5 * (a + a.conj().T)


def eigh(h) -> SpectralDecomposition:
    """Eigendecomposition of a Hermitian matrix, eigenvalues ascending."""
    a = as_hermitian(h)
    w, v = np.linalg.eigh(a)
    return SpectralDecomposition(w, v)


def jacobi_eigh(h, tol: float = 1e-12, max_sweeps: int = 100) -> SpectralDecomposition:
    """Cyclic complex Jacobi eigensolver.

    Slow (one Python-level rotation per off-diagonal pair) but independent of
    LAPACK; the test-suite uses it to cross-check :func:`eigh`.

    Each rotation first removes the phase of ``a_pq`` with a diagonal unitary
    and then applies the classical real Jacobi rotation.
    """
    a = as_hermitian(h).copy()
    n = a.shape[0]
    v = np.eye(n, dtype=complex)
    for _ in range(max_sweeps):
        off = np.sum(np.abs(np.triu(a, 1)))
        if off < tol:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                r = abs(apq)
                if r < 1e-300:
                    continue
                phase = apq / r
                theta = (a[q, q].real - a[p, p].real) / (2.0 * r)
                t = np.sign(theta) / (abs(theta) + np.sqrt(1.0 + theta * theta))
                if theta == 0.0:
                    t = 1.0
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                g = np.array([[c, s], [-s * phase.conjugate(), c * phase.conjugate()]])
                idx = [p, q]
                a[:, idx] = a[:, idx] @ g
                a[idx, :] = g.conj().T @ a[idx, :]
                a[q, p] = 0.0
                a[p, q] = 0.0
                v[:, idx] = v[:, idx] @ g
    w = np.real(np.diag(a))
    order = np.argsort(w, kind="stable")
    return SpectralDecomposition(w[order], v[:, order])


def _eta(t: np.ndarray) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    pos = t > 0
    out[pos] = -t[pos] * np.log(t[pos])
    return out


def _clamp_nonnegative(w: np.ndarray, name: str) -> np.ndarray:
    bad = w < -CLAMP_TOL
    if np.any(bad):
        raise DomainError(f"{name} requires eigenvalues >= 0; got {float(w[bad].min()):.3e}")
    return np.clip(w, 0.0, None)


def _log_positive(w: np.ndarray, support: bool) -> np.ndarray:
    w = _clamp_nonnegative(w, "log")
    out = np.zeros_like(w)
    pos = w > 0
    if not support and not np.all(pos):
        raise DomainError("log of a singular operator; pass support=True to restrict to the support")
    out[pos] = np.log(w[pos])
    return out


_FUNCTIONS: dict[str, Callable[[np.ndarray, bool], np.ndarray]] = {
    "eta": lambda w, s: _eta(_clamp_nonnegative(w, "eta")),
    "log": _log_positive,
    "exp": lambda w, s: np.exp(w),
    "sqrt": lambda w, s: np.sqrt(_clamp_nonnegative(w, "sqrt")),
}


def matrix_function(h, f: str, support: bool = False) -> np.ndarray:
    """Apply a named scalar function to a Hermitian matrix.

    Args:
        h: Hermitian matrix.
        f: one of ``"eta"``, ``"log"``, ``"exp"``, ``"sqrt"``.
        support: for ``"log"``, evaluate on the support only (zero
            eigenvalues are mapped to 0 instead of raising).

    Eigenvalues in ``[-1e-12, 0)`` are clamped to 0 for the domain-restricted
    functions; anything more negative raises :class:`DomainError`.
    """
    try:
        fn = _FUNCTIONS[f]
    except KeyError:
        raise DomainError(f"unknown matrix function {f!r}") from None
    w, v = eigh(h)
    fw = fn(w, support)
    return (v * fw) @ v.conj().T


def support_projection(h, tol: float = 1e-10) -> np.ndarray:
    w, v = eigh(h)
    keep = v[:, w > tol]
    return keep @ keep.conj().T


@dataclass(frozen=True)
class TraceFunctional:
    """Positive functional ``tau(x) = sum_i w_i x_ii`` with diagonal density ``w``.

    Non-tracial states are represented by density matrices, never by this
    class; a ``TraceFunctional`` is tracial on every subalgebra commuting
    with ``diag(w)`` (in particular on the whole ambient algebra when the
    weights are uniform).
    """

    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 1 or np.any(w < 0) or not np.all(np.isfinite(w)):
            raise DomainError("trace weights must be a finite nonnegative vector")
        object.__setattr__(self, "weights", w)

    @classmethod
    def uniform(cls, dim: int) -> "TraceFunctional":
        return cls(np.full(dim, 1.0 / dim))

    @property
    def dim(self) -> int:
        return self.weights.shape[0]

    @property
    def is_normalized(self) -> bool:
        return abs(self.weights.sum() - 1.0) < 1e-12

    @property
    def is_uniform(self) -> bool:
        return bool(np.ptp(self.weights) < 1e-15)

    @property
    def density(self) -> np.ndarray:
        return np.diag(self.weights).astype(complex)

    def __call__(self, x) -> complex:
        x = np.asarray(x)
        if x.shape[-2:] != (self.dim, self.dim):
            raise DomainError(f"dimension mismatch: tau on {self.dim}, operator {x.shape}")
        return np.einsum("...ii,i->...", x, self.weights)

    def inner(self, a, b) -> complex:
        """``<a, b> = tau(a* b)``."""
        return np.einsum("ki,ki,i->", np.conj(a), b, self.weights)


def tau_two_norm(x, tau: TraceFunctional) -> float:
    """``||x||_2 = tau(x* x)^(1/2)``."""
    x = as_matrix(x)
    if x.shape != (tau.dim, tau.dim):
        raise DomainError(f"dimension mismatch: tau on {tau.dim}, operator {x.shape}")
    return float(np.sqrt(max(tau.inner(x, x).real, 0.0)))


def orthonormalize(vectors: Sequence[np.ndarray], tau: TraceFunctional, tol: float = ORTHO_DROP_TOL) -> list[np.ndarray]:
    """Gram-Schmidt in the inner product ``tau(a* b)``, two passes per vector.

    Vectors whose residual norm falls below ``tol`` are dropped, so
    degenerate input yields a shorter basis.
    """
    basis: list[np.ndarray] = []
    for v in vectors:
        r = as_matrix(v).copy()
        for _ in range(2):
            for b in basis:
                r = r - b * tau.inner(b, r)
        nrm = np.sqrt(max(tau.inner(r, r).real, 0.0))
        if nrm >= tol:
            basis.append(r / nrm)
    return basis


def divided_differences(w: np.ndarray, f: Callable, fprime: Callable) -> np.ndarray:
    """First divided differences ``f[w_a, w_b]`` with ``f'`` on near-ties."""
    wa, wb = np.meshgrid(w, w, indexing="ij")
    diff = wa - wb
    tie = np.abs(diff) < 1e-12 * np.maximum(1.0, np.abs(wa))
    fw = f(w)
    num = fw[:, None] - fw[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(tie, 0.0, num / np.where(tie, 1.0, diff))
    mid = 0.5 * (wa + wb)
    out[tie] = fprime(mid[tie])
    return out


def frechet_adjoint(h: np.ndarray, weight: np.ndarray, f: Callable, fprime: Callable) -> np.ndarray:
    """Gradient of ``a -> Tr(weight f(a))`` at Hermitian ``h``.

    Returns the Hermitian ``G`` with ``d Tr(weight f(h))[dh] = Tr(G dh)``,
    via the Daleckii-Krein formula ``G = V (F o (V* weight V)) V*`` where
    ``F`` holds the divided differences of ``f`` on the spectrum of ``h``.
    """
    w, v = np.linalg.eigh(h)
    dd = divided_differences(w, f, fprime)
    inner = v.conj().T @ weight @ v
    g = v @ (dd * inner) @ v.conj().T
    return 0.5 * (g + g.conj().T)
