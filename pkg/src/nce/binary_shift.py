"""Binary shifts: chains of symmetries with a prescribed commutation pattern.

A bitstream ``x_1, x_2, ...`` asks for symmetries ``s_0, s_1, ...`` with
``s_i s_j = (-1)^(x_|i-j|) s_j s_i``. The algebra ``A_n`` generated by
``s_0..s_(n-1)`` is ``M_(2^d_n) (x) C^(2^c_n)`` where ``c_n`` is the GF(2)
nullity of the Toeplitz form ``T_ij = x_|i-j|`` (zero diagonal) and
``n = 2 d_n + c_n``. Its entropy for the canonical trace is
``(c_n + d_n) log 2``.

GF(2) vectors are Python ints used as bitsets (bit ``j`` is coordinate ``j``).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import DomainError, GuardError, InvariantError

LOG2 = math.log(2.0)
MAX_DENSE_N = 10
MAX_ORACLE_N = 20


class PeriodicityWarning(UserWarning):
    """The two-sided pattern looks periodic within the finite window."""


@dataclass(frozen=True)
class Bitstream:
    """Bits ``x_1..x_m``; ``x_k`` for ``k > m`` is taken as 0."""

    bits: tuple[int, ...]

    def __post_init__(self):
        bits = tuple(int(b) for b in self.bits)
        if any(b not in (0, 1) for b in bits):
            raise DomainError("bits must be 0 or 1")
        object.__setattr__(self, "bits", bits)

    @classmethod
    def parse(cls, text: str) -> "Bitstream":
        text = text.strip()
        if any(ch not in "01" for ch in text):
            raise DomainError("bitstream must consist of the characters 0 and 1")
        return cls(tuple(int(ch) for ch in text))

    @classmethod
    def from_set(cls, members: Iterable[int], length: int) -> "Bitstream":
        members = set(members)
        return cls(tuple(int(k in members) for k in range(1, length + 1)))

    @classmethod
    def random(cls, length: int, seed: int) -> "Bitstream":
        rng = np.random.default_rng(seed)
        return cls(tuple(int(b) for b in rng.integers(0, 2, size=length)))

    @property
    def window(self) -> int:
        return len(self.bits)

    def x(self, k: int) -> int:
        """``x_|k|`` with ``x_0 = 0`` and zero beyond the window."""
        k = abs(k)
        if k == 0 or k > len(self.bits):
            return 0
        return self.bits[k - 1]

    def consistent_period(self) -> int | None:
        """Smallest ``p <= m/2`` for which ``1_(-X u {0} u X)`` is ``p``-periodic on the window.

        Only coordinates ``-m..m`` are compared; ``None`` means no such period.
        """
        m = len(self.bits)
        y = [1 if k == 0 else self.x(k) for k in range(-m, m + 1)]
        for p in range(1, m // 2 + 1):
            if all(y[i] == y[i + p] for i in range(len(y) - p)):
                return p
        return None

    def to_text(self) -> str:
        return "".join(map(str, self.bits))


@dataclass(frozen=True)
class ToeplitzForm:
    """The alternating GF(2) form ``T_ij = x_|i-j|`` on ``n`` generators."""

    n: int
    rows: tuple[int, ...]

    @classmethod
    def build(cls, b: Bitstream, n: int) -> "ToeplitzForm":
        rows = []
        for i in range(n):
            r = 0
            for j in range(n):
                if b.x(i - j):
                    r |= 1 << j
            rows.append(r)
        return cls(n, tuple(rows))

    def entry(self, i: int, j: int) -> int:
        return (self.rows[i] >> j) & 1

    def is_alternating(self) -> bool:
        return all(self.entry(i, i) == 0 for i in range(self.n)) and all(
            self.entry(i, j) == self.entry(j, i) for i in range(self.n) for j in range(i)
        )

    def rank(self) -> int:
        return gf2_rank(self.rows)

    def nullity(self) -> int:
        return self.n - self.rank()


def gf2_rank(rows: Sequence[int]) -> int:
    """Rank over GF(2) of bitset rows by Gaussian elimination."""
    pivots: dict[int, int] = {}
    rank = 0
    for r in rows:
        while r:
            top = r.bit_length() - 1
            if top not in pivots:
                pivots[top] = r
                rank += 1
                break
            r ^= pivots[top]
    return rank


@dataclass
class StructureSequence:
    """``c_n, d_n, H_n`` and ``mean_n = H_n / n`` for ``n = 1..max_n``."""

    window: int
    c: list[int]
    d: list[int]
    H: list[float]
    mean: list[float]

    @property
    def n_values(self) -> list[int]:
        return list(range(1, len(self.c) + 1))

    def running_min_mean(self) -> list[float]:
        out, best = [], math.inf
        for m in self.mean:
            best = min(best, m)
            out.append(best)
        return out

    def rows(self) -> list[dict]:
        return [
            {"n": n, "c_n": c, "d_n": d, "H_n": h, "mean_n": m}
            for n, c, d, h, m in zip(self.n_values, self.c, self.d, self.H, self.mean)
        ]


def structure_sequence(b: Bitstream, max_n: int) -> StructureSequence:
    """``c_n`` by GF(2) elimination on the Toeplitz form, for ``n <= max_n``.

    Raises:
        DomainError: if ``max_n`` exceeds ``window + 1``, beyond which the
            form would depend on bits outside the window.
    """
    if max_n < 0:
        raise DomainError("max_n must be nonnegative")
    if max_n > b.window + 1:
        raise DomainError(f"max_n={max_n} needs bits beyond the window of {b.window}")
    if b.consistent_period() is not None:
        warnings.warn(f"bitstream is consistent with period {b.consistent_period()} on its window", PeriodicityWarning, stacklevel=2)
    cs, ds, hs, ms = [], [], [], []
    for n in range(1, max_n + 1):
        c = ToeplitzForm.build(b, n).nullity()
        if (n - c) % 2:
            raise InvariantError(f"alternating form of odd rank at n={n}")
        d = (n - c) // 2
        ratio = Fraction(c + d, n)
        cs.append(c)
        ds.append(d)
        hs.append((c + d) * LOG2)
        ms.append(float(ratio) * LOG2)
    for n in range(1, len(cs)):
        if abs(cs[n] - cs[n - 1]) != 1:
            raise InvariantError(f"c_n does not step by one between n={n} and n={n + 1}")
    return StructureSequence(b.window, cs, ds, hs, ms)


@dataclass
class ConcatenationParse:
    """Peaks ``m_i`` of the completed strings ``(1, ..., m_i, ..., 1, 0)`` and the unfinished tail."""

    peaks: list[int]
    residual: list[int]

    def to_json(self) -> dict:
        return {"peaks": self.peaks, "residual": self.residual}


def concatenation_decomposition(c: Sequence[int] | StructureSequence) -> ConcatenationParse:
    """Split ``c_1, c_2, ...`` into tents ``1, 2, ..., m, ..., 2, 1, 0``.

    Each string climbs by one from 1 to its peak and descends by one to 0.
    An unfinished final string is returned as the residual tail.

    Raises:
        InvariantError: if the sequence is not a concatenation of tents.
    """
    seq = list(c.c if isinstance(c, StructureSequence) else c)
    peaks: list[int] = []
    i = 0
    while i < len(seq):
        start = i
        level = 0
        # climb
        while i < len(seq) and seq[i] == level + 1:
            level += 1
            i += 1
        peak = level
        if peak == 0:
            raise InvariantError(f"tent must start at 1; got c={seq[i]} at position {i + 1}")
        while i < len(seq) and level > 0 and seq[i] == level - 1:
            level -= 1
            i += 1
        if level == 0:
            peaks.append(peak)
            continue
        if i == len(seq):
            return ConcatenationParse(peaks, seq[start:])
        raise InvariantError(f"c-sequence leaves the tent shape at position {i + 1}")
    return ConcatenationParse(peaks, [])


# -- sign-string realization -----------------------------------------------------


def symplectic(u: tuple[int, int], v: tuple[int, int]) -> int:
    """``<u, v> = a_u . b_v + b_u . a_v`` over GF(2) for ``u = (a, b)``."""
    return (bin(u[0] & v[1]).count("1") + bin(u[1] & v[0]).count("1")) & 1


def _solve_gf2(rows: list[int], rhs: list[int], nbits: int):
    """Particular solution and null-space basis of ``rows . u = rhs``; ``None`` if infeasible."""
    aug = [(r, t) for r, t in zip(rows, rhs)]
    pivots: list[tuple[int, int, int]] = []  # (bit, row, rhs)
    for r, t in aug:
        for bit, pr, pt in pivots:
            if (r >> bit) & 1:
                r ^= pr
                t ^= pt
        if r == 0:
            if t:
                return None
            continue
        bit = r.bit_length() - 1
        # keep previous pivots reduced in the new pivot column
        pivots = [(pb, pr ^ r, pt ^ t) if (pr >> bit) & 1 else (pb, pr, pt) for pb, pr, pt in pivots]
        pivots.append((bit, r, t))
    x = 0
    for bit, r, t in pivots:
        if t:
            x |= 1 << bit
    pivot_bits = {bit for bit, _, _ in pivots}
    null = []
    for free in range(nbits):
        if free in pivot_bits:
            continue
        v = 1 << free
        for bit, r, _ in pivots:
            if (r >> free) & 1:
                v |= 1 << bit
        null.append(v)
    return x, null


def _independent(vec: int, basis: dict[int, int]) -> bool:
    while vec:
        top = vec.bit_length() - 1
        if top not in basis:
            return True
        vec ^= basis[top]
    return False


def _insert(vec: int, basis: dict[int, int]) -> None:
    while vec:
        top = vec.bit_length() - 1
        if top not in basis:
            basis[top] = vec
            return
        vec ^= basis[top]


@dataclass
class SignStringRealization:
    """Symmetries ``s_i = i^(a.b) X^a Z^b`` on ``q`` qubits.

    ``vectors[i] = (a, b)`` are the X- and Z-exponent bitsets; the phase
    ``i^popcount(a & b)`` makes every ``s_i`` self-adjoint.
    """

    n: int
    qubits: int
    vectors: list[tuple[int, int]]
    bitstream: Bitstream
    dense: list[sp.csr_array] | None = field(default=None, repr=False)

    def pattern(self) -> list[list[int]]:
        return [[symplectic(u, v) for v in self.vectors] for u in self.vectors]

    def matches(self) -> bool:
        return all(
            symplectic(self.vectors[i], self.vectors[j]) == self.bitstream.x(i - j)
            for i in range(self.n)
            for j in range(self.n)
        )


def pauli_matrix(a: int, b: int, q: int) -> sp.csr_array:
    """``i^popcount(a & b) X^a Z^b`` on ``q`` qubits; qubit ``t`` is bit ``t``."""
    dim = 1 << q
    cols = np.arange(dim)
    rows = cols ^ a
    # Z^b acts first: sign (-1)^popcount(b & col); X^a then flips bits
    signs = np.where(np.bitwise_count(cols & b) & 1, -1.0, 1.0)
    phase = 1j ** (bin(a & b).count("1") % 4)
    return sp.csr_array((phase * signs.astype(complex), (rows, cols)), shape=(dim, dim))


def sign_string_realization(b: Bitstream, n: int, dense: bool = False, q: int | None = None) -> SignStringRealization:
    """Realize ``s_0..s_(n-1)`` as Pauli strings with the required pattern.

    Vectors are chosen greedily: ``u_i`` solves ``<u_i, u_j> = x_(i-j)``
    for ``j < i`` and is kept linearly independent of ``u_0..u_(i-1)`` (so
    every nonempty product is traceless). The qubit count starts at
    ``ceil(n/2)`` and grows on infeasibility; ``q = n`` always succeeds.
    """
    if n < 1:
        raise DomainError("need at least one generator")
    if n > b.window + 1:
        raise DomainError(f"n={n} needs bits beyond the window of {b.window}")
    if dense and n > MAX_DENSE_N:
        raise GuardError(f"dense mode is limited to n <= {MAX_DENSE_N}")
    start = q if q is not None else (n + 1) // 2
    for qq in range(max(1, start), n + 1):
        vectors = _greedy_vectors(b, n, qq)
        if vectors is not None:
            real = SignStringRealization(n, qq, vectors, b)
            if not real.matches():
                raise InvariantError("realized pattern does not match the bitstream")
            if dense:
                real.dense = [pauli_matrix(a, z, qq) for a, z in vectors]
            return real
    raise InvariantError(f"no realization found up to {n} qubits")


def _greedy_vectors(b: Bitstream, n: int, q: int) -> list[tuple[int, int]] | None:
    nbits = 2 * q
    mask = (1 << q) - 1
    vectors: list[tuple[int, int]] = []
    basis: dict[int, int] = {}
    for i in range(n):
        # <u, u_j> = a.b_j + b.a_j: row for unknown (a | b << q) is (b_j | a_j << q)
        rows = [vb | (va << q) for va, vb in vectors]
        rhs = [b.x(i - j) for j in range(i)]
        sol = _solve_gf2(rows, rhs, nbits)
        if sol is None:
            return None
        x0, null = sol
        chosen = None
        for combo in range(1 << min(len(null), 16)):
            v = x0
            for t, nv in enumerate(null):
                if (combo >> t) & 1:
                    v ^= nv
            if v and _independent(v, basis):
                chosen = v
                break
        if chosen is None:
            return None
        _insert(chosen, basis)
        vectors.append((chosen & mask, chosen >> q))
    return vectors


def subset_vectors(vectors: Sequence[tuple[int, int]]) -> tuple[np.ndarray, np.ndarray]:
    """X- and Z-parts of ``XOR_(i in J) u_i`` for all ``J``, indexed by the bitmask of ``J``."""
    a = np.zeros(1, dtype=np.int64)
    z = np.zeros(1, dtype=np.int64)
    for va, vb in vectors:
        a = np.concatenate([a, a ^ va])
        z = np.concatenate([z, z ^ vb])
    return a, z


def center_dimension_oracle(r: SignStringRealization) -> int:
    """``log2`` of the number of products ``s_J`` commuting with every generator.

    Enumerates all ``2^n`` subsets with GF(2) arithmetic only. Central
    elements of ``A_n`` are spanned by central monomials, so this is
    ``log2 dim Z(A_n)``.
    """
    if r.n > MAX_ORACLE_N:
        raise GuardError(f"subset enumeration is limited to n <= {MAX_ORACLE_N}")
    a, z = subset_vectors(r.vectors)
    central = np.ones(a.shape, dtype=bool)
    for va, vb in r.vectors:
        par = (np.bitwise_count(a & vb) + np.bitwise_count(z & va)) & 1
        central &= par == 0
    count = int(central.sum())
    c = count.bit_length() - 1
    if 1 << c != count:
        raise InvariantError(f"central monomial count {count} is not a power of two")
    return c


def dense_checks(r: SignStringRealization) -> dict[str, float]:
    """Numerical checks on the explicit matrices.

    Reports the largest defects of ``s_i* = s_i``, ``s_i^2 = 1`` and the
    commutation pattern, and the largest normalized trace of a nonempty
    product ``s_J``.
    """
    if r.dense is None:
        raise DomainError("realization was built without dense matrices")
    dim = 1 << r.qubits
    eye = sp.eye_array(dim, dtype=complex, format="csr")
    adj = sq = comm = 0.0
    for i, si in enumerate(r.dense):
        adj = max(adj, _maxabs(si - si.conj().T))
        sq = max(sq, _maxabs(si @ si - eye))
        for j, sj in enumerate(r.dense):
            sign = -1.0 if r.bitstream.x(i - j) else 1.0
            comm = max(comm, _maxabs(si @ sj - sign * (sj @ si)))
    return {"adjoint": adj, "square": sq, "pattern": comm, "trace": product_trace_max(r.dense)}


def product_trace_max(ops: Sequence[sp.csr_array]) -> float:
    """Largest ``|tr(prod_(j in J) t_j)| / dim`` over nonempty ``J``, factors in index order."""
    dim = ops[0].shape[0]
    worst = 0.0
    for mask in range(1, 1 << len(ops)):
        current = sp.eye_array(dim, dtype=complex, format="csr")
        for j, op in enumerate(ops):
            if (mask >> j) & 1:
                current = current @ op
        worst = max(worst, abs(current.diagonal().sum()) / dim)
    return float(worst)


def numerical_center_dimension(r: SignStringRealization) -> int:
    """Center dimension of ``A_n`` from a floating-point null space (small ``n``).

    Stacks the commutators of every generator with the ``2^n`` monomials
    and counts the numerically vanishing directions in coefficient space.
    """
    if r.dense is None:
        raise DomainError("realization was built without dense matrices")
    if r.n > 6:
        raise GuardError("numerical center check is limited to n <= 6")
    dim = 1 << r.qubits
    mats = []
    for mask in range(1 << r.n):
        x = np.eye(dim, dtype=complex)
        for j in range(r.n):
            if (mask >> j) & 1:
                x = x @ r.dense[j].toarray()
        mats.append(x)
    gens = [g.toarray() for g in r.dense]
    blocks = []
    for g in gens:
        blocks.append(np.stack([(g @ m - m @ g).ravel() for m in mats], axis=1))
    big = np.concatenate(blocks, axis=0)
    s = np.linalg.svd(big, compute_uv=False)
    return int(np.sum(s < 1e-9 * max(1.0, s[0]))) + max(0, big.shape[1] - s.size)


def odd_pair_witness(r: SignStringRealization) -> list[sp.csr_array]:
    """``t_j = i s_(2j-1) s_(2j)`` (generators labelled from 1) for ``X`` containing the odd numbers."""
    if r.dense is None:
        raise DomainError("realization was built without dense matrices")
    if any(r.bitstream.x(k) != 1 for k in range(1, r.n, 2)):
        raise DomainError("the pair witness needs every odd distance in X")
    return [1j * (r.dense[2 * j - 2] @ r.dense[2 * j - 1]) for j in range(1, r.n // 2 + 1)]


def witness_checks(ts: Sequence[sp.csr_array]) -> dict[str, float]:
    comm = adj = 0.0
    for i, a in enumerate(ts):
        adj = max(adj, _maxabs(a - a.conj().T))
        for b in ts[i + 1 :]:
            comm = max(comm, _maxabs(a @ b - b @ a))
    return {"commutator": comm, "adjoint": adj, "trace": product_trace_max(ts)}


def _maxabs(x) -> float:
    return float(abs(x).max()) if x.nnz else 0.0
