"""Projected-free gradient ascent over partitions of unity.

A partition ``x_(i)`` is parametrized by free matrices ``c_(i)`` through

    x_(i) = S^(-1/2) c_(i)* c_(i) S^(-1/2),   S = sum_i c_(i)* c_(i),

so every iterate is feasible. Objectives are callables ``f(x, grad)`` on
stacks ``x`` of shape ``(r_1, ..., r_k, N, N)`` returning the value and,
when asked, the Hermitian gradient ``G`` with ``df = sum Tr(G_(i) dx_(i))``.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

BACKTRACK_HALVINGS = 30
REL_TOL = 1e-9
PATIENCE = 5
GROWTH_TOL = 1e-4
MAX_STEP = 1e6
# restarts are merged in fixed-size chunks so early stopping never depends
# on how many workers ran them
CHUNK = 4


@dataclass(frozen=True)
class Budget:
    """Search effort for one supremum estimate.

    ``index_ranges`` defaults to the ranks of the algebras; ``grow`` enables
    probing larger ranges (up to twice the rank) while the optimum keeps
    improving by more than ``GROWTH_TOL``.
    """

    restarts: int = 32
    iterations: int = 500
    index_ranges: tuple[int, ...] | None = None
    seed: int = 0
    grow: bool = True
    workers: int | None = None

    def resolved_workers(self) -> int:
        if self.workers is not None:
            return max(1, self.workers)
        return max(1, int(os.environ.get("NCE_WORKERS", "1")))


@dataclass
class AscentResult:
    stack: np.ndarray
    value: float
    converged: bool
    iterations: int
    seed: int


def _inv_sqrt(s: np.ndarray):
    w, v = np.linalg.eigh(s)
    w = np.maximum(w, 1e-300)
    g = w ** -0.5
    return (v * g) @ v.conj().T, w, v, g


def _assemble(c: np.ndarray):
    cc = np.conj(np.swapaxes(c, -1, -2)) @ c
    s = cc.reshape((-1,) + cc.shape[-2:]).sum(axis=0)
    r, w, v, g = _inv_sqrt(s)
    x = r @ cc @ r
    x = 0.5 * (x + np.conj(np.swapaxes(x, -1, -2)))
    return x, cc, r, (w, v, g)


def _chain(c, cc, r, spec, gx):
    """Pull the gradient in ``x`` back to the free matrices ``c``."""
    w, v, g = spec
    flat_cc = cc.reshape((-1,) + cc.shape[-2:])
    flat_g = gx.reshape(flat_cc.shape)
    q = np.einsum("aij,jk,akl->il", flat_cc, r, flat_g)
    q = q + np.conj(q.T)
    # Frechet derivative of s -> s^(-1/2), self-adjoint under the trace pairing
    wa, wb = w[:, None], w[None, :]
    diff = wa - wb
    tie = np.abs(diff) <= 1e-12 * np.maximum(wa, wb)
    with np.errstate(divide="ignore", invalid="ignore"):
        dd = np.where(tie, -0.5 * np.sqrt(wa * wb) ** -1.5, (g[:, None] - g[None, :]) / np.where(tie, 1.0, diff))
    p = v @ (dd * (v.conj().T @ q @ v)) @ v.conj().T
    z = r @ gx @ r + p
    return 2.0 * c @ z


def _random_c(shape: tuple[int, ...], n: int, rng: np.random.Generator) -> np.ndarray:
    full = shape + (n, n)
    return (rng.standard_normal(full) + 1j * rng.standard_normal(full)) / math.sqrt(2 * n)


def ascend(objective: Callable, shape: tuple[int, ...], n: int, seed: int, iterations: int) -> AscentResult:
    rng = np.random.default_rng(seed)
    c = _random_c(shape, n, rng)
    x, cc, r, spec = _assemble(c)
    value, gx = objective(x, grad=True)
    step = 1.0
    calm = 0
    converged = False
    it = 0
    for it in range(1, iterations + 1):
        d = _chain(c, cc, r, spec, gx)
        dn = float(np.sqrt(np.sum(np.abs(d) ** 2)))
        if dn < 1e-14:
            converged = True
            break
        cn = float(np.sqrt(np.sum(np.abs(c) ** 2)))
        accepted = False
        for _ in range(BACKTRACK_HALVINGS):
            trial = c + (step * cn / dn) * d
            tx, tcc, tr, tspec = _assemble(trial)
            tv = objective(tx)
            if tv > value:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            converged = True
            break
        gain = (tv - value) / max(1.0, abs(value))
        # fix the scale gauge; x is invariant under c -> t c
        tn = float(np.sqrt(np.sum(np.abs(trial) ** 2)))
        c = trial * (cn / tn)
        x, cc, r, spec = _assemble(c)
        value, gx = objective(x, grad=True)
        step = min(step * 2.0, MAX_STEP)
        calm = calm + 1 if gain < REL_TOL else 0
        if calm >= PATIENCE:
            converged = True
            break
    return AscentResult(x, float(value), converged, it, seed)


def _run(args):
    objective, shape, n, seed, iterations = args
    return ascend(objective, shape, n, seed, iterations)


def multistart(objective: Callable, shape: Sequence[int], n: int, budget: Budget, target: float | None = None):
    """Best of ``budget.restarts`` ascents, seeds ``seed .. seed+restarts-1``.

    Stops after a chunk of restarts once ``target`` (a known upper bound) is
    reached within ``1e-9``. Returns ``(best, restarts_used)``.
    """
    shape = tuple(int(s) for s in shape)
    seeds = list(range(budget.seed, budget.seed + budget.restarts))
    workers = budget.resolved_workers()
    best: AscentResult | None = None
    used = 0
    pool = ProcessPoolExecutor(workers) if workers > 1 else None
    try:
        for start in range(0, len(seeds), CHUNK):
            chunk = [(objective, shape, n, s, budget.iterations) for s in seeds[start : start + CHUNK]]
            results = list(pool.map(_run, chunk)) if pool else [_run(a) for a in chunk]
            for res in results:
                used += 1
                if best is None or res.value > best.value:
                    best = res
            if target is not None and best.value >= target - 1e-9:
                break
    finally:
        if pool:
            pool.shutdown()
    return best, used


def maximize(objective: Callable, ranks: Sequence[int], n: int, budget: Budget, target: float | None = None):
    """Multistart ascent with optional index-range growth.

    Returns ``(best, restarts_used, final_ranges)``.
    """
    ranges = tuple(budget.index_ranges) if budget.index_ranges is not None else tuple(max(1, r) for r in ranks)
    caps = tuple(max(2 * r, q) for r, q in zip(ranks, ranges))
    best, used = multistart(objective, ranges, n, budget, target)
    reached = target is not None and best.value >= target - 1e-9
    while budget.grow and not reached:
        bigger = tuple(min(q + 1, cap) for q, cap in zip(ranges, caps))
        if bigger == ranges:
            break
        cand, more = multistart(objective, bigger, n, budget, target)
        used += more
        improved = cand.value - best.value > GROWTH_TOL
        if cand.value > best.value:
            best = cand
        ranges = bigger
        reached = target is not None and best.value >= target - 1e-9
        if not improved:
            break
    return best, used, ranges
