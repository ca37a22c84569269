"""JSON schemas for matrices, algebras, symbols and reports.

Matrix: ``{"dim": n, "entries": [[re, im], ...]}`` with ``n*n`` entries in
row-major order (a bare number is accepted for a real entry).

Algebra: ``{"ambient_dim": N, "blocks": [{"n": .., "m": .., "t": ..}, ...]}``
(canonical block-diagonal embedding; the trace is fixed by the ``t``) or
``{"ambient_dim": N, "generators": [matrix, ...]}`` (the generated
*-algebra, uniform trace unless ``"trace_weights"`` is given).

Symbol: ``{"theta": [...], "eigenvalues": [[...], ...], "infinite": false}``.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__
from .algebras import AlgebraBlockSpec, Block, StarSubalgebra, build_block_algebra
from .car import SpectralSymbol
from .errors import DomainError, SchemaError
from .linalg import TraceFunctional


def matrix_to_json(m) -> dict:
    m = np.asarray(m, dtype=complex)
    return {"dim": int(m.shape[0]), "entries": [[float(z.real), float(z.imag)] for z in m.ravel()]}


def matrix_from_json(obj: Any) -> np.ndarray:
    if not isinstance(obj, dict) or "dim" not in obj or "entries" not in obj:
        raise SchemaError('matrix must be an object with "dim" and "entries"')
    n = obj["dim"]
    entries = obj["entries"]
    if not isinstance(n, int) or n < 1:
        raise SchemaError('"dim" must be a positive integer')
    if not isinstance(entries, list) or len(entries) != n * n:
        raise SchemaError(f'"entries" must list {n * n} values in row-major order')
    out = np.empty(n * n, dtype=complex)
    for i, e in enumerate(entries):
        if isinstance(e, (int, float)) and not isinstance(e, bool):
            out[i] = float(e)
        elif isinstance(e, list) and len(e) == 2 and all(isinstance(t, (int, float)) for t in e):
            out[i] = complex(e[0], e[1])
        else:
            raise SchemaError(f"entry {i} must be a number or a [re, im] pair")
    if not np.all(np.isfinite(out)):
        raise SchemaError("matrix entries must be finite")
    return out.reshape(n, n)


def algebra_from_json(obj: Any) -> StarSubalgebra:
    if not isinstance(obj, dict):
        raise SchemaError("algebra must be a JSON object")
    if "blocks" in obj:
        try:
            blocks = tuple(Block(int(b["n"]), int(b["m"]), float(b["t"])) for b in obj["blocks"])
            dim = int(obj.get("ambient_dim", sum(b.n * b.m for b in blocks)))
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaError(f"bad block specification: {exc}") from None
        return build_block_algebra(AlgebraBlockSpec(blocks, dim))
    if "generators" in obj:
        gens = [matrix_from_json(g) for g in obj["generators"]]
        dim = obj.get("ambient_dim", gens[0].shape[0] if gens else None)
        if not isinstance(dim, int):
            raise SchemaError('"ambient_dim" is required when there are no generators')
        if any(g.shape != (dim, dim) for g in gens):
            raise SchemaError("generator dimensions differ from ambient_dim")
        tau = TraceFunctional(np.asarray(obj["trace_weights"], dtype=float)) if "trace_weights" in obj else TraceFunctional.uniform(dim)
        if tau.dim != dim:
            raise SchemaError("trace_weights has the wrong length")
        return StarSubalgebra.from_generators(gens, tau)
    raise SchemaError('algebra needs "blocks" or "generators"')


def symbol_from_json(obj: Any) -> SpectralSymbol:
    if not isinstance(obj, dict) or "theta" not in obj or "eigenvalues" not in obj:
        raise SchemaError('symbol needs "theta" and "eigenvalues"')
    try:
        return SpectralSymbol(np.asarray(obj["theta"], dtype=float), [np.asarray(e, dtype=float) for e in obj["eigenvalues"]], bool(obj.get("infinite", False)))
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"bad symbol: {exc}") from None


def symbol_to_json(s: SpectralSymbol) -> dict:
    return {"theta": [float(t) for t in s.theta], "eigenvalues": [[float(x) for x in e] for e in s.eigenvalues], "infinite": s.infinite}


def load_json(path: str | Path) -> Any:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise SchemaError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path} is not valid JSON: {exc}") from None


def load_matrix(path: str | Path) -> np.ndarray:
    return matrix_from_json(load_json(path))


def stamp(report: dict) -> dict:
    return {"version": __version__, **report}


def dumps(report: dict) -> str:
    """Deterministic serialization (sorted keys, fixed float repr)."""
    return json.dumps(report, sort_keys=True, indent=2, allow_nan=True)


def write_json(path: str | Path, obj: Any) -> None:
    Path(path).write_text(dumps(obj) + "\n", encoding="utf-8")


def check_same_trace(algebras: list[StarSubalgebra]) -> TraceFunctional:
    tau = algebras[0].tau
    for a in algebras[1:]:
        if a.ambient_dim != tau.dim or not np.allclose(a.tau.weights, tau.weights, atol=1e-14):
            raise DomainError("algebras must share the ambient dimension and trace")
    return tau
