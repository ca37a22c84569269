"""Command-line interface: ``nce <subcommand> ...``.

Every report is JSON (``binary-shift`` emits CSV) with a ``version`` field.
Errors exit with the code of the raised :class:`~nce.errors.NCEError`: 2 for
schema or domain problems, 3 for exceeded guards, 4 for invariant failures.
"""

from __future__ import annotations

import argparse
import csv
import io as _io
import json
import math
import sys
import warnings
from typing import Sequence

import numpy as np

from . import __version__
from . import io
from .ascent import Budget
from .errors import DomainError, NCEError

ENTROPY_HELP = "budget flags: --seed, --restarts, --iterations, --workers"


def _budget(args) -> Budget:
    ranges = tuple(args.index_ranges) if args.index_ranges else None
    return Budget(restarts=args.restarts, iterations=args.iterations, index_ranges=ranges, seed=args.seed, grow=not args.no_grow, workers=args.workers)


def _emit(args, report: dict) -> None:
    text = io.dumps(io.stamp(report))
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _estimate_report(args, est) -> dict:
    witness_file = None
    if args.witness and est.witness is not None:
        io.write_json(args.witness, io.stamp(est.witness.to_json()))
        witness_file = args.witness
    rep = est.to_json(witness_file)
    rep.update({k: v for k, v in est.extra.items() if k not in rep})
    return rep


def _algebras(paths: Sequence[str]):
    algs = [io.algebra_from_json(io.load_json(p)) for p in paths]
    return algs, io.check_same_trace(algs)


# -- subcommands ----------------------------------------------------------------


def cmd_eta(args) -> dict:
    from .entropy import eta_scalar
    from .linalg import matrix_function

    if args.matrix:
        m = matrix_function(io.load_matrix(args.matrix), "eta")
        return {"eta": io.matrix_to_json(m), "trace": float(np.real(np.trace(m)))}
    if args.t is None:
        raise DomainError("give --t or --matrix")
    return {"eta": eta_scalar(args.t)}


def cmd_entropy(args) -> dict:
    from .entropy import von_neumann_entropy

    return {"S": von_neumann_entropy(io.load_matrix(args.state))}


def cmd_relent(args) -> dict:
    from .entropy import relative_entropy
    from .linalg import TraceFunctional

    x, y = io.load_matrix(args.x), io.load_matrix(args.y)
    if x.shape != y.shape:
        raise DomainError("operands have different dimensions")
    n = x.shape[0]
    tau = TraceFunctional(np.ones(n)) if args.trace == "tr" else TraceFunctional.uniform(n)
    return {"S": relative_entropy(x, y, tau), "trace": args.trace}


def cmd_cs_entropy(args) -> dict:
    from .entropy import maximize_cs_entropy

    algs, tau = _algebras(args.algebra)
    return _estimate_report(args, maximize_cs_entropy(algs, tau, _budget(args)))


def cmd_relalg(args) -> dict:
    from .entropy import relative_algebra_entropy

    algs, tau = _algebras([args.n, args.p])
    return _estimate_report(args, relative_algebra_entropy(algs[0], algs[1], tau, _budget(args)))


def cmd_cnt(args) -> dict:
    from .entropy import cnt_entropy

    algs, tau = _algebras(args.algebra)
    if not tau.is_uniform:
        raise DomainError("cnt needs algebras with the uniform trace")
    rho = io.load_matrix(args.state)
    if rho.shape[0] != tau.dim:
        raise DomainError("state and algebras have different dimensions")
    return _estimate_report(args, cnt_entropy(rho * tau.dim, algs, _budget(args), tau))


def _shift_system(args, kind: str):
    from .dynamics import ShiftSystem

    state = io.load_matrix(args.site_density) if args.site_density else None
    if state is not None and state.shape[0] != args.site_dim:
        raise DomainError("site density does not match --site-dim")
    return ShiftSystem(args.site_dim, args.window, kind, state, args.step)


def cmd_shift_entropy(args) -> dict:
    from .dynamics import SiteBlock, approx_entropy_report, horizon_entropy, matrix_units

    if args.mode == "rank":
        sys_ = _shift_system(args, "bernoulli")
        rep = approx_entropy_report(sys_, matrix_units(args.site_dim), args.delta, args.horizon, state_norm=args.state_norm)
        return {"mode": "rank", "delta": args.delta, **rep.to_json()}
    kind = "trace-shift" if args.mode == "cs" else "bernoulli"
    sys_ = _shift_system(args, kind)
    rep = horizon_entropy(sys_, SiteBlock(args.block_width), args.horizon, _budget(args))
    return {"mode": args.mode, **rep.to_json()}


def _load_omega(path: str | None, d: int):
    from .dynamics import LocalOperator, matrix_units

    if not path:
        return matrix_units(d)
    obj = io.load_json(path)
    if not isinstance(obj, dict) or not isinstance(obj.get("operators"), list):
        raise io.SchemaError('omega file needs an "operators" list')
    out = []
    for op in obj["operators"]:
        if not isinstance(op, dict) or "matrix" not in op:
            raise io.SchemaError('each operator needs "start" and "matrix"')
        out.append(LocalOperator(int(op.get("start", 0)), io.matrix_from_json(op["matrix"])))
    return out


def cmd_delta_rank(args) -> dict:
    from .dynamics import DeltaRankQuery, approx_entropy_report, delta_rank_upper, interval_candidates

    sys_ = _shift_system(args, "bernoulli")
    omega = _load_omega(args.omega, args.site_dim)
    d = args.site_dim
    lo = min(x.start for x in omega)
    hi = max(x.start + x.width(d) for x in omega)
    state = sys_.site_state if args.state_norm else None
    r, cand, dists = delta_rank_upper(DeltaRankQuery(omega, args.delta, interval_candidates(lo, hi)), d, state)
    rep = {"delta": args.delta, "rank_upper": r, "candidate_sites": list(cand.sites), "distances": [float(t) for t in dists]}
    if args.horizon:
        rep["horizon"] = approx_entropy_report(sys_, omega, args.delta, args.horizon, state_norm=args.state_norm).to_json()
    return rep


def cmd_car(args) -> dict:
    from .car import build_car, matrix_units

    if args.action != "verify":
        raise DomainError(f"unknown car action {args.action!r}")
    sys_ = build_car(args.modes)
    units = matrix_units(sys_)
    rep = {"modes": args.modes, "dim": sys_.dim, "relations": sys_.relation_defects(), "matrix_units": units.defects()}
    if args.modes <= 6:
        rep["generated_dimension"] = units.generated_dimension()
        rep["full_matrix_algebra"] = rep["generated_dimension"] == 4**args.modes
    return rep


def cmd_bogoliubov(args) -> dict:
    from .car import bogoliubov_entropy

    symbol = io.symbol_from_json(io.load_json(args.symbol))
    return {"entropy": bogoliubov_entropy(symbol, args.panels), "panels": args.panels}


def cmd_binary_shift(args) -> str:
    from .binary_shift import (
        MAX_DENSE_N,
        Bitstream,
        PeriodicityWarning,
        center_dimension_oracle,
        concatenation_decomposition,
        dense_checks,
        numerical_center_dimension,
        sign_string_realization,
        structure_sequence,
    )

    b = Bitstream.parse(args.bits)
    notes = []
    if args.max_n > b.window + 1:
        # the listed bits are the full finite support of X
        b = Bitstream(b.bits + (0,) * (args.max_n - 1 - b.window))
        notes.append(f"bits zero-padded to window {b.window}")
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", PeriodicityWarning)
        seq = structure_sequence(b, args.max_n)
    notes += [str(w.message) for w in caught]
    parse = concatenation_decomposition(seq)
    out = _io.StringIO()
    fields = ["n", "c_n", "d_n", "H_n", "mean_n"]
    if args.oracle:
        fields += ["oracle_c_n", "oracle_agrees", "dense_ok"]
    writer = csv.DictWriter(out, fieldnames=fields, lineterminator="\n")
    out.write(f"# version {__version__}\n")
    for note in notes:
        out.write(f"# {note}\n")
    writer.writeheader()
    for row in seq.rows():
        if args.oracle:
            n = row["n"]
            oc = center_dimension_oracle(sign_string_realization(b, n))
            row["oracle_c_n"] = oc
            row["oracle_agrees"] = str(oc == row["c_n"]).lower()
            dense_ok = ""
            if n <= min(args.dense_max, MAX_DENSE_N):
                r = sign_string_realization(b, n, dense=True)
                ok = all(v <= 1e-10 for v in dense_checks(r).values())
                if n <= 6:
                    ok = ok and numerical_center_dimension(r) == 2 ** row["c_n"]
                dense_ok = str(ok).lower()
            row["dense_ok"] = dense_ok
        row["H_n"] = repr(row["H_n"])
        row["mean_n"] = repr(row["mean_n"])
        writer.writerow(row)
    out.write(f"# parse {json.dumps(parse.to_json(), sort_keys=True)}\n")
    return out.getvalue()


def _ising_coupling(term: np.ndarray) -> float | None:
    zz = np.diag([1.0, -1.0, -1.0, 1.0])
    if term.shape != (4, 4):
        return None
    j = -float(np.real(term[0, 0]))
    return j if np.max(np.abs(term + j * zz)) <= 1e-12 else None


def cmd_pressure(args) -> dict:
    from .pressure import (
        LocalHamiltonian,
        ising_open_log_partition,
        ising_transfer_pressure,
        pressure_property_suite,
        shift_pressure_estimate,
    )

    lh = LocalHamiltonian(args.site_dim, args.support, io.load_matrix(args.term))
    seq = shift_pressure_estimate(lh, args.kmax, periodic=args.periodic)
    rep = {"sequence": seq.to_json()}
    if args.suite:
        rep["suite"] = pressure_property_suite(lh, k=min(args.kmax, 10), seed=args.seed).to_json()
    if args.ising_oracle:
        j = _ising_coupling(lh.term) if args.site_dim == 2 and args.support == 2 else None
        if j is None:
            raise DomainError("--ising-oracle needs a term of the form -J sz (x) sz")
        limit = ising_transfer_pressure(j)
        finite = ising_open_log_partition(j, args.kmax + 2) / (args.kmax + 1)
        rep["ising_oracle"] = {"coupling": j, "transfer_pressure": limit, "open_chain_p_kmax": finite, "difference": seq.last - limit}
    return rep


def cmd_acceptance(args) -> int:
    from .acceptance import CRITERIA, run_criterion

    numbers = range(1, len(CRITERIA) + 1) if args.all or not args.criterion else args.criterion
    results = []
    for n in numbers:
        if not 1 <= n <= len(CRITERIA):
            raise DomainError(f"no criterion {n}")
        res = run_criterion(n)
        results.append(res)
        print(res.line(), flush=True)
    if args.out:
        io.write_json(args.out, io.stamp({"criteria": [r.to_json() for r in results]}))
    return 0 if all(r.ok for r in results) else 1


# -- parser -----------------------------------------------------------------------------


def _add_budget(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--restarts", type=int, default=32)
    p.add_argument("--iterations", type=int, default=500)
    p.add_argument("--index-ranges", type=int, nargs="+")
    p.add_argument("--no-grow", action="store_true", help="do not probe larger index ranges")
    p.add_argument("--workers", type=int, help="worker processes (default: NCE_WORKERS or 1)")
    p.add_argument("--witness", help="write the witness partition to this JSON file")


def _add_shift(p: argparse.ArgumentParser) -> None:
    p.add_argument("--site-dim", type=int, required=True)
    p.add_argument("--site-density", help="site state matrix JSON (default: trace)")
    p.add_argument("--window", type=int, default=16)
    p.add_argument("--step", type=int, default=1, help="power of the shift (0 = identity)")
    p.add_argument("--state-norm", action="store_true", help="2-norm of the product state instead of the trace")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nce", description="Entropy of finite-dimensional operator algebras and shifts.")
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("--out", help="write the report here instead of stdout")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eta", help="eta(t) = -t log t of a scalar or matrix")
    p.add_argument("--t", type=float)
    p.add_argument("--matrix")
    p.set_defaults(func=cmd_eta)

    p = sub.add_parser("entropy", help="von Neumann entropy of a density matrix")
    p.add_argument("--state", required=True)
    p.set_defaults(func=cmd_entropy)

    p = sub.add_parser("relent", help="relative entropy tau(x log x - x log y)")
    p.add_argument("--x", required=True)
    p.add_argument("--y", required=True)
    p.add_argument("--trace", choices=["tr", "normalized"], default="tr")
    p.set_defaults(func=cmd_relent)

    p = sub.add_parser("cs-entropy", help="lower bound on H(N_1, ..., N_k)", epilog=ENTROPY_HELP)
    p.add_argument("--algebra", action="append", required=True)
    _add_budget(p)
    p.set_defaults(func=cmd_cs_entropy)

    p = sub.add_parser("relalg", help="lower bound on H(N | P)", epilog=ENTROPY_HELP)
    p.add_argument("--n", required=True)
    p.add_argument("--p", required=True)
    _add_budget(p)
    p.set_defaults(func=cmd_relalg)

    p = sub.add_parser("cnt", help="lower bound on the state entropy H_phi(N_1, ..., N_k)", epilog=ENTROPY_HELP)
    p.add_argument("--state", required=True, help="density matrix of phi (trace one)")
    p.add_argument("--algebra", action="append", required=True)
    _add_budget(p)
    p.set_defaults(func=cmd_cnt)

    p = sub.add_parser("shift-entropy", help="finite-horizon entropy of a shift")
    _add_shift(p)
    p.add_argument("--horizon", type=int, required=True)
    p.add_argument("--mode", choices=["cs", "cnt", "rank"], default="cs")
    p.add_argument("--block-width", type=int, default=1)
    p.add_argument("--delta", type=float, default=0.1, help="delta for --mode rank")
    _add_budget(p)
    p.set_defaults(func=cmd_shift_entropy)

    p = sub.add_parser("delta-rank", help="upper bound on the delta-rank of a set of local operators")
    _add_shift(p)
    p.add_argument("--omega", help='JSON {"operators": [{"start": i, "matrix": M}]} (default: site matrix units)')
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--horizon", type=int, default=0)
    p.set_defaults(func=cmd_delta_rank)

    p = sub.add_parser("car", help="CAR algebra checks")
    p.add_argument("action", choices=["verify"])
    p.add_argument("--modes", type=int, required=True)
    p.set_defaults(func=cmd_car)

    p = sub.add_parser("bogoliubov", help="entropy of a quasifree Bogoliubov shift from its symbol")
    p.add_argument("--symbol", required=True)
    p.add_argument("--panels", type=int, default=1024)
    p.set_defaults(func=cmd_bogoliubov)

    p = sub.add_parser("binary-shift", help="structure sequence of a binary shift (CSV)")
    p.add_argument("--bits", required=True)
    p.add_argument("--max-n", type=int, required=True)
    p.add_argument("--oracle", action="store_true")
    p.add_argument("--dense-max", type=int, default=8)
    p.set_defaults(func=cmd_binary_shift)

    p = sub.add_parser("pressure", help="finite-horizon pressure of a translation-invariant interaction")
    p.add_argument("--site-dim", type=int, required=True)
    p.add_argument("--support", type=int, required=True)
    p.add_argument("--term", required=True)
    p.add_argument("--kmax", type=int, required=True)
    p.add_argument("--periodic", action="store_true")
    p.add_argument("--suite", action="store_true")
    p.add_argument("--ising-oracle", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_pressure)

    p = sub.add_parser("acceptance", help="run the acceptance criteria")
    p.add_argument("--all", action="store_true")
    p.add_argument("--criterion", type=int, nargs="+")
    p.set_defaults(func=cmd_acceptance)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        result = args.func(args)
    except NCEError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    if isinstance(result, int):
        return result
    if isinstance(result, str):
        if args.out:
            with open(args.out, "w", encoding="utf-8") as fh:
                fh.write(result)
        else:
            sys.stdout.write(result)
        return 0
    _emit(args, _clean(result))
    return 0


def _clean(obj):
    """Plain JSON types (numpy scalars become Python numbers)."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj) if math.isfinite(obj) else str(float(obj))
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


if __name__ == "__main__":
    sys.exit(main())
