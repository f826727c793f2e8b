"""Command-line interface: load, check, realize and evaluate supermap files.

Every command prints a single JSON report to stdout (diagnostics go to
stderr) and exits 0 when all requested checks pass, 1 when a check fails,
and 2 on malformed input.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import io
from .applications import ProgrammableDevice, TomographySetup, is_faithful, programmable_channel
from .linalg import EQ_TOL, dag, frob, min_eig_floor, rel_residual
from .operations import (
    KrausSet,
    QuantumOperation,
    apply_operation,
    choi_residuals,
    choi_to_kraus,
    kraus_to_choi,
)
from .realization import circuit_to_supermap, realize, realize_probabilistic
from .selftest import CORRUPTIONS, run_selftest
from .supermap import (
    NotDeterministicError,
    _determinism_certificate,
    action_distance,
    effect_map_of,
    is_deterministic,
    is_probability_preserving,
)
from .testers import evaluate, is_informationally_complete, make_tester

PASS = 0
FAIL = 1
MALFORMED = 2


class CheckFailure(Exception):
    """A semantic check failed; carries the report to emit before exit 1."""

    def __init__(self, report: dict):
        super().__init__(report.get("check", "check"))
        self.report = report


def _emit(report: dict) -> int:
    print(io.dumps17(report))
    return PASS if report["pass"] else FAIL


def _report(check: str, ok: bool, residual: float, details: dict) -> dict:
    return {
        "check": check,
        "pass": bool(ok),
        "residual": float(max(residual, 0.0)),
        "details": details,
    }


def _out_dir(args) -> Path | None:
    if args.out is None:
        return None
    path = Path(args.out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def cmd_check_op(args) -> dict:
    dim_in, dim_out, choi = io.operation_from_json(io.load_json(args.path))
    res = choi_residuals(choi, dim_in, dim_out)
    cp = min_eig_floor(res["min_eig"], res["max_eig"])
    herm_ok = res["hermiticity"] <= args.tol
    tni = res["trace_increase"] <= 1e-9 * max(1.0, res["max_eig"])
    channel = res["channel_residual"] <= args.tol * np.sqrt(dim_in)
    worst = max(res["hermiticity"], -min(res["min_eig"], 0.0), res["trace_increase"])
    return _report(
        "check-op",
        cp and herm_ok and tni,
        worst,
        {
            "cp": cp,
            "hermitian": herm_ok,
            "trace_non_increasing": tni,
            "channel": channel,
            "min_eigenvalue": res["min_eig"],
            "hermiticity_residual": res["hermiticity"],
            "channel_residual": res["channel_residual"],
        },
    )


def cmd_kraus2choi(args) -> dict:
    dim_in, dim_out, ops = io.kraus_set_from_json(io.load_json(args.path))
    try:
        op = kraus_to_choi(KrausSet(dim_in, dim_out, tuple(ops)))
    except ValueError as exc:
        raise CheckFailure(_report("kraus2choi", False, 0.0, {"error": str(exc)}))
    payload = io.operation_to_json(op.dim_in, op.dim_out, op.choi)
    details: dict = {"operation": payload}
    out = _out_dir(args)
    if out is not None:
        io.save_json(out / "operation.json", payload)
        details["written"] = str(out / "operation.json")
    return _report("kraus2choi", True, 0.0, details)


def cmd_choi2kraus(args) -> dict:
    dim_in, dim_out, choi = io.operation_from_json(io.load_json(args.path))
    try:
        op = QuantumOperation(dim_in, dim_out, choi)
    except ValueError as exc:
        raise CheckFailure(_report("choi2kraus", False, 0.0, {"error": str(exc)}))
    kraus = choi_to_kraus(op)
    roundtrip = frob(kraus_to_choi(kraus).choi - op.choi)
    payload = io.kraus_set_to_json(dim_in, dim_out, kraus.operators)
    details: dict = {"kraus_count": len(kraus.operators), "kraus": payload}
    out = _out_dir(args)
    if out is not None:
        io.save_json(out / "kraus.json", payload)
        details["written"] = str(out / "kraus.json")
    return _report("choi2kraus", roundtrip <= args.tol, roundtrip, details)


def cmd_apply(args) -> dict:
    dim_in, dim_out, choi = io.operation_from_json(io.load_json(args.op))
    rho = io.matrix_from_json(io.load_json(args.state))
    try:
        op = QuantumOperation(dim_in, dim_out, choi)
        out_state = apply_operation(op, rho)
    except ValueError as exc:
        raise CheckFailure(_report("apply", False, 0.0, {"error": str(exc)}))
    payload = io.matrix_to_json(out_state)
    details = {"probability": float(np.trace(out_state).real), "output": payload}
    out = _out_dir(args)
    if out is not None:
        io.save_json(out / "output_state.json", payload)
        details["written"] = str(out / "output_state.json")
    return _report("apply", True, 0.0, details)


def cmd_supermap(args) -> dict:
    s = io.supermap_from_json(io.load_json(args.path))
    cert = _determinism_certificate(s)
    if args.check == "deterministic":
        ok = is_deterministic(s, args.tol)
        return _report(
            "supermap-deterministic",
            ok,
            cert.residual,
            {"min_eigenvalue": cert.min_eig, "dual_factorization_residual": cert.product_residual},
        )
    if args.check == "prob-preserving":
        try:
            ok = is_probability_preserving(s, args.tol)
        except (NotDeterministicError, ValueError) as exc:
            raise CheckFailure(
                _report("supermap-prob-preserving", False, cert.residual, {"error": str(exc)})
            )
        d = s.h_in
        vec_i = np.eye(d).reshape(-1)
        residual = rel_residual(cert.choi_n, np.outer(vec_i, vec_i))
        return _report("supermap-prob-preserving", ok, residual, {})
    # effect-map
    try:
        em = effect_map_of(s, args.tol)
    except NotDeterministicError as exc:
        raise CheckFailure(_report("supermap-effect-map", False, cert.residual, {"error": str(exc)}))
    payload = [io.matrix_to_json(n) for n in em.kraus]
    details: dict = {"kraus_count": len(em.kraus), "kraus": payload}
    out = _out_dir(args)
    if out is not None:
        for j, mat in enumerate(payload):
            io.save_json(out / f"effect_map_{j}.json", mat)
        details["written"] = str(out)
    return _report("supermap-effect-map", True, cert.residual, details)


def cmd_realize(args) -> dict:
    s = io.supermap_from_json(io.load_json(args.path))
    try:
        circuit = realize(s, args.tol)
    except (NotDeterministicError, ValueError) as exc:
        cert = _determinism_certificate(s)
        raise CheckFailure(_report("realize", False, cert.residual, {"error": str(exc)}))
    rebuilt = circuit_to_supermap(circuit, (s.h_in, s.h_out, s.k_in, s.k_out))
    residual = action_distance(rebuilt, s)
    v_gap = rel_residual(dag(circuit.v) @ circuit.v, np.eye(circuit.v.shape[1]))
    w_gap = rel_residual(dag(circuit.w) @ circuit.w, np.eye(circuit.w.shape[1]))
    out = _out_dir(args)
    meta = {
        "dim_a": circuit.dim_a,
        "dim_b": circuit.dim_b,
        "roundtrip_residual": residual,
        "v_isometry_residual": v_gap,
        "w_isometry_residual": w_gap,
    }
    details = dict(meta)
    if out is not None:
        io.save_json(out / "v.json", io.matrix_to_json(circuit.v))
        io.save_json(out / "w.json", io.matrix_to_json(circuit.w))
        io.save_json(out / "meta.json", meta)
        details["written"] = str(out)
    ok = residual <= args.tol and v_gap <= args.tol and w_gap <= args.tol
    return _report("realize", ok, max(residual, v_gap, w_gap), details)


def cmd_realize_prob(args) -> dict:
    parts = [io.supermap_from_json(io.load_json(p)) for p in args.paths]
    try:
        circuit = realize_probabilistic(parts, args.tol)
    except (NotDeterministicError, ValueError) as exc:
        raise CheckFailure(_report("realize-prob", False, 0.0, {"error": str(exc)}))
    rebuilt = circuit_to_supermap(
        circuit, (parts[0].h_in, parts[0].h_out, parts[0].k_in, parts[0].k_out)
    )
    residuals = [action_distance(r, p) for r, p in zip(rebuilt, parts)]
    worst = max(residuals)
    out = _out_dir(args)
    meta = {
        "dim_a": circuit.dim_a,
        "dim_b": circuit.dim_b,
        "part_residuals": residuals,
    }
    details = dict(meta)
    if out is not None:
        io.save_json(out / "v.json", io.matrix_to_json(circuit.v))
        io.save_json(out / "w.json", io.matrix_to_json(circuit.w))
        for j, proj in enumerate(circuit.projectors):
            io.save_json(out / f"projector_{j}.json", io.matrix_to_json(proj))
        io.save_json(out / "meta.json", meta)
        details["written"] = str(out)
    return _report("realize-prob", worst <= args.tol, worst, details)


def _load_tester(effect_paths, h_out: int, h_in: int, tol: float, check_name: str):
    effects = [io.matrix_from_json(io.load_json(p)) for p in effect_paths]
    try:
        return make_tester(effects, h_out, h_in, tol)
    except ValueError as exc:
        raise CheckFailure(_report(check_name, False, 0.0, {"error": str(exc)}))


def cmd_tester_eval(args) -> dict:
    dim_in, dim_out, choi = io.operation_from_json(io.load_json(args.op))
    tester = _load_tester(args.effects, dim_out, dim_in, args.tol, "tester-eval")
    try:
        op = QuantumOperation(dim_in, dim_out, choi)
        probs = evaluate(tester, op, args.tol)
    except ValueError as exc:
        raise CheckFailure(_report("tester-eval", False, 0.0, {"error": str(exc)}))
    total_gap = abs(float(sum(probs)) - 1.0)
    return _report(
        "tester-eval",
        True,
        0.0,
        {
            "probabilities": list(probs.probabilities),
            "probability_sum": float(sum(probs)),
            "channel_probability_gap": total_gap,
            "informationally_complete": is_informationally_complete(tester),
        },
    )


def cmd_tester_check(args) -> dict:
    tester = _load_tester(args.effects, args.dim_out, args.dim_in, args.tol, "tester-check")
    return _report(
        "tester-check",
        True,
        0.0,
        {
            "outcomes": tester.n_outcomes,
            "sigma": io.matrix_to_json(tester.sigma),
            "informationally_complete": is_informationally_complete(tester),
        },
    )


def cmd_tomography_check(args) -> dict:
    f = io.matrix_from_json(io.load_json(args.state))
    h_in = int(round(np.sqrt(f.shape[0])))
    if h_in * h_in != f.shape[0]:
        raise io.FileFormatError("probe state dimension is not a perfect square")
    h_out = args.h_out if args.h_out else h_in
    try:
        setup = TomographySetup(faithful_state=f, h_in=h_in, h_out=h_out)
    except ValueError as exc:
        raise CheckFailure(_report("tomography-check", False, 0.0, {"error": str(exc)}))
    faithful = is_faithful(setup, args.tol)
    return _report(
        "tomography-check",
        faithful,
        0.0,
        {"faithful": faithful, "h_in": h_in, "h_out": h_out},
    )


def cmd_program_channel(args) -> dict:
    u = io.matrix_from_json(io.load_json(args.unitary))
    sigma = io.matrix_from_json(io.load_json(args.program))
    dim_prog = sigma.shape[0]
    if args.dim_sys * dim_prog != u.shape[0]:
        raise io.FileFormatError(
            f"unitary dimension {u.shape[0]} != dim_sys {args.dim_sys} * dim_prog {dim_prog}"
        )
    try:
        dev = ProgrammableDevice(unitary=u, dim_sys=args.dim_sys, dim_prog=dim_prog)
        op = programmable_channel(dev, sigma)
    except ValueError as exc:
        raise CheckFailure(_report("program-channel", False, 0.0, {"error": str(exc)}))
    res = choi_residuals(op.choi, op.dim_in, op.dim_out)
    payload = io.operation_to_json(op.dim_in, op.dim_out, op.choi)
    details = {"channel_residual": res["channel_residual"], "operation": payload}
    out = _out_dir(args)
    if out is not None:
        io.save_json(out / "operation.json", payload)
        details["written"] = str(out / "operation.json")
    ok = res["channel_residual"] <= args.tol * np.sqrt(op.dim_in)
    return _report("program-channel", ok, res["channel_residual"], details)


def cmd_selftest(args) -> dict:
    return run_selftest(args.seed, args.trials, tol=args.tol, corrupt=args.corrupt)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="supermaps",
        description="Checks, conversions and circuit realizations for quantum "
        "operations and supermaps stored as JSON files.",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol", type=float, default=EQ_TOL, help="residual tolerance")
    common.add_argument("--seed", type=int, default=0, help="seed for randomized work")
    common.add_argument("--out", type=str, default=None, help="directory for emitted files")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check-op", parents=[common], help="validate an operation file")
    p.add_argument("path")
    p.set_defaults(func=cmd_check_op)

    p = sub.add_parser("kraus2choi", parents=[common], help="Kraus set file to Choi operation file")
    p.add_argument("path")
    p.set_defaults(func=cmd_kraus2choi)

    p = sub.add_parser("choi2kraus", parents=[common], help="operation file to canonical Kraus file")
    p.add_argument("path")
    p.set_defaults(func=cmd_choi2kraus)

    p = sub.add_parser("apply", parents=[common], help="apply an operation to a state")
    p.add_argument("--op", required=True)
    p.add_argument("--state", required=True)
    p.set_defaults(func=cmd_apply)

    p = sub.add_parser("supermap", parents=[common], help="analyze a supermap file")
    p.add_argument("path")
    p.add_argument(
        "--check",
        choices=["deterministic", "prob-preserving", "effect-map"],
        default="deterministic",
    )
    p.set_defaults(func=cmd_supermap)

    p = sub.add_parser("realize", parents=[common], help="factor a deterministic supermap into isometries")
    p.add_argument("path")
    p.set_defaults(func=cmd_realize)

    p = sub.add_parser("realize-prob", parents=[common], help="realize alternatives with ancilla projectors")
    p.add_argument("paths", nargs="+")
    p.set_defaults(func=cmd_realize_prob)

    p = sub.add_parser("tester-eval", parents=[common], help="outcome probabilities of a tester on an operation")
    p.add_argument("effects", nargs="+", help="effect matrix files")
    p.add_argument("--op", required=True)
    p.set_defaults(func=cmd_tester_eval)

    p = sub.add_parser("tester-check", parents=[common], help="validate tester normalization")
    p.add_argument("effects", nargs="+", help="effect matrix files")
    p.add_argument("--dim-out", type=int, required=True)
    p.add_argument("--dim-in", type=int, required=True)
    p.set_defaults(func=cmd_tester_check)

    p = sub.add_parser("tomography-check", parents=[common], help="probe-state faithfulness check")
    p.add_argument("--state", required=True)
    p.add_argument("--h-out", type=int, default=None)
    p.set_defaults(func=cmd_tomography_check)

    p = sub.add_parser("program-channel", parents=[common], help="channel programmed by a state")
    p.add_argument("--unitary", required=True)
    p.add_argument("--program", required=True)
    p.add_argument("--dim-sys", type=int, required=True)
    p.set_defaults(func=cmd_program_channel)

    p = sub.add_parser("selftest", parents=[common], help="randomized property suites")
    p.add_argument("--trials", type=int, default=50)
    p.add_argument("--corrupt", choices=list(CORRUPTIONS), default=None,
                   help="debug: damage a fixture to prove the harness notices")
    p.set_defaults(func=cmd_selftest)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        report = args.func(args)
    except CheckFailure as exc:
        print(io.dumps17(exc.report))
        print(f"error: check failed: {exc.report['details'].get('error', exc)}", file=sys.stderr)
        return FAIL
    except io.FileFormatError as exc:
        print(f"error: malformed input: {exc}", file=sys.stderr)
        return MALFORMED
    return _emit(report)


if __name__ == "__main__":
    sys.exit(main())
