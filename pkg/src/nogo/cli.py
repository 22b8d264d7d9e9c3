"""``nogo`` command line.

Exit codes: 0 success / verdict matches the file's "expected" field,
10 valuation found, 11 no valuation exists, 3 budget exhausted,
2 malformed input, 1 any other failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from . import bell
from .bootstrap import LiftError, lift_rayset, tensor_modulo_identity
from .falsifier import BudgetReport, CandidateRepresentation, falsify, recheck
from .fileio import InputError, dump_observables, load_json, parse_observables
from .operators import DEFAULT_TOL, NonCommutingError, joint_spectrum
from .sat import sat_colorable
from .valuation import (
    RaySet,
    build_contexts,
    default_threads,
    find_valuation,
    find_valuation_general,
    verify_valuation,
)

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_BUDGET, EXIT_FOUND, EXIT_NONE = 0, 1, 2, 3, 10, 11

BUNDLED_RAYSETS = ("peres33.json", "basis3.json")
BUNDLED_OBSERVABLES = ("peres_mermin.json",)


def data_path(name: str) -> Path:
    return Path(str(resources.files("nogo") / "data" / name))


def _emit(args, payload: dict, text: str):
    if args.json:
        print(json.dumps(payload, indent=2, default=_json_default))
    else:
        print(text)


def _json_default(x):
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"not JSON serializable: {type(x).__name__}")


def _write(path: str, payload: dict):
    Path(path).write_text(json.dumps(payload, indent=1, default=_json_default) + "\n")


def _verdict_code(outcome: str, expected: str | None) -> int:
    if outcome == "budget":
        return EXIT_BUDGET
    verdict = "colorable" if outcome == "found" else "uncolorable"
    if expected is not None and verdict == expected:
        return EXIT_OK
    return EXIT_FOUND if outcome == "found" else EXIT_NONE


# -- subcommands ------------------------------------------------------------


def cmd_check_valuation(args) -> int:
    data = load_json(args.file)
    expected = data.get("expected")
    if args.general:
        if "rays" in data:
            rs = RaySet.from_json(data)
            ops = rs.projections()
        else:
            ops, _ = parse_observables(data)
        cert = find_valuation_general(ops, tol=args.tol, budget=args.budget)
        target = ops
        extra = {"observables": len(ops)}
    else:
        rs = RaySet.from_json(data)
        rs.tol = args.tol
        ctx = build_contexts(rs)
        cert = find_valuation(rs, budget=args.budget, threads=args.threads, contexts=ctx)
        target = rs
        sat = sat_colorable(rs.rays, rs.dim, args.tol)
        extra = {
            "rays": len(rs.rays),
            "contexts": {"pairs": len(ctx.pairs), "bases": len(ctx.bases)},
            "sat_oracle": "colorable" if sat is not None else "uncolorable",
        }
    checked = None
    if cert.found:
        checked = verify_valuation(target, cert.valuation, args.tol)
        if not checked:
            print(f"internal error: valuation rejected by checker: {checked.failure}", file=sys.stderr)
            return EXIT_FAIL
    payload = {
        "file": str(args.file),
        "name": data.get("name", ""),
        "dim": data.get("dim"),
        "expected": expected,
        **extra,
        "certificate": cert.to_json(),
        "verified": None if checked is None else bool(checked),
    }
    verdict = {"found": "valuation found", "exhausted": "no valuation exists", "budget": "search budget exhausted"}[cert.outcome]
    text = f"{payload['name'] or args.file}: {verdict} ({cert.nodes} nodes, {cert.elapsed:.3f}s)"
    if "sat_oracle" in extra:
        text += f"; SAT oracle: {extra['sat_oracle']}"
    _emit(args, payload, text)
    return _verdict_code(cert.outcome, expected)


def cmd_lift(args) -> int:
    rs = RaySet.load(args.input)
    try:
        out = lift_rayset(rs, args.to_dim, budget=args.budget, threads=args.threads)
    except ValueError as exc:
        raise InputError(str(exc), str(args.input)) from exc
    except LiftError as exc:
        print(f"lift failed: {exc}", file=sys.stderr)
        if exc.certificate is not None and exc.certificate.outcome == "budget":
            return EXIT_BUDGET
        return EXIT_FAIL
    payload = out.to_json()
    _write(args.out, payload)
    _emit(
        args,
        {"out": args.out, "dim": out.dim, "rays": len(out.rays), "verified": True, "certificate": out.meta["certificate"]},
        f"wrote {len(out.rays)} rays in dimension {out.dim} to {args.out} (verified)",
    )
    return EXIT_OK


def cmd_tensor_id(args) -> int:
    rs = RaySet.load(args.input)
    try:
        res = tensor_modulo_identity(rs, args.k, budget=args.budget, tol=args.tol)
    except ValueError as exc:
        raise InputError(str(exc), str(args.input)) from exc
    except LiftError as exc:
        print(f"tensor-id failed: {exc}", file=sys.stderr)
        if exc.certificate is not None and exc.certificate.outcome == "budget":
            return EXIT_BUDGET
        return EXIT_FAIL
    payload = dump_observables(
        res.observables,
        name=f"{rs.name or 'rayset'}-tensor-id{args.k}",
        expected="uncolorable",
        k=args.k,
        verified=res.verified,
        certificate=res.certificate.to_json(),
    )
    _write(args.out, payload)
    _emit(
        args,
        {"out": args.out, "dim": payload["dim"], "observables": len(res.observables), "verified": res.verified, "certificate": payload["certificate"]},
        f"wrote {len(res.observables)} observables in dimension {payload['dim']} to {args.out} (verified)",
    )
    return EXIT_OK


def _parse_floats(text: str, n: int, what: str) -> list[float]:
    try:
        vals = [float(x) for x in text.split(",")]
    except ValueError as exc:
        raise InputError(f"expected {n} comma-separated numbers", what) from exc
    if len(vals) != n:
        raise InputError(f"expected {n} comma-separated numbers, got {len(vals)}", what)
    return vals


def _parse_obs(text: str) -> np.ndarray:
    text = text.strip()
    if text.startswith("["):
        try:
            rows = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InputError(f"invalid JSON: {exc.msg}", "--obs") from exc
        try:
            m = np.array([[complex(z["re"], z.get("im", 0.0)) if isinstance(z, dict) else complex(z) for z in r] for r in rows])
        except (TypeError, ValueError, KeyError, AttributeError) as exc:
            raise InputError("matrix entries must be numbers or {re, im}", "--obs") from exc
        if m.shape != (2, 2):
            raise InputError(f"expected a 2x2 matrix, got shape {m.shape}", "--obs")
        return m
    a0, ax, ay, az = _parse_floats(text, 4, "--obs")
    return bell.observable(a0, (ax, ay, az))


def cmd_bell_sim(args) -> int:
    n = np.array(_parse_floats(args.state, 3, "--state"))
    if np.linalg.norm(n) == 0:
        raise InputError("Bloch vector must be nonzero", "--state")
    state = bell.BlochState.normalized(n)
    A = _parse_obs(args.obs)
    try:
        d = bell.decompose(A)
    except ValueError as exc:
        raise InputError(str(exc), "--obs") from exc
    quantum = float(np.trace(state.density() @ A).real)
    payload = {"state": list(state.n), "a0": d.a0, "a": list(d.a), "quantum": quantum}
    if args.mc is not None:
        if args.mc < 1:
            raise InputError("must be at least 1", "--mc")
        est, err = bell.expectation_mc(state, A, args.mc, args.seed, threads=args.threads)
        payload.update({"mode": "mc", "N": args.mc, "seed": args.seed, "threads": args.threads, "estimate": est, "stderr": err})
        text = f"MC estimate {est:.10g} +- {err:.3g} (N={args.mc}, seed={args.seed}); Tr(rho A) = {quantum:.10g}"
    else:
        value = bell.expectation_exact(state, A)
        payload.update({"mode": "exact", "expectation": value})
        text = f"model expectation {value:.15g}; Tr(rho A) = {quantum:.15g}"
    _emit(args, payload, text)
    return EXIT_OK


def cmd_bell_certificate(args) -> int:
    v = bell.convex_extension_certificate()
    print(json.dumps(v.to_json(), indent=2))
    return EXIT_OK


def cmd_falsify(args) -> int:
    c = CandidateRepresentation.load(args.file)
    try:
        result = falsify(c, budget=args.budget, seed=args.seed, tol=args.tol)
    except ValueError as exc:
        raise InputError(str(exc), str(args.file)) from exc
    if isinstance(result, BudgetReport):
        _emit(args, result.to_json(), f"no violation in {result.probes} probe rounds (seed {result.seed})")
        return EXIT_BUDGET
    payload = result.to_json()
    payload["recheck_gap"] = recheck(result)
    # the certificate is always printed; --json only switches to machine format
    if args.json:
        _emit(args, payload, "")
    else:
        print(f"{result.kind} violation, gap {result.gap:.12g} (tol {result.tol:g})")
        print(json.dumps(payload, default=_json_default))
    return EXIT_OK


def _fmt_point(p) -> str:
    return "(" + ",".join(f"{x:.9g}" for x in p) + ")"


def cmd_joint_spectrum(args) -> int:
    ops, _ = parse_observables(load_json(args.file))
    try:
        js = joint_spectrum(ops, args.tol)
    except NonCommutingError as exc:
        raise InputError(str(exc), "operators") from exc
    points = sorted(js.rounded(9), reverse=True)
    payload = {
        "n": js.n,
        "points": [list(p) for p in points],
        "tol": js.tol,
        "reconstruction_error": js.reconstruction_error,
    }
    _emit(args, payload, "{" + ",".join(_fmt_point(p) for p in points) + "}")
    return EXIT_OK


def selfcheck(threads: int = 1) -> list[dict]:
    """Re-verify bundled data and the qubit model; one record per check."""
    results = []
    for name in BUNDLED_RAYSETS:
        rs = RaySet.load(data_path(name))
        cert = find_valuation(rs, threads=threads)
        sat = sat_colorable(rs.rays, rs.dim)
        verdict = "colorable" if cert.found else "uncolorable"
        ok = cert.outcome != "budget" and verdict == rs.expected and (sat is not None) == cert.found
        if cert.found:
            ok = ok and bool(verify_valuation(rs, cert.valuation))
        results.append({"check": f"rayset {name}", "ok": ok, "solver": cert.outcome, "sat": "colorable" if sat is not None else "uncolorable"})
    for name in BUNDLED_OBSERVABLES:
        ops, data = parse_observables(load_json(data_path(name)))
        cert = find_valuation_general(ops)
        verdict = "colorable" if cert.found else "uncolorable"
        results.append({"check": f"observables {name}", "ok": verdict == data.get("expected"), "solver": cert.outcome})
    worst = 0.0
    for theta in np.linspace(0, np.pi, 50):
        for phi in np.linspace(0, 2 * np.pi, 50, endpoint=False):
            s = bell.BlochState.from_angles(theta, phi)
            rho = s.density()
            for k in range(8):
                A = _grid_observable(k)
                worst = max(worst, abs(bell.expectation_exact(s, A) - np.trace(rho @ A).real))
    results.append({"check": "bell exact grid 50x50x8", "ok": bool(worst <= 1e-12), "max_error": float(worst)})
    cert = bell.convex_extension_certificate()
    results.append({"check": "convex-extension certificate", "ok": abs(cert.gap - 0.5) <= 1e-12, "gap": cert.gap})
    return results


def _grid_observable(k: int) -> np.ndarray:
    """Eight fixed observables spanning the Pauli directions and offsets."""
    table = [
        (0.0, (0, 0, 1)),
        (0.0, (1, 0, 0)),
        (0.0, (0, 1, 0)),
        (0.5, (1, 1, 1)),
        (-1.0, (0.3, -0.7, 0.2)),
        (2.0, (0, 0, 0)),
        (1.0, (-2.0, 0.5, 1.5)),
        (0.25, (0.0, -1.0, -1.0)),
    ]
    a0, a = table[k]
    return bell.observable(a0, a)


def cmd_selfcheck(args) -> int:
    results = selfcheck(args.threads)
    ok = all(r["ok"] for r in results)
    text = "\n".join(f"{'PASS' if r['ok'] else 'FAIL'}  {r['check']}" for r in results)
    _emit(args, {"ok": ok, "checks": results}, text)
    return EXIT_OK if ok else EXIT_FAIL


# -- entry point ------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="machine-readable output")
    common.add_argument("--threads", type=int, default=None, help="worker count (default: $NOGO_THREADS or CPU count)")
    common.add_argument("--tol", type=float, default=DEFAULT_TOL)

    p = argparse.ArgumentParser(prog="nogo", description="Hidden-variable no-go verification tools.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("check-valuation", parents=[common], help="search for a valuation of a ray or observable set")
    s.add_argument("file")
    s.add_argument("--general", action="store_true", help="treat the file as general observables")
    s.add_argument("--budget", type=int, default=10**7)
    s.set_defaults(func=cmd_check_valuation)

    s = sub.add_parser("lift", parents=[common], help="lift an uncolorable ray set to a higher dimension")
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--to-dim", type=int, required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--budget", type=int, default=10**8)
    s.set_defaults(func=cmd_lift)

    s = sub.add_parser("tensor-id", parents=[common], help="projections P (x) I_k of an uncolorable ray set")
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--k", type=int, required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--budget", type=int, default=10**7)
    s.set_defaults(func=cmd_tensor_id)

    s = sub.add_parser("bell-sim", parents=[common], help="qubit hidden-variable model expectations")
    s.add_argument("--state", required=True, help="Bloch vector nx,ny,nz")
    s.add_argument("--obs", required=True, help="2x2 JSON matrix or a0,ax,ay,az")
    g = s.add_mutually_exclusive_group()
    g.add_argument("--exact", action="store_true")
    g.add_argument("--mc", type=int, metavar="N")
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_bell_sim)

    s = sub.add_parser("bell-certificate", parents=[common], help="print the convex-extension obstruction")
    s.set_defaults(func=cmd_bell_certificate)

    s = sub.add_parser("falsify", parents=[common], help="find a violated constraint in a candidate representation")
    s.add_argument("file")
    s.add_argument("--budget", type=int, default=100)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_falsify)

    s = sub.add_parser("joint-spectrum", parents=[common], help="joint spectrum of commuting observables")
    s.add_argument("file")
    s.set_defaults(func=cmd_joint_spectrum)

    s = sub.add_parser("selfcheck", parents=[common], help="re-verify bundled data")
    s.set_defaults(func=cmd_selfcheck)
    return p


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.threads is None:
        args.threads = default_threads()
    try:
        return args.func(args)
    except InputError as exc:
        print(f"nogo: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
