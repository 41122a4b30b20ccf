"""Command-line front end.

Every command prints a human-readable report, or with ``--json`` a report
document ``{"command", "parameters", "results", "seed", "version",
"wall_time"}``. Exit status: 0 success, 1 result outside tolerance, 2 usage
or input error.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .bell import BUILTIN_EXPRESSIONS, BellExpression, evaluate_quantum, lhv_bound
from .correlations import full_tensor, tensor_to_json
from .exceptions import LPError, ParameterError, SizeError
from .polytope import critical_visibility, visibility_for_settings
from .seesaw import paper_settings, seesaw_maximize, settings_from_json
from .states import DickeSpec, dicke_mixture, dicke_state, projector, validate_density_matrix, white_noise
from .wwzb import maximize_C_k

EXIT_OK, EXIT_MISMATCH, EXIT_USAGE = 0, 1, 2

#: Reported values: C_k as exact fractions, p_cr for two and three settings (None = not reported).
REFERENCE_TABLE = {
    (5, 1): {"C": {2: Fraction(8, 25), 4: Fraction(33, 25)}, "pcr2": 0.536, "pcr3": 0.477},
    (5, 2): {"C": {2: Fraction(18, 25), 4: Fraction(24, 25)}, "pcr2": 0.7671, "pcr3": 0.746},
    (7, 1): {"C": {2: Fraction(13, 49), 4: Fraction(25, 49), 6: Fraction(85, 49)}, "pcr2": 0.271, "pcr3": None},
    (7, 2): {"C": {2: Fraction(200, 441), 4: Fraction(32, 147), 6: Fraction(129, 49)}, "pcr2": 0.295, "pcr3": None},
    (7, 3): {"C": {2: Fraction(32, 49), 4: Fraction(864, 1225), 6: Fraction(256, 245)}, "pcr2": 0.508, "pcr3": None},
}
PCR_TOL = {((5, 2), 2): 1e-3}
PCR_DEFAULT_TOL = 3e-3


class UsageError(Exception):
    pass


def parse_state(text: str) -> np.ndarray:
    """Density matrix from ``dicke-mix:N=5,e=2``, ``dicke:N=6,e=3``, ``white-noise:N=5`` or ``file:path``.

    A file holds ``{"real": [[...]], "imag": [[...]]}`` (``imag`` optional).
    """
    kind, _, rest = text.partition(":")
    if kind == "file":
        try:
            data = json.loads(Path(rest).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot load density matrix from {rest!r}: {exc}") from None
        rho = np.asarray(data["real"], dtype=float) + 1j * np.asarray(data.get("imag", 0.0), dtype=float)
        return validate_density_matrix(rho, atol=1e-9)
    params = {}
    for item in filter(None, rest.split(",")):
        key, eq, value = item.partition("=")
        if not eq:
            raise UsageError(f"bad state parameter {item!r} in {text!r}")
        try:
            params[key.strip()] = int(value)
        except ValueError:
            raise UsageError(f"state parameter {key!r} must be an integer") from None
    try:
        if kind == "dicke-mix":
            return dicke_mixture(DickeSpec(params["N"], params["e"]))
        if kind == "dicke":
            return projector(dicke_state(params["N"], params["e"]))
        if kind == "white-noise":
            return white_noise(params["N"])
    except KeyError as exc:
        raise UsageError(f"state {text!r} is missing parameter {exc}") from None
    raise UsageError(f"unknown state kind {kind!r}; use dicke-mix, dicke, white-noise or file")


def load_expression(text: str) -> BellExpression:
    if text in BUILTIN_EXPRESSIONS:
        return BUILTIN_EXPRESSIONS[text]()
    path = Path(text)
    try:
        raw = path.read_text()
    except OSError as exc:
        raise UsageError(f"{text!r} is neither a builtin ({', '.join(BUILTIN_EXPRESSIONS)}) nor a readable file: {exc}") from None
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: JSON parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    try:
        return BellExpression.from_json(data)
    except ParameterError as exc:
        raise UsageError(f"{path}: {exc}") from None


def load_settings(text: str) -> np.ndarray:
    try:
        return settings_from_json(Path(text).read_text())
    except (OSError, json.JSONDecodeError, KeyError) as exc:
        raise UsageError(f"cannot load settings from {text!r}: {exc}") from None


def _report(args, results: dict, start: float) -> dict:
    params = {k: v for k, v in vars(args).items() if k not in ("func", "json")}
    return {
        "command": args.command,
        "parameters": params,
        "results": results,
        "seed": getattr(args, "seed", None),
        "version": __version__,
        "wall_time": time.perf_counter() - start,
    }


def _fmt_values(values):
    if isinstance(values, list):
        return "{" + ", ".join(str(v) for v in values) + "}"
    return str(values)


# --------------------------------------------------------------------------- #
# Commands                                                                    #
# --------------------------------------------------------------------------- #


def cmd_table1(args):
    rows, ok = [], True
    for (n, e), ref in REFERENCE_TABLE.items():
        tensor = full_tensor(dicke_mixture(DickeSpec(n, e)))
        row = {"state": f"rho_{n}^{e}", "cells": []}
        for k, exact in ref["C"].items():
            res = maximize_C_k(tensor, k, restarts=args.restarts, seed=args.seed)
            passed = abs(res.value - float(exact)) <= args.tolerance
            ok &= passed
            row["cells"].append(
                {"quantity": f"C_{k}", "computed": res.value, "reference": float(exact), "reference_exact": str(exact), "pass": passed}
            )
        if args.include_pcr:
            rho = dicke_mixture(DickeSpec(n, e))
            for s, key in ((2, "pcr2"), (3, "pcr3")):
                if ref[key] is None:
                    continue
                t0 = time.perf_counter()
                res = critical_visibility(
                    rho, s, seed=args.seed, restarts=args.pcr_restarts, time_budget=args.cell_timeout
                )
                tol = PCR_TOL.get(((n, e), s), PCR_DEFAULT_TOL)
                passed = abs(res.p_crit - ref[key]) <= tol
                ok &= passed
                row["cells"].append(
                    {
                        "quantity": f"p_cr^{s}set",
                        "computed": res.p_crit,
                        "reference": ref[key],
                        "tolerance": tol,
                        "pass": passed,
                        "seconds": time.perf_counter() - t0,
                        "timed_out": res.timed_out,
                    }
                )
        rows.append(row)
    lines = []
    for row in rows:
        cells = "  ".join(
            f"{c['quantity']}={c['computed']:.6f} (reference {c['reference']:.4g}) {'ok' if c['pass'] else 'FAIL'}"
            for c in row["cells"]
        )
        lines.append(f"{row['state']:8s} {cells}")
    return {"rows": rows, "all_pass": bool(ok)}, lines, EXIT_OK if ok else EXIT_MISMATCH


def cmd_verify_inequality(args):
    expr = load_expression(args.expr)
    res = lhv_bound(expr)
    results = {
        "parties": expr.num_parties,
        "settings": expr.num_settings,
        "terms": len(expr),
        "terms_by_order": {str(k): v for k, v in expr.count_by_order().items()},
        "lhv_max": res.max_value,
        "lhv_min": res.min_value,
        "value_set": res.value_set,
        "strategies": res.num_strategies,
        "argmax": res.argmax.outcomes.tolist(),
        "expression": expr.to_json(),
    }
    lines = [
        f"terms: {len(expr)} {dict(expr.count_by_order())} (order: count)",
        f"strategies enumerated: {res.num_strategies}",
        f"LHV bound (max): {res.max_value}",
        f"LHV min: {res.min_value}",
        f"attained values: {_fmt_values(res.value_set)}",
    ]
    return results, lines, EXIT_OK


def cmd_violation(args):
    rho = parse_state(args.state)
    expr = load_expression(args.expr)
    tensor = full_tensor(rho)
    if tensor.ndim != expr.num_parties:
        raise UsageError(f"state has {tensor.ndim} qubits but the expression has {expr.num_parties} parties")
    bound = lhv_bound(expr).max_value
    if args.mode == "paper-settings":
        if expr.num_settings != 2:
            raise UsageError("paper-settings mode needs a two-setting expression")
        settings = load_settings(args.settings) if args.settings else paper_settings(expr.num_parties)
        value = evaluate_quantum(expr, tensor, settings)
        extra = {}
    else:
        initial = load_settings(args.settings) if args.settings else None
        res = seesaw_maximize(expr, tensor, restarts=args.restarts, seed=args.seed, initial=initial)
        settings, value = res.settings, res.value
        extra = {"sweeps": res.sweeps, "restarts_used": res.restarts_used, "symmetric": res.symmetric}
    ratio = bound / value if value > bound else None
    results = {"value": value, "lhv_bound": bound, "critical_visibility": ratio, "settings": settings.tolist(), **extra}
    lines = [f"quantum value: {value:.6f}", f"LHV bound: {bound}"]
    lines.append(f"bound/value (predicted critical visibility): {ratio:.6f}" if ratio else "no violation")
    return results, lines, EXIT_OK


def cmd_visibility(args):
    rho = parse_state(args.state)
    if args.settings:
        settings = load_settings(args.settings)
        res = visibility_for_settings(rho, settings, symmetric=None if args.symmetric else False)
    else:
        res = critical_visibility(
            rho, args.num_settings, seed=args.seed, restarts=args.restarts, shared=args.symmetric
        )
    results = res.to_json()
    results["probes"] = res.probes
    results["trace"] = res.trace
    lines = [f"p_crit: {res.p_crit:.6f}", f"probes: {res.probes}", f"settings (party 1): {np.round(res.settings[0], 6).tolist()}"]
    return results, lines, EXIT_OK


def cmd_tensor(args):
    tensor = full_tensor(parse_state(args.state))
    entries = tensor_to_json(tensor)
    return {"num_qubits": tensor.ndim, "entries": entries}, [json.dumps(entries)], EXIT_OK


def cmd_wwzb(args):
    tensor = full_tensor(parse_state(args.state))
    res = maximize_C_k(tensor, args.k, restarts=args.restarts, seed=args.seed)
    lines = [f"C_{args.k} = {res.value:.10f}", f"admits LHV model: {res.admits_model}"]
    return res.to_json(), lines, EXIT_OK


# --------------------------------------------------------------------------- #
# Parser                                                                      #
# --------------------------------------------------------------------------- #


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lhvcompat", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="emit a JSON report")
    common.add_argument("--seed", type=int, default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("table1", parents=[common], help="recompute the C_k / p_cr table")
    p.add_argument("--restarts", type=int, default=200)
    p.add_argument("--tolerance", type=float, default=1e-6, help="tolerance on C_k cells")
    p.add_argument("--include-pcr", action="store_true", help="also compute critical visibilities (slow)")
    p.add_argument("--pcr-restarts", type=int, default=20)
    p.add_argument("--cell-timeout", type=float, default=None, help="seconds per p_cr cell before stopping restarts")
    p.set_defaults(func=cmd_table1)

    p = sub.add_parser("verify-inequality", parents=[common], help="exact LHV bound by enumeration")
    p.add_argument("expr", help="builtin name (ineq5, chsh) or expression JSON file")
    p.set_defaults(func=cmd_verify_inequality)

    p = sub.add_parser("violation", parents=[common], help="quantum value of an expression")
    p.add_argument("--state", default="dicke-mix:N=5,e=2")
    p.add_argument("--expr", default="ineq5")
    p.add_argument("--mode", choices=["paper-settings", "optimize"], default="paper-settings")
    p.add_argument("--settings", help="settings JSON (evaluation point or warm start)")
    p.add_argument("--restarts", type=int, default=100)
    p.set_defaults(func=cmd_violation)

    p = sub.add_parser("visibility", parents=[common], help="critical white-noise visibility")
    p.add_argument("--state", default="dicke-mix:N=5,e=2")
    p.add_argument("--num-settings", "-S", type=int, choices=[2, 3], default=2)
    p.add_argument("--settings", help="settings JSON; skips the outer search")
    p.add_argument("--restarts", type=int, default=50)
    p.add_argument("--symmetric", action=argparse.BooleanOptionalAction, default=True,
                   help="share settings between parties and use the permutation-orbit LP")
    p.set_defaults(func=cmd_visibility)

    p = sub.add_parser("tensor", parents=[common], help="export the correlation tensor")
    p.add_argument("--state", default="dicke-mix:N=5,e=2")
    p.set_defaults(func=cmd_tensor)

    p = sub.add_parser("wwzb", parents=[common], help="two-setting LHV sufficiency value C_k")
    p.add_argument("--state", default="dicke-mix:N=5,e=2")
    p.add_argument("-k", type=int, default=2)
    p.add_argument("--restarts", type=int, default=200)
    p.set_defaults(func=cmd_wwzb)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    start = time.perf_counter()
    try:
        results, lines, code = args.func(args)
    except (UsageError, ParameterError, SizeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except LPError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISMATCH
    if args.json:
        print(json.dumps(_report(args, results, start), indent=2))
    else:
        print("\n".join(lines))
    return code


if __name__ == "__main__":
    sys.exit(main())
