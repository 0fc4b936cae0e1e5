"""Command-line entry point.

Every subcommand prints one JSON report on stdout::

    {"command": ..., "instance_summary": ..., "result": ..., "status": ..., "timing_ms": ...}

status/exit code: ok/0, hypothesis-failed/2, error/1.  Usage errors print
argparse usage on stderr and exit 1.
"""

from __future__ import annotations

import argparse
import json
import math
import re
import sys
import time

import numpy as np

from .adjointable import AdjointableOp
from .errors import HypothesisGateError, OpFrameError
from .frames import k_optimal_bounds, norm_char_probe, optimal_bounds
from .instance_io import KINDS, load_instance, random_instance, save_instance
from .lemmas import run_lemma_suite
from .perturbation import (
    ConfinedSequence,
    certify_alpha_beta,
    certify_bessel_perturbation,
    certify_confined_perturbation,
    certify_l_operator_sum,
    certify_min_constant,
    certify_scalar_sum,
    derive_min_constant,
    derive_sum_lambda,
    min_l_lambda,
)

THEOREMS = ("bessel-perturb", "min-constant", "scalar-sum", "l-sum", "confined", "alpha-beta")
EXIT = {"ok": 0, "hypothesis-failed": 2, "error": 1}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 by default, which is reserved for failed hypotheses
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _names(inst, explicit, prefix):
    if explicit:
        names = [s.strip() for s in explicit.split(",") if s.strip()]
    else:
        pat = re.compile(rf"{re.escape(prefix)}\d*$")
        names = sorted((n for n in inst.families if pat.match(n)),
                       key=lambda n: int(n[len(prefix):] or 0))
    if not names:
        raise UsageError(f"no families named {prefix}... in the instance")
    return [inst.family(n) for n in names]


def _k_op(inst, args, default_identity=False):
    if getattr(args, "k_op", False):
        if inst.k_operator is None:
            raise UsageError("--k-op given but the instance has no k_operator")
        return inst.k_operator
    if default_identity:
        return AdjointableOp.identity(inst.k, inst.n)
    return None


def _confined(inst, name, count):
    seq = inst.sequences.get(name)
    return seq if seq is not None else ConfinedSequence([1.0] * count)


# -- subcommands ---------------------------------------------------------------

def cmd_bounds(args):
    inst = load_instance(args.file)
    fam = inst.family(args.family)
    k_op = _k_op(inst, args)
    res = optimal_bounds(fam) if k_op is None else k_optimal_bounds(fam, k_op)
    return inst.summary(), res.to_dict(), "ok"


def cmd_check(args):
    inst = load_instance(args.file)
    out = {}
    for name, fam in inst.families.items():
        out[name] = optimal_bounds(fam).to_dict()
    return inst.summary(), out, "ok"


def cmd_probe(args):
    inst = load_instance(args.file)
    res = norm_char_probe(inst.family(args.family), args.samples, args.seed, _k_op(inst, args))
    return inst.summary(), res.to_dict(), "ok"


def cmd_lemmas(args):
    inst = load_instance(args.file)
    ops = [t for fam in inst.families.values() for t in fam]
    if inst.k_operator is not None:
        ops.append(inst.k_operator)
    res = run_lemma_suite(ops, list(inst.families.values()), args.trials, args.seed)
    status = "ok" if all(v["failed"] == 0 for v in res.values()) else "hypothesis-failed"
    return inst.summary(), res, status


def cmd_random(args):
    params = {}
    if args.target is not None:
        params["target"] = args.target
    if args.epsilon is not None:
        params["epsilon"] = args.epsilon
    if args.k_kind is not None:
        params["k_kind"] = args.k_kind
    if args.families != 1:
        params["families"] = args.families
    inst = random_instance(args.kind, args.k, args.n, args.count, args.seed, params)
    save_instance(inst, args.out)
    return inst.summary(), {"path": str(args.out), "metadata": inst.metadata}, "ok"


def _need(args, name):
    v = getattr(args, name)
    if v is None:
        raise UsageError(f"--{name.replace('_', '-')} is required for theorem {args.theorem}")
    return v


def _certify(inst, args):
    th = args.theorem
    derived = None
    if th == "bessel-perturb":
        cert = certify_bessel_perturbation(inst.family(args.family), inst.family(args.other), args.sign)
    elif th == "min-constant":
        t, r = inst.family(args.family), inst.family(args.other)
        k_op = _k_op(inst, args)
        m = derive_min_constant(t, r, k_op) if args.derive else _need(args, "m")
        derived = m if args.derive else None
        cert = certify_min_constant(t, r, m, k_op)
    elif th == "scalar-sum":
        fams = _names(inst, args.families, "T")
        alphas = inst.scalars.get("alpha", [1.0] * len(fams))
        if len(alphas) != len(fams):
            raise UsageError(f"scalars.alpha has {len(alphas)} entries for {len(fams)} families")
        p = args.p - 1
        k_op = _k_op(inst, args)
        if args.derive:
            derived = derive_sum_lambda(fams, alphas, p, k_op)
            lam = math.sqrt(derived)
        else:
            lam = _need(args, "lambda_")
        cert = certify_scalar_sum(fams, alphas, p, lam, k_op)
    elif th == "l-sum":
        ts = _names(inst, args.families, "T")
        rs = _names(inst, args.r_families, "R")
        lam = min_l_lambda(ts, rs) if args.derive else _need(args, "lambda_")
        derived = lam if args.derive else None
        cert = certify_l_operator_sum(ts, rs, args.p - 1, lam, k_op=_k_op(inst, args))
    elif th == "confined":
        t, r = inst.family(args.family), inst.family(args.other)
        cert = certify_confined_perturbation(
            t, r, _confined(inst, "alpha", len(t)), _confined(inst, "beta", len(t)),
            _need(args, "lambda_"), _need(args, "mu"), _k_op(inst, args, default_identity=True),
            samples=args.samples, seed=args.seed)
    else:
        t, r = inst.family(args.family), inst.family(args.other)
        cert = certify_alpha_beta(t, r, _need(args, "alpha"), _need(args, "beta"),
                                  _k_op(inst, args, default_identity=True))
    out = cert.to_dict()
    if args.derive:
        out["derived_constant"] = derived
    return out, cert.hypothesis_ok


def cmd_certify(args):
    inst = load_instance(args.file)
    if args.derive and args.theorem not in ("min-constant", "scalar-sum", "l-sum"):
        raise UsageError(f"--derive is not available for theorem {args.theorem}")
    try:
        out, ok = _certify(inst, args)
    except HypothesisGateError as exc:
        return inst.summary(), {"theorem": args.theorem, "hypothesis_ok": False,
                                "gate": str(exc), "gate_value": exc.value}, "hypothesis-failed"
    return inst.summary(), out, "ok" if ok else "hypothesis-failed"


# -- parser --------------------------------------------------------------------

def build_parser():
    ap = _Parser(prog="opframes", description="Operator frames on Hilbert C*-modules over M_k(C).")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("bounds", help="optimal (K-)frame bounds of one family")
    p.add_argument("file")
    p.add_argument("--family", default="T")
    p.add_argument("--k-op", action="store_true", help="use the instance's K operator")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("check", help="classify every family")
    p.add_argument("file")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("probe", help="sampled norm-ratio extrema")
    p.add_argument("file")
    p.add_argument("--family", default="T")
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--k-op", action="store_true")
    p.set_defaults(func=cmd_probe)

    p = sub.add_parser("certify", help="run a perturbation certifier")
    p.add_argument("file")
    p.add_argument("--theorem", required=True, choices=THEOREMS)
    p.add_argument("--family", default="T")
    p.add_argument("--other", default="R")
    p.add_argument("--families", help="comma-separated T families (sums); default T, T1, T2, ...")
    p.add_argument("--r-families", help="comma-separated R families (l-sum); default R, R1, R2, ...")
    p.add_argument("--k-op", action="store_true")
    p.add_argument("--m", type=float)
    p.add_argument("--lambda", dest="lambda_", type=float)
    p.add_argument("--mu", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--p", type=int, default=1, help="1-based index of the distinguished family")
    p.add_argument("--sign", choices=("+", "-"), default="+")
    p.add_argument("--derive", action="store_true", help="derive the constant from the converse, then certify")
    p.add_argument("--samples", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("random", help="write a seeded random instance")
    p.add_argument("--kind", required=True, choices=KINDS)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--target", type=float)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--k-kind", choices=("co-isometry", "general"))
    p.add_argument("--families", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_random)

    p = sub.add_parser("lemmas", help="randomized operator-inequality suite")
    p.add_argument("file")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_lemmas)
    return ap


def run(argv=None):
    """Parse, execute and print; returns (report, exit_code)."""
    args = build_parser().parse_args(argv)
    t0 = time.perf_counter()
    summary = None
    try:
        summary, result, status = args.func(args)
    except (OpFrameError, UsageError, KeyError, ValueError, IndexError, OSError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else str(exc)
        print(f"opframes {args.command}: {type(exc).__name__}: {msg}", file=sys.stderr)
        result, status = {"error": type(exc).__name__, "message": str(msg)}, "error"
    report = {
        "command": args.command,
        "instance_summary": summary,
        "result": _jsonable(result),
        "status": status,
        "timing_ms": round((time.perf_counter() - t0) * 1000.0, 3),
    }
    print(json.dumps(report, indent=1))
    return report, EXIT[status]


def main(argv=None):
    _, code = run(argv)
    return code


if __name__ == "__main__":
    sys.exit(main())
