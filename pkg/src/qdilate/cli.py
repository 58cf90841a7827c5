"""Command-line interface.

Every command prints (or writes to ``--output``) a report of the form
``{command, pass, metrics, tolerances, seed}``.  Exit codes: 0 when every
check passes, 1 when a mathematical check fails, 2 for input or usage errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys

import numpy as np

from . import brehmer as br
from .dilate import (NonPositiveKernel, dilate, dilation_passes, load_dilation, residual_summary,
                     save_dilation, verify_dilation, write_residual_csv)
from .kernel import (KernelContext, Window, WindowTooLarge, composition_residual, gram_matrix,
                     kernel_star_symmetry_residual)
from .optuple import (TUPLE_KINDS, brehmer_check, classify, load_tuple, matrix_to_json, min_eig, save_tuple,
                      generate_random, validate)
from .qword import GroupElement, ParseError
from .vnfc import DepthExceeded, MonomialCombination, vn_compare

COMMANDS = ("validate", "classify", "brehmer", "gram", "transforms", "dvanish", "dilate", "verify", "vn",
            "generate")


class UsageError(Exception):
    pass


def parse_window(text: str | None, k: int, default: int = 1) -> Window:
    if text is None:
        return Window.uniform(k, default)
    try:
        vals = [int(x) for x in text.split(",")]
    except ValueError as exc:
        raise UsageError(f"bad --window {text!r}") from exc
    if len(vals) == 1:
        vals = vals * k
    if len(vals) != k or any(v < 0 for v in vals):
        raise UsageError(f"--window needs one or {k} nonnegative integers")
    return Window(tuple(vals))


def _positive(name):
    def conv(text):
        try:
            v = float(text)
        except ValueError as exc:
            raise argparse.ArgumentTypeError(f"{name} must be a number") from exc
        if v <= 0:
            raise argparse.ArgumentTypeError(f"{name} must be positive")
        return v

    return conv


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qdilate", description="Dilations of q-commuting contraction tuples.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--input", help="tuple file (JSON)")
    p.add_argument("--output", help="report or artifact path (default: stdout)")
    p.add_argument("--window", help="L or L1,L2,...")
    p.add_argument("--phase-window", type=int, default=1, help="bound on central exponents (dvanish)")
    p.add_argument("--tol", type=_positive("--tol"), default=1e-10)
    p.add_argument("--eig-tol", type=_positive("--eig-tol"), default=1e-8)
    p.add_argument("--rank-tol", type=_positive("--rank-tol"), default=1e-10)
    p.add_argument("--dil-tol", type=_positive("--dil-tol"), default=1e-8, help="dilation residual tolerance")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--dilation", help="dilation JSON to verify instead of building one")
    p.add_argument("--poly", help='JSON list of [coefficient, "word"] or [re, im, "word"]')
    p.add_argument("--class", dest="kind", choices=TUPLE_KINDS, help="tuple class (generate)")
    p.add_argument("--d", type=int, help="dimension (generate)")
    p.add_argument("--k", type=int, help="number of operators (generate)")
    p.add_argument("--r", type=int, help="clock-shift order dividing d (generate)")
    return p


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k) if not isinstance(k, str) else k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def _flatten(d: dict, prefix: str = "") -> list[tuple[str, object]]:
    rows = []
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            rows.extend(_flatten(v, key + "."))
        else:
            rows.append((key, v))
    return rows


def emit(report: dict, args) -> None:
    report = _jsonable(report)
    if args.format == "csv":
        buf = io.StringIO()
        wr = csv.writer(buf)
        wr.writerow(["key", "value"])
        for key, v in _flatten(report):
            wr.writerow([key, json.dumps(v) if isinstance(v, list) else v])
        text = buf.getvalue()
    else:
        text = json.dumps(report, indent=2) + "\n"
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _load(args):
    if not args.input:
        raise UsageError("--input is required")
    return load_tuple(args.input)


def _report(args, passed, metrics, **tols):
    return {"command": args.command, "pass": bool(passed), "metrics": metrics, "tolerances": tols,
            "seed": args.seed}


def cmd_validate(args):
    rep = validate(_load(args))
    return _report(args, rep.passed, rep.as_dict(), tol=rep.tol)


def cmd_classify(args):
    t = _load(args)
    rep = validate(t)
    return _report(args, rep.passed, {"validation": rep.as_dict(), "class": classify(t).as_dict()}, tol=t.tol)


def cmd_brehmer(args):
    rep = brehmer_check(_load(args), args.eig_tol)
    return _report(args, rep.passed, rep.as_dict(), eig_tol=args.eig_tol)


def cmd_gram(args):
    t = _load(args)
    ctx = KernelContext(t)
    w = parse_window(args.window, t.k)
    g = gram_matrix(ctx, w)
    val = min_eig(g)
    metrics = {"window": list(w.L), "size": g.shape[0], "min_eig": val}
    if args.output and args.format == "json":
        # the matrix itself goes to the output file; the report to stdout
        with open(args.output, "w") as fh:
            json.dump({"window": list(w.L), "matrix": matrix_to_json(g)}, fh)
        args.output = None
    return _report(args, val >= -args.eig_tol, metrics, eig_tol=args.eig_tol)


def cmd_transforms(args):
    t = _load(args)
    ctx = KernelContext(t)
    word_L = max(parse_window(args.window, t.k).L)
    rng = np.random.default_rng(args.seed)
    worst = 0.0
    for _ in range(args.trials):
        h = br.FiniteSupportFunction.random(t.dim, t.k, word_L, args.phase_window, rng)
        worst = max(worst, br.inverse_transform(ctx, br.forward_transform(ctx, h)).distance(h),
                    br.forward_transform(ctx, br.inverse_transform(ctx, h)).distance(h))
    pos = br.positivity_via_transforms(ctx, min(word_L, 1), min(args.phase_window, 1), args.trials, args.seed)
    metrics = {"mutual_inverse_residual": worst, "form_discrepancy": pos.max_discrepancy,
               "min_form_value": pos.min_value, "trials": args.trials}
    ok = worst <= args.tol and pos.max_discrepancy <= 1e-8 and pos.min_value >= -args.eig_tol
    return _report(args, ok, metrics, tol=args.tol, eig_tol=args.eig_tol)


def cmd_dvanish(args):
    t = _load(args)
    word_L = max(parse_window(args.window, t.k, default=2).L)
    scan = br.d_vanishing_scan(KernelContext(t), word_L, args.phase_window)
    ok = scan["max_offdiag"] <= args.tol and scan["max_diag_collapse"] <= args.tol
    return _report(args, ok, scan, tol=args.tol)


def _dilation_report(args, t, res, report):
    ok = dilation_passes(report, args.dil_tol)
    return _report(args, ok, residual_summary(report), dil_tol=args.dil_tol, rank_tol=args.rank_tol,
                   eig_tol=args.eig_tol)


def cmd_dilate(args):
    t = _load(args)
    w = parse_window(args.window, t.k, default=2)
    res = dilate(t, w, args.rank_tol, args.eig_tol, seed=args.seed)
    if args.output:
        if args.format == "csv":
            write_residual_csv(res.residuals, args.output)
        else:
            save_dilation(res, args.output)
        args.output = None
    rep = _dilation_report(args, t, res, res.residuals)
    rep["metrics"]["depth"] = list(res.depth)
    return rep


def cmd_verify(args):
    t = _load(args)
    ctx = KernelContext(t)
    if args.dilation:
        res = load_dilation(args.dilation)
        report = verify_dilation(res, ctx, seed=args.seed)
        return _dilation_report(args, t, res, report)
    rng = np.random.default_rng(args.seed)
    val = validate(t)
    bre = brehmer_check(t, args.eig_tol)
    star, comp = 0.0, 0.0
    for _ in range(args.trials):
        g = GroupElement(tuple(int(x) for x in rng.integers(-3, 4, t.k * (t.k - 1) // 2)),
                         tuple(int(x) for x in rng.integers(-3, 4, t.k)))
        star = max(star, kernel_star_symmetry_residual(ctx, g))
        comp = max(comp, composition_residual(ctx, rng.integers(0, 3, t.k), rng.integers(0, 3, t.k)))
    metrics = {"validation": val.as_dict(), "brehmer_min_margin": bre.min_margin,
               "star_symmetry": star, "composition": comp}
    ok = val.passed and bre.passed and star <= args.tol and comp <= args.tol
    if bre.passed:
        w = parse_window(args.window, t.k, default=1)
        res = dilate(t, w, args.rank_tol, args.eig_tol, seed=args.seed)
        metrics["dilation"] = residual_summary(res.residuals)
        ok = ok and dilation_passes(res.residuals, args.dil_tol)
    return _report(args, ok, metrics, tol=args.tol, eig_tol=args.eig_tol, dil_tol=args.dil_tol)


def parse_poly(text: str, k: int) -> MonomialCombination:
    try:
        items = json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"--poly is not valid JSON: {exc}") from exc
    pairs = []
    for it in items:
        if len(it) == 2:
            c, w = it
            c = complex(*c) if isinstance(c, list) else complex(c)
        elif len(it) == 3:
            c, w = complex(it[0], it[1]), it[2]
        else:
            raise UsageError("--poly entries must be [coef, word] or [re, im, word]")
        pairs.append((c, w))
    return MonomialCombination.from_words(pairs, k)


def cmd_vn(args):
    t = _load(args)
    if not args.poly:
        raise UsageError("--poly is required")
    f = parse_poly(args.poly, t.k)
    w = parse_window(args.window, t.k, default=2)
    ctx = KernelContext(t)
    res = dilate(t, w, args.rank_tol, args.eig_tol, seed=args.seed)
    lhs, rhs = vn_compare(ctx, f, res)
    return _report(args, lhs <= rhs + args.dil_tol, {"lhs": lhs, "rhs": rhs, "depth": list(res.depth)},
                   dil_tol=args.dil_tol)


def cmd_generate(args):
    if args.kind is None or args.d is None or args.k is None:
        raise UsageError("generate needs --class, --d and --k")
    t = generate_random(args.kind, args.d, args.k, args.seed, r=args.r, tol=args.tol)
    if not args.output:
        raise UsageError("generate needs --output")
    save_tuple(t, args.output)
    args.output = None
    rep = validate(t)
    return _report(args, rep.passed, {"class": args.kind, "dim": t.dim, "k": t.k, "validation": rep.as_dict()},
                   tol=args.tol)


HANDLERS = {name: globals()[f"cmd_{name}"] for name in COMMANDS}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        report = HANDLERS[args.command](args)
    except NonPositiveKernel as exc:
        report = _report(args, False, {"error": str(exc)}, eig_tol=args.eig_tol)
        print(f"qdilate: {exc}", file=sys.stderr)
        emit(report, args)
        return 1
    except (UsageError, ParseError, WindowTooLarge, DepthExceeded, ValueError, OSError, KeyError) as exc:
        print(f"qdilate: {exc}", file=sys.stderr)
        return 2
    emit(report, args)
    return 0 if report["pass"] else 1


if __name__ == "__main__":
    sys.exit(main())
