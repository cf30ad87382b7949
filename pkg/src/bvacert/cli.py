"""Command-line interface.

Exit codes: 0 pass, 1 check failed, 2 indeterminate, 3 input error,
4 internal inconsistency.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from . import catalog, certify
from .exact import RationalParseError, parse_rational
from .lab import fd
from .lab.grid import load_field
from .lab.strip import boundary_strip_estimate
from .report import Budgets, InconsistencyError, bundle, classify, dumps, expected_mismatches
from .spectrum import (PolarizationError, PreconditionError, RankOneTriple, polarize, rank_one_from_v,
                       rank_one_from_xi, spectrum_span)
from .symbol import Operator, OperatorError, load_operator
from .verify import verify_document

EXIT_OK, EXIT_FAIL, EXIT_INDETERMINATE, EXIT_INPUT, EXIT_INCONSISTENT = 0, 1, 2, 3, 4


class InputError(Exception):
    pass


def parse_vector(text: str) -> list:
    try:
        return [parse_rational(x) for x in text.replace(" ", "").split(",") if x]
    except RationalParseError as exc:
        raise InputError(str(exc)) from exc


def parse_pair(text: str) -> tuple[list, list]:
    parts = text.split(";")
    if len(parts) != 2:
        raise InputError(f"expected 'xi;v*', got {text!r}")
    return parse_vector(parts[0]), parse_vector(parts[1])


def parse_triple(text: str) -> RankOneTriple:
    """``'xi;v*;w*'`` or a JSON file with keys xi, v_star, w_star."""
    p = Path(text)
    if p.suffix == ".json" and p.exists():
        try:
            return RankOneTriple.from_json(json.loads(p.read_text()))
        except (KeyError, ValueError, RationalParseError) as exc:
            raise InputError(f"{text}: {exc}") from exc
    parts = text.split(";")
    if len(parts) != 3:
        raise InputError(f"expected 'xi;v*;w*', got {text!r}")
    xi, v, w = (parse_vector(s) for s in parts)
    return RankOneTriple(tuple(w), tuple(xi), tuple(v))


def get_operator(ref: str) -> Operator:
    """A JSON file or the name of a catalog operator."""
    if ref in catalog.CATALOG and not Path(ref).exists():
        return catalog.get(ref)
    if not Path(ref).exists():
        raise InputError(f"{ref}: no such file or catalog operator")
    return load_operator(ref)


def _out(args, doc: dict, text: str):
    if args.json:
        sys.stdout.write(dumps(doc))
    else:
        print(text)
    if getattr(args, "out", None):
        Path(args.out).write_text(dumps(doc))


def _plots_dir(args) -> Path | None:
    if not args.emit_plots:
        return None
    d = Path(args.emit_plots)
    d.mkdir(parents=True, exist_ok=True)
    return d


def _budgets(args) -> Budgets:
    return Budgets(tol=args.tol, budget=args.budget, seed=args.seed)


# -- subcommands ---------------------------------------------------------------------


def cmd_classify(args) -> int:
    op = get_operator(args.operator)
    try:
        rep = classify(op, _budgets(args), jobs=args.jobs)
    except InconsistencyError as exc:
        if exc.report is not None:
            _out(args, exc.report.to_json(), f"INCONSISTENT: {exc}")
        else:
            print(f"INCONSISTENT: {exc}", file=sys.stderr)
        return EXIT_INCONSISTENT
    v = rep.verdicts
    lines = [f"operator      {op.name or '(unnamed)'}  n={op.n} N={op.dim_v} M={op.dim_w}"]
    if rep.body()["gram_assumed_identity"]:
        lines.append("gram          not given; identity assumed")
    lines += [
        f"R-elliptic    {v['r_elliptic']}",
        f"C-elliptic    {v['c_elliptic']}",
        f"rank          {v['constant_rank']} (r={v['rank']})",
        f"mixing        {v['mixing']}",
        f"rank-one      {v['rank_one']}",
        f"kernel dims   {v['kernel_dims']}  l={v['stabilization_degree']}",
        f"g_A injective {v['g_injective']}",
    ]
    _out(args, rep.to_json(), "\n".join(lines))
    return EXIT_INDETERMINATE if rep.indeterminate else EXIT_OK


def cmd_spectrum(args) -> int:
    op = get_operator(args.operator)
    if args.xi:
        query = {"xi": args.xi}
        triples = rank_one_from_xi(op, parse_vector(args.xi))
    elif args.v:
        query = {"v_star": args.v}
        triples = rank_one_from_v(op, parse_vector(args.v))
    else:
        span = spectrum_span(op, args.seed)
        query = {"span": True}
        triples = span.triples
    cert = {"type": "rank_one_triples", "query": query, "triples": [t.to_json() for t in triples]}
    text = "\n".join(f"xi={[str(x) for x in t.xi]} v*={[str(x) for x in t.v_star]} "
                     f"w*={[str(x) for x in t.w_star]}" for t in triples) or "no rank-one vectors"
    _out(args, bundle(op, cert), text)
    return EXIT_OK


def cmd_polarize(args) -> int:
    op = get_operator(args.operator)
    try:
        wit = polarize(op, parse_pair(args.pair1), parse_pair(args.pair2))
    except PolarizationError as exc:
        print(f"no polarization: {exc}", file=sys.stderr)
        for row in exc.rows:
            print(f"  {row[0]} * gamma + {row[1]} = 0", file=sys.stderr)
        return EXIT_FAIL
    text = (f"gamma = {wit.gamma}\nw0 = {[str(x) for x in wit.w0]}\nw1 = {[str(x) for x in wit.w1]}\n"
            f"w2 = {[str(x) for x in wit.w2]}" + ("\n(degenerate input)" if wit.degenerate else ""))
    _out(args, bundle(op, wit.to_json()), text)
    return EXIT_OK


def cmd_slice_verify(args) -> int:
    op = get_operator(args.operator)
    field = load_field(args.field)
    rep = fd.verify_slicing(field, op, parse_triple(args.triple), mode=args.mode, c_slack=args.c_slack)
    plots = _plots_dir(args)
    if plots is not None:
        xi_u = [float(x) for x in rep.xi]
        nrm = rep.xi_norm
        st = fd.slice_tv(field, [x / nrm for x in xi_u], [float(x) * nrm for x in rep.v_star])
        with open(plots / "slice_line_tv.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow([f"y{i}" for i in range(field.domain.n)] + ["tv"])
            for lab, tv in zip(st.line_labels, st.line_tv):
                w.writerow(list(map(int, lab)) + [repr(float(tv))])
    text = (f"lhs={rep.lhs:.6g} rhs={rep.rhs:.6g} slack={rep.slack:.3g} (C_slack={rep.c_slack}) "
            f"{'PASS' if rep.passed else 'FAIL'}")
    _out(args, rep.to_json(), text)
    return EXIT_OK if rep.passed else EXIT_FAIL


def cmd_strip_verify(args) -> int:
    op = get_operator(args.operator)
    field = load_field(args.field)
    rep = boundary_strip_estimate(field, op, parse_triple(args.triple), args.alpha0, args.alpha,
                                  c_slack=args.c_slack)
    text = (f"lhs={rep.lhs:.6g} rhs={rep.rhs:.6g} (surface {rep.surface_term:.6g}, variation "
            f"{rep.variation_term:.6g}) rho1={rep.rho1:.6g} {'PASS' if rep.passed else 'FAIL'}")
    _out(args, rep.to_json(), text)
    return EXIT_OK if rep.passed else EXIT_FAIL


def cmd_translate_probe(args) -> int:
    op = get_operator(args.operator)
    field = load_field(args.field)
    steps = [float(s) for s in args.steps.split(",")] if args.steps else None
    rep = fd.translation_probe(field, op, parse_triple(args.triple), steps, region=args.region)
    plots = _plots_dir(args)
    if plots is not None:
        with open(plots / "defect_vs_step.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["step", "defect", "ratio"])
            for s, d in zip(rep.steps, rep.defects):
                w.writerow([repr(s), repr(d), repr(d / s)])
    text = (f"slope={rep.slope:.6g} bound={rep.bound_constant:.6g} max ratio={rep.max_ratio:.6g} "
            f"{'PASS' if rep.passed else 'FAIL'}")
    _out(args, rep.to_json(), text)
    return EXIT_OK if rep.passed else EXIT_FAIL


def cmd_verify_cert(args) -> int:
    try:
        doc = json.loads(Path(args.certificate).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"{args.certificate}: {exc}") from exc
    res = verify_document(doc)
    for w in res.warnings:
        print(f"warning: {w}", file=sys.stderr)
    if args.json:
        sys.stdout.write(dumps({"ok": res.ok, "errors": res.errors, "warnings": res.warnings,
                                "checked": res.checked}))
    elif res.ok:
        print(f"OK ({', '.join(res.checked)})")
    else:
        for e in res.errors:
            print(f"FAILED: {e}")
    return EXIT_OK if res.ok else EXIT_FAIL


def cmd_catalog(args) -> int:
    if args.action == "list":
        rows = []
        for name, e in catalog.CATALOG.items():
            op = e.operator
            rows.append({"name": name, "n": op.n, "dimV": op.dim_v, "dimW": op.dim_w})
        _out(args, {"operators": rows}, "\n".join(f"{r['name']:<22} n={r['n']} N={r['dimV']} M={r['dimW']}"
                                                  for r in rows))
        return EXIT_OK
    code = EXIT_OK
    results = {}
    lines = []
    for name, e in catalog.CATALOG.items():
        try:
            rep = classify(e.operator, _budgets(args), jobs=args.jobs)
        except InconsistencyError as exc:
            lines.append(f"{name:<22} INCONSISTENT {exc}")
            results[name] = {"status": "inconsistent"}
            code = EXIT_INCONSISTENT
            continue
        miss = expected_mismatches(rep, e.expected) if e.expected else []
        status = "matched" if not miss else "mismatch"
        results[name] = {"status": status, "mismatches": miss, "verdicts": rep.verdicts,
                         "digest": rep.to_json()["digest"]}
        lines.append(f"{name:<22} {status}" + ("" if not miss else "  " + "; ".join(miss)))
        if miss and code == EXIT_OK:
            code = EXIT_FAIL
        if args.out_dir:
            d = Path(args.out_dir)
            d.mkdir(parents=True, exist_ok=True)
            (d / f"{name}.report.json").write_text(dumps(rep.to_json()))
    _out(args, {"catalog": results}, "\n".join(lines))
    return code


# -- parser ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol", type=float, default=certify.DEFAULT_TOL)
    common.add_argument("--budget", type=int, default=certify.DEFAULT_BUDGET)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--json", action="store_true", help="machine-readable output on stdout")
    common.add_argument("--emit-plots", metavar="DIR", help="write CSV tables for plotting")
    common.add_argument("--jobs", type=int, default=4, help="worker threads for independent checks")
    common.add_argument("--out", help="also write the JSON result to this file")

    p = argparse.ArgumentParser(prog="bvacert",
                                description="Certified analysis of first-order constant-coefficient operators.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("classify", parents=[common], help="run every certified check")
    s.add_argument("operator", help="operator JSON file or catalog name")
    s.set_defaults(fn=cmd_classify)

    s = sub.add_parser("spectrum", parents=[common], help="rank-one vectors for a direction or covector")
    s.add_argument("operator")
    g = s.add_mutually_exclusive_group()
    g.add_argument("--xi", help="comma-separated rationals")
    g.add_argument("--v", help="comma-separated rationals")
    s.set_defaults(fn=cmd_spectrum)

    s = sub.add_parser("polarize", parents=[common], help="polarize two spectrum pairs")
    s.add_argument("operator")
    s.add_argument("--pair1", required=True, help="'xi;v*'")
    s.add_argument("--pair2", required=True, help="'eta;f'")
    s.set_defaults(fn=cmd_polarize)

    for name, fn, extra in (("slice-verify", cmd_slice_verify, "slicing"),
                            ("translate-probe", cmd_translate_probe, "translation"),
                            ("strip-verify", cmd_strip_verify, "strip")):
        s = sub.add_parser(name, parents=[common], help=f"{extra} estimate on a field file")
        s.add_argument("operator")
        s.add_argument("field", help="field file (.bin or .csv with a .json sidecar)")
        s.add_argument("--triple", required=True, help="'xi;v*;w*' or a JSON file")
        s.set_defaults(fn=fn)
        if name == "slice-verify":
            s.add_argument("--mode", choices=("interior", "extension"), default="interior")
        if name != "translate-probe":
            s.add_argument("--c-slack", type=float, default=10.0)
        if name == "translate-probe":
            s.add_argument("--steps", help="comma-separated step lengths")
            s.add_argument("--region", choices=("domain", "whole"), default="domain")
        if name == "strip-verify":
            s.add_argument("--alpha0", type=float, required=True)
            s.add_argument("--alpha", type=float, required=True)

    s = sub.add_parser("verify-cert", parents=[common], help="re-validate a report or certificate bundle")
    s.add_argument("certificate")
    s.set_defaults(fn=cmd_verify_cert)

    s = sub.add_parser("catalog", parents=[common], help="list or classify the built-in operators")
    s.add_argument("action", choices=("list", "run"))
    s.add_argument("--out-dir", help="write one report per operator")
    s.set_defaults(fn=cmd_catalog)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse uses 2, which is reserved for indeterminate
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    try:
        return args.fn(args)
    except (InputError, OperatorError, PreconditionError, fd.LabError, FileNotFoundError) as exc:
        code = getattr(exc, "code", None)
        print(f"input error{f' [{code}]' if code else ''}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (ValueError, KeyError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except InconsistencyError as exc:
        print(f"internal inconsistency: {exc}", file=sys.stderr)
        return EXIT_INCONSISTENT


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
