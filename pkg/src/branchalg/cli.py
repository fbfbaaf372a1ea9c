"""Command-line interface.

The JSON report goes to standard output (or ``--output``); a short
human-readable summary goes to standard error unless ``--quiet``. Exit codes:
0 success, 1 failed comparison or check, 2 usage error, 3 resource limit.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from typing import Any, Sequence

from . import __version__
from . import algebra as alg
from . import formulas, permgrp, present
from .errors import BranchAlgError, InvalidArgument, NotFound, PreconditionViolation, ResourceLimitError
from .exact import FieldSpec
from .selfsim import load_recursion

EXIT_OK, EXIT_MISMATCH, EXIT_USAGE, EXIT_RESOURCE = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _jsonable(x: Any) -> Any:
    if isinstance(x, Fraction):
        return str(x) if x.denominator != 1 else x.numerator
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, int) and not isinstance(x, bool) and x.bit_length() > 53:
        return str(x)  # exact, and safe for JSON readers with float numbers
    return x


# -- helpers --------------------------------------------------------------------------------


def _field(text: str) -> FieldSpec:
    return FieldSpec.parse(text)


def _config(args: argparse.Namespace, **extra) -> dict:
    cfg = {"seed": args.seed, "jobs": args.jobs}
    for key in ("group", "field", "level", "levels", "level_cap", "depth", "level_max"):
        if getattr(args, key, None) is not None:
            cfg[key] = getattr(args, key)
    cfg.update(extra)
    return cfg


def _compare(report: dict, expected, actual) -> None:
    report.setdefault("comparisons", []).append(
        {"expected": _jsonable(expected), "actual": _jsonable(actual), "match": expected == actual}
    )


def _parse_expect_list(text: str) -> list[str]:
    return [t.strip() for t in text.split(",") if t.strip()]


# -- group commands ----------------------------------------------------------------------------


def cmd_group(args: argparse.Namespace) -> dict:
    rec = load_recursion(args.group)
    report: dict[str, Any] = {"command": f"group {args.action}", "config": _config(args)}
    if args.action == "order":
        n = _need(args, "level")
        order = permgrp.group_order_at_level(rec, n, method=args.method, degree_cap=args.degree_cap)
        report["result"] = {"quantity": "group_order", "level": n, "value": order}
        if args.expect_oracle:
            _compare(report, formulas.expected_group_order(args.group, n), order)
        if args.expect is not None:
            _compare(report, int(args.expect), order)
    elif args.action == "transitive":
        n = _need(args, "level")
        report["result"] = {"quantity": "level_transitive", "level": n, "value": permgrp.is_level_transitive(rec, n)}
    elif args.action == "element-order":
        n = _need(args, "level")
        if not args.word:
            raise UsageError("--word is required")
        w = rec.parse_word(args.word)
        report["result"] = {
            "quantity": "element_order",
            "word": rec.format_word(w),
            "level": n,
            "value": permgrp.element_order_at_level(rec, w, n),
        }
        if args.expect is not None:
            _compare(report, int(args.expect), report["result"]["value"])
    elif args.action == "hausdorff":
        n_max = _need(args, "levels")
        p = args.p if args.p is not None else rec.q
        seq = permgrp.group_hausdorff_sequence(rec, p, n_max, method=args.method, degree_cap=args.degree_cap)
        report["result"] = {"quantity": "group_hausdorff_sequence", "p": p, "values": seq}
        report["series"] = [(n, v) for n, v in enumerate(seq, start=1)]
        if args.expect_oracle:
            for n, v in enumerate(seq, start=1):
                try:
                    _compare(report, formulas.expected_group_hausdorff_term(args.group, n), v)
                except InvalidArgument:
                    continue
            report["limit"] = formulas.expected_hausdorff(args.group)
    return report


def _need(args: argparse.Namespace, name: str) -> int:
    v = getattr(args, name, None)
    if v is None:
        raise UsageError(f"--{name.replace('_', '-')} is required")
    return v


# -- algebra commands ------------------------------------------------------------------------------


def _element(rec, f, text: str) -> alg.AlgebraElement:
    return alg.AlgebraElement.parse(rec, f, text)


def _filtration_gens(rec, f, spec: str | None) -> tuple[str, list[alg.AlgebraElement]]:
    if spec in (None, "auto"):
        spec = "letters" if f.characteristic == 2 else "group"
    if spec == "letters":
        return spec, alg.letters(rec, f)
    if spec == "group":
        return spec, [alg.AlgebraElement.word(rec, f, rec.generator(n)) for n in rec.names]
    return spec, [_element(rec, f, t) for t in _parse_expect_list(spec)]


_IDEAL_PRESETS = {"branching-char2": 2, "branching-charne2": None}


def cmd_alg(args: argparse.Namespace) -> dict:
    rec = load_recursion(args.group)
    f = _field(args.field)
    report: dict[str, Any] = {"command": f"alg {args.action}", "config": _config(args, field=f.name)}
    if args.action == "dim":
        n = _need(args, "level")
        d = alg.algebra_dimension(rec, f, n, level_cap=args.level_cap)
        report["result"] = {"quantity": "algebra_dim", "level": n, "value": d}
        if args.expect_oracle:
            _oracle_group_is_grigorchuk(args)
            _compare(report, formulas.expected_algebra_dim(f.characteristic, n), d)
        if args.expect is not None:
            _compare(report, int(args.expect), d)
    elif args.action == "filtration":
        kind, gens = _filtration_gens(rec, f, args.gens)
        r = alg.filtration_dims(rec, f, gens, args.dmax, level_cap=args.level_cap)
        report["result"] = r.as_dict() | {"generators": kind}
        report["series"] = list(enumerate(r.values))
        if args.expect_oracle:
            _oracle_group_is_grigorchuk(args)
            oracle = formulas.expected_a_char2 if f.characteristic == 2 else formulas.expected_a_charne2
            start = 0 if f.characteristic == 2 else 1
            for d in range(start, len(r.values)):
                _compare(report, oracle(d), r.values[d])
    elif args.action == "ideal":
        if args.preset:
            if args.preset not in _IDEAL_PRESETS:
                raise NotFound(f"unknown ideal preset {args.preset!r}; known: {sorted(_IDEAL_PRESETS)}")
            want = _IDEAL_PRESETS[args.preset]
            if want is not None and f.characteristic != want or want is None and f.characteristic == 2:
                raise InvalidArgument(f"preset {args.preset} does not match field {f}")
            gens = alg.branching_ideal_gens(rec, f)
        elif args.gens:
            gens = [_element(rec, f, t) for t in _parse_expect_list(args.gens)]
        else:
            raise UsageError("give --preset or --gens")
        r = alg.ideal_quotient_dims(rec, f, gens, args.level, level_cap=args.level_cap)
        report["result"] = r.as_dict() | {"generators": [str(g) for g in gens]}
        if args.expect is not None:
            keys = _parse_expect_list(args.report)
            vals = _parse_expect_list(args.expect)
            if len(keys) != len(vals):
                raise UsageError("--report and --expect need the same number of entries")
            table = {"codim": r.codim, "k2": r.k_mod_k2, "m2k": r.k_mod_mk, "mk": r.k_mod_mk}
            for k, v in zip(keys, vals):
                if k not in table:
                    raise UsageError(f"unknown report key {k!r}; use codim, k2, m2k")
                _compare(report, int(v), table[k])
    elif args.action == "nil":
        x = _element(rec, f, _need_str(args, "element"))
        levels = args.levels if args.levels is not None else alg.level_cap(f) + 1
        r = alg.nil_degree(x, args.max_power, levels)
        report["result"] = r.as_dict() | {"element": str(x)}
        if args.expect is not None:
            _compare(report, int(args.expect), r.degree)
    elif args.action == "check-product":
        lhs = _element(rec, f, _need_str(args, "lhs"))
        rhs = _element(rec, f, _need_str(args, "rhs"))
        levels = _need(args, "levels")
        bad = alg.first_mismatch_level(lhs, rhs, levels)
        report["result"] = {"quantity": "product_identity", "levels": levels, "holds": bad is None, "first_mismatch": bad}
        report["comparisons"] = [{"expected": True, "actual": bad is None, "match": bad is None}]
    elif args.action == "distinct-powers":
        x = _element(rec, f, _need_str(args, "element"))
        cap = args.level_cap if args.level_cap is not None else 12
        r = alg.distinct_powers(x, args.k_max, cap)
        report["result"] = r.as_dict() | {"element": str(x)}
        report["comparisons"] = [{"expected": True, "actual": r.level is not None, "match": r.level is not None}]
    elif args.action == "hausdorff":
        n_max = _need(args, "levels")
        seq = alg.algebra_hausdorff_sequence(rec, f, n_max, level_cap=args.level_cap)
        report["result"] = {"quantity": "algebra_hausdorff_sequence", "values": seq}
        report["series"] = [(n, v) for n, v in enumerate(seq, start=1)]
        if args.expect_oracle:
            _oracle_group_is_grigorchuk(args)
            for n, v in enumerate(seq, start=1):
                try:
                    _compare(report, formulas.expected_algebra_hausdorff_term(f.characteristic, n), v)
                except InvalidArgument:
                    continue
            name = "grigorchuk_alg_char2" if f.characteristic == 2 else "grigorchuk_alg_charne2"
            report["limit"] = formulas.expected_hausdorff(name)
    return report


def _need_str(args: argparse.Namespace, name: str) -> str:
    v = getattr(args, name, None)
    if not v:
        raise UsageError(f"--{name.replace('_', '-')} is required")
    return v


def _oracle_group_is_grigorchuk(args: argparse.Namespace) -> None:
    if args.group != "grigorchuk":
        raise InvalidArgument("the algebra oracle only covers the grigorchuk group")


# -- presentations ------------------------------------------------------------------------------------


def cmd_present(args: argparse.Namespace) -> dict:
    report: dict[str, Any] = {"command": "present check", "config": _config(args)}
    if args.preset:
        rels = present.generate_relators(args.preset, args.depth)
        f = _field(args.field) if args.field else _preset_field(rels)
        report["config"]["field"] = None if f is None else f.name
        if args.jobs > 1 and len(rels.relators) > 1:
            merged = _parallel_check(rels, args.level_max, f, args.jobs).as_dict()
        else:
            merged = present.check_relators(rels, args.level_max, field_=f).as_dict()
    elif args.relator:
        if not args.field:
            raise UsageError("--relator needs --field")
        f = _field(args.field)
        from .selfsim import builtin_group

        rec = builtin_group("grigorchuk")
        symbols = list(alg._atom_table(rec))
        polys = [present.FreePoly.parse(t, symbols) for t in args.relator]
        merged = present.check_relators(polys, args.level_max, field_=f, rec=rec).as_dict()
    else:
        raise UsageError("give --preset or --relator")
    report["result"] = merged
    report["comparisons"] = [{"expected": True, "actual": merged["passed"], "match": merged["passed"]}]
    return report


def _preset_field(rels: present.RelatorSet) -> FieldSpec | None:
    if rels.mode == "group":
        return None
    return FieldSpec(2) if rels.fields == "2" else FieldSpec(3)


def _parallel_check(rels: present.RelatorSet, level_max: int, f, jobs: int) -> present.RelatorReport:
    from .selfsim import builtin_group

    rec = builtin_group(rels.recursion)
    pairs = list(zip(rels.relators, rels.labels))

    def one(pair):
        rel, label = pair
        r = present.check_relators([rel], level_max, field_=f, rec=rec, mode=rels.mode)
        return [(label, lv) for _, lv in r.violations]

    with ThreadPoolExecutor(max_workers=jobs) as pool:
        found = [v for part in pool.map(one, pairs) for v in part]
    return present.RelatorReport(
        rels.preset, rels.mode, None if f is None else f.name, rels.depth, level_max, len(pairs), found
    )


# -- parser ------------------------------------------------------------------------------------------


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--format", choices=("json", "csv"), default="json", help="report format (csv for series)")
    p.add_argument("--output", help="write the report here instead of standard output")
    p.add_argument("--quiet", action="store_true", help="no summary on standard error")
    p.add_argument("--jobs", type=int, default=1, help="parallel workers (default 1)")
    p.add_argument("--seed", type=int, default=0, help="recorded in the report")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="branchalg", description="Self-similar groups and their level algebras.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    top = parser.add_subparsers(dest="command", required=True)

    g = top.add_parser("group", help="permutation groups induced on tree levels")
    g.add_argument("action", choices=("order", "transitive", "element-order", "hausdorff"))
    g.add_argument("--group", required=True, help="zoo name or definition file")
    g.add_argument("--level", type=int)
    g.add_argument("--levels", type=int)
    g.add_argument("--word")
    g.add_argument("--p", type=int)
    g.add_argument("--method", choices=("bsgs", "pgroup", "auto"), default="bsgs")
    g.add_argument("--degree-cap", type=int, default=permgrp.DEFAULT_DEGREE_CAP)
    g.add_argument("--expect-oracle", action="store_true")
    g.add_argument("--expect")
    _common(g)

    a = top.add_parser("alg", help="level truncations of the group algebra")
    a.add_argument(
        "action", choices=("dim", "filtration", "ideal", "nil", "check-product", "distinct-powers", "hausdorff")
    )
    a.add_argument("--group", default="grigorchuk")
    a.add_argument("--field", default="gf2")
    a.add_argument("--level", type=int)
    a.add_argument("--levels", type=int)
    a.add_argument("--level-cap", type=int)
    a.add_argument("--gens", help="letters, group, or comma-separated elements")
    a.add_argument("--dmax", type=int, default=16)
    a.add_argument("--preset", help="branching-char2 or branching-charne2")
    a.add_argument("--report", default="codim,k2,m2k")
    a.add_argument("--element")
    a.add_argument("--max-power", type=int, default=64)
    a.add_argument("--k-max", type=int, default=16)
    a.add_argument("--lhs")
    a.add_argument("--rhs")
    a.add_argument("--expect-oracle", action="store_true")
    a.add_argument("--expect")
    _common(a)

    pr = top.add_parser("present", help="check recursive presentations at finite levels")
    pr.add_argument("action", choices=("check",))
    pr.add_argument("--preset", help="grigorchuk-group, grigorchuk-alg-char2 or grigorchuk-alg-charne2")
    pr.add_argument("--relator", action="append", help="a relator expression (repeatable)")
    pr.add_argument("--depth", type=int, default=3)
    pr.add_argument("--level-max", type=int, default=8)
    pr.add_argument("--field")
    _common(pr)
    return parser


def _summary(report: dict) -> str:
    lines = [f"{report['command']}"]
    res = report.get("result", {})
    for k in sorted(res):
        v = res[k]
        if isinstance(v, (list, dict)) and len(str(v)) > 100:
            v = f"{str(v)[:97]}..."
        lines.append(f"  {k:<22} {v}")
    for c in report.get("comparisons", []):
        mark = "ok" if c["match"] else "MISMATCH"
        lines.append(f"  expect {c['expected']!s:<15} got {c['actual']!s:<15} {mark}")
    lines.append(f"  status {report['status']}")
    return "\n".join(lines)


def _render(report: dict, fmt: str) -> str:
    if fmt == "csv":
        if "series" not in report:
            raise UsageError("csv output is only available for series commands")
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["index", "value"])
        for i, v in report["series"]:
            w.writerow([i, _jsonable(v)])
        return buf.getvalue()
    body = {k: v for k, v in report.items() if k != "series"}
    return json.dumps(_jsonable(body), sort_keys=True, indent=2) + "\n"


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if e.code is not None else EXIT_USAGE
    if args.jobs < 1:
        print("error: --jobs must be positive", file=sys.stderr)
        return EXIT_USAGE
    handler = {"group": cmd_group, "alg": cmd_alg, "present": cmd_present}[args.command]
    try:
        report = handler(args)
        ok = all(c["match"] for c in report.get("comparisons", []))
        report["status"] = "ok" if ok else "mismatch"
        code = EXIT_OK if ok else EXIT_MISMATCH
    except ResourceLimitError as e:
        partial = e.partial.as_dict() if hasattr(e.partial, "as_dict") else e.partial
        report = {
            "command": f"{args.command} {getattr(args, 'action', '')}".strip(),
            "config": _config(args),
            "status": "resource_limit",
            "error": str(e),
            "partial": partial,
        }
        code = EXIT_RESOURCE
    except (UsageError, InvalidArgument, NotFound, PreconditionViolation, FileNotFoundError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except BranchAlgError as e:  # pragma: no cover - unexpected library error
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    try:
        text = _render(report, args.format)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if not args.quiet:
        print(_summary(report), file=sys.stderr)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
