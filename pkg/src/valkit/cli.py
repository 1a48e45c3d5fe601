"""Batch front end.

Usage::

    valkit run [TASKFILE]                 every task in the file (default: shipped suite)
    valkit sep check TASKFILE             only sep-check tasks (tasks without "kind" default to it)
    valkit sep make|lift TASKFILE
    valkit comp verify TASKFILE
    valkit rv indep TASKFILE
    valkit iso extend TASKFILE
    valkit val refine TASKFILE
    valkit suite run [TASKFILE] [--name SUITE --size N]

Common flags: ``--degree-bound N`` (overrides every presentation and task
degree), ``--seed S`` (64-bit, overrides the file's seed), ``--format
json|text``.  ``VALKIT_PRECISION_CAP`` sets the default series precision.

A task file is JSON::

    {
      "universe": {"axes": ["t"], "variables": ["x1"], "precision": 10},
      "presentations": [{"name": "C", "base": "Q", "generators": ["t"], "degree_bound": 4}],
      "power_model": {"kind": "acf"},
      "seed": 0,
      "tasks": [{"kind": "sep-check", "vectors": ["1", "t**(1/2)"], "over": "C"}]
    }

Several universes can be declared under ``"contexts": {name: {universe,
presentations, power_model}}``; tasks pick one with ``"context"``.  A task
may carry ``"expect": {"verdict": ...}`` or ``{"exit": n}``; a met
expectation counts as verified.

Output is one JSON record per task (sorted keys), then a summary record.
Exit code is the maximum over tasks: 0 verified, 1 counterexample or
negative verdict, 2 hypothesis or precondition violation, 3 precision
exhausted, 64 usage or parse error.  Nothing is random except suite-run
tasks, which are driven by the seed (see :mod:`valkit.suites`).
"""

from __future__ import annotations

import argparse
import json
import sys
from importlib import resources
from pathlib import Path
from typing import Callable

from .errors import (
    HypothesisViolation,
    InternalInconsistency,
    NotIndependent,
    PrecisionExhausted,
    UnsupportedModel,
    UnsupportedRefinement,
    ValkitError,
)
from .hahn_series import HahnSeries, Universe
from .morphisms import FieldIso, RefinedUniverse, extend_iso, refine_valuation, verify_refinement
from .presentations import Presentation, _monomials
from .rv_sort import PowerModel, rv_independent
from .separated import (
    SEPARATED_GOOD,
    check_lift,
    check_separated,
    compositum_check,
    make_separated,
    make_separated_trivial,
    monomial_tuples,
    rv_of_combination,
)
from .suites import SUITES, run_suite

OK, NEGATIVE, HYPOTHESIS, PRECISION, USAGE = 0, 1, 2, 3, 64
STATUS = {OK: "verified", NEGATIVE: "negative", HYPOTHESIS: "hypothesis", PRECISION: "precision", USAGE: "usage"}
KINDS = ("sep-check", "sep-make", "sep-lift", "comp-verify", "rv-indep", "iso-extend", "val-refine", "suite-run")
MAX_SEED = 2**64


class TaskFileError(Exception):
    def __init__(self, message: str, path: str = "", line: int | None = None, column: int | None = None):
        super().__init__(message)
        self.path = path
        self.line = line
        self.column = column

    def to_json(self) -> dict:
        out = {"error": str(self), "path": self.path}
        if self.line is not None:
            out["line"] = self.line
            out["column"] = self.column
        return out


def _locate(text: str, value) -> tuple[int | None, int | None]:
    """Line/column of the first occurrence of a JSON literal in the source."""
    if not isinstance(value, str):
        return None, None
    pos = text.find(json.dumps(value))
    if pos < 0:
        return None, None
    line = text.count("\n", 0, pos) + 1
    return line, pos - (text.rfind("\n", 0, pos) + 1) + 1


# -- task file compilation --


class Context:
    """A universe with its named presentations and power model."""

    def __init__(self, data: dict, where: str, loader: "Loader"):
        self.loader = loader
        if not isinstance(data, dict) or "universe" not in data:
            raise loader.error("a universe declaration is required", where)
        try:
            self.U = Universe.from_json(data["universe"])
        except (TypeError, ValueError, KeyError) as exc:
            raise loader.error(f"bad universe: {exc}", f"{where}.universe") from None
        self.presentations: dict[str, Presentation] = {"Q": Presentation.prime(self.U)}
        for i, pd in enumerate(data.get("presentations", [])):
            self._add_presentation(pd, f"{where}.presentations[{i}]")
        self.model = None
        if data.get("power_model") is not None:
            try:
                self.model = PowerModel.from_json(data["power_model"])
            except (KeyError, TypeError, ValueError, UnsupportedModel) as exc:
                raise loader.error(f"bad power model: {exc}", f"{where}.power_model") from None

    def _add_presentation(self, pd, where: str) -> None:
        L = self.loader
        if not isinstance(pd, dict) or "name" not in pd:
            raise L.error("presentation needs a name", where)
        name = pd["name"]
        if name in self.presentations:
            raise L.error(f"presentation {name!r} declared twice", where, name)
        base_name = pd.get("base", "Q")
        if base_name not in self.presentations:
            raise L.error(f"unknown base presentation {base_name!r}", f"{where}.base", base_name)
        base = self.presentations[base_name]
        d = L.degree_override or pd.get("degree_bound", 4)
        if not isinstance(d, int) or d < 1:
            raise L.error("degree_bound must be a positive integer", f"{where}.degree_bound")
        gens = [self.series(g, f"{where}.generators[{i}]") for i, g in enumerate(pd.get("generators", []))]
        try:
            self.presentations[name] = Presentation(name, self.U, gens, None if base.is_prime() else base, d)
        except ValueError as exc:
            raise L.error(str(exc), where, name) from None

    def series(self, text, where: str) -> HahnSeries:
        if not isinstance(text, (str, int)):
            raise self.loader.error("series must be given as a string", where)
        try:
            return self.U.parse(str(text))
        except (ValueError, TypeError, ValkitError) as exc:
            raise self.loader.error(str(exc), where, text) from None

    def series_list(self, items, where: str) -> list[HahnSeries]:
        if not isinstance(items, list):
            raise self.loader.error("expected a list of series", where)
        return [self.series(s, f"{where}[{i}]") for i, s in enumerate(items)]

    def presentation(self, name, where: str) -> Presentation:
        if name not in self.presentations:
            raise self.loader.error(f"unknown presentation {name!r}", where, name)
        return self.presentations[name]


class Loader:
    def __init__(self, text: str, degree_override: int | None, seed: int | None, only_kind: str | None):
        self.text = text
        self.degree_override = degree_override
        self.only_kind = only_kind
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise TaskFileError(f"malformed JSON: {exc.msg}", "", exc.lineno, exc.colno) from None
        if not isinstance(data, dict):
            raise TaskFileError("task file must be a JSON object")
        self.data = data
        file_seed = data.get("seed")
        self.seed = seed if seed is not None else file_seed
        if self.seed is not None and (not isinstance(self.seed, int) or not 0 <= self.seed < MAX_SEED):
            raise self.error("seed must be an integer in [0, 2**64)", "seed")
        self.contexts: dict[str, Context] = {}
        if "universe" in data:
            self.contexts["default"] = Context(data, "$", self)
        for name, cd in data.get("contexts", {}).items():
            if name in self.contexts:
                raise self.error(f"context {name!r} declared twice", f"contexts.{name}", name)
            self.contexts[name] = Context(cd, f"contexts.{name}", self)

    def error(self, message: str, path: str, literal=None) -> TaskFileError:
        line, col = _locate(self.text, literal)
        return TaskFileError(message, path, line, col)

    def compile(self) -> list[tuple[int, str, Callable[[], dict], dict | None, str | None]]:
        tasks = self.data.get("tasks")
        if not isinstance(tasks, list):
            raise self.error("'tasks' must be a list", "tasks")
        out = []
        for i, t in enumerate(tasks):
            where = f"tasks[{i}]"
            if not isinstance(t, dict):
                raise self.error("task must be an object", where)
            kind = t.get("kind", self.only_kind)
            if kind not in KINDS:
                raise self.error(f"unknown task kind {kind!r}", f"{where}.kind", kind)
            if self.only_kind is not None and kind != self.only_kind:
                continue
            if kind == "suite-run":
                ctx = None
            else:
                cname = t.get("context", "default")
                if cname not in self.contexts:
                    raise self.error(f"unknown context {cname!r}", f"{where}.context", cname)
                ctx = self.contexts[cname]
            run = _COMPILERS[kind](self, ctx, t, where)
            expect = t.get("expect")
            if expect is not None and not (isinstance(expect, dict) and set(expect) <= {"verdict", "exit"}):
                raise self.error("expect must be an object with 'verdict' and/or 'exit'", f"{where}.expect")
            out.append((i, kind, run, expect, t.get("label")))
        return out

    def degree(self, t: dict, where: str, default: int) -> int:
        d = self.degree_override or t.get("degree", default)
        if not isinstance(d, int) or d < 1:
            raise self.error("degree must be a positive integer", f"{where}.degree")
        return d


def _apply_expectation(rec: dict, expect: dict | None) -> dict:
    if expect is None:
        return rec
    met = True
    if "verdict" in expect:
        met = met and rec.get("verdict") == expect["verdict"]
    if "exit" in expect:
        met = met and rec["outcome"] == expect["exit"]
    rec["expect"] = dict(expect)
    rec["expect_met"] = met
    rec["code"] = OK if met else NEGATIVE
    return rec


def _record(code: int, **fields) -> dict:
    return {"outcome": code, "code": code, **fields}


def _compile_sep_check(L: Loader, ctx: Context, t: dict, where: str):
    vecs = ctx.series_list(t.get("vectors"), f"{where}.vectors")
    C = ctx.presentation(t.get("over", "Q"), f"{where}.over")
    d = L.degree(t, where, C.degree_bound)

    def run():
        rep = check_separated(vecs, C, d)
        return _record(OK if rep.separated else NEGATIVE, verdict=rep.verdict, report=rep.to_json())

    return run


def _compile_sep_make(L: Loader, ctx: Context, t: dict, where: str):
    vecs = ctx.series_list(t.get("vectors"), f"{where}.vectors")
    C = ctx.presentation(t.get("over", "Q"), f"{where}.over")
    d = L.degree(t, where, C.degree_bound)
    target = None
    if t.get("target") is not None:
        m = ctx.series(t["target"], f"{where}.target")
        if not m.is_monomial():
            raise L.error("target must be a monomial", f"{where}.target", t["target"])
        target = m.valuation()
    trivial = bool(t.get("trivial", False))

    def run():
        if trivial:
            out = make_separated_trivial(vecs, C, d)
        else:
            out = make_separated(vecs, C, target, d)
        rep = check_separated(out.basis, C, d)
        det = out.determinant()
        invertible = det.is_determinable()
        code = OK if rep.verdict == SEPARATED_GOOD and invertible else NEGATIVE
        return _record(
            code,
            verdict=rep.verdict,
            construction=out.to_json(),
            determinant=str(det),
            report=rep.to_json(),
        )

    return run


def _compile_sep_lift(L: Loader, ctx: Context, t: dict, where: str):
    basis = ctx.series_list(t.get("basis"), f"{where}.basis")
    C = ctx.presentation(t.get("C", "Q"), f"{where}.C")
    M = ctx.presentation(t.get("M"), f"{where}.M")
    Lp = ctx.presentation(t["L"], f"{where}.L") if "L" in t else None
    d = L.degree(t, where, min(C.degree_bound, M.degree_bound))

    def run():
        rep = check_lift(basis, C, M, Lp, d)
        return _record(OK if rep.verdict == SEPARATED_GOOD else NEGATIVE, verdict=rep.verdict, report=rep.to_json())

    return run


def _compile_comp_verify(L: Loader, ctx: Context, t: dict, where: str):
    ell = ctx.series_list(t.get("ell"), f"{where}.ell")
    C = ctx.presentation(t.get("C", "Q"), f"{where}.C")
    M = ctx.presentation(t.get("M"), f"{where}.M")
    Lp = ctx.presentation(t["L"], f"{where}.L") if "L" in t else None
    d = L.degree(t, where, 4)

    def run():
        lift = check_lift(ell, C, M, Lp, d)
        if lift.verdict != SEPARATED_GOOD:
            return _record(NEGATIVE, verdict=lift.verdict, report=lift.to_json())
        mons = list(_monomials(M.all_generators, d, ctx.U))
        tuples = list(monomial_tuples(len(ell), mons))
        rep = compositum_check(ell, tuples, C)
        rv_bad = []
        for m in tuples:
            if all(mi.is_exact_zero() for mi in m):
                continue
            x = ctx.U.zero()
            for li, mi in zip(ell, m):
                x = x + li * mi
            try:
                if rv_of_combination(ell, m) != x.rv():
                    rv_bad.append([str(mi) for mi in m])
            except InternalInconsistency as exc:
                rv_bad.append(str(exc))
        ok = rep.ok and not rv_bad
        return _record(
            OK if ok else NEGATIVE,
            verdict="consistent" if ok else "mismatch",
            report={**rep.to_json(), "rv_mismatches": rv_bad[:20], "rv_mismatch_count": len(rv_bad)},
        )

    return run


def _compile_rv_indep(L: Loader, ctx: Context, t: dict, where: str):
    a = ctx.series_list(t.get("a", []), f"{where}.a")
    b = ctx.series_list(t.get("b", []), f"{where}.b")
    e = ctx.series_list(t.get("e", []), f"{where}.e")
    Lp = ctx.presentation(t.get("L"), f"{where}.L")
    M = ctx.presentation(t.get("M"), f"{where}.M")
    C = ctx.presentation(t.get("C", "Q"), f"{where}.C")
    d = L.degree(t, where, min(Lp.degree_bound, M.degree_bound))

    def run():
        rep = rv_independent(a, b, e, Lp, M, C, d)
        if rep.independent:
            code = OK
        elif rep.diagnostic.startswith("precondition"):
            code = HYPOTHESIS
        else:
            code = NEGATIVE
        verdict = "independent" if rep.independent else "dependent"
        return _record(code, verdict=verdict, report=rep.to_json())

    return run


def _compile_iso_extend(L: Loader, ctx: Context, t: dict, where: str):
    Lp = ctx.presentation(t.get("L"), f"{where}.L")
    M = ctx.presentation(t.get("M"), f"{where}.M")
    C = ctx.presentation(t.get("C", "Q"), f"{where}.C")
    sigma = t.get("sigma", {})
    if not isinstance(sigma, dict):
        raise L.error("sigma must map generator expressions to images", f"{where}.sigma")
    images = list(Lp.generators)
    for src, dst in sigma.items():
        g = ctx.series(src, f"{where}.sigma")
        if g not in Lp.generators:
            raise L.error(f"{src!r} is not a generator of {Lp.name}", f"{where}.sigma", src)
        images[Lp.generators.index(g)] = ctx.series(dst, f"{where}.sigma[{src!r}]")
    fixes = t.get("fixes", ["C"])
    try:
        iso = FieldIso(Lp, images, frozenset(fixes))
    except (TypeError, ValueError) as exc:
        raise L.error(str(exc), f"{where}.fixes") from None
    model = ctx.model
    if t.get("power_model") is not None:
        try:
            model = PowerModel.from_json(t["power_model"])
        except (KeyError, TypeError, ValueError, UnsupportedModel) as exc:
            raise L.error(f"bad power model: {exc}", f"{where}.power_model") from None
    ns = tuple(t.get("ns", ()))
    d = L.degree(t, where, 3)

    def run():
        rep = extend_iso(iso, Lp, M, C, d, model, ns)
        return _record(
            OK if rep.ok else NEGATIVE,
            verdict="verified" if rep.ok else "counterexample",
            sigma=iso.to_json(),
            report=rep.to_json(),
        )

    return run


def _compile_val_refine(L: Loader, ctx: Context, t: dict, where: str):
    Lp = ctx.presentation(t.get("L"), f"{where}.L")
    M = ctx.presentation(t.get("M"), f"{where}.M")
    C = ctx.presentation(t.get("C", "Q"), f"{where}.C")
    a = ctx.series_list(t.get("a", []), f"{where}.a")
    e = ctx.series_list(t.get("e", []), f"{where}.e")
    b = ctx.series_list(t.get("b", []), f"{where}.b")
    layout = t.get("layout", "standard")
    if layout not in ("standard", "delta_above_main"):
        raise L.error(f"unknown layout {layout!r}", f"{where}.layout", layout)
    d = L.degree(t, where, 4)

    def run():
        R = refine_valuation(Lp, M, C, a, e, b, d)
        if layout != "standard":
            R = RefinedUniverse(R.base, R.demoted, R.pairs, layout)
        rep = verify_refinement(R, Lp, M, C, d)
        return _record(
            OK if rep.ok else NEGATIVE,
            verdict="refinement" if rep.ok else "not-a-refinement",
            refined=R.to_json(),
            report=rep.to_json(),
        )

    return run


def _compile_suite_run(L: Loader, ctx, t: dict, where: str):
    name = t.get("suite")
    if name not in SUITES:
        raise L.error(f"unknown suite {name!r}", f"{where}.suite", name)
    seed = t.get("seed", L.seed)
    if seed is None:
        raise L.error("suite-run needs a seed (task, file or --seed)", where)
    if not isinstance(seed, int) or not 0 <= seed < MAX_SEED:
        raise L.error("seed must be an integer in [0, 2**64)", f"{where}.seed")
    size = t.get("size")
    if size is not None and (not isinstance(size, int) or size < 0):
        raise L.error("size must be a nonnegative integer", f"{where}.size")

    def run():
        res = run_suite(name, seed, size)
        return _record(OK if res.ok else NEGATIVE, verdict="pass" if res.ok else "fail", report=res.to_json())

    return run


_COMPILERS = {
    "sep-check": _compile_sep_check,
    "sep-make": _compile_sep_make,
    "sep-lift": _compile_sep_lift,
    "comp-verify": _compile_comp_verify,
    "rv-indep": _compile_rv_indep,
    "iso-extend": _compile_iso_extend,
    "val-refine": _compile_val_refine,
    "suite-run": _compile_suite_run,
}


# -- execution --


def _execute(run) -> dict:
    try:
        return run()
    except HypothesisViolation as exc:
        return _record(HYPOTHESIS, verdict="hypothesis-violation", error=str(exc), failed=exc.failed)
    except (UnsupportedModel, UnsupportedRefinement) as exc:
        return _record(HYPOTHESIS, verdict="unsupported", error=str(exc))
    except PrecisionExhausted as exc:
        return _record(PRECISION, verdict="precision-exhausted", error=str(exc))
    except NotIndependent as exc:
        return _record(NEGATIVE, verdict="not-independent", error=str(exc))
    except InternalInconsistency as exc:
        return _record(NEGATIVE, verdict="internal-inconsistency", error=str(exc))


def run_tasks(text: str, degree_bound=None, seed=None, only_kind=None) -> tuple[list[dict], dict, int]:
    """Compile and run a task file; returns (records, summary, exit code)."""
    try:
        loader = Loader(text, degree_bound, seed, only_kind)
        compiled = loader.compile()
    except TaskFileError as exc:
        summary = {"summary": {"tasks": 0, "exit_code": USAGE, **exc.to_json()}}
        return [], summary, USAGE
    records = []
    counts: dict[str, int] = {}
    worst = OK
    for index, kind, run, expect, label in compiled:
        rec = _apply_expectation(_execute(run), expect)
        rec["index"] = index
        rec["kind"] = kind
        if label is not None:
            rec["label"] = label
        rec["status"] = STATUS[rec["code"]]
        counts[rec["status"]] = counts.get(rec["status"], 0) + 1
        worst = max(worst, rec["code"])
        records.append(rec)
    summary = {
        "summary": {
            "tasks": len(records),
            "by_status": dict(sorted(counts.items())),
            "exit_code": worst,
            "seed": loader.seed,
            "degree_bound": degree_bound,
        }
    }
    return records, summary, worst


def _text_line(rec: dict) -> str:
    head = f"[{rec['status']}] #{rec['index']} {rec['kind']}"
    if "label" in rec:
        head += f" ({rec['label']})"
    head += f": {rec.get('verdict', '')}"
    if "error" in rec:
        head += f" - {rec['error']}"
    if rec.get("expect_met") is not None:
        head += " (expected)" if rec["expect_met"] else f" (expected {rec['expect']})"
    return head


def shipped_suite_text() -> str:
    return resources.files("valkit").joinpath("data/suite.json").read_text()


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(USAGE, f"{self.prog}: error: {message}\n")


def _common(p: argparse.ArgumentParser, file_required: bool) -> None:
    if file_required:
        p.add_argument("taskfile")
    else:
        p.add_argument("taskfile", nargs="?", help="defaults to the shipped task suite")
    p.add_argument("--degree-bound", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--format", choices=("json", "text"), default="json")


GROUPS = {
    "sep": ("check", "make", "lift"),
    "comp": ("verify",),
    "rv": ("indep",),
    "iso": ("extend",),
    "val": ("refine",),
}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="valkit", description="Exact valued-field verification tasks.")
    sub = parser.add_subparsers(dest="group", required=True, parser_class=_Parser)
    _common(sub.add_parser("run", help="run every task of a task file"), False)
    for group, actions in GROUPS.items():
        gp = sub.add_parser(group)
        asub = gp.add_subparsers(dest="action", required=True, parser_class=_Parser)
        for action in actions:
            _common(asub.add_parser(action), True)
    sp = sub.add_parser("suite")
    ssub = sp.add_subparsers(dest="action", required=True, parser_class=_Parser)
    rp = ssub.add_parser("run")
    _common(rp, False)
    rp.add_argument("--name", choices=sorted(SUITES), default=None, help="run one suite directly")
    rp.add_argument("--size", type=int, default=None)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.degree_bound is not None and args.degree_bound < 1:
        print("valkit: --degree-bound must be positive", file=sys.stderr)
        return USAGE
    if args.seed is not None and not 0 <= args.seed < MAX_SEED:
        print("valkit: --seed must be in [0, 2**64)", file=sys.stderr)
        return USAGE
    only_kind = None
    if args.group in GROUPS or args.group == "suite":
        only_kind = f"{args.group}-{args.action}"
    if args.group == "suite" and args.name is not None:
        task = {"kind": "suite-run", "suite": args.name}
        if args.size is not None:
            task["size"] = args.size
        text = json.dumps({"seed": 0, "tasks": [task]})
    elif args.taskfile is None:
        text = shipped_suite_text()
    else:
        try:
            text = Path(args.taskfile).read_text()
        except OSError as exc:
            print(f"valkit: cannot read {args.taskfile}: {exc.strerror}", file=sys.stderr)
            return USAGE
    records, summary, code = run_tasks(text, args.degree_bound, args.seed, only_kind)
    out = sys.stdout
    if args.format == "json":
        for rec in records:
            out.write(json.dumps(rec, sort_keys=True) + "\n")
        out.write(json.dumps(summary, sort_keys=True) + "\n")
    else:
        for rec in records:
            out.write(_text_line(rec) + "\n")
        s = summary["summary"]
        if "error" in s:
            loc = f" at line {s['line']}, column {s['column']}" if "line" in s else ""
            where = f" ({s['path']})" if s.get("path") else ""
            out.write(f"error{where}{loc}: {s['error']}\n")
        out.write(f"{s['tasks']} task(s), exit code {s['exit_code']}\n")
    out.flush()
    return code


if __name__ == "__main__":
    sys.exit(main())
