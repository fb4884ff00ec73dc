"""Command-line front end.

    pvsynth check FILE [--vc NAME]
    pvsynth synth FILE [--vc NAME] [--trace] [--emit-qe-trace]
    pvsynth bmc FILE -k N
    pvsynth vcs FILE
    pvsynth reduce FILE [--vc NAME]

Exit codes: 0 holds (or success), 1 fails, 2 unknown, 3 input error.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction

from . import logic as L
from .engine import Options, UnknownError, reduce_formula
from .qe import QETrace
from .specfile import ProblemError, load_problem
from . import sysver as S

EXIT = {S.HOLDS: 0, S.FAILS: 1, S.UNKNOWN: 2}
INPUT_ERROR = 3


def _q(v) -> str:
    if isinstance(v, Fraction):
        return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"
    return str(v)


def _model(model: dict) -> dict:
    return {k: _q(model[k]) for k in sorted(model)}


def _options(args) -> Options:
    return Options(cube_limit=args.cube_limit, branch_depth=args.branch_depth, jobs=args.jobs)


class Report:
    """Collects text lines or a JSON object; printed once at the end."""

    def __init__(self, as_json: bool, out=None):
        self.as_json = as_json
        self.data: dict = {}
        self.lines: list = []
        self.out = out or sys.stdout

    def line(self, s: str = "") -> None:
        self.lines.append(s)

    def emit(self) -> None:
        if self.as_json:
            self.out.write(json.dumps(self.data, indent=2, sort_keys=True) + "\n")
        else:
            self.out.write("\n".join(self.lines) + ("\n" if self.lines else ""))


def _model_lines(rep: Report, model: dict, fmt: str, indent: str = "  ") -> None:
    if not model:
        return
    m = _model(model)
    if fmt == "json":
        rep.line(indent + json.dumps(m, sort_keys=True))
        return
    for k, v in m.items():
        rep.line(f"{indent}{k} = {v}")


def _vc_dicts(results) -> list:
    return [{"name": r.name, "status": r.status, "reason": r.reason, "model": _model(r.model)} for r in results]


def _reduction_json(red) -> dict:
    return {
        "clauses": [L.format_clause(c) for c in red.clauses],
        "levels": [{
            "level": lv.level,
            "certificate": lv.certificate,
            "symbols": sorted(lv.symbols),
            "terms": [L.format_term(t) for t in lv.terms],
            "instances": [L.format_clause(c) for c in lv.instances],
            "definitions": [f"{c.fn} = {L.format_term(t)}" for t, c in lv.defs],
            "congruence": [L.format_clause(c) for c in lv.congruence],
        } for lv in red.levels],
    }


def _reduction_lines(rep: Report, red, indent="  ") -> None:
    d = _reduction_json(red)
    for lv in d["levels"]:
        rep.line(f"{indent}level {lv['level']} ({lv['certificate'] or 'none'}): {', '.join(lv['symbols'])}")
        for s in lv["definitions"]:
            rep.line(f"{indent}  def {s}")
        for s in lv["instances"]:
            rep.line(f"{indent}  inst {s}")
        for s in lv["congruence"]:
            rep.line(f"{indent}  cong {s}")
    rep.line(f"{indent}ground clauses:")
    for s in d["clauses"]:
        rep.line(f"{indent}  {s}")


# --------------------------------------------------------------------------
# subcommands


def cmd_check(args, problem, rep: Report) -> int:
    res = S.check_invariant(problem, _options(args), vc=args.vc)
    rep.data.update({"command": "check", "file": args.file, "status": res.status, "case": res.case,
                     "vcs": _vc_dicts(res.vcs)})
    rep.line(f"case {res.case}")
    for r in res.vcs:
        rep.line(f"vc {r.name}: {r.status}" + (f" ({r.reason})" if r.reason else ""))
        if r.status == S.FAILS:
            _model_lines(rep, r.model, args.model_format)
        if args.emit_reduction and r.verdict is not None and r.verdict.reduction is not None:
            _reduction_lines(rep, r.verdict.reduction)
    if args.emit_reduction:
        rep.data["reductions"] = {r.name: _reduction_json(r.verdict.reduction) for r in res.vcs
                                  if r.verdict is not None and r.verdict.reduction is not None}
    rep.line(f"result: {res.status}")
    return EXIT[res.status]


def cmd_synth(args, problem, rep: Report) -> int:
    qt = QETrace() if args.emit_qe_trace else None
    res = S.synthesize_constraint(problem, _options(args), vc=args.vc, trace=qt)
    formulas = [L.format_formula(L.universal_closure(L.clause_formula(c))) for c in res.clauses]
    rep.data.update({"command": "synth", "file": args.file, "status": res.status, "reason": res.reason,
                     "weakest": res.weakest, "constraint": formulas,
                     "vcs": [{"name": p.trace.get("vc"), "status": p.status, "reason": p.reason,
                              "constraint": p.trace.get("final", [])} for p in res.parts]})
    for p in res.parts:
        rep.line(f"vc {p.trace.get('vc')}: {p.status}" + (f" ({p.reason})" if p.reason else ""))
        if args.trace:
            for key in ("G1", "Gamma1", "Gamma2", "final"):
                for s in p.trace.get(key, []):
                    rep.line(f"  {key}: {s}")
            cls = p.trace.get("classification")
            if cls:
                for key in ("c_f", "c_p", "rest", "dual"):
                    rep.line(f"  {key}: {', '.join(cls[key])}")
    if args.trace:
        rep.data["trace"] = [p.trace for p in res.parts]
    if qt is not None:
        rep.data["qe_trace"] = list(qt.steps)
        for s in qt.steps:
            rep.line(f"qe: {s}")
    if res.status == "ok":
        rep.line("derived-constraint:")
        for s in formulas or ["true"]:
            rep.line(f"  {s}")
        rep.line(f"weakest: {'yes' if res.weakest else 'no'}")
        return 0
    rep.line(f"result: unknown ({res.reason})")
    return EXIT[S.UNKNOWN]


def cmd_bmc(args, problem, rep: Report) -> int:
    res = S.bmc(problem, args.k, _options(args))
    rep.data.update({"command": "bmc", "file": args.file, "k": args.k, "status": res.status,
                     "depths": _vc_dicts(res.vcs)})
    for r in res.vcs:
        rep.line(f"{r.name}: {r.status}" + (f" ({r.reason})" if r.reason else ""))
        if r.status == S.FAILS:
            _model_lines(rep, r.model, args.model_format)
    rep.line(f"result: {res.status}")
    return EXIT[res.status]


def cmd_vcs(args, problem, rep: Report) -> int:
    vcs = S.select_vcs(S.system_vcs(problem), args.vc)
    rep.data.update({"command": "vcs", "file": args.file,
                     "vcs": [{"name": v.name, "kind": v.kind, "goal": L.format_formula(v.goal),
                              "assumptions": [L.format_formula(a) for a in v.assumptions]} for v in vcs]})
    for v in vcs:
        rep.line(f"{v.name} [{v.kind}]: {L.format_formula(v.goal)}")
    return 0


def cmd_reduce(args, problem, rep: Report) -> int:
    vcs = S.select_vcs(S.system_vcs(problem), args.vc)
    out = {}
    code = 0
    for v in vcs:
        rep.line(f"vc {v.name}:")
        try:
            _, red = reduce_formula(v.formula(), v.plan, axioms=v.background,
                                    names=L.NameSupply(problem.signature.names()), extra_terms=v.extra_terms)
        except UnknownError as e:
            rep.line(f"  unknown: {e}")
            out[v.name] = {"error": str(e)}
            code = EXIT[S.UNKNOWN]
            continue
        out[v.name] = _reduction_json(red)
        _reduction_lines(rep, red)
    rep.data.update({"command": "reduce", "file": args.file, "vcs": out})
    return code


COMMANDS = {"check": cmd_check, "synth": cmd_synth, "bmc": cmd_bmc, "vcs": cmd_vcs, "reduce": cmd_reduce}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pvsynth", description="Check and synthesize parametric invariants.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("file")
    common.add_argument("--json", action="store_true", help="machine-readable report")
    common.add_argument("--vc", help="only the verification condition with this name")
    common.add_argument("--jobs", type=int, default=1)
    common.add_argument("--cube-limit", type=int, default=4096)
    common.add_argument("--branch-depth", type=int, default=8)
    common.add_argument("--model-format", choices=("text", "json"), default="text")
    common.add_argument("--trace", action="store_true", help="show the symbol elimination steps")
    common.add_argument("--emit-reduction", action="store_true", help="show the reduced ground problem")
    common.add_argument("--emit-qe-trace", action="store_true", help="show quantifier elimination steps")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in ("check", "synth", "vcs", "reduce"):
        sub.add_parser(name, parents=[common])
    b = sub.add_parser("bmc", parents=[common])
    b.add_argument("-k", type=int, default=3, help="unrolling depth")
    return ap


def main(argv=None, out=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return INPUT_ERROR if e.code else 0
    err = sys.stderr
    try:
        problem = load_problem(args.file)
    except ProblemError as e:
        err.write(f"error: {e}\n")
        return INPUT_ERROR
    except OSError as e:
        err.write(f"error: {args.file}: {e.strerror or e}\n")
        return INPUT_ERROR
    rep = Report(args.json, out)
    try:
        code = COMMANDS[args.command](args, problem, rep)
    except (ProblemError, KeyError, ValueError) as e:
        msg = e.args[0] if isinstance(e, KeyError) and e.args else e
        err.write(f"error: {msg}\n")
        return INPUT_ERROR
    rep.emit()
    return code


if __name__ == "__main__":
    sys.exit(main())
