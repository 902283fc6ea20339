"""The ``tamelab`` command.

Exit codes: 0 all claims pass, 1 a claim failed, 2 input error,
3 a guard skipped a claim and ``--strict`` was given.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .aec import (
    GaloisTypeHandle,
    amalgamate,
    check_amalgam,
    check_level_types,
    closure,
    is_member,
    random_triple,
    tameness_report,
)
from .functions import parse_epset
from .indexing import DomainError
from .limit import (
    decide_limit_iso,
    extract_sharp,
    is_coherent_system,
    system_from_json,
    system_to_json,
    truncation_verdict,
    verify_h_properties,
)
from .report import ClaimResult, Report, emit_report, jsonable
from .scenario import ScenarioError, load_scenario
from .sharp import (
    DerivedFilter,
    PreconditionError,
    SharpWitness,
    UnknownFunction,
    check_filter_laws,
    choose_markers,
    search_sharp,
    verify_sharp,
)
from .structures import SigmaStructure, build_level
from .suites import STRUCTURE_CLAIMS, SUITES, Options, run_suite, structure_claims


class InputError(ValueError):
    pass


def _read_json(path: str):
    try:
        return json.loads(Path(path).read_text())
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None


def _scenario(args):
    if not args.scenario:
        raise InputError("--scenario is required")
    return load_scenario(args.scenario, True if args.auto_close else None)


def _level(args, fam):
    raw = args.level
    if fam.is_omega:
        try:
            return int(raw)
        except ValueError:
            raise InputError(f"level {raw!r} is not a natural number") from None
    return raw


def _report(args, sc, suite, claims) -> Report:
    rep = Report(sc.to_json() if sc is not None else {"name": None}, suite)
    for c in claims:
        rep.add(c)
    return rep


def _finish(args, rep: Report) -> int:
    sys.stdout.write(emit_report(rep, args.format, args.timings))
    return rep.exit_code(args.strict)


def _dump(obj) -> int:
    sys.stdout.write(json.dumps(jsonable(obj), indent=2, ensure_ascii=False) + "\n")
    return 0


# ---- handlers -------------------------------------------------------

def cmd_run(args) -> int:
    sc = _scenario(args)
    rep = run_suite(sc, args.suite, args.level_bound, args.marker, args.oracle, args.seed)
    return _finish(args, rep)


def _witness(args, fam):
    if args.witness:
        return SharpWitness.from_json(_read_json(args.witness))
    w = search_sharp(fam)
    if w is None:
        raise InputError("the family has no witness; pass one with --witness")
    return w


def cmd_sharp_verify(args) -> int:
    sc = _scenario(args)
    if not args.witness:
        raise InputError("--witness is required")
    w = SharpWitness.from_json(_read_json(args.witness))
    bad = verify_sharp(sc.family, w)
    c = ClaimResult("sharp.verify", "pass" if bad is None else "fail", {"violation": bad})
    return _finish(args, _report(args, sc, "sharp", [c]))


def cmd_sharp_search(args) -> int:
    sc = _scenario(args)
    w = search_sharp(sc.family)
    c = ClaimResult("sharp.search", "pass" if w is not None else "fail",
                    {"witness": None if w is None else w.to_json(sc.family)})
    return _finish(args, _report(args, sc, "sharp", [c]))


def _filter(args, fam):
    w = _witness(args, fam)
    markers = choose_markers(fam, w, args.marker) if args.marker is not None else None
    return DerivedFilter(fam, w, markers)


def cmd_filter_query(args) -> int:
    sc = _scenario(args)
    U = _filter(args, sc.family)
    try:
        A = parse_epset(args.set)
    except ValueError as exc:
        raise InputError(f"cannot read set: {exc}") from None
    reason = U.reason(A)
    c = ClaimResult("filter.query", "info", {"set": A.to_json(), "member": reason is not None, "generator": reason})
    return _finish(args, _report(args, sc, "filter", [c]))


def cmd_filter_laws(args) -> int:
    from .aec import filter_pool

    sc = _scenario(args)
    U = _filter(args, sc.family)
    bound = args.level_bound or sc.level_bound
    r = check_filter_laws(U, filter_pool(sc.family, range(bound + 1)), range(bound + 1))
    c = ClaimResult("filter.laws", r["status"], r["evidence"])
    return _finish(args, _report(args, sc, "filter", [c]))


def cmd_structure_build(args) -> int:
    sc = _scenario(args)
    fam = sc.family
    S = build_level(args.side, _level(args, fam), fam, expand=args.expand)
    return _dump(S.to_json())


def cmd_structure_check(args) -> int:
    sc = _scenario(args)
    opt = Options(sc, args.level_bound, args.marker, args.oracle, args.seed)
    only = None if args.claim == "all" else {STRUCTURE_CLAIMS[args.claim]}
    return _finish(args, _report(args, sc, "structures", structure_claims(sc, opt, only)))


def cmd_limit_decide(args) -> int:
    sc = _scenario(args)
    u = decide_limit_iso(sc.family)
    c = ClaimResult("limit.decide", "pass" if u is not None else "fail",
                    {"system": None if u is None else system_to_json(sc.family, u)})
    return _finish(args, _report(args, sc, "limit", [c]))


def _system(args, fam):
    if args.system:
        return system_from_json(_read_json(args.system))
    u = decide_limit_iso(fam)
    if u is None:
        raise InputError("no coherent system exists; pass one with --system")
    return u


def cmd_limit_verify(args) -> int:
    sc = _scenario(args)
    fam = sc.family
    u = _system(args, fam)
    bad = is_coherent_system(fam, u)
    levels = args.level_bound or 4
    oracle, evidence = truncation_verdict(fam, u, levels)
    claims = [
        ClaimResult("limit.closed-form", "pass" if bad is None else "fail", {"violation": bad}),
        ClaimResult("limit.truncation", "pass" if oracle else "fail", {"levels": levels, "counterexample": evidence}),
        ClaimResult("limit.agreement", "pass" if (bad is None) == oracle else "fail", {}),
    ]
    if bad is None:
        r = verify_h_properties(fam, u, levels)
        claims.append(ClaimResult("limit.h-properties", "pass" if r["ok"] else "fail", r))
    return _finish(args, _report(args, sc, "limit", claims))


def cmd_limit_extract(args) -> int:
    sc = _scenario(args)
    fam = sc.family
    w = extract_sharp(fam, _system(args, fam))
    c = ClaimResult("limit.extract", "pass" if verify_sharp(fam, w) is None else "fail",
                    {"witness": w.to_json(fam), "rule": "f* is the first maximal member"})
    return _finish(args, _report(args, sc, "limit", [c]))


def _structure(args):
    if args.structure:
        return None, SigmaStructure.from_json(_read_json(args.structure))
    sc = _scenario(args)
    return sc, build_level(args.side, _level(args, sc.family), sc.family, expand=args.side != 0)


def cmd_aec_member(args) -> int:
    sc, M = _structure(args)
    rep = is_member(M)
    c = ClaimResult("aec.member", "pass" if rep.verdict else "fail", rep.to_json())
    return _finish(args, _report(args, sc, "aec", [c]))


def cmd_aec_closure(args) -> int:
    sc, M = _structure(args)
    subset = [tuple(x) if isinstance(x, list) else x for x in json.loads(args.subset)]
    return _dump(closure(M, subset).to_json())


def cmd_aec_type_eq(args) -> int:
    sc = _scenario(args)
    r = check_level_types(sc.family, _level(args, sc.family))
    ok = r["equal"] and r["g_witness"] and r.get("generic", True)
    return _finish(args, _report(args, sc, "aec", [ClaimResult("aec.type-eq", "pass" if ok else "fail", r)]))


def cmd_aec_amalgamate(args) -> int:
    M0, M1, M2 = random_triple(args.seed)
    r = check_amalgam(M0, M1, M2)
    if args.dump:
        Mstar, f1, f2, _ = amalgamate(M0, M1, M2)
        return _dump({"M0": M0.to_json(), "M1": M1.to_json(), "M2": M2.to_json(), "Mstar": Mstar.to_json(),
                      "f1": f1.to_json(), "f2": f2.to_json(), "checks": r})
    c = ClaimResult("aec.amalgamate", "pass" if r["ok"] else "fail", {"seed": args.seed, **r})
    return _finish(args, _report(args, None, "aec", [c]))


def cmd_aec_tameness(args) -> int:
    sc = _scenario(args)
    bound = args.level_bound or sc.level_bound
    r = tameness_report(sc.family, bound, args.marker)
    ok = r["levels_equal"] and r["limit"]["status"] in ("equal", "declined")
    status = "pass" if ok else "fail"
    if r["limit"]["status"] == "declined" and status == "pass":
        status = "skip"
    return _finish(args, _report(args, sc, "aec", [ClaimResult("aec.tameness-report", status, r)]))


# ---- parser ---------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--scenario", help="scenario file, or a bundled name: s0 s1 s2 s3 s4 diamond")
    common.add_argument("--format", choices=("text", "json"), default="text")
    common.add_argument("--level-bound", type=int, default=None)
    common.add_argument("--marker", default=None, help="marker target symbol in u_f*")
    common.add_argument("--oracle", choices=("zero-residue",), default=None)
    common.add_argument("--strict", action="store_true", help="exit 3 when a guard skipped a claim")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--timings", action="store_true", help="include runtimes (breaks byte-identical output)")
    common.add_argument("--auto-close", action="store_true", help="close the family under refinement")

    p = argparse.ArgumentParser(prog="tamelab", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"tamelab {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", parents=[common], help="run a claim suite")
    run.add_argument("--suite", choices=SUITES + ("all",), default="all")
    run.set_defaults(func=cmd_run)

    sharp = sub.add_parser("sharp").add_subparsers(dest="action", required=True)
    v = sharp.add_parser("verify", parents=[common])
    v.add_argument("--witness", help="witness JSON file")
    v.set_defaults(func=cmd_sharp_verify)
    sharp.add_parser("search", parents=[common]).set_defaults(func=cmd_sharp_search)

    filt = sub.add_parser("filter").add_subparsers(dest="action", required=True)
    q = filt.add_parser("query", parents=[common])
    q.add_argument("--set", required=True, help='"prefix/period" bit string, or JSON')
    q.add_argument("--witness")
    q.set_defaults(func=cmd_filter_query)
    laws = filt.add_parser("laws", parents=[common])
    laws.add_argument("--witness")
    laws.set_defaults(func=cmd_filter_laws)

    st = sub.add_parser("structure").add_subparsers(dest="action", required=True)
    b = st.add_parser("build", parents=[common])
    b.add_argument("--side", type=int, choices=(0, 1, 2), required=True)
    b.add_argument("--level", required=True)
    b.add_argument("--expand", action="store_true", help="add the J point i1/i2")
    b.set_defaults(func=cmd_structure_build)
    c = st.add_parser("check", parents=[common])
    c.add_argument("--claim", choices=tuple(STRUCTURE_CLAIMS) + ("all",), default="all")
    c.set_defaults(func=cmd_structure_check)

    lim = sub.add_parser("limit").add_subparsers(dest="action", required=True)
    lim.add_parser("decide", parents=[common]).set_defaults(func=cmd_limit_decide)
    lv = lim.add_parser("verify", parents=[common])
    lv.add_argument("--system", help="JSON map name -> symbol list")
    lv.set_defaults(func=cmd_limit_verify)
    le = lim.add_parser("extract", parents=[common])
    le.add_argument("--system")
    le.set_defaults(func=cmd_limit_extract)

    aec = sub.add_parser("aec").add_subparsers(dest="action", required=True)
    for name, fn in (("member", cmd_aec_member), ("closure", cmd_aec_closure)):
        a = aec.add_parser(name, parents=[common])
        a.add_argument("--structure", help="structure JSON from `structure build`")
        a.add_argument("--side", type=int, choices=(0, 1, 2), default=1)
        a.add_argument("--level", default="1")
        if name == "closure":
            a.add_argument("--subset", required=True, help="JSON list of carrier elements")
        a.set_defaults(func=fn)
    te = aec.add_parser("type-eq", parents=[common], help="compare p_d and q_d")
    te.add_argument("--level", required=True)
    te.set_defaults(func=cmd_aec_type_eq)
    am = aec.add_parser("amalgamate", parents=[common], help="amalgamate a seeded random triple")
    am.add_argument("--dump", action="store_true")
    am.set_defaults(func=cmd_aec_amalgamate)
    aec.add_parser("tameness-report", parents=[common]).set_defaults(func=cmd_aec_tameness)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (InputError, ScenarioError, DomainError, PreconditionError, UnknownFunction, KeyError) as exc:
        msg = exc.args[0] if exc.args else exc
        print(f"tamelab: error: {msg}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
