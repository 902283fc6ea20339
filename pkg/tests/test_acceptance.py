"""Acceptance criteria 1-11 on the five omega scenarios S0-S4.

Each test records one PASS/FAIL line; ``conftest.py`` prints them after the
run.  ``python3 tests/test_acceptance.py`` runs the criteria without pytest.
"""

from __future__ import annotations

import random
import subprocess
import sys
import time
from itertools import combinations

from tamelab.aec import (
    check_admits_intersections,
    check_amalgam,
    check_level_types,
    least_substructure_bruteforce,
    closure,
    pipeline_checks,
    random_member_small,
    random_triple,
)
from tamelab.functions import preimage
from tamelab.limit import check_characterization, decide_limit_iso, extract_sharp, random_assignment
from tamelab.scenario import load_scenario
from tamelab.sharp import DerivedFilter, check_measures, sharp_from_ultra, zero_residue_oracle
from tamelab.structures import build_level, check_e_characterization, check_gg_automorphism, check_h0, check_pair_types

NAMES = ("s0", "s1", "s2", "s3", "s4")
RESULTS: dict = {}


def families():
    return [(n, load_scenario(n).family) for n in NAMES]


def record(number: int, title: str, ok: bool, detail: str = "") -> None:
    RESULTS[number] = f"criterion {number:>2} {'PASS' if ok else 'FAIL'}  {title}" + (f"  ({detail})" if detail else "")
    print(RESULTS[number])


def criterion_1():
    t = time.perf_counter()
    bad = []
    checks = 0
    for name, fam in families():
        for d in range(1, 6):
            for d1 in range(d, 9):
                for d2 in range(d, 9):
                    checks += 1
                    r = check_gg_automorphism(fam, d1, d2, d)
                    if r is not None:
                        bad.append((name, d, d1, d2, r))
    dt = time.perf_counter() - t
    return not bad and dt < 30, f"{checks} checks, {dt:.2f}s, first failure {bad[:1]}"


def criterion_2():
    bad = []
    pairs = 0
    for name, fam in families():
        for d in range(1, 5):
            r = check_e_characterization(build_level(1, d, fam), fam)
            pairs += r.get("pairs", 0)
            if not r["ok"]:
                bad.append((name, d, r))
    return not bad, f"{pairs} pairs, first failure {bad[:1]}"


def criterion_3():
    bad = []
    classes = 0
    for name, fam in families():
        if len(fam.symbols) > 2:
            continue
        for d in range(1, 4):
            r = check_pair_types(build_level(1, d, fam))
            classes += r.get("classes", 0)
            if not r["ok"]:
                bad.append((name, d, r))
    return not bad, f"{classes} fingerprint classes, first failure {bad[:1]}"


def criterion_4():
    bad = []
    generic = 0
    for name, fam in families():
        for d in range(1, 6):
            r = check_level_types(fam, d)
            generic += "generic" in r
            if not (r["equal"] and r["g_witness"] and r.get("generic", True)):
                bad.append((name, d, r))
    return not bad, f"25 levels, {generic} also confirmed by generic search, first failure {bad[:1]}"


def criterion_5():
    bad = []
    for name, fam in families():
        found = decide_limit_iso(fam)
        rng = random.Random(2024)
        samples = [found] + [random_assignment(fam, rng, found) for _ in range(200)]
        r = check_characterization(fam, samples, max_level=4)
        if found is None or not r["ok"]:
            bad.append((name, r))
    return not bad, f"201 assignments per scenario, first failure {bad[:1]}"


def criterion_6():
    bad = []
    slowest = 0.0
    for name, fam in families():
        t = time.perf_counter()
        w = extract_sharp(fam, decide_limit_iso(fam))
        r = pipeline_checks(fam, w, max_list=8)
        dt = time.perf_counter() - t
        slowest = max(slowest, dt)
        if not r["ok"] or dt >= 10:
            bad.append((name, r, dt))
    return not bad, f"slowest scenario {slowest:.2f}s, first failure {bad[:1]}"


def criterion_7():
    bad = []
    sets = 0
    oracle = zero_residue_oracle()
    for name, fam in families():
        fam2, w = sharp_from_ultra(fam, oracle)
        U = DerivedFilter(fam2, w)
        for f in fam2.names:
            values = fam2.alphabet.sort(fam2[f].range())
            for k in range(len(values) + 1):
                for X in combinations(values, k):
                    sets += 1
                    if (check_measures(U, f, X) == "decided-in") != (preimage(fam2[f], X) in oracle):
                        bad.append((name, f, X))
    return not bad, f"{sets} sets, first failure {bad[:1]}"


def criterion_8():
    bad = []
    for name, fam in families():
        nonconstant = any(len(fam[f].range()) > 1 for f in fam.names)
        reports = [check_h0(fam, d) for d in range(2, 6)]
        violated = [r for r in reports if r["R_violation"] is not None]
        if not all(r["non_R_preserved"] for r in reports):
            bad.append((name, "non-R symbol broken"))
        if nonconstant and not violated:
            bad.append((name, "no R violation found"))
        if not nonconstant and violated:
            bad.append((name, "unexpected R violation"))
        if not all(r["replays"] for r in violated):
            bad.append((name, "violation pair does not replay"))
    return not bad, f"levels 2-5, first failure {bad[:1]}"


def criterion_9():
    t = time.perf_counter()
    bad = [s for s in range(100) if not check_amalgam(*random_triple(s))["ok"]]
    dt = time.perf_counter() - t
    return not bad and dt < 20, f"100 seeds, {dt:.2f}s, failing seeds {bad[:5]}"


def criterion_10():
    instances = []
    for name, fam in families():
        for d in range(1, 6):
            for side in (1, 2):
                M = build_level(side, d, fam, expand=True)
                if len(M) <= 40:
                    instances.append(M)
    instances += [random_member_small(s) for s in range(20)]
    bad = []
    samples = 0
    for M in instances:
        pool = M.carrier()
        rng = random.Random(len(pool))
        X_list = [set()] + [{x} for x in pool] + [set(rng.sample(pool, min(3, len(pool)))) for _ in range(5)]
        for X in X_list:
            samples += 1
            if least_substructure_bruteforce(M, X) != frozenset(closure(M, X).carrier()):
                bad.append(X)
    r = all(check_admits_intersections(M, [set()])["status"] == "pass" for M in instances)
    return not bad and r, f"{len(instances)} structures, {samples} subsets, first failure {bad[:1]}"


def criterion_11():
    outs = []
    for name in NAMES:
        runs = [
            subprocess.run([sys.executable, "-m", "tamelab.cli", "run", "--scenario", name, "--suite", "all",
                            "--format", "json"], capture_output=True, check=False).stdout
            for _ in range(2)
        ]
        outs.append(runs[0] == runs[1] and len(runs[0]) > 0)
    return all(outs), f"identical on {sum(outs)}/{len(outs)} scenarios"


CRITERIA = {
    1: ("g-composite automorphisms, levels <= 5, indices <= 8, < 30 s", criterion_1),
    2: ("E closed form = conjunction test = chain replay, levels <= 4", criterion_2),
    3: ("fingerprint-equal pairs share their difference, sigma <= 2, levels <= 3", criterion_3),
    4: ("p_d = q_d for d <= 5, generic search confirms within guard", criterion_4),
    5: ("coherent-system test agrees with truncation oracle, 200 corruptions", criterion_5),
    6: ("extraction to filter pipeline, < 10 s per scenario", criterion_6),
    7: ("ultrafilter round trip agrees with the zero-residue oracle", criterion_7),
    8: ("h0 control: R broken when predicted, other symbols kept", criterion_8),
    9: ("100 random amalgamation triples, < 20 s", criterion_9),
    10: ("closure equals brute-force least substructure, <= 40 elements", criterion_10),
    11: ("byte-identical JSON reports across two runs", criterion_11),
}


def _check(number):
    title, fn = CRITERIA[number]
    ok, detail = fn()
    record(number, title, ok, detail)
    assert ok, detail


def test_criterion_01_gg_automorphism():
    _check(1)


def test_criterion_02_e_characterization():
    _check(2)


def test_criterion_03_pair_types():
    _check(3)


def test_criterion_04_level_types():
    _check(4)


def test_criterion_05_coherent_characterization():
    _check(5)


def test_criterion_06_extraction_pipeline():
    _check(6)


def test_criterion_07_ultra_round_trip():
    _check(7)


def test_criterion_08_h0_control():
    _check(8)


def test_criterion_09_amalgamation():
    _check(9)


def test_criterion_10_closure():
    _check(10)


def test_criterion_11_determinism():
    _check(11)


if __name__ == "__main__":
    failed = 0
    for n, (title, fn) in CRITERIA.items():
        ok, detail = fn()
        record(n, title, ok, detail)
        failed += not ok
    sys.exit(1 if failed else 0)
