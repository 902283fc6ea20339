from itertools import combinations

import pytest
from hypothesis import given, settings, strategies as st

import naive
from tamelab.functions import EPFn, EPSet, Family, parse_epset, preimage
from tamelab.scenario import bundled, load_scenario
from tamelab.sharp import (
    DerivedFilter,
    InvariantViolation,
    MarkerChoice,
    OracleInconsistency,
    PreconditionError,
    SharpWitness,
    UltraOracle,
    UnknownFunction,
    check_complete,
    check_filter_laws,
    check_measures,
    choose_markers,
    filter_contains,
    search_sharp,
    sharp_from_ultra,
    verify_sharp,
    zero_residue_oracle,
)

EVENS, ODDS = parse_epset("/10"), parse_epset("/01")
S0 = load_scenario("s0").family
S1 = load_scenario("s1").family

epsets = st.builds(
    EPSet,
    st.text("01", max_size=4),
    st.text("01", min_size=1, max_size=6),
)


def s1_filter():
    return DerivedFilter(S1, SharpWitness("par", {"par": {"a"}}))


def naive_member(family, witness, markers, A: EPSet) -> bool:
    """A is in iff, late in a long enumeration, every marked position lies in A."""
    a = naive.seq("".join(A.prefix), "".join(A.period))
    late = range(naive.N // 2, naive.N)
    for f in family.above(witness.fstar):
        g = family[f]
        vals = naive.seq("".join(g.prefix), "".join(g.period))
        if all(a[k] == "1" for k in late if vals[k] == markers.markers[f]):
            return True
    return False


def test_verify_examples():
    assert verify_sharp(S0, SharpWitness("const_a", {"const_a": {"a"}})) is None
    assert verify_sharp(S1, SharpWitness("par", {"par": {"a"}})) is None
    # with f* = par the identity is a bijection of {a, b} onto itself
    assert verify_sharp(S1, SharpWitness("par", {"par": {"a", "b"}})) is None
    bad = verify_sharp(S1, SharpWitness("c_a", {"c_a": {"a"}, "par": {"a", "b"}, "c_b": {"b"}}))
    assert bad.condition == "bijection" and bad.function == "par"


def test_verify_reports_missing_and_noncofinal():
    fam = Family([("c", EPFn("", "a")), ("f", EPFn("b", "a"))])
    bad = verify_sharp(fam, SharpWitness("c", {"c": {"a"}}))
    assert bad.condition == "nonempty" and bad.function == "f"
    bad = verify_sharp(fam, SharpWitness("c", {"c": {"a"}, "f": {"b"}}))
    assert bad.condition == "cofinal" and bad.function == "f"


def test_verify_dangling_name():
    with pytest.raises(UnknownFunction):
        verify_sharp(S1, SharpWitness("nope", {"nope": {"a"}}))


def test_search_examples():
    assert search_sharp(S0) == SharpWitness("const_a", {"const_a": {"a"}})
    w = search_sharp(S1)
    assert w.fstar == "par" and w.u == {"par": frozenset({"a"})}
    diamond = load_scenario("diamond").family
    assert search_sharp(diamond) is None


def test_search_is_deterministic():
    for sc in bundled():
        assert search_sharp(sc.family) == search_sharp(sc.family)


def test_search_is_sound():
    for sc in bundled():
        w = search_sharp(sc.family)
        if w is not None:
            assert verify_sharp(sc.family, w) is None


def test_filter_examples():
    U = s1_filter()
    assert filter_contains(U, EVENS)
    assert not filter_contains(U, ODDS)
    assert not filter_contains(U, EPSet.empty())
    assert U.reason(EVENS) == "par" and U.reason(ODDS) is None


def test_filter_on_finite_order_is_rejected():
    diamond = load_scenario("diamond").family
    with pytest.raises(PreconditionError):
        DerivedFilter(diamond, SharpWitness("top", {"top": set()}))


def test_filter_laws_examples():
    r = check_filter_laws(s1_filter(), [EVENS, EPSet.everything()], [0, 5])
    assert r["status"] == "pass" and r["claim"] == "filter-laws"
    U0 = DerivedFilter(S0, SharpWitness("const_a", {"const_a": {"a"}}))
    cofinite = [EPSet.tail(d) for d in range(6)] + [parse_epset("1011/1"), parse_epset("0/1")]
    assert check_filter_laws(U0, cofinite, range(10))["status"] == "pass"
    # U0 is the tail filter: exactly the cofinite sets
    assert EVENS not in U0 and parse_epset("0101/1") in U0


def test_bad_markers_rejected_before_laws():
    w = SharpWitness("par", {"par": {"a"}})
    with pytest.raises(PreconditionError):
        DerivedFilter(S1, w, MarkerChoice("a", {"par": "b"}))
    with pytest.raises(PreconditionError):
        choose_markers(S1, w, target="b")


def test_complete_examples():
    U = s1_filter()
    ok, meet = check_complete(U, [EVENS, EPSet.tail(3)])
    assert ok and meet == EVENS & EPSet.tail(3)
    U0 = DerivedFilter(S0, SharpWitness("const_a", {"const_a": {"a"}}))
    assert check_complete(U0, [EPSet.tail(1), EPSet.tail(5)]) == (True, EPSet.tail(5))
    assert check_complete(U, []) == (True, EPSet.everything())
    with pytest.raises(PreconditionError):
        check_complete(U, [ODDS])


def test_measures_examples():
    U = s1_filter()
    assert check_measures(U, "par", {"a"}) == "decided-in"
    assert check_measures(U, "par", {"b"}) == "decided-out"
    U0 = DerivedFilter(S0, SharpWitness("const_a", {"const_a": {"a"}}))
    assert check_measures(U0, "const_a", set()) == "decided-out"


def test_measures_raises_when_undecided():
    # a filter that is not an ultrafilter on a fiber of a foreign function
    U0 = DerivedFilter(S0, SharpWitness("const_a", {"const_a": {"a"}}))
    U0.family = Family([("const_a", EPFn("", "a")), ("par", EPFn("", "ab"))])
    with pytest.raises(InvariantViolation):
        check_measures(U0, "par", {"a"})


def test_sharp_from_ultra_examples():
    oracle = zero_residue_oracle()
    fam, w = sharp_from_ultra(S1, oracle)
    assert w.u["par"] == {"a"} and w.fstar == "c_a" and fam is S1
    fam, w = sharp_from_ultra(S0, oracle)
    assert w.u == {"const_a": frozenset({"a"})}
    fam, w = sharp_from_ultra(Family([("f", EPFn("a", "b"))]), oracle)
    assert w.u["f"] == {"b"}
    assert fam.names[0] == "const_a" and w.notes == ("adjoined const_a",)
    assert verify_sharp(fam, w) is None


def test_zero_residue_oracle():
    oracle = zero_residue_oracle()
    assert EVENS in oracle and ODDS not in oracle
    assert parse_epset("/011") not in oracle
    assert parse_epset("1/011") in oracle  # canonically period 101, which holds the multiples of 3
    assert EPSet.tail(7) in oracle and EPSet.empty() not in oracle


def test_inconsistent_oracle():
    always = UltraOracle("always", lambda A: True)
    with pytest.raises(OracleInconsistency):
        EVENS in always
    # majority density: every fiber of a three-valued function is a minority
    majority = UltraOracle("majority", lambda A: 2 * A.period.count("1") > len(A.period))
    with pytest.raises(OracleInconsistency):
        sharp_from_ultra(Family([("t", EPFn("", "abc"))]), majority)


def test_round_trip_agrees_with_oracle():
    oracle = zero_residue_oracle()
    for sc in bundled():
        if not sc.family.is_omega:
            continue
        fam, w = sharp_from_ultra(sc.family, oracle)
        U = DerivedFilter(fam, w)
        for f in fam.names:
            rng = fam.alphabet.sort(fam[f].range())
            for k in range(len(rng) + 1):
                for X in combinations(rng, k):
                    verdict = check_measures(U, f, X)
                    assert (verdict == "decided-in") == (preimage(fam[f], X) in oracle)


def test_marker_dependence():
    fam = Family([("c_a", EPFn("", "a")), ("par", EPFn("", "ab"))])
    w = SharpWitness("par", {"par": {"a", "b"}})
    assert verify_sharp(fam, w) is None
    Ua = DerivedFilter(fam, w, choose_markers(fam, w, "a"))
    Ub = DerivedFilter(fam, w, choose_markers(fam, w, "b"))
    assert (EVENS in Ua) != (EVENS in Ub)


def test_complete_on_member_lists():
    for sc in bundled():
        fam = sc.family
        w = search_sharp(fam)
        if w is None or not fam.is_omega:
            continue
        U = DerivedFilter(fam, w)
        pool = [EPSet.tail(d) for d in range(4)]
        pool += [preimage(fam[f], {x}) for f in fam.names for x in fam.alphabet.sort(fam[f].range())]
        members = [A for A in pool if A in U][:8]
        for k in range(len(members) + 1):
            for sub in combinations(members, k):
                assert check_complete(U, sub)[0]


@settings(max_examples=150, deadline=None)
@given(epsets)
def test_membership_matches_enumeration(A):
    for fam in (S0, S1):
        w = search_sharp(fam)
        U = DerivedFilter(fam, w)
        assert (A in U) == naive_member(fam, w, U.markers, A)


@settings(max_examples=100, deadline=None)
@given(epsets, epsets)
def test_filter_laws_on_random_sets(A, B):
    U = s1_filter()
    assert check_filter_laws(U, [A, B, A & B, A | B], [0, 3])["status"] == "pass"
