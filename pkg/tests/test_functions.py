from itertools import product

import pytest
from hypothesis import given, settings, strategies as st

import naive
from tamelab.functions import (
    Alphabet,
    AlphabetExhausted,
    DirectednessError,
    EPFn,
    EPSet,
    Family,
    FiniteFn,
    cofinal_range,
    compare,
    equivalent,
    evaluate,
    has_characteristic_fn,
    check_replete,
    parse_epset,
    partition_key,
    preimage,
    refine,
    replete_combine,
    tail_range,
    window,
)
from tamelab.indexing import FiniteOrder
from tamelab.scenario import bundled

words = st.text(alphabet="abc", min_size=0, max_size=4)
periods = st.text(alphabet="abc", min_size=1, max_size=4)
fns = st.builds(EPFn, words, periods)

DIAMOND = FiniteOrder.from_pairs(
    ["bot", "l", "r", "top"],
    [("bot", "l"), ("bot", "r"), ("bot", "top"), ("l", "top"), ("r", "top")],
)


def values(f, n=naive.N):
    return [f(k) for k in range(n)]


def test_evaluate_examples():
    assert evaluate(EPFn("", "ab"), 4) == "a"
    assert evaluate(EPFn("b", "a"), 0) == "b"
    assert evaluate(EPFn("b", "a"), 7) == "a"


def test_canonical_form():
    assert EPFn("", "abab") == EPFn("", "ab")
    assert EPFn("ab", "ab") == EPFn("", "ab")
    assert EPFn("b", "aabb") == EPFn("", "baab")
    assert EPFn("b", "a").prefix == ("b",)
    assert str(EPFn("b", "aabc")) == "b(aabc)"


@given(words, periods)
def test_canonical_form_keeps_values(prefix, period):
    assert values(EPFn(prefix, period)) == naive.seq(prefix, period)


@given(fns, fns)
def test_canonical_equality_is_extensional(f, g):
    assert (f == g) == (values(f) == values(g))


def test_compare_examples():
    e = compare(EPFn("", "a"), EPFn("", "ab"))
    assert e.e == {"a": "a", "b": "a"}
    assert compare(EPFn("", "ab"), EPFn("", "ba")).e == {"a": "b", "b": "a"}
    assert equivalent(EPFn("", "ab"), EPFn("", "ba"))
    assert compare(EPFn("", "ab"), EPFn("", "a")) is None


@settings(max_examples=300)
@given(fns, fns)
def test_compare_matches_long_enumeration(f, g):
    """The verification window agrees with enumeration far past it."""
    e = compare(f, g)
    ref = naive.compare(values(f, 4 * window(f, g) + 8), values(g, 4 * window(f, g) + 8))
    assert (e is None) == (ref is None)
    if e is not None:
        assert e.e == ref


@given(fns, fns, fns)
def test_compare_is_a_preorder(f, g, h):
    assert compare(f, f).e == {x: x for x in f.range()}
    e1, e2 = compare(f, g), compare(g, h)
    if e1 is not None and e2 is not None:
        e = compare(f, h)
        assert e is not None and e.e == e1.compose(e2).e


@given(fns, fns)
def test_compare_respects_cofinal_ranges(f, g):
    e = compare(f, g)
    if e is not None:
        assert e.image(cofinal_range(g)) <= cofinal_range(f)


def test_refine_examples():
    ab = EPFn("", "ab")
    assert equivalent(refine(ab, ab), ab)
    assert equivalent(refine(EPFn("", "a"), ab), ab)
    g = refine(ab, EPFn("", "aab"))
    assert len(g.period) == 6 and len(g.range()) == 4


@given(fns, fns)
def test_refine_is_an_upper_bound(f, g):
    h = refine(f, g)
    assert compare(f, h) is not None and compare(g, h) is not None


def test_refine_with_too_small_code():
    with pytest.raises(AlphabetExhausted):
        refine(EPFn("", "ab"), EPFn("", "aab"), {("a", "a"): "x"})


def test_tail_and_cofinal_ranges():
    assert tail_range(EPFn("", "a"), 10) == {"a"}
    assert tail_range(EPFn("b", "a"), 0) == {"a"}
    assert tail_range(EPFn("", "ab"), 3) == {"a", "b"}
    assert cofinal_range(EPFn("b", "a")) == {"a"}
    assert cofinal_range(EPFn("", "ab")) == {"a", "b"}
    g = FiniteFn(DIAMOND, {"bot": "a", "l": "b", "r": "b", "top": "b"})
    assert cofinal_range(g) == frozenset()
    assert tail_range(g, "bot") == {"b"}


@given(fns, st.integers(0, 20))
def test_tail_range_matches_enumeration(f, d):
    assert tail_range(f, d) == naive.tail(values(f), d)


@given(fns)
def test_cofinal_range_is_eventual_tail(f):
    assert cofinal_range(f)
    for d in range(len(f.prefix), len(f.prefix) + 3 * len(f.period) + 1):
        assert tail_range(f, d) == cofinal_range(f)


def test_preimage_examples():
    assert preimage(EPFn("", "ab"), {"a"}) == EPSet("", "10")
    assert preimage(EPFn("", "a"), {"a"}) == EPSet.everything()
    assert preimage(EPFn("", "a"), {"b"}) == EPSet.empty()


def test_epset_algebra():
    evens, odds = parse_epset("/10"), parse_epset("/01")
    assert (evens & odds).is_empty()
    assert (evens | odds) == EPSet.everything()
    assert ~evens == odds
    assert EPSet.tail(3) == parse_epset("0000/1")
    assert (evens - EPSet.tail(3)).is_finite()
    assert (evens & EPSet.tail(3)).almost_subset(evens) and not evens.almost_subset(odds)
    assert 4 in evens and 5 not in evens


@given(st.text("01", max_size=4), st.text("01", min_size=1, max_size=4),
       st.text("01", max_size=4), st.text("01", min_size=1, max_size=4))
def test_almost_subset_by_enumeration(p1, q1, p2, q2):
    A, B = EPSet(p1, q1), EPSet(p2, q2)
    a, b = naive.seq(p1, q1), naive.seq(p2, q2)
    late = range(naive.N // 2, naive.N)
    assert A.almost_subset(B) == all(a[k] == "0" or b[k] == "1" for k in late)
    assert A.issubset(B) == all(a[k] == "0" or b[k] == "1" for k in range(naive.N))


def test_replete_combine_examples():
    ab = EPFn("", "ab")
    g = replete_combine([(ab, "a")])
    assert preimage(g, {"i0"}) == EPSet("", "10") and preimage(g, {"i1"}) == EPSet("", "01")
    assert replete_combine([(EPFn("", "a"), "a")]) == EPFn((), ("i0",))
    g = replete_combine([(ab, "a"), (EPFn("", "a"), "a")])
    assert preimage(g, {"i0"}) == EPSet("", "10") and preimage(g, {"i2"}).is_empty()


def test_check_replete_examples():
    assert check_replete(Family([("c", EPFn("", "a"))]), 1).status == "pass"
    closed, _ = Family([("c", EPFn("", "a")), ("par", EPFn("", "ab"))]).closed_under_refine()
    assert check_replete(closed, 2).status == "pass"
    # a single fiber of the common refinement already asks for a two-block
    # partition {B, complement of B} that no member realises
    par, q = EPFn("", "ab"), EPFn("", "aab")
    fam = Family([("par", par), ("q", q), ("both", refine(par, q))])
    r = check_replete(fam, 2)
    assert r.status == "fail" and r.counterexample["fibers"] == [["both", "(a,a)"]]
    # evens and odds only ever recombine into the parity partition itself
    assert check_replete(Family([("par", par)]), 2).status == "pass"
    assert check_replete(fam, 2, budget=3).status == "indeterminate"


def test_characteristic_functions():
    assert has_characteristic_fn(Family([("par", EPFn("", "ab"))]), EPSet("", "10")) == ("par", frozenset({"a"}))
    assert has_characteristic_fn(Family([("c", EPFn("", "a"))]), EPSet("", "10")) is None
    assert has_characteristic_fn(Family([("c", EPFn("", "a"))]), EPSet.empty()) == ("c", frozenset())


def test_partition_key_is_equivalence():
    assert partition_key(EPFn("", "ab")) == partition_key(EPFn("", "ba"))
    assert partition_key(EPFn("", "ab")) != partition_key(EPFn("", "aab"))


def test_family_directedness():
    with pytest.raises(DirectednessError) as err:
        Family([("par", EPFn("", "ab")), ("q", EPFn("", "aab"))])
    assert err.value.pair == ("par", "q")
    # constants are <=-equivalent to each other, so this pair is directed
    Family([("c_a", EPFn("", "a")), ("c_b", EPFn("", "b"))])


def test_family_closure_is_directed():
    fam, added = Family([("par", EPFn("", "ab")), ("q", EPFn("", "aab"))], check=False).closed_under_refine()
    assert added == ["par*q"] and fam.non_directed_pair() is None


def test_bundled_families_are_directed():
    for sc in bundled():
        fam = sc.family
        for a, b in product(fam.names, repeat=2):
            assert fam.upper_bound(a, b) is not None


def test_finite_stabilisation():
    """An increasing sequence in a finite family is eventually constant up to equivalence."""
    for sc in bundled():
        fam = sc.family
        chain = [fam.names[0]]
        for name in fam.names:
            if fam.le(chain[-1], name):
                chain.append(name)
        top = chain[-1]
        assert all(fam.le(x, top) for x in chain)
        assert all(fam.le(x, top) for x in fam.names) or not fam.is_omega


def test_alphabet():
    al = Alphabet(("b", "a"))
    assert al.sort({"a", "b"}) == ("b", "a") and al.sigma == 2
    with pytest.raises(ValueError):
        Alphabet(("a", "a"))
