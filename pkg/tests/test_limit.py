import random

import pytest
from hypothesis import given, settings, strategies as st

import naive
from tamelab.functions import EPFn, Family
from tamelab.indexing import DomainError
from tamelab.limit import (
    NotCoherent,
    check_characterization,
    decide_limit_iso,
    extract_sharp,
    is_coherent_system,
    random_assignment,
    system_from_json,
    system_to_json,
    truncation_verdict,
    verify_h_properties,
    verify_iso_on_truncation,
)
from tamelab.scenario import bundled, load_scenario
from tamelab.sharp import DerivedFilter, check_filter_laws, verify_sharp

S0 = load_scenario("s0").family
S1 = load_scenario("s1").family
OMEGA = [sc for sc in bundled() if sc.family.is_omega]
S1_SYSTEM = {"c_a": frozenset("a"), "c_b": frozenset("b"), "par": frozenset("a")}


def naive_iso(fam, u, d) -> bool:
    """h(f,n,w) = (f,n,w Δ u_f) against the side-two level, all from value lists.

    The side-two level is the transport along g_d, so a relation holds
    of h(x) there iff it holds of g_d(h(x)) in the side-one level.
    """
    ref = naive.Level({f: ("".join(fam[f].prefix), "".join(fam[f].period)) for f in fam.names}, d)

    def k(x):
        f, n, w = x
        w = w ^ u[f]
        return (f, n, w ^ frozenset({ref.fns[f][d]}))

    G = ref.G
    for x in ref.A:
        if ref.P(x) != ref.P(k(x)):
            return False
        if any(ref.D(v, x) != ref.D(v, k(x)) for v in G):
            return False
    for x in ref.A:
        for y in ref.A:
            if ref.R(x, y) != ref.R(k(x), k(y)):
                return False
            if ref.E_chain(x, y) != ref.E_chain(k(x), k(y)):
                return False
    return True


def test_coherence_examples():
    assert is_coherent_system(S1, S1_SYSTEM) is None
    bad = is_coherent_system(S1, {**S1_SYSTEM, "par": frozenset("ab")})
    assert bad.condition == "odd" and bad.function == "par"
    assert is_coherent_system(S0, {"const_a": {"a"}}) is None
    assert is_coherent_system(S1, {"c_a": {"a"}}).condition == "total"
    fam = Family([("c", EPFn("", "a")), ("f", EPFn("b", "a"))])
    assert is_coherent_system(fam, {"c": {"a"}, "f": {"b"}}).condition == "cofinal"
    bad = is_coherent_system(S1, {**S1_SYSTEM, "c_a": frozenset("b")})
    assert bad.condition == "cofinal"


def test_decide_examples():
    assert decide_limit_iso(S0) == {"const_a": frozenset("a")}
    assert decide_limit_iso(S1) == S1_SYSTEM
    for sc in OMEGA:
        u = decide_limit_iso(sc.family)
        assert u is not None and is_coherent_system(sc.family, u) is None
    with pytest.raises(DomainError):
        decide_limit_iso(load_scenario("diamond").family)


def test_truncation_examples():
    for d in range(1, 5):
        assert verify_iso_on_truncation(S1, S1_SYSTEM, d) is None
    bad = verify_iso_on_truncation(S1, {**S1_SYSTEM, "par": frozenset("ab")}, 2)
    assert bad["symbol"] == "P"
    # breaking the odd-image condition also breaks parity first; R is among the failures
    bad = verify_iso_on_truncation(S1, {**S1_SYSTEM, "c_a": frozenset("b")}, 2)
    assert "R" in bad["symbols"]


def test_truncation_r_alone():
    # f and f_swapped are mutually <= via the swap a <-> b, so equal shifts clash
    fam = load_scenario("s4").family
    u = {"c_a": {"a"}, "c_b": {"b"}, "f": {"a"}, "f_swapped": {"a"}}
    assert verify_iso_on_truncation(fam, u, 2)["symbols"] == ["R"]
    assert is_coherent_system(fam, u).condition == "odd-image"
    # collapsing a, b to a sends {b} to {a}, so this pair is coherent
    fam = Family([("c_a", EPFn("", "a")), ("par", EPFn("", "ab"))])
    assert is_coherent_system(fam, {"c_a": {"a"}, "par": {"b"}}) is None


@pytest.mark.parametrize("fam", [S0, S1, load_scenario("s4").family], ids=["S0", "S1", "S4"])
def test_truncation_matches_enumeration(fam):
    rng = random.Random(7)
    found = decide_limit_iso(fam)
    samples = [found] + [random_assignment(fam, rng, found) for _ in range(6)]
    samples += [random_assignment(fam, rng) for _ in range(6)]
    for u in samples:
        for d in (1, 2):
            assert (verify_iso_on_truncation(fam, u, d) is None) == naive_iso(fam, u, d)


@pytest.mark.parametrize("sc", OMEGA, ids=lambda s: s.name)
def test_characterization(sc):
    fam = sc.family
    rng = random.Random(0)
    found = decide_limit_iso(fam)
    samples = [found] + [random_assignment(fam, rng, found) for _ in range(20)]
    samples += [random_assignment(fam, rng) for _ in range(20)]
    assert check_characterization(fam, samples)["ok"]


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(OMEGA), st.randoms(use_true_random=False))
def test_characterization_random(sc, rng):
    fam = sc.family
    u = random_assignment(fam, rng)
    closed = is_coherent_system(fam, u) is None
    assert closed == truncation_verdict(fam, u, 3)[0]


def test_h_properties():
    r = verify_h_properties(S1, S1_SYSTEM)
    assert r["ok"] and len(r["items"]) == 5
    fam = Family([("c_a", EPFn("", "a")), ("par", EPFn("", "ab"))])
    u = decide_limit_iso(fam)
    assert len(u["c_a"]) == 1 <= len(u["par"])
    with pytest.raises(NotCoherent):
        verify_h_properties(S1, {**S1_SYSTEM, "par": frozenset("ab")})


def test_monotone_sizes():
    for sc in OMEGA:
        fam = sc.family
        u = decide_limit_iso(fam)
        for lo, hi in fam.comparable_pairs():
            assert len(u[lo]) <= len(u[hi])


def test_extract_examples():
    w = extract_sharp(S1, S1_SYSTEM)
    assert w.fstar == "par" and w.u["par"] == {"a"}
    assert extract_sharp(S0, {"const_a": {"a"}}).fstar == "const_a"
    with pytest.raises(NotCoherent):
        extract_sharp(S1, {**S1_SYSTEM, "par": frozenset("ab")})


@pytest.mark.parametrize("sc", OMEGA, ids=lambda s: s.name)
def test_extract_pipeline(sc):
    fam = sc.family
    w = extract_sharp(fam, decide_limit_iso(fam))
    assert verify_sharp(fam, w) is None
    U = DerivedFilter(fam, w)
    assert check_filter_laws(U, list(U.generators.values()), range(4))["status"] == "pass"


def test_system_json():
    data = system_to_json(S1, S1_SYSTEM)
    assert data == {"c_a": ["a"], "c_b": ["b"], "par": ["a"]}
    assert system_from_json(data) == S1_SYSTEM
