"""π-respecting isomorphisms H_{1,D} → H_{2,D} over (N,<).

A candidate isomorphism is encoded by an assignment f ↦ u_f and acts as
h(f,n,u) = (f,n,u Δ u_f), identity on I.  ``is_coherent_system`` is the
closed-form test; ``verify_iso_on_truncation`` replays every relation on a
finite level and serves as its independent oracle.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from itertools import combinations
from typing import Mapping

from .functions import Family, cofinal_range
from .indexing import DomainError
from .sharp import SharpWitness, verify_sharp
from .structures import build_level, group_of, identity_on_sorts, map_violations, popcount


class NotCoherent(ValueError):
    pass


@dataclass(frozen=True)
class CoherentViolation:
    condition: str  # "total" | "cofinal" | "odd" | "odd-image"
    function: str
    detail: str

    def to_json(self) -> dict:
        return {"condition": self.condition, "function": self.function, "detail": self.detail}


def normalize(family: Family, u: Mapping) -> dict:
    return {f: frozenset(u[f]) for f in family.names if f in u}


def is_coherent_system(family: Family, u: Mapping) -> CoherentViolation | None:
    """None when (cofinal, odd, odd-image) all hold, else the first failure."""
    u = normalize(family, u)
    for f in family.names:
        if f not in u:
            return CoherentViolation("total", f, "no u_f given")
    for f in family.names:
        extra = u[f] - cofinal_range(family[f])
        if extra:
            return CoherentViolation("cofinal", f, f"{sorted(extra, key=repr)} outside ran*")
    for f in family.names:
        if len(u[f]) % 2 == 0:
            return CoherentViolation("odd", f, f"|u_f| = {len(u[f])}")
    for lo, hi in family.comparable_pairs():
        if lo == hi:
            continue
        expect = family.compare(lo, hi).odd_image(u[hi])
        if u[lo] != expect:
            return CoherentViolation(
                "odd-image", lo,
                f"u_{lo} = {sorted(u[lo], key=repr)} but {hi} forces {sorted(expect, key=repr)}",
            )
    return None


def _odd_subsets(family: Family, symbols) -> list[frozenset]:
    syms = family.alphabet.sort(symbols)
    return [frozenset(c) for k in range(1, len(syms) + 1, 2) for c in combinations(syms, k)]


def propagate(family: Family, top: str, u_top) -> dict:
    """Every member lies below ``top``; push u_top down through odd images."""
    return {f: family.compare(f, top).odd_image(u_top) for f in family.names}


def decide_limit_iso(family: Family) -> dict | None:
    """First coherent system in canonical order, or None after exhausting the search."""
    if not family.is_omega:
        raise DomainError("limit isomorphisms are decided over (N,<) only")
    top = family.maximal()[0]
    for u_top in _odd_subsets(family, cofinal_range(family[top])):
        u = propagate(family, top, u_top)
        if is_coherent_system(family, u) is None:
            return u
    return None


def induced_map(family: Family, u: Mapping, level) -> dict:
    H1 = build_level(1, level, family)
    G = group_of(family)
    masks = {f: G.mask(s for s in u[f] if G.bit(s)) for f in family.names}
    return identity_on_sorts(H1, lambda a: (a[0], a[1], a[2] ^ masks[a[0]]))


def verify_iso_on_truncation(family: Family, u: Mapping, level) -> dict | None:
    """None if h restricted to the level is an isomorphism H_{1,d} → H_{2,d}.

    Otherwise the first violated symbol with its evidence, plus the list
    of every violated symbol.  Symbols of u_f
    outside the family's symbol set can never be realised and count as a
    map failure.
    """
    u = normalize(family, u)
    G = group_of(family)
    for f in family.names:
        if f not in u:
            return {"symbol": "map", "reason": f"u_{f} missing"}
        if any(not G.bit(s) for s in u[f]):
            return {"symbol": "map", "reason": f"u_{f} mentions symbols outside X"}
    H1 = build_level(1, level, family)
    H2 = build_level(2, level, family)
    bad = map_violations(H1, H2, induced_map(family, u, level), onto=True)
    if not bad:
        return None
    order = ["map", "pi", "F", "P", "D", "E'", "E", "R"]
    syms = sorted(bad, key=lambda s: order.index(s) if s in order else len(order))
    return {"symbol": syms[0], "symbols": syms, **bad[syms[0]]}


def truncation_verdict(family: Family, u: Mapping, max_level: int = 4) -> tuple[bool, dict | None]:
    """(passes at every level 1..max_level, first failure)."""
    for d in range(1, max_level + 1):
        bad = verify_iso_on_truncation(family, u, d)
        if bad is not None:
            return False, {"level": d, **bad}
    return True, None


def random_assignment(family: Family, rng: random.Random, base: Mapping | None = None) -> dict:
    """A random total assignment into subsets of X; when ``base`` is given,
    flip a few symbols of a few members."""
    X = family.symbols
    if base is None:
        return {f: frozenset(s for s in X if rng.random() < 0.5) for f in family.names}
    out = {f: set(v) for f, v in base.items()}
    for _ in range(rng.randint(1, 3)):
        f = rng.choice(family.names)
        out[f] ^= {rng.choice(X)}
    return {f: frozenset(v) for f, v in out.items()}


def check_characterization(family: Family, u_list, max_level: int = 4) -> dict:
    """Closed form and truncation oracle agree on every assignment given."""
    agree = 0
    for u in u_list:
        closed = is_coherent_system(family, u) is None
        oracle, evidence = truncation_verdict(family, u, max_level)
        if closed != oracle:
            return {
                "ok": False,
                "assignment": {f: family.alphabet.sort(v) for f, v in normalize(family, u).items()},
                "closed_form": closed,
                "oracle": oracle,
                "oracle_evidence": evidence,
            }
        agree += 1
    return {"ok": True, "agreed": agree}


def verify_h_properties(family: Family, u: Mapping, bound: int = 4) -> dict:
    """Recheck the structural facts about a coherent system item by item."""
    u = normalize(family, u)
    bad = is_coherent_system(family, u)
    if bad is not None:
        raise NotCoherent(f"{bad.condition} fails at {bad.function}")
    G = group_of(family)
    items = {}
    # (1) the shift read off at (f, n, ∅) is the same at every n and level
    shifts_ok = True
    for d in range(1, bound + 1):
        h = induced_map(family, u, d)
        for f in family.names:
            for n in family.order.predecessors(d):
                if set(G.subset(h[(f, n, 0)][2])) != set(u[f]):
                    shifts_ok = False
    items["shift-independent-of-level"] = shifts_ok
    # (2) h(f,n,u) = (f,n,u Δ u_f) on every element, checked against the oracle replay
    items["induced-form"] = all(verify_iso_on_truncation(family, u, d) is None for d in range(1, bound + 1))
    # (3) sizes grow along <=
    items["monotone-size"] = all(len(u[lo]) <= len(u[hi]) for lo, hi in family.comparable_pairs())
    items["nonempty"] = all(u[f] for f in family.names)
    items["cofinal-odd"] = all(u[f] <= cofinal_range(family[f]) and len(u[f]) % 2 for f in family.names)
    return {"ok": all(items.values()), "items": items}


def extract_sharp(family: Family, u: Mapping) -> SharpWitness:
    """f* := first maximal member; u restricted to the members above it."""
    u = normalize(family, u)
    bad = is_coherent_system(family, u)
    if bad is not None:
        raise NotCoherent(f"{bad.condition} fails at {bad.function}")
    fstar = family.maximal()[0]
    w = SharpWitness(fstar, {f: u[f] for f in family.above(fstar)}, ("f* is the first maximal member",))
    bad = verify_sharp(family, w)
    if bad is not None:
        raise AssertionError(f"extracted witness fails {bad.condition} at {bad.function}")
    return w


def system_to_json(family: Family, u: Mapping) -> dict:
    return {f: list(family.alphabet.sort(u[f])) for f in family.names if f in u}


def system_from_json(data: Mapping) -> dict:
    return {f: frozenset(v) for f, v in data.items()}


def mask_parity(mask: int) -> int:
    return popcount(mask) % 2
