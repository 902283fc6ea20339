"""The class K_σ: membership, closure, Galois types and amalgamation.

Membership reads the action clause cell-wise: the G-action preserves π and
Q and is regular on every nonempty (π, Q)-cell.  For structures with one
J-point this is the same as regularity on π-fibers.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Mapping

from .functions import EPSet, Family, preimage
from .indexing import DomainError
from .sharp import (
    DerivedFilter,
    PreconditionError,
    check_complete,
    check_filter_laws,
    check_measures,
    choose_markers,
    verify_sharp,
)
from .structures import (
    BINARY,
    GuardError,
    Group,
    SigmaStructure,
    apply_g,
    build_level,
    map_violations,
    qf_fingerprint,
    substructure_violation,
)

GENERIC_GUARD = 40


# ---- membership -----------------------------------------------------

@dataclass
class KMembershipReport:
    verdict: bool
    clauses: dict
    notes: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {"verdict": "pass" if self.verdict else "fail", "clauses": self.clauses, "notes": self.notes}


def cells(M: SigmaStructure) -> dict:
    """(π(a), Q(a)) -> elements, in carrier order."""
    out: dict = {}
    for a in M.A:
        out.setdefault((M.pi[a], M.Q[a] if M.Q is not None else None), []).append(a)
    return out


def _action_clause(M: SigmaStructure) -> dict:
    G = M.group
    for a in M.A:
        if M.act[(a, 0)] != a:
            return {"status": "fail", "reason": "F_0 is not the identity", "element": repr(a)}
        for c in G:
            b = M.act[(a, c)]
            if M.pi[b] != M.pi[a] or (M.Q is not None and M.Q[b] != M.Q[a]):
                return {"status": "fail", "reason": f"F_{c} leaves the cell", "element": repr(a)}
            for c2 in G:
                if M.act[(b, c2)] != M.act[(a, c ^ c2)]:
                    return {"status": "fail", "reason": "composition law", "element": repr(a), "c": [c, c2]}
    for cell, members in cells(M).items():
        if len(members) != G.size:
            return {"status": "fail", "reason": f"cell of size {len(members)}, group of size {G.size}", "cell": repr(cell)}
        x = members[0]
        if {M.act[(x, c)] for c in G} != set(members):
            return {"status": "fail", "reason": "not transitive on a cell", "cell": repr(cell)}
    return {"status": "pass"}


def _equivalence_failure(rel: frozenset, dom) -> str | None:
    for x in dom:
        if (x, x) not in rel:
            return f"not reflexive at {x!r}"
    for x, y in rel:
        if (y, x) not in rel:
            return f"not symmetric at {(x, y)!r}"
    succ: dict = {}
    for x, y in rel:
        succ.setdefault(x, set()).add(y)
    for x, y in rel:
        for z in succ.get(y, ()):
            if (x, z) not in rel:
                return f"not transitive at {x!r}, {y!r}, {z!r}"
    return None


def is_member(M: SigmaStructure) -> KMembershipReport:
    if M.J is None:
        raise PreconditionError("membership needs the J sort")
    clauses = {"action": _action_clause(M)}
    bad = _equivalence_failure(M.Eprime, M.A)
    if bad is None:
        bad = _equivalence_failure(M.E, M.A)
        bad = bad and "E " + bad
    else:
        bad = "E' " + bad
    if bad is None:
        kernel = frozenset((x, y) for x in M.A for y in M.A if M.pi[x] == M.pi[y])
        if kernel != M.Eprime:
            bad = "E' differs from the kernel of π"
    clauses["equivalences"] = {"status": "pass"} if bad is None else {"status": "fail", "reason": bad}
    present = {(M.pi[a], M.Q[a]) for a in M.A}
    missing = [(i, j) for i in M.I for j in M.J if (i, j) not in present]
    clauses["onto"] = {"status": "pass"} if not missing else {"status": "fail", "missing": repr(missing[0])}
    notes = ["action read as regular on each (pi, Q)-cell"]
    if not M.E <= M.Eprime:
        notes.append("E does not refine E' (allowed)")
    verdict = all(c["status"] == "pass" for c in clauses.values())
    return KMembershipReport(verdict, clauses, notes)


# ---- closure --------------------------------------------------------

def closure_sets(M: SigmaStructure, X: Iterable) -> tuple[set, set, set]:
    X = set(X)
    for x in X:
        if M.sort_of(x) is None:
            raise DomainError(f"{x!r} is not in the structure")
    XA = [a for a in M.A if a in X]
    Js = {j for j in (M.J or ()) if j in X} | ({M.Q[a] for a in XA} if M.Q is not None else set())
    Is = {i for i in M.I if i in X} | {M.pi[a] for a in XA}
    As = {a for a in M.A if M.pi[a] in Is and (M.Q is None or M.Q[a] in Js)}
    return As, Is, Js


def closure(M: SigmaStructure, X: Iterable) -> SigmaStructure:
    As, Is, Js = closure_sets(M, X)
    for a in As:
        for c in M.group:
            if M.act[(a, c)] not in As:
                raise DomainError(f"F_{c} leaves the closure at {a!r}; not a member")
    return M.restrict(As | Is | Js)


def _orbits(M: SigmaStructure) -> list[frozenset]:
    seen: set = set()
    out = []
    for a in M.A:
        if a in seen:
            continue
        stack, orb = [a], {a}
        while stack:
            x = stack.pop()
            for c in M.group:
                y = M.act[(x, c)]
                if y not in orb:
                    orb.add(y)
                    stack.append(y)
        seen |= orb
        out.append(frozenset(orb))
    return out


def least_substructure_bruteforce(M: SigmaStructure, X: Iterable, guard: int = GENERIC_GUARD) -> frozenset | None:
    """Intersection of every member substructure containing X, found by
    enumerating subsets of I, J and unions of F-orbits.  None when that
    intersection is not itself one of them."""
    if len(M) > guard:
        raise GuardError(f"{len(M)} elements exceed the brute-force guard {guard}")
    X = set(X)
    orbits = _orbits(M)
    I, J = list(M.I), list(M.J or ())
    found: list[frozenset] = []
    for ki in range(len(I) + 1):
        for Isub in combinations(I, ki):
            Iset = set(Isub)
            if not {x for x in X if M.sort_of(x) == "I"} <= Iset:
                continue
            for kj in range(len(J) + 1):
                for Jsub in combinations(J, kj):
                    Jset = set(Jsub)
                    if not {x for x in X if M.sort_of(x) == "J"} <= Jset:
                        continue
                    allowed = [o for o in orbits if all(M.pi[a] in Iset and M.Q[a] in Jset for a in o)]
                    forced = [o for o in allowed if o & X]
                    if any(M.sort_of(x) == "A" and not any(x in o for o in forced) for x in X):
                        continue
                    free = [o for o in allowed if not (o & X)]
                    for k in range(len(free) + 1):
                        for pick in combinations(free, k):
                            carrier = Iset | Jset | set().union(*forced, *pick)
                            sub = M.restrict(carrier)
                            if is_member(sub).verdict:
                                found.append(frozenset(carrier))
    if not found:
        return None
    meet = frozenset.intersection(*found)
    return meet if meet in found else None


def closure_certificate(M: SigmaStructure, X: Iterable) -> dict:
    """Why every member substructure containing X contains the closure:
    each cell over the closed I×J part is a single F-orbit."""
    As, Is, Js = closure_sets(M, X)
    cs = cells(M)
    for i in Is:
        for j in Js:
            members = cs.get((i, j), [])
            if not members:
                return {"ok": False, "reason": f"cell {(i, j)!r} is empty"}
            x = members[0]
            if {M.act[(x, c)] for c in M.group} != set(members):
                return {"ok": False, "reason": f"cell {(i, j)!r} is not one orbit"}
    return {"ok": True, "cells": len(Is) * len(Js)}


def check_admits_intersections(M: SigmaStructure, samples: Iterable[Iterable], guard: int = GENERIC_GUARD,
                               certificate: bool = False) -> dict:
    checked = 0
    for X in samples:
        X = set(X)
        C = closure(M, X)
        carrier = set(C.carrier())
        if not X <= carrier:
            return {"status": "fail", "sample": repr(sorted(X, key=repr)), "reason": "closure misses X"}
        if substructure_violation(C, M) is not None:
            return {"status": "fail", "sample": repr(sorted(X, key=repr)), "reason": "closure is not a substructure"}
        if len(M) <= guard:
            least = least_substructure_bruteforce(M, X, guard)
            if least != frozenset(carrier):
                return {"status": "fail", "sample": repr(sorted(X, key=repr)), "reason": "closure differs from least substructure"}
        elif certificate:
            cert = closure_certificate(M, X)
            if not cert["ok"] or not is_member(C).verdict:
                return {"status": "fail", "sample": repr(sorted(X, key=repr)), "reason": cert.get("reason", "closure not a member")}
        else:
            raise GuardError(f"{len(M)} elements exceed the guard {guard}; use certificate mode")
        checked += 1
    return {"status": "pass", "checked": checked}


# ---- Galois types ---------------------------------------------------

class GaloisTypeHandle:
    """gtp(a / base; ambient); ``base`` is a substructure or a set of elements."""

    def __init__(self, base, ambient: SigmaStructure, element):
        if ambient.sort_of(element) is None:
            raise DomainError(f"{element!r} is not in the ambient structure")
        if isinstance(base, SigmaStructure):
            bad = substructure_violation(base, ambient)
            if bad is not None:
                raise PreconditionError(f"base is not a substructure: {bad}")
            self.base_carrier = frozenset(base.carrier())
            self.base_key = base.key()
        else:
            closed = closure(ambient, base)
            self.base_carrier = frozenset(closed.carrier())
            self.base_key = closed.key()
        self.ambient = ambient
        self.element = element
        self.closure = closure(ambient, set(self.base_carrier) | {element})


@dataclass
class TypeResult:
    equal: bool
    witness: dict | None
    method: str
    explored: int

    def to_json(self) -> dict:
        return {
            "equal": self.equal,
            "method": self.method,
            "explored": self.explored,
            "witness_size": None if self.witness is None else len(self.witness),
        }


class _Search:
    def __init__(self, C1: SigmaStructure, C2: SigmaStructure, fixed: Mapping):
        self.C1, self.C2 = C1, C2
        self.h: dict = {}
        self.used: set = set()
        self.explored = 0
        self.ok = all(self.assign(x, y) for x, y in fixed.items())
        if self.ok:
            rest = [x for x in list(C1.I) + list(C1.J or ()) if x not in self.h]
            self.ok = not rest
        self.rel1 = {r: C1.relation(r) for r in BINARY}
        self.rel2 = {r: C2.relation(r) for r in BINARY}

    def assign(self, x, y) -> bool:
        """Add x ↦ y and everything it forces through π, Q and F."""
        stack = [(x, y)]
        while stack:
            x, y = stack.pop()
            if x in self.h:
                if self.h[x] != y:
                    return False
                continue
            if self.C1.sort_of(x) != self.C2.sort_of(y) or y in self.used:
                return False
            self.h[x] = y
            self.used.add(y)
            if self.C1.sort_of(x) == "A":
                stack.append((self.C1.pi[x], self.C2.pi[y]))
                if self.C1.Q is not None:
                    stack.append((self.C1.Q[x], self.C2.Q[y]))
                for c in self.C1.group:
                    stack.append((self.C1.act[(x, c)], self.C2.act[(y, c)]))
        return True

    def unary_ok(self, x, y) -> bool:
        if (x in self.C1.P) != (y in self.C2.P):
            return False
        return all((x in self.C1.D[v]) == (y in self.C2.D[v]) for v in self.C1.group)

    def binary_ok(self, new: Iterable) -> bool:
        h = self.h
        assigned = [a for a in self.C1.A if a in h]
        for x in new:
            hx = h[x]
            for y in assigned:
                hy = h[y]
                for r in BINARY:
                    if ((x, y) in self.rel1[r]) != ((hx, hy) in self.rel2[r]):
                        return False
                    if ((y, x) in self.rel1[r]) != ((hy, hx) in self.rel2[r]):
                        return False
        return True

    def snapshot(self):
        return dict(self.h), set(self.used)

    def restore(self, snap):
        self.h, self.used = dict(snap[0]), set(snap[1])


def _regular_cells(M: SigmaStructure) -> dict | None:
    """cell -> (base, coordinate map) when every cell is a regular orbit."""
    out = {}
    for cell, members in cells(M).items():
        b = members[0]
        coord = {}
        for c in M.group:
            coord.setdefault(M.act[(b, c)], c)
        if len(coord) != len(members) or len(members) != M.group.size:
            return None
        out[cell] = (b, coord)
    return out


def _fiber_shift(C1, C2, fixed) -> TypeResult:
    S = _Search(C1, C2, fixed)
    if not S.ok:
        return TypeResult(False, None, "fiber-shift", 0)
    reg1, reg2 = _regular_cells(C1), _regular_cells(C2)
    if reg1 is None or reg2 is None:
        raise DomainError("fiber-shift search needs regular cells on both sides")
    G = C1.group
    order = list(reg1)
    order.sort(key=lambda cell: 0 if any(a in S.h for a in cells(C1)[cell]) else 1)

    def image_cell(cell):
        i, j = cell
        return (S.h[i], S.h[j] if j is not None else None)

    start = S.snapshot()
    if not S.binary_ok([a for a in C1.A if a in S.h]) or not all(S.unary_ok(a, S.h[a]) for a in C1.A if a in S.h):
        return TypeResult(False, None, "fiber-shift", 0)

    def go(k: int) -> bool:
        if k == len(order):
            return True
        cell = order[k]
        b1, coord1 = reg1[cell]
        target = image_cell(cell)
        if target not in reg2:
            return False
        b2, _ = reg2[target]
        if b1 in S.h:
            shifts = [next(c for c in G if C2.act[(b2, c)] == S.h[b1])]
        else:
            shifts = list(G)
        for s in shifts:
            S.explored += 1
            snap = S.snapshot()
            y = C2.act[(b2, s)]
            if S.assign(b1, y):
                members = cells(C1)[cell]
                if all(S.unary_ok(a, S.h[a]) for a in members) and S.binary_ok(members) and go(k + 1):
                    return True
            S.restore(snap)
        return False

    found = go(0)
    if not found:
        S.restore(start)
        return TypeResult(False, None, "fiber-shift", S.explored)
    return TypeResult(True, dict(S.h), "fiber-shift", S.explored)


def _generic(C1, C2, fixed, guard: int = GENERIC_GUARD) -> TypeResult:
    if len(C1) > guard or len(C2) > guard:
        raise GuardError(f"generic search is limited to {guard} elements")
    if len(C1.A) != len(C2.A):
        return TypeResult(False, None, "generic", 0)
    S = _Search(C1, C2, fixed)
    if not S.ok:
        return TypeResult(False, None, "generic", 0)
    fp2 = {y: qf_fingerprint(C2, (y,)) for y in C2.A}
    fp1 = {x: qf_fingerprint(C1, (x,)) for x in C1.A}
    if not all(fp1[a] == fp2[S.h[a]] for a in C1.A if a in S.h) or not S.binary_ok([a for a in C1.A if a in S.h]):
        return TypeResult(False, None, "generic", 0)

    def go() -> bool:
        todo = [a for a in C1.A if a not in S.h]
        if not todo:
            return True
        x = todo[0]
        for y in C2.A:
            if y in S.used or fp1[x] != fp2[y]:
                continue
            if C2.pi[y] != S.h.get(C1.pi[x]) or (C1.Q is not None and C2.Q[y] != S.h.get(C1.Q[x])):
                continue
            S.explored += 1
            snap = S.snapshot()
            before = set(S.h)
            if S.assign(x, y):
                new = [a for a in C1.A if a in S.h and a not in before]
                if all(fp1[a] == fp2[S.h[a]] for a in new) and S.binary_ok(new) and go():
                    return True
            S.restore(snap)
        return False

    if go():
        return TypeResult(True, dict(S.h), "generic", S.explored)
    return TypeResult(False, None, "generic", S.explored)


def galois_type_equal(t1: GaloisTypeHandle, t2: GaloisTypeHandle, method: str = "auto") -> TypeResult:
    if t1.base_carrier != t2.base_carrier or t1.base_key != t2.base_key:
        raise PreconditionError("the two types are over different bases")
    C1, C2 = t1.closure, t2.closure
    fixed = {x: x for x in t1.base_carrier}
    fixed[t1.element] = t2.element
    if t1.element in t1.base_carrier and t1.element != t2.element:
        return TypeResult(False, None, "base", 0)
    if method == "auto":
        method = "fiber-shift" if _regular_cells(C1) is not None and _regular_cells(C2) is not None else "generic"
    if method == "fiber-shift":
        res = _fiber_shift(C1, C2, fixed)
    elif method == "generic":
        res = _generic(C1, C2, fixed)
    else:
        raise DomainError(f"unknown search method {method!r}")
    if res.equal:
        bad = map_violations(C1, C2, res.witness, onto=True)
        if bad:
            raise AssertionError(f"search produced a non-isomorphism: {bad}")
    return res


def level_types(family: Family, d) -> tuple[GaloisTypeHandle, GaloisTypeHandle]:
    """(p_d, q_d): the types of i1 and i2 over M_{0,d}."""
    M0 = build_level(0, d, family)
    M1 = build_level(1, d, family, expand=True)
    M2 = build_level(2, d, family, expand=True)
    return GaloisTypeHandle(M0, M1, "i1"), GaloisTypeHandle(M0, M2, "i2")


def g_witness(family: Family, d) -> dict:
    M1 = build_level(1, d, family, expand=True)
    h = {a: apply_g(family, d, a) for a in M1.A}
    h.update({i: i for i in M1.I})
    h["i1"] = "i2"
    return h


def check_level_types(family: Family, d, generic_too: bool = True) -> dict:
    p, q = level_types(family, d)
    res = galois_type_equal(p, q)
    out = {"level": d, "equal": res.equal, "method": res.method, "explored": res.explored}
    direct = map_violations(p.closure, q.closure, g_witness(family, d), onto=True)
    out["g_witness"] = not direct
    if generic_too and len(p.closure) <= GENERIC_GUARD:
        out["generic"] = galois_type_equal(p, q, "generic").equal
    return out


# ---- embeddings and amalgamation ------------------------------------

@dataclass
class Embedding:
    src: SigmaStructure
    dst: SigmaStructure
    h: dict

    def violations(self) -> dict:
        return map_violations(self.src, self.dst, self.h)

    def to_json(self) -> list:
        return [[repr(x), repr(y)] for x, y in self.h.items()]


def _fresh(x, taken: set):
    y = x
    while y in taken:
        y = ("2", y)
    return y


def rename_apart(M0: SigmaStructure, M1: SigmaStructure, M2: SigmaStructure) -> tuple[SigmaStructure, dict]:
    """Rename elements of M2 outside M0 that clash with M1."""
    from .structures import transport

    base = set(M0.carrier())
    taken = set(M1.carrier()) | set(M2.carrier())
    ren = {}
    for x in M2.carrier():
        if x in base or x not in set(M1.carrier()):
            ren[x] = x
        else:
            y = _fresh(x, taken)
            taken.add(y)
            ren[x] = y
    return transport(M2, lambda x: ren[x]), ren


def amalgamate(M0: SigmaStructure, M1: SigmaStructure, M2: SigmaStructure):
    """(M*, f1, f2) with A* = I* × G × J*."""
    for name, M in (("M0", M0), ("M1", M1), ("M2", M2)):
        if M.J is None:
            raise PreconditionError(f"{name} has no J sort")
        if not is_member(M).verdict:
            raise PreconditionError(f"{name} is not a member")
    for name, M in (("M1", M1), ("M2", M2)):
        bad = substructure_violation(M0, M)
        if bad is not None:
            raise PreconditionError(f"M0 is not a substructure of {name}: {bad}")
    if not (M0.group == M1.group == M2.group):
        raise PreconditionError("different groups")
    M2, ren = rename_apart(M0, M1, M2)
    G = M1.group
    Istar = list(M1.I) + [i for i in M2.I if i not in set(M1.I)]
    Jstar = list(M1.J) + [j for j in M2.J if j not in set(M1.J)]
    I0, J0 = set(M0.I), set(M0.J)

    def base_points(M):
        out = {}
        for (i, j), members in cells(M).items():
            if i in I0 and j in J0:
                members = [a for a in M0.A if M0.pi[a] == i and M0.Q[a] == j]
            out[(i, j)] = members[0]
        return out

    maps = []
    for M in (M1, M2):
        h = {x: x for x in list(M.I) + list(M.J)}
        for (i, j), b in base_points(M).items():
            for c in G:
                h[M.act[(b, c)]] = ("A*", i, c, j)
        maps.append(h)
    Astar = [("A*", i, c, j) for i in Istar for c in G for j in Jstar]
    act = {(a, c): ("A*", a[1], a[2] ^ c, a[3]) for a in Astar for c in G}
    P, D, E, R = set(), {v: set() for v in G}, set(), set()
    for M, h in zip((M1, M2), maps):
        P |= {h[a] for a in M.P}
        for v in G:
            D[v] |= {h[a] for a in M.D[v]}
        E |= {(h[x], h[y]) for x, y in M.E}
        R |= {(h[x], h[y]) for x, y in M.R}
    Eclosed = _equivalence_closure(E, Astar)
    Eprime = frozenset((x, y) for x in Astar for y in Astar if x[1] == y[1])
    Mstar = SigmaStructure(
        G, Astar, Istar, Jstar,
        {a: a[1] for a in Astar}, {a: a[3] for a in Astar}, act,
        frozenset(P), {v: frozenset(s) for v, s in D.items()}, Eprime, Eclosed, frozenset(R),
    )
    f1 = Embedding(M1, Mstar, maps[0])
    f2 = Embedding(M2, Mstar, maps[1])
    return Mstar, f1, f2, ren


def _equivalence_closure(pairs: set, dom) -> frozenset:
    parent = {x: x for x in dom}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for x, y in pairs:
        rx, ry = find(x), find(y)
        if rx != ry:
            parent[rx] = ry
    classes: dict = {}
    for x in dom:
        classes.setdefault(find(x), []).append(x)
    return frozenset((x, y) for cls in classes.values() for x in cls for y in cls)


def check_amalgam(M0, M1, M2) -> dict:
    Mstar, f1, f2, ren = amalgamate(M0, M1, M2)
    out = {"size": len(Mstar.A), "member": is_member(Mstar).verdict}
    out["f1"] = f1.violations()
    out["f2"] = f2.violations()
    out["agree"] = all(f1.h[x] == f2.h[ren[x]] for x in M0.carrier())
    out["ok"] = out["member"] and not out["f1"] and not out["f2"] and out["agree"]
    return out


# ---- random small members -------------------------------------------

def _random_relations(rng: random.Random, G: Group, A: list, keep: SigmaStructure | None):
    old = set(keep.A) if keep else set()
    P = {a for a in A if (a in keep.P if a in old else rng.random() < 0.5)}
    D = {v: {a for a in A if (a in keep.D[v] if a in old else rng.random() < 0.3)} for v in G}
    # E: refine the old classes, put each new element in a random old class or a new one
    label = {}
    if keep:
        for x in keep.A:
            label[x] = min((y for y in keep.A if (x, y) in keep.E), key=repr)
    labels = sorted(set(label.values()), key=repr)
    for a in A:
        if a not in label:
            label[a] = rng.choice(labels) if labels and rng.random() < 0.5 else a
            labels = sorted(set(label.values()), key=repr)
    E = {(x, y) for x in A for y in A if label[x] == label[y]}
    R = set(keep.R) if keep else set()
    for x in A:
        for y in A:
            if (x in old and y in old) or (x, y) in R:
                continue
            if rng.random() < 0.1:
                R.add((x, y))
    return P, D, E, R


def random_member(rng: random.Random, G: Group, I: list, J: list, keep: SigmaStructure | None = None,
                  tag: str = "m") -> SigmaStructure:
    """A member over I×J; cells already in ``keep`` are copied verbatim."""
    A, pi, Q, act = [], {}, {}, {}
    if keep is not None:
        A = list(keep.A)
        pi.update(keep.pi)
        Q.update(keep.Q)
        act.update(keep.act)
    have = {(pi[a], Q[a]) for a in A}
    k = 0
    for i in I:
        for j in J:
            if (i, j) in have:
                continue
            twist = rng.randrange(G.size)
            names = {}
            for c in G:
                names[c] = f"{tag}{k}"
                k += 1
            for c in G:
                a = names[c ^ twist]
                A.append(a)
                pi[a], Q[a] = i, j
            for c in G:
                for c2 in G:
                    act[(names[c], c2)] = names[c ^ c2]
    P, D, E, R = _random_relations(rng, G, A, keep)
    Eprime = {(x, y) for x in A for y in A if pi[x] == pi[y]}
    return SigmaStructure(G, A, I, J, pi, Q, act, frozenset(P), {v: frozenset(s) for v, s in D.items()},
                          frozenset(Eprime), frozenset(E), frozenset(R))


def random_triple(seed: int) -> tuple[SigmaStructure, SigmaStructure, SigmaStructure]:
    """M0 ≺ M1, M0 ≺ M2 with at most two I- and J-points added on each side.

    Both extensions draw element names from the same pool, so they usually
    clash outside M0 and exercise the renaming step."""
    rng = random.Random(seed)
    G = Group(("a", "b")[: rng.choice((1, 2))])
    I0 = [f"i{k}" for k in range(rng.randint(0, 2))]
    J0 = [f"j{k}" for k in range(rng.randint(0, 1))]
    M0 = random_member(rng, G, I0, J0, tag="z")

    def extend(tag_i):
        I = I0 + [f"{tag_i}{k}" for k in range(rng.randint(0, 2))]
        J = J0 + [f"k{k}" for k in range(rng.randint(0 if J0 else 1, 1))]
        return random_member(rng, G, I, J, keep=M0, tag="n")

    return M0, extend("x"), extend("x")


def random_member_small(seed: int) -> SigmaStructure:
    rng = random.Random(seed)
    G = Group(("a",) if rng.random() < 0.6 else ("a", "b"))
    I = [f"i{k}" for k in range(rng.randint(1, 3))]
    J = [f"j{k}" for k in range(rng.randint(1, 2))]
    return random_member(rng, G, I, J)


# ---- tameness report ------------------------------------------------

def filter_pool(family: Family, thresholds: Iterable[int]) -> list[EPSet]:
    """Tails and all fibers f^-1{x}, with their complements."""
    pool: list[EPSet] = []
    for d in thresholds:
        pool.append(EPSet.tail(d))
    for name, x in family.fibers():
        pool.append(preimage(family[name], {x}))
    pool += [~A for A in list(pool)]
    seen, out = set(), []
    for A in pool:
        if A not in seen:
            seen.add(A)
            out.append(A)
    return out


def pipeline_checks(family: Family, witness, thresholds=range(0, 6), max_list: int = 8, marker=None) -> dict:
    """Filter laws, completeness over member lists and measuring for a witness."""
    out = {"verify_sharp": verify_sharp(family, witness) is None}
    markers = choose_markers(family, witness, marker) if marker is not None else None
    U = DerivedFilter(family, witness, markers)
    pool = filter_pool(family, thresholds)
    out["filter_laws"] = check_filter_laws(U, pool, thresholds)["status"] == "pass"
    members = [A for A in pool if A in U]
    lists = 0
    complete = True
    for k in range(1, min(max_list, len(members)) + 1):
        for combo in combinations(members, k):
            lists += 1
            ok, _ = check_complete(U, combo)
            complete = complete and ok
    out["complete"] = complete
    out["complete_lists"] = lists
    measured = 0
    for name in family.names:
        rng_ = family.alphabet.sort(family[name].range())
        for k in range(len(rng_) + 1):
            for X in combinations(rng_, k):
                check_measures(U, name, X)
                measured += 1
    out["measures"] = measured
    out["ok"] = out["verify_sharp"] and out["filter_laws"] and out["complete"]
    return out


def tameness_report(family: Family, bound: int = 4, marker=None) -> dict:
    from .limit import decide_limit_iso, extract_sharp, system_to_json

    out: dict = {"locality": "the resolution <M_{l,d}>_d of the limit models is the test family"}
    if family.is_omega:
        levels = list(range(1, bound + 1))
    else:
        levels = list(family.order.elements)
    out["levels"] = [check_level_types(family, d, generic_too=False) for d in levels]
    out["levels_equal"] = all(r["equal"] and r["g_witness"] for r in out["levels"])
    if not family.is_omega:
        out["limit"] = {"status": "declined", "reason": "limit types are built over (N,<) only"}
        return out
    u = decide_limit_iso(family)
    if u is None:
        out["limit"] = {"status": "distinct"}
        return out
    w = extract_sharp(family, u)
    out["limit"] = {
        "status": "equal",
        "system": system_to_json(family, u),
        "witness": w.to_json(family),
        "pipeline": pipeline_checks(family, w, marker=marker),
    }
    return out
