"""Multi-sorted structures over the group G = ([X]^<ω, Δ).

Group elements are bitmasks over the family's symbol set X (bit k is the
k-th symbol in alphabet order), so Δ is ``^``.  A-sort elements of the
concrete structures are triples ``(f, n, u)``, I-sort elements are pairs
``(f, n)``, and J-sort elements are plain labels.

Relation symbols are named ``"P"``, ``("D", v)``, ``"E'"``, ``"E"``,
``"R"``; function symbols ``"pi"``, ``"Q"``, ``("F", c)``.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from itertools import combinations
from typing import Callable, Iterable, Mapping

from .functions import EPFn, Family, tail_range
from .indexing import DomainError, OmegaOrder

MAX_SIGMA = 8
BINARY = ("E'", "E", "R")


class GuardError(ValueError):
    """A configured size guard was exceeded."""


class Group:
    """([X]^<ω, Δ) with X finite: all subsets of ``symbols`` as bitmasks."""

    def __init__(self, symbols: Iterable):
        self.symbols = tuple(symbols)
        if len(self.symbols) > MAX_SIGMA:
            raise GuardError(f"|X| = {len(self.symbols)} exceeds the guard {MAX_SIGMA}")
        self._bit = {s: 1 << k for k, s in enumerate(self.symbols)}
        self.size = 1 << len(self.symbols)
        self.full = self.size - 1

    def __eq__(self, other):
        return isinstance(other, Group) and other.symbols == self.symbols

    def __hash__(self):
        return hash(self.symbols)

    def __repr__(self):
        return f"Group({self.symbols})"

    def __iter__(self):
        return iter(range(self.size))

    def mask(self, syms: Iterable) -> int:
        m = 0
        for s in syms:
            m |= self._bit[s]
        return m

    def bit(self, s) -> int:
        return self._bit.get(s, 0)

    def subset(self, m: int) -> tuple:
        return tuple(s for k, s in enumerate(self.symbols) if m >> k & 1)


def group_delta(u: frozenset, v: frozenset) -> frozenset:
    return frozenset(u) ^ frozenset(v)


def popcount(m: int) -> int:
    return bin(m).count("1")


def group_of(family: Family) -> Group:
    g = getattr(family, "_group", None)
    if g is None:
        g = Group(family.symbols)
        family._group = g
    return g


def _tuplify(x):
    if isinstance(x, list):
        return tuple(_tuplify(y) for y in x)
    return x


def _listify(x):
    if isinstance(x, tuple):
        return [_listify(y) for y in x]
    return x


@dataclass(eq=False)
class SigmaStructure:
    """Finite structure for L_σ (or L_σ⁻ when ``J`` is None)."""

    group: Group
    A: tuple
    I: tuple
    J: tuple | None
    pi: dict
    Q: dict | None
    act: dict  # (a, c) -> a
    P: frozenset
    D: dict  # v -> frozenset of A
    Eprime: frozenset
    E: frozenset
    R: frozenset
    origin: dict = field(default_factory=dict)

    def __post_init__(self):
        self.A, self.I = tuple(self.A), tuple(self.I)
        if self.J is not None:
            self.J = tuple(self.J)
        self._A, self._I = frozenset(self.A), frozenset(self.I)
        self._J = frozenset(self.J or ())
        if self._A & self._I or self._A & self._J or self._I & self._J:
            raise DomainError("sorts must be disjoint")
        if len(self._A) != len(self.A) or len(self._I) != len(self.I) or len(self._J) != len(self.J or ()):
            raise DomainError("duplicate carrier elements")
        for a in self.A:
            if self.pi.get(a) not in self._I:
                raise DomainError(f"pi undefined or outside I at {a!r}")
            if self.J is not None and self.Q.get(a) not in self._J:
                raise DomainError(f"Q undefined or outside J at {a!r}")
            for c in self.group:
                if self.act.get((a, c)) not in self._A:
                    raise DomainError(f"F_{c} undefined at {a!r}")
        self.D = {v: frozenset(self.D.get(v, ())) for v in self.group}

    # ---- evaluation -------------------------------------------------
    def sort_of(self, x) -> str | None:
        if x in self._A:
            return "A"
        if x in self._I:
            return "I"
        if x in self._J:
            return "J"
        return None

    def carrier(self) -> list:
        return list(self.A) + list(self.I) + list(self.J or ())

    def __len__(self):
        return len(self.A) + len(self.I) + len(self.J or ())

    def _check_args(self, args):
        for x in args:
            if x not in self._A:
                raise DomainError(f"{x!r} is not an A-element of this structure")

    def holds(self, rel, *args) -> bool:
        self._check_args(args)
        if rel == "P":
            return args[0] in self.P
        if isinstance(rel, tuple) and rel[0] == "D":
            return args[0] in self.D[rel[1]]
        if rel == "E'":
            return tuple(args) in self.Eprime
        if rel == "E":
            return tuple(args) in self.E
        if rel == "R":
            return tuple(args) in self.R
        raise DomainError(f"unknown relation {rel!r}")

    def apply(self, fn, x):
        self._check_args([x])
        if fn == "pi":
            return self.pi[x]
        if fn == "Q":
            if self.Q is None:
                raise DomainError("no J sort")
            return self.Q[x]
        if isinstance(fn, tuple) and fn[0] == "F":
            return self.act[(x, fn[1])]
        raise DomainError(f"unknown function {fn!r}")

    def relation(self, rel) -> frozenset:
        return {"E'": self.Eprime, "E": self.E, "R": self.R}[rel]

    # ---- derived structures -----------------------------------------
    def restrict(self, subset: Iterable) -> "SigmaStructure":
        """Induced substructure; ``subset`` must be closed under the functions."""
        keep = set(subset)
        A = [a for a in self.A if a in keep]
        sub = SigmaStructure(
            self.group,
            A,
            [i for i in self.I if i in keep],
            None if self.J is None else [j for j in self.J if j in keep],
            {a: self.pi[a] for a in A},
            None if self.Q is None else {a: self.Q[a] for a in A},
            {(a, c): self.act[(a, c)] for a in A for c in self.group},
            frozenset(a for a in self.P if a in keep),
            {v: frozenset(a for a in s if a in keep) for v, s in self.D.items()},
            frozenset(p for p in self.Eprime if p[0] in keep and p[1] in keep),
            frozenset(p for p in self.E if p[0] in keep and p[1] in keep),
            frozenset(p for p in self.R if p[0] in keep and p[1] in keep),
        )
        return sub

    def expand(self, label) -> "SigmaStructure":
        """Trivial L_σ expansion: J = {label}, Q constant."""
        return SigmaStructure(
            self.group, self.A, self.I, (label,), dict(self.pi), {a: label for a in self.A},
            self.act, self.P, self.D, self.Eprime, self.E, self.R, dict(self.origin, J=label),
        )

    def key(self) -> str:
        """Canonical text; equal keys iff equal structures."""
        return json.dumps(self.to_json(), sort_keys=True)

    def to_json(self) -> dict:
        order = {x: k for k, x in enumerate(self.carrier())}

        def pairs(rel):
            return [_listify(p) for p in sorted(rel, key=lambda p: (order[p[0]], order[p[1]]))]

        out = {
            "group": list(self.group.symbols),
            "A": [_listify(a) for a in self.A],
            "I": [_listify(i) for i in self.I],
            "J": None if self.J is None else [_listify(j) for j in self.J],
            "pi": [[_listify(a), _listify(self.pi[a])] for a in self.A],
            "Q": None if self.Q is None else [[_listify(a), _listify(self.Q[a])] for a in self.A],
            "F": [[_listify(a), c, _listify(self.act[(a, c)])] for a in self.A for c in self.group],
            "P": [_listify(a) for a in self.A if a in self.P],
            "D": {str(v): [_listify(a) for a in self.A if a in self.D[v]] for v in self.group},
            "E'": pairs(self.Eprime),
            "E": pairs(self.E),
            "R": pairs(self.R),
        }
        return out

    @classmethod
    def from_json(cls, data: dict) -> "SigmaStructure":
        t = _tuplify
        J = data.get("J")
        Qd = data.get("Q")
        return cls(
            Group(data["group"]),
            [t(a) for a in data["A"]],
            [t(i) for i in data["I"]],
            None if J is None else [t(j) for j in J],
            {t(a): t(i) for a, i in data["pi"]},
            None if Qd is None else {t(a): t(j) for a, j in Qd},
            {(t(a), c): t(b) for a, c, b in data["F"]},
            frozenset(t(a) for a in data["P"]),
            {int(v): frozenset(t(a) for a in s) for v, s in data["D"].items()},
            frozenset((t(x), t(y)) for x, y in data["E'"]),
            frozenset((t(x), t(y)) for x, y in data["E"]),
            frozenset((t(x), t(y)) for x, y in data["R"]),
        )


# ---- the concrete H structures --------------------------------------

class _H1Eval:
    """On-demand evaluation of H_{1,D} from the family (ambient tails)."""

    def __init__(self, family: Family):
        self.family = family
        self.group = group_of(family)
        self._tails: dict = {}
        self._odd: dict = {}

    def tail(self, f: str, n) -> int:
        key = (f, n)
        if key not in self._tails:
            self._tails[key] = self.group.mask(tail_range(self.family[f], n))
        return self._tails[key]

    def odd_table(self, f: str, g: str) -> list | None:
        """For f <= g: list indexed by u' giving the odd-preimage image u."""
        key = (f, g)
        if key not in self._odd:
            e = self.family.compare(f, g)
            if e is None:
                self._odd[key] = None
            else:
                bits = [self.group.bit(e.e[s]) if s in e.e else 0 for s in self.group.symbols]
                table = []
                for m in self.group:
                    out = 0
                    for k, b in enumerate(bits):
                        if m >> k & 1:
                            out ^= b
                    table.append(out)
                self._odd[key] = table
        return self._odd[key]

    def P(self, x) -> bool:
        f, n, u = x
        return popcount(u & self.tail(f, n)) % 2 == 1

    def D(self, v: int, x) -> bool:
        f, n, u = x
        T = self.tail(f, n)
        return (u & ~T) & ~v == 0 and v & T == 0

    def Eprime(self, x, y) -> bool:
        return x[:2] == y[:2]

    def E(self, x, y) -> bool:
        if x[:2] != y[:2]:
            return False
        w = x[2] ^ y[2]
        return w & ~self.tail(x[0], x[1]) == 0 and popcount(w) % 2 == 0

    def R(self, x, y) -> bool:
        table = self.odd_table(x[0], y[0])
        return table is not None and table[y[2]] == x[2]

    def F(self, c: int, x):
        return (x[0], x[1], x[2] ^ c)

    def pi(self, x):
        return (x[0], x[1])


def _evaluator(family: Family) -> _H1Eval:
    ev = getattr(family, "_h1eval", None)
    if ev is None:
        ev = _H1Eval(family)
        family._h1eval = ev
    return ev


def apply_g(family: Family, d, x):
    """g_d: (f, n, u) -> (f, n, u Δ {f(d)}), defined only when n ⊲ d; identity on I."""
    if len(x) == 2:
        return x
    f, n, u = x
    if not family.order.lt(n, d):
        raise DomainError(f"g_{d} is undefined at {x!r}: {n!r} is not below {d!r}")
    return (f, n, u ^ group_of(family).bit(family[f](d)))


def transport(S: SigmaStructure, phi: Callable, origin: dict | None = None) -> SigmaStructure:
    """The structure making ``phi`` an isomorphism from S."""
    img = {x: phi(x) for x in S.carrier()}
    A = [img[a] for a in S.A]
    return SigmaStructure(
        S.group,
        A,
        [img[i] for i in S.I],
        None if S.J is None else [img[j] for j in S.J],
        {img[a]: img[S.pi[a]] for a in S.A},
        None if S.Q is None else {img[a]: img[S.Q[a]] for a in S.A},
        {(img[a], c): img[S.act[(a, c)]] for a in S.A for c in S.group},
        frozenset(img[a] for a in S.P),
        {v: frozenset(img[a] for a in s) for v, s in S.D.items()},
        frozenset((img[x], img[y]) for x, y in S.Eprime),
        frozenset((img[x], img[y]) for x, y in S.E),
        frozenset((img[x], img[y]) for x, y in S.R),
        origin or {},
    )


def _level_h1(family: Family, d) -> SigmaStructure:
    ev = _evaluator(family)
    G = ev.group
    preds = family.order.predecessors(d)
    I = [(f, n) for f in family.names for n in preds]
    A = [(f, n, u) for f, n in I for u in G]
    pi = {a: a[:2] for a in A}
    act = {(a, c): (a[0], a[1], a[2] ^ c) for a in A for c in G}
    P = frozenset(a for a in A if ev.P(a))
    D: dict = {v: set() for v in G}
    E = set()
    Eprime = set()
    for f, n in I:
        T = ev.tail(f, n)
        free = G.full & ~T
        even = [w for w in range(G.size) if w & ~T == 0 and popcount(w) % 2 == 0]
        for u in G:
            base = u & free
            # v ranges over supersets of base disjoint from T
            rest = free & ~base
            s = rest
            while True:
                D[base | s].add((f, n, u))
                if s == 0:
                    break
                s = (s - 1) & rest
            for w in even:
                E.add(((f, n, u), (f, n, u ^ w)))
            for u2 in G:
                Eprime.add(((f, n, u), (f, n, u2)))
    R = set()
    for f in family.names:
        for g in family.names:
            table = ev.odd_table(f, g)
            if table is None:
                continue
            for n in preds:
                for n2 in preds:
                    for u2 in G:
                        R.add(((f, n, table[u2]), (g, n2, u2)))
    return SigmaStructure(
        G, A, I, None, pi, None, act, P, {v: frozenset(s) for v, s in D.items()},
        frozenset(Eprime), frozenset(E), frozenset(R), {"side": 1, "level": d},
    )


def build_level(side: int, d, family: Family, expand: bool = False) -> SigmaStructure:
    """H_{side,d} (or M_{side,d} when ``expand``); side 0 gives M_{0,d}."""
    family.order.check(d)
    cache = family.__dict__.setdefault("_levels", {})
    key = (side, d, expand)
    if key in cache:
        return cache[key]
    if side == 0:
        G = group_of(family)
        I = [(f, n) for f in family.names for n in family.order.predecessors(d)]
        S = SigmaStructure(G, [], I, [], {}, {}, {}, frozenset(), {}, frozenset(), frozenset(), frozenset(),
                           {"side": 0, "level": d})
    elif side == 1:
        S = _level_h1(family, d)
    elif side == 2:
        H1 = build_level(1, d, family)
        S = transport(H1, lambda x: apply_g(family, d, x), {"side": 2, "level": d})
    else:
        raise DomainError(f"side must be 0, 1 or 2, got {side}")
    if expand and side in (1, 2):
        S = S.expand(f"i{side}")
    S.origin["family"] = family
    cache[key] = S
    return S


class LimitHandle:
    """H_{side,D} over (N,<): elements are triples, relations computed on demand.

    Side 2 evaluates through g_{d*} at the least level d* containing the
    arguments.
    """

    def __init__(self, side: int, family: Family):
        if side not in (1, 2):
            raise DomainError("limit handles exist for sides 1 and 2")
        if not isinstance(family.order, OmegaOrder):
            raise DomainError("limit structures are built over (N,<) only")
        self.side = side
        self.family = family
        self.group = group_of(family)
        self._ev = _evaluator(family)

    def _check(self, args):
        for x in args:
            if not (isinstance(x, tuple) and len(x) == 3 and x[0] in self.family.fns
                    and isinstance(x[1], int) and x[1] >= 0 and 0 <= x[2] < self.group.size):
                raise DomainError(f"{x!r} is not an element of H_D")

    def level_for(self, args) -> int:
        return max(x[1] for x in args) + 1

    def holds(self, rel, *args) -> bool:
        self._check(args)
        if self.side == 2:
            d = self.level_for(args)
            args = tuple(apply_g(self.family, d, x) for x in args)
        ev = self._ev
        if rel == "P":
            return ev.P(args[0])
        if isinstance(rel, tuple) and rel[0] == "D":
            return ev.D(rel[1], args[0])
        if rel == "E'":
            return ev.Eprime(*args)
        if rel == "E":
            return ev.E(*args)
        if rel == "R":
            return ev.R(*args)
        raise DomainError(f"unknown relation {rel!r}")

    def apply(self, fn, x):
        self._check([x])
        d = self.level_for([x])
        g = (lambda y: apply_g(self.family, d, y)) if self.side == 2 else (lambda y: y)
        if fn == "pi":
            return self._ev.pi(g(x))
        if isinstance(fn, tuple) and fn[0] == "F":
            return g(self._ev.F(fn[1], g(x)))
        raise DomainError(f"unknown function {fn!r}")

    def truncate(self, d) -> SigmaStructure:
        return build_level(self.side, d, self.family)


def eval_relation(handle, rel, *args):
    if rel == "pi" or rel == "Q" or (isinstance(rel, tuple) and rel[0] == "F"):
        return handle.apply(rel, *args)
    return handle.holds(rel, *args)


# ---- E witnesses ----------------------------------------------------

def _tail_indices(family: Family, f: str, n) -> list:
    fn = family[f]
    if isinstance(fn, EPFn):
        return list(range(n + 1, n + 1 + len(fn.prefix) + len(fn.period)))
    order = family.order
    return [x for x in order.elements if order.lt(n, x)]


def _chain_tree(family: Family, f: str, n) -> dict:
    """BFS over u ↦ u Δ {f(d0)} Δ {f(d1)}, d0, d1 above n; parent pointers per delta."""
    cache = family.__dict__.setdefault("_chains", {})
    if (f, n) in cache:
        return cache[(f, n)]
    G = group_of(family)
    idx = _tail_indices(family, f, n)
    moves: dict = {}
    for i, d0 in enumerate(idx):
        for d1 in idx[i:]:
            delta = G.bit(family[f](d0)) ^ G.bit(family[f](d1))
            moves.setdefault(delta, (d0, d1))
    parent = {0: None}
    queue = deque([0])
    while queue:
        s = queue.popleft()
        for delta, pair in moves.items():
            t = s ^ delta
            if t not in parent:
                parent[t] = (s, pair)
                queue.append(t)
    cache[(f, n)] = parent
    return parent


def witness_E(family: Family, x, y) -> list | None:
    """Indices d0..d_{2k-1} above n with u Δ {f(d0)} Δ ... = u', or None."""
    if x[:2] != y[:2]:
        return None
    f, n = x[0], x[1]
    parent = _chain_tree(family, f, n)
    target = x[2] ^ y[2]
    if target not in parent:
        return None
    out: list = []
    s = target
    while parent[s] is not None:
        s, pair = parent[s]
        out.extend(pair)
    return sorted(out, key=family.order.position)


def replay_chain(family: Family, x, chain: list) -> tuple:
    G = group_of(family)
    u = x[2]
    for d in chain:
        if not family.order.lt(x[1], d):
            raise DomainError(f"chain index {d!r} is not above {x[1]!r}")
        u ^= G.bit(family[x[0]](d))
    return (x[0], x[1], u)


# ---- maps between structures ----------------------------------------

def map_violations(src: SigmaStructure, dst: SigmaStructure, h: Mapping, onto: bool = False) -> dict:
    """First violation per symbol of ``h`` being an embedding (an
    isomorphism when ``onto``).  Empty dict means no violation."""
    out: dict = {}

    def bad(sym, **evidence):
        out.setdefault(sym, {k: _listify(v) for k, v in evidence.items()})

    for sort, dom, cod in (("A", src.A, dst._A), ("I", src.I, dst._I), ("J", src.J or (), dst._J)):
        images = []
        for x in dom:
            y = h.get(x)
            if y not in cod:
                bad("map", element=x, reason=f"not sent into {sort}")
                return out
            images.append(y)
        if len(set(images)) != len(images):
            bad("map", reason=f"not injective on {sort}")
            return out
        if onto and len(images) != len(cod):
            bad("map", reason=f"not onto {sort}")
            return out
    for a in src.A:
        if h[src.pi[a]] != dst.pi[h[a]]:
            bad("pi", element=a)
            break
    if src.Q is not None and dst.Q is not None:
        for a in src.A:
            if h[src.Q[a]] != dst.Q[h[a]]:
                bad("Q", element=a)
                break
    for a in src.A:
        for c in src.group:
            if h[src.act[(a, c)]] != dst.act[(h[a], c)]:
                bad("F", element=a, c=c)
                break
        if "F" in out:
            break
    for a in src.A:
        if (a in src.P) != (h[a] in dst.P):
            bad("P", element=a, source=a in src.P)
            break
    for v in src.group:
        for a in src.A:
            if (a in src.D[v]) != (h[a] in dst.D[v]):
                bad("D", element=a, v=v, source=a in src.D[v])
                break
        if "D" in out:
            break
    image = {h[a] for a in src.A}
    inverse = {h[a]: a for a in src.A}
    for rel in BINARY:
        moved = {(h[x], h[y]) for x, y in src.relation(rel)}
        target = {p for p in dst.relation(rel) if p[0] in image and p[1] in image}
        if moved != target:
            extra = sorted(moved - target, key=repr)
            if extra:
                p = extra[0]
                bad(rel, pair=(inverse[p[0]], inverse[p[1]]), source=True)
            else:
                p = sorted(target - moved, key=repr)[0]
                bad(rel, pair=(inverse[p[0]], inverse[p[1]]), source=False)
    return out


def is_isomorphism(src, dst, h) -> bool:
    return not map_violations(src, dst, h, onto=True)


def identity_on_sorts(S: SigmaStructure, amap: Callable) -> dict:
    h = {a: amap(a) for a in S.A}
    h.update({i: i for i in S.I})
    h.update({j: j for j in S.J or ()})
    return h


def check_gg_automorphism(family: Family, d1, d2, level) -> dict | None:
    """None if g_{d1} o g_{d2} is an automorphism of H_{1,level}, else the violation."""
    H = build_level(1, level, family)
    h = identity_on_sorts(H, lambda a: apply_g(family, d1, apply_g(family, d2, a)))
    bad = map_violations(H, H, h, onto=True)
    if not bad:
        return None
    sym = sorted(bad, key=str)[0]
    return {"relation": sym, **bad[sym]}


def single_g_effect(family: Family, d, level) -> dict:
    """For each unary/binary symbol: 'preserved', 'flipped' or 'mixed' under g_d alone."""
    H = build_level(1, level, family)
    g = {a: apply_g(family, d, a) for a in H.A}
    out = {}

    def verdict(pairs):
        same = [a == b for a, b in pairs]
        return "preserved" if all(same) else "flipped" if not any(same) else "mixed"

    out["P"] = verdict([(a in H.P, g[a] in H.P) for a in H.A])
    out["D"] = verdict([(a in H.D[v], g[a] in H.D[v]) for v in H.group for a in H.A])
    for rel in BINARY:
        rset = H.relation(rel)
        out[rel] = verdict([((x, y) in rset, (g[x], g[y]) in rset) for x in H.A for y in H.A])
    return out


# ---- quantifier-free types ------------------------------------------

def qf_fingerprint(handle, tup: tuple) -> tuple:
    """All atomic facts of the fixed signature about a tuple of ≤ 2 A-elements."""
    if not 1 <= len(tup) <= 2:
        raise DomainError("fingerprints are for 1- or 2-tuples")
    G = handle.group
    facts = []
    for x in tup:
        facts.append(("P", handle.holds("P", x)))
        facts.append(("D", tuple(v for v in G if handle.holds(("D", v), x))))
    for i, x in enumerate(tup):
        for j, y in enumerate(tup):
            facts.append((i, j, "=", x == y))
            facts.append((i, j, "pi=", handle.apply("pi", x) == handle.apply("pi", y)))
            facts.append((i, j, "F", tuple(c for c in G if handle.apply(("F", c), x) == y)))
            for rel in BINARY:
                facts.append((i, j, rel, handle.holds(rel, x, y)))
    return tuple(facts)


def check_pair_types(S: SigmaStructure) -> dict:
    """Pairs inside one π-fiber with equal fingerprints have equal u-differences."""
    buckets: dict = {}
    for i in S.I:
        fiber = [a for a in S.A if S.pi[a] == i]
        for x in fiber:
            for y in fiber:
                fp = qf_fingerprint(S, (x, y))
                diff = x[2] ^ y[2]
                seen = buckets.setdefault(fp, (diff, (x, y)))
                if seen[0] != diff:
                    return {"ok": False, "pairs": [_listify(seen[1]), _listify((x, y))]}
    return {"ok": True, "classes": len(buckets)}


def e_by_conjunction(S, x, y) -> bool:
    """E'-related, same parity predicate, same difference predicates."""
    return (
        S.holds("E'", x, y)
        and S.holds("P", x) == S.holds("P", y)
        and all(S.holds(("D", v), x) == S.holds(("D", v), y) for v in S.group)
    )


def check_e_characterization(S: SigmaStructure, family: Family) -> dict:
    """Closed-form E, the conjunction test, and replayed chains agree on all pairs."""
    profile = {a: (a in S.P, tuple(v for v in S.group if a in S.D[v])) for a in S.A}
    pairs = 0
    for x in S.A:
        for y in S.A:
            pairs += 1
            closed = (x, y) in S.E
            conj = x[:2] == y[:2] and profile[x] == profile[y]
            chain = witness_E(family, x, y)
            replay = chain is not None and replay_chain(family, x, chain) == y
            if not closed == conj == replay:
                return {"ok": False, "pair": _listify((x, y)), "closed": closed, "conjunction": conj, "chain": replay}
    return {"ok": True, "pairs": pairs}


def check_regular_action(S: SigmaStructure) -> dict | None:
    """F is a free, transitive action on each π-fiber."""
    for i in S.I:
        fiber = [a for a in S.A if S.pi[a] == i]
        x = fiber[0] if fiber else None
        if x is None:
            continue
        orbit = {S.act[(x, c)] for c in S.group}
        if orbit != set(fiber):
            return {"fiber": _listify(i), "reason": "not transitive"}
        for a in fiber:
            for c in S.group:
                if c and S.act[(a, c)] == a:
                    return {"fiber": _listify(i), "reason": f"F_{c} fixes {a}"}
    return None


def substructure_violation(small: SigmaStructure, big: SigmaStructure) -> str | None:
    if small.group != big.group:
        return "different groups"
    for x in small.carrier():
        if big.sort_of(x) != small.sort_of(x):
            return f"{x!r} missing or in another sort"
    for a in small.A:
        if small.pi[a] != big.pi[a]:
            return f"pi differs at {a!r}"
        if small.Q is not None and big.Q is not None and small.Q[a] != big.Q[a]:
            return f"Q differs at {a!r}"
        for c in small.group:
            if small.act[(a, c)] != big.act[(a, c)]:
                return f"F_{c} differs at {a!r}"
    keep = set(small.A)
    if small.P != frozenset(a for a in big.P if a in keep):
        return "P differs"
    for v in small.group:
        if small.D[v] != frozenset(a for a in big.D[v] if a in keep):
            return f"D_{v} differs"
    for rel in BINARY:
        if small.relation(rel) != frozenset(p for p in big.relation(rel) if p[0] in keep and p[1] in keep):
            return f"{rel} differs"
    return None


def check_h0(family: Family, level) -> dict:
    """h0(f,n,u) = (f,n,u Δ {f(n)}) against H_{1,level} → H_{2,level}."""
    H1 = build_level(1, level, family)
    H2 = build_level(2, level, family)
    G = H1.group
    if not H1.A:
        raise DomainError("level structure is empty")
    h = identity_on_sorts(H1, lambda a: (a[0], a[1], a[2] ^ G.bit(family[a[0]](a[1]))))
    bad = map_violations(H1, H2, h, onto=True)
    preds = family.order.predecessors(level)
    possible = any(len({family[f](n) for n in preds}) > 1 for f in family.names)
    # P and D survive h0 at (f, n) only if the value f(n) shows up again above n
    stray = [(f, n) for f in family.names for n in preds if family[f](n) not in tail_range(family[f], n)]
    other = {k: v for k, v in bad.items() if k != "R"}
    r = bad.get("R")
    replay = None
    if r is not None:
        x, y = (_tuplify(p) for p in r["pair"])
        replay = (x, y) in H1.R and (h[x], h[y]) not in H2.R or (x, y) not in H1.R and (h[x], h[y]) in H2.R
    return {
        "level": level,
        "non_R_preserved": not other,
        "non_R_violations": other,
        "recurrent": not stray,
        "non_recurrent": [list(p) for p in stray[:5]],
        "violation_possible": possible,
        "R_violation": r,
        "replays": replay,
    }


def rank_key(x):
    return json.dumps(_listify(x), sort_keys=True)
