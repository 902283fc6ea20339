"""Function families on an index set.

Functions on (N, <) are eventually periodic words (``EPFn``); functions on a
finite order are explicit tables (``FiniteFn``).  ``f1 <= f2`` holds when
``f1 = e o f2`` for a (necessarily unique) ``e: ran(f2) -> ran(f1)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations, product
from typing import Callable, Iterable, Mapping, Sequence, Union

from .indexing import DomainError, FiniteOrder, OmegaOrder, Order


class AlphabetExhausted(ValueError):
    """A refinement needed a symbol the caller's coding did not provide."""


class DirectednessError(ValueError):
    def __init__(self, pair):
        self.pair = pair
        super().__init__(f"no upper bound for ({pair[0]}, {pair[1]})")


def _word(w) -> tuple:
    if isinstance(w, str):
        return tuple(w)
    return tuple(w)


def _render_word(w: tuple):
    if all(isinstance(s, str) and len(s) == 1 for s in w):
        return "".join(w)
    return list(w)


@dataclass(frozen=True)
class Alphabet:
    """Ordered symbols; declaration order is the canonical total order."""

    symbols: tuple

    def __post_init__(self):
        syms = _word(self.symbols)
        object.__setattr__(self, "symbols", syms)
        if not syms:
            raise DomainError("alphabet must be nonempty")
        if len(set(syms)) != len(syms):
            raise DomainError("alphabet has duplicate symbols")

    @property
    def sigma(self) -> int:
        return len(self.symbols)

    def rank(self, s) -> int:
        try:
            return self.symbols.index(s)
        except ValueError:
            raise DomainError(f"symbol {s!r} not in alphabet") from None

    def sort(self, syms: Iterable) -> tuple:
        return tuple(sorted(set(syms), key=self.rank))

    def extend(self, more: Iterable) -> "Alphabet":
        extra = [s for s in dict.fromkeys(more) if s not in self.symbols]
        return Alphabet(self.symbols + tuple(extra))

    def __contains__(self, s) -> bool:
        return s in self.symbols


def _primitive_root(period: tuple) -> tuple:
    L = len(period)
    for k in range(1, L + 1):
        if L % k == 0 and period[:k] * (L // k) == period:
            return period[:k]
    return period


@dataclass(frozen=True)
class EPFn:
    """Eventually periodic function N -> symbols, stored in canonical form:
    primitive period and shortest prefix."""

    prefix: tuple = ()
    period: tuple = ()

    def __post_init__(self):
        prefix, period = _word(self.prefix), _word(self.period)
        if not period:
            raise DomainError("period must be nonempty")
        period = _primitive_root(period)
        while prefix and prefix[-1] == period[-1]:
            prefix = prefix[:-1]
            period = period[-1:] + period[:-1]
        object.__setattr__(self, "prefix", prefix)
        object.__setattr__(self, "period", period)

    def __call__(self, n: int):
        return evaluate(self, n)

    @property
    def index_order(self) -> Order:
        return OmegaOrder()

    def range(self) -> frozenset:
        return frozenset(self.prefix) | frozenset(self.period)

    def values_upto(self, n: int) -> list:
        return [self(i) for i in range(n)]

    def tail_range(self, d: int) -> frozenset:
        return tail_range(self, d)

    def cofinal_range(self) -> frozenset:
        return frozenset(self.period)

    def relabel(self, mapping: Mapping) -> "EPFn":
        return type(self)(tuple(mapping[s] for s in self.prefix), tuple(mapping[s] for s in self.period))

    def horizon(self) -> int:
        return len(self.prefix) + len(self.period)

    def to_json(self) -> dict:
        return {"prefix": _render_word(self.prefix), "period": _render_word(self.period)}

    def __str__(self):
        p = "".join(map(str, self.prefix))
        return f"{p}({''.join(map(str, self.period))})"


@dataclass(frozen=True)
class FiniteFn:
    """Total function on the elements of a FiniteOrder."""

    order: FiniteOrder
    table: tuple  # values in the order's enumeration order

    def __post_init__(self):
        table = self.table
        if isinstance(table, Mapping):
            missing = [x for x in self.order.elements if x not in table]
            if missing:
                raise DomainError(f"function undefined at {missing[0]!r}")
            table = tuple(table[x] for x in self.order.elements)
        table = tuple(table)
        if len(table) != len(self.order.elements):
            raise DomainError("table does not cover the order")
        object.__setattr__(self, "table", table)

    def __call__(self, d):
        return self.table[self.order.position(d)]

    @property
    def index_order(self) -> Order:
        return self.order

    def range(self) -> frozenset:
        return frozenset(self.table)

    def tail_range(self, d) -> frozenset:
        return tail_range(self, d)

    def cofinal_range(self) -> frozenset:
        return cofinal_range(self)

    def relabel(self, mapping: Mapping) -> "FiniteFn":
        return FiniteFn(self.order, tuple(mapping[s] for s in self.table))

    def to_json(self) -> dict:
        return {"table": {str(x): v for x, v in zip(self.order.elements, self.table)}}

    def __str__(self):
        return "{" + ", ".join(f"{x}:{v}" for x, v in zip(self.order.elements, self.table)) + "}"


Fn = Union[EPFn, FiniteFn]


class EPSet(EPFn):
    """Decidable subset of N: an EPFn over {"0", "1"} ("1" = member)."""

    def __post_init__(self):
        super().__post_init__()
        bad = (frozenset(self.prefix) | frozenset(self.period)) - {"0", "1"}
        if bad:
            raise DomainError(f"set words use only 0/1, got {sorted(bad)}")

    @classmethod
    def tail(cls, d: int) -> "EPSet":
        return cls("0" * (d + 1), "1")

    @classmethod
    def everything(cls) -> "EPSet":
        return cls("", "1")

    @classmethod
    def empty(cls) -> "EPSet":
        return cls("", "0")

    @classmethod
    def from_predicate(cls, pred: Callable[[int], bool], prefix_len: int, period_len: int) -> "EPSet":
        word = ["1" if pred(n) else "0" for n in range(prefix_len + period_len)]
        return cls(tuple(word[:prefix_len]), tuple(word[prefix_len:]))

    def __contains__(self, n: int) -> bool:
        return self(n) == "1"

    def __and__(self, other: "EPSet") -> "EPSet":
        return _pointwise(EPSet, [self, other], lambda a, b: "1" if a == b == "1" else "0")

    def __or__(self, other: "EPSet") -> "EPSet":
        return _pointwise(EPSet, [self, other], lambda a, b: "1" if "1" in (a, b) else "0")

    def __invert__(self) -> "EPSet":
        return EPSet(tuple("1" if s == "0" else "0" for s in self.prefix), tuple("1" if s == "0" else "0" for s in self.period))

    def __sub__(self, other: "EPSet") -> "EPSet":
        return self & ~other

    def is_empty(self) -> bool:
        return self == EPSet.empty()

    def is_finite(self) -> bool:
        return "1" not in self.period

    def issubset(self, other: "EPSet") -> bool:
        return (self - other).is_empty()

    def almost_subset(self, other: "EPSet") -> bool:
        """self minus other is finite, i.e. self ∩ ⌊d⌋ ⊆ other for some d."""
        return (self - other).is_finite()

    def to_json(self) -> dict:
        return {"prefix": "".join(self.prefix), "period": "".join(self.period)}


def parse_epset(text) -> EPSet:
    """Accept ``{"prefix": "1", "period": "10"}`` (dict or JSON text) or ``"1/10"``."""
    import json

    if isinstance(text, dict):
        return EPSet(text.get("prefix", ""), text["period"])
    text = text.strip()
    if text.startswith("{"):
        return parse_epset(json.loads(text))
    if "/" in text:
        prefix, period = text.split("/", 1)
        return EPSet(prefix, period)
    return EPSet("", text)


def _pointwise(cls, fns: Sequence[EPFn], op) -> EPFn:
    plen = max(len(f.prefix) for f in fns)
    L = math.lcm(*(len(f.period) for f in fns))
    word = [op(*(f(n) for f in fns)) for n in range(plen + L)]
    return cls(tuple(word[:plen]), tuple(word[plen:]))


def evaluate(f: EPFn, n: int):
    if n < 0:
        raise DomainError(f"negative index {n}")
    if n < len(f.prefix):
        return f.prefix[n]
    return f.period[(n - len(f.prefix)) % len(f.period)]


def window(f1: EPFn, f2: EPFn) -> int:
    """Indices 0..window-1 decide every pointwise question about (f1, f2)."""
    return len(f1.prefix) + len(f2.prefix) + math.lcm(len(f1.period), len(f2.period))


def _indices(f1: Fn, f2: Fn) -> Iterable:
    if isinstance(f1, EPFn) and isinstance(f2, EPFn):
        return range(window(f1, f2))
    if isinstance(f1, FiniteFn) and isinstance(f2, FiniteFn) and f1.order == f2.order:
        return f1.order.elements
    raise DomainError("functions live on different index regimes")


@dataclass(frozen=True)
class ComparisonWitness:
    """The unique ``e: ran(f2) -> ran(f1)`` with ``f1 = e o f2``."""

    pairs: tuple  # sorted (x, e(x)) pairs

    @property
    def e(self) -> dict:
        return dict(self.pairs)

    def __call__(self, x):
        return self.e[x]

    def domain(self) -> frozenset:
        return frozenset(x for x, _ in self.pairs)

    def image(self, syms: Iterable) -> frozenset:
        e = self.e
        return frozenset(e[s] for s in syms if s in e)

    def odd_image(self, syms: Iterable) -> frozenset:
        """{i : an odd number of j in syms have e(j) = i}; j outside ran(f2) are ignored."""
        e = self.e
        out: set = set()
        for j in syms:
            if j in e:
                out ^= {e[j]}
        return frozenset(out)

    def compose(self, other: "ComparisonWitness") -> "ComparisonWitness":
        """self: ran(f2)->ran(f1), other: ran(f3)->ran(f2); returns ran(f3)->ran(f1)."""
        e1 = self.e
        return ComparisonWitness(tuple(sorted(((x, e1[y]) for x, y in other.pairs), key=repr)))


def compare(f1: Fn, f2: Fn) -> ComparisonWitness | None:
    """Witness for f1 <= f2, or None when the pair is not so related."""
    e: dict = {}
    for n in _indices(f1, f2):
        a, b = f1(n), f2(n)
        if e.setdefault(b, a) != a:
            return None
    return ComparisonWitness(tuple(sorted(e.items(), key=repr)))


def equivalent(f1: Fn, f2: Fn) -> bool:
    return compare(f1, f2) is not None and compare(f2, f1) is not None


def pair_symbol(x, y) -> str:
    return f"({x},{y})"


def refine(f1: Fn, f2: Fn, code: Callable | Mapping | None = None) -> Fn:
    """A common upper bound of f1 and f2 whose partition is the common refinement.

    Returns f2 (resp. f1) unchanged when it already refines the other.
    Otherwise values are the pairs (f1(n), f2(n)) coded by ``code``
    (default ``pair_symbol``); a mapping missing a pair raises
    ``AlphabetExhausted``.
    """
    if compare(f1, f2) is not None:
        return f2
    if compare(f2, f1) is not None:
        return f1
    if code is None:
        code = pair_symbol
    if isinstance(code, Mapping):
        table = code

        def code(x, y):
            try:
                return table[(x, y)]
            except KeyError:
                raise AlphabetExhausted(f"no symbol for pair ({x}, {y})") from None

    seen: dict = {}

    def coded(x, y):
        s = code(x, y)
        if seen.setdefault(s, (x, y)) != (x, y):
            raise AlphabetExhausted(f"symbol {s!r} used for two different pairs")
        return s

    if isinstance(f1, EPFn):
        return _pointwise(EPFn, [f1, f2], coded)
    return FiniteFn(f1.order, tuple(coded(f1(x), f2(x)) for x in f1.order.elements))


def tail_range(f: Fn, d) -> frozenset:
    """{f(n) : d < n}."""
    if isinstance(f, EPFn):
        if d + 1 >= len(f.prefix):
            return frozenset(f.period)
        return frozenset(f.prefix[d + 1:]) | frozenset(f.period)
    return frozenset(f(x) for x in f.order.successors(d))


def cofinal_range(f: Fn) -> frozenset:
    """Values taken cofinally often: the intersection of all tail ranges."""
    if isinstance(f, EPFn):
        return frozenset(f.period)
    out = f.range()
    for d in f.order.elements:
        out &= tail_range(f, d)
    return out


def preimage(f: Fn, symbols: Iterable):
    """{n : f(n) in symbols}; an EPSet on N, a frozenset on a finite order."""
    symbols = frozenset(symbols)
    if isinstance(f, EPFn):
        return EPSet(
            tuple("1" if s in symbols else "0" for s in f.prefix),
            tuple("1" if s in symbols else "0" for s in f.period),
        )
    return frozenset(x for x in f.order.elements if f(x) in symbols)


def combine_symbol(k: int) -> str:
    return f"i{k}"


def replete_combine(parts: Sequence[tuple[Fn, object]], mu: int | None = None) -> Fn:
    """The least-index combination of the fibers B_k = f_k^-1{i_k}.

    Value ``i0`` on the intersection of all B_k; otherwise ``i{k+1}`` where
    k is least with the index outside B_k.
    """
    if mu is None:
        mu = len(parts)
    if mu != len(parts) or mu < 1:
        raise DomainError("need mu = len(parts) >= 1")

    def value(*vals):
        for k, ((_, target), v) in enumerate(zip(parts, vals)):
            if v != target:
                return combine_symbol(k + 1)
        return combine_symbol(0)

    fns = [f for f, _ in parts]
    if all(isinstance(f, EPFn) for f in fns):
        return _pointwise(EPFn, fns, value)
    order = fns[0].order
    return FiniteFn(order, tuple(value(*(f(x) for f in fns)) for x in order.elements))


def partition_key(f: Fn) -> tuple:
    """Equal keys iff the two functions induce the same partition (<=-equivalence)."""
    labels: dict = {}
    if isinstance(f, EPFn):
        for s in f.prefix + f.period:
            labels.setdefault(s, len(labels))
        g = f.relabel(labels)
        return ("ep", g.prefix, g.period)
    for s in f.table:
        labels.setdefault(s, len(labels))
    return ("fin", tuple(labels[s] for s in f.table))


class Family:
    """A finite, named, <=-directed list of functions on one index regime."""

    def __init__(self, members: Sequence[tuple[str, Fn]], alphabet: Alphabet | None = None, check: bool = True):
        members = list(members)
        if not members:
            raise DomainError("a family needs at least one function")
        names = [n for n, _ in members]
        if len(set(names)) != len(names):
            raise DomainError("duplicate function names")
        self.names: tuple[str, ...] = tuple(names)
        self.fns: dict[str, Fn] = dict(members)
        kinds = {type(f) is FiniteFn for f in self.fns.values()}
        if len(kinds) != 1:
            raise DomainError("mixed index regimes in one family")
        first = self.fns[names[0]]
        self.order: Order = first.index_order
        if isinstance(first, FiniteFn) and any(f.order != first.order for f in self.fns.values()):
            raise DomainError("finite functions over different orders")
        used: list = []
        for f in self.fns.values():
            for s in (f.prefix + f.period) if isinstance(f, EPFn) else f.table:
                if s not in used:
                    used.append(s)
        if alphabet is None:
            alphabet = Alphabet(tuple(used))
        missing = [s for s in used if s not in alphabet]
        if missing:
            raise DomainError(f"symbol {missing[0]!r} not in alphabet")
        self.alphabet = alphabet
        self._cmp: dict = {}
        if check:
            bad = self.non_directed_pair()
            if bad is not None:
                raise DirectednessError(bad)

    def __iter__(self):
        return iter(self.names)

    def __len__(self):
        return len(self.names)

    def __getitem__(self, name: str) -> Fn:
        return self.fns[name]

    def items(self):
        return [(n, self.fns[n]) for n in self.names]

    @property
    def symbols(self) -> tuple:
        """X: the union of the ranges, in alphabet order."""
        used = frozenset().union(*(f.range() for f in self.fns.values()))
        return self.alphabet.sort(used)

    @property
    def is_omega(self) -> bool:
        return isinstance(self.order, OmegaOrder)

    def compare(self, lo: str, hi: str) -> ComparisonWitness | None:
        key = (lo, hi)
        if key not in self._cmp:
            self._cmp[key] = compare(self.fns[lo], self.fns[hi])
        return self._cmp[key]

    def le(self, lo: str, hi: str) -> bool:
        return self.compare(lo, hi) is not None

    def above(self, name: str) -> list[str]:
        return [g for g in self.names if self.le(name, g)]

    def upper_bound(self, a: str, b: str) -> str | None:
        for g in self.names:
            if self.le(a, g) and self.le(b, g):
                return g
        return None

    def non_directed_pair(self) -> tuple | None:
        for a, b in combinations(self.names, 2):
            if self.upper_bound(a, b) is None:
                return (a, b)
        return None

    def maximal(self) -> list[str]:
        """Members above which everything is <=-equivalent (the top class)."""
        return [f for f in self.names if all(self.le(g, f) for g in self.names if self.le(f, g))]

    def comparable_pairs(self) -> list[tuple[str, str]]:
        return [(a, b) for a in self.names for b in self.names if self.le(a, b)]

    def fibers(self) -> list[tuple[str, object]]:
        """Every nonempty fiber f^-1{x}, as (name, x), in family then alphabet order."""
        return [(n, x) for n in self.names for x in self.alphabet.sort(self.fns[n].range())]

    def with_member(self, name: str, fn: Fn, first: bool = False) -> "Family":
        items = self.items()
        items = [(name, fn)] + items if first else items + [(name, fn)]
        return Family(items, self.alphabet.extend(sorted(fn.range() - set(self.alphabet.symbols), key=repr)))

    def closed_under_refine(self) -> tuple["Family", list[str]]:
        """Close under pairwise refinement; returns the family and the added names."""
        items = self.items()
        added: list[str] = []
        changed = True
        while changed:
            changed = False
            fam = Family(items, None, check=False)
            for a, b in combinations(fam.names, 2):
                if fam.upper_bound(a, b) is None:
                    g = refine(fam[a], fam[b])
                    name = f"{a}*{b}"
                    items.append((name, g))
                    added.append(name)
                    changed = True
                    break
        used = [s for _, f in items for s in sorted(f.range() - set(self.alphabet.symbols), key=repr)]
        return Family(items, self.alphabet.extend(used)), added

    def to_json(self) -> list:
        return [{"name": n, **self.fns[n].to_json()} for n in self.names]


def has_characteristic_fn(family: Family, A) -> tuple[str, frozenset] | None:
    """First member f and X ⊆ ran(f) with A = f^-1 X."""
    for name in family.names:
        f = family[name]
        rng = family.alphabet.sort(f.range())
        for k in range(len(rng) + 1):
            for X in combinations(rng, k):
                if preimage(f, X) == A:
                    return name, frozenset(X)
    return None


@dataclass
class RepleteResult:
    status: str  # "pass" | "fail" | "indeterminate"
    checked: int
    counterexample: dict | None = None


def check_replete(family: Family, mu_max: int, budget: int = 200_000) -> RepleteResult:
    """Every tuple of at most ``mu_max`` fibers has its least-index
    combination realised (up to <=-equivalence) by a member."""
    if mu_max < 1:
        raise DomainError("mu_max must be >= 1")
    realised = {partition_key(f) for f in family.fns.values()}
    fibers = family.fibers()
    checked = 0
    for mu in range(1, mu_max + 1):
        for parts in product(fibers, repeat=mu):
            if checked >= budget:
                return RepleteResult("indeterminate", checked)
            checked += 1
            g = replete_combine([(family[n], x) for n, x in parts])
            if partition_key(g) not in realised:
                return RepleteResult(
                    "fail",
                    checked,
                    {"fibers": [[n, x] for n, x in parts], "required": str(g)},
                )
    return RepleteResult("pass", checked)


def parse_function(spec: dict, order: Order) -> Fn:
    if "table" in spec:
        if not isinstance(order, FiniteOrder):
            raise DomainError("table functions need a finite order")
        table = {x: spec["table"][str(x)] if str(x) in spec["table"] else spec["table"].get(x) for x in order.elements}
        if any(v is None for v in table.values()):
            raise DomainError(f"function {spec.get('name')!r} is not total")
        return FiniteFn(order, table)
    if not isinstance(order, OmegaOrder):
        raise DomainError("eventually periodic functions need the omega regime")
    return EPFn(spec.get("prefix", ""), spec["period"])
