"""Index sets: finite strict directed orders and the symbolic order (N, <)."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Hashable, Iterable, Union


class DomainError(ValueError):
    """An element or argument lies outside the object it was applied to."""


class UnsupportedRegime(ValueError):
    """The requested operation has no meaning for the given index regime."""


@dataclass(frozen=True)
class TailSet:
    """The set {n : n > threshold} of naturals."""

    threshold: int

    def __post_init__(self):
        if self.threshold < 0:
            raise DomainError(f"tail threshold must be >= 0, got {self.threshold}")

    def __contains__(self, n: int) -> bool:
        return n > self.threshold


@dataclass(frozen=True)
class OmegaOrder:
    """(N, <), represented intensionally."""

    def check(self, d) -> None:
        if isinstance(d, bool) or not isinstance(d, int) or d < 0:
            raise DomainError(f"{d!r} is not a natural number")

    def lt(self, x: int, y: int) -> bool:
        return x < y

    def predecessors(self, d: int) -> tuple[int, ...]:
        self.check(d)
        return tuple(range(d))

    def successors(self, d: int) -> TailSet:
        self.check(d)
        return TailSet(d)

    def position(self, d: int) -> int:
        return d

    def to_json(self):
        return "omega"

    def __repr__(self):
        return "OmegaOrder()"


@dataclass(frozen=True)
class FiniteOrder:
    """A finite strict partial order that is upward directed.

    ``elements`` fixes the canonical enumeration order; ``lt`` holds the
    strict pairs ``(x, y)`` meaning x is below y.
    """

    elements: tuple
    lt_pairs: frozenset = field(default_factory=frozenset)
    # False only for deliberately non-directed test orders.
    directed: bool = field(default=True, compare=False, repr=False)

    def __post_init__(self):
        elements = tuple(self.elements)
        object.__setattr__(self, "elements", elements)
        pairs = frozenset(tuple(p) for p in self.lt_pairs)
        object.__setattr__(self, "lt_pairs", pairs)
        if not elements:
            raise DomainError("a directed order needs at least one element")
        if len(set(elements)) != len(elements):
            raise DomainError("duplicate order elements")
        known = set(elements)
        for x, y in pairs:
            if x not in known or y not in known:
                raise DomainError(f"pair ({x!r}, {y!r}) mentions an unknown element")
            if x == y:
                raise DomainError(f"strict order is reflexive at {x!r}")
        for x, y in pairs:
            for y2, z in pairs:
                if y == y2 and (x, z) not in pairs:
                    raise DomainError(f"order is not transitive: {x!r}<{y!r}<{z!r}")
        if not self.directed:
            return
        for x, y in combinations(elements, 2):
            if self.upper_bound([x, y]) is None:
                raise DomainError(f"no upper bound for ({x!r}, {y!r})")

    @classmethod
    def from_pairs(cls, elements: Iterable[Hashable], lt: Iterable[tuple], directed: bool = True) -> "FiniteOrder":
        return cls(tuple(elements), frozenset(tuple(p) for p in lt), directed)

    def check(self, d) -> None:
        if d not in self._index:
            raise DomainError(f"{d!r} is not an element of the order")

    @property
    def _index(self) -> dict:
        idx = self.__dict__.get("_idx")
        if idx is None:
            idx = {x: i for i, x in enumerate(self.elements)}
            object.__setattr__(self, "_idx", idx)
        return idx

    def lt(self, x, y) -> bool:
        return (x, y) in self.lt_pairs

    def le(self, x, y) -> bool:
        return x == y or (x, y) in self.lt_pairs

    def predecessors(self, d) -> tuple:
        self.check(d)
        return tuple(x for x in self.elements if (x, d) in self.lt_pairs)

    def successors(self, d) -> frozenset:
        self.check(d)
        return frozenset(y for y in self.elements if (d, y) in self.lt_pairs)

    def position(self, d) -> int:
        self.check(d)
        return self._index[d]

    def upper_bound(self, subset) -> object | None:
        """First element (in enumeration order) lying weakly above all of ``subset``."""
        for b in self.elements:
            if all(self.le(x, b) for x in subset):
                return b
        return None

    def top(self):
        return self.upper_bound(self.elements)

    def to_json(self):
        return {
            "elements": list(self.elements),
            "lt": sorted([list(p) for p in self.lt_pairs], key=lambda p: (self.position(p[0]), self.position(p[1]))),
        }


Order = Union[OmegaOrder, FiniteOrder]


def predecessors(order: Order, d):
    return order.predecessors(d)


def successors(order: Order, d):
    return order.successors(d)


def check_directed(order: Order, tau) -> tuple | None:
    """Return ``None`` if every subset of size < tau has an upper bound,
    otherwise the first subset (in enumeration order) that has none."""
    if isinstance(order, OmegaOrder):
        if tau == math.inf or tau is None:
            raise UnsupportedRegime("(N,<) is directed only for finite subsets")
        return None
    if tau < 2:
        raise DomainError("tau must be at least 2")
    largest = min(int(tau) - 1, len(order.elements)) if tau != math.inf else len(order.elements)
    for size in range(0, largest + 1):
        for subset in combinations(order.elements, size):
            if order.upper_bound(subset) is None:
                return subset
    return None


def parse_order(spec) -> Order:
    """Read the scenario encoding: ``"omega"`` or ``{elements, lt}``."""
    if spec == "omega":
        return OmegaOrder()
    if isinstance(spec, dict) and "elements" in spec:
        return FiniteOrder.from_pairs(spec["elements"], spec.get("lt", []))
    raise DomainError(f"cannot read order {spec!r}")
