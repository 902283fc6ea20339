"""Coherent finite selections (f*, {u_f}) and the filter they generate.

A ``SharpWitness`` picks f* and, for every f >= f*, a nonempty finite
u_f ⊆ ran*(f) mapped bijectively onto u_{f*} by the comparison witness.
Choosing a marker i_f ∈ u_f over a fixed target in u_{f*} yields the
``DerivedFilter``: A is in iff some f^-1{i_f} is almost contained in A.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Callable, Iterable, Mapping

from .functions import EPFn, EPSet, Family, cofinal_range, preimage


class UnknownFunction(LookupError):
    """A witness mentions a function name the family does not have."""


class PreconditionError(ValueError):
    pass


class InvariantViolation(AssertionError):
    """A property that the theory guarantees has failed; the run must stop."""


class OracleInconsistency(ValueError):
    pass


@dataclass(frozen=True)
class SharpWitness:
    fstar: str
    u: Mapping[str, frozenset]
    notes: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "u", {k: frozenset(v) for k, v in dict(self.u).items()})

    def to_json(self, family: Family | None = None) -> dict:
        order = family.alphabet.sort if family is not None else (lambda s: sorted(s, key=repr))
        names = family.names if family is not None else sorted(self.u)
        return {
            "fstar": self.fstar,
            "u": {n: list(order(self.u[n])) for n in names if n in self.u},
            **({"notes": list(self.notes)} if self.notes else {}),
        }

    @classmethod
    def from_json(cls, data: dict) -> "SharpWitness":
        return cls(data["fstar"], {k: frozenset(v) for k, v in data["u"].items()}, tuple(data.get("notes", ())))


@dataclass
class Violation:
    condition: str
    function: str
    detail: str

    def to_json(self) -> dict:
        return {"condition": self.condition, "function": self.function, "detail": self.detail}


def verify_sharp(family: Family, witness: SharpWitness) -> Violation | None:
    """None if the witness is valid, else the first failing condition."""
    for name in [witness.fstar, *witness.u]:
        if name not in family.fns:
            raise UnknownFunction(f"witness mentions unknown function {name!r}")
    ustar = witness.u.get(witness.fstar)
    for f in family.above(witness.fstar):
        uf = witness.u.get(f)
        if not uf:
            return Violation("nonempty", f, "u_f missing or empty")
        extra = uf - cofinal_range(family[f])
        if extra:
            return Violation("cofinal", f, f"{sorted(extra, key=repr)} not taken cofinally often")
        e = family.compare(witness.fstar, f)
        image = [e(x) for x in uf]
        if len(set(image)) != len(image) or set(image) != set(ustar):
            return Violation("bijection", f, f"e maps {sorted(uf, key=repr)} to {image}, target {sorted(ustar, key=repr)}")
    return None


def _subsets_by_size(family: Family, symbols) -> list[tuple]:
    syms = family.alphabet.sort(symbols)
    return [c for k in range(1, len(syms) + 1) for c in combinations(syms, k)]


def search_sharp(family: Family) -> SharpWitness | None:
    """First witness in canonical order.

    Candidates for f*: the <=-maximal members first, then the rest, each
    group in family order.  Candidates for u_{f*}: nonempty subsets of
    ran*(f*) by size, then alphabet rank.  For f >= f*, each target symbol
    takes its alphabet-least cofinal preimage.
    """
    maximal = family.maximal()
    candidates = maximal + [n for n in family.names if n not in maximal]
    for fstar in candidates:
        for ustar in _subsets_by_size(family, cofinal_range(family[fstar])):
            u = {fstar: frozenset(ustar)}
            ok = True
            for f in family.above(fstar):
                if f == fstar:
                    continue
                e = family.compare(fstar, f)
                cof = family.alphabet.sort(cofinal_range(family[f]))
                chosen = []
                for t in ustar:
                    pre = [x for x in cof if e(x) == t]
                    if not pre:
                        ok = False
                        break
                    chosen.append(pre[0])
                if not ok:
                    break
                u[f] = frozenset(chosen)
            if ok:
                return SharpWitness(fstar, u)
    return None


@dataclass(frozen=True)
class MarkerChoice:
    target: object
    markers: Mapping[str, object]


def choose_markers(family: Family, witness: SharpWitness, target=None) -> MarkerChoice:
    """i_f ∈ u_f with e(i_f) = target; target defaults to min u_{f*}."""
    ustar = witness.u[witness.fstar]
    if target is None:
        target = family.alphabet.sort(ustar)[0]
    if target not in ustar:
        raise PreconditionError(f"marker target {target!r} not in u_f* = {sorted(ustar, key=repr)}")
    markers = {}
    for f in family.above(witness.fstar):
        e = family.compare(witness.fstar, f)
        hits = [x for x in family.alphabet.sort(witness.u[f]) if e(x) == target]
        if len(hits) != 1:
            raise PreconditionError(f"no unique marker for {f}")
        markers[f] = hits[0]
    return MarkerChoice(target, markers)


class DerivedFilter:
    """The filter U generated by a witness and a marker choice (omega regime)."""

    def __init__(self, family: Family, witness: SharpWitness, markers: MarkerChoice | None = None):
        if not family.is_omega:
            raise PreconditionError("derived filters live on (N,<)")
        bad = verify_sharp(family, witness)
        if bad is not None:
            raise PreconditionError(f"witness invalid: {bad.condition} at {bad.function}")
        if markers is None:
            markers = choose_markers(family, witness)
        ustar = witness.u[witness.fstar]
        if markers.target not in ustar:
            raise PreconditionError("marker target outside u_f*")
        for f in family.above(witness.fstar):
            i_f = markers.markers.get(f)
            e = family.compare(witness.fstar, f)
            if i_f not in witness.u[f] or e(i_f) != markers.target:
                raise PreconditionError(f"marker for {f} does not project to the target")
        self.family = family
        self.witness = witness
        self.markers = markers
        self.generators = {f: preimage(family[f], {markers.markers[f]}) for f in family.above(witness.fstar)}

    def __contains__(self, A: EPSet) -> bool:
        return filter_contains(self, A)

    def reason(self, A: EPSet) -> str | None:
        for f, B in self.generators.items():
            if B.almost_subset(A):
                return f
        return None


def filter_contains(U: DerivedFilter, A: EPSet) -> bool:
    return U.reason(A) is not None


def _status(ok: bool) -> str:
    return "pass" if ok else "fail"


def check_filter_laws(U: DerivedFilter, sets: Iterable[EPSet], thresholds: Iterable[int]) -> dict:
    """Properness, tails, meets and upward closure on the given sample."""
    sets = list(sets)
    failures = []
    if EPSet.empty() in U:
        failures.append({"law": "proper", "set": EPSet.empty().to_json()})
    for d in thresholds:
        if EPSet.tail(d) not in U:
            failures.append({"law": "tails", "threshold": d})
    member = {A: (A in U) for A in sets}
    for A, B in combinations(sets, 2):
        if member[A] and member[B] and (A & B) not in U:
            failures.append({"law": "meet", "sets": [A.to_json(), B.to_json()]})
    for A in sets:
        for B in sets:
            if member[A] and A.issubset(B) and not member[B]:
                failures.append({"law": "upward", "sets": [A.to_json(), B.to_json()]})
    return {
        "claim": "filter-laws",
        "status": _status(not failures),
        "evidence": {"sets": len(sets), "failures": failures[:5]},
    }


def check_complete(U: DerivedFilter, members: Iterable[EPSet]) -> tuple[bool, EPSet]:
    """The intersection of filter members is a member.  Returns (ok, meet)."""
    meet = EPSet.everything()
    for A in members:
        if A not in U:
            raise PreconditionError(f"{A} is not in the filter")
        meet = meet & A
    return meet in U, meet


def check_measures(U: DerivedFilter, f: str, symbols: Iterable) -> str:
    A = preimage(U.family[f], symbols)
    inside, outside = A in U, (~A) in U
    if inside == outside:
        raise InvariantViolation(f"filter {'contains both' if inside else 'decides neither of'} {A} and its complement")
    return "decided-in" if inside else "decided-out"


@dataclass
class UltraOracle:
    """A deterministic in/out decision on eventually periodic sets."""

    name: str
    decide: Callable[[EPSet], bool]
    _cache: dict = field(default_factory=dict, repr=False)

    def __contains__(self, A: EPSet) -> bool:
        if A not in self._cache:
            verdict = bool(self.decide(A))
            if verdict == bool(self.decide(~A)):
                raise OracleInconsistency(f"{self.name} decides {A} and its complement alike")
            self._cache[A] = verdict
        return self._cache[A]

    def check_meet(self, A: EPSet, B: EPSet) -> None:
        if A in self and B in self and (A & B) not in self:
            raise OracleInconsistency(f"{self.name} is not closed under meets at {A}, {B}")


def _zero_residue(A: EPSet) -> bool:
    L = len(A.period)
    return A.period[(-len(A.prefix)) % L] == "1"


def zero_residue_oracle() -> UltraOracle:
    """A ∈ U₀ iff A contains all sufficiently large multiples of its period."""
    return UltraOracle("zero-residue", _zero_residue)


ORACLES = {"zero-residue": zero_residue_oracle}


def sharp_from_ultra(family: Family, oracle: UltraOracle) -> tuple[Family, SharpWitness]:
    """u_f = {the value whose fiber the oracle accepts}; f* = constant at the
    first alphabet symbol, adjoined to the family if absent."""
    c = family.alphabet.symbols[0]
    const = EPFn("", (c,))
    fstar = next((n for n in family.names if family[n] == const), None)
    notes = ()
    if fstar is None:
        fstar = "const_" + str(c)
        while fstar in family.fns:
            fstar += "'"
        family = family.with_member(fstar, const, first=True)
        notes = (f"adjoined {fstar}",)
    u = {}
    for name in family.names:
        f = family[name]
        accepted = [x for x in family.alphabet.sort(f.range()) if preimage(f, {x}) in oracle]
        if len(accepted) != 1:
            raise OracleInconsistency(f"{oracle.name} accepts {len(accepted)} fibers of {name}")
        u[name] = frozenset(accepted)
    return family, SharpWitness(fstar, u, notes)
