"""Almost-disjoint coding of a finite predicate into a set of naturals.

Every index ``beta`` gets a set ``A_beta`` of naturals (the binary digits of
``beta``) and the codes of its initial segments, ``A'_beta``.  Two such code
sets share only the codes of common prefixes, so they are almost disjoint.
A generic for the coding poset then writes a set ``X`` whose intersection with
``A'_beta`` stays below a reported bound exactly for the indices in the target.

``horizon`` is the number of prefix lengths coded: ``A'_beta`` holds the codes
of the prefixes of length ``0..horizon``, which are naturals below
``2**(horizon + 1)``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Iterator

from . import forcing
from .errors import StfError
from .forcing import DenseSet, Poset

__all__ = [
    "AdFamily",
    "QCondition",
    "QPoset",
    "HorizonError",
    "LengthDense",
    "CommitDense",
    "HitDense",
    "SimulationResult",
    "code_segment",
    "characteristic",
    "ad_transform",
    "family",
    "q_leq",
    "q_compatible",
    "common_extension",
    "dense_on_slice",
    "standard_denses",
    "simulate",
    "decode_predicate",
]


class HorizonError(StfError):
    """The horizon is too small for the requested construction."""


def code_segment(bits: str) -> int:
    """The natural written in binary as ``1`` followed by ``bits``."""
    if not set(bits) <= {"0", "1"}:
        raise ValueError(f"not a binary string: {bits!r}")
    return int("1" + bits, 2)


def characteristic(b: Iterable[int], n: int) -> str:
    s = set(b)
    return "".join("1" if i in s else "0" for i in range(n))


def ad_transform(b: Iterable[int], horizon: int) -> frozenset[int]:
    """Codes of the initial segments of ``b`` of every length up to ``horizon``."""
    b = set(b)
    if any(x < 0 or x >= horizon for x in b):
        raise ValueError(f"set must lie inside [0, {horizon})")
    chi = characteristic(b, horizon)
    return frozenset(code_segment(chi[:n]) for n in range(horizon + 1))


@dataclass(frozen=True)
class AdFamily:
    horizon: int
    base: tuple[frozenset[int], ...]  # A_beta
    sets: tuple[frozenset[int], ...]  # A'_beta

    @property
    def indices(self) -> range:
        return range(len(self.sets))

    @cached_property
    def sorted_sets(self) -> tuple[tuple[int, ...], ...]:
        return tuple(tuple(sorted(s)) for s in self.sets)

    def owners(self, gamma: int) -> list[int]:
        return [b for b in self.indices if gamma in self.sets[b]]


def family(num_indices: int, horizon: int) -> AdFamily:
    """``A_beta`` is the set of bit positions of ``beta``; ``A'_beta`` its transform."""
    if num_indices < 0 or horizon < 0:
        raise ValueError("sizes must be non-negative")
    if num_indices > 2**horizon:
        raise HorizonError(f"{num_indices} distinct subsets of [0, {horizon}) do not exist")
    base = tuple(frozenset(i for i in range(horizon) if beta >> i & 1) for beta in range(num_indices))
    return AdFamily(horizon, base, tuple(ad_transform(b, horizon) for b in base))


@dataclass(frozen=True, order=True)
class QCondition:
    g: str
    S: frozenset[int] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "S", frozenset(self.S))

    def __str__(self) -> str:
        return f"({self.g or '-'}, {{{','.join(map(str, sorted(self.S)))}}})"


def _violates(h: str, start: int, committed: Iterable[int], fam: AdFamily) -> bool:
    # does h carry a 1 at some gamma >= start inside a committed A'_beta?
    for beta in committed:
        for gamma in fam.sorted_sets[beta]:
            if gamma >= len(h):
                break
            if gamma >= start and h[gamma] == "1":
                return True
    return False


def q_leq(stronger: QCondition, weaker: QCondition, fam: AdFamily) -> bool:
    """``stronger`` extends ``weaker`` and adds no 1 on a committed code set."""
    h, g = stronger.g, weaker.g
    if not h.startswith(g) or not weaker.S <= stronger.S:
        return False
    return not _violates(h, len(g), weaker.S, fam)


def common_extension(c1: QCondition, c2: QCondition, fam: AdFamily) -> QCondition | None:
    """The weakest common lower bound, or None if the two are incompatible."""
    if c1.g.startswith(c2.g):
        longer, shorter = c1, c2
    elif c2.g.startswith(c1.g):
        longer, shorter = c2, c1
    else:
        return None
    w = QCondition(longer.g, c1.S | c2.S)
    if _violates(longer.g, len(shorter.g), shorter.S, fam):
        return None
    return w


def q_compatible(c1: QCondition, c2: QCondition, fam: AdFamily) -> bool:
    return common_extension(c1, c2, fam) is not None


class QPoset(Poset):
    """The coding poset; too large to enumerate, so dense sets supply extensions."""

    enumerable = False

    def __init__(self, fam: AdFamily):
        self.fam = fam
        self.top = QCondition("", frozenset())

    @property
    def conditions(self):
        raise StfError("the coding poset is not enumerable")

    def __contains__(self, c: object) -> bool:
        return isinstance(c, QCondition) and set(c.g) <= {"0", "1"} and c.S <= set(self.fam.indices)

    def leq(self, a: QCondition, b: QCondition) -> bool:
        return q_leq(a, b, self.fam)

    def compatible(self, a: QCondition, b: QCondition) -> bool:
        return q_compatible(a, b, self.fam)

    def slice(self, max_len: int, indices: Iterable[int] | None = None) -> Iterator[QCondition]:
        """Conditions with ``|g| <= max_len`` and ``S`` drawn from ``indices``."""
        idx = sorted(self.fam.indices if indices is None else indices)
        subsets = [frozenset(c) for k in range(len(idx) + 1) for c in itertools.combinations(idx, k)]
        for n in range(max_len + 1):
            for bits in itertools.product("01", repeat=n):
                g = "".join(bits)
                for s in subsets:
                    yield QCondition(g, s)


def _blocked(fam: AdFamily, committed: Iterable[int]) -> set[int]:
    out: set[int] = set()
    for beta in committed:
        out |= fam.sets[beta]
    return out


class _QDense(DenseSet):
    def extensions(self, q: QCondition, poset: QPoset) -> Iterator[QCondition]:
        for r in self._candidates(q, poset.fam):
            if r in self and q_leq(r, q, poset.fam):
                yield r

    def _candidates(self, q: QCondition, fam: AdFamily) -> Iterable[QCondition]:
        raise NotImplementedError


class LengthDense(_QDense):
    """Conditions with ``|g| >= n``."""

    def __init__(self, n: int):
        self.n = n

    def __contains__(self, q: object) -> bool:
        return isinstance(q, QCondition) and len(q.g) >= self.n

    def _candidates(self, q, fam):
        k = len(q.g)
        if k >= self.n:
            return [q]
        blocked = _blocked(fam, q.S)
        ones = "".join("0" if i in blocked else "1" for i in range(k, self.n))
        return [QCondition(q.g + "0" * (self.n - k), q.S), QCondition(q.g + ones, q.S)]

    def __repr__(self) -> str:
        return f"LengthDense({self.n})"


class CommitDense(_QDense):
    """Conditions whose ``S`` contains ``beta``."""

    def __init__(self, beta: int):
        self.beta = beta

    def __contains__(self, q: object) -> bool:
        return isinstance(q, QCondition) and self.beta in q.S

    def _candidates(self, q, fam):
        return [QCondition(q.g, q.S | {self.beta})]

    def __repr__(self) -> str:
        return f"CommitDense({self.beta})"


class HitDense(_QDense):
    """Conditions with a 1 at some ``gamma >= n`` of ``A'_beta``."""

    def __init__(self, beta: int, n: int, fam: AdFamily):
        self.beta = beta
        self.n = n
        self.codes = fam.sorted_sets[beta]

    def __contains__(self, q: object) -> bool:
        if not isinstance(q, QCondition):
            return False
        g = q.g
        return any(g[gamma] == "1" for gamma in self.codes if self.n <= gamma < len(g))

    def _candidates(self, q, fam):
        if q in self:
            return [q]
        blocked = _blocked(fam, q.S)
        start = max(self.n, len(q.g))
        free = [gamma for gamma in self.codes if gamma >= start and gamma not in blocked][:2]
        if not free:
            raise HorizonError(f"no free code of A'_{self.beta} at or above {start} within the horizon")
        out = []
        for gamma in free:
            out.append(QCondition(q.g + "0" * (gamma - len(q.g)) + "1", q.S))
        return out

    def __repr__(self) -> str:
        return f"HitDense({self.beta}, {self.n})"


def dense_on_slice(d: DenseSet, fam: AdFamily, max_len: int, indices: Iterable[int] | None = None) -> bool:
    """Every condition with ``|g| <= max_len`` (and ``S`` inside ``indices``)
    has an extension inside ``d``."""
    poset = QPoset(fam)
    for q in poset.slice(max_len, indices):
        try:
            r = next(d.extensions(q, poset), None)
        except HorizonError:
            return False
        if r is None or r not in d or not q_leq(r, q, fam):
            return False
    return True


def standard_denses(target: Iterable[int], fam: AdFamily, horizon: int, probe_len: int = 2) -> list[DenseSet]:
    """Dense sets whose generic decodes back to ``target``.

    Order: lengths up to ``horizon // 2``, commitments for the target, hits
    on ``A'_beta`` for every other index, then the remaining lengths.

    A hit set for ``beta`` cannot be met below a condition committing
    ``beta``, so density is checked among the conditions whose ``S`` lies
    inside the target, with ``|g| <= probe_len``.  The descent never leaves
    that part of the poset.
    """
    target = sorted(set(target))
    for beta in target:
        if beta not in fam.indices:
            raise ValueError(f"index {beta} is not in the family")
    half = horizon // 2
    out: list[DenseSet] = [LengthDense(n) for n in range(half + 1)]
    out.extend(CommitDense(beta) for beta in target)
    out.extend(HitDense(beta, n, fam) for beta in fam.indices if beta not in target for n in range(horizon))
    out.extend(LengthDense(n) for n in range(half + 1, horizon + 1))
    for d in out:
        if not dense_on_slice(d, fam, probe_len, target):
            raise HorizonError(f"{d!r} is not dense at horizon {horizon}")
    return out


@dataclass(frozen=True)
class SimulationResult:
    X: tuple[int, ...]
    bound: int
    g: str
    S: frozenset[int]


def simulate(target: Iterable[int], num_indices: int, horizon: int, seed: int = 0) -> SimulationResult:
    """Build a generic through the standard dense sets and read off ``X``.

    ``bound`` is the longest string length at which an index was committed;
    past it no committed code set receives another element of ``X``.
    """
    target = sorted(set(target))
    fam = family(num_indices, horizon)
    denses = standard_denses(target, fam, horizon)
    poset = QPoset(fam)
    G = forcing.generic_filter(poset, denses, poset.top, seed)
    bound = 0
    for beta in target:
        first = next(c for c in G.chain if beta in c.S)
        bound = max(bound, len(first.g))
    g = G.generator.g
    return SimulationResult(tuple(i for i, ch in enumerate(g) if ch == "1"), bound, g, G.generator.S)


def decode_predicate(X: Iterable[int], fam: AdFamily, bound: int) -> set[int]:
    """Indices whose code set meets ``X`` only below ``bound``."""
    xs = set(X)
    return {beta for beta in fam.indices if all(gamma < bound for gamma in xs & fam.sets[beta])}
