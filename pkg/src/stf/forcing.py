"""Forcing over finite and length-truncated posets.

Conditions are hashable ids.  ``leq(a, b)`` means ``a`` is the stronger
condition.  Finite posets are enumerated in a fixed order and every search
below follows that order, so results depend only on inputs and the seed.
"""

from __future__ import annotations

import itertools
import random
import re
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Hashable, Iterable, Iterator, Sequence

from . import hfset
from .errors import ParseError, StfError
from .hfset import HfSet

__all__ = [
    "Poset",
    "FinitePoset",
    "StringPoset",
    "DenseSet",
    "ExplicitDense",
    "MinLength",
    "GenericFilter",
    "Name",
    "PretameWitness",
    "NotDense",
    "DescentStuck",
    "BoundTooSmall",
    "is_dense",
    "is_dense_below",
    "is_predense_below",
    "generic_filter",
    "meet_dense",
    "pretame_check",
    "check_name",
    "interpret",
    "settle_length",
    "eval_at",
    "forces_membership",
    "semantic_forces",
    "parse_name",
    "format_name",
    "parse_poset",
    "format_poset",
]

Cond = Hashable


class NotDense(StfError):
    """A set handed over as dense (below some condition) is not."""


class DescentStuck(StfError):
    """The descending chain found no extension inside a dense set."""


class BoundTooSmall(StfError):
    """The exploration length cannot settle the names involved."""


# --------------------------------------------------------------------------
# posets


class Poset(ABC):
    """Order with a top element.  ``enumerable`` posets list their conditions."""

    top: Cond
    enumerable: bool = True

    @abstractmethod
    def leq(self, a: Cond, b: Cond) -> bool: ...

    @property
    @abstractmethod
    def conditions(self) -> tuple[Cond, ...]: ...

    def __contains__(self, c: object) -> bool:
        return c in self._index

    @cached_property
    def _index(self) -> dict[Cond, int]:
        return {c: i for i, c in enumerate(self.conditions)}

    def index(self, c: Cond) -> int:
        return self._index[c]

    @cached_property
    def _down(self) -> tuple[int, ...]:
        # bitmask of the conditions below each condition
        conds = self.conditions
        out = []
        for b in conds:
            m = 0
            for i, a in enumerate(conds):
                if self.leq(a, b):
                    m |= 1 << i
            out.append(m)
        return tuple(out)

    def down_mask(self, c: Cond) -> int:
        return self._down[self._index[c]]

    def below(self, p: Cond) -> tuple[Cond, ...]:
        """Conditions ``q <= p`` in enumeration order."""
        m = self.down_mask(p)
        return tuple(c for i, c in enumerate(self.conditions) if m >> i & 1)

    def compatible(self, a: Cond, b: Cond) -> bool:
        return bool(self.down_mask(a) & self.down_mask(b))

    @cached_property
    def _minimal_mask(self) -> int:
        m = 0
        for i, d in enumerate(self._down):
            if d == 1 << i:
                m |= 1 << i
        return m

    def minimal_below(self, p: Cond) -> int:
        return self.down_mask(p) & self._minimal_mask

    def mask(self, cs: Iterable[Cond]) -> int:
        m = 0
        for c in cs:
            m |= 1 << self._index[c]
        return m


class FinitePoset(Poset):
    """Explicit finite poset given by generating ``(stronger, weaker)`` pairs."""

    def __init__(self, conditions: Sequence[Cond], leq_pairs: Iterable[tuple[Cond, Cond]], top: Cond):
        conds = tuple(conditions)
        if len(set(conds)) != len(conds):
            raise ValueError("duplicate condition")
        idx = {c: i for i, c in enumerate(conds)}
        if top not in idx:
            raise ValueError(f"top {top!r} is not a condition")
        n = len(conds)
        up = [1 << i for i in range(n)]
        for a, b in leq_pairs:
            if a not in idx or b not in idx:
                raise ValueError(f"leq {a!r} {b!r} mentions an unknown condition")
            up[idx[a]] |= 1 << idx[b]
        # transitive closure over "is below" bitmasks
        changed = True
        while changed:
            changed = False
            for i in range(n):
                m = up[i]
                new = m
                for j in range(n):
                    if m >> j & 1:
                        new |= up[j]
                if new != m:
                    up[i] = new
                    changed = True
        for i in range(n):
            for j in range(i + 1, n):
                if up[i] >> j & 1 and up[j] >> i & 1:
                    raise ValueError(f"order is not antisymmetric on {conds[i]!r}, {conds[j]!r}")
        t = idx[top]
        for i in range(n):
            if not up[i] >> t & 1:
                raise ValueError(f"top is not above {conds[i]!r}")
        self._conds = conds
        self._up = up
        self.top = top

    @property
    def conditions(self) -> tuple[Cond, ...]:
        return self._conds

    def leq(self, a: Cond, b: Cond) -> bool:
        return bool(self._up[self._index[a]] >> self._index[b] & 1)

    def cover_pairs(self) -> list[tuple[Cond, Cond]]:
        """Hasse diagram edges ``(stronger, weaker)`` in enumeration order."""
        out = []
        conds = self._conds
        for i, a in enumerate(conds):
            ups = self._up[i] & ~(1 << i)
            for j, b in enumerate(conds):
                if ups >> j & 1:
                    between = ups & self._down[j] & ~(1 << j)
                    if not between:
                        out.append((a, b))
        return out


class StringPoset(Poset):
    """Binary strings of length at most ``length``; longer strings are stronger."""

    def __init__(self, length: int):
        if length < 0:
            raise ValueError("length must be non-negative")
        self.length = length
        self.top = ""

    @cached_property
    def conditions(self) -> tuple[str, ...]:
        out = [""]
        for n in range(1, self.length + 1):
            out.extend("".join(bits) for bits in itertools.product("01", repeat=n))
        return tuple(out)

    def __contains__(self, c: object) -> bool:
        return isinstance(c, str) and len(c) <= self.length and set(c) <= {"0", "1"}

    def leq(self, a: str, b: str) -> bool:
        return a.startswith(b)

    def compatible(self, a: str, b: str) -> bool:
        return a.startswith(b) or b.startswith(a)

    def below(self, p: str) -> tuple[str, ...]:
        out = [p]
        for n in range(1, self.length - len(p) + 1):
            out.extend(p + "".join(bits) for bits in itertools.product("01", repeat=n))
        return tuple(out)

    def leaves(self, p: str = "") -> tuple[str, ...]:
        """Maximal conditions below ``p``; each generates a maximal filter."""
        n = self.length - len(p)
        if n < 0:
            return ()
        return tuple(p + "".join(bits) for bits in itertools.product("01", repeat=n))


# --------------------------------------------------------------------------
# dense sets


class DenseSet(ABC):
    """A set of conditions that can propose its own members below a condition."""

    @abstractmethod
    def __contains__(self, q: object) -> bool: ...

    def extensions(self, q: Cond, poset: Poset) -> Iterator[Cond]:
        """Members ``r <= q``, in a fixed order."""
        for r in poset.below(q):
            if r in self:
                yield r


class ExplicitDense(DenseSet):
    def __init__(self, members: Iterable[Cond]):
        self.members = frozenset(members)

    def __contains__(self, q: object) -> bool:
        return q in self.members

    def __repr__(self) -> str:
        return f"ExplicitDense({sorted(map(repr, self.members))})"


class MinLength(DenseSet):
    """Strings of length at least ``n``."""

    def __init__(self, n: int):
        self.n = n

    def __contains__(self, q: object) -> bool:
        return isinstance(q, str) and len(q) >= self.n

    def __repr__(self) -> str:
        return f"MinLength({self.n})"


def _as_dense(d) -> DenseSet:
    return d if isinstance(d, DenseSet) else ExplicitDense(d)


def is_dense_below(d, p: Cond, poset: Poset) -> bool:
    """Every ``q <= p`` has an extension in ``d``."""
    d = _as_dense(d)
    if isinstance(d, ExplicitDense):
        # in a finite poset it is enough that d contains every minimal q <= p
        # or sits above it; check via masks
        dm = poset.mask(x for x in d.members if x in poset)
        for i, c in enumerate(poset.conditions):
            if poset.down_mask(p) >> i & 1 and not poset._down[i] & dm:
                return False
        return True
    return all(next(d.extensions(q, poset), None) is not None for q in poset.below(p))


def is_dense(d, poset: Poset) -> bool:
    return is_dense_below(d, poset.top, poset)


def is_predense_below(d: Iterable[Cond], q: Cond, poset: Poset) -> bool:
    """Every ``r <= q`` is compatible with some member of ``d``."""
    reach = 0
    for x in d:
        reach |= poset.down_mask(x)
    below = poset.down_mask(q)
    # r is compatible with d iff down(r) meets the union of down(x), x in d
    for i, m in enumerate(poset._down):
        if below >> i & 1 and not m & reach:
            return False
    return True


# --------------------------------------------------------------------------
# filters


@dataclass(frozen=True)
class GenericFilter:
    """Upward closure of ``generator``; ``chain`` is the descent that produced it."""

    poset: Poset = field(compare=False, repr=False)
    generator: Cond
    chain: tuple[Cond, ...] = ()

    def __contains__(self, r: object) -> bool:
        return r in self.poset and self.poset.leq(self.generator, r)

    @property
    def members(self) -> tuple[Cond, ...]:
        if not self.poset.enumerable:
            raise StfError("members of a filter on a non-enumerable poset")
        return tuple(c for c in self.poset.conditions if self.poset.leq(self.generator, c))

    def meets(self, d) -> bool:
        d = _as_dense(d)
        if self.poset.enumerable:
            return any(c in d for c in self.members)
        return any(c in d for c in self.chain)


def _descend(poset: Poset, denses: Sequence, p: Cond, rng: random.Random | None) -> tuple[Cond, ...]:
    chain = [p]
    cur = p
    for k, d in enumerate(denses):
        d = _as_dense(d)
        if cur in d:
            continue
        cands = list(d.extensions(cur, poset))
        if not cands:
            raise DescentStuck(f"no extension of {cur!r} in dense set #{k}")
        cur = cands[0] if rng is None else rng.choice(cands)
        chain.append(cur)
    return tuple(chain)


def generic_filter(poset: Poset, denses: Sequence, p: Cond, seed: int = 0) -> GenericFilter:
    """A filter containing ``p`` that meets every set in ``denses``.

    Each set must be dense below ``p``; on enumerable posets this is checked
    up front.  The descent visits the sets in order and picks uniformly among
    the candidate extensions with a generator seeded by ``seed``.
    """
    if poset.enumerable:
        for k, d in enumerate(denses):
            if not is_dense_below(d, p, poset):
                raise NotDense(f"dense set #{k} is not dense below {p!r}")
    chain = _descend(poset, denses, p, random.Random(seed))
    return GenericFilter(poset, chain[-1], chain)


def meet_dense(poset: Poset, p: Cond, denses: Sequence) -> Cond:
    """Some ``q <= p`` lying below a member of every set (first-candidate descent)."""
    return _descend(poset, denses, p, None)[-1]


@dataclass(frozen=True)
class PretameWitness:
    q: Cond
    d: tuple[tuple[Cond, ...], ...]


def pretame_check(poset: FinitePoset, dense_seq: Sequence[Iterable[Cond]], p: Cond) -> PretameWitness:
    """Least ``q <= p`` with subsets ``d_i`` of ``D_i`` predense below ``q``.

    Candidates ``q`` are tried by the size of their down-set, then by
    enumeration index; each ``d_i`` is the smallest, then first in
    enumeration order, subset that works.
    """
    families = [tuple(sorted(set(d), key=poset.index)) for d in dense_seq]
    for k, d in enumerate(families):
        if not is_dense_below(d, p, poset):
            raise NotDense(f"dense set #{k} is not dense below {p!r}")
    cands = sorted(poset.below(p), key=lambda q: (bin(poset.down_mask(q)).count("1"), poset.index(q)))
    for q in cands:
        need = poset.minimal_below(q)
        picked = []
        for d in families:
            found = None
            for size in range(len(d) + 1):
                for sub in itertools.combinations(d, size):
                    reach = 0
                    for x in sub:
                        reach |= poset.down_mask(x)
                    if need & ~reach == 0:
                        found = sub
                        break
                if found is not None:
                    break
            if found is None:
                break
            picked.append(found)
        else:
            return PretameWitness(q, tuple(picked))
    # unreachable: the D_i themselves are predense below any q <= p
    raise StfError("no pretameness witness found")


# --------------------------------------------------------------------------
# names


@dataclass(frozen=True)
class Name:
    """A name: a finite set of ``(name, condition)`` entries."""

    entries: frozenset[tuple[Name, Cond]] = frozenset()
    rank: int = field(default=0, compare=False, init=False)

    def __post_init__(self):
        object.__setattr__(self, "entries", frozenset(self.entries))
        r = 0
        for n, _ in self.entries:
            if not isinstance(n, Name):
                raise TypeError(f"entry name is not a Name: {n!r}")
            r = max(r, n.rank + 1)
        object.__setattr__(self, "rank", r)

    def conditions(self) -> set[Cond]:
        """Conditions occurring hereditarily in the name."""
        out: set[Cond] = set()
        seen: set[Name] = set()
        stack = [self]
        while stack:
            s = stack.pop()
            if s in seen:
                continue
            seen.add(s)
            for n, c in s.entries:
                out.add(c)
                stack.append(n)
        return out

    def __repr__(self) -> str:
        return f"Name({format_name(self)})"


def check_name(x: HfSet, poset: Poset) -> Name:
    """Canonical name for ``x``: every entry carries the top condition."""
    return _check_with_top(x, poset.top)


def interpret(sigma: Name, g) -> HfSet:
    """Value of ``sigma`` under ``g`` (anything supporting ``in`` on conditions)."""
    memo: dict[Name, HfSet] = {}

    def go(s: Name) -> HfSet:
        got = memo.get(s)
        if got is None:
            got = hfset.from_elements(go(n) for n, c in s.entries if c in g)
            memo[s] = got
        return got

    return go(sigma)


def settle_length(sigma: Name) -> int:
    """Shortest string length at which ``sigma`` evaluates stably."""
    return max([sigma.rank + 1, *(len(c) for c in sigma.conditions())])


@lru_cache(maxsize=1 << 16)
def _eval(sigma: Name, p: str) -> HfSet:
    memo: dict[Name, HfSet] = {}

    def go(s: Name) -> HfSet:
        got = memo.get(s)
        if got is None:
            got = hfset.from_elements(go(n) for n, c in s.entries if p.startswith(c))
            memo[s] = got
        return got

    return go(sigma)


def eval_at(sigma: Name, p: str) -> HfSet:
    """``sigma`` read off the single string ``p``.

    ``p`` has to be long enough to settle the name: longer than its rank and
    at least as long as every condition occurring in it.
    """
    need = settle_length(sigma)
    if len(p) < need:
        raise BoundTooSmall(f"|p| = {len(p)} does not settle a name that needs length {need}")
    return _eval(sigma, p)


def _check_string_name(sigma: Name, poset: StringPoset) -> None:
    for c in sigma.conditions():
        if c not in poset:
            raise ValueError(f"condition {c!r} is not in the string poset of length {poset.length}")


def forces_membership(p: str, sigma: Name, tau: Name, poset: StringPoset) -> bool:
    """Every ``q <= p`` that settles both names has ``sigma^q`` in ``tau^q``."""
    if poset.length <= max(sigma.rank, tau.rank):
        raise BoundTooSmall(f"bound {poset.length} must exceed the name ranks {sigma.rank}, {tau.rank}")
    _check_string_name(sigma, poset)
    _check_string_name(tau, poset)
    need = max(settle_length(sigma), settle_length(tau))
    for q in poset.below(p):
        if len(q) >= need and not hfset.contains(_eval(tau, q), _eval(sigma, q)):
            return False
    return True


def semantic_forces(p: str, kind: str, sigma: Name, tau: Name, length: int) -> bool:
    """Does the statement hold in every maximal filter through ``p``?"""
    if kind not in ("membership", "equality"):
        raise ValueError(f"unknown statement kind {kind!r}")
    if length <= max(sigma.rank, tau.rank):
        raise BoundTooSmall(f"bound {length} must exceed the name ranks {sigma.rank}, {tau.rank}")
    poset = StringPoset(length)
    _check_string_name(sigma, poset)
    _check_string_name(tau, poset)
    if p not in poset:
        raise ValueError(f"{p!r} is not a condition")
    for leaf in poset.leaves(p):
        s, t = _leaf_value(sigma, leaf), _leaf_value(tau, leaf)
        ok = hfset.contains(t, s) if kind == "membership" else s is t
        if not ok:
            return False
    return True


@lru_cache(maxsize=1 << 16)
def _leaf_value(sigma: Name, leaf: str) -> HfSet:
    return interpret(sigma, _PrefixFilter(leaf))


class _PrefixFilter:
    __slots__ = ("leaf",)

    def __init__(self, leaf: str):
        self.leaf = leaf

    def __contains__(self, c: object) -> bool:
        return isinstance(c, str) and self.leaf.startswith(c)


# --------------------------------------------------------------------------
# text formats

_TOKEN = re.compile(r"[A-Za-z0-9_.'+-]+")


def _format_cond(c: Cond) -> str:
    s = str(c)
    if _TOKEN.fullmatch(s):
        return s
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def format_name(sigma: Name) -> str:
    """Canonical literal: entries sorted by their own printed form."""
    memo: dict[Name, str] = {}

    def go(s: Name) -> str:
        got = memo.get(s)
        if got is None:
            parts = sorted(f"({go(n)},{_format_cond(c)})" for n, c in s.entries)
            got = "[" + ",".join(parts) + "]"
            memo[s] = got
        return got

    return go(sigma)


class _NameParser:
    def __init__(self, text: str, top: Cond):
        self.text = text
        self.i = 0
        self.top = top

    def error(self, msg: str):
        raise ParseError(msg, self.i)

    def skip(self):
        while self.i < len(self.text) and self.text[self.i].isspace():
            self.i += 1

    def peek(self) -> str:
        self.skip()
        return self.text[self.i] if self.i < len(self.text) else ""

    def expect(self, ch: str):
        if self.peek() != ch:
            self.error(f"expected {ch!r}")
        self.i += 1

    def name(self) -> Name:
        self.skip()
        if self.text.startswith("check", self.i):
            self.i += len("check")
            self.expect("(")
            depth = 0
            start = self.i
            while self.i < len(self.text):
                ch = self.text[self.i]
                if ch == "{":
                    depth += 1
                elif ch == "}":
                    depth -= 1
                elif ch == ")" and depth == 0:
                    break
                self.i += 1
            try:
                x = hfset.parse_hf(self.text[start:self.i])
            except ParseError as e:
                raise ParseError(e.message, start + (e.offset or 0)) from None
            self.expect(")")
            return _check_with_top(x, self.top)
        self.expect("[")
        entries = []
        if self.peek() == "]":
            self.i += 1
            return Name(frozenset())
        while True:
            self.expect("(")
            n = self.name()
            self.expect(",")
            c = self.cond()
            self.expect(")")
            entries.append((n, c))
            ch = self.peek()
            if ch == ",":
                self.i += 1
                continue
            if ch == "]":
                self.i += 1
                return Name(frozenset(entries))
            self.error("expected ',' or ']'")

    def cond(self) -> str:
        self.skip()
        if self.peek() == '"':
            self.i += 1
            out = []
            while self.i < len(self.text):
                ch = self.text[self.i]
                if ch == "\\" and self.i + 1 < len(self.text):
                    out.append(self.text[self.i + 1])
                    self.i += 2
                    continue
                if ch == '"':
                    self.i += 1
                    return "".join(out)
                out.append(ch)
                self.i += 1
            self.error("unterminated string")
        m = _TOKEN.match(self.text, self.i)
        if not m:
            self.error("expected a condition")
        self.i = m.end()
        return m.group(0)


def _check_with_top(x: HfSet, top: Cond) -> Name:
    memo: dict[HfSet, Name] = {}

    def go(s: HfSet) -> Name:
        got = memo.get(s)
        if got is None:
            got = Name(frozenset((go(y), top) for y in s))
            memo[s] = got
        return got

    return go(x)


def parse_name(text: str, top: Cond = "") -> Name:
    """Read ``[ (name, cond), ... ]``; ``check(<hf>)`` uses ``top`` for every entry."""
    p = _NameParser(text, top)
    n = p.name()
    p.skip()
    if p.i != len(text):
        p.error("trailing characters after name")
    return n


def parse_poset(text: str) -> FinitePoset:
    """Lines ``cond <id>``, ``leq <stronger> <weaker>``, ``top <id>``; '#' comments."""
    conds: list[str] = []
    pairs: list[tuple[str, str]] = []
    top = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if parts[0] == "cond" and len(parts) == 2:
            conds.append(parts[1])
        elif parts[0] == "leq" and len(parts) == 3:
            pairs.append((parts[1], parts[2]))
        elif parts[0] == "top" and len(parts) == 2:
            if top is not None:
                raise ParseError("second top line", line=lineno)
            top = parts[1]
        else:
            raise ParseError(f"cannot read {line!r}", line=lineno)
    if top is None:
        raise ParseError("missing top line")
    if top not in conds:
        conds.append(top)
    try:
        return FinitePoset(conds, pairs, top)
    except ValueError as e:
        raise ParseError(str(e)) from None


def format_poset(poset: FinitePoset) -> str:
    lines = [f"top {poset.top}"]
    lines.extend(f"cond {c}" for c in poset.conditions)
    lines.extend(f"leq {a} {b}" for a, b in poset.cover_pairs())
    return "\n".join(lines) + "\n"
