"""Hereditarily finite sets with structural identity.

Every :class:`HfSet` is interned: two values with the same members are the
same Python object, so ``==`` and ``hash`` are identity based and cheap.
Members are kept in ascending Ackermann order, i.e. the order of
``serial_key``.  That order is computed lazily by comparing the largest
members first, so values whose numeric key would be astronomically large
(``ordinal(6)`` already has a key with more than 2**2000 bits) can still be
built, sorted and printed.
"""

from __future__ import annotations

import contextlib
import itertools
import sys
import threading
import weakref
from functools import cmp_to_key
from typing import Iterable, Iterator

from .errors import BudgetExceeded, ParseError

__all__ = [
    "HfSet",
    "empty",
    "from_elements",
    "contains",
    "rank",
    "tc_single",
    "ordinal",
    "kpair",
    "serial_key",
    "parse_hf",
    "print_hf",
    "unfolding_size",
    "get_budget",
    "set_budget",
    "node_budget",
    "hf_sets_of_rank_below",
]

DEFAULT_BUDGET = 100_000

# serial_key refuses to build integers wider than this many bits.
MAX_KEY_BITS = 1 << 24

_budget = DEFAULT_BUDGET
_lock = threading.Lock()
_table: "weakref.WeakValueDictionary[tuple[int, ...], HfSet]" = weakref.WeakValueDictionary()
_uids = itertools.count()


def get_budget() -> int:
    return _budget


def set_budget(n: int) -> None:
    global _budget
    if n <= 0:
        raise ValueError("node budget must be positive")
    _budget = n


@contextlib.contextmanager
def node_budget(n: int) -> Iterator[None]:
    """Temporarily replace the global node budget."""
    old = _budget
    set_budget(n)
    try:
        yield
    finally:
        set_budget(old)


def check_budget(count: int, what: str) -> None:
    if count > _budget:
        raise BudgetExceeded(f"{what} needs {count} nodes, budget is {_budget}")


class HfSet:
    """A hereditarily finite set.  Build values with the module functions."""

    __slots__ = ("_elems", "_uid", "_rank", "_key", "_size", "_members", "__weakref__")

    _elems: tuple[HfSet, ...]
    _uid: int
    _rank: int
    _key: int | None
    _size: int
    _members: frozenset[HfSet]

    def __new__(cls, *args, **kwargs):
        raise TypeError("use hfset.from_elements() to build HfSet values")

    @property
    def elements(self) -> tuple[HfSet, ...]:
        """Members in ascending serial order."""
        return self._elems

    def __iter__(self) -> Iterator[HfSet]:
        return iter(self._elems)

    def __len__(self) -> int:
        return len(self._elems)

    def __contains__(self, y: object) -> bool:
        return y in self._members

    def __lt__(self, other: HfSet) -> bool:
        return _compare(self, other) < 0

    def __le__(self, other: HfSet) -> bool:
        return _compare(self, other) <= 0

    def __gt__(self, other: HfSet) -> bool:
        return _compare(self, other) > 0

    def __ge__(self, other: HfSet) -> bool:
        return _compare(self, other) >= 0

    def __repr__(self) -> str:
        if self._size > 200:
            return f"<HfSet rank={self._rank} size={self._size}>"
        return f"HfSet({print_hf(self)})"

    def __str__(self) -> str:
        return print_hf(self)

    def __reduce__(self):
        return (from_elements, (list(self._elems),))


_cmp_cache: dict[tuple[int, int], int] = {}
_CMP_CACHE_LIMIT = 1 << 20


def _compare(a: HfSet, b: HfSet) -> int:
    # Ackermann order: the set whose largest differing member is larger wins.
    if a is b:
        return 0
    ident = (a._uid, b._uid)
    got = _cmp_cache.get(ident)
    if got is not None:
        return got
    xa, xb = a._elems, b._elems
    i, j = len(xa) - 1, len(xb) - 1
    while i >= 0 and j >= 0:
        c = _compare(xa[i], xb[j])
        if c:
            break
        i -= 1
        j -= 1
    else:
        c = (i >= 0) - (j >= 0)
    if len(_cmp_cache) >= _CMP_CACHE_LIMIT:
        _cmp_cache.clear()
    _cmp_cache[ident] = c
    return c


_sort_key = cmp_to_key(_compare)


def _intern(members: Iterable[HfSet]) -> HfSet:
    elems = tuple(sorted(set(members), key=_sort_key))
    ident = tuple(e._uid for e in elems)
    found = _table.get(ident)
    if found is not None:
        return found
    with _lock:
        found = _table.get(ident)
        if found is not None:
            return found
        if len(_table) >= _budget:
            raise BudgetExceeded(f"more than {_budget} live HF sets interned")
        x = object.__new__(HfSet)
        x._elems = elems
        x._uid = next(_uids)
        x._rank = 1 + max(e._rank for e in elems) if elems else 0
        x._key = None
        x._size = 1 + sum(e._size for e in elems)
        x._members = frozenset(elems)
        _table[ident] = x
        return x


def empty() -> HfSet:
    return _intern(())


def from_elements(xs: Iterable[HfSet]) -> HfSet:
    """The set whose members are the distinct values in ``xs``."""
    xs = list(xs)
    for x in xs:
        if not isinstance(x, HfSet):
            raise TypeError(f"not an HfSet: {x!r}")
    return _intern(xs)


def contains(x: HfSet, y: HfSet) -> bool:
    return y in x._members


def rank(x: HfSet) -> int:
    return x._rank


def unfolding_size(x: HfSet) -> int:
    """Number of descending membership chains starting at ``x``."""
    return x._size


def tc_single(x: HfSet) -> frozenset[HfSet]:
    """Members of TC({x}): ``x`` together with everything hereditarily in it."""
    seen = {x}
    stack = [x]
    while stack:
        for y in stack.pop()._elems:
            if y not in seen:
                seen.add(y)
                stack.append(y)
    return frozenset(seen)


def ordinal(n: int) -> HfSet:
    """The von Neumann ordinal ``n``."""
    if n < 0:
        raise ValueError("ordinals are natural numbers here")
    check_budget(n + 1, f"ordinal({n})")
    members: list[HfSet] = []
    cur = empty()
    for _ in range(n):
        members.append(cur)
        cur = _intern(members)
    return cur


def kpair(x: HfSet, y: HfSet) -> HfSet:
    """Kuratowski pair {{x}, {x, y}}."""
    return _intern((_intern((x,)), _intern((x, y))))


def serial_key(x: HfSet) -> int:
    """Ackermann code: the sum of 2**serial_key(y) over the members y of x."""
    if x._key is not None:
        return x._key
    # post-order so recursion depth never exceeds one level
    order: list[HfSet] = []
    stack = [(x, False)]
    while stack:
        node, done = stack.pop()
        if node._key is not None:
            continue
        if done:
            order.append(node)
            continue
        stack.append((node, True))
        stack.extend((e, False) for e in node._elems if e._key is None)
    for node in order:
        if node._key is not None:
            continue
        total = 0
        for e in node._elems:
            if e._key >= MAX_KEY_BITS:
                raise BudgetExceeded(f"serial key of a rank-{node._rank} set is too large to materialise")
            total |= 1 << e._key
        node._key = total
    return x._key


def print_hf(x: HfSet) -> str:
    """Canonical text: no whitespace, members in ascending serial order."""
    check_budget(x._size, "printing")
    memo: dict[HfSet, str] = {}

    def go(s: HfSet) -> str:
        got = memo.get(s)
        if got is None:
            got = "{" + ",".join(go(e) for e in s._elems) + "}"
            memo[s] = got
        return got

    if x._rank >= sys.getrecursionlimit() - 50:
        raise BudgetExceeded("set too deep to print")
    return go(x)


def parse_hf(text: str) -> HfSet:
    """Parse ``set ::= "{" (set ("," set)*)? "}"``, whitespace allowed anywhere."""
    n = len(text)
    i = 0
    stack: list[list[HfSet]] = []
    # state: after "{" or "," we expect a set (or "}" right after "{")
    expect_item = True
    result: HfSet | None = None

    def skip(i: int) -> int:
        while i < n and text[i].isspace():
            i += 1
        return i

    i = skip(i)
    if i >= n:
        raise ParseError("expected '{'", i)
    while True:
        i = skip(i)
        if i >= n:
            raise ParseError("unexpected end of input", i)
        c = text[i]
        if expect_item:
            if c == "{":
                stack.append([])
                i += 1
                i = skip(i)
                if i < n and text[i] == "}":
                    expect_item = False
                    continue
                continue
            raise ParseError(f"expected '{{', found {c!r}", i)
        if c == "}":
            if not stack:
                raise ParseError("unbalanced '}'", i)
            done = from_elements(stack.pop())
            i += 1
            if not stack:
                result = done
                break
            stack[-1].append(done)
            continue
        if c == "," and stack:
            expect_item = True
            i += 1
            continue
        raise ParseError(f"expected ',' or '}}', found {c!r}", i)
    i = skip(i)
    if i != n:
        raise ParseError("trailing characters after set", i)
    return result


def hf_sets_of_rank_below(n: int) -> list[HfSet]:
    """All members of V_n (sets of rank < n) in ascending serial order.

    Only sensible for n <= 5; V_5 already has 65536 members.
    """
    level: list[HfSet] = []
    for _ in range(n):
        nxt = []
        for mask in range(1 << len(level)):
            nxt.append(from_elements(level[i] for i in range(len(level)) if mask >> i & 1))
        level = nxt
    level.sort(key=_sort_key)
    return level
