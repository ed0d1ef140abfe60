"""Closure constructions on coding trees.

Each transform builds a new tree directly from the input trees (never by
decoding and re-encoding) and relabels the result with fresh ``n<k>`` labels.
"""

from __future__ import annotations

import re
from typing import Callable

from . import hfset
from .codec import CodingPair, _join, _tree, decode, encode, subtree
from .errors import StfError
from .hfset import HfSet

__all__ = [
    "pair_tree",
    "union_tree",
    "comprehension_tree",
    "function_tree",
    "wellorder_tree",
    "PREDICATES",
    "predicate",
    "embed_label",
]

Predicate = Callable[[CodingPair], bool]


def _direct_subtrees(p: CodingPair) -> list[CodingPair]:
    t = _tree(p)
    return [subtree(p, c) for c in t.children.get(p.root, ())]


def pair_tree(p: CodingPair, q: CodingPair) -> CodingPair:
    """Tree for {decode(p), decode(q)}; isomorphic inputs give a singleton."""
    return _join([p, q])


def union_tree(p: CodingPair) -> CodingPair:
    """Tree for the union: one child per isomorphism class of grandchildren."""
    t = _tree(p)
    grand = [c for child in t.children.get(p.root, ()) for c in t.children.get(child, ())]
    return _join(subtree(p, g) for g in sorted(grand))


def comprehension_tree(p: CodingPair, pred: Predicate) -> CodingPair:
    """Keep exactly the direct subtrees on which ``pred`` holds."""
    return _join(s for s in _direct_subtrees(p) if pred(s))


_ORD_LABEL = re.compile(r"n(0|[1-9][0-9]*)")


def embed_label(label: str) -> HfSet:
    """Label ``n<k>`` as the set ``ordinal(k)``."""
    m = _ORD_LABEL.fullmatch(label)
    if m is None:
        raise StfError(f"label {label!r} has no set embedding (expected n<k>)")
    return hfset.ordinal(int(m.group(1)))


def _kpair_tree(a: CodingPair, b: CodingPair) -> CodingPair:
    return _join([_join([a]), _join([a, b])])


def function_tree(p: CodingPair) -> CodingPair:
    """Tree for {<y, a_y>} where a_y is the label of the root child coding y."""
    t = _tree(p)
    pairs = []
    for c in t.children.get(p.root, ()):
        pairs.append(_kpair_tree(subtree(p, c), encode(embed_label(c))))
    return _join(pairs)


def wellorder_tree(p: CodingPair) -> CodingPair:
    """Tree for the strict serial order on the members, as Kuratowski pairs."""
    subs = _direct_subtrees(p)
    # serial order of the coded members; decoding a subtree is the comparator
    keyed = sorted(subs, key=lambda s: hfset._sort_key(decode(s)))
    pairs = [_kpair_tree(keyed[i], keyed[j]) for i in range(len(keyed)) for j in range(i + 1, len(keyed))]
    return _join(pairs)


# predicate registry for the command line


def _is_ordinal(s: CodingPair) -> bool:
    x = decode(s)
    members = hfset.tc_single(x)
    # transitive and linearly ordered by membership
    for y in members:
        for z in y:
            for w in z:
                if w not in y:
                    return False
    for y in members:
        for z in members:
            if y is not z and y not in z and z not in y:
                return False
    return True


def _rank_le(n: int) -> Predicate:
    return lambda s: hfset.rank(decode(s)) <= n


PREDICATES: dict[str, Predicate] = {
    "nonempty": lambda s: len(s.nodes) > 1,
    "is-ordinal": _is_ordinal,
    "true": lambda s: True,
    "false": lambda s: False,
}


def predicate(name: str) -> Predicate:
    """Look up ``nonempty``, ``is-ordinal``, ``true``, ``false`` or ``rank-le:<n>``."""
    if name in PREDICATES:
        return PREDICATES[name]
    m = re.fullmatch(r"rank-le:([0-9]+)", name)
    if m:
        return _rank_le(int(m.group(1)))
    raise KeyError(f"unknown predicate {name!r}")
