"""Coding pairs: labelled trees that code hereditarily finite sets.

A coding pair is a node set, a distinguished root and a relation of
``(child, parent)`` pairs.  Valid pairs are exactly the rooted trees in which
no two children of a node carry isomorphic subtrees; such a tree is the full
membership-chain unfolding of the set it codes.
"""

from __future__ import annotations

import re
from collections import defaultdict
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterable, Mapping, Sequence

import networkx as nx

from . import hfset
from .errors import ParseError, StfError
from .hfset import HfSet

__all__ = [
    "CodingPair",
    "Violation",
    "ValidationReport",
    "QuotientStructure",
    "InvalidCodingPair",
    "CollapseError",
    "validate",
    "level_of",
    "subtree",
    "canonical_form",
    "is_isomorphic",
    "quotient",
    "collapse",
    "decode",
    "encode",
    "class_encode",
    "codes_membership",
    "codes_equality",
    "relabel",
    "parse_pair",
    "format_pair",
    "parse_quotient",
    "format_quotient",
]

_LABEL = re.compile(r"[!-~]+")


class InvalidCodingPair(StfError):
    """Raised by operations whose input must be a valid coding pair."""

    def __init__(self, report: ValidationReport):
        self.report = report
        super().__init__("invalid coding pair: " + "; ".join(v.describe() for v in report.violations))


class CollapseError(StfError):
    """The relation is not extensional, not well-founded, or not rooted."""


@dataclass(frozen=True)
class CodingPair:
    nodes: frozenset[str]
    root: str
    rel: frozenset[tuple[str, str]]

    def __post_init__(self):
        object.__setattr__(self, "nodes", frozenset(self.nodes))
        object.__setattr__(self, "rel", frozenset((c, p) for c, p in self.rel))
        if self.root not in self.nodes:
            raise ValueError(f"root {self.root!r} is not a node")
        for c, p in self.rel:
            if c not in self.nodes or p not in self.nodes:
                raise ValueError(f"edge ({c!r}, {p!r}) mentions an unknown node")

    @classmethod
    def from_edges(cls, root: str, edges: Iterable[tuple[str, str]], nodes: Iterable[str] = ()) -> CodingPair:
        edges = list(edges)
        allnodes = {root, *nodes}
        for c, p in edges:
            allnodes.add(c)
            allnodes.add(p)
        return cls(frozenset(allnodes), root, frozenset(edges))

    def __len__(self) -> int:
        return len(self.nodes)


@dataclass(frozen=True)
class Violation:
    prop: str  # one of "a", "b", "c", "d", "connectivity"
    witnesses: tuple[str, ...]

    def describe(self) -> str:
        return f"property {self.prop}: " + " ".join(self.witnesses)


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations


@dataclass(frozen=True)
class QuotientStructure:
    reps: frozenset[str]
    rel_tilde: frozenset[tuple[str, str]]
    root_rep: str


# --------------------------------------------------------------------------
# validation


def _distance_sets(p: CodingPair, parents_of: Mapping[str, list[str]]) -> dict[str, set[int]]:
    # levels L_0 = {root}, L_{k+1} = nodes with a parent in L_k; walks longer
    # than |nodes| only arise from cycles, which property d reports anyway
    children_of: dict[str, list[str]] = defaultdict(list)
    for c, ps in parents_of.items():
        for par in ps:
            children_of[par].append(c)
    dist: dict[str, set[int]] = defaultdict(set)
    level = {p.root}
    for k in range(len(p.nodes) + 1):
        if not level:
            break
        for v in level:
            dist[v].add(k)
        level = {c for v in level for c in children_of.get(v, ())}
    return dist


def _find_cycle_nodes(p: CodingPair, parents_of: Mapping[str, list[str]]) -> list[str]:
    g = nx.DiGraph()
    g.add_nodes_from(p.nodes)
    g.add_edges_from(p.rel)
    bad = set()
    for comp in nx.strongly_connected_components(g):
        if len(comp) > 1:
            bad |= comp
    bad |= {c for c, par in p.rel if c == par}
    return sorted(bad)


def _restriction(p: CodingPair, top: str, children_of: Mapping[str, list[str]]) -> set[str]:
    seen = {top}
    stack = [top]
    while stack:
        for c in children_of.get(stack.pop(), ()):
            if c not in seen:
                seen.add(c)
                stack.append(c)
    return seen


def _restrictions_isomorphic(p: CodingPair, y: str, z: str, children_of) -> bool:
    ny = _restriction(p, y, children_of)
    nz = _restriction(p, z, children_of)
    if len(ny) != len(nz):
        return False
    gy, gz = nx.DiGraph(), nx.DiGraph()
    for g, ns, top in ((gy, ny, y), (gz, nz, z)):
        g.add_nodes_from((n, {"top": n == top}) for n in ns)
        g.add_edges_from((c, par) for c, par in p.rel if c in ns and par in ns)
    return nx.is_isomorphic(gy, gz, node_match=lambda a, b: a["top"] == b["top"])


def validate(p: CodingPair) -> ValidationReport:
    """Check properties a-d of a coding pair on an arbitrary relation."""
    parents_of: dict[str, list[str]] = defaultdict(list)
    children_of: dict[str, list[str]] = defaultdict(list)
    for c, par in sorted(p.rel):
        parents_of[c].append(par)
        children_of[par].append(c)

    violations: list[Violation] = []

    cyc = _find_cycle_nodes(p, parents_of)
    if cyc:
        violations.append(Violation("d", tuple(cyc)))

    dist = _distance_sets(p, parents_of)
    for v in sorted(p.nodes):
        ds = dist.get(v)
        if not ds:
            violations.append(Violation("connectivity", (v,)))
        elif len(ds) > 1:
            violations.append(Violation("a", (v,)))

    level = {v: next(iter(ds)) for v, ds in dist.items() if len(ds) == 1}
    for v in sorted(parents_of):
        ps = parents_of[v]
        for i, y in enumerate(ps):
            for z in ps[i + 1:]:
                if y in level and z in level and level[y] == level[z]:
                    violations.append(Violation("c", (v, y, z)))

    if not cyc and _is_tree(p, parents_of):
        forms = _forms(p.root, children_of, p.nodes)
        for x in sorted(children_of):
            kids = children_of[x]
            seen: dict[str, str] = {}
            for y in kids:
                f = forms[y]
                if f in seen:
                    violations.append(Violation("b", (x, seen[f], y)))
                else:
                    seen[f] = y
    else:
        for x in sorted(children_of):
            kids = children_of[x]
            for i, y in enumerate(kids):
                for z in kids[i + 1:]:
                    if _restrictions_isomorphic(p, y, z, children_of):
                        violations.append(Violation("b", (x, y, z)))

    return ValidationReport(tuple(violations))


def _is_tree(p: CodingPair, parents_of: Mapping[str, list[str]]) -> bool:
    if parents_of.get(p.root):
        return False
    return all(len(parents_of.get(v, ())) == 1 for v in p.nodes if v != p.root)


def _forms(root: str, children_of: Mapping[str, Sequence[str]], nodes: Iterable[str]) -> dict[str, str]:
    """AHU strings for every node reachable below ``root``; iterative post-order."""
    forms: dict[str, str] = {}
    stack = [(root, False)]
    while stack:
        v, done = stack.pop()
        if done:
            forms[v] = "(" + "".join(sorted(forms[c] for c in children_of.get(v, ()))) + ")"
        else:
            stack.append((v, True))
            stack.extend((c, False) for c in children_of.get(v, ()))
    return forms


class _Tree:
    """Parent/children view of a coding pair that is known to be a tree."""

    __slots__ = ("pair", "parent", "children", "_forms")

    def __init__(self, p: CodingPair):
        self.pair = p
        self.parent: dict[str, str] = {}
        self.children: dict[str, list[str]] = defaultdict(list)
        for c, par in p.rel:
            if c in self.parent or c == p.root:
                raise InvalidCodingPair(validate(p))
            self.parent[c] = par
            self.children[par].append(c)
        if len(self.parent) != len(p.nodes) - 1:
            raise InvalidCodingPair(validate(p))
        for kids in self.children.values():
            kids.sort()
        self._forms: dict[str, str] | None = None
        # reachability from the root rules out cycles and stray components
        if len(_restriction(p, p.root, self.children)) != len(p.nodes):
            raise InvalidCodingPair(validate(p))

    @property
    def forms(self) -> dict[str, str]:
        if self._forms is None:
            self._forms = _forms(self.pair.root, self.children, self.pair.nodes)
        return self._forms

    def check_siblings(self) -> None:
        forms = self.forms
        for kids in self.children.values():
            if len({forms[c] for c in kids}) != len(kids):
                raise InvalidCodingPair(validate(self.pair))

    def below(self, top: str) -> list[str]:
        out = [top]
        i = 0
        while i < len(out):
            out.extend(self.children.get(out[i], ()))
            i += 1
        return out


def _tree(p: CodingPair, siblings: bool = True) -> _Tree:
    t = _Tree(p)
    if siblings:
        t.check_siblings()
    return t


# --------------------------------------------------------------------------
# structure


def level_of(p: CodingPair, n: str) -> int:
    """Length of the chain from ``n`` up to the root."""
    if n not in p.nodes:
        raise KeyError(n)
    t = _tree(p)
    k = 0
    while n != p.root:
        n = t.parent[n]
        k += 1
    return k


def subtree(p: CodingPair, n: str) -> CodingPair:
    """``n`` together with every node that reaches ``n`` by a chain."""
    if n not in p.nodes:
        raise KeyError(n)
    t = _tree(p)
    keep = t.below(n)
    keep_set = set(keep)
    return CodingPair(frozenset(keep), n, frozenset((c, par) for c, par in p.rel if c in keep_set and c != n))


@lru_cache(maxsize=4096)
def canonical_form(p: CodingPair) -> str:
    """Relabelling-invariant AHU string: leaf ``()``, children sorted."""
    return _tree(p).forms[p.root]


def is_isomorphic(p: CodingPair, q: CodingPair) -> bool:
    return canonical_form(p) == canonical_form(q)


def relabel(p: CodingPair, mapping: Mapping[str, str]) -> CodingPair:
    """Rename nodes through an injective ``mapping`` (unmapped labels are kept)."""
    f = lambda v: mapping.get(v, v)
    nodes = frozenset(f(v) for v in p.nodes)
    if len(nodes) != len(p.nodes):
        raise ValueError("relabelling is not injective")
    return CodingPair(nodes, f(p.root), frozenset((f(c), f(par)) for c, par in p.rel))


# --------------------------------------------------------------------------
# quotient and collapse


def quotient(p: CodingPair, choose: Callable[[list[str]], str] | None = None) -> QuotientStructure:
    """Identify nodes with isomorphic subtrees.

    ``choose`` picks the representative of each class from its (sorted)
    members; by default the least label.
    """
    t = _tree(p)
    classes: dict[str, list[str]] = defaultdict(list)
    for v, f in t.forms.items():
        classes[f].append(v)
    rep_of: dict[str, str] = {}
    for members in classes.values():
        members.sort()
        r = choose(members) if choose is not None else members[0]
        if r not in members:
            raise ValueError("chosen representative is not a class member")
        for v in members:
            rep_of[v] = r
    rel = frozenset((rep_of[c], rep_of[par]) for c, par in p.rel)
    return QuotientStructure(frozenset(rep_of.values()), rel, rep_of[p.root])


def collapse(qs: QuotientStructure) -> HfSet:
    """Mostowski collapse of an extensional well-founded rooted relation."""
    ext: dict[str, set[str]] = {r: set() for r in qs.reps}
    for c, par in qs.rel_tilde:
        if c not in ext or par not in ext:
            raise CollapseError(f"edge ({c}, {par}) leaves the representative set")
        ext[par].add(c)
    if qs.root_rep not in ext:
        raise CollapseError("root is not a representative")

    g = nx.DiGraph()
    g.add_nodes_from(qs.reps)
    g.add_edges_from(qs.rel_tilde)
    if not nx.is_directed_acyclic_graph(g):
        raise CollapseError("relation is not well-founded")

    seen: dict[frozenset[str], str] = {}
    for r in sorted(qs.reps):
        key = frozenset(ext[r])
        if key in seen:
            raise CollapseError(f"not extensional: {seen[key]} and {r} have the same members")
        seen[key] = r

    reach = _restriction(None, qs.root_rep, {k: sorted(v) for k, v in ext.items()})
    if len(reach) != len(qs.reps):
        raise CollapseError("some representatives lie outside the root's transitive closure")

    value: dict[str, HfSet] = {}
    for r in nx.topological_sort(g):
        value[r] = hfset.from_elements(value[c] for c in ext[r])
    return value[qs.root_rep]


def decode(p: CodingPair) -> HfSet:
    """The set coded by a valid coding pair."""
    return collapse(quotient(p))


# --------------------------------------------------------------------------
# encoding


def encode(x: HfSet) -> CodingPair:
    """Full chain unfolding of ``x`` with labels n0, n1, ... in preorder."""
    hfset.check_budget(hfset.unfolding_size(x), "encoding")
    nodes: list[str] = []
    rel: list[tuple[str, str]] = []
    stack: list[tuple[HfSet, str | None]] = [(x, None)]
    while stack:
        s, parent = stack.pop()
        label = f"n{len(nodes)}"
        nodes.append(label)
        if parent is not None:
            rel.append((label, parent))
        # members in ascending serial order, so push them reversed
        stack.extend((e, label) for e in reversed(s.elements))
    return CodingPair(frozenset(nodes), "n0", frozenset(rel))


def _join(parts: Iterable[CodingPair]) -> CodingPair:
    """Fresh root over relabelled copies of ``parts``; isomorphic parts merge.

    Labels are n0 (root) then a preorder walk of the kept parts in the given
    order, children visited by (canonical form, label).
    """
    kept: list[_Tree] = []
    seen: set[str] = set()
    for part in parts:
        t = _tree(part)
        f = t.forms[part.root]
        if f not in seen:
            seen.add(f)
            kept.append(t)
    hfset.check_budget(1 + sum(len(t.pair.nodes) for t in kept), "tree construction")
    nodes = ["n0"]
    rel: list[tuple[str, str]] = []
    for t in kept:
        forms = t.forms
        stack: list[tuple[str, str]] = [(t.pair.root, "n0")]
        while stack:
            v, parent = stack.pop()
            label = f"n{len(nodes)}"
            nodes.append(label)
            rel.append((label, parent))
            kids = sorted(t.children.get(v, ()), key=lambda c: (forms[c], c))
            stack.extend((c, label) for c in reversed(kids))
    return CodingPair(frozenset(nodes), "n0", frozenset(rel))


def class_encode(xs: Iterable[HfSet]) -> CodingPair:
    """Code the finite collection ``xs`` by joining the trees of its members."""
    members = sorted(set(xs))
    return _join(encode(y) for y in members)


def codes_membership(p: CodingPair, q: CodingPair) -> bool:
    """Is ``p`` isomorphic to a direct subtree of ``q``?"""
    fp = canonical_form(p)
    tq = _tree(q)
    return any(tq.forms[c] == fp for c in tq.children.get(q.root, ()))


def codes_equality(p: CodingPair, q: CodingPair) -> bool:
    return is_isomorphic(p, q)


# --------------------------------------------------------------------------
# text format


def _check_label(s: str, lineno: int) -> str:
    if not _LABEL.fullmatch(s):
        raise ParseError(f"bad label {s!r}", line=lineno)
    return s


def _parse_lines(text: str, node_kw: str):
    root = None
    nodes: list[str] = []
    edges: list[tuple[str, str]] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        kw = parts[0]
        if kw == "root" and len(parts) == 2:
            if root is not None:
                raise ParseError("second root line", line=lineno)
            root = _check_label(parts[1], lineno)
        elif kw == "edge" and len(parts) == 3:
            edges.append((_check_label(parts[1], lineno), _check_label(parts[2], lineno)))
        elif kw == node_kw and len(parts) == 2:
            nodes.append(_check_label(parts[1], lineno))
        else:
            raise ParseError(f"cannot read {line!r}", line=lineno)
    if root is None:
        raise ParseError("missing root line")
    return root, nodes, edges


def parse_pair(text: str) -> CodingPair:
    """Read ``root <label>`` / ``edge <child> <parent>`` lines.

    A ``node <label>`` line declares a node that occurs in no edge.
    """
    root, nodes, edges = _parse_lines(text, "node")
    return CodingPair.from_edges(root, edges, nodes)


def _format(root: str, nodes: Iterable[str], rel: Iterable[tuple[str, str]], node_kw: str) -> str:
    lines = [f"root {root}"]
    rel = list(rel)
    mentioned = {root} | {c for c, _ in rel} | {par for _, par in rel}
    lines.extend(sorted(f"edge {c} {par}" for c, par in rel))
    lines.extend(sorted(f"{node_kw} {v}" for v in nodes if v not in mentioned))
    return "\n".join(lines) + "\n"


def format_pair(p: CodingPair) -> str:
    for v in p.nodes:
        _check_label(v, 0)
    return _format(p.root, p.nodes, p.rel, "node")


def parse_quotient(text: str) -> QuotientStructure:
    """Same layout as coding pairs; ``rep`` lines declare isolated representatives."""
    root, reps, edges = _parse_lines(text, "rep")
    allreps = {root, *reps}
    for c, par in edges:
        allreps.update((c, par))
    return QuotientStructure(frozenset(allreps), frozenset(edges), root)


def format_quotient(qs: QuotientStructure) -> str:
    return _format(qs.root_rep, qs.reps, qs.rel_tilde, "rep")
