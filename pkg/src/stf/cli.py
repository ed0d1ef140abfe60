"""Command line front end: ``stf hf|code|tree|force|adcode ...``.

Results go to stdout, diagnostics to stderr.  Exit status is 0 on success,
1 when a report fails (invalid coding pair, budget exceeded, ...) and 2 on
usage or input syntax errors.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence, TextIO

from . import adcoding, codec, forcing, hfset, treealg
from .errors import ParseError, StfError

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2

# library operation -> command that exposes it
OPERATIONS: dict[str, str] = {
    "hfset.empty": "hf eval {}",
    "hfset.from_elements": "hf set",
    "hfset.contains": "hf contains",
    "hfset.rank": "hf rank",
    "hfset.tc_single": "hf tc",
    "hfset.ordinal": "hf ordinal",
    "hfset.kpair": "hf pair",
    "hfset.serial_key": "hf key",
    "hfset.parse_hf": "hf eval",
    "hfset.print_hf": "hf eval",
    "hfset.unfolding_size": "hf size",
    "hfset.get_budget": "--budget",
    "hfset.set_budget": "--budget",
    "hfset.node_budget": "--budget",
    "hfset.hf_sets_of_rank_below": "hf universe",
    "codec.validate": "code validate",
    "codec.level_of": "code level",
    "codec.subtree": "code subtree",
    "codec.canonical_form": "code canon",
    "codec.is_isomorphic": "code iso",
    "codec.quotient": "code quotient",
    "codec.collapse": "code collapse",
    "codec.decode": "code decode",
    "codec.encode": "code encode",
    "codec.class_encode": "code class",
    "codec.codes_membership": "code member",
    "codec.codes_equality": "code equal",
    "codec.relabel": "code relabel",
    "codec.parse_pair": "code *",
    "codec.format_pair": "code *",
    "codec.parse_quotient": "code collapse",
    "codec.format_quotient": "code quotient",
    "treealg.pair_tree": "tree pair",
    "treealg.union_tree": "tree union",
    "treealg.comprehension_tree": "tree comprehend",
    "treealg.function_tree": "tree func",
    "treealg.wellorder_tree": "tree wellorder",
    "treealg.predicate": "tree comprehend --pred",
    "treealg.embed_label": "tree func",
    "forcing.is_dense": "force dense",
    "forcing.is_dense_below": "force dense --below",
    "forcing.is_predense_below": "force dense --predense",
    "forcing.generic_filter": "force generic",
    "forcing.meet_dense": "force meet",
    "forcing.pretame_check": "force pretame",
    "forcing.check_name": "force check",
    "forcing.interpret": "force interpret",
    "forcing.settle_length": "force eval",
    "forcing.eval_at": "force eval",
    "forcing.forces_membership": "force decide",
    "forcing.semantic_forces": "force decide --semantic",
    "forcing.parse_name": "force *",
    "forcing.format_name": "force check",
    "forcing.parse_poset": "force --poset",
    "forcing.format_poset": "force poset",
    "adcoding.code_segment": "adcode code",
    "adcoding.characteristic": "adcode transform",
    "adcoding.ad_transform": "adcode transform",
    "adcoding.family": "adcode family",
    "adcoding.q_leq": "adcode leq",
    "adcoding.q_compatible": "adcode compatible",
    "adcoding.common_extension": "adcode compatible",
    "adcoding.dense_on_slice": "adcode denses",
    "adcoding.standard_denses": "adcode denses",
    "adcoding.simulate": "adcode simulate",
    "adcoding.decode_predicate": "adcode decode",
}


class UsageError(Exception):
    pass


def _read(path: str | None, stdin: TextIO) -> str:
    if path is None or path == "-":
        return stdin.read()
    with open(path, encoding="ascii") as f:
        return f.read()


def _ids(text: str | None) -> list[str]:
    """Comma-separated ids; ``""`` stands for the empty string."""
    if text is None or text == "":
        return []
    return ["" if t.strip() in ('""', "''") else t.strip() for t in text.split(",")]


def _ints(text: str | None) -> list[int]:
    try:
        return [int(t) for t in _ids(text)]
    except ValueError:
        raise UsageError(f"expected comma-separated naturals, got {text!r}") from None


def _bool(b: bool) -> str:
    return "true" if b else "false"


# --------------------------------------------------------------------------
# hf


def _hf(args, out, stdin) -> int:
    op = args.op
    if op == "universe":
        for x in hfset.hf_sets_of_rank_below(args.n):
            out.write(hfset.print_hf(x) + "\n")
        return EXIT_OK
    if op == "ordinal":
        out.write(hfset.print_hf(hfset.ordinal(args.n)) + "\n")
        return EXIT_OK
    xs = [hfset.parse_hf(t) for t in args.sets]
    need = {"eval": 1, "rank": 1, "key": 1, "tc": 1, "size": 1, "contains": 2, "pair": 2}.get(op)
    if need is not None and len(xs) != need:
        raise UsageError(f"hf {op} takes {need} set literal(s)")
    if op == "eval":
        out.write(hfset.print_hf(xs[0]) + "\n")
    elif op == "set":
        out.write(hfset.print_hf(hfset.from_elements(xs)) + "\n")
    elif op == "rank":
        out.write(f"{hfset.rank(xs[0])}\n")
    elif op == "key":
        out.write(f"{hfset.serial_key(xs[0])}\n")
    elif op == "size":
        out.write(f"{hfset.unfolding_size(xs[0])}\n")
    elif op == "tc":
        for y in sorted(hfset.tc_single(xs[0])):
            out.write(hfset.print_hf(y) + "\n")
    elif op == "contains":
        out.write(_bool(hfset.contains(xs[0], xs[1])) + "\n")
    elif op == "pair":
        out.write(hfset.print_hf(hfset.kpair(xs[0], xs[1])) + "\n")
    return EXIT_OK


# --------------------------------------------------------------------------
# code


def _pair_arg(path: str | None, stdin) -> codec.CodingPair:
    return codec.parse_pair(_read(path, stdin))


def _code(args, out, stdin) -> int:
    op = args.op
    if op == "encode":
        out.write(codec.format_pair(codec.encode(hfset.parse_hf(args.arg))))
        return EXIT_OK
    if op == "class":
        xs = [hfset.parse_hf(t) for t in args.rest]
        if args.arg is not None:
            xs.insert(0, hfset.parse_hf(args.arg))
        out.write(codec.format_pair(codec.class_encode(xs)))
        return EXIT_OK
    if op == "collapse":
        qs = codec.parse_quotient(_read(args.arg, stdin))
        out.write(hfset.print_hf(codec.collapse(qs)) + "\n")
        return EXIT_OK
    if op in ("iso", "member", "equal"):
        if args.arg is None or len(args.rest) != 1:
            raise UsageError(f"code {op} takes two coding-pair files")
        p = _pair_arg(args.arg, stdin)
        q = _pair_arg(args.rest[0], stdin)
        fn = {"iso": codec.is_isomorphic, "member": codec.codes_membership, "equal": codec.codes_equality}[op]
        out.write(_bool(fn(p, q)) + "\n")
        return EXIT_OK

    p = _pair_arg(args.arg, stdin)
    if op == "validate":
        report = codec.validate(p)
        if report.ok:
            out.write("ok\n")
            return EXIT_OK
        for v in report.violations:
            out.write(v.describe() + "\n")
        return EXIT_FAIL
    if op == "decode":
        out.write(hfset.print_hf(codec.decode(p)) + "\n")
    elif op == "canon":
        out.write(codec.canonical_form(p) + "\n")
    elif op == "quotient":
        out.write(codec.format_quotient(codec.quotient(p)))
    elif op in ("level", "subtree"):
        if len(args.rest) != 1:
            raise UsageError(f"code {op} takes a file and a label")
        label = args.rest[0]
        if label not in p.nodes:
            raise UsageError(f"unknown label {label!r}")
        if op == "level":
            out.write(f"{codec.level_of(p, label)}\n")
        else:
            out.write(codec.format_pair(codec.subtree(p, label)))
    elif op == "relabel":
        mapping = {}
        for item in args.rest:
            old, sep, new = item.partition("=")
            if not sep:
                raise UsageError(f"relabel expects old=new, got {item!r}")
            mapping[old] = new
        try:
            out.write(codec.format_pair(codec.relabel(p, mapping)))
        except ValueError as e:
            raise UsageError(str(e)) from None
    return EXIT_OK


# --------------------------------------------------------------------------
# tree


def _tree(args, out, stdin) -> int:
    op = args.op
    p = _pair_arg(args.files[0] if args.files else None, stdin)
    if op == "pair":
        if len(args.files) != 2:
            raise UsageError("tree pair takes two coding-pair files")
        r = treealg.pair_tree(p, _pair_arg(args.files[1], stdin))
    elif op == "union":
        r = treealg.union_tree(p)
    elif op == "comprehend":
        if args.pred is None:
            raise UsageError("tree comprehend needs --pred")
        try:
            pred = treealg.predicate(args.pred)
        except KeyError as e:
            raise UsageError(e.args[0]) from None
        r = treealg.comprehension_tree(p, pred)
    elif op == "func":
        r = treealg.function_tree(p)
    else:
        r = treealg.wellorder_tree(p)
    out.write(codec.format_pair(r))
    return EXIT_OK


# --------------------------------------------------------------------------
# force


def _poset(args, stdin) -> forcing.Poset:
    if args.poset is not None:
        return forcing.parse_poset(_read(args.poset, stdin))
    if args.bound is None:
        raise UsageError("give --poset FILE or --bound L for the string poset")
    return forcing.StringPoset(args.bound)


def _cond(poset: forcing.Poset, text: str | None) -> str:
    if text is None:
        return poset.top
    c = _ids(text)[0] if text else ""
    if c not in poset:
        raise UsageError(f"{c!r} is not a condition")
    return c


def _denses(args, poset) -> list:
    out: list = []
    for d in args.dense or []:
        ids = _ids(d)
        for c in ids:
            if c not in poset:
                raise UsageError(f"{c!r} is not a condition")
        out.append(ids)
    out.extend(forcing.MinLength(n) for n in args.min_length or [])
    return out


def _fmt_cond(c) -> str:
    return c if c != "" else '""'


def _force(args, out, stdin) -> int:
    op = args.op
    if op == "check":
        poset = _poset(args, stdin) if (args.poset or args.bound is not None) else forcing.StringPoset(0)
        out.write(forcing.format_name(forcing.check_name(hfset.parse_hf(args.items[0]), poset)) + "\n")
        return EXIT_OK
    poset = _poset(args, stdin)
    top = poset.top
    if op == "poset":
        if not isinstance(poset, forcing.FinitePoset):
            poset = forcing.FinitePoset(poset.conditions, [(a, b) for a in poset.conditions for b in poset.conditions if poset.leq(a, b)], top)
        out.write(forcing.format_poset(poset))
        return EXIT_OK
    if op == "interpret":
        sigma = forcing.parse_name(args.items[0], top)
        if args.leaf is not None:
            g = forcing.GenericFilter(poset, _cond(poset, args.leaf))
        else:
            g = set(_ids(args.filter))
        out.write(hfset.print_hf(forcing.interpret(sigma, g)) + "\n")
        return EXIT_OK
    if op == "eval":
        sigma = forcing.parse_name(args.items[0], top)
        out.write(hfset.print_hf(forcing.eval_at(sigma, _cond(poset, args.at))) + "\n")
        return EXIT_OK
    if op == "decide":
        return _decide(args, poset, out)
    if op == "generic":
        g = forcing.generic_filter(poset, _denses(args, poset), _cond(poset, args.at), args.seed)
        out.write(" ".join(_fmt_cond(c) for c in g.members) + "\n")
        return EXIT_OK
    if op == "meet":
        q = forcing.meet_dense(poset, _cond(poset, args.at), _denses(args, poset))
        out.write(_fmt_cond(q) + "\n")
        return EXIT_OK
    if op == "dense":
        sets = _denses(args, poset)
        if len(sets) != 1:
            raise UsageError("force dense checks exactly one --dense set")
        d = sets[0]
        if args.predense:
            ok = forcing.is_predense_below(d, _cond(poset, args.below), poset)
        elif args.below is not None:
            ok = forcing.is_dense_below(d, _cond(poset, args.below), poset)
        else:
            ok = forcing.is_dense(d, poset)
        out.write(_bool(ok) + "\n")
        return EXIT_OK
    if op == "pretame":
        if not isinstance(poset, forcing.FinitePoset):
            raise UsageError("force pretame needs --poset")
        w = forcing.pretame_check(poset, [d for d in _denses(args, poset)], _cond(poset, args.at))
        out.write(f"q {_fmt_cond(w.q)}\n")
        for i, d in enumerate(w.d):
            out.write(f"d{i} " + " ".join(_fmt_cond(c) for c in d) + "\n")
        return EXIT_OK
    raise UsageError(f"unknown force operation {op!r}")


def _decide(args, poset, out) -> int:
    if not isinstance(poset, forcing.StringPoset):
        raise UsageError("force decide works on the string poset (--bound L)")
    if len(args.items) != 2:
        raise UsageError("force decide takes two names")
    sigma = forcing.parse_name(args.items[0], "")
    tau = forcing.parse_name(args.items[1], "")
    kind = args.kind
    if kind == "equality" and not args.semantic:
        raise UsageError("equality is only decided semantically; add --semantic")

    def one(p: str) -> bool:
        if args.semantic:
            return forcing.semantic_forces(p, kind, sigma, tau, poset.length)
        return forcing.forces_membership(p, sigma, tau, poset)

    if args.all:
        conds = list(poset.conditions)
        with ThreadPoolExecutor(max_workers=max(1, args.jobs)) as ex:
            results = list(ex.map(one, conds))
        for p, r in zip(conds, results):
            out.write(f"{_fmt_cond(p)} {_bool(r)}\n")
    else:
        out.write(_bool(one(_cond(poset, args.at))) + "\n")
    return EXIT_OK


# --------------------------------------------------------------------------
# adcode


def _qcond(text: str) -> adcoding.QCondition:
    g, _, s = text.partition(":")
    if not set(g) <= {"0", "1"}:
        raise UsageError(f"condition string must be binary, got {g!r}")
    return adcoding.QCondition(g, frozenset(_ints(s)))


def _adcode(args, out, stdin) -> int:
    op = args.op
    if op == "code":
        for bits in args.items:
            out.write(f"{adcoding.code_segment(bits)}\n")
        return EXIT_OK
    if op == "transform":
        b = _ints(args.items[0] if args.items else "")
        try:
            out.write(" ".join(map(str, sorted(adcoding.ad_transform(b, args.horizon)))) + "\n")
        except ValueError as e:
            raise UsageError(str(e)) from None
        return EXIT_OK
    fam = adcoding.family(args.indices, args.horizon)
    if op == "family":
        for beta in fam.indices:
            base = ",".join(map(str, sorted(fam.base[beta])))
            codes = " ".join(map(str, fam.sorted_sets[beta]))
            out.write(f"A{beta} {{{base}}} : {codes}\n")
        return EXIT_OK
    if op in ("leq", "compatible"):
        if len(args.items) != 2:
            raise UsageError(f"adcode {op} takes two conditions g:S")
        a, b = _qcond(args.items[0]), _qcond(args.items[1])
        if op == "leq":
            out.write(_bool(adcoding.q_leq(a, b, fam)) + "\n")
        else:
            w = adcoding.common_extension(a, b, fam)
            out.write(("false" if w is None else f"true {w}") + "\n")
        return EXIT_OK
    target = _ints(args.target)
    if op == "denses":
        for d in adcoding.standard_denses(target, fam, args.horizon):
            out.write(repr(d) + "\n")
        return EXIT_OK
    if op == "simulate":
        r = adcoding.simulate(target, args.indices, args.horizon, args.seed)
        decoded = sorted(adcoding.decode_predicate(r.X, fam, r.bound))
        out.write("X " + " ".join(map(str, r.X)) + "\n")
        out.write(f"bound {r.bound}\n")
        out.write("target " + ",".join(map(str, target)) + "\n")
        out.write("decoded " + ",".join(map(str, decoded)) + "\n")
        out.write(("ok" if decoded == target else "mismatch") + "\n")
        return EXIT_OK if decoded == target else EXIT_FAIL
    if op == "decode":
        if args.bound is None:
            raise UsageError("adcode decode needs --bound")
        xs = _ints(args.items[0] if args.items else "")
        out.write(",".join(map(str, sorted(adcoding.decode_predicate(xs, fam, args.bound)))) + "\n")
        return EXIT_OK
    raise UsageError(f"unknown adcode operation {op!r}")


# --------------------------------------------------------------------------
# parser


def _common(defaults: bool) -> argparse.ArgumentParser:
    # nested parsers must not overwrite a flag given before the subcommand
    def d(value):
        return value if defaults else argparse.SUPPRESS

    c = argparse.ArgumentParser(add_help=False)
    c.add_argument("--budget", type=int, default=d(None), help="node budget (overrides STF_BUDGET)")
    c.add_argument("--bound", type=int, default=d(None), help="string length L / commitment bound")
    c.add_argument("--horizon", type=int, default=d(64), help="prefix-length horizon")
    c.add_argument("--seed", type=int, default=d(0))
    c.add_argument("--jobs", type=int, default=d(1), help="worker threads for grid commands")
    c.add_argument("--pred", default=d(None), help="predicate for tree comprehend")
    return c


def build_parser() -> argparse.ArgumentParser:
    common = _common(defaults=False)
    parser = argparse.ArgumentParser(prog="stf", description=__doc__.splitlines()[0], parents=[_common(defaults=True)])
    sub = parser.add_subparsers(dest="cmd", required=True)

    hf = sub.add_parser("hf", parents=[common], help="hereditarily finite sets")
    hf_sub = hf.add_subparsers(dest="op", required=True)
    for op in ("eval", "set", "rank", "key", "tc", "size", "contains", "pair"):
        s = hf_sub.add_parser(op, parents=[common])
        s.add_argument("sets", nargs="*")
    for op in ("ordinal", "universe"):
        s = hf_sub.add_parser(op, parents=[common])
        s.add_argument("n", type=int)

    code = sub.add_parser("code", parents=[common], help="coding pairs")
    code_sub = code.add_subparsers(dest="op", required=True)
    for op in ("encode", "decode", "validate", "iso", "quotient", "collapse", "canon", "level",
               "subtree", "class", "member", "equal", "relabel"):
        s = code_sub.add_parser(op, parents=[common])
        s.add_argument("arg", nargs="?")
        s.add_argument("rest", nargs="*")

    tree = sub.add_parser("tree", parents=[common], help="closure constructions")
    tree_sub = tree.add_subparsers(dest="op", required=True)
    for op in ("pair", "union", "comprehend", "func", "wellorder"):
        s = tree_sub.add_parser(op, parents=[common])
        s.add_argument("files", nargs="*")

    force = sub.add_parser("force", parents=[common], help="forcing workbench")
    force_sub = force.add_subparsers(dest="op", required=True)
    for op in ("check", "interpret", "eval", "decide", "generic", "meet", "dense", "pretame", "poset"):
        s = force_sub.add_parser(op, parents=[common])
        s.add_argument("items", nargs="*")
        s.add_argument("--poset", help="poset file (default: string poset of length --bound)")
        s.add_argument("--at", help="condition p")
        s.add_argument("--below", help="condition q for density/predensity below q")
        s.add_argument("--predense", action="store_true")
        s.add_argument("--dense", action="append", help="comma-separated condition ids; repeatable")
        s.add_argument("--min-length", type=int, action="append", help="dense set of strings of length >= n")
        s.add_argument("--filter", help="comma-separated filter members for interpret")
        s.add_argument("--leaf", help="string generating the filter for interpret")
        s.add_argument("--kind", choices=("membership", "equality"), default="membership")
        s.add_argument("--semantic", action="store_true")
        s.add_argument("--all", action="store_true", help="decide at every condition")

    ad = sub.add_parser("adcode", parents=[common], help="almost-disjoint coding")
    ad_sub = ad.add_subparsers(dest="op", required=True)
    for op in ("code", "transform", "family", "leq", "compatible", "denses", "simulate", "decode"):
        s = ad_sub.add_parser(op, parents=[common])
        s.add_argument("items", nargs="*")
        s.add_argument("--indices", type=int, default=1)
        s.add_argument("--target", default="")
    return parser


_DISPATCH: dict[str, Callable] = {"hf": _hf, "code": _code, "tree": _tree, "force": _force, "adcode": _adcode}


def main(argv: Sequence[str] | None = None, stdin: TextIO | None = None, stdout: TextIO | None = None,
         stderr: TextIO | None = None) -> int:
    stdin = stdin or sys.stdin
    out = stdout or sys.stdout
    err = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    budget = args.budget
    if budget is None and os.environ.get("STF_BUDGET"):
        try:
            budget = int(os.environ["STF_BUDGET"])
        except ValueError:
            err.write("stf: STF_BUDGET must be a positive integer\n")
            return EXIT_USAGE
    for flag in ("budget", "bound", "horizon", "jobs"):
        v = budget if flag == "budget" else getattr(args, flag)
        if v is not None and v <= 0 and not (flag in ("bound", "horizon") and v == 0):
            err.write(f"stf: --{flag} must be positive\n")
            return EXIT_USAGE
    if args.seed < 0:
        err.write("stf: --seed must be a natural\n")
        return EXIT_USAGE

    try:
        with hfset.node_budget(budget or hfset.get_budget()):
            return _DISPATCH[args.cmd](args, out, stdin)
    except (ParseError, UsageError, OSError) as e:
        err.write(f"stf: {e}\n")
        return EXIT_USAGE
    except codec.InvalidCodingPair as e:
        err.write(f"stf: {e}\n")
        return EXIT_FAIL
    except StfError as e:
        err.write(f"stf: {e}\n")
        return EXIT_FAIL
    except ValueError as e:
        err.write(f"stf: {e}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
