import pytest
from hypothesis import given, strategies as st

import oracles as O
from stf import codec, hfset, treealg
from stf.codec import decode, encode, validate
from stf.errors import BudgetExceeded, StfError
from stf.hfset import empty, from_elements, kpair, ordinal, parse_hf

V3 = hfset.hf_sets_of_rank_below(3)
V4 = hfset.hf_sets_of_rank_below(4)
v4_sets = st.sampled_from(V4)


def test_pair_examples():
    assert decode(treealg.pair_tree(encode(empty()), encode(ordinal(1)))) is ordinal(2)
    p = encode(ordinal(2))
    t = treealg.pair_tree(p, p)
    assert decode(t) is from_elements([ordinal(2)])
    assert validate(t).ok


def test_pair_matches_sets_on_v3():
    for x in V3:
        for y in V3:
            t = treealg.pair_tree(encode(x), encode(y))
            assert validate(t).ok
            assert decode(t) is from_elements([x, y])


def test_union_examples():
    x = parse_hf("{{{}},{{},{{}}}}")
    assert decode(treealg.union_tree(encode(x))) is ordinal(2)
    assert decode(treealg.union_tree(encode(empty()))) is empty()


@given(v4_sets)
def test_union_commutes(x):
    t = treealg.union_tree(encode(x))
    assert validate(t).ok
    assert O.to_fs(decode(t)) == O.FS(z for y in O.to_fs(x) for z in y)
    # no two root children carry isomorphic subtrees
    kids = [c for c, par in t.rel if par == t.root]
    forms = [codec.canonical_form(codec.subtree(t, c)) for c in kids]
    assert len(set(forms)) == len(forms)


def test_comprehension_examples():
    t = treealg.comprehension_tree(encode(ordinal(3)), treealg.predicate("nonempty"))
    assert decode(t) is from_elements([ordinal(1), ordinal(2)])
    assert decode(treealg.comprehension_tree(encode(ordinal(3)), lambda s: False)) is empty()


@given(v4_sets)
def test_comprehension_true_is_identity(x):
    assert decode(treealg.comprehension_tree(encode(x), lambda s: True)) is x


def test_predicate_registry():
    assert treealg.predicate("is-ordinal")(encode(ordinal(3)))
    assert not treealg.predicate("is-ordinal")(encode(parse_hf("{{{}}}")))
    assert treealg.predicate("rank-le:2")(encode(ordinal(2)))
    assert not treealg.predicate("rank-le:1")(encode(ordinal(2)))
    with pytest.raises(KeyError):
        treealg.predicate("prime")


def test_is_ordinal_matches_oracle_on_v4():
    pred = treealg.predicate("is-ordinal")
    for x in V4:
        assert pred(encode(x)) == O.fs_is_ordinal(O.to_fs(x))


def test_function_examples():
    assert decode(treealg.function_tree(encode(empty()))) is empty()
    # encode(1) has the single child n1, which embeds as ordinal 1
    got = decode(treealg.function_tree(encode(ordinal(1))))
    assert got is from_elements([kpair(empty(), ordinal(1))])


def test_function_tree_needs_embeddable_labels(data_dir):
    p = codec.parse_pair((data_dir / "tree3.cp").read_text())
    with pytest.raises(StfError):
        treealg.function_tree(p)
    assert treealg.embed_label("n12") is ordinal(12)
    with pytest.raises(StfError):
        treealg.embed_label("n012")


def test_function_tree_is_injective_function_on_v3():
    for x in V3:
        t = treealg.function_tree(encode(x))
        assert validate(t).ok
        pairs = list(decode(t))
        firsts = []
        seconds = []
        for z in pairs:
            small = min(z.elements, key=len)
            a = small.elements[0]
            big = max(z.elements, key=len)
            b = next((w for w in big if w is not a), a)
            firsts.append(a)
            seconds.append(b)
        assert set(firsts) == set(x.elements) and len(set(firsts)) == len(firsts)
        assert len(set(seconds)) == len(seconds)


def test_wellorder_examples():
    assert decode(treealg.wellorder_tree(encode(empty()))) is empty()
    got = decode(treealg.wellorder_tree(encode(ordinal(2))))
    assert got is from_elements([kpair(ordinal(0), ordinal(1))])


def test_wellorder_is_strict_total_order_on_v3():
    for x in V3:
        got = decode(treealg.wellorder_tree(encode(x)))
        members = list(x.elements)
        expected = {kpair(members[i], members[j]) for i in range(len(members)) for j in range(i + 1, len(members))}
        assert set(got.elements) == expected


def test_transforms_respect_budget():
    with hfset.node_budget(40):
        p = encode(ordinal(5))
        with pytest.raises(BudgetExceeded):
            treealg.pair_tree(p, encode(ordinal(4)))


def test_outputs_use_fresh_labels():
    t = treealg.pair_tree(encode(ordinal(2)), encode(ordinal(1)))
    assert t.root == "n0"
    assert t.nodes == {f"n{i}" for i in range(len(t.nodes))}
