import random

import pytest
from hypothesis import given, strategies as st

import oracles as O
from acceptance import hole_free_grid, random_name
from stf import forcing, hfset
from stf.errors import ParseError
from stf.forcing import FinitePoset, Name, StringPoset, check_name, interpret
from stf.hfset import empty, ordinal

CHAIN2 = FinitePoset(["t", "b"], [("b", "t")], "t")
# top over a, b; c below a; d below a and b; e below b
SIX = FinitePoset(["t", "a", "b", "c", "d", "e"], [("a", "t"), ("b", "t"), ("c", "a"), ("d", "a"), ("d", "b"), ("e", "b")], "t")


def random_poset(rng: random.Random, n: int) -> FinitePoset:
    names = [f"p{i}" for i in range(n)]
    pairs = [(names[j], names[i]) for i in range(n) for j in range(i + 1, n) if rng.random() < 0.35]
    return FinitePoset(["top", *names], pairs + [(c, "top") for c in names], "top")


random_posets = st.builds(lambda seed, n: random_poset(random.Random(seed), n), st.integers(0, 10**6), st.integers(0, 7))


# posets


def test_poset_validation():
    with pytest.raises(ValueError):
        FinitePoset(["a", "b"], [("a", "b"), ("b", "a")], "a")
    with pytest.raises(ValueError):
        FinitePoset(["a", "b"], [], "a")
    with pytest.raises(ValueError):
        FinitePoset(["a"], [], "z")


def test_transitive_closure():
    P = FinitePoset(["t", "m", "b"], [("b", "m"), ("m", "t")], "t")
    assert P.leq("b", "t") and not P.leq("t", "b")
    assert P.below("t") == ("t", "m", "b")


def test_string_poset():
    P = StringPoset(2)
    assert P.conditions == ("", "0", "1", "00", "01", "10", "11")
    assert P.leq("01", "0") and not P.leq("0", "01")
    assert P.compatible("0", "01") and not P.compatible("0", "1")
    assert P.below("1") == ("1", "10", "11")
    assert P.leaves("1") == ("10", "11")


# dense sets


def test_density_examples():
    assert forcing.is_dense(SIX.conditions, SIX)
    assert not forcing.is_dense(["t"], CHAIN2)
    assert forcing.is_dense(["b"], CHAIN2)
    # maximal antichain below t
    assert forcing.is_predense_below(["a", "e"], "t", SIX)
    assert not forcing.is_predense_below(["c"], "t", SIX)
    assert forcing.is_dense_below(["c", "d"], "a", SIX)
    assert not forcing.is_dense(["c", "d"], SIX)


@given(random_posets, st.data())
def test_density_matches_brute_force(P, data):
    conds = list(P.conditions)
    d = data.draw(st.sets(st.sampled_from(conds)))
    q = data.draw(st.sampled_from(conds))
    assert forcing.is_dense_below(d, q, P) == O.brute_dense_below(P.leq, conds, d, q)
    assert forcing.is_predense_below(d, q, P) == O.brute_predense_below(P.leq, conds, d, q)


def test_min_length_dense():
    P = StringPoset(3)
    assert forcing.is_dense(forcing.MinLength(2), P)


# filters


def test_generic_with_no_dense_sets_is_upward_closure():
    G = forcing.generic_filter(SIX, [], "d", seed=1)
    assert set(G.members) == {"d", "a", "b", "t"}


def test_generic_on_strings():
    P = StringPoset(3)
    G = forcing.generic_filter(P, [forcing.MinLength(i) for i in (1, 2, 3)], "", seed=0)
    leaf = G.generator
    assert len(leaf) == 3
    assert set(G.members) == {leaf[:k] for k in range(4)}


def test_generic_checks_density():
    with pytest.raises(forcing.NotDense):
        forcing.generic_filter(SIX, [["c"]], "t")


def test_generic_deterministic_in_seed():
    P = StringPoset(4)
    dense = [forcing.MinLength(4)]
    a = forcing.generic_filter(P, dense, "", seed=11)
    b = forcing.generic_filter(P, dense, "", seed=11)
    assert a == b


def _filter_ok(P, members) -> bool:
    ms = set(members)
    upward = all(c in ms for m in ms for c in P.conditions if P.leq(m, c))
    compatible = all(P.compatible(a, b) for a in ms for b in ms)
    return upward and compatible and P.top in ms


@given(random_posets, st.data())
def test_generic_is_filter_meeting_denses(P, data):
    conds = list(P.conditions)
    p = data.draw(st.sampled_from(conds))
    minimal_below = [m for m in P.below(p) if P.below(m) == (m,)]
    denses = [list(minimal_below) + data.draw(st.lists(st.sampled_from(conds), max_size=3)) for _ in range(data.draw(st.integers(0, 3)))]
    G = forcing.generic_filter(P, denses, p, seed=data.draw(st.integers(0, 100)))
    assert p in G
    assert _filter_ok(P, G.members)
    assert all(G.meets(d) for d in denses)


def test_meet_dense():
    assert forcing.meet_dense(CHAIN2, "t", [["b"]]) == "b"
    q = forcing.meet_dense(StringPoset(3), "", [forcing.MinLength(i) for i in (1, 2, 3)])
    assert len(q) >= 3


@given(random_posets, st.data())
def test_meet_dense_meets_each_set(P, data):
    conds = list(P.conditions)
    p = data.draw(st.sampled_from(conds))
    minimal_below = [m for m in P.below(p) if P.below(m) == (m,)]
    denses = [minimal_below + data.draw(st.lists(st.sampled_from(conds), max_size=3)) for _ in range(3)]
    q = forcing.meet_dense(P, p, denses)
    assert P.leq(q, p)
    assert all(any(P.leq(q, r) for r in d) for d in denses)


def test_meet_dense_reports_stuck_descent():
    with pytest.raises(forcing.DescentStuck):
        forcing.meet_dense(SIX, "t", [["c"], ["e"]])


# pretameness


def test_pretame_examples():
    one = FinitePoset(["t"], [], "t")
    w = forcing.pretame_check(one, [["t"]], "t")
    assert w.q == "t" and w.d == (("t",),)
    w = forcing.pretame_check(CHAIN2, [["b"]], "t")
    assert w.q == "b" and w.d == (("b",),)


def test_pretame_requires_density():
    with pytest.raises(forcing.NotDense):
        forcing.pretame_check(SIX, [["c"]], "t")


@given(random_posets, st.data())
def test_pretame_witness_verifies(P, data):
    conds = list(P.conditions)
    p = data.draw(st.sampled_from(conds))
    minimal_below = [m for m in P.below(p) if P.below(m) == (m,)]
    fam = [minimal_below + data.draw(st.lists(st.sampled_from(conds), max_size=3)) for _ in range(data.draw(st.integers(0, 2)))]
    w = forcing.pretame_check(P, fam, p)
    assert P.leq(w.q, p)
    for di, Di in zip(w.d, fam):
        assert set(di) <= set(Di)
        assert O.brute_predense_below(P.leq, conds, di, w.q)


# names


def test_check_name_examples():
    P = StringPoset(2)
    assert check_name(empty(), P) == Name()
    assert check_name(ordinal(1), P) == Name({(Name(), "")})


def test_check_names_are_absolute_on_v3():
    G = forcing.generic_filter(SIX, [], "c")
    for x in hfset.hf_sets_of_rank_below(3):
        assert interpret(check_name(x, SIX), G) is x
        assert interpret(check_name(x, SIX), {"t"}) is x


def test_interpret_examples():
    e = Name()
    s = Name({(e, "b")})
    assert interpret(e, {"t"}) is empty()
    assert interpret(s, {"t"}) is empty()
    assert interpret(s, {"t", "b"}) is ordinal(1)


def _tuple(n: Name):
    return tuple((_tuple(m), c) for m, c in n.entries)


def test_interpret_matches_recursive_oracle():
    rng = random.Random(5)
    P = FinitePoset(["t", "a", "b", "c", "d"], [("a", "t"), ("b", "t"), ("c", "a"), ("d", "b")], "t")
    conds = list(P.conditions)
    for _ in range(200):
        sigma = random_name(rng, rng.randrange(4), conds)
        G = forcing.generic_filter(P, [], rng.choice(conds))
        x = interpret(sigma, G)
        assert O.to_fs(x) == O.name_value(_tuple(sigma), lambda c: c in G)
        assert hfset.rank(x) <= sigma.rank


def test_name_rank():
    e = Name()
    assert e.rank == 0
    assert Name({(e, "x")}).rank == 1
    assert Name({(Name({(e, "x")}), "y"), (e, "z")}).rank == 2
    with pytest.raises(TypeError):
        Name({("nope", "x")})


# forcing relation on strings

SIGMA = Name({(Name(), "1")})
TAU = Name({(SIGMA, "")})


def test_eval_at_examples():
    assert forcing.eval_at(Name(), "0") is empty()
    assert forcing.eval_at(SIGMA, "10") is ordinal(1)
    assert forcing.eval_at(SIGMA, "00") is empty()
    with pytest.raises(forcing.BoundTooSmall):
        forcing.eval_at(SIGMA, "1")


def test_settle_length():
    assert forcing.settle_length(Name()) == 1
    assert forcing.settle_length(SIGMA) == 2
    assert forcing.settle_length(Name({(Name(), "0110")})) == 4


def test_eval_stable_under_extension():
    P = StringPoset(6)
    for s in hole_free_grid():
        need = forcing.settle_length(s)
        for p in P.conditions:
            if len(p) >= need:
                v = forcing.eval_at(s, p)
                assert all(forcing.eval_at(s, q) is v for q in P.below(p))


def test_forces_membership_examples():
    P = StringPoset(3)
    zero_check = check_name(empty(), P)
    one_check = check_name(ordinal(1), P)
    assert all(forcing.forces_membership(p, zero_check, one_check, P) for p in P.conditions)
    # frozen: sigma is empty below "0" and tau is {sigma}
    assert forcing.forces_membership("0", SIGMA, TAU, P) is True
    assert forcing.forces_membership("", SIGMA, Name({(Name(), "1")}), P) is False


def test_forces_membership_bound_checked():
    with pytest.raises(forcing.BoundTooSmall):
        forcing.forces_membership("", SIGMA, TAU, StringPoset(2))
    with pytest.raises(ValueError):
        forcing.forces_membership("", Name({(Name(), "0000")}), TAU, StringPoset(3))


def test_semantic_forces_on_check_names():
    P = StringPoset(3)
    for x in hfset.hf_sets_of_rank_below(3):
        for y in hfset.hf_sets_of_rank_below(3):
            sx, sy = check_name(x, P), check_name(y, P)
            assert forcing.semantic_forces("", "membership", sx, sy, 3) == hfset.contains(y, x)
            assert forcing.semantic_forces("", "equality", sx, sy, 3) == (x is y)


def test_semantic_forces_errors():
    with pytest.raises(forcing.BoundTooSmall):
        forcing.semantic_forces("", "membership", SIGMA, TAU, 2)
    with pytest.raises(ValueError):
        forcing.semantic_forces("", "subset", SIGMA, TAU, 3)


def test_definability_on_strings_of_length_4():
    names = hole_free_grid()[::3]
    P = StringPoset(4)
    for s in names:
        for t in names:
            for p in P.conditions:
                assert forcing.forces_membership(p, s, t, P) == forcing.semantic_forces(p, "membership", s, t, 4)


@given(st.integers(0, 10**6))
def test_forcing_is_monotone(seed):
    rng = random.Random(seed)
    P = StringPoset(4)
    conds = list(P.conditions)
    s = random_name(rng, rng.randrange(3), conds)
    t = random_name(rng, rng.randrange(3), conds)
    for p in conds:
        for kind in ("membership", "equality"):
            if forcing.semantic_forces(p, kind, s, t, 4):
                assert all(forcing.semantic_forces(q, kind, s, t, 4) for q in P.below(p))
        if forcing.forces_membership(p, s, t, P):
            assert all(forcing.forces_membership(q, s, t, P) for q in P.below(p))


# text formats


def test_name_literal_round_trip():
    text = forcing.format_name(TAU)
    assert text == '[([([],1)],"")]'
    assert forcing.parse_name(text) == TAU
    assert forcing.parse_name(" [ ( check({}) , 1 ) ] ") == SIGMA
    assert forcing.parse_name("check({{}})", top="t") == Name({(Name(), "t")})


@pytest.mark.parametrize("text", ["", "[", "[(", "[([],)]", "[([] 1)]", "[([],1)] x", "check({)", '[([],"x)]'])
def test_name_parse_errors(text):
    with pytest.raises(ParseError):
        forcing.parse_name(text)


def test_poset_text_round_trip(data_dir):
    P = forcing.parse_poset((data_dir / "diamond.poset").read_text())
    assert P.top == "t" and set(P.conditions) == {"t", "l", "r"}
    Q = forcing.parse_poset(forcing.format_poset(SIX))
    assert Q.conditions == SIX.conditions
    assert all(Q.leq(a, b) == SIX.leq(a, b) for a in SIX.conditions for b in SIX.conditions)


@pytest.mark.parametrize("text", ["cond a\n", "top a\ntop b\n", "top a\nleq a\n", "top a\ncond b\n", "top a\nbogus\n"])
def test_poset_parse_errors(text):
    with pytest.raises(ParseError):
        forcing.parse_poset(text)
