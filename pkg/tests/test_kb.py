import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from shredkit.errors import ShredkitError
from shredkit.kb import (
    Atom,
    ConjunctiveQuery,
    Fact,
    FunctionalDependency,
    Interpretation,
    KnowledgeBase,
    Signature,
    atoms,
    find_homomorphisms,
    gaifman_graph,
    interpretation_to_kb,
    parse_kb,
    parse_rule,
    satisfies,
    serialize_kb,
)


def test_parse_minimal_fact():
    kb = parse_kb("rel R/3\nfact R(x,y,z)")
    assert kb.signature.relations == {"R": 3}
    assert kb.fact.atoms == frozenset({Atom("R", ("x", "y", "z"))})


def test_parse_fd():
    kb = parse_kb("rel R/3\nfd R : 1 2 -> 3")
    assert kb.fds == (FunctionalDependency("R", frozenset({1, 2}), 3),)


def test_parse_rejects_undeclared_relation():
    with pytest.raises(ShredkitError) as e:
        parse_kb("rel R/2\nrule A(x) -> exists y . R(x,y)")
    assert e.value.code in {"undeclared-relation", "arity-mismatch"}


def test_parse_rejects_arity_mismatch():
    with pytest.raises(ShredkitError):
        parse_kb("rel R/2\nfact R(a,b,c)")


def test_round_trip_serialization():
    text = (
        "rel A/1\nrel R/2\nrel T/3\nfact A(a) R(a,b) T(a,b,b)\n"
        "fd T : 1 -> 2\nrule A(x) -> exists y . R(x,y)\ndl (sub A (exists R top))\ncq R(p,q)\n"
    )
    kb = parse_kb(text)
    again = parse_kb(serialize_kb(kb))
    assert again == kb
    assert serialize_kb(again) == serialize_kb(kb)


def test_gaifman_path_and_repeats():
    g = gaifman_graph(atoms("R(x,y), S(y,z)"))
    assert sorted(map(sorted, g.edges())) == [["x", "y"], ["y", "z"]]
    g = gaifman_graph(atoms("S(z,z,x)"))
    assert sorted(map(sorted, g.edges())) == [["x", "z"]]


def test_gaifman_triangle_has_cycle():
    import networkx as nx

    g = gaifman_graph(atoms("R(x,y), S(y,z), T(z,x)"))
    assert not nx.is_forest(g)


def _interp(sig, **ext):
    dom = {e for ts in ext.values() for t in ts for e in t}
    return Interpretation(sig, frozenset(dom), ext)


def test_homomorphisms_small():
    sig = Signature.of({"R": 2})
    target = _interp(sig, R={("a", "b")})
    assert find_homomorphisms(atoms("R(x,y)"), target) == [{"x": "a", "y": "b"}]
    assert find_homomorphisms(atoms("R(x,y), R(y,x)"), target) == []


@settings(max_examples=40, deadline=None)
@given(st.sets(st.tuples(st.sampled_from("abc"), st.sampled_from("abc")), max_size=6))
def test_homomorphisms_match_brute_force(edges):
    sig = Signature.of({"R": 2})
    target = Interpretation(sig, frozenset("abc"), {"R": frozenset(edges)})
    src = atoms("R(x,y), R(y,z), R(z,w), R(w,x)")
    vs = ["w", "x", "y", "z"]
    brute = []
    for vals in itertools.product("abc", repeat=4):
        h = dict(zip(vs, vals))
        if all(tuple(h[v] for v in a.args) in target.tuples("R") for a in src):
            brute.append(h)
    got = find_homomorphisms(src, target)
    assert sorted(map(sorted, map(dict.items, got))) == sorted(map(sorted, map(dict.items, brute)))


def test_satisfies_rule_and_fds():
    sig = Signature.of({"R": 2, "T": 3})
    i = _interp(sig, R={("a", "b")})
    assert not satisfies(i, parse_rule("R(x,y) -> exists z . R(y,z)"))
    assert satisfies(i, FunctionalDependency("R", frozenset({1}), 2))
    j = _interp(sig, T={("a", "a", "b"), ("a", "a", "c")})
    assert not satisfies(j, FunctionalDependency("T", frozenset({1, 2}), 3))


def test_satisfies_fact_and_query():
    sig = Signature.of({"R": 2})
    i = _interp(sig, R={("a", "b"), ("b", "a")})
    assert satisfies(i, Fact(atoms("R(x,y), R(y,x)")))
    assert satisfies(i, ConjunctiveQuery(atoms("R(x,x)"))) is False


def test_interpretation_kb_round_trip():
    sig = Signature.of({"A": 1, "R": 2})
    i = Interpretation(sig, frozenset("abc"), {"A": {("a",)}, "R": {("a", "b")}})
    kb = interpretation_to_kb(i)
    assert kb.domain == ("c",)
    assert parse_kb(serialize_kb(kb)).to_interpretation() == i


def test_reserved_names_rejected_in_user_input():
    with pytest.raises(ShredkitError):
        parse_kb("rel Elt/1\nfact Elt(a)")


def test_fact_rejects_trivial_inequality():
    with pytest.raises(ShredkitError):
        Fact(atoms("R(x,y)"), frozenset({("x", "x")}))


def test_kb_defaults():
    kb = KnowledgeBase(Signature.of({"A": 1}))
    assert kb.rules == () and kb.fact is None
