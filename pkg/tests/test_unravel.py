import networkx as nx
import pytest

from shredkit.kb import FunctionalDependency as FD, Interpretation, Signature, gaifman_graph
from shredkit.shredding import shred_interpretation, shred_signature
from shredkit.unravel import (
    bag_graph,
    check_safety,
    fd_aware_unravel,
    is_unravelable,
    make_unravelable,
    pi_is_homomorphism,
    unravel,
)

SIG = Signature.of({"A": 1, "R": 2})


def _i(sig, dom, **ext):
    return Interpretation(sig, frozenset(dom), {r: frozenset(ts) for r, ts in ext.items()})


def test_connected_structure_unchanged():
    j = _i(SIG, "ab", R={("a", "b")})
    assert make_unravelable(j) is j


def test_isolated_element_gets_one_edge():
    j = _i(SIG, "abc", R={("a", "b")}, A={("c",)})
    out = make_unravelable(j)
    added = [r for r in out.signature.names() if r not in SIG]
    assert len(added) == 1 and len(out.tuples(added[0])) == 1
    assert is_unravelable(out)


def test_two_components_get_one_bridge():
    j = _i(SIG, "abcd", R={("a", "b"), ("c", "d")})
    out = make_unravelable(j)
    (link,) = [r for r in out.signature.names() if r not in SIG]
    assert len(out.tuples(link)) == 1
    assert nx.is_connected(gaifman_graph(out))


def test_bag_graph_single_edge_in_witness():
    bg = bag_graph(_i(SIG, "ab", R={("a", "b")}), {"x": "a", "y": "b"})
    assert bg.bags == () and list(bg.graph.nodes) == ["fact"]


def test_bag_graph_path():
    bg = bag_graph(_i(SIG, "abc", R={("a", "b"), ("b", "c")}), {"x": "a", "y": "b"})
    assert bg.bags == (("b", "c"),)
    assert bg.graph.has_edge("fact", ("b", "c"))


def test_bag_graph_triangle():
    bg = bag_graph(_i(SIG, "abc", R={("a", "b"), ("b", "c"), ("c", "a")}), {"x": "a", "y": "b"})
    assert len(bg.bags) == 2
    assert all(bg.graph.has_edge("fact", p) for p in bg.bags)
    assert bg.graph.number_of_nodes() == 3


def test_depth_zero_is_fact_bag_only():
    j = _i(SIG, "abc", R={("a", "b"), ("b", "c")})
    t = unravel(j, {"x": "a"}, 0)
    assert len(t.nodes) == 1 and set(t.root.domain) == {"a"}


def test_tree_unravels_to_itself():
    j = _i(SIG, "abcd", R={("a", "b"), ("b", "c"), ("b", "d")}, A={("d",)})
    t = unravel(j, {"x": "a"}, 5)
    u = t.interpretation()
    assert len(u.domain) == 4
    assert pi_is_homomorphism(t, j)
    assert {tuple(t.pi[e] for e in tup) for tup in u.tuples("R")} == j.tuples("R")
    assert {t.pi[e] for (e,) in u.tuples("A")} == {"d"}


@pytest.mark.parametrize("depth", [1, 2, 4])
def test_triangle_unravels_cycle_free(depth):
    j = _i(SIG, "abc", R={("a", "b"), ("b", "c"), ("c", "a")})
    t = unravel(j, {"x": "a"}, depth)
    assert pi_is_homomorphism(t, j)
    assert check_safety(t.interpretation(), t.witness).cycle_free
    assert nx.is_forest(gaifman_graph(t.interpretation()))


def test_shredded_triangle_is_not_cycle_free():
    sig = Signature.of({"S": 3})
    j = shred_interpretation(_i(sig, "abcdef", S={("a", "b", "d"), ("b", "c", "e"), ("c", "a", "f")}))
    assert check_safety(shred_interpretation(_i(sig, "abc", S={("a", "b", "c")})), ()).cycle_free
    rep = check_safety(j, ())
    assert not rep.cycle_free and rep.cycle


def test_fd_unsafe_structure_reports_witness():
    sig = Signature.of({"S": 3})
    s2 = shred_signature(sig)
    j = shred_interpretation(_i(sig, "abcd", S={("a", "b", "c"), ("a", "b", "d")}), s2)
    rep = check_safety(j, (), [FD("S", frozenset({1}), 3)])
    assert not rep.fd_safe and rep.fd_witness["element"] == "a"


def test_singleton_tuple_is_fd_safe():
    sig = Signature.of({"S": 3})
    j = shred_interpretation(_i(sig, "abc", S={("a", "b", "c")}))
    assert check_safety(j, (), [FD("S", frozenset({1}), 3)]).fd_safe


def test_fd_aware_unravel_is_safe_and_homomorphic():
    sig = Signature.of({"S": 3})
    s2 = shred_signature(sig)
    j = shred_interpretation(_i(sig, "abcd", S={("a", "b", "c"), ("a", "b", "d"), ("c", "d", "a")}), s2)
    fds = [FD("S", frozenset({1, 2}), 3)]
    j = make_unravelable(j, s2)
    t = fd_aware_unravel(j, {"x": "a"}, fds, s2, 3)
    assert pi_is_homomorphism(t, j)
    rep = check_safety(t.interpretation(), t.witness, fds)
    assert rep.ok, rep.to_json()
