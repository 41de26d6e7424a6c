import pytest

from shredkit import gc2
from shredkit.analysis import classify_rule
from shredkit.errors import ShredkitError
from shredkit.kb import Atom, ConjunctiveQuery, Fact, Signature, atoms, parse_rule
from shredkit.shredding import wellformedness_constraints, shred_signature
from shredkit.treeify import add_fact_markers, check_markers_unused, compile_instance, same_up_to_renaming, treeify_rule


def test_markers_one_per_variable():
    sig = Signature.of({"R": 2})
    marked, msig = add_fact_markers(Fact(atoms("R(x,y)")), sig)
    assert marked.fact.atoms == atoms("R(x,y), P_x(x), P_y(y)")
    assert msig.arity("P_x") == 1 and msig.arity("P_y") == 1


def test_marker_single_variable():
    marked, _ = add_fact_markers(Fact(atoms("R(x,x)")), Signature.of({"R": 2}))
    assert marked.markers == (("x", "P_x"),)


def test_markers_must_stay_private():
    marked, _ = add_fact_markers(Fact(atoms("R(x,y)")), Signature.of({"R": 2}))
    with pytest.raises(ShredkitError):
        check_markers_unused(["R", "P_y"], marked)
    check_markers_unused(["R"], marked)


def test_cycle_collapses_onto_two_variables():
    sig = Signature.of({"R": 2, "S": 2, "T": 2, "U": 2, "A": 1})
    out = treeify_rule(parse_rule("R(x,y), S(y,z), T(z,w), U(w,x) -> A(x)"), Fact(atoms("R(c,d)")), sig)
    want = parse_rule("R(x,y), S(y,z), T(z,y), U(y,x) -> A(x)")
    assert any(same_up_to_renaming(r, want) for r in out)
    assert all(classify_rule(r, sig.extend({"P_c": 1, "P_d": 1})).fnl for r in out)


def test_fact_variable_split():
    sig = Signature.of({"R": 2, "S": 3, "A": 1})
    out = treeify_rule(parse_rule("R(x,y), S(y,x,x) -> A(x)"), Fact(atoms("R(z,z)")), sig)
    want = parse_rule("R(x1,y), S(y,x2,x3), P_z(x1), P_z(x2), P_z(x3) -> A(x1)")
    assert any(same_up_to_renaming(r, want) for r in out)


def test_fnl_rule_keeps_itself():
    sig = Signature.of({"R": 2, "A": 1})
    rule = parse_rule("R(x,y), A(y) -> exists z . R(x,z)")
    out = treeify_rule(rule, Fact(atoms("A(c)")), sig)
    assert any(same_up_to_renaming(r, rule) for r in out)


def test_identity_only_returns_the_rule():
    sig = Signature.of({"R": 2, "A": 1})
    rule = parse_rule("R(x,y), A(y) -> exists z . R(x,z)")
    assert treeify_rule(rule, Fact(atoms("A(c)")), sig, identity_only=True) == [rule]


def test_not_hnl_rejected():
    sig = Signature.of({"U": 1, "R": 2, "S": 3})
    with pytest.raises(ShredkitError) as e:
        treeify_rule(parse_rule("U(x) -> exists y z . R(x,y), S(x,y,z)"), Fact(atoms("U(a)")), sig)
    assert e.value.code == "not-hnl"


def test_rule_cap():
    sig = Signature.of({"R": 2, "S": 2, "T": 2, "U": 2, "A": 1})
    with pytest.raises(ShredkitError) as e:
        treeify_rule(parse_rule("R(x,y), S(y,z), T(z,w), U(w,x) -> A(x)"), Fact(atoms("R(c,d)")), sig, max_rules=2)
    assert e.value.code == "cap-exceeded"


def test_compile_without_rules():
    sig = Signature.of({"A": 1, "S": 3})
    sigma = (gc2.parse_constraint("(sub A (not bot))"),)
    inst = compile_instance(Fact(atoms("S(a,b,c)")), sigma, (), ConjunctiveQuery(atoms("A(x)")), sig)
    wf = wellformedness_constraints(shred_signature(sig))
    assert set(inst.constraints) == set(sigma) | set(wf)
    assert inst.query.atoms == atoms("A(x), Elt(x)")
    assert len(inst.fact.atoms) == 3 + 1 + 3


def test_compile_contains_fnl_inclusion():
    sig = Signature.of({"U": 1, "S": 1, "T": 2, "R": 4})
    rule = parse_rule("U(u), T(u,x), S(x) -> exists y z . T(x,y), U(y), R(x,x,z,z)")
    inst = compile_instance(Fact(atoms("S(a)")), (), (rule,), None, sig)
    assert gc2.fnl_rule_to_gc2(rule, sig) in inst.constraints


def test_compile_rejects_empty_fact():
    with pytest.raises(ShredkitError):
        compile_instance(Fact(frozenset()), (), (), None, Signature.of({"A": 1}))


def test_compile_rejects_constraint_on_high_arity_name():
    sig = Signature.of({"S": 3})
    with pytest.raises(ShredkitError):
        compile_instance(Fact(frozenset({Atom("S", ("a", "b", "c"))})), (gc2.parse_constraint("(funct S)"),), (), None, sig)
