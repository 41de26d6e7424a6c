import pytest

from shredkit import gc2
from shredkit.errors import ShredkitError
from shredkit.kb import ConjunctiveQuery, Fact, FunctionalDependency as FD, Signature, atoms, parse_rule
from shredkit.fds import (
    canonical_satisfies_fds,
    check_gate,
    compile_with_fds,
    decide_compiled,
    enumerate_equalities,
    rewrite_binary_fds,
)

SIG = Signature.of({"A": 1, "R": 2, "S": 3})


def test_binary_forward_fd_is_funct():
    assert rewrite_binary_fds([FD("R", frozenset({1}), 2)], SIG) == ([gc2.Funct(gc2.RName("R"))], [])


def test_binary_backward_fd_is_inverse_funct():
    assert rewrite_binary_fds([FD("R", frozenset({2}), 1)], SIG) == ([gc2.Funct(gc2.Inv(gc2.RName("R")))], [])


def test_higher_fd_passes_through():
    fd = FD("S", frozenset({1, 2}), 3)
    assert rewrite_binary_fds([fd], SIG) == ([], [fd])


def test_unary_fd_rejected():
    with pytest.raises(ShredkitError):
        rewrite_binary_fds([FD("A", frozenset({1}), 1)], SIG)


@pytest.mark.parametrize(
    "fact, count",
    [
        (Fact(atoms("A(x)")), 1),
        (Fact(atoms("S(x,y,z)")), 5),
        (Fact(atoms("R(x,y)"), frozenset({("x", "y")})), 1),
        (Fact(atoms("S(a,b,c), R(c,d)")), 15),
    ],
)
def test_equality_pattern_counts(fact, count):
    assert len(enumerate_equalities(fact)) == count


def test_equality_cap():
    with pytest.raises(ShredkitError) as e:
        enumerate_equalities(Fact(atoms("S(a,b,c), S(d,e,f)")), max_vars=5)
    assert e.value.code == "cap-exceeded"


def test_canonical_fd_check():
    assert canonical_satisfies_fds(Fact(atoms("S(x,x,y)")), [FD("S", frozenset({1}), 3)], SIG)
    assert not canonical_satisfies_fds(Fact(atoms("S(x,y,u), S(x,y,v)")), [FD("S", frozenset({1, 2}), 3)], SIG)
    assert canonical_satisfies_fds(Fact(atoms("S(x,y,u), S(x,y,v)")), [], SIG)


def test_no_fds_keeps_every_pattern():
    comp = compile_with_fds(Fact(atoms("S(x,y,z)")), (), (), (), None, SIG)
    assert len(comp.outcomes) == 5 and all(o.retained for o in comp.outcomes)
    assert len(comp.instances) == 5


def test_fd_drops_identity_pattern():
    comp = compile_with_fds(Fact(atoms("S(x,y,u), S(x,y,v)")), (), (), [FD("S", frozenset({1, 2}), 3)], None, SIG)
    kept = {o.pattern.encode() for o in comp.outcomes if o.retained}
    assert "u|v|x|y" not in kept
    assert "u,v|x|y" in kept


def test_gate_accepts_non_conflicting_rule():
    check_gate([parse_rule("A(x) -> exists y z . S(x,y,z)")], [FD("S", frozenset({1}), 2)])


def test_gate_rejects_conflicting_rule():
    with pytest.raises(ShredkitError) as e:
        check_gate([parse_rule("A(x) -> exists y . S(x,y,y)")], [FD("S", frozenset({1}), 2)])
    assert e.value.code == "conflicting-rule"


def test_merge_forced_by_fd_is_entailed():
    sig = Signature.of({"A": 1, "B": 1, "S": 3})
    comp = compile_with_fds(
        Fact(atoms("S(x,y,u), S(x,y,v), A(u), B(v)")), (), (), [FD("S", frozenset({1, 2}), 3)],
        ConjunctiveQuery(atoms("A(w), B(w)")), sig,
    )
    assert decide_compiled(comp).kind == "entailed"
    free = compile_with_fds(
        Fact(atoms("S(x,y,u), S(x,y,v), A(u), B(v)")), (), (), [], ConjunctiveQuery(atoms("A(w), B(w)")), sig,
    )
    assert decide_compiled(free).kind == "not-entailed"
