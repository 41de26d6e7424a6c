import pytest

from shredkit import gc2
from shredkit.errors import ShredkitError
from shredkit.gadgets import (
    EntailmentInstance,
    Inclusion,
    TilingSystem,
    encode_tiling,
    entailment_to_qa,
    lift_model,
    lift_ufds,
    product_model,
    remove_uids,
    restricted_entailment_to_fr1,
    s2t_model,
    s2t_variant,
    torus_model,
)
from shredkit.kb import FunctionalDependency as FD, Interpretation, Signature, parse_rule, satisfies
from shredkit.oracle import Problem, decide

AB = Signature.of({"A": 1, "B": 1})


def test_qa_entailed_when_constraint_implies_goal():
    kb = entailment_to_qa([gc2.parse_constraint("(sub A B)")], parse_rule("A(x) -> B(x)"), AB)
    assert decide(Problem.from_kb(kb)).kind == "entailed"


def test_qa_not_entailed_without_premises():
    kb = entailment_to_qa([], parse_rule("A(x) -> B(x)"), AB)
    v = decide(Problem.from_kb(kb))
    assert v.kind == "not-entailed" and len(v.model.domain) == 1


def test_qa_query_is_boolean_over_goal_head():
    kb = entailment_to_qa([], parse_rule("A(x) -> exists y . R(x,y)"), Signature.of({"A": 1, "R": 2}))
    assert kb.query.free == ()
    assert {a.relation for a in kb.query.atoms} == {"A", "P_x", "R"}
    assert {a.relation for a in kb.fact.atoms} == {"A", "P_x"}


R3 = Signature.of({"R": 3})


def test_lift_template():
    out = lift_ufds(EntailmentInstance(R3, fds=(FD("R", frozenset({1}), 3),)))
    (rule,) = out.rules
    assert str(rule).replace(" ", "").startswith("R(x1,x2,x3)->Phi_R_1_3(x1,x3)")
    assert out.constraints == (gc2.Funct(gc2.RName("Phi_R_1_3")),)
    assert out.fds == ()


def test_lifted_model_keeps_violation_visible():
    fds = (FD("R", frozenset({1}), 3),)
    lifted = lift_ufds(EntailmentInstance(R3, fds=fds))
    bad = Interpretation(R3, frozenset("abc"), {"R": frozenset({("a", "b", "b"), ("a", "b", "c")})})
    assert not satisfies(bad, fds[0])
    m = lift_model(bad, lifted, fds)
    assert gc2.violations(lifted.constraints, m)
    ok = Interpretation(R3, frozenset("ab"), {"R": frozenset({("a", "b", "b")})})
    assert gc2.violations(lifted.constraints, lift_model(ok, lifted, fds)) == []


def test_lift_without_ufds_is_identity():
    inst = EntailmentInstance(R3, rules=(parse_rule("R(x,y,z) -> exists w . R(y,z,w)"),))
    assert lift_ufds(inst) is inst


def test_lift_rejects_wide_determiner():
    with pytest.raises(ShredkitError):
        lift_ufds(EntailmentInstance(R3, fds=(FD("R", frozenset({1, 2}), 3),)))


def test_rm_uid_widens_both_relations():
    sig = Signature.of({"R": 2, "S": 2})
    out = remove_uids(EntailmentInstance(sig, rules=(parse_rule("R(x,y) -> exists z . S(z,x)"),)))
    assert out.signature.relations == {"R": 3, "S": 3}
    assert Inclusion("R", (1, 3), "S", (2, 3)).to_rule(out.signature).head == out.rules[0].head


def test_rm_uid_without_uids_is_identity():
    sig = Signature.of({"R": 2, "S": 2})
    inst = EntailmentInstance(sig, rules=(parse_rule("R(x,y) -> S(y,x)"),))
    assert remove_uids(inst) is inst


def _ts(tiles, h, v, seed):
    return TilingSystem(tuple(tiles), frozenset(h), frozenset(v), tuple(seed))


def _torus_failures(ts, model):
    enc = encode_tiling(ts)
    return gc2.violations(enc.constraints, model), satisfies(model, enc.rule)


def test_single_tile_torus():
    ts = _ts("a", [("a", "a")], [("a", "a")], "a")
    m = torus_model(ts, [["a"]], 1, 1)
    assert _torus_failures(ts, m) == ([], True)


CHECKER = _ts("ab", [("a", "b"), ("b", "a")], [("a", "b"), ("b", "a")], "ab")


def test_checkerboard_torus_and_flip():
    m = torus_model(CHECKER, [["a", "b"], ["b", "a"]], 2, 2)
    assert _torus_failures(CHECKER, m) == ([], True)
    flipped = torus_model(CHECKER, [["a", "b"], ["b", "b"]], 2, 2, check=False)
    bad, _ = _torus_failures(CHECKER, flipped)
    assert bad and all(isinstance(c, gc2.Sub) and isinstance(c.rhs, (gc2.Exists, gc2.Or)) for c in bad)


def test_seed_mismatch_rejected():
    with pytest.raises(ShredkitError):
        torus_model(CHECKER, [["b", "a"], ["a", "b"]], 2, 2)


def test_empty_horizontal_relation_gives_bot():
    enc = encode_tiling(_ts("a", [], [("a", "a")], "a"))
    assert gc2.Sub(gc2.CName("a"), gc2.Bot()) in enc.constraints


@pytest.mark.parametrize("n", [1, 2, 3, 5])
def test_constraint_count(n):
    tiles = [f"c{i}" for i in range(n)]
    enc = encode_tiling(_ts(tiles, [(t, t) for t in tiles], [(t, t) for t in tiles], tiles[:1]))
    assert len(enc.constraints) == n * (n - 1) // 2 + 1 + 2 * n + 2


def test_frontier_one_pair_heads():
    sig = Signature.of({"R": 4})
    red = restricted_entailment_to_fr1(EntailmentInstance(
        sig, rules=(parse_rule("R(a,b,c,d) -> exists e f . R(e,f,a,b)"),), fds=(FD("R", frozenset({1}), 2),)))
    assert [str(fd).replace(" ", "") for fd in red.instance.fds] == ["S:1->2", "S:5->6"]
    (inc, d1, _), = red.translated
    assert inc == Inclusion("R", (1, 2), "R", (3, 4))
    (head,) = d1.head
    assert head.args == ("x1_1", "y1_2", "y1_3", "y1_4", "x1_1", "y1_2", "y2_3", "y2_4")
    assert all(len(r.frontier) == 1 and len(r.head) == 1 for r in red.instance.rules)


def test_product_model_satisfies_reduction():
    sig = Signature.of({"R": 4})
    inst = EntailmentInstance(sig, rules=(parse_rule("R(a,b,c,d) -> exists e f . R(e,f,a,b)"),),
                              fds=(FD("R", frozenset({1}), 2),))
    red = restricted_entailment_to_fr1(inst)
    m = Interpretation(sig, frozenset("ab"), {"R": frozenset({("a", "b", "a", "b")})})
    assert all(satisfies(m, p) for p in inst.premises)
    pm = product_model(m, red)
    assert all(satisfies(pm, p) for p in red.instance.premises)


def test_s2t_variant_splits_relations():
    ts = _ts("ab", [("a", "b"), ("b", "a")], [("a", "b"), ("b", "a")], "ab")
    enc = encode_tiling(ts)
    var = s2t_variant(enc.rule, enc.signature)
    assert {a.relation for a in var.rule.body} == {"S"}
    assert {a.relation for a in var.rule.head} == {"D", "R", "S'"}
    assert gc2.to_sexpr(var.inclusion) == "(sub S' S)"
    m = s2t_model(torus_model(ts, [["a", "b"], ["b", "a"]], 2, 2), var)
    assert satisfies(m, var.rule) and gc2.gc2_eval(var.inclusion, m)
