import pytest

from shredkit import gc2
from shredkit.errors import ShredkitError
from shredkit.gadgets import TilingSystem, encode_tiling
from shredkit.kb import ConjunctiveQuery, Fact, FunctionalDependency as FD, Signature, atoms, parse_rule, satisfies
from shredkit.oracle import Problem, bounded_chase, decide, model_failures, small_model_search

SIG = Signature.of({"A": 1, "B": 1, "R": 2})


def test_chase_without_rules_is_the_fact():
    res = bounded_chase(Fact(atoms("A(a), R(a,b)")), (), 3, SIG)
    assert res.fixpoint and res.rounds == 0
    assert set(res.interpretation.facts()) == atoms("A(a), R(a,b)")


def test_chase_one_step_fixpoint():
    res = bounded_chase(Fact(atoms("A(a)")), [parse_rule("A(x) -> exists y . R(x,y)")], 5, SIG)
    assert res.fixpoint
    assert len(res.interpretation.tuples("R")) == 1


@pytest.mark.parametrize("depth", [1, 2, 3, 6])
def test_chase_infinite_grows_one_per_round(depth):
    res = bounded_chase(Fact(atoms("A(a)")), [parse_rule("A(x) -> exists y . R(x,y), A(y)")], depth, SIG)
    assert not res.fixpoint
    assert len(res.interpretation.domain) == depth + 1


def test_chase_restricted_skips_satisfied_trigger():
    res = bounded_chase(Fact(atoms("A(a), R(a,a)")), [parse_rule("A(x) -> exists y . R(x,y)")], 3, SIG)
    assert res.fixpoint and len(res.interpretation.domain) == 1


def test_chase_merges_on_funct():
    res = bounded_chase(
        Fact(atoms("R(a,b), R(a,c), A(b), B(c)")), (), 2, SIG,
        constraints=[gc2.parse_constraint("(funct R)")], query=ConjunctiveQuery(atoms("A(x), B(x)")),
    )
    assert res.query_round is not None


def test_chase_negative_depth_rejected():
    with pytest.raises(ShredkitError):
        bounded_chase(Fact(atoms("A(a)")), (), -1, SIG)


def test_not_entailed_with_one_element_model():
    v = decide(Problem(SIG, Fact(atoms("A(a)")), query=ConjunctiveQuery(atoms("B(x)"))))
    assert v.kind == "not-entailed"
    assert len(v.model.domain) == 1


def test_entailed_by_chase():
    p = Problem(SIG, Fact(atoms("A(a)")), (parse_rule("A(x) -> exists y . R(x,y)"),),
                query=ConjunctiveQuery(atoms("R(x,y)")))
    v = decide(p)
    assert v.kind == "entailed" and v.certificate["method"] == "chase"


def test_small_model_respects_fds():
    sig = Signature.of({"A": 1, "B": 1, "T": 3})
    p = Problem(sig, Fact(atoms("T(a,b,c), T(a,b,d), A(c)")), fds=(FD("T", frozenset({1, 2}), 3),),
                query=ConjunctiveQuery(atoms("A(x), T(y,z,x), B(x)")))
    v = small_model_search(p, 3)
    assert v.kind == "not-entailed"
    assert satisfies(v.model, FD("T", frozenset({1, 2}), 3))
    assert model_failures(p, v.model) == []


def test_small_model_search_finds_existential_witness_cycle():
    p = Problem(SIG, Fact(atoms("A(a)")), (parse_rule("A(x) -> exists y . R(x,y), A(y)"),),
                query=ConjunctiveQuery(atoms("B(x)")))
    v = decide(p, depth=3, max_size=2)
    assert v.kind == "not-entailed" and v.certificate["method"] == "small-model"


def _shift_tiles(n):
    tiles = tuple(f"c{i}" for i in range(n))
    h = frozenset((tiles[i], tiles[(i + 1) % n]) for i in range(n))
    v = frozenset((t, t) for t in tiles)
    return TilingSystem(tiles, h, v, (tiles[0],))


def test_tiling_without_small_periodic_solution_is_unknown():
    enc = encode_tiling(_shift_tiles(5))
    p = Problem(enc.signature, enc.fact, (enc.rule,), (), enc.constraints, None)
    v = small_model_search(p, 3)
    assert v.kind == "unknown"


def test_small_tiling_has_model():
    enc = encode_tiling(_shift_tiles(2))
    p = Problem(enc.signature, enc.fact, (enc.rule,), (), enc.constraints, None)
    v = decide(p, depth=2, max_size=2)
    assert v.kind == "not-entailed" and len(v.model.domain) == 2


def test_verdict_json():
    v = decide(Problem(SIG, Fact(atoms("A(a)")), query=ConjunctiveQuery(atoms("B(x)"))))
    j = v.to_json()
    assert j["verdict"] == "not-entailed" and "counter_model" in j
