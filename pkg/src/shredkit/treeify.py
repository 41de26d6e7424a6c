"""Fact-dependent treeification of head-non-looping rules and the end-to-end compiler.

A head-non-looping rule may still have a cyclic body. Treeification replaces it by
the fully-non-looping rules obtained by (1) identifying body variables, then
(2) cutting some of the remaining variables into one copy per occurrence, each copy
tagged with the marker of a fact variable. Markers P_z hold exactly the witness of z
in the intended models, so a cut variable can only be matched inside the fact.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Any, Iterable, Iterator

from more_itertools import set_partitions

from . import gc2
from .analysis import classify_rule, is_non_looping
from .errors import ShredkitError
from .kb import (
    Atom,
    ConjunctiveQuery,
    ExistentialRule,
    Fact,
    KnowledgeBase,
    Signature,
)
from .shredding import (
    shred_fact,
    shred_query,
    shred_signature,
    wellformedness_constraints,
)

DEFAULT_MAX_RULES = 10000


def marker_name(var: str) -> str:
    return f"P_{var}"


@dataclass(frozen=True)
class MarkedFact:
    base: Fact
    markers: tuple[tuple[str, str], ...]  # (fact variable, marker relation)

    @property
    def fact(self) -> Fact:
        extra = {Atom(rel, (v,)) for v, rel in self.markers}
        return Fact(self.base.atoms | extra, self.base.inequalities)


def add_fact_markers(fact: Fact, sig: Signature) -> tuple[MarkedFact, Signature]:
    markers = tuple((v, marker_name(v)) for v in sorted(fact.variables))
    clash = sorted(rel for _, rel in markers if rel in sig)
    if clash:
        raise ShredkitError("reserved-name", f"marker relations {clash} already exist; was the fact marked twice?")
    return MarkedFact(fact, markers), sig.extend({rel: 1 for _, rel in markers}, reserved=True)


def check_markers_unused(sig_names: Iterable[str], marked: MarkedFact) -> None:
    """Marker relations must be private to the fact."""
    used = set(sig_names) & {rel for _, rel in marked.markers}
    if used:
        raise ShredkitError("reserved-name", f"marker relations {sorted(used)} used outside the fact")


# --- canonical forms ---------------------------------------------------------


def _refine(rule: ExistentialRule) -> dict[str, Any]:
    occ: list[tuple[str, Atom]] = [("b", a) for a in sorted(rule.body)] + [("h", a) for a in sorted(rule.head)]
    vs = sorted(rule.body_variables | rule.head_variables)
    frontier, ex = rule.frontier, rule.existentials
    color: dict[str, Any] = {v: (v in frontier, v in ex) for v in vs}
    for _ in range(len(vs) + 1):
        sig: dict[str, list[Any]] = {v: [] for v in vs}
        for side, a in occ:
            ctx = tuple(color[w] for w in a.args)
            for p, v in enumerate(a.args):
                sig[v].append((side, a.relation, p, ctx))
        new = {v: (color[v], tuple(sorted(map(repr, sig[v])))) for v in vs}
        ranks = {c: i for i, c in enumerate(sorted(set(map(repr, new.values()))))}
        new = {v: ranks[repr(new[v])] for v in vs}
        if len(set(new.values())) == len(set(map(repr, color.values()))):
            color = new
            break
        color = new
    return color


def canonical_key(rule: ExistentialRule, budget: int = 20000) -> tuple[Any, ...]:
    """Equal keys iff the rules are equal up to variable renaming.

    Colour refinement fixes the order between classes; permutations inside classes
    are tried exhaustively. Beyond `budget` permutations the key degrades to the
    literal rule (never merges non-isomorphic rules, may miss isomorphic ones).
    """
    color = _refine(rule)
    classes: dict[Any, list[str]] = {}
    for v, c in sorted(color.items(), key=lambda kv: (repr(kv[1]), kv[0])):
        classes.setdefault(c, []).append(v)
    groups = [classes[c] for c in sorted(classes, key=repr)]
    total = 1
    for g in groups:
        for k in range(2, len(g) + 1):
            total *= k
    if total > budget:
        return ("literal", tuple(sorted(map(str, rule.body))), tuple(sorted(map(str, rule.head))))
    best = None
    for perms in itertools.product(*(itertools.permutations(g) for g in groups)):
        order = [v for p in perms for v in p]
        ren = {v: f"v{i}" for i, v in enumerate(order)}
        key = (
            tuple(sorted(str(a.rename(ren)) for a in rule.body)),
            tuple(sorted(str(a.rename(ren)) for a in rule.head)),
        )
        if best is None or key < best:
            best = key
    return ("canon",) + best  # type: ignore[operator]


def same_up_to_renaming(r1: ExistentialRule, r2: ExistentialRule) -> bool:
    return canonical_key(r1) == canonical_key(r2)


# --- treeification ---------------------------------------------------------------


def _merge(rule: ExistentialRule, blocks: list[list[str]]) -> ExistentialRule:
    ren = {v: min(b) for b in blocks for v in b}
    return ExistentialRule(frozenset(a.rename(ren) for a in rule.body), frozenset(a.rename(ren) for a in rule.head), rule.name)


def _fresh_namer(taken: set[str]):
    def fresh(base: str, i: int) -> str:
        name = f"{base}{i}"
        while name in taken:
            name += "_"
        taken.add(name)
        return name

    return fresh


def _split(rule: ExistentialRule, cut: tuple[str, ...]) -> tuple[list[Atom], dict[str, list[str]]]:
    """Body with every variable in `cut` replaced by a fresh copy per occurrence."""
    taken = set(rule.body_variables | rule.head_variables)
    fresh = _fresh_namer(taken)
    counters = {x: 0 for x in cut}
    copies: dict[str, list[str]] = {x: [] for x in cut}
    body: list[Atom] = []
    for a in sorted(rule.body):
        args = []
        for v in a.args:
            if v in counters:
                counters[v] += 1
                c = fresh(v, counters[v])
                copies[v].append(c)
                args.append(c)
            else:
                args.append(v)
        body.append(Atom(a.relation, tuple(args)))
    return body, copies


def _merged_variants(rule: ExistentialRule, identity_only: bool) -> list[ExistentialRule]:
    xs = sorted(rule.body_variables)
    if identity_only:
        return [rule]
    out: dict[Any, ExistentialRule] = {}
    # coarsest partitions last so the identity variant keeps its names first
    for blocks in sorted(set_partitions(xs), key=lambda p: (-len(p), sorted(map(sorted, p)))):
        merged = _merge(rule, [sorted(b) for b in blocks])
        key = canonical_key(merged)
        out.setdefault(key, merged)
    return list(out.values())


def iter_treeification(
    rule: ExistentialRule, fact_vars: Iterable[str], sig: Signature, identity_only: bool = False
) -> Iterator[ExistentialRule]:
    """Raw candidate stream (with duplicates) of fully-non-looping rules."""
    fvars = sorted(fact_vars)
    for merged in _merged_variants(rule, identity_only):
        xs = sorted(merged.body_variables)
        (xf,) = sorted(merged.frontier)
        sizes = range(0, 1) if identity_only else range(0, len(xs) + 1)
        for k in sizes:
            for cut in itertools.combinations(xs, k):
                body, copies = _split(merged, cut)
                if not is_non_looping(body, sig):
                    continue
                head_choices = copies[xf] if xf in copies else [xf]
                for g in itertools.product(fvars, repeat=len(cut)):
                    marks = [Atom(marker_name(gz), (c,)) for x, gz in zip(cut, g) for c in copies[x]]
                    for hx in head_choices:
                        head = frozenset(a.rename({xf: hx}) for a in merged.head)
                        yield ExistentialRule(frozenset(body) | frozenset(marks), head, rule.name)


def treeify_rule(
    rule: ExistentialRule,
    fact: Fact,
    sig: Signature,
    max_rules: int = DEFAULT_MAX_RULES,
    identity_only: bool = False,
) -> list[ExistentialRule]:
    """Fully-non-looping rules implied by `rule` given the fact; deduplicated up to renaming."""
    cls = classify_rule(rule, sig)
    if not cls.hnl:
        raise ShredkitError(
            "not-hnl", f"rule {rule.name or rule} is not head-non-looping", detail=cls.to_json()
        )
    msig = sig.extend({marker_name(v): 1 for v in fact.variables}, reserved=True) if not identity_only else sig
    found: dict[Any, ExistentialRule] = {}
    for cand in iter_treeification(rule, fact.variables, sig, identity_only):
        key = canonical_key(cand)
        if key in found:
            continue
        if not classify_rule(cand, msig).fnl:
            raise AssertionError(f"treeification produced a non-Fnl rule {cand}")
        found[key] = cand
        if len(found) > max_rules:
            raise ShredkitError(
                "cap-exceeded",
                f"treeification of {rule.name or rule} exceeds --max-rules {max_rules}",
                detail={"rule": str(rule), "max_rules": max_rules},
            )
    out = []
    for i, (_, r) in enumerate(sorted(found.items(), key=lambda kv: repr(kv[0])), start=1):
        out.append(ExistentialRule(r.body, r.head, f"{rule.name or 'rule'}.tr{i}" if not identity_only else rule.name))
    return out


# --- compiler ----------------------------------------------------------------------


@dataclass(frozen=True)
class ArityTwoInstance:
    signature: Signature
    fact: Fact
    constraints: tuple[gc2.ConstraintT, ...]
    query: ConjunctiveQuery | None
    rules: tuple[ExistentialRule, ...] = ()  # the fully-non-looping rules that were translated
    report: dict[str, Any] = field(default_factory=dict, compare=False)

    def to_kb(self, with_constraints: bool = True) -> KnowledgeBase:
        return KnowledgeBase(
            self.signature, self.fact, (), (), self.constraints if with_constraints else (), self.query
        )


def _check_sigma(constraints: Iterable[gc2.ConstraintT], sig: Signature) -> None:
    low = set(sig.low())
    for c in constraints:
        gc2.check_constraint(c, sig)
        outside = gc2.constraint_relations(c) - low
        if outside:
            raise ShredkitError("bad-constraint", f"constraint {gc2.to_sexpr(c)} uses non-arity-two names {sorted(outside)}")


def compile_instance(
    fact: Fact | None,
    constraints: Iterable[gc2.ConstraintT],
    rules: Iterable[ExistentialRule],
    query: ConjunctiveQuery | None,
    sig: Signature,
    max_rules: int = DEFAULT_MAX_RULES,
    force_treeify: bool = False,
    identity_only: bool = False,
) -> ArityTwoInstance:
    """(fact, Sigma, rules, q) -> shredded fact, Sigma + wf + translated rules, shredded q.

    Fully-non-looping rule sets skip treeification unless `force_treeify` is set;
    `identity_only` restricts a forced run to the trivial treeification.
    """
    if fact is None or not fact.atoms:
        raise ShredkitError("empty-fact", "the fact must contain at least one atom")
    if query is not None and query.free:
        raise ShredkitError("bad-query", "compile expects a Boolean query")
    constraints = tuple(constraints)
    rules = tuple(rules)
    _check_sigma(constraints, sig)
    classes = []
    for r in rules:
        cls = classify_rule(r, sig)
        if not cls.hnl:
            why = "frontier is not a single variable" if not cls.frontier_one else "head has a looping Berge cycle"
            raise ShredkitError(
                "not-hnl",
                f"{r.name or 'rule'} ({r}) is not head-non-looping: {why}",
                detail={"rule": r.name, "berge_cycle": cls.head_cycle.to_json() if cls.head_cycle else None},
            )
        classes.append(cls)
    all_fnl = all(c.fnl for c in classes)
    run_tr = force_treeify or not all_fnl
    mark = run_tr and not identity_only
    work_sig = sig
    work_fact = fact
    if mark:
        marked, work_sig = add_fact_markers(fact, sig)
        work_fact = marked.fact
    out_rules: list[ExistentialRule] = []
    per_rule: list[dict[str, Any]] = []
    for r in rules:
        produced = treeify_rule(r, fact, sig, max_rules, identity_only=identity_only) if run_tr else [r]
        per_rule.append({"rule": r.name, "source": str(r), "fnl_rules": len(produced)})
        out_rules.extend(produced)
    s2 = shred_signature(work_sig)
    translated = [gc2.fnl_rule_to_gc2(r, work_sig) for r in out_rules]
    cons = tuple(constraints) + tuple(wellformedness_constraints(s2)) + tuple(translated)
    q2 = shred_query(query, sig) if query is not None else None
    sizes = [gc2.node_count(c) for c in translated]
    report = {
        "treeified": run_tr,
        "markers": mark,
        "rules": per_rule,
        "fnl_rule_count": len(out_rules),
        "constraint_count": len(cons),
        "translated_node_counts": sizes,
        "total_nodes": sum(gc2.node_count(c) for c in cons),
        "lint": sorted({n for c in translated for n in gc2.lint(c)}),
    }
    return ArityTwoInstance(s2.signature, shred_fact(work_fact, work_sig), cons, q2, tuple(out_rules), report)

