"""Functional dependencies: binary ones become funct, higher-arity ones are handled on the fact.

With non-conflicting single-head frontier-one rules, an FD can only ever be violated
inside the fact. So we enumerate every way of identifying fact variables, keep the
identifications whose canonical structure satisfies the FDs, make all remaining
variables pairwise distinct, and compile each survivor without the FDs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Iterable

from more_itertools import set_partitions

from . import gc2
from .analysis import conflict_witness
from .errors import ShredkitError
from .kb import (
    ConjunctiveQuery,
    ExistentialRule,
    Fact,
    FunctionalDependency,
    Signature,
    canonical_interpretation,
    satisfies,
)
from .oracle import OracleVerdict, Problem, decide, entailed, unknown
from .treeify import DEFAULT_MAX_RULES, ArityTwoInstance, compile_instance

DEFAULT_MAX_FACT_VARS = 8


def rewrite_binary_fds(
    fds: Iterable[FunctionalDependency], sig: Signature
) -> tuple[list[gc2.ConstraintT], list[FunctionalDependency]]:
    constraints: list[gc2.ConstraintT] = []
    rest: list[FunctionalDependency] = []
    for fd in fds:
        ar = sig.arity(fd.relation)
        if ar == 1:
            raise ShredkitError("unary-fd", f"FD {fd} is on a unary relation")
        if ar == 2:
            role: gc2.Role = gc2.RName(fd.relation)
            if fd.determiner == frozenset({2}):
                role = gc2.Inv(role)
            f = gc2.Funct(role)
            if f not in constraints:
                constraints.append(f)
        elif fd not in rest:
            rest.append(fd)
    return constraints, rest


@dataclass(frozen=True)
class EqualityPattern:
    blocks: tuple[tuple[str, ...], ...]

    @property
    def representative(self) -> dict[str, str]:
        return {v: b[0] for b in self.blocks for v in b}

    def apply(self, fact: Fact) -> Fact:
        rep = self.representative
        reps = sorted(b[0] for b in self.blocks)
        neq = {(x, y) for i, x in enumerate(reps) for y in reps[i + 1:]}
        return Fact(frozenset(a.rename(rep) for a in fact.atoms), frozenset(neq))

    def encode(self) -> str:
        return "|".join(",".join(b) for b in self.blocks)


def enumerate_equalities(fact: Fact, max_vars: int = DEFAULT_MAX_FACT_VARS) -> list[EqualityPattern]:
    vs = sorted(fact.variables)
    if len(vs) > max_vars:
        raise ShredkitError(
            "cap-exceeded", f"fact has {len(vs)} variables, above --max-fact-vars {max_vars}",
            detail={"variables": len(vs), "max_fact_vars": max_vars},
        )
    out = []
    for blocks in set_partitions(vs):
        norm = tuple(sorted(tuple(sorted(b)) for b in blocks))
        where = {v: i for i, b in enumerate(norm) for v in b}
        if any(where[x] == where[y] for x, y in fact.inequalities):
            continue
        out.append(EqualityPattern(norm))
    out.sort(key=lambda p: p.encode())
    return out


def canonical_satisfies_fds(fact: Fact, fds: Iterable[FunctionalDependency], sig: Signature) -> bool:
    interp = canonical_interpretation(fact.atoms, sig)
    return all(satisfies(interp, fd) for fd in fds)


def check_gate(rules: Iterable[ExistentialRule], fds: Iterable[FunctionalDependency]) -> None:
    """Hard error unless every rule is single-head, frontier-one and non-conflicting."""
    fds = list(fds)
    for r in rules:
        if len(r.head) != 1:
            raise ShredkitError("not-single-head", f"{r.name or 'rule'} ({r}) must have a single head atom")
        if len(r.frontier) != 1:
            raise ShredkitError("not-frontier-one", f"{r.name or 'rule'} ({r}) must have exactly one frontier variable")
        w = conflict_witness(r, fds)
        if w is not None:
            raise ShredkitError(
                "conflicting-rule",
                f"{r.name or 'rule'} ({r}) conflicts with an FD on {w['relation']} (clause {w['clause']})",
                clause=w["clause"],
                detail=w,
            )


@dataclass(frozen=True)
class PatternOutcome:
    pattern: EqualityPattern
    retained: bool
    instance: ArityTwoInstance | None
    fact: Fact


@dataclass(frozen=True)
class FDCompilation:
    outcomes: tuple[PatternOutcome, ...]
    funct_constraints: tuple[gc2.ConstraintT, ...]
    higher_fds: tuple[FunctionalDependency, ...]
    report: dict[str, Any] = field(default_factory=dict, compare=False)

    @property
    def instances(self) -> list[ArityTwoInstance]:
        return [o.instance for o in self.outcomes if o.instance is not None]


def compile_with_fds(
    fact: Fact | None,
    constraints: Iterable[gc2.ConstraintT],
    rules: Iterable[ExistentialRule],
    fds: Iterable[FunctionalDependency],
    query: ConjunctiveQuery | None,
    sig: Signature,
    max_rules: int = DEFAULT_MAX_RULES,
    max_fact_vars: int = DEFAULT_MAX_FACT_VARS,
) -> FDCompilation:
    if fact is None:
        raise ShredkitError("empty-fact", "the fact must contain at least one atom")
    rules = tuple(rules)
    functs, higher = rewrite_binary_fds(fds, sig)
    check_gate(rules, higher)
    sigma = tuple(constraints) + tuple(c for c in functs if c not in tuple(constraints))
    outcomes = []
    for pat in enumerate_equalities(fact, max_fact_vars):
        f_eq = pat.apply(fact)
        if not canonical_satisfies_fds(f_eq, higher, sig):
            outcomes.append(PatternOutcome(pat, False, None, f_eq))
            continue
        inst = compile_instance(f_eq, sigma, rules, query, sig, max_rules)
        outcomes.append(PatternOutcome(pat, True, inst, f_eq))
    report = {
        "patterns": [
            {"pattern": o.pattern.encode(), "retained": o.retained} for o in outcomes
        ],
        "retained": sum(o.retained for o in outcomes),
        "funct_from_fds": [gc2.to_sexpr(c) for c in functs],
        "higher_fds": [str(fd) for fd in higher],
    }
    return FDCompilation(tuple(outcomes), tuple(functs), tuple(higher), report)


def decide_compiled(comp: FDCompilation, **budget: Any) -> OracleVerdict:
    """Conjunction of per-pattern verdicts; no retained pattern means vacuous entailment."""
    insts = comp.instances
    if not insts:
        return entailed(method="fd-patterns", vacuous=True, note="no equality pattern satisfies the FDs")
    verdicts = []
    for inst in insts:
        v = decide(Problem(inst.signature, inst.fact, (), (), inst.constraints, inst.query), **budget)
        if v.kind == "not-entailed":
            return OracleVerdict("not-entailed", model=v.model, certificate={"method": "fd-patterns", "inner": v.certificate})
        verdicts.append(v)
    if all(v.kind == "entailed" for v in verdicts):
        return entailed(method="fd-patterns", patterns=len(verdicts))
    return unknown(method="fd-patterns", undecided=sum(not v.decisive for v in verdicts))
