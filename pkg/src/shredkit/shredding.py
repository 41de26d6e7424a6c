"""Reifying higher-arity relations into an arity-two signature and back.

Every tuple of an arity-n relation R becomes a fresh element t with A_R(t) and
binary links R.i(t, a_i); ordinary elements are marked Elt. The well-formedness
constraints make these encodings recognisable, and `unshred_interpretation`
inverts the encoding on any structure satisfying them.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from . import gc2
from .errors import ShredkitError
from .kb import (
    Atom,
    ConjunctiveQuery,
    ExistentialRule,
    Fact,
    Interpretation,
    Signature,
    variables_of,
)

ELT = "Elt"


def tuple_marker(rel: str) -> str:
    return f"A_{rel}"


def position_role(rel: str, i: int) -> str:
    return f"{rel}.{i}"


@dataclass(frozen=True)
class ShreddedSignature:
    base: Signature
    signature: Signature
    provenance: Mapping[str, tuple[str, int]] = field(compare=False)  # derived name -> (R, i); i=0 for A_R

    def high(self) -> list[str]:
        return self.base.high()


def shred_signature(sig: Signature) -> ShreddedSignature:
    derived: dict[str, int] = {ELT: 1}
    prov: dict[str, tuple[str, int]] = {ELT: ("", 0)}
    for rel in sig.high():
        derived[tuple_marker(rel)] = 1
        prov[tuple_marker(rel)] = (rel, 0)
        for i in range(1, sig.arity(rel) + 1):
            derived[position_role(rel, i)] = 2
            prov[position_role(rel, i)] = (rel, i)
    clash = sorted(set(derived) & set(sig.names()))
    if clash:
        raise ShredkitError("reserved-name", f"relation names {clash} collide with shredded names")
    low = {n: sig.arity(n) for n in sig.low()}
    out = Signature.of(low, sig.reserved & set(low)).extend(derived, reserved=True)
    return ShreddedSignature(sig, out, prov)


def wellformedness_constraints(s2: ShreddedSignature) -> list[gc2.ConstraintT]:
    sig = s2.base
    elt = gc2.CName(ELT)
    top = gc2.Top()
    out: list[gc2.ConstraintT] = []
    for c in sig.unary():
        out.append(gc2.Sub(gc2.CName(c), elt))
    for r in sig.binary():
        out.append(gc2.Sub(gc2.Exists(gc2.RName(r), top), elt))
        out.append(gc2.Sub(gc2.Exists(gc2.Inv(gc2.RName(r)), top), elt))
    high = sig.high()
    for r in high:
        a_r = gc2.CName(tuple_marker(r))
        roles = [gc2.RName(position_role(r, i)) for i in range(1, sig.arity(r) + 1)]
        out.extend(gc2.Sub(gc2.Exists(ri, top), a_r) for ri in roles)
        out.extend(gc2.Sub(gc2.Exists(gc2.Inv(ri), top), elt) for ri in roles)
        out.append(gc2.Sub(gc2.And((elt, a_r)), gc2.Bot()))
        for s in high:
            if s > r:
                out.append(gc2.Sub(gc2.And((a_r, gc2.CName(tuple_marker(s)))), gc2.Bot()))
        out.extend(gc2.Sub(a_r, gc2.Exists(ri, top)) for ri in roles)
        out.extend(gc2.Funct(ri) for ri in roles)
    return out


# --- atoms -------------------------------------------------------------------


class _Fresh:
    def __init__(self, used: Iterable[str]) -> None:
        self.used = set(used)
        self.k = 0

    def __call__(self) -> str:
        while True:
            self.k += 1
            name = f"t#{self.k}"
            if name not in self.used:
                self.used.add(name)
                return name


def _shred(atoms_: Iterable[Atom], sig: Signature, fresh: _Fresh, shred_map: dict[str, Atom]) -> frozenset[Atom]:
    atoms_ = sorted(set(atoms_))
    out = {Atom(ELT, (v,)) for v in variables_of(atoms_)}
    for a in atoms_:
        ar = sig.arity(a.relation)
        if ar <= 2:
            out.add(a)
            continue
        t = fresh()
        shred_map[t] = a
        out.add(Atom(tuple_marker(a.relation), (t,)))
        out.update(Atom(position_role(a.relation, i), (t, v)) for i, v in enumerate(a.args, start=1))
    return frozenset(out)


def shred_atoms(atoms_: Iterable[Atom], sig: Signature, avoid: Iterable[str] = ()) -> tuple[frozenset[Atom], dict[str, Atom]]:
    """Returns the shredded atoms and the map from fresh tuple variables to source atoms."""
    atoms_ = list(atoms_)
    shred_map: dict[str, Atom] = {}
    fresh = _Fresh(set(variables_of(atoms_)) | set(avoid))
    return _shred(atoms_, sig, fresh, shred_map), shred_map


def shred_fact(fact: Fact, sig: Signature) -> Fact:
    shredded, _ = shred_atoms(fact.atoms, sig)
    return Fact(shredded, fact.inequalities)


def shred_query(q: ConjunctiveQuery, sig: Signature) -> ConjunctiveQuery:
    shredded, _ = shred_atoms(q.atoms, sig)
    return ConjunctiveQuery(shredded, q.free)


def shred_rule(rule: ExistentialRule, sig: Signature) -> tuple[frozenset[Atom], frozenset[Atom]]:
    """Shredded (body, head) with tuple variables distinct across both sides."""
    shred_map: dict[str, Atom] = {}
    fresh = _Fresh(rule.body_variables | rule.head_variables)
    body = _shred(rule.body, sig, fresh, shred_map)
    head = _shred(rule.head, sig, fresh, shred_map)
    return body, head


def shred_rule_as_rule(rule: ExistentialRule, sig: Signature) -> ExistentialRule:
    body, head = shred_rule(rule, sig)
    return ExistentialRule(body, head, rule.name)


# --- interpretations -----------------------------------------------------------


def shred_interpretation(interp: Interpretation, s2: ShreddedSignature | None = None) -> Interpretation:
    sig = interp.signature
    s2 = s2 or shred_signature(sig)
    fresh = _Fresh(interp.domain)
    ext: dict[str, set[tuple[str, ...]]] = defaultdict(set)
    dom = set(interp.domain)
    ext[ELT] = {(e,) for e in interp.domain}
    for rel in sorted(interp.extents):
        ar = sig.arity(rel)
        for tup in sorted(interp.extents[rel]):
            if ar <= 2:
                ext[rel].add(tup)
                continue
            t = fresh()
            dom.add(t)
            ext[tuple_marker(rel)].add((t,))
            for i, e in enumerate(tup, start=1):
                ext[position_role(rel, i)].add((t, e))
    return Interpretation(s2.signature, frozenset(dom), {r: frozenset(ts) for r, ts in ext.items()})


def _successors(interp: Interpretation, role: str) -> dict[str, list[str]]:
    succ: dict[str, list[str]] = defaultdict(list)
    for t, a in sorted(interp.tuples(role)):
        succ[t].append(a)
    return succ


def wf_violations(interp: Interpretation, s2: ShreddedSignature) -> list[str]:
    """Human-readable list of broken well-formedness conditions (empty if wf holds)."""
    sig = s2.base
    elt = {t[0] for t in interp.tuples(ELT)}
    problems: list[str] = []
    for c in sig.unary():
        for (a,) in sorted(interp.tuples(c)):
            if a not in elt:
                problems.append(f"{c}({a}) on a non-Elt element")
    for r in sig.binary():
        for a, b in sorted(interp.tuples(r)):
            if a not in elt or b not in elt:
                problems.append(f"{r}({a},{b}) touches a non-Elt element")
    markers: dict[str, set[str]] = {}
    for rel in sig.high():
        a_r = {t[0] for t in interp.tuples(tuple_marker(rel))}
        markers[rel] = a_r
        for t in sorted(a_r & elt):
            problems.append(f"{t} is in both Elt and {tuple_marker(rel)}")
        for i in range(1, sig.arity(rel) + 1):
            succ = _successors(interp, position_role(rel, i))
            for t, targets in sorted(succ.items()):
                if t not in a_r:
                    problems.append(f"{position_role(rel, i)} leaves {t} outside {tuple_marker(rel)}")
                if len(targets) > 1:
                    problems.append(f"{t} has {len(targets)} {position_role(rel, i)}-successors")
                for a in targets:
                    if a not in elt:
                        problems.append(f"{position_role(rel, i)}({t},{a}) ends outside Elt")
            for t in sorted(a_r - set(succ)):
                problems.append(f"{t} has no {position_role(rel, i)}-successor")
    rels = sorted(markers)
    for i, r in enumerate(rels):
        for s in rels[i + 1:]:
            for t in sorted(markers[r] & markers[s]):
                problems.append(f"{t} is in both {tuple_marker(r)} and {tuple_marker(s)}")
    return problems


def check_wf(interp: Interpretation, s2: ShreddedSignature) -> None:
    problems = wf_violations(interp, s2)
    if problems:
        raise ShredkitError("wf-violation", problems[0], detail={"violations": problems})


def _encoded_tuples(interp: Interpretation, s2: ShreddedSignature, rel: str) -> dict[str, tuple[str, ...]]:
    ar = s2.base.arity(rel)
    succ = [_successors(interp, position_role(rel, i)) for i in range(1, ar + 1)]
    return {t: tuple(s[t][0] for s in succ) for (t,) in sorted(interp.tuples(tuple_marker(rel)))}


def unshred_interpretation(interp: Interpretation, s2: ShreddedSignature) -> Interpretation:
    check_wf(interp, s2)
    sig = s2.base
    elt = frozenset(t[0] for t in interp.tuples(ELT))
    ext: dict[str, frozenset[tuple[str, ...]]] = {}
    for rel in sig.low():
        ext[rel] = interp.tuples(rel)
    for rel in sig.high():
        ext[rel] = frozenset(_encoded_tuples(interp, s2, rel).values())
    return Interpretation(sig, elt, ext)


def is_redundancy_free(interp: Interpretation, s2: ShreddedSignature) -> bool:
    for rel in s2.base.high():
        enc = _encoded_tuples(interp, s2, rel)
        if len(set(enc.values())) != len(enc):
            return False
    return True


def quotient_redundancy_free(interp: Interpretation, s2: ShreddedSignature) -> Interpretation:
    """Merge tuple elements encoding the same tuple; keeps the least name per class."""
    check_wf(interp, s2)
    drop: set[str] = set()
    for rel in s2.base.high():
        first: dict[tuple[str, ...], str] = {}
        for t, tup in sorted(_encoded_tuples(interp, s2, rel).items()):
            if tup in first:
                drop.add(t)
            else:
                first[tup] = t
    if not drop:
        return interp
    return interp.restrict(interp.domain - drop)
