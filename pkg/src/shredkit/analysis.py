"""Structural classification of rules: Berge cycles, non-looping, rule classes, FD conflicts."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Iterable, Iterator

import networkx as nx

from .errors import ShredkitError
from .kb import Atom, ExistentialRule, FunctionalDependency, Signature


@dataclass(frozen=True)
class BergeCycle:
    atoms: tuple[Atom, ...]
    variables: tuple[str, ...]  # variables[i] links atoms[i] and atoms[i+1 mod n]

    def __len__(self) -> int:
        return len(self.atoms)

    def __str__(self) -> str:
        parts = []
        for a, v in zip(self.atoms, self.variables):
            parts += [str(a), v]
        return " ~ ".join(parts)

    def to_json(self) -> list[str]:
        return [s for a, v in zip(self.atoms, self.variables) for s in (str(a), v)]


def _canonical(atom_ids: list[int], vars_: list[str]) -> tuple[tuple[int, str], ...]:
    n = len(atom_ids)
    forms = []
    rev_atoms = [atom_ids[0]] + atom_ids[:0:-1]
    rev_vars = vars_[::-1]
    for seq_a, seq_v in ((atom_ids, vars_), (rev_atoms, rev_vars)):
        for k in range(n):
            forms.append(tuple((seq_a[(k + i) % n], seq_v[(k + i) % n]) for i in range(n)))
    return min(forms)


def iter_berge_cycles(atom_set: Iterable[Atom]) -> Iterator[BergeCycle]:
    """Each Berge cycle once, rotation/reflection collapsed; deterministic order."""
    atoms_ = sorted(set(atom_set))
    vars_of = [set(a.args) for a in atoms_]
    seen: set[tuple[tuple[int, str], ...]] = set()

    def extend(start: int, path: list[int], links: list[str]) -> Iterator[BergeCycle]:
        last = path[-1]
        if len(path) >= 2:
            for w in sorted(vars_of[last] & vars_of[start]):
                if w in links:
                    continue
                key = _canonical(path, links + [w])
                if key not in seen:
                    seen.add(key)
                    yield BergeCycle(tuple(atoms_[i] for i, _ in key), tuple(v for _, v in key))
        for nxt in range(start + 1, len(atoms_)):
            if nxt in path:
                continue
            for v in sorted(vars_of[last] & vars_of[nxt]):
                if v in links:
                    continue
                yield from extend(start, path + [nxt], links + [v])

    for s in range(len(atoms_)):
        yield from extend(s, [s], [])


def berge_cycles(atom_set: Iterable[Atom]) -> list[BergeCycle]:
    return list(iter_berge_cycles(atom_set))


def _incidence(atoms_: list[Atom]) -> nx.Graph:
    g = nx.Graph()
    for i, a in enumerate(atoms_):
        g.add_node(("a", i))
        for v in a.args:
            g.add_edge(("a", i), ("v", v))
    return g


def is_non_looping(atom_set: Iterable[Atom], sig: Signature) -> bool:
    """No Berge cycle longer than two and none through a higher-arity atom.

    Berge cycles are the simple cycles of the atom/variable incidence graph, so it is
    enough to inspect its biconnected blocks: a cyclic block is harmless exactly when
    it has two variable nodes and only arity-two atoms.
    """
    atoms_ = sorted(set(atom_set))
    g = _incidence(atoms_)
    for block in nx.biconnected_components(g):
        if len(block) <= 2:
            continue
        vs = [n for n in block if n[0] == "v"]
        if len(vs) != 2:
            return False
        if any(sig.arity(atoms_[n[1]].relation) > 2 for n in block if n[0] == "a"):
            return False
    return True


def looping_witness(atom_set: Iterable[Atom], sig: Signature) -> BergeCycle | None:
    """First Berge cycle violating non-looping, if any."""
    if is_non_looping(atom_set, sig):
        return None
    for cyc in iter_berge_cycles(atom_set):
        if len(cyc) > 2 or any(sig.arity(a.relation) > 2 for a in cyc.atoms):
            return cyc
    raise AssertionError("block analysis and cycle enumeration disagree")


@dataclass(frozen=True)
class RuleClass:
    frontier_one: bool
    single_head: bool
    hnl: bool
    fnl: bool
    s2t: bool
    head_cycle: BergeCycle | None = None
    body_cycle: BergeCycle | None = None

    def flags(self) -> list[str]:
        names = ["frontier-one", "single-head", "hnl", "fnl", "s2t"]
        vals = [self.frontier_one, self.single_head, self.hnl, self.fnl, self.s2t]
        return [n for n, v in zip(names, vals) if v]

    def to_json(self) -> dict[str, Any]:
        return {
            "frontier_one": self.frontier_one,
            "single_head": self.single_head,
            "hnl": self.hnl,
            "fnl": self.fnl,
            "s2t": self.s2t,
            "head_cycle": self.head_cycle.to_json() if self.head_cycle else None,
            "body_cycle": self.body_cycle.to_json() if self.body_cycle else None,
        }


def classify_rule(
    rule: ExistentialRule,
    sig: Signature,
    split: tuple[Iterable[str], Iterable[str]] | None = None,
) -> RuleClass:
    """`split` = (source relations, target relations) for the source-to-target flag."""
    frontier_one = len(rule.frontier) == 1
    head_cycle = looping_witness(rule.head, sig)
    body_cycle = looping_witness(rule.body, sig)
    hnl = frontier_one and head_cycle is None
    fnl = hnl and body_cycle is None
    body_rels = {a.relation for a in rule.body}
    head_rels = {a.relation for a in rule.head}
    if split is None:
        s2t = not (body_rels & head_rels)
    else:
        src, tgt = set(split[0]), set(split[1])
        s2t = not (src & tgt) and body_rels <= src and head_rels <= tgt
    return RuleClass(frontier_one, len(rule.head) == 1, hnl, fnl, s2t, head_cycle, body_cycle)


def conflict_witness(rule: ExistentialRule, fds: Iterable[FunctionalDependency]) -> dict[str, Any] | None:
    """Why a single-head rule conflicts with the FDs, or None if it does not."""
    if len(rule.head) != 1:
        raise ShredkitError("not-single-head", f"rule {rule} has {len(rule.head)} head atoms")
    (head,) = rule.head
    frontier = rule.frontier
    positions = frozenset(i + 1 for i, v in enumerate(head.args) if v in frontier)
    dets = sorted({fd.determiner for fd in fds if fd.relation == head.relation}, key=sorted)
    for det in dets:
        if det < positions:
            return {
                "clause": "a",
                "relation": head.relation,
                "frontier_positions": sorted(positions),
                "determiner": sorted(det),
            }
    if positions in dets:
        for v in sorted(rule.existentials):
            count = head.args.count(v)
            if count > 1:
                return {
                    "clause": "b",
                    "relation": head.relation,
                    "frontier_positions": sorted(positions),
                    "determiner": sorted(positions),
                    "repeated_existential": v,
                }
    return None


def is_non_conflicting(rule: ExistentialRule, fds: Iterable[FunctionalDependency]) -> bool:
    return conflict_witness(rule, fds) is None
