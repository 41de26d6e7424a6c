"""Relational core: signatures, atoms, facts, rules, FDs, queries and finite interpretations.

Also hosts the line-oriented KB text format, Gaifman graphs, homomorphism search
and finite-model satisfaction. Every value is immutable; every iteration order that
reaches an output is sorted so artifacts are byte-reproducible.
"""

from __future__ import annotations

import re
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Any, Iterable, Iterator, Mapping, Sequence

import networkx as nx

from .errors import ShredkitError

Tuple = tuple[str, ...]
Assignment = dict[str, str]

_RESERVED_EXACT = {"Elt", "Link"}
_RESERVED_PREFIXES = ("A_", "P_", "Phi_")
_NAME = r"[A-Za-z_][A-Za-z0-9_.#']*"
_TERM = r"[A-Za-z0-9_][A-Za-z0-9_.#']*"
_ATOM_RE = re.compile(rf"({_NAME})\(\s*({_TERM}(?:\s*,\s*{_TERM})*)\s*\)")
_NAME_RE = re.compile(rf"^{_NAME}$")
_TERM_RE = re.compile(rf"^{_TERM}$")
_COMMENT_RE = re.compile(r"(^|\s)#.*$")


def is_reserved_name(name: str) -> bool:
    """Names the compiler generates itself; users may not declare them."""
    return name in _RESERVED_EXACT or name.startswith(_RESERVED_PREFIXES) or "." in name or "#" in name


# ---------------------------------------------------------------------------
# data model


@dataclass(frozen=True)
class Signature:
    arities: tuple[tuple[str, int], ...] = ()
    reserved: frozenset[str] = frozenset()

    @staticmethod
    def of(arities: Mapping[str, int], reserved: Iterable[str] = ()) -> "Signature":
        for name, ar in arities.items():
            if ar < 1:
                raise ShredkitError("bad-arity", f"relation {name} must have arity >= 1")
        res = frozenset(reserved)
        unknown = res - set(arities)
        if unknown:
            raise ShredkitError("bad-signature", f"reserved flag on undeclared relation(s) {sorted(unknown)}")
        return Signature(tuple(sorted(arities.items())), res)

    @property
    def relations(self) -> dict[str, int]:
        return dict(self.arities)

    def names(self) -> list[str]:
        return [n for n, _ in self.arities]

    def __contains__(self, name: object) -> bool:
        return name in self.relations

    def arity(self, name: str) -> int:
        try:
            return self.relations[name]
        except KeyError:
            raise ShredkitError("undeclared-relation", f"relation {name} is not declared") from None

    def low(self) -> list[str]:
        return [n for n, a in self.arities if a <= 2]

    def high(self) -> list[str]:
        return [n for n, a in self.arities if a > 2]

    def unary(self) -> list[str]:
        return [n for n, a in self.arities if a == 1]

    def binary(self) -> list[str]:
        return [n for n, a in self.arities if a == 2]

    def extend(self, arities: Mapping[str, int], reserved: bool = False) -> "Signature":
        merged = self.relations
        for name, ar in arities.items():
            if name in merged and merged[name] != ar:
                raise ShredkitError("arity-mismatch", f"relation {name} redeclared with arity {ar}")
            merged[name] = ar
        res = set(self.reserved) | (set(arities) if reserved else set())
        return Signature.of(merged, res)

    def union(self, other: "Signature") -> "Signature":
        out = self.extend({n: a for n, a in other.arities if n not in other.reserved})
        return out.extend({n: a for n, a in other.arities if n in other.reserved}, reserved=True)

    def restrict(self, names: Iterable[str]) -> "Signature":
        keep = set(names)
        return Signature.of({n: a for n, a in self.arities if n in keep}, self.reserved & keep)


@dataclass(frozen=True, order=True)
class Atom:
    relation: str
    args: Tuple

    def __post_init__(self) -> None:
        if not isinstance(self.args, tuple):
            object.__setattr__(self, "args", tuple(self.args))

    def __str__(self) -> str:
        return f"{self.relation}({','.join(self.args)})"

    @property
    def variables(self) -> frozenset[str]:
        return frozenset(self.args)

    def rename(self, mapping: Mapping[str, str]) -> "Atom":
        return Atom(self.relation, tuple(mapping.get(a, a) for a in self.args))


def atom(text: str) -> Atom:
    """Parse a single atom like ``R(x,y)``; handy for tests and builders."""
    m = _ATOM_RE.fullmatch(text.strip())
    if not m:
        raise ShredkitError("syntax", f"not an atom: {text!r}")
    return Atom(m.group(1), tuple(a.strip() for a in m.group(2).split(",")))


def atoms(text: str) -> frozenset[Atom]:
    return frozenset(_split_atoms(text, 0, 0))


def variables_of(items: Iterable[Atom]) -> frozenset[str]:
    out: set[str] = set()
    for a in items:
        out.update(a.args)
    return frozenset(out)


def _pair(x: str, y: str) -> tuple[str, str]:
    return (x, y) if x <= y else (y, x)


@dataclass(frozen=True)
class Fact:
    atoms: frozenset[Atom]
    inequalities: frozenset[tuple[str, str]] = frozenset()

    def __post_init__(self) -> None:
        object.__setattr__(self, "atoms", frozenset(self.atoms))
        object.__setattr__(self, "inequalities", frozenset(_pair(x, y) for x, y in self.inequalities))
        vs = self.variables
        for x, y in self.inequalities:
            if x == y:
                raise ShredkitError("bad-inequality", f"inequality {x} != {x} is unsatisfiable by construction")
            if x not in vs or y not in vs:
                raise ShredkitError("bad-inequality", f"inequality {x} != {y} mentions a variable outside the fact")

    @property
    def variables(self) -> frozenset[str]:
        return variables_of(self.atoms)


@dataclass(frozen=True)
class ExistentialRule:
    body: frozenset[Atom]
    head: frozenset[Atom]
    name: str = field(default="", compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "body", frozenset(self.body))
        object.__setattr__(self, "head", frozenset(self.head))
        if not self.body:
            raise ShredkitError("empty-body", "rule body must be nonempty")
        if not self.head:
            raise ShredkitError("empty-head", "rule head must be nonempty")

    @property
    def body_variables(self) -> frozenset[str]:
        return variables_of(self.body)

    @property
    def head_variables(self) -> frozenset[str]:
        return variables_of(self.head)

    @property
    def frontier(self) -> frozenset[str]:
        return self.body_variables & self.head_variables

    @property
    def existentials(self) -> frozenset[str]:
        return self.head_variables - self.body_variables

    def __str__(self) -> str:
        return _rule_text(self)


@dataclass(frozen=True)
class FunctionalDependency:
    relation: str
    determiner: frozenset[int]
    determined: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "determiner", frozenset(self.determiner))
        if not self.determiner:
            raise ShredkitError("bad-fd", "FD determiner must be nonempty")
        if self.determined in self.determiner:
            raise ShredkitError("bad-fd", f"FD on {self.relation}: determined position inside determiner")

    def __str__(self) -> str:
        return f"{self.relation} : {' '.join(map(str, sorted(self.determiner)))} -> {self.determined}"


@dataclass(frozen=True)
class ConjunctiveQuery:
    atoms: frozenset[Atom]
    free: Tuple = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "atoms", frozenset(self.atoms))
        object.__setattr__(self, "free", tuple(self.free))
        if not self.atoms:
            raise ShredkitError("empty-query", "query must have at least one atom")
        missing = set(self.free) - variables_of(self.atoms)
        if missing:
            raise ShredkitError("bad-query", f"free variables {sorted(missing)} do not occur in the query")

    @property
    def variables(self) -> frozenset[str]:
        return variables_of(self.atoms)


@dataclass(frozen=True, eq=False)
class Interpretation:
    """Finite structure. `extents` always has an entry for every declared relation."""

    signature: Signature
    domain: frozenset[str]
    extents: Mapping[str, frozenset[Tuple]]

    def __post_init__(self) -> None:
        ext: dict[str, frozenset[Tuple]] = {}
        rels = self.signature.relations
        for name in self.extents:
            if name not in rels:
                raise ShredkitError("undeclared-relation", f"relation {name} is not declared")
        dom = frozenset(self.domain)
        for name, ar in sorted(rels.items()):
            tuples = frozenset(tuple(t) for t in self.extents.get(name, ()))
            for t in tuples:
                if len(t) != ar:
                    raise ShredkitError("arity-mismatch", f"tuple {t} has width {len(t)}, {name} has arity {ar}")
                if not set(t) <= dom:
                    raise ShredkitError("bad-interpretation", f"tuple {t} of {name} leaves the domain")
            ext[name] = tuples
        object.__setattr__(self, "domain", dom)
        object.__setattr__(self, "extents", ext)
        object.__setattr__(self, "_index", None)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Interpretation):
            return NotImplemented
        return self.signature == other.signature and self.domain == other.domain and self.extents == other.extents

    def __hash__(self) -> int:
        return hash((self.signature, self.domain, frozenset(self.extents.items())))

    def __repr__(self) -> str:
        parts = [f"{r}={sorted(ts)}" for r, ts in sorted(self.extents.items()) if ts]
        return f"Interpretation(dom={sorted(self.domain)}, {', '.join(parts)})"

    def tuples(self, relation: str) -> frozenset[Tuple]:
        try:
            return self.extents[relation]
        except KeyError:
            raise ShredkitError("undeclared-relation", f"relation {relation} is not declared") from None

    def index(self, relation: str, position: int) -> Mapping[str, list[Tuple]]:
        """tuples of `relation` grouped by the element at 0-based `position`."""
        idx = self._index  # type: ignore[attr-defined]
        if idx is None:
            idx = {}
            object.__setattr__(self, "_index", idx)
        key = (relation, position)
        if key not in idx:
            groups: dict[str, list[Tuple]] = defaultdict(list)
            for t in sorted(self.tuples(relation)):
                groups[t[position]].append(t)
            idx[key] = dict(groups)
        return idx[key]

    def size(self) -> int:
        return sum(len(ts) for ts in self.extents.values())

    def with_tuples(self, additions: Mapping[str, Iterable[Tuple]], domain: Iterable[str] = ()) -> "Interpretation":
        ext = {r: set(ts) for r, ts in self.extents.items()}
        dom = set(self.domain) | set(domain)
        for r, ts in additions.items():
            for t in ts:
                ext.setdefault(r, set()).add(tuple(t))
                dom.update(t)
        return Interpretation(self.signature, frozenset(dom), {r: frozenset(ts) for r, ts in ext.items()})

    def restrict(self, elements: Iterable[str]) -> "Interpretation":
        keep = frozenset(elements)
        return Interpretation(
            self.signature, keep, {r: frozenset(t for t in ts if set(t) <= keep) for r, ts in self.extents.items()}
        )

    def rename(self, mapping: Mapping[str, str]) -> "Interpretation":
        """Image under an element map (need not be injective)."""
        def f(e: str) -> str:
            return mapping.get(e, e)

        return Interpretation(
            self.signature,
            frozenset(f(e) for e in self.domain),
            {r: frozenset(tuple(f(e) for e in t) for t in ts) for r, ts in self.extents.items()},
        )

    def facts(self) -> list[Atom]:
        return [Atom(r, t) for r in sorted(self.extents) for t in sorted(self.extents[r])]


def canonical_interpretation(atom_set: Iterable[Atom], signature: Signature, extra: Iterable[str] = ()) -> Interpretation:
    """One element per variable, one tuple per atom."""
    ext: dict[str, set[Tuple]] = defaultdict(set)
    dom = set(extra)
    for a in atom_set:
        if len(a.args) != signature.arity(a.relation):
            raise ShredkitError("arity-mismatch", f"atom {a} does not match arity {signature.arity(a.relation)}")
        ext[a.relation].add(a.args)
        dom.update(a.args)
    return Interpretation(signature, frozenset(dom), {r: frozenset(ts) for r, ts in ext.items()})


@dataclass(frozen=True)
class KnowledgeBase:
    signature: Signature
    fact: Fact | None = None
    rules: tuple[ExistentialRule, ...] = ()
    fds: tuple[FunctionalDependency, ...] = ()
    constraints: tuple[Any, ...] = ()  # gc2.Constraint values
    query: ConjunctiveQuery | None = None
    domain: tuple[str, ...] = ()  # extra `dom` elements, for interpretation files

    def to_interpretation(self) -> Interpretation:
        atoms_ = self.fact.atoms if self.fact else frozenset()
        return canonical_interpretation(atoms_, self.signature, self.domain)


def interpretation_to_kb(interp: Interpretation) -> KnowledgeBase:
    fact = Fact(frozenset(interp.facts())) if interp.size() else None
    used = variables_of(fact.atoms) if fact else frozenset()
    return KnowledgeBase(interp.signature, fact, domain=tuple(sorted(interp.domain - used)))


# ---------------------------------------------------------------------------
# Gaifman graph and homomorphisms


def gaifman_graph(source: Iterable[Atom] | Interpretation) -> nx.Graph:
    g = nx.Graph()
    if isinstance(source, Interpretation):
        g.add_nodes_from(sorted(source.domain))
        rows: Iterable[Sequence[str]] = (t for r in sorted(source.extents) for t in sorted(source.extents[r]))
    else:
        rows = [a.args for a in sorted(source)]
    for row in rows:
        g.add_nodes_from(row)
        for i, u in enumerate(row):
            for v in row[i + 1:]:
                if u != v:
                    g.add_edge(u, v)
    return g


def _plan(source: Sequence[Atom], bound: set[str], target: Interpretation) -> list[Atom]:
    # Greedy join order: most already-bound variables first, then the smaller extent.
    rest = sorted(source)
    order: list[Atom] = []
    seen = set(bound)
    while rest:
        best = min(rest, key=lambda a: (-len(set(a.args) & seen), len(target.tuples(a.relation)), a))
        rest.remove(best)
        order.append(best)
        seen.update(best.args)
    return order


def iter_homomorphisms(
    source: Iterable[Atom],
    target: Interpretation,
    partial: Mapping[str, str] | None = None,
    distinct: Iterable[tuple[str, str]] = (),
) -> Iterator[Assignment]:
    """Lazily yield homomorphisms extending `partial`; `distinct` pairs must map apart."""
    h: Assignment = dict(partial or {})
    order = _plan(list(set(source)), set(h), target)
    neq: dict[str, list[str]] = defaultdict(list)
    for x, y in distinct:
        neq[x].append(y)
        neq[y].append(x)

    def candidates(a: Atom) -> Iterable[Tuple]:
        for pos, v in enumerate(a.args):
            if v in h:
                return target.index(a.relation, pos).get(h[v], ())
        return sorted(target.tuples(a.relation))

    def rec(i: int) -> Iterator[Assignment]:
        if i == len(order):
            yield dict(h)
            return
        a = order[i]
        for t in candidates(a):
            added: list[str] = []
            ok = True
            for v, e in zip(a.args, t):
                cur = h.get(v)
                if cur is None:
                    if any(h.get(w) == e for w in neq.get(v, ())):
                        ok = False
                        break
                    h[v] = e
                    added.append(v)
                elif cur != e:
                    ok = False
                    break
            if ok:
                yield from rec(i + 1)
            for v in added:
                del h[v]

    # pre-bound pairs must already be distinct
    if any(h.get(x) is not None and h.get(x) == h.get(y) for x, y in distinct):
        return
    yield from rec(0)


def _assignment_key(h: Mapping[str, str]) -> tuple[tuple[str, str], ...]:
    return tuple(sorted(h.items()))


def find_homomorphisms(
    source: Iterable[Atom],
    target: Interpretation,
    partial: Mapping[str, str] | None = None,
    distinct: Iterable[tuple[str, str]] = (),
) -> list[Assignment]:
    """All total extensions of `partial`, sorted by (variable, element) pairs."""
    return sorted(iter_homomorphisms(source, target, partial, distinct), key=_assignment_key)


def has_homomorphism(source: Iterable[Atom], target: Interpretation, partial: Mapping[str, str] | None = None,
                     distinct: Iterable[tuple[str, str]] = ()) -> bool:
    return next(iter_homomorphisms(source, target, partial, distinct), None) is not None


# ---------------------------------------------------------------------------
# satisfaction


def _check_declared(interp: Interpretation, relations: Iterable[str]) -> None:
    for r in relations:
        if r not in interp.extents:
            raise ShredkitError("undeclared-relation", f"relation {r} is not declared")


def rule_violations(interp: Interpretation, rule: ExistentialRule) -> Iterator[Assignment]:
    """Body matches (restricted to the frontier) that have no head extension."""
    frontier = rule.frontier
    seen: set[tuple[tuple[str, str], ...]] = set()
    for h in iter_homomorphisms(rule.body, interp):
        key = tuple(sorted((v, h[v]) for v in frontier))
        if key in seen:
            continue
        seen.add(key)
        if not has_homomorphism(rule.head, interp, dict(key)):
            yield dict(key)


def fd_violations(interp: Interpretation, fd: FunctionalDependency) -> Iterator[tuple[Tuple, Tuple]]:
    det = sorted(fd.determiner)
    groups: dict[Tuple, list[Tuple]] = defaultdict(list)
    for t in sorted(interp.tuples(fd.relation)):
        groups[tuple(t[p - 1] for p in det)].append(t)
    for rows in groups.values():
        first = rows[0]
        for other in rows[1:]:
            if other[fd.determined - 1] != first[fd.determined - 1]:
                yield first, other
                break


def satisfies(interp: Interpretation, item: Any) -> bool:
    if isinstance(item, Fact):
        _check_declared(interp, (a.relation for a in item.atoms))
        return has_homomorphism(item.atoms, interp, distinct=item.inequalities)
    if isinstance(item, ExistentialRule):
        _check_declared(interp, (a.relation for a in item.body | item.head))
        return next(rule_violations(interp, item), None) is None
    if isinstance(item, FunctionalDependency):
        _check_declared(interp, [item.relation])
        ar = interp.signature.arity(item.relation)
        if max(item.determiner | {item.determined}) > ar:
            raise ShredkitError("fd-position", f"FD {item} refers to a position beyond arity {ar}")
        return next(fd_violations(interp, item), None) is None
    if isinstance(item, ConjunctiveQuery):
        _check_declared(interp, (a.relation for a in item.atoms))
        return has_homomorphism(item.atoms, interp)
    from . import gc2

    if isinstance(item, gc2.Constraint):
        return bool(gc2.gc2_eval(item, interp))
    raise TypeError(f"cannot check satisfaction of {type(item).__name__}")


# ---------------------------------------------------------------------------
# text format


def _split_atoms(text: str, line: int, col0: int) -> list[Atom]:
    out: list[Atom] = []
    pos = 0
    for m in _ATOM_RE.finditer(text):
        gap = text[pos:m.start()]
        if gap.strip(" \t,"):
            raise ShredkitError("syntax", f"unexpected text {gap.strip()!r}", line=line, column=col0 + pos + 1)
        out.append(Atom(m.group(1), tuple(a.strip() for a in m.group(2).split(","))))
        pos = m.end()
    tail = text[pos:]
    if tail.strip(" \t,"):
        raise ShredkitError("syntax", f"unexpected text {tail.strip()!r}", line=line, column=col0 + pos + 1)
    return out


def _rule_text(r: ExistentialRule) -> str:
    body = ", ".join(map(str, sorted(r.body)))
    head = ", ".join(map(str, sorted(r.head)))
    ex = sorted(r.existentials)
    prefix = f"exists {' '.join(ex)} . " if ex else ""
    return f"{body} -> {prefix}{head}"


def parse_rule(text: str, name: str = "", line: int = 0, col0: int = 0) -> ExistentialRule:
    if text.count("->") != 1:
        raise ShredkitError("syntax", "rule needs exactly one '->'", line=line, column=col0 + 1)
    lhs, rhs = text.split("->")
    body = _split_atoms(lhs, line, col0)
    rhs_col = col0 + len(lhs) + 2
    declared: set[str] | None = None
    m = re.match(r"\s*exists\s+(.*?)\s+\.\s+(.*)$", rhs)
    if m:
        declared = set(m.group(1).split())
        for v in declared:
            if not _TERM_RE.match(v):
                raise ShredkitError("syntax", f"bad variable {v!r}", line=line, column=rhs_col + 1)
        head = _split_atoms(m.group(2), line, rhs_col + m.start(2))
    else:
        head = _split_atoms(rhs, line, rhs_col)
    if not body or not head:
        raise ShredkitError("syntax", "rule body and head must be nonempty", line=line, column=col0 + 1)
    rule = ExistentialRule(frozenset(body), frozenset(head), name)
    if declared is not None and declared != set(rule.existentials):
        raise ShredkitError(
            "bad-existentials",
            f"declared existentials {sorted(declared)} differ from head-only variables {sorted(rule.existentials)}",
            line=line,
        )
    return rule


def parse_kb(text: str) -> KnowledgeBase:
    from . import gc2

    arities: dict[str, int] = {}
    reserved: set[str] = set()
    fact_atoms: list[tuple[Atom, int]] = []
    neqs: list[tuple[str, str, int]] = []
    rules: list[tuple[str, int, int]] = []
    fds: list[tuple[FunctionalDependency, int]] = []
    dls: list[tuple[str, int]] = []
    query: tuple[list[Atom], int] | None = None
    domain: list[str] = []

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _COMMENT_RE.sub("", raw).rstrip()
        stripped = line.strip()
        if not stripped:
            continue
        col0 = len(line) - len(line.lstrip())
        kw, _, rest = stripped.partition(" ")
        rcol = col0 + len(kw) + 1
        if kw == "rel":
            m = re.fullmatch(rf"\s*({_NAME})\s*/\s*(\d+)(\s+reserved)?\s*", rest)
            if not m:
                raise ShredkitError("syntax", "expected 'rel NAME/ARITY'", line=lineno, column=rcol + 1)
            name, ar = m.group(1), int(m.group(2))
            if ar < 1:
                raise ShredkitError("bad-arity", f"relation {name} must have arity >= 1", line=lineno)
            if name in arities and arities[name] != ar:
                raise ShredkitError("arity-mismatch", f"relation {name} redeclared", line=lineno)
            if m.group(3):
                reserved.add(name)
            elif is_reserved_name(name):
                raise ShredkitError("reserved-name", f"relation name {name} is reserved", line=lineno, column=rcol + 1)
            arities[name] = ar
        elif kw == "fact":
            fact_atoms.extend((a, lineno) for a in _split_atoms(rest, lineno, rcol))
        elif kw == "dom":
            for e in rest.split():
                if not _TERM_RE.match(e):
                    raise ShredkitError("syntax", f"bad element {e!r}", line=lineno)
                domain.append(e)
        elif kw == "neq":
            parts = rest.split()
            if len(parts) != 2 or not all(_TERM_RE.match(p) for p in parts):
                raise ShredkitError("syntax", "expected 'neq VAR VAR'", line=lineno, column=rcol + 1)
            neqs.append((parts[0], parts[1], lineno))
        elif kw == "rule":
            rules.append((rest, lineno, rcol))
        elif kw == "fd":
            m = re.fullmatch(rf"\s*({_NAME})\s*:\s*([\d\s]+?)\s*->\s*(\d+)\s*", rest)
            if not m or not m.group(2).split():
                raise ShredkitError("syntax", "expected 'fd NAME : POS... -> POS'", line=lineno, column=rcol + 1)
            try:
                fd = FunctionalDependency(m.group(1), frozenset(int(p) for p in m.group(2).split()), int(m.group(3)))
            except ShredkitError as e:
                e.line = lineno
                raise
            fds.append((fd, lineno))
        elif kw == "cq":
            if query is not None:
                raise ShredkitError("syntax", "only one cq line is allowed", line=lineno)
            query = (_split_atoms(rest, lineno, rcol), lineno)
        elif kw == "dl":
            dls.append((rest, lineno))
        else:
            raise ShredkitError("syntax", f"unknown directive {kw!r}", line=lineno, column=col0 + 1)

    sig = Signature.of(arities, reserved)

    def check(a: Atom, lineno: int) -> None:
        if a.relation not in arities:
            raise ShredkitError("undeclared-relation", f"relation {a.relation} is not declared", line=lineno)
        if len(a.args) != arities[a.relation]:
            raise ShredkitError(
                "arity-mismatch", f"atom {a} has {len(a.args)} arguments, {a.relation} has arity {arities[a.relation]}",
                line=lineno,
            )

    for a, ln in fact_atoms:
        check(a, ln)
    fact = None
    if fact_atoms:
        fvars = variables_of(a for a, _ in fact_atoms)
        for x, y, ln in neqs:
            if x == y or x not in fvars or y not in fvars:
                raise ShredkitError("bad-inequality", f"neq {x} {y} must relate two distinct fact variables", line=ln)
        fact = Fact(frozenset(a for a, _ in fact_atoms), frozenset((x, y) for x, y, _ in neqs))
    elif neqs:
        raise ShredkitError("bad-inequality", "neq without a fact", line=neqs[0][2])

    parsed_rules = []
    for i, (rtext, ln, col) in enumerate(rules, start=1):
        try:
            r = parse_rule(rtext, f"rule{i}", ln, col)
        except ShredkitError as e:
            e.line = e.line or ln
            raise
        for a in sorted(r.body | r.head):
            check(a, ln)
        parsed_rules.append(r)

    for fd, ln in fds:
        ar = arities.get(fd.relation)
        if ar is None:
            raise ShredkitError("undeclared-relation", f"relation {fd.relation} is not declared", line=ln)
        if max(fd.determiner | {fd.determined}) > ar or min(fd.determiner | {fd.determined}) < 1:
            raise ShredkitError("fd-position", f"FD position out of range 1..{ar}", line=ln)

    constraints = []
    for text_, ln in dls:
        try:
            c = gc2.parse_constraint(text_)
            gc2.check_constraint(c, sig)
        except ShredkitError as e:
            e.line = ln
            raise
        constraints.append(c)

    cq = None
    if query is not None:
        for a in query[0]:
            check(a, query[1])
        if not query[0]:
            raise ShredkitError("syntax", "empty cq", line=query[1])
        cq = ConjunctiveQuery(frozenset(query[0]))

    used = variables_of(fact.atoms) if fact else frozenset()
    dom_extra = tuple(sorted(set(domain) - used))
    return KnowledgeBase(sig, fact, tuple(parsed_rules), tuple(fd for fd, _ in fds), tuple(constraints), cq, dom_extra)


def serialize_kb(kb: KnowledgeBase) -> str:
    from . import gc2

    lines: list[str] = []
    for name, ar in kb.signature.arities:
        lines.append(f"rel {name}/{ar}" + (" reserved" if name in kb.signature.reserved else ""))
    if kb.domain:
        lines.append("dom " + " ".join(kb.domain))
    if kb.fact is not None:
        lines.append("fact " + " ".join(map(str, sorted(kb.fact.atoms))))
        for x, y in sorted(kb.fact.inequalities):
            lines.append(f"neq {x} {y}")
    for r in kb.rules:
        lines.append("rule " + _rule_text(r))
    for fd in kb.fds:
        lines.append(f"fd {fd}")
    for c in kb.constraints:
        lines.append("dl " + gc2.to_sexpr(c))
    if kb.query is not None:
        lines.append("cq " + ", ".join(map(str, sorted(kb.query.atoms))))
    return "\n".join(lines) + "\n"
