"""Arity-two constraint language: concepts, boolean roles, counting, funct.

Covers the AST, the s-expression syntax used in `dl` lines and output files, exact
evaluation on finite interpretations, and the translation of cycle-free one-variable
CQs (and hence of fully-non-looping frontier-one rules) into concepts.

The translation walks the Gaifman forest of the query from the free variable:
atoms over the current variable alone become concept names or self-loops, every
neighbour y contributes one existential restriction whose role is the conjunction
of all atoms linking the two variables, and the subtree hanging below y is
translated recursively. Components not touching the free variable become
`(somewhere C)` conjuncts. Each atom is emitted exactly once, so the output has
O(|q|) concept nodes; the quadratic bound only comes from recomputing subtrees.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Union

import networkx as nx

from .errors import ShredkitError
from .kb import Atom, ConjunctiveQuery, ExistentialRule, Interpretation, Signature, gaifman_graph


# --- roles -----------------------------------------------------------------


@dataclass(frozen=True, order=True)
class RName:
    name: str


@dataclass(frozen=True, order=True)
class Inv:
    role: "Role"


@dataclass(frozen=True)
class RAnd:
    items: tuple["Role", ...]


@dataclass(frozen=True)
class ROr:
    items: tuple["Role", ...]


@dataclass(frozen=True)
class RDiff:
    pos: "Role"
    neg: "Role"


Role = Union[RName, Inv, RAnd, ROr, RDiff]


# --- concepts --------------------------------------------------------------


@dataclass(frozen=True)
class Top:
    pass


@dataclass(frozen=True)
class Bot:
    pass


@dataclass(frozen=True)
class CName:
    name: str


@dataclass(frozen=True)
class Not:
    concept: "Concept"


@dataclass(frozen=True)
class And:
    items: tuple["Concept", ...]


@dataclass(frozen=True)
class Or:
    items: tuple["Concept", ...]


@dataclass(frozen=True)
class Exists:
    role: Role
    concept: "Concept"


@dataclass(frozen=True)
class AtLeast:
    n: int
    role: Role
    concept: "Concept"


@dataclass(frozen=True)
class AtMost:
    n: int
    role: Role
    concept: "Concept"


@dataclass(frozen=True)
class SelfLoop:
    role: Role


@dataclass(frozen=True)
class Somewhere:
    """Whole domain if `concept` is nonempty, else empty: a closed sentence as a concept."""

    concept: "Concept"


Concept = Union[Top, Bot, CName, Not, And, Or, Exists, AtLeast, AtMost, SelfLoop, Somewhere]


# --- constraints -----------------------------------------------------------


@dataclass(frozen=True)
class Sub:
    lhs: Concept
    rhs: Concept


@dataclass(frozen=True)
class Funct:
    role: Role


Constraint = (Sub, Funct)
ConstraintT = Union[Sub, Funct]
_CONCEPT_TYPES = (Top, Bot, CName, Not, And, Or, Exists, AtLeast, AtMost, SelfLoop, Somewhere)
_ROLE_TYPES = (RName, Inv, RAnd, ROr, RDiff)


def conj(items: Iterable[Concept]) -> Concept:
    parts = [c for c in items if not isinstance(c, Top)]
    if not parts:
        return Top()
    return parts[0] if len(parts) == 1 else And(tuple(parts))


def disj(items: Iterable[Concept]) -> Concept:
    parts = [c for c in items if not isinstance(c, Bot)]
    if not parts:
        return Bot()
    return parts[0] if len(parts) == 1 else Or(tuple(parts))


# --- s-expressions ---------------------------------------------------------


def _tokens(text: str) -> list[str]:
    return text.replace("(", " ( ").replace(")", " ) ").split()


def _read(tokens: list[str], i: int) -> tuple[object, int]:
    if i >= len(tokens):
        raise ShredkitError("syntax", "unexpected end of s-expression")
    tok = tokens[i]
    if tok == ")":
        raise ShredkitError("syntax", "unexpected ')'")
    if tok != "(":
        return tok, i + 1
    out: list[object] = []
    i += 1
    while i < len(tokens) and tokens[i] != ")":
        item, i = _read(tokens, i)
        out.append(item)
    if i >= len(tokens):
        raise ShredkitError("syntax", "missing ')'")
    return out, i + 1


def _read_one(text: str) -> object:
    toks = _tokens(text)
    tree, end = _read(toks, 0)
    if end != len(toks):
        raise ShredkitError("syntax", f"trailing tokens after s-expression: {' '.join(toks[end:])}")
    return tree


def _role(tree: object) -> Role:
    if isinstance(tree, str):
        return RName(tree)
    if not isinstance(tree, list) or not tree or not isinstance(tree[0], str):
        raise ShredkitError("syntax", f"malformed role {tree!r}")
    head, args = tree[0], tree[1:]
    if head == "inv" and len(args) == 1:
        return Inv(_role(args[0]))
    if head == "rand" and args:
        return RAnd(tuple(_role(a) for a in args))
    if head == "ror" and args:
        return ROr(tuple(_role(a) for a in args))
    if head == "rdiff" and len(args) == 2:
        return RDiff(_role(args[0]), _role(args[1]))
    raise ShredkitError("syntax", f"unknown role form ({head} ...)")


def _count(tok: object) -> int:
    if not isinstance(tok, str) or not tok.isdigit():
        raise ShredkitError("syntax", f"expected a non-negative integer, got {tok!r}")
    return int(tok)


def _concept(tree: object) -> Concept:
    if isinstance(tree, str):
        if tree == "top":
            return Top()
        if tree == "bot":
            return Bot()
        return CName(tree)
    if not isinstance(tree, list) or not tree or not isinstance(tree[0], str):
        raise ShredkitError("syntax", f"malformed concept {tree!r}")
    head, args = tree[0], tree[1:]
    if head == "not" and len(args) == 1:
        return Not(_concept(args[0]))
    if head == "and" and args:
        return And(tuple(_concept(a) for a in args))
    if head == "or" and args:
        return Or(tuple(_concept(a) for a in args))
    if head == "exists" and len(args) == 2:
        return Exists(_role(args[0]), _concept(args[1]))
    if head == "atleast" and len(args) == 3:
        return AtLeast(_count(args[0]), _role(args[1]), _concept(args[2]))
    if head == "atmost" and len(args) == 3:
        return AtMost(_count(args[0]), _role(args[1]), _concept(args[2]))
    if head == "selfloop" and len(args) == 1:
        return SelfLoop(_role(args[0]))
    if head == "somewhere" and len(args) == 1:
        return Somewhere(_concept(args[0]))
    raise ShredkitError("syntax", f"unknown concept form ({head} ...)")


def parse_concept(text: str) -> Concept:
    return _concept(_read_one(text))


def parse_role(text: str) -> Role:
    return _role(_read_one(text))


def parse_constraint(text: str) -> ConstraintT:
    tree = _read_one(text)
    if isinstance(tree, list) and tree and tree[0] == "sub" and len(tree) == 3:
        return Sub(_concept(tree[1]), _concept(tree[2]))
    if isinstance(tree, list) and tree and tree[0] == "funct" and len(tree) == 2:
        f = Funct(_role(tree[1]))
        if not _is_plain_role(f.role):
            raise ShredkitError("syntax", "funct applies to atomic or inverse roles only")
        return f
    raise ShredkitError("syntax", "expected (sub C C) or (funct ROLE)")


def _is_plain_role(r: Role) -> bool:
    return isinstance(r, RName) or (isinstance(r, Inv) and _is_plain_role(r.role))


def to_sexpr(item: object) -> str:
    match item:
        case RName(name):
            return name
        case Inv(r):
            return f"(inv {to_sexpr(r)})"
        case RAnd(items):
            return "(rand " + " ".join(map(to_sexpr, items)) + ")"
        case ROr(items):
            return "(ror " + " ".join(map(to_sexpr, items)) + ")"
        case RDiff(p, n):
            return f"(rdiff {to_sexpr(p)} {to_sexpr(n)})"
        case Top():
            return "top"
        case Bot():
            return "bot"
        case CName(name):
            return name
        case Not(c):
            return f"(not {to_sexpr(c)})"
        case And(items):
            return "(and " + " ".join(map(to_sexpr, items)) + ")"
        case Or(items):
            return "(or " + " ".join(map(to_sexpr, items)) + ")"
        case Exists(r, c):
            return f"(exists {to_sexpr(r)} {to_sexpr(c)})"
        case AtLeast(n, r, c):
            return f"(atleast {n} {to_sexpr(r)} {to_sexpr(c)})"
        case AtMost(n, r, c):
            return f"(atmost {n} {to_sexpr(r)} {to_sexpr(c)})"
        case SelfLoop(r):
            return f"(selfloop {to_sexpr(r)})"
        case Somewhere(c):
            return f"(somewhere {to_sexpr(c)})"
        case Sub(l, r):
            return f"(sub {to_sexpr(l)} {to_sexpr(r)})"
        case Funct(r):
            return f"(funct {to_sexpr(r)})"
    raise TypeError(f"not a GC2 value: {item!r}")


# --- structure -------------------------------------------------------------


def children(item: object) -> tuple[object, ...]:
    match item:
        case Inv(r) | SelfLoop(r) | Funct(r):
            return (r,)
        case RAnd(items) | ROr(items) | And(items) | Or(items):
            return tuple(items)
        case RDiff(p, n):
            return (p, n)
        case Not(c) | Somewhere(c):
            return (c,)
        case Exists(r, c) | AtLeast(_, r, c) | AtMost(_, r, c):
            return (r, c)
        case Sub(l, r):
            return (l, r)
    return ()


def node_count(item: object) -> int:
    return 1 + sum(node_count(c) for c in children(item))


def walk(item: object) -> Iterable[object]:
    yield item
    for c in children(item):
        yield from walk(c)


def role_names(item: object) -> set[str]:
    return {n.name for n in walk(item) if isinstance(n, RName)}


def concept_names(item: object) -> set[str]:
    return {n.name for n in walk(item) if isinstance(n, CName)}


def is_safe_role(r: Role) -> bool:
    """A boolean role is safe if it cannot hold of pairs outside every named role."""
    match r:
        case RName():
            return True
        case Inv(inner):
            return is_safe_role(inner)
        case RAnd(items):
            return any(is_safe_role(i) for i in items)
        case ROr(items):
            return all(is_safe_role(i) for i in items)
        case RDiff(p, _):
            return is_safe_role(p)
    return False


def check_constraint(c: ConstraintT, sig: Signature) -> None:
    """Names must be declared with the right arity; boolean roles must be safe."""
    for node in walk(c):
        if isinstance(node, CName):
            if sig.arity(node.name) != 1:
                raise ShredkitError("arity-mismatch", f"concept name {node.name} is not a unary relation")
        elif isinstance(node, RName):
            if sig.arity(node.name) != 2:
                raise ShredkitError("arity-mismatch", f"role name {node.name} is not a binary relation")
        elif isinstance(node, _ROLE_TYPES) and not is_safe_role(node):
            raise ShredkitError("unsafe-role", f"boolean role {to_sexpr(node)} is unsafe")
        elif isinstance(node, (AtLeast, AtMost)) and node.n < 0:
            raise ShredkitError("syntax", "number restriction must be non-negative")


def lint(c: ConstraintT) -> list[str]:
    """Constructs outside plain ALCQI-style syntax; the target is GC2 so these are warnings."""
    notes = []
    for node in walk(c):
        if isinstance(node, SelfLoop):
            notes.append(f"selfloop: {to_sexpr(node)}")
        elif isinstance(node, RAnd):
            notes.append(f"role-conjunction: {to_sexpr(node)}")
        elif isinstance(node, Somewhere):
            notes.append(f"sentence-conjunct: {to_sexpr(node)}")
    return notes


# --- evaluation ------------------------------------------------------------


class _Evaluator:
    def __init__(self, interp: Interpretation) -> None:
        self.interp = interp
        self.domain = interp.domain
        self.roles: dict[Role, frozenset[tuple[str, str]]] = {}
        self.succ: dict[Role, dict[str, list[str]]] = {}
        self.concepts: dict[Concept, frozenset[str]] = {}

    def role(self, r: Role) -> frozenset[tuple[str, str]]:
        if r in self.roles:
            return self.roles[r]
        match r:
            case RName(name):
                if self.interp.signature.arity(name) != 2:
                    raise ShredkitError("arity-mismatch", f"role name {name} is not binary")
                out = frozenset((a, b) for a, b in self.interp.tuples(name))
            case Inv(inner):
                out = frozenset((b, a) for a, b in self.role(inner))
            case RAnd(items):
                out = frozenset.intersection(*(self.role(i) for i in items))
            case ROr(items):
                out = frozenset.union(*(self.role(i) for i in items))
            case RDiff(p, n):
                out = self.role(p) - self.role(n)
            case _:
                raise TypeError(f"not a role: {r!r}")
        self.roles[r] = out
        return out

    def successors(self, r: Role) -> dict[str, list[str]]:
        if r not in self.succ:
            s: dict[str, list[str]] = {}
            for a, b in self.role(r):
                s.setdefault(a, []).append(b)
            self.succ[r] = s
        return self.succ[r]

    def concept(self, c: Concept) -> frozenset[str]:
        if c in self.concepts:
            return self.concepts[c]
        match c:
            case Top():
                out = self.domain
            case Bot():
                out = frozenset()
            case CName(name):
                if self.interp.signature.arity(name) != 1:
                    raise ShredkitError("arity-mismatch", f"concept name {name} is not unary")
                out = frozenset(t[0] for t in self.interp.tuples(name))
            case Not(inner):
                out = self.domain - self.concept(inner)
            case And(items):
                out = frozenset.intersection(self.domain, *(self.concept(i) for i in items))
            case Or(items):
                out = frozenset.union(frozenset(), *(self.concept(i) for i in items))
            case Exists(r, inner):
                ext = self.concept(inner)
                out = frozenset(a for a, bs in self.successors(r).items() if any(b in ext for b in bs))
            case AtLeast(n, r, inner):
                ext = self.concept(inner)
                succ = self.successors(r)
                out = frozenset(a for a in self.domain if sum(b in ext for b in succ.get(a, ())) >= n)
            case AtMost(n, r, inner):
                ext = self.concept(inner)
                succ = self.successors(r)
                out = frozenset(a for a in self.domain if sum(b in ext for b in succ.get(a, ())) <= n)
            case SelfLoop(r):
                out = frozenset(a for a, b in self.role(r) if a == b)
            case Somewhere(inner):
                out = self.domain if self.concept(inner) else frozenset()
            case _:
                raise TypeError(f"not a concept: {c!r}")
        self.concepts[c] = out
        return out

    def constraint(self, c: ConstraintT) -> bool:
        if isinstance(c, Sub):
            return self.concept(c.lhs) <= self.concept(c.rhs)
        if isinstance(c, Funct):
            return all(len(bs) <= 1 for bs in self.successors(c.role).values())
        raise TypeError(f"not a constraint: {c!r}")


def gc2_eval(item: object, interp: Interpretation, element: str | None = None) -> frozenset[str] | bool:
    """Concept -> extension (or membership if `element` given); constraint -> truth value."""
    ev = _Evaluator(interp)
    if isinstance(item, _CONCEPT_TYPES):
        ext = ev.concept(item)  # type: ignore[arg-type]
        return ext if element is None else element in ext
    if element is not None:
        raise ShredkitError("bad-eval", "element membership only applies to concepts")
    return ev.constraint(item)  # type: ignore[arg-type]


def violations(constraints: Iterable[ConstraintT], interp: Interpretation) -> list[ConstraintT]:
    ev = _Evaluator(interp)
    return [c for c in constraints if not ev.constraint(c)]


# --- CQ translation ----------------------------------------------------------


def _edge_role(a: Atom, x: str) -> Role:
    return RName(a.relation) if a.args[0] == x else Inv(RName(a.relation))


def _role_key(r: Role) -> tuple[str, int]:
    return (r.name, 0) if isinstance(r, RName) else (r.role.name, 1)  # type: ignore[union-attr]


def _translate(atom_set: list[Atom], graph: nx.Graph, x: str, parent: str | None) -> Concept:
    parts: list[Concept] = []
    for a in sorted(atom_set):
        if set(a.args) == {x}:
            parts.append(CName(a.relation) if len(a.args) == 1 else SelfLoop(RName(a.relation)))
    for y in sorted(n for n in graph.neighbors(x) if n != parent):
        edge = sorted((_edge_role(a, x) for a in atom_set if set(a.args) == {x, y}), key=_role_key)
        role: Role = edge[0] if len(edge) == 1 else RAnd(tuple(edge))
        below = {y} | set(nx.descendants(graph.subgraph(n for n in graph if n != x), y))
        sub = [a for a in atom_set if set(a.args) <= below]
        parts.append(Exists(role, _translate(sub, graph, y, x)))
    return conj(parts)


def cq_to_gc2(q: ConjunctiveQuery) -> Concept:
    """Concept whose extension is the answer set of a cycle-free unary CQ over arity <= 2."""
    if len(q.free) != 1:
        raise ShredkitError("bad-query", f"expected exactly one free variable, got {len(q.free)}")
    for a in q.atoms:
        if len(a.args) > 2:
            raise ShredkitError("arity-mismatch", f"atom {a} has arity above two")
    graph = gaifman_graph(q.atoms)
    if not nx.is_forest(graph):
        cycle = nx.find_cycle(graph)
        raise ShredkitError("cyclic-query", "query Gaifman graph has a cycle",
                            detail={"cycle": [list(e) for e in cycle]})
    x = q.free[0]
    parts: list[Concept] = []
    comps = sorted((sorted(c) for c in nx.connected_components(graph)), key=lambda c: (x not in c, c[0]))
    for comp in comps:
        members = set(comp)
        sub = [a for a in q.atoms if set(a.args) <= members]
        root = x if x in members else comp[0]
        concept = _translate(sub, graph.subgraph(members), root, None)
        parts.append(concept if root == x else Somewhere(concept))
    return conj(parts)


def fnl_rule_to_gc2(rule: ExistentialRule, sig: Signature) -> Sub:
    """Inclusion equivalent (on shreddings) to a fully-non-looping frontier-one rule."""
    from .analysis import classify_rule
    from .shredding import shred_rule

    cls = classify_rule(rule, sig)
    if not cls.fnl:
        raise ShredkitError("not-fnl", f"rule {rule} is not fully non-looping", detail=cls.to_json())
    body, head = shred_rule(rule, sig)
    (x,) = sorted(rule.frontier)
    lhs = cq_to_gc2(ConjunctiveQuery(body, (x,)))
    rhs = cq_to_gc2(ConjunctiveQuery(head, (x,)))
    return Sub(lhs, rhs)


def constraint_relations(c: ConstraintT) -> set[str]:
    return role_names(c) | concept_names(c)


def rename_relations(item: object, mapping: Mapping[str, str]) -> object:
    """Structural copy with relation names substituted."""
    match item:
        case RName(name):
            return RName(mapping.get(name, name))
        case CName(name):
            return CName(mapping.get(name, name))
        case Top() | Bot():
            return item
        case AtLeast(n, r, c):
            return AtLeast(n, rename_relations(r, mapping), rename_relations(c, mapping))  # type: ignore[arg-type]
        case AtMost(n, r, c):
            return AtMost(n, rename_relations(r, mapping), rename_relations(c, mapping))  # type: ignore[arg-type]
        case RAnd(items) | ROr(items) | And(items) | Or(items):
            return type(item)(tuple(rename_relations(i, mapping) for i in items))  # type: ignore[call-arg]
    kids = children(item)
    return type(item)(*(rename_relations(k, mapping) for k in kids))  # type: ignore[call-arg]
