"""Encoders for the undecidability reductions, with the finite models used to sanity-check them."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping, Sequence

import tomli

from . import gc2
from .errors import ShredkitError
from .kb import (
    Atom,
    ConjunctiveQuery,
    ExistentialRule,
    Fact,
    FunctionalDependency,
    Interpretation,
    KnowledgeBase,
    Signature,
    serialize_kb,
)
from .treeify import marker_name

Premise = ExistentialRule | FunctionalDependency | gc2.ConstraintT


def _fresh_relation(base: str, sig: Signature) -> str:
    name = base
    while name in sig:
        name += "_"
    return name


# --- entailment instances ------------------------------------------------------------


@dataclass(frozen=True)
class EntailmentInstance:
    """Premises plus a goal rule: does every model of the premises satisfy the goal?"""

    signature: Signature
    rules: tuple[ExistentialRule, ...] = ()
    fds: tuple[FunctionalDependency, ...] = ()
    constraints: tuple[gc2.ConstraintT, ...] = ()
    goal: ExistentialRule | None = None
    report: dict[str, Any] = field(default_factory=dict, compare=False)

    @property
    def premises(self) -> list[Premise]:
        return [*self.rules, *self.fds, *self.constraints]

    def to_kb(self) -> KnowledgeBase:
        return KnowledgeBase(self.signature, None, self.rules, self.fds, self.constraints)

    def to_text(self) -> str:
        return serialize_kb(self.to_kb())

    def to_qa(self) -> KnowledgeBase:
        if self.goal is None:
            raise ShredkitError("no-goal", "entailment instance has no goal rule")
        return entailment_to_qa(self.premises, self.goal, self.signature)


def entailment_to_qa(premises: Iterable[Premise], goal: ExistentialRule, sig: Signature) -> KnowledgeBase:
    """QA instance whose query is entailed iff the premises entail `goal`.

    Each body variable x gets a fresh singleton marker P_x; the fact is the marked
    body and the query asks for the marked body extended by the head.
    """
    premises = list(premises)
    xs = sorted(goal.body_variables)
    markers = {x: marker_name(x) for x in xs}
    clash = sorted(m for m in markers.values() if m in sig)
    if clash:
        raise ShredkitError("reserved-name", f"marker relations {clash} already exist in the signature")
    sig2 = sig.extend({m: 1 for m in markers.values()}, reserved=True)
    marks = frozenset(Atom(markers[x], (x,)) for x in xs)
    fact = Fact(goal.body | marks)
    query = ConjunctiveQuery(goal.body | goal.head | marks, ())
    rules = tuple(p for p in premises if isinstance(p, ExistentialRule))
    fds = tuple(p for p in premises if isinstance(p, FunctionalDependency))
    cons = tuple(p for p in premises if isinstance(p, gc2.Constraint))
    return KnowledgeBase(sig2, fact, rules, fds, cons, query)


# --- inclusion dependencies -------------------------------------------------------------


@dataclass(frozen=True)
class Inclusion:
    """R^p.. ⊆ S^q..: the k-th frontier variable sits at body_pos[k] and head_pos[k]."""

    body_rel: str
    body_pos: tuple[int, ...]
    head_rel: str
    head_pos: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.body_pos) != len(self.head_pos) or not self.body_pos:
            raise ShredkitError("not-inclusion", "body and head position lists must be nonempty and equally long")
        if len(set(self.body_pos)) != len(self.body_pos) or len(set(self.head_pos)) != len(self.head_pos):
            raise ShredkitError("not-inclusion", "an inclusion may not repeat a position")

    @property
    def width(self) -> int:
        return len(self.body_pos)

    def __str__(self) -> str:
        lhs = " ".join(f"{self.body_rel}^{p}" for p in self.body_pos)
        rhs = " ".join(f"{self.head_rel}^{p}" for p in self.head_pos)
        return f"{lhs} <= {rhs}"

    def to_rule(self, sig: Signature, name: str = "") -> ExistentialRule:
        n, m = sig.arity(self.body_rel), sig.arity(self.head_rel)
        for p in self.body_pos:
            if not 1 <= p <= n:
                raise ShredkitError("fd-position", f"position {p} out of range for {self.body_rel}/{n}")
        for p in self.head_pos:
            if not 1 <= p <= m:
                raise ShredkitError("fd-position", f"position {p} out of range for {self.head_rel}/{m}")
        xs = [f"x{i}" for i in range(1, n + 1)]
        head = [f"y{j}" for j in range(1, m + 1)]
        for bp, hp in zip(self.body_pos, self.head_pos):
            head[hp - 1] = xs[bp - 1]
        return ExistentialRule(frozenset({Atom(self.body_rel, tuple(xs))}), frozenset({Atom(self.head_rel, tuple(head))}), name)


def inclusion_of(rule: ExistentialRule) -> Inclusion:
    """Read an inclusion dependency back from its rule form (frontier ordered by body position)."""
    if len(rule.body) != 1 or len(rule.head) != 1:
        raise ShredkitError("not-inclusion", f"{rule} must have one body atom and one head atom")
    (b,), (h,) = rule.body, rule.head
    if len(set(b.args)) != len(b.args) or len(set(h.args)) != len(h.args):
        raise ShredkitError("not-inclusion", f"{rule} repeats a variable inside an atom")
    fr = sorted(rule.frontier, key=b.args.index)
    if not fr:
        raise ShredkitError("not-inclusion", f"{rule} has an empty frontier")
    return Inclusion(b.relation, tuple(b.args.index(v) + 1 for v in fr), h.relation, tuple(h.args.index(v) + 1 for v in fr))


def _is_ufd(fd: FunctionalDependency) -> bool:
    return len(fd.determiner) == 1


# --- UFD lifting --------------------------------------------------------------------------


def ufd_relation(fd: FunctionalDependency) -> str:
    (p,) = fd.determiner
    return f"Phi_{fd.relation}_{p}_{fd.determined}"


def lift_ufds(inst: EntailmentInstance) -> EntailmentInstance:
    """Each UFD R^p -> R^q becomes a binary copy rule into a fresh relation that is declared functional."""
    for fd in inst.fds:
        if not _is_ufd(fd):
            raise ShredkitError("non-unary-determiner", f"FD {fd} has a determiner of size {len(fd.determiner)}")
    if not inst.fds:
        return inst
    sig = inst.signature
    fresh: dict[str, int] = {}
    rules = list(inst.rules)
    functs: list[gc2.ConstraintT] = []
    for fd in inst.fds:
        name = ufd_relation(fd)
        if name in sig:
            raise ShredkitError("reserved-name", f"relation {name} already exists")
        if name in fresh:
            continue
        fresh[name] = 2
        n = sig.arity(fd.relation)
        xs = tuple(f"x{i}" for i in range(1, n + 1))
        (p,) = fd.determiner
        rules.append(ExistentialRule(
            frozenset({Atom(fd.relation, xs)}), frozenset({Atom(name, (xs[p - 1], xs[fd.determined - 1]))}), f"lift.{name}"
        ))
        functs.append(gc2.Funct(gc2.RName(name)))
    return EntailmentInstance(
        sig.extend(fresh, reserved=True), tuple(rules), (), tuple(inst.constraints) + tuple(functs), inst.goal,
        {"lifted": sorted(fresh)},
    )


def lift_model(interp: Interpretation, lifted: EntailmentInstance, fds: Iterable[FunctionalDependency]) -> Interpretation:
    """Populate each fresh relation with the (p, q) projection of its source relation."""
    ext: dict[str, set[tuple[str, ...]]] = {}
    for fd in fds:
        (p,) = fd.determiner
        ext.setdefault(ufd_relation(fd), set()).update((t[p - 1], t[fd.determined - 1]) for t in interp.tuples(fd.relation))
    base = Interpretation(lifted.signature, interp.domain, dict(interp.extents))
    return base.with_tuples(ext)


# --- removing ID[1] rules --------------------------------------------------------------------


@dataclass(frozen=True)
class ExtraPosition:
    relation: str
    position: int  # position in the widened relation
    copies: int  # original position whose value populates it
    rule: str


def remove_uids(inst: EntailmentInstance) -> EntailmentInstance:
    """Widen relations so every frontier-one inclusion becomes a frontier-two one.

    Other rules, FDs and the goal are rewritten to the wider signature, with fresh
    variables at the added positions.
    """
    sig = inst.signature
    incs = [(r, inclusion_of(r)) for r in inst.rules]
    if all(inc.width != 1 for _, inc in incs):
        return inst
    widths = {name: sig.arity(name) for name in sig.names()}
    extras: list[ExtraPosition] = []
    added: dict[int, tuple[int, int]] = {}
    for k, (rule, inc) in enumerate(incs):
        if inc.width != 1:
            continue
        tag = rule.name or f"uid{k + 1}"
        widths[inc.body_rel] += 1
        p1 = widths[inc.body_rel]
        extras.append(ExtraPosition(inc.body_rel, p1, inc.body_pos[0], tag))
        widths[inc.head_rel] += 1
        extras.append(ExtraPosition(inc.head_rel, widths[inc.head_rel], inc.head_pos[0], tag))
        added[k] = (p1, widths[inc.head_rel])
    sig_plus = Signature.of(widths, sig.reserved)

    def widen(r: ExistentialRule) -> ExistentialRule:
        counter = itertools.count(1)
        used = r.body_variables | r.head_variables

        def pad(a: Atom) -> Atom:
            extra = widths[a.relation] - sig.arity(a.relation)
            args = list(a.args)
            for _ in range(extra):
                v = f"w{next(counter)}"
                while v in used:
                    v = f"w{next(counter)}"
                args.append(v)
            return Atom(a.relation, tuple(args))

        return ExistentialRule(frozenset(map(pad, r.body)), frozenset(map(pad, r.head)), r.name)

    rules = []
    for k, (rule, inc) in enumerate(incs):
        if inc.width == 1:
            p1, p2 = added[k]
            rules.append(Inclusion(inc.body_rel, (inc.body_pos[0], p1), inc.head_rel, (inc.head_pos[0], p2)).to_rule(sig_plus, rule.name))
        else:
            rules.append(widen(rule))
    goal = widen(inst.goal) if inst.goal is not None else None
    return EntailmentInstance(
        sig_plus, tuple(rules), inst.fds, inst.constraints, goal,
        {"extra_positions": [e.__dict__ for e in extras]},
    )


def _extras(plus: EntailmentInstance) -> list[ExtraPosition]:
    return [ExtraPosition(**e) for e in plus.report.get("extra_positions", [])]


def populate_extra(interp: Interpretation, plus: EntailmentInstance) -> Interpretation:
    """Copy each tuple's source value into every added position."""
    extras = _extras(plus)
    ext = {}
    for rel in plus.signature.names():
        mine = sorted((e for e in extras if e.relation == rel), key=lambda e: e.position)
        ext[rel] = frozenset(t + tuple(t[e.copies - 1] for e in mine) for t in interp.tuples(rel))
    return Interpretation(plus.signature, interp.domain, ext)


def project_extra(interp: Interpretation, plus: EntailmentInstance, sig: Signature) -> Interpretation:
    return Interpretation(sig, interp.domain, {r: frozenset(t[: sig.arity(r)] for t in interp.tuples(r)) for r in sig.names()})


# --- tilings -----------------------------------------------------------------------------


@dataclass(frozen=True)
class TilingSystem:
    tiles: tuple[str, ...]
    horizontal: frozenset[tuple[str, str]]
    vertical: frozenset[tuple[str, str]]
    seed: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.tiles:
            raise ShredkitError("bad-tiling", "a tiling system needs at least one tile")
        known = set(self.tiles)
        for a, b in self.horizontal | self.vertical:
            if a not in known or b not in known:
                raise ShredkitError("bad-tiling", f"pair ({a},{b}) uses an unknown tile")
        for c in self.seed:
            if c not in known:
                raise ShredkitError("bad-tiling", f"seed tile {c} is not a tile")
        if not self.seed:
            raise ShredkitError("bad-tiling", "the seed row must be nonempty")

    @staticmethod
    def from_toml(text: str) -> "TilingSystem":
        try:
            d = tomli.loads(text)
        except tomli.TOMLDecodeError as e:
            raise ShredkitError("syntax", f"tiling file: {e}") from None
        try:
            return TilingSystem(
                tuple(d["tiles"]),
                frozenset(tuple(p) for p in d.get("H", [])),
                frozenset(tuple(p) for p in d.get("V", [])),
                tuple(d["seed"]),
            )
        except KeyError as e:
            raise ShredkitError("syntax", f"tiling file lacks key {e}") from None

    def to_toml(self) -> str:
        def pairs(ps: Iterable[tuple[str, str]]) -> str:
            return "[" + ", ".join(f'["{a}", "{b}"]' for a, b in sorted(ps)) + "]"

        tiles = ", ".join(f'"{t}"' for t in self.tiles)
        seed = ", ".join(f'"{t}"' for t in self.seed)
        return f"tiles = [{tiles}]\nH = {pairs(self.horizontal)}\nV = {pairs(self.vertical)}\nseed = [{seed}]\n"


GRID_RELATIONS = ("S", "R", "D")


@dataclass(frozen=True)
class TilingEncoding:
    signature: Signature
    fact: Fact
    rule: ExistentialRule
    constraints: tuple[gc2.ConstraintT, ...]

    def to_kb(self) -> KnowledgeBase:
        return KnowledgeBase(self.signature, self.fact, (self.rule,), (), self.constraints)


def grid_rule() -> ExistentialRule:
    body = frozenset({Atom("S", ("u",))})
    head = frozenset({
        Atom("R", ("u", "x")), Atom("D", ("u", "y")), Atom("R", ("y", "z")), Atom("D", ("x", "z")),
        Atom("S", ("x",)), Atom("S", ("y",)), Atom("S", ("z",)),
    })
    return ExistentialRule(body, head, "grid")


def encode_tiling(ts: TilingSystem) -> TilingEncoding:
    clash = sorted(set(ts.tiles) & set(GRID_RELATIONS))
    if clash:
        raise ShredkitError("reserved-name", f"tile names {clash} collide with the grid relations")
    sig = Signature.of({"S": 1, "R": 2, "D": 2}, GRID_RELATIONS).extend({c: 1 for c in ts.tiles})
    r, d = gc2.RName("R"), gc2.RName("D")
    cons: list[gc2.ConstraintT] = [gc2.Funct(r), gc2.Funct(d)]
    for ci, cj in itertools.combinations(ts.tiles, 2):
        cons.append(gc2.Sub(gc2.And((gc2.CName(ci), gc2.CName(cj))), gc2.Bot()))
    cons.append(gc2.Sub(gc2.CName("S"), gc2.disj(gc2.CName(c) for c in ts.tiles)))
    for role, rel in ((r, ts.horizontal), (d, ts.vertical)):
        for ci in ts.tiles:
            succ = [cj for cj in ts.tiles if (ci, cj) in rel]
            cons.append(gc2.Sub(gc2.CName(ci), gc2.disj(gc2.Exists(role, gc2.CName(cj)) for cj in succ)))
    xs = [f"x{i}" for i in range(len(ts.seed))]
    fact_atoms = {Atom("S", (xs[0],))}
    fact_atoms |= {Atom(c, (x,)) for c, x in zip(ts.seed, xs)}
    fact_atoms |= {Atom("R", (xs[i], xs[i + 1])) for i in range(len(xs) - 1)}
    return TilingEncoding(sig, Fact(frozenset(fact_atoms)), grid_rule(), tuple(cons))


def tiling_violations(ts: TilingSystem, f: Mapping[tuple[int, int], str], w: int, h: int) -> list[str]:
    bad = []
    for i in range(w):
        for j in range(h):
            c = f[(i, j)]
            if (c, f[((i + 1) % w, j)]) not in ts.horizontal:
                bad.append(f"H fails at ({i},{j})")
            if (c, f[(i, (j + 1) % h)]) not in ts.vertical:
                bad.append(f"V fails at ({i},{j})")
    for i, c in enumerate(ts.seed):
        if f[(i % w, 0)] != c:
            bad.append(f"seed tile {i} is {f[(i % w, 0)]}, expected {c}")
    return bad


def torus_model(
    ts: TilingSystem, f: Mapping[tuple[int, int], str] | Sequence[Sequence[str]], w: int, h: int, check: bool = True
) -> Interpretation:
    """w*h torus; `f` maps (column, row) to a tile, or is a list of rows."""
    if w < 1 or h < 1:
        raise ShredkitError("bad-tiling", "torus dimensions must be positive")
    if not isinstance(f, Mapping):
        f = {(i, j): f[j][i] for j in range(h) for i in range(w)}
    if check:
        bad = tiling_violations(ts, f, w, h)
        if bad:
            raise ShredkitError("bad-tiling", bad[0], detail={"violations": bad})
    enc_sig = encode_tiling(ts).signature
    name = {(i, j): f"a{i}_{j}" for i in range(w) for j in range(h)}
    ext: dict[str, set[tuple[str, ...]]] = {"S": {(e,) for e in name.values()}, "R": set(), "D": set()}
    for (i, j), e in name.items():
        ext["R"].add((e, name[((i + 1) % w, j)]))
        ext["D"].add((e, name[(i, (j + 1) % h)]))
        ext.setdefault(f[(i, j)], set()).add((e,))
    return Interpretation(enc_sig, frozenset(name.values()), {r: frozenset(ts_) for r, ts_ in ext.items()})


def periodic_tilings(ts: TilingSystem, w: int, h: int) -> Iterable[dict[tuple[int, int], str]]:
    """All valid w*h periodic tilings matching the seed (brute force; small tori only)."""
    cells = [(i, j) for j in range(h) for i in range(w)]
    for choice in itertools.product(ts.tiles, repeat=len(cells)):
        f = dict(zip(cells, choice))
        if not tiling_violations(ts, f, w, h):
            yield f


def read_tiling(interp: Interpretation, ts: TilingSystem, start: str, w: int, h: int) -> dict[tuple[int, int], str] | None:
    """Follow R/D from `start` to read a w*h window of tiles; None where the grid breaks."""
    r_succ = {a: b for a, b in interp.tuples("R")}
    d_succ = {a: b for a, b in interp.tuples("D")}
    tile_of: dict[str, str] = {}
    for c in ts.tiles:
        for (e,) in interp.tuples(c):
            tile_of[e] = c
    out = {}
    row = start
    for j in range(h):
        e = row
        for i in range(w):
            if e not in tile_of:
                return None
            out[(i, j)] = tile_of[e]
            if i < w - 1:
                if e not in r_succ:
                    return None
                e = r_succ[e]
        if j < h - 1:
            if row not in d_succ:
                return None
            row = d_succ[row]
    return out


def window_violations(ts: TilingSystem, f: Mapping[tuple[int, int], str], w: int, h: int) -> list[str]:
    """Non-periodic H/V/seed check over a finite window."""
    bad = []
    for (i, j), c in f.items():
        if (i + 1, j) in f and (c, f[(i + 1, j)]) not in ts.horizontal:
            bad.append(f"H fails at ({i},{j})")
        if (i, j + 1) in f and (c, f[(i, j + 1)]) not in ts.vertical:
            bad.append(f"V fails at ({i},{j})")
    for i, c in enumerate(ts.seed):
        if (i, 0) in f and f[(i, 0)] != c:
            bad.append(f"seed tile {i} mismatch")
    return bad


# --- restricted UFD / ID[2] entailment to single-head frontier-one rules -----------------------


def _oriented(inc: Inclusion, ufds: set[tuple[int, int]]) -> Inclusion:
    a, b = inc.body_pos
    c, d = inc.head_pos
    if (a, b) in ufds:
        return inc
    if (b, a) in ufds:
        return Inclusion(inc.body_rel, (b, a), inc.head_rel, (d, c))
    raise ShredkitError(
        "restricted-violated",
        f"rule {inc} needs the UFD {inc.body_rel}^{a} -> {inc.body_rel}^{b} (or the reverse) to hold",
    )


def _id2_on(rule: ExistentialRule, rel: str) -> Inclusion:
    inc = inclusion_of(rule)
    if inc.width != 2 or inc.body_rel != rel or inc.head_rel != rel:
        raise ShredkitError("restricted-violated", f"{rule} is not a frontier-two inclusion on {rel}")
    return inc


@dataclass(frozen=True)
class FrontierOneReduction:
    instance: EntailmentInstance
    relation: str
    doubled: str
    arity: int
    translated: tuple[tuple[Inclusion, ExistentialRule, ExistentialRule], ...]


def _svar(copy: int, kind: str, j: int) -> str:
    return f"{kind}{copy}_{j}"


def frontier_one_pair(inc: Inclusion, doubled: str, n: int, name: str = "") -> tuple[ExistentialRule, ExistentialRule]:
    """The two single-head frontier-one rules replacing R^a R^b ⊆ R^c R^d on the doubled relation."""
    a, b = inc.body_pos
    c, d = inc.head_pos
    body = Atom(doubled, tuple(_svar(k, "x", j) for k in (1, 2) for j in range(1, n + 1)))

    def head(fixed: Mapping[tuple[int, int], str]) -> Atom:
        return Atom(doubled, tuple(fixed.get((k, j), _svar(k, "y", j)) for k in (1, 2) for j in range(1, n + 1)))

    h1 = head({(1, a): _svar(1, "x", a), (2, a): _svar(1, "x", a), (2, b): _svar(1, "y", b)})
    h2 = head({(2, a): _svar(2, "x", a), (1, c): _svar(2, "x", a), (1, d): _svar(2, "y", b)})
    return (
        ExistentialRule(frozenset({body}), frozenset({h1}), f"{name}.1" if name else ""),
        ExistentialRule(frozenset({body}), frozenset({h2}), f"{name}.2" if name else ""),
    )


def first_copy_inclusion(inc: Inclusion, doubled: str) -> Inclusion:
    return Inclusion(doubled, inc.body_pos, doubled, inc.head_pos)


def restricted_entailment_to_fr1(inst: EntailmentInstance) -> FrontierOneReduction:
    rels = sorted({fd.relation for fd in inst.fds} | {a.relation for r in inst.rules for a in r.body | r.head}
                  | ({a.relation for a in inst.goal.body | inst.goal.head} if inst.goal else set()))
    if len(rels) != 1:
        raise ShredkitError("restricted-violated", f"expected a single relation, found {rels}")
    (rel,) = rels
    n = inst.signature.arity(rel)
    for fd in inst.fds:
        if not _is_ufd(fd):
            raise ShredkitError("non-unary-determiner", f"FD {fd} is not unary")
    ufds = {(next(iter(fd.determiner)), fd.determined) for fd in inst.fds}
    doubled = _fresh_relation("S", inst.signature)
    sig = Signature.of({doubled: 2 * n}, {doubled})
    fds = []
    for p, q in sorted(ufds):
        fds.append(FunctionalDependency(doubled, frozenset({p}), q))
        fds.append(FunctionalDependency(doubled, frozenset({n + p}), n + q))
    rules: list[ExistentialRule] = []
    translated = []
    for k, r in enumerate(inst.rules, start=1):
        inc = _oriented(_id2_on(r, rel), ufds)
        d1, d2 = frontier_one_pair(inc, doubled, n, r.name or f"delta{k}")
        rules += [d1, d2]
        translated.append((inc, d1, d2))
    goal = None
    if inst.goal is not None:
        g = _id2_on(inst.goal, rel)
        goal = first_copy_inclusion(g, doubled).to_rule(sig, (inst.goal.name or "goal") + "'")
    out = EntailmentInstance(sig, tuple(rules), tuple(fds), (), goal, {"relation": rel, "doubled": doubled, "arity": n})
    return FrontierOneReduction(out, rel, doubled, n, tuple(translated))


def product_model(interp: Interpretation, red: FrontierOneReduction) -> Interpretation:
    tuples = interp.tuples(red.relation)
    s = frozenset(a + b for a in tuples for b in tuples)
    return Interpretation(red.instance.signature, interp.domain, {red.doubled: s})


def project_first_copy(interp: Interpretation, red: FrontierOneReduction, sig: Signature) -> Interpretation:
    r = frozenset(t[: red.arity] for t in interp.tuples(red.doubled))
    return Interpretation(sig, interp.domain, {red.relation: r})


# --- source-to-target variant -----------------------------------------------------------------


@dataclass(frozen=True)
class S2TVariant:
    signature: Signature
    rule: ExistentialRule
    inclusion: gc2.ConstraintT
    source: tuple[str, ...]
    target: tuple[str, ...]

    @property
    def split(self) -> tuple[tuple[str, ...], tuple[str, ...]]:
        return self.source, self.target


def s2t_variant(rule: ExistentialRule, sig: Signature) -> S2TVariant:
    """Rename the head copies of the body's unary relation so body and head share no relation."""
    if len(rule.body) != 1:
        raise ShredkitError("shape-mismatch", f"{rule} must have a single body atom")
    (b,) = rule.body
    if sig.arity(b.relation) != 1 or len(rule.frontier) != 1:
        raise ShredkitError("shape-mismatch", f"{rule} must have a unary body atom and one frontier variable")
    src = b.relation
    if src not in {a.relation for a in rule.head}:
        raise ShredkitError("shape-mismatch", f"the head of {rule} does not mention {src}")
    primed = _fresh_relation(f"{src}'", sig)
    head = frozenset(Atom(primed, a.args) if a.relation == src else a for a in rule.head)
    new_sig = sig.extend({primed: 1}, reserved=True)
    targets = tuple(sorted({a.relation for a in head}))
    if src in targets:
        raise ShredkitError("shape-mismatch", "renaming left the body relation in the head")
    return S2TVariant(
        new_sig, ExistentialRule(rule.body, head, rule.name), gc2.Sub(gc2.CName(primed), gc2.CName(src)), (src,), targets
    )


def s2t_model(interp: Interpretation, variant: S2TVariant) -> Interpretation:
    """Extend a model of the original system: the primed relation copies the source one."""
    (src,) = variant.source
    primed = next(r for r in variant.signature.names() if r not in interp.signature)
    base = Interpretation(variant.signature, interp.domain, dict(interp.extents))
    return base.with_tuples({primed: interp.tuples(src)})
