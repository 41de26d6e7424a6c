"""Random generators shared by the test modules. Everything is driven by a `random.Random`."""

from __future__ import annotations

import itertools
import random
from typing import Iterable

from shredkit import gc2
from shredkit.analysis import classify_rule
from shredkit.kb import (
    Atom,
    ConjunctiveQuery,
    ExistentialRule,
    Fact,
    FunctionalDependency,
    Interpretation,
    Signature,
    satisfies,
)

ELEMENTS = "abcdefgh"


def mixed_signature(rng: random.Random, max_arity: int = 4) -> Signature:
    """A few unary and binary relations plus one or two wider ones."""
    ar = {"A": 1, "B": 1, "R": 2, "S": 2}
    for name in rng.sample(["T", "U", "V"], rng.randint(1, 2)):
        ar[name] = rng.randint(3, max_arity)
    return Signature.of(ar)


def random_interpretation(
    rng: random.Random, sig: Signature, max_elements: int = 6, max_tuples: int = 3, min_elements: int = 1
) -> Interpretation:
    n = rng.randint(min_elements, max_elements)
    dom = list(ELEMENTS[:n])
    ext = {}
    for rel, ar in sig.arities:
        k = rng.randint(0, max_tuples)
        ext[rel] = frozenset(tuple(rng.choice(dom) for _ in range(ar)) for _ in range(k))
    return Interpretation(sig, frozenset(dom), ext)


class _Vars:
    def __init__(self, prefix: str, taken: Iterable[str] = ()) -> None:
        self.prefix = prefix
        self.taken = set(taken)
        self.k = 0

    def __call__(self) -> str:
        while True:
            self.k += 1
            v = f"{self.prefix}{self.k}"
            if v not in self.taken:
                self.taken.add(v)
                return v


def tree_atoms(rng: random.Random, sig: Signature, root: str, n: int, fresh: _Vars, pool: list[str] | None = None) -> list[Atom]:
    """`n` atoms forming a non-looping conjunction that contains `root`.

    Every new atom meets the variables seen so far in exactly one variable, except
    that a binary atom may reuse the pair of an earlier binary atom.
    """
    seen = [root] if pool is None else list(pool)
    out: list[Atom] = []
    pairs: list[tuple[str, str]] = []
    rels = sig.names()
    while len(out) < n:
        rel = rng.choice(rels)
        ar = sig.arity(rel)
        if ar == 2 and pairs and rng.random() < 0.2:
            x, y = rng.choice(pairs)
            args = (x, y) if rng.random() < 0.5 else (y, x)
        else:
            anchor = root if not out and root in seen else rng.choice(seen)
            args_l = [anchor]
            news = []
            for _ in range(ar - 1):
                if news and rng.random() < 0.3:
                    args_l.append(rng.choice(news))
                elif rng.random() < 0.15:
                    args_l.append(anchor)
                else:
                    v = fresh()
                    news.append(v)
                    args_l.append(v)
            rng.shuffle(args_l)
            args = tuple(args_l)
            seen.extend(news)
            if ar == 2 and args[0] != args[1]:
                pairs.append((args[0], args[1]))
        a = Atom(rel, args)
        if a not in out:
            out.append(a)
    return out


def random_fnl_rule(rng: random.Random, sig: Signature, max_atoms: int = 6) -> ExistentialRule:
    """Fully-non-looping, frontier-one rule with at most `max_atoms` atoms in total."""
    while True:
        nb = rng.randint(1, max_atoms - 1)
        nh = rng.randint(1, max_atoms - nb)
        body = tree_atoms(rng, sig, "x", nb, _Vars("u"))
        head = tree_atoms(rng, sig, "x", nh, _Vars("y"))
        if "x" not in {v for a in body for v in a.args} or "x" not in {v for a in head for v in a.args}:
            continue
        rule = ExistentialRule(frozenset(body), frozenset(head))
        if classify_rule(rule, sig).fnl:
            return rule


def random_cyclic_body(rng: random.Random, sig: Signature, n: int) -> list[Atom]:
    """Arbitrary atoms over a small variable pool, always containing `x`."""
    pool = ["x", "u1", "u2", "u3"][: rng.randint(2, 4)]
    out: list[Atom] = []
    while len(out) < n:
        rel = rng.choice(sig.names())
        args = tuple(rng.choice(pool) for _ in range(sig.arity(rel)))
        if not out and "x" not in args:
            args = ("x",) + args[1:]
        a = Atom(rel, args)
        if a not in out:
            out.append(a)
    if not any("x" in a.args for a in out):
        out[0] = Atom(out[0].relation, ("x",) + out[0].args[1:])
    return out


def random_hnl_rule(
    rng: random.Random, sig: Signature, max_atoms: int = 5, body_sig: Signature | None = None,
    head_sig: Signature | None = None,
) -> ExistentialRule:
    """Frontier-one rule with a non-looping head; the body may be cyclic."""
    while True:
        nb = rng.randint(1, max(1, max_atoms - 1))
        nh = rng.randint(1, max(1, min(2, max_atoms - nb)))
        body = random_cyclic_body(rng, body_sig or sig, nb)
        head = tree_atoms(rng, head_sig or sig, "x", nh, _Vars("y"))
        if not any("x" in a.args for a in head):
            continue
        rule = ExistentialRule(frozenset(body), frozenset(head))
        if len(rule.frontier) == 1 and classify_rule(rule, sig).hnl:
            return rule


def random_fact(rng: random.Random, sig: Signature, n_atoms: int, n_vars: int = 3) -> Fact:
    pool = [f"c{i}" for i in range(1, n_vars + 1)]
    out = set()
    while len(out) < n_atoms:
        rel = rng.choice(sig.names())
        out.add(Atom(rel, tuple(rng.choice(pool) for _ in range(sig.arity(rel)))))
    return Fact(frozenset(out))


def random_query(rng: random.Random, sig: Signature, n_atoms: int) -> ConjunctiveQuery:
    pool = ["q1", "q2", "q3"]
    out = set()
    while len(out) < n_atoms:
        rel = rng.choice(sig.names())
        out.add(Atom(rel, tuple(rng.choice(pool) for _ in range(sig.arity(rel)))))
    return ConjunctiveQuery(frozenset(out))


def random_simple_inclusion(rng: random.Random, sig: Signature) -> gc2.Sub:
    un, bi = sig.unary(), sig.binary()
    a, b = rng.choice(un), rng.choice(un)
    role: gc2.Role = gc2.RName(rng.choice(bi))
    if rng.random() < 0.5:
        role = gc2.Inv(role)
    shape = rng.randrange(3)
    if shape == 0:
        return gc2.Sub(gc2.CName(a), gc2.CName(b))
    if shape == 1:
        return gc2.Sub(gc2.CName(a), gc2.Exists(role, gc2.CName(b)))
    return gc2.Sub(gc2.Exists(role, gc2.CName(a)), gc2.CName(b))


def random_fds(rng: random.Random, sig: Signature, k: int = 2) -> list[FunctionalDependency]:
    out = []
    for rel in sig.high():
        ar = sig.arity(rel)
        for _ in range(rng.randint(0, k)):
            size = rng.randint(1, ar - 1)
            det = frozenset(rng.sample(range(1, ar + 1), size))
            rest = [p for p in range(1, ar + 1) if p not in det]
            fd = FunctionalDependency(rel, det, rng.choice(rest))
            if fd not in out:
                out.append(fd)
    return out


def satisfies_all(interp: Interpretation, items: Iterable[object]) -> bool:
    return all(satisfies(interp, it) for it in items)


def tree_extension(
    rng: random.Random, base: Interpretation, n_atoms: int, relations: list[str] | None = None,
    repeat_anchor: float = 0.0,
) -> Interpretation:
    """Attach atoms that each meet the current domain in exactly one element; the rest is fresh."""
    sig = base.signature
    rels = relations or sig.names()
    dom = sorted(base.domain)
    counter = itertools.count(1)
    add: dict[str, set[tuple[str, ...]]] = {}
    for _ in range(n_atoms):
        rel = rng.choice(rels)
        ar = sig.arity(rel)
        anchor = rng.choice(dom)
        if ar == 1:
            add.setdefault(rel, set()).add((anchor,))
            continue
        fresh = [f"n{next(counter)}" for _ in range(rng.randint(1, ar - 1))]
        args = [anchor] + [anchor if rng.random() < repeat_anchor else rng.choice(fresh) for _ in range(ar - 1)]
        for i, v in enumerate(fresh):  # every fresh element shows up
            if v not in args:
                args[1 + i % (ar - 1)] = v
        rng.shuffle(args)
        add.setdefault(rel, set()).add(tuple(args))
        dom.extend(v for v in fresh if v in args)
    return base.with_tuples(add)


# acceptance lines, printed again in the pytest terminal summary
ACCEPTANCE: list[str] = []


def record(criterion: int, ok: bool, detail: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'} criterion {criterion}: {detail}"
    ACCEPTANCE.append(line)
    print(line)
