"""Tree-of-bags unravelings, truncated at a depth, and the cycle-freeness / FD-safety checks.

Bags are the substructures induced by guarded pairs (two distinct elements sharing a
tuple). The root bag is the part of J on the witness elements, copied as-is; every
other node copies one bag of J onto one inherited element and one fresh element.
The FD-aware variant copies tuple elements partially, by position sets, so that no
element ends up at an FD determiner of two different tuples.
"""

from __future__ import annotations

import itertools
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping

import networkx as nx

from .errors import ShredkitError
from .kb import FunctionalDependency, Interpretation, Signature
from .shredding import ELT, ShreddedSignature, position_role, tuple_marker

LINK = "Link"
DEFAULT_MAX_NODES = 50000


# --- preparation ----------------------------------------------------------------


def _pair_graph(interp: Interpretation, relations: Iterable[str], elements: Iterable[str]) -> nx.Graph:
    g = nx.Graph()
    g.add_nodes_from(sorted(elements))
    for r in sorted(relations):
        for t in sorted(interp.tuples(r)):
            if len(t) == 2 and t[0] != t[1] and t[0] in g and t[1] in g:
                g.add_edge(t[0], t[1])
    return g


def _link_name(sig: Signature) -> str:
    name = LINK
    while name in sig:
        name += "_"
    return name


def make_unravelable(interp: Interpretation, s2: ShreddedSignature | None = None) -> Interpretation:
    """Star of fresh link edges so every element sits in a guarded pair and bags are connected.

    With `s2`, only Elt elements are linked and only proper relations count, since a
    tuple element may not carry an ordinary binary edge under well-formedness.
    """
    sig = interp.signature
    binary = [r for r in sig.binary()]
    elements = interp.domain
    if s2 is not None:
        derived = set(s2.provenance)
        binary = [r for r in binary if r not in derived]
        elements = frozenset(t[0] for t in interp.tuples(ELT))
    g = _pair_graph(interp, binary, elements)
    comps = sorted((sorted(c) for c in nx.connected_components(g)), key=lambda c: c[0])
    if len(comps) <= 1 and all(g.degree(v) > 0 for v in g):
        return interp
    if len(comps) == 1:
        # a single isolated element: nothing to link it to
        return interp
    name = _link_name(sig)
    hub = comps[0][0]
    edges = frozenset((hub, c[0]) for c in comps[1:])
    new_sig = sig.extend({name: 2}, reserved=True)
    ext = dict(interp.extents)
    ext[name] = edges
    return Interpretation(new_sig, interp.domain, ext)


def is_unravelable(interp: Interpretation) -> bool:
    g = _pair_graph(interp, interp.signature.binary(), interp.domain)
    return nx.is_connected(g) and all(g.degree(v) > 0 for v in g) if len(g) > 1 else True


# --- bags -------------------------------------------------------------------------


def bag(interp: Interpretation, a: str, b: str) -> Interpretation:
    return interp.restrict((a, b))


def guarded_pairs(interp: Interpretation) -> list[tuple[str, str]]:
    pairs = set()
    for r, ts in interp.extents.items():
        for t in ts:
            for i, u in enumerate(t):
                for v in t[i + 1:]:
                    if u != v:
                        pairs.add((min(u, v), max(u, v)))
    return sorted(pairs)


def _check_witness(interp: Interpretation, witness: Mapping[str, str]) -> frozenset[str]:
    dom = frozenset(witness.values())
    if not dom <= interp.domain:
        raise ShredkitError("bad-witness", "witness maps outside the domain")
    return dom


@dataclass(frozen=True)
class BagGraph:
    fact_bag: frozenset[str]
    bags: tuple[tuple[str, str], ...]  # non-fact bags by domain
    graph: nx.Graph = field(compare=False)


def bag_graph(interp: Interpretation, witness: Mapping[str, str]) -> BagGraph:
    """Bags as nodes ("fact" for the merged fact bag); edges where domains share one element."""
    wdom = _check_witness(interp, witness)
    bags = tuple(p for p in guarded_pairs(interp) if not set(p) <= wdom)
    g = nx.Graph()
    g.add_node("fact")
    g.add_nodes_from(bags)
    by_elem: dict[str, list[tuple[str, str]]] = defaultdict(list)
    for p in bags:
        for e in p:
            by_elem[e].append(p)
    for e, ps in sorted(by_elem.items()):
        for p, q in itertools.combinations(ps, 2):
            g.add_edge(p, q)
        if e in wdom:
            for p in ps:
                g.add_edge("fact", p)
    return BagGraph(wdom, bags, g)


# --- bag trees ----------------------------------------------------------------------


@dataclass
class Node:
    id: int
    parent: int | None
    depth: int
    domain: tuple[str, ...]
    introduced: tuple[str, ...]
    tuples: dict[str, set[tuple[str, ...]]]
    image: tuple[str, ...] | None  # phi: the J-bag copied here (None for the root)
    virtual: bool = False


@dataclass
class BagTree:
    signature: Signature
    nodes: list[Node]
    pi: dict[str, str]
    witness: dict[str, str]
    depth: int
    introduced_at: dict[str, int] = field(default_factory=dict)  # element -> node id

    @property
    def root(self) -> Node:
        return self.nodes[0]

    def interpretation(self) -> Interpretation:
        ext: dict[str, set[tuple[str, ...]]] = defaultdict(set)
        dom: set[str] = set()
        for n in self.nodes:
            dom.update(n.domain)
            for r, ts in n.tuples.items():
                ext[r] |= ts
        return Interpretation(self.signature, frozenset(dom), {r: frozenset(ts) for r, ts in ext.items()})

    def interior(self) -> list[str]:
        """Elements whose node got its children (introduced strictly above the cut)."""
        return sorted(e for e, nid in self.introduced_at.items() if self.nodes[nid].depth < self.depth)

    def phi(self) -> dict[int, tuple[str, ...] | None]:
        return {n.id: n.image for n in self.nodes}

    def edges(self) -> list[tuple[int, int]]:
        return [(n.parent, n.id) for n in self.nodes if n.parent is not None]

    def to_json(self) -> dict[str, Any]:
        return {
            "depth": self.depth,
            "nodes": [
                {
                    "id": n.id,
                    "parent": n.parent,
                    "depth": n.depth,
                    "domain": list(n.domain),
                    "introduced": list(n.introduced),
                    "image": list(n.image) if n.image is not None else "fact",
                    "virtual": n.virtual,
                    "tuples": sorted(f"{r}({','.join(t)})" for r, ts in n.tuples.items() for t in ts),
                }
                for n in self.nodes
            ],
            "pi": dict(sorted(self.pi.items())),
        }


class _Builder:
    def __init__(self, interp: Interpretation, witness: Mapping[str, str], depth: int, max_nodes: int) -> None:
        self.j = interp
        self.witness = dict(witness)
        self.wdom = _check_witness(interp, witness)
        self.depth = depth
        self.max_nodes = max_nodes
        self.counter = 0
        self.tree = BagTree(interp.signature, [], {e: e for e in self.wdom}, self.witness, depth)
        self.nbrs: dict[str, set[str]] = defaultdict(set)
        for u, v in guarded_pairs(interp):
            self.nbrs[u].add(v)
            self.nbrs[v].add(u)
        self.unary: dict[str, list[str]] = defaultdict(list)
        for r in interp.signature.unary():
            for (e,) in sorted(interp.tuples(r)):
                self.unary[e].append(r)
        self.binary_at: dict[tuple[str, str], list[tuple[str, bool]]] = defaultdict(list)
        for r in interp.signature.binary():
            for u, v in sorted(interp.tuples(r)):
                self.binary_at[(u, v)].append((r, False))

    def fresh(self, image: str) -> str:
        self.counter += 1
        name = f"{image}'{self.counter}"
        self.tree.pi[name] = image
        return name

    def add_node(self, parent: Node | None, domain: tuple[str, ...], introduced: tuple[str, ...],
                 tuples: dict[str, set[tuple[str, ...]]], image: tuple[str, ...] | None, virtual: bool = False) -> Node:
        if len(self.tree.nodes) >= self.max_nodes:
            raise ShredkitError("cap-exceeded", f"unraveling exceeds {self.max_nodes} bags; lower --depth")
        node = Node(len(self.tree.nodes), parent.id if parent else None, parent.depth + 1 if parent else 0,
                    domain, introduced, tuples, image, virtual)
        self.tree.nodes.append(node)
        for e in introduced:
            self.tree.introduced_at[e] = node.id
        return node

    def root(self) -> Node:
        sub = self.j.restrict(self.wdom)
        tuples = {r: set(ts) for r, ts in sub.extents.items() if ts}
        return self.add_node(None, tuple(sorted(self.wdom)), tuple(sorted(self.wdom)), tuples, None)

    def copy_pair(self, a: str, a_img: str, c_img: str, keep: Iterable[str] | None = None) -> tuple[str, dict[str, set[tuple[str, ...]]]]:
        """Isomorphic copy of the J-bag {a_img, c_img} onto (a, fresh)."""
        c = self.fresh(c_img)
        m = {a_img: a, c_img: c}
        keep_set = None if keep is None else set(keep)
        tuples: dict[str, set[tuple[str, ...]]] = defaultdict(set)
        for r, ts in self.j.restrict((a_img, c_img)).extents.items():
            if keep_set is not None and r not in keep_set and self.j.signature.arity(r) == 2:
                continue
            for t in ts:
                tuples[r].add(tuple(m[e] for e in t))
        # unary facts of the inherited element already live in the parent bag
        return c, dict(tuples)


def unravel(
    interp: Interpretation, witness: Mapping[str, str], depth: int, max_nodes: int = DEFAULT_MAX_NODES
) -> BagTree:
    """Breadth-first faithful unraveling, cut after `depth` levels below the fact bag."""
    if depth < 0:
        raise ShredkitError("bad-budget", "depth must be >= 0")
    b = _Builder(interp, witness, depth, max_nodes)
    queue = [b.root()]
    while queue:
        node = queue.pop(0)
        if node.depth >= depth:
            continue
        for a in node.introduced:
            a_img = b.tree.pi[a]
            if node.parent is None:
                others = sorted(c for c in b.nbrs[a_img] if c not in b.wdom)
            else:
                (prev,) = [e for e in node.domain if e != a]
                others = sorted(c for c in b.nbrs[a_img] if c != b.tree.pi[prev])
            for c_img in others:
                c, tuples = b.copy_pair(a, a_img, c_img)
                queue.append(b.add_node(node, (a, c), (c,), tuples, (a_img, c_img)))
    return b.tree


# --- FD-aware unraveling ---------------------------------------------------------------


def _determiners(fds: Iterable[FunctionalDependency]) -> dict[str, set[frozenset[int]]]:
    out: dict[str, set[frozenset[int]]] = defaultdict(set)
    for fd in fds:
        out[fd.relation].add(frozenset(fd.determiner))
    return out


def _nonempty_subsets(positions: Iterable[int]) -> list[frozenset[int]]:
    ps = sorted(positions)
    out = []
    for k in range(1, len(ps) + 1):
        out.extend(frozenset(c) for c in itertools.combinations(ps, k))
    return out


def fd_aware_unravel(
    interp: Interpretation,
    witness: Mapping[str, str],
    fds: Iterable[FunctionalDependency],
    s2: ShreddedSignature,
    depth: int,
    max_nodes: int = DEFAULT_MAX_NODES,
) -> BagTree:
    """Unraveling that keeps every element at no more than one tuple per FD determiner.

    At an ordinary element, tuple elements adjacent in J are grouped by the position
    set P where the element occurs: P strictly containing a determiner is skipped, a
    determiner P gets one representative (only if not already realised), any other P
    gets one copy per realising tuple element; only the links at P are copied. At a
    tuple element, positions whose links were dropped come back through a virtual
    neighbour holding one fresh copy of the inherited element.
    """
    if depth < 0:
        raise ShredkitError("bad-budget", "depth must be >= 0")
    fds = list(fds)
    base = s2.base
    for fd in fds:
        if base.arity(fd.relation) <= 2:
            raise ShredkitError("bad-fd", f"FD {fd} is not on a higher-arity relation")
    dets = _determiners(fds)
    high = base.high()
    derived = set(s2.provenance)
    b = _Builder(interp, witness, depth, max_nodes)
    elt = frozenset(t[0] for t in interp.tuples(ELT))
    marker_of: dict[str, str] = {}
    for r in high:
        for (t,) in interp.tuples(tuple_marker(r)):
            marker_of[t] = r
    proper_rel = [r for r in interp.signature.binary() if r not in derived]
    proper_nbrs: dict[str, set[str]] = defaultdict(set)
    for r in proper_rel:
        for u, v in interp.tuples(r):
            if u != v:
                proper_nbrs[u].add(v)
                proper_nbrs[v].add(u)
    # positions: (t, a) -> {i : (t, a) in R.i}
    occ: dict[tuple[str, str], set[int]] = defaultdict(set)
    for r in high:
        for i in range(1, base.arity(r) + 1):
            for t, a in interp.tuples(position_role(r, i)):
                occ[(t, a)].add(i)
    tuples_at: dict[str, list[str]] = defaultdict(list)
    for (t, a) in sorted(occ):
        tuples_at[a].append(t)

    def unary_of(img: str, name: str) -> dict[str, set[tuple[str, ...]]]:
        return {r: {(name,)} for r in b.unary[img]}

    def link(r: str, t: str, a: str, positions: Iterable[int]) -> dict[str, set[tuple[str, ...]]]:
        return {position_role(r, i): {(t, a)} for i in positions}

    def merge(*parts: dict[str, set[tuple[str, ...]]]) -> dict[str, set[tuple[str, ...]]]:
        out: dict[str, set[tuple[str, ...]]] = defaultdict(set)
        for p in parts:
            for r, ts in p.items():
                out[r] |= ts
        return dict(out)

    def occurs_at(node: Node, a: str, r: str, p: frozenset[int]) -> bool:
        # a was introduced in `node`, so it only appears there and in node's children
        cand = [node] + [n for n in b.tree.nodes if n.parent == node.id]
        roles = [position_role(r, i) for i in sorted(p)]
        ts: set[str] | None = None
        for role in roles:
            here = {t for n in cand for (t, x) in n.tuples.get(role, ()) if x == a}
            ts = here if ts is None else ts & here
        return bool(ts)

    queue = [b.root()]
    while queue:
        node = queue.pop(0)
        if node.depth >= depth:
            continue
        for a in node.introduced:
            a_img = b.tree.pi[a]
            is_root = node.parent is None
            prev_img = None
            prev = None
            if not is_root:
                (prev,) = [e for e in node.domain if e != a]
                prev_img = b.tree.pi[prev]
            if a_img in elt:
                # proper neighbours: plain copies
                for c_img in sorted(proper_nbrs[a_img]):
                    if is_root and c_img in b.wdom:
                        continue
                    if not is_root and c_img == prev_img:
                        continue
                    c, tuples = b.copy_pair(a, a_img, c_img, keep=proper_rel)
                    queue.append(b.add_node(node, (a, c), (c,), tuples, (a_img, c_img)))
                # non-proper neighbours grouped by position sets
                cands = [t for t in tuples_at[a_img] if not (is_root and t in b.wdom)]
                for r in high:
                    r_tuples = [t for t in cands if marker_of.get(t) == r]
                    if not r_tuples:
                        continue
                    ds = dets.get(r, set())
                    all_p = sorted({p for t in r_tuples for p in _nonempty_subsets(occ[(t, a_img)])},
                                   key=lambda p: (len(p), sorted(p)))
                    for p in all_p:
                        if any(d < p for d in ds):
                            continue
                        realising = sorted(t for t in r_tuples if p <= occ[(t, a_img)])
                        if p in ds:
                            if occurs_at(node, a, r, p):
                                continue
                            realising = realising[:1]
                        for t_img in realising:
                            t = b.fresh(t_img)
                            tuples = merge(link(r, t, a, sorted(p)), unary_of(t_img, t))
                            queue.append(b.add_node(node, (a, t), (t,), tuples, (a_img, t_img)))
            else:
                r = marker_of.get(a_img)
                if r is None or is_root:
                    # tuple elements of the fact bag have all their links inside it
                    continue
                assert prev is not None and prev_img is not None
                have = {i for i in range(1, base.arity(r) + 1) if (a, prev) in node.tuples.get(position_role(r, i), ())}
                full = occ[(a_img, prev_img)]
                missing = sorted(full - have)
                for c_img in sorted({x for (t, x) in occ if t == a_img} - {prev_img}):
                    c = b.fresh(c_img)
                    tuples = merge(link(r, a, c, sorted(occ[(a_img, c_img)])), unary_of(c_img, c))
                    queue.append(b.add_node(node, (a, c), (c,), tuples, (a_img, c_img)))
                if missing:
                    c = b.fresh(prev_img)
                    tuples = merge(link(r, a, c, missing), unary_of(prev_img, c))
                    queue.append(b.add_node(node, (a, c), (c,), tuples, (a_img, prev_img), virtual=True))
    return b.tree


# --- safety checks ---------------------------------------------------------------------


@dataclass(frozen=True)
class SafetyReport:
    cycle_free: bool
    cycle: tuple[str, ...] | None
    fd_safe: bool
    fd_witness: dict[str, Any] | None

    @property
    def ok(self) -> bool:
        return self.cycle_free and self.fd_safe

    def to_json(self) -> dict[str, Any]:
        return {
            "cycle_free": self.cycle_free,
            "cycle": list(self.cycle) if self.cycle else None,
            "fd_safe": self.fd_safe,
            "fd_witness": self.fd_witness,
        }


def find_cycle_outside(interp: Interpretation, protected: Iterable[str]) -> tuple[str, ...] | None:
    """A Gaifman cycle through some element outside `protected`, if one exists."""
    from .kb import gaifman_graph

    keep = set(protected)
    g = gaifman_graph(interp)
    for block in sorted((sorted(b) for b in nx.biconnected_components(g)), key=lambda b: b[0]):
        if len(block) < 3:
            continue
        outside = [v for v in block if v not in keep]
        if not outside:
            continue
        v = outside[0]
        sub = g.subgraph(block).copy()
        u = sorted(sub.neighbors(v))[0]
        sub.remove_edge(v, u)
        path = nx.shortest_path(sub, u, v)
        return tuple(path)
    return None


def fd_safety_witness(
    interp: Interpretation, protected: Iterable[str], fds: Iterable[FunctionalDependency]
) -> dict[str, Any] | None:
    keep = set(protected)
    for rel, ds in sorted(_determiners(fds).items()):
        for d in sorted(ds, key=sorted):
            holders: dict[str, set[str]] | None = None
            for i in sorted(d):
                here: dict[str, set[str]] = defaultdict(set)
                for t, a in interp.tuples(position_role(rel, i)):
                    here[a].add(t)
                if holders is None:
                    holders = here
                else:
                    holders = {a: holders[a] & ts for a, ts in here.items() if a in holders}
            for a, ts in sorted((holders or {}).items()):
                if len(ts) > 1 and not ts <= keep:
                    return {"element": a, "relation": rel, "determiner": sorted(d), "tuples": sorted(ts)}
    return None


def check_safety(
    interp: Interpretation, witness: Mapping[str, str] | Iterable[str], fds: Iterable[FunctionalDependency] = ()
) -> SafetyReport:
    protected = set(witness.values()) if isinstance(witness, Mapping) else set(witness)
    cyc = find_cycle_outside(interp, protected)
    fdw = fd_safety_witness(interp, protected, fds) if fds else None
    return SafetyReport(cyc is None, cyc, fdw is None, fdw)


def pi_is_homomorphism(tree: BagTree, interp: Interpretation) -> bool:
    t = tree.interpretation()
    for r, ts in t.extents.items():
        target = interp.tuples(r)
        for tup in ts:
            if tuple(tree.pi[e] for e in tup) not in target:
                return False
    return True


def successor_profile(interp: Interpretation, element: str, relations: Iterable[str]) -> dict[tuple[str, bool], int]:
    out = {}
    for r in relations:
        ts = interp.tuples(r)
        out[(r, False)] = sum(1 for u, _ in ts if u == element)
        out[(r, True)] = sum(1 for _, v in ts if v == element)
    return out


def interior_count_mismatches(tree: BagTree, interp: Interpretation, relations: Iterable[str]) -> list[str]:
    """Interior elements whose per-role successor counts differ from their image's."""
    t = tree.interpretation()
    rels = list(relations)
    bad = []
    for e in tree.interior():
        if successor_profile(t, e, rels) != successor_profile(interp, tree.pi[e], rels):
            bad.append(e)
    return bad
