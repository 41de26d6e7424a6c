"""shredkit command line: batch, deterministic, file in / files out."""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

from . import gc2
from .analysis import classify_rule
from .errors import ShredkitError
from .fds import DEFAULT_MAX_FACT_VARS, compile_with_fds, decide_compiled
from .gadgets import (
    EntailmentInstance,
    TilingSystem,
    encode_tiling,
    entailment_to_qa,
    lift_ufds,
    remove_uids,
    restricted_entailment_to_fr1,
    s2t_variant,
)
from .kb import (
    Interpretation,
    KnowledgeBase,
    interpretation_to_kb,
    parse_kb,
    satisfies,
    serialize_kb,
)
from .oracle import DEFAULT_DEPTH, DEFAULT_MAX_SIZE, Problem, decide
from .shredding import (
    shred_fact,
    shred_interpretation,
    shred_query,
    shred_rule_as_rule,
    shred_signature,
    wellformedness_constraints,
)
from .treeify import DEFAULT_MAX_RULES, add_fact_markers, compile_instance, treeify_rule
from .unravel import check_safety, fd_aware_unravel, make_unravelable, unravel


@dataclass
class RunConfig:
    command: str
    inputs: list[str]
    out: Path | None = None
    json: bool = False
    seed: int = 0
    jobs: int = 1
    max_rules: int = DEFAULT_MAX_RULES
    max_fact_vars: int = DEFAULT_MAX_FACT_VARS
    max_size: int = DEFAULT_MAX_SIZE
    depth: int = DEFAULT_DEPTH
    options: dict[str, Any] = field(default_factory=dict)


class Output:
    """Collects named artifacts; writes them under -o DIR or prints them."""

    def __init__(self, cfg: RunConfig) -> None:
        self.cfg = cfg
        self.files: dict[str, str] = {}

    def add(self, name: str, text: str) -> None:
        self.files[name] = text if text.endswith("\n") else text + "\n"

    def add_json(self, name: str, obj: Any) -> None:
        self.add(name, dumps(obj))

    def flush(self, stdout_name: str | None = None) -> None:
        if self.cfg.out is not None:
            self.cfg.out.mkdir(parents=True, exist_ok=True)
            for name, text in sorted(self.files.items()):
                path = self.cfg.out / name
                path.parent.mkdir(parents=True, exist_ok=True)
                path.write_text(text, encoding="utf-8")
            return
        names = [stdout_name] if stdout_name in self.files else sorted(self.files)
        for name in names:
            if len(names) > 1:
                sys.stdout.write(f"# --- {name}\n")
            sys.stdout.write(self.files[name])


def dumps(obj: Any) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def read_text(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ShredkitError("io", f"cannot read {path}: {e.strerror}") from None


def load_kb(path: str) -> KnowledgeBase:
    try:
        return parse_kb(read_text(path))
    except ShredkitError as e:
        e.detail.setdefault("file", path)
        raise


# --- subcommands ---------------------------------------------------------------


def cmd_classify(cfg: RunConfig, out: Output) -> None:
    kb = load_kb(cfg.inputs[0])
    rows = []
    for r in kb.rules:
        cls = classify_rule(r, kb.signature)
        rows.append({"rule": r.name, "source": str(r), **cls.to_json()})
    if cfg.json:
        out.add_json("classify.json", rows)
        return
    lines = []
    for row, r in zip(rows, kb.rules):
        flags = ",".join(classify_rule(r, kb.signature).flags()) or "-"
        line = f"{row['rule']}: {flags}"
        cyc = row.get("head_cycle") or row.get("body_cycle")
        if cyc:
            line += f" cycle={' '.join(cyc)}"
        lines.append(line)
    out.add("classify.txt", "\n".join(lines))


def cmd_shred(cfg: RunConfig, out: Output) -> None:
    kb = load_kb(cfg.inputs[0])
    sig = kb.signature
    s2 = shred_signature(sig)
    fds = tuple(fd for fd in kb.fds if sig.arity(fd.relation) <= 2)
    dropped = [str(fd) for fd in kb.fds if sig.arity(fd.relation) > 2]
    shredded = KnowledgeBase(
        s2.signature,
        shred_fact(kb.fact, sig) if kb.fact else None,
        tuple(shred_rule_as_rule(r, sig) for r in kb.rules),
        fds,
        tuple(kb.constraints) + tuple(wellformedness_constraints(s2)),
        shred_query(kb.query, sig) if kb.query else None,
    )
    out.add("shredded.kb", serialize_kb(shredded))
    out.add_json("report.json", {"higher_arity_fds_not_shredded": dropped, "wf_constraints": len(wellformedness_constraints(s2))})


def cmd_treeify(cfg: RunConfig, out: Output) -> None:
    kb = load_kb(cfg.inputs[0])
    if kb.fact is None:
        raise ShredkitError("empty-fact", "treeify needs a fact")
    marked, sig2 = add_fact_markers(kb.fact, kb.signature)
    rules = []
    per_rule = []
    for r in kb.rules:
        produced = treeify_rule(r, kb.fact, kb.signature, cfg.max_rules)
        rules.extend(produced)
        per_rule.append({"rule": r.name, "source": str(r), "fnl_rules": len(produced)})
    res = KnowledgeBase(sig2, marked.fact, tuple(rules), kb.fds, kb.constraints, kb.query)
    out.add("treeified.kb", serialize_kb(res))
    out.add_json("report.json", {"rules": per_rule, "total": len(rules)})


def _write_instance(out: Output, prefix: str, inst: Any) -> None:
    out.add(prefix + "instance.kb", serialize_kb(inst.to_kb(with_constraints=False)))
    out.add(prefix + "constraints.gc2", "\n".join(gc2.to_sexpr(c) for c in inst.constraints))


def cmd_compile(cfg: RunConfig, out: Output) -> None:
    kb = load_kb(cfg.inputs[0])
    if kb.fds:
        raise ShredkitError("has-fds", "the KB declares FDs; use compile-fd")
    inst = compile_instance(kb.fact, kb.constraints, kb.rules, kb.query, kb.signature, cfg.max_rules)
    _write_instance(out, "", inst)
    out.add_json("report.json", inst.report)


def cmd_compile_fd(cfg: RunConfig, out: Output) -> None:
    kb = load_kb(cfg.inputs[0])
    comp = compile_with_fds(kb.fact, kb.constraints, kb.rules, kb.fds, kb.query, kb.signature, cfg.max_rules, cfg.max_fact_vars)
    report = dict(comp.report)
    k = 0
    entries = []
    for o in comp.outcomes:
        entry: dict[str, Any] = {"pattern": o.pattern.encode(), "retained": o.retained}
        if o.instance is not None:
            k += 1
            prefix = f"pattern{k:03d}/"
            _write_instance(out, prefix, o.instance)
            entry["instance"] = prefix + "instance.kb"
            entry["constraints"] = prefix + "constraints.gc2"
        entries.append(entry)
    report["patterns"] = entries
    if cfg.options.get("decide"):
        report["verdict"] = decide_compiled(comp, depth=cfg.depth, max_size=cfg.max_size).to_json()
    out.add_json("report.json", report)


def cmd_oracle(cfg: RunConfig, out: Output) -> None:
    kb = load_kb(cfg.inputs[0])
    v = decide(Problem.from_kb(kb), depth=cfg.depth, max_size=cfg.max_size)
    out.add_json("verdict.json", v.to_json())
    if v.model is not None:
        out.add("countermodel.kb", serialize_kb(interpretation_to_kb(v.model)))
    if not cfg.json and cfg.out is None:
        out.files = {"verdict.txt": v.kind + "\n", **out.files}


def _witness(interp: Interpretation, spec: str | None) -> dict[str, str]:
    if not spec:
        return {min(interp.domain): min(interp.domain)} if interp.domain else {}
    elems = [e.strip() for e in spec.split(",") if e.strip()]
    bad = [e for e in elems if e not in interp.domain]
    if bad:
        raise ShredkitError("bad-witness", f"witness elements {bad} are not in the interpretation")
    return {e: e for e in elems}


def cmd_unravel(cfg: RunConfig, out: Output) -> None:
    kb = load_kb(cfg.inputs[0])
    interp = kb.to_interpretation()
    witness = _witness(interp, cfg.options.get("witness"))
    if cfg.options.get("fd_aware"):
        s2 = shred_signature(kb.signature)
        j = shred_interpretation(interp, s2)
        wdom = set(witness)
        # tuple elements whose whole tuple lies in the witness belong to it too
        from .shredding import _encoded_tuples

        for rel in kb.signature.high():
            for t, tup in _encoded_tuples(j, s2, rel).items():
                if set(tup) <= wdom:
                    wdom.add(t)
        w = {e: e for e in sorted(wdom)}
        j = make_unravelable(j, s2)
        tree = fd_aware_unravel(j, w, kb.fds, s2, cfg.depth)
        fds = [fd for fd in kb.fds if kb.signature.arity(fd.relation) > 2]
    else:
        j = make_unravelable(interp)
        w = witness
        tree = unravel(j, w, cfg.depth)
        fds = []
    t_interp = tree.interpretation()
    out.add("tree.kb", serialize_kb(interpretation_to_kb(t_interp)))
    out.add_json("safety.json", check_safety(t_interp, w, fds).to_json())
    if cfg.options.get("report"):
        out.add_json("bagtree.json", tree.to_json())


def _entailment_instance(cfg: RunConfig) -> EntailmentInstance:
    kb = load_kb(cfg.inputs[0])
    if not kb.rules:
        raise ShredkitError("no-goal", "the KB needs at least one rule (the goal)")
    g = cfg.options.get("goal") or len(kb.rules)
    if not 1 <= g <= len(kb.rules):
        raise ShredkitError("no-goal", f"--goal {g} is out of range 1..{len(kb.rules)}")
    goal = kb.rules[g - 1]
    rest = tuple(r for i, r in enumerate(kb.rules) if i != g - 1)
    return EntailmentInstance(kb.signature, rest, kb.fds, kb.constraints, goal)


def _write_entailment(out: Output, name: str, inst: EntailmentInstance) -> None:
    out.add(name, inst.to_text())
    if inst.goal is not None:
        out.add("goal.kb", serialize_kb(KnowledgeBase(inst.signature, rules=(inst.goal,))))


def cmd_gadget(cfg: RunConfig, out: Output) -> None:
    kind = cfg.options["gadget"]
    if kind == "tiling":
        enc = encode_tiling(TilingSystem.from_toml(read_text(cfg.inputs[0])))
        out.add("tiling.kb", serialize_kb(enc.to_kb()))
        return
    if kind == "s2t":
        kb = load_kb(cfg.inputs[0])
        if len(kb.rules) != 1:
            raise ShredkitError("shape-mismatch", "s2t expects exactly one rule")
        v = s2t_variant(kb.rules[0], kb.signature)
        res = KnowledgeBase(v.signature, kb.fact, (v.rule,), kb.fds, tuple(kb.constraints) + (v.inclusion,), kb.query)
        out.add("s2t.kb", serialize_kb(res))
        out.add_json("report.json", {
            "source": list(v.source), "target": list(v.target),
            "classification": classify_rule(v.rule, v.signature, v.split).to_json(),
        })
        return
    inst = _entailment_instance(cfg)
    if kind == "entailment":
        out.add("qa.kb", serialize_kb(entailment_to_qa(inst.premises, inst.goal, inst.signature)))
    elif kind == "lift":
        _write_entailment(out, "lifted.kb", lift_ufds(inst))
    elif kind == "rm-uid":
        res = remove_uids(inst)
        _write_entailment(out, "widened.kb", res)
        out.add_json("report.json", res.report)
    elif kind == "fr1":
        red = restricted_entailment_to_fr1(inst)
        _write_entailment(out, "fr1.kb", red.instance)
        out.add_json("report.json", {
            **red.instance.report,
            "rules": [{"source": str(inc), "first": str(d1), "second": str(d2)} for inc, d1, d2 in red.translated],
        })


def cmd_eval(cfg: RunConfig, out: Output) -> None:
    model = load_kb(cfg.inputs[0])
    kb = load_kb(cfg.inputs[1])
    sig = model.signature.union(kb.signature)
    base = model.to_interpretation()
    interp = Interpretation(sig, base.domain, dict(base.extents))
    rows = []
    items: list[tuple[str, Any]] = []
    if kb.fact is not None:
        items.append(("fact", kb.fact))
    items += [(f"rule {r.name}", r) for r in kb.rules]
    items += [(f"fd {fd}", fd) for fd in kb.fds]
    items += [(f"dl {gc2.to_sexpr(c)}", c) for c in kb.constraints]
    if kb.query is not None:
        items.append(("cq", kb.query))
    for label, item in items:
        rows.append({"item": label, "holds": satisfies(interp, item)})
    res = {"all_hold": all(r["holds"] for r in rows), "items": rows}
    out.add_json("eval.json", res)


COMMANDS: dict[str, Callable[[RunConfig, Output], None]] = {
    "classify": cmd_classify,
    "shred": cmd_shred,
    "treeify": cmd_treeify,
    "compile": cmd_compile,
    "compile-fd": cmd_compile_fd,
    "oracle": cmd_oracle,
    "unravel": cmd_unravel,
    "gadget": cmd_gadget,
    "eval": cmd_eval,
}

PRIMARY_OUTPUT = {
    "classify": "classify.txt",
    "shred": "shredded.kb",
    "treeify": "treeified.kb",
    "compile": "instance.kb",
    "oracle": "verdict.txt",
    "unravel": "tree.kb",
    "eval": "eval.json",
}

PRIMARY_JSON = {
    "classify": "classify.json",
    "shred": "report.json",
    "treeify": "report.json",
    "compile": "report.json",
    "compile-fd": "report.json",
    "oracle": "verdict.json",
    "unravel": "safety.json",
    "eval": "eval.json",
}


# --- argument parsing ----------------------------------------------------------------


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def _nonneg(text: str) -> int:
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError("must be >= 0")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-o", "--out", type=Path, help="output directory (default: print to stdout)")
    common.add_argument("--json", action="store_true", help="machine-readable output")
    common.add_argument("--seed", type=int, default=0, help="seed (all stages are deterministic; recorded only)")
    common.add_argument("--jobs", type=_positive, default=1, help="worker count (stages currently run sequentially)")

    p = argparse.ArgumentParser(prog="shredkit", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("classify", parents=[common], help="rule classes and Berge cycles")
    s.add_argument("kb")
    s = sub.add_parser("shred", parents=[common], help="reify higher-arity relations")
    s.add_argument("kb")
    for name, hlp in (("treeify", "rewrite head-non-looping rules for the KB's fact"),
                      ("compile", "compile to an arity-two instance")):
        s = sub.add_parser(name, parents=[common], help=hlp)
        s.add_argument("kb")
        s.add_argument("--max-rules", type=_positive, default=DEFAULT_MAX_RULES)
    s = sub.add_parser("compile-fd", parents=[common], help="compile with functional dependencies")
    s.add_argument("kb")
    s.add_argument("--max-rules", type=_positive, default=DEFAULT_MAX_RULES)
    s.add_argument("--max-fact-vars", type=_positive, default=DEFAULT_MAX_FACT_VARS)
    s.add_argument("--decide", action="store_true", help="also run the oracle on every retained pattern")
    s.add_argument("--max-size", type=_positive, default=DEFAULT_MAX_SIZE)
    s.add_argument("--depth", type=_nonneg, default=DEFAULT_DEPTH)
    s = sub.add_parser("oracle", parents=[common], help="bounded entailment check")
    s.add_argument("kb")
    s.add_argument("--max-size", type=_positive, default=DEFAULT_MAX_SIZE)
    s.add_argument("--depth", type=_nonneg, default=DEFAULT_DEPTH)
    s = sub.add_parser("unravel", parents=[common], help="bag-tree unraveling and safety report")
    s.add_argument("kb", help="interpretation file (KB syntax; fd lines used with --fd-aware)")
    s.add_argument("--depth", type=_nonneg, default=3)
    s.add_argument("--witness", help="comma-separated witness elements (default: least element)")
    s.add_argument("--fd-aware", action="store_true")
    s.add_argument("--report", action="store_true", help="also write the bag tree as JSON")
    s = sub.add_parser("gadget", parents=[common], help="reduction encoders")
    s.add_argument("gadget", choices=["tiling", "entailment", "lift", "rm-uid", "fr1", "s2t"])
    s.add_argument("input", help="TOML tiling system for `tiling`, a KB file otherwise")
    s.add_argument("--goal", type=_positive, help="1-based index of the goal rule (default: last rule)")
    s = sub.add_parser("eval", parents=[common], help="check a KB's items on an interpretation")
    s.add_argument("model")
    s.add_argument("kb")
    return p


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    inputs = {
        "gadget": [ns.input] if ns.command == "gadget" else [],
        "eval": [getattr(ns, "model", ""), getattr(ns, "kb", "")],
    }.get(ns.command, [getattr(ns, "kb", "")])
    opts = {k: getattr(ns, k) for k in ("witness", "fd_aware", "report", "gadget", "goal", "decide") if hasattr(ns, k)}
    return RunConfig(
        ns.command, inputs, ns.out, ns.json, ns.seed, ns.jobs,
        getattr(ns, "max_rules", DEFAULT_MAX_RULES), getattr(ns, "max_fact_vars", DEFAULT_MAX_FACT_VARS),
        getattr(ns, "max_size", DEFAULT_MAX_SIZE), getattr(ns, "depth", DEFAULT_DEPTH), opts,
    )


def run(cfg: RunConfig) -> int:
    out = Output(cfg)
    try:
        COMMANDS[cfg.command](cfg, out)
    except ShredkitError as e:
        sys.stderr.write(dumps(e.to_json()))
        return 1
    out.flush((PRIMARY_JSON if cfg.json else PRIMARY_OUTPUT).get(cfg.command))
    return 0


def main(argv: list[str] | None = None) -> int:
    ns = build_parser().parse_args(argv)
    return run(config_from_args(ns))


if __name__ == "__main__":
    sys.exit(main())
