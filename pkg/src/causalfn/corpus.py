"""Golden-corpus runner: models paired with plain-text expectation sidecars.

Each ``<name>.cm`` ships with ``<name>.expect`` holding one expectation per
line, reviewable without running the tool.  Supported expectations::

    check ok
    classify <src> -> <tgt> = Tag[+Tag...]|none      exact tag set
    chain <name> = <s> -> <t> : Tag [; ...]          valid chain, tags derivable
    overall <name> = Tag                             last link of that chain
    necessary <name> = true|false
    explain-spine <occ> = Tag:<id> [Tag:<id> ...]    descent present in the tree
    devices-root <device-id>                         tree from the root link
    devices-subsystems <behavior> ...                root children, sorted
    devices-leaves <kind>:<n> [...]                  leaf kind counts
    devices-depth <n> | devices-count <n>
    simulate horizon <n>                             run + clean verification
    param <id> constant|increasing|decreasing        strict trend over the trace
    equations-exact true
    simultaneous <p1> <p2>                           equal activity every tick
    activates <occ> <tick> | last-flip <occ> <pc>[,<pc>...]
    completes <event> <tick> | state-onset <state> <tick>
    reduce <s1> -> <s2> = <p1> -> <p2> via <event>
    links-edges <n>
"""

from __future__ import annotations

import pathlib
from dataclasses import dataclass, field
from importlib import resources
from typing import Optional

from . import calculus, devices, dsl, explain as explain_mod, sim
from .core import Model, DIRECT


def shipped_corpus_dir() -> pathlib.Path:
    return pathlib.Path(resources.files("causalfn") / "corpus")


@dataclass
class ExpectationResult:
    model: str
    description: str
    passed: bool
    detail: str = ""


@dataclass
class CorpusReport:
    results: list[ExpectationResult] = field(default_factory=list)
    model_names: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def models_passed(self) -> int:
        return sum(1 for name in self.model_names
                   if all(r.passed for r in self.results if r.model == name))

    @property
    def all_passed(self) -> bool:
        return all(r.passed for r in self.results)

    def table(self) -> str:
        lines = []
        for r in self.results:
            status = "PASS" if r.passed else "FAIL"
            lines.append(f"{r.model:<22} {r.description:<58} {status}")
            if not r.passed and r.detail:
                lines.append(f"{'':<22}   {r.detail}")
        lines.append(
            f"corpus: {self.models_passed}/{len(self.model_names)} models passed "
            f"({sum(1 for r in self.results if r.passed)}/{len(self.results)} "
            "expectations)")
        return "\n".join(lines) + "\n"


def run_corpus(directory) -> CorpusReport:
    directory = pathlib.Path(directory)
    report = CorpusReport()
    model_files = sorted(directory.glob("*.cm"))
    if not model_files:
        report.warnings.append(f"no .cm models found in {directory}")
        return report
    for path in model_files:
        name = path.name
        report.model_names.append(name)
        expect_path = path.with_suffix(".expect")
        if not expect_path.exists():
            report.results.append(ExpectationResult(
                name, "expectation sidecar present", False,
                f"missing {expect_path.name}"))
            continue
        _run_model(report, name, path, expect_path)
    return report


def _run_model(report: CorpusReport, name: str, path, expect_path) -> None:
    parsed = dsl.parse_file(path)
    trace: Optional[sim.Trace] = None
    expectations = _read_expectations(expect_path)

    # pre-run the simulation if any trace expectation needs it
    horizon = None
    for fields in expectations:
        if fields[0] == "simulate" and len(fields) == 3:
            horizon = int(fields[2])
    if parsed.ok and horizon is not None:
        trace = sim.run(parsed.model, horizon)

    chains: dict[str, list] = {}
    for fields in expectations:
        description = " ".join(fields)
        try:
            passed, detail = _evaluate(fields, parsed, trace, chains)
        except Exception as exc:  # an expectation must never crash the table
            passed, detail = False, f"{type(exc).__name__}: {exc}"
        report.results.append(ExpectationResult(name, description, passed, detail))


def _read_expectations(path) -> list[list[str]]:
    out = []
    for raw in pathlib.Path(path).read_text(encoding="utf-8").splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            out.append(line.split())
    return out


def _split_on(fields: list[str], sep: str) -> list[list[str]]:
    groups: list[list[str]] = [[]]
    for tok in fields:
        if tok == sep:
            groups.append([])
        else:
            groups[-1].append(tok)
    return groups


def _evaluate(fields: list[str], parsed: dsl.ParseResult,
              trace: Optional[sim.Trace],
              chains: dict[str, list]) -> tuple[bool, str]:
    kind = fields[0]
    if kind == "check":
        if parsed.ok:
            return True, ""
        issues = "; ".join(d.format() for d in parsed.diagnostics
                           if d.severity == "error")
        return False, issues
    if not parsed.ok:
        return False, "model failed to parse"
    model = parsed.model

    if kind == "classify":
        # classify <src> -> <tgt> = tags
        src, _, tgt, _, want = fields[1], fields[2], fields[3], fields[4], fields[5]
        derivs = calculus.classify_link(model, src, tgt)
        got = sorted(calculus.subfunctions_of(derivs))
        wanted = [] if want == "none" else sorted(want.split("+"))
        return got == wanted, f"derived {'+'.join(got) or 'none'}"

    if kind == "chain":
        links, detail = _build_chain(model, fields)
        if links is None:
            return False, detail
        chains[fields[1]] = links
        chain_report = calculus.validate_chain(model, links)
        if not chain_report.valid:
            notes = "; ".join(n for lr in chain_report.links for n in lr.notes)
            return False, f"chain invalid: {notes}"
        return True, ""

    if kind == "overall":
        if fields[1] not in chains:
            return False, f"chain {fields[1]!r} was not built before this line"
        got = chains[fields[1]][-1].subfunction
        return got == fields[3], f"last link is {got}"

    if kind == "necessary":
        if fields[1] not in chains:
            return False, f"chain {fields[1]!r} was not built before this line"
        chain_report = calculus.validate_chain(model, chains[fields[1]])
        want = fields[3] == "true"
        return chain_report.necessary == want, \
            f"necessary={str(chain_report.necessary).lower()}"

    if kind == "explain-spine":
        occ = fields[1]
        spine = []
        for item in fields[3:]:
            tag, _, subject = item.partition(":")
            spine.append((tag, subject))
        tree = explain_mod.explain(model, occ)
        ok = explain_mod.contains_spine(tree, spine)
        return ok, "" if ok else "spine not found in explanation tree"

    if kind.startswith("devices-"):
        tree, detail = _device_tree(model)
        if tree is None:
            return False, detail
        if kind == "devices-root":
            return tree.root.id == fields[1], f"root {tree.root.id}"
        if kind == "devices-subsystems":
            got = sorted(child.behavior for child in tree.root.sub_devices)
            return got == sorted(fields[1:]), f"subsystems {' '.join(got)}"
        if kind == "devices-leaves":
            counts: dict[str, int] = {}
            for leaf in tree.leaves:
                counts[leaf.kind] = counts.get(leaf.kind, 0) + 1
            want = {}
            for item in fields[1:]:
                leaf_kind, _, n = item.rpartition(":")
                want[leaf_kind] = int(n)
            return counts == want, \
                " ".join(f"{k}:{v}" for k, v in sorted(counts.items()))
        if kind == "devices-depth":
            return tree.depth() == int(fields[1]), f"depth {tree.depth()}"
        if kind == "devices-count":
            return tree.device_count() == int(fields[1]), \
                f"count {tree.device_count()}"

    if kind == "simulate":
        if trace is None:
            return False, "no trace (parse failed?)"
        verification = sim.verify_trace(model, trace)
        if not verification.clean:
            first = verification.violations[0]
            return False, f"{first.kind} violation at tick {first.tick}"
        return True, ""

    if kind in ("param", "equations-exact", "simultaneous", "activates",
                "last-flip", "completes", "state-onset"):
        if trace is None:
            return False, "needs a prior 'simulate horizon' line"

    if kind == "param":
        series = trace.series(fields[1])
        trend = fields[2]
        pairs = list(zip(series, series[1:]))
        checks = {
            "constant": all(a == b for a, b in pairs),
            "increasing": all(a < b for a, b in pairs),
            "decreasing": all(a > b for a, b in pairs),
        }
        return checks[trend], f"series {[str(v) for v in series]}"

    if kind == "equations-exact":
        bad = [v for v in sim.verify_trace(model, trace).violations
               if v.kind == "equation"]
        return not bad, bad[0].message if bad else ""

    if kind == "simultaneous":
        p1, p2 = fields[1], fields[2]
        for snap in trace.snapshots:
            if (p1 in snap.active) != (p2 in snap.active):
                return False, f"diverge at tick {snap.tick}"
        return True, ""

    if kind == "activates":
        act = trace.activation_of(fields[1])
        if act is None:
            return False, "never activated"
        return act.tick == int(fields[2]), f"activated at {act.tick}"

    if kind == "last-flip":
        act = trace.activation_of(fields[1])
        if act is None:
            return False, "never activated"
        want = tuple(sorted(fields[2].split(",")))
        return act.last_flips == want, f"last flips {','.join(act.last_flips)}"

    if kind == "completes":
        for completion in trace.completions:
            if completion.event == fields[1]:
                return completion.tick == int(fields[2]), \
                    f"completed at {completion.tick}"
        return False, "never completed"

    if kind == "state-onset":
        onset = trace.first_holding_tick(fields[1])
        return onset == int(fields[2]), f"first holds at {onset}"

    if kind == "reduce":
        # reduce <s1> -> <s2> = <p1> -> <p2> via <event>
        s1, s2 = fields[1], fields[3]
        p1, p2, event = fields[5], fields[7], fields[9]
        reduction = calculus.reduce_state_state(model, s1, s2)
        got = (reduction.process_link.source, reduction.process_link.target,
               reduction.completion_event)
        return got == (p1, p2, event), \
            f"reduced to {got[0]} -> {got[1]} via {got[2]}"

    if kind == "links-edges":
        return len(model.asserted_links) == int(fields[1]), \
            f"{len(model.asserted_links)} asserted links"

    return False, f"unknown expectation {kind!r}"


def _build_chain(model: Model, fields: list[str]):
    """chain <name> = s -> t : Tag ; ...  ->  list of classified CausalLinks,
    requiring each stated tag to actually derive."""
    try:
        eq = fields.index("=")
    except ValueError:
        return None, "malformed chain expectation"
    links = []
    for group in _split_on(fields[eq + 1:], ";"):
        if len(group) != 5 or group[1] != "->" or group[3] != ":":
            return None, f"malformed chain link {' '.join(group)!r}"
        src, tgt, tag = group[0], group[2], group[4]
        derivs = calculus.classify_link(model, src, tgt)
        match = [d for d in derivs if d.conclusion.subfunction == tag]
        if not match:
            got = "+".join(sorted(calculus.subfunctions_of(derivs))) or "none"
            return None, f"{tag} not derivable for {src} -> {tgt} (got {got})"
        links.append(match[0].conclusion)
    return links, ""


def root_links(model: Model) -> list[calculus.CausalLink]:
    """Device-tree roots: asserted direct links whose source is refined."""
    out = []
    for link in model.asserted_links:
        if link.directness == DIRECT and link.source in model.refinements:
            out.append(calculus.CausalLink(link.source, link.target,
                                           calculus.ACHIEVES, DIRECT))
    return out


def _device_tree(model: Model):
    roots = root_links(model)
    if not roots:
        return None, "no asserted direct link with a refined source"
    device = devices.identify_device(model, roots[0])
    return devices.decompose(model, device), ""
