"""Command-line front end.

Subcommands: check, classify, explain, simulate, export, corpus.
Exit codes: 0 success, 1 analysis failure, 2 usage or I/O trouble.
"""

from __future__ import annotations

import argparse
import json
import pathlib
import sys

from . import calculus, corpus as corpus_mod, devices, dsl, explain as explain_mod, sim
from .core import Diagnostic, Model, UnknownIdError, ERROR

EXIT_OK = 0
EXIT_ANALYSIS = 1
EXIT_USAGE = 2


def _load(path: str, err) -> dsl.ParseResult | None:
    p = pathlib.Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        print(f"cannot read {path}: {exc}", file=err)
        return None
    return dsl.parse(text, filename=str(p))


def _print_diagnostics(diags: list[Diagnostic], err) -> None:
    for d in diags:
        print(d.format(), file=err)


def cmd_check(args, out, err) -> int:
    parsed = _load(args.model, err)
    if parsed is None:
        return EXIT_USAGE
    _print_diagnostics(parsed.diagnostics, err)
    if not parsed.ok:
        return EXIT_ANALYSIS
    model = parsed.model
    counts = (f"{len(model.states)} states, {len(model.processes)} processes, "
              f"{len(model.events)} events, {len(model.maintains)} maintains")
    print(f"{args.model}: ok ({counts})", file=out)
    return EXIT_OK


def cmd_classify(args, out, err) -> int:
    parsed = _load(args.model, err)
    if parsed is None:
        return EXIT_USAGE
    if not parsed.ok:
        _print_diagnostics(parsed.diagnostics, err)
        return EXIT_ANALYSIS
    model = parsed.model
    try:
        derivations = calculus.classify_link(model, args.source, args.target,
                                             args.context)
    except UnknownIdError as exc:
        print(str(exc), file=err)
        return EXIT_ANALYSIS
    if args.format == "json":
        print(json.dumps([d.to_json() for d in derivations],
                         sort_keys=True, indent=2), file=out)
        return EXIT_OK
    if not derivations:
        print(f"{args.source} -> {args.target}: no causal link derivable",
              file=out)
        return EXIT_OK
    for d in derivations:
        link = d.conclusion
        witnesses = ", ".join(f"{k}={v}" for k, v in d.witnesses)
        print(f"{link.subfunction} ({link.directness}"
              + (f", {link.pattern}" if link.pattern else "")
              + f") [{d.rule}] {witnesses}", file=out)
    return EXIT_OK


def cmd_explain(args, out, err) -> int:
    parsed = _load(args.model, err)
    if parsed is None:
        return EXIT_USAGE
    if not parsed.ok:
        _print_diagnostics(parsed.diagnostics, err)
        return EXIT_ANALYSIS
    try:
        tree = explain_mod.explain(parsed.model, args.occurrent,
                                   max_depth=args.max_depth)
    except UnknownIdError as exc:
        print(str(exc), file=err)
        return EXIT_ANALYSIS
    if args.format == "json":
        print(json.dumps(explain_mod.to_json(tree), sort_keys=True, indent=2),
              file=out)
    else:
        print(explain_mod.to_text(tree), file=out)
    return EXIT_OK


def cmd_simulate(args, out, err) -> int:
    parsed = _load(args.model, err)
    if parsed is None:
        return EXIT_USAGE
    if not parsed.ok:
        _print_diagnostics(parsed.diagnostics, err)
        return EXIT_ANALYSIS
    model = parsed.model
    try:
        trace = sim.run(model, args.horizon)
    except sim.CausalModelError as exc:
        print(f"simulation failed: {exc}", file=err)
        return EXIT_ANALYSIS
    out_dir = pathlib.Path(args.out) if args.out else pathlib.Path(".")
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        stem = pathlib.Path(args.model).stem
        ldjson_path = out_dir / f"{stem}.trace.ldjson"
        csv_path = out_dir / f"{stem}.trace.csv"
        ldjson_path.write_text(sim.to_ldjson(trace), encoding="utf-8")
        csv_path.write_text(sim.to_csv(trace), encoding="utf-8")
    except OSError as exc:
        print(f"cannot write trace: {exc}", file=err)
        return EXIT_USAGE
    report = sim.verify_trace(model, trace)
    print(f"simulated {args.model} to tick {args.horizon}; wrote "
          f"{ldjson_path} and {csv_path}", file=out)
    if not report.clean:
        for v in report.violations:
            print(f"verification: {v.kind} at tick {v.tick}: {v.message}",
                  file=err)
        return EXIT_ANALYSIS
    print("verification clean", file=out)
    return EXIT_OK


def cmd_export(args, out, err) -> int:
    parsed = _load(args.model, err)
    if parsed is None:
        return EXIT_USAGE
    if not parsed.ok:
        _print_diagnostics(parsed.diagnostics, err)
        return EXIT_ANALYSIS
    model = parsed.model
    if args.what == "links":
        document = _export_links(model, args.format)
    else:
        trees = [devices.decompose(model, devices.identify_device(model, link),
                                   max_depth=args.max_depth)
                 for link in corpus_mod.root_links(model)]
        if args.format == "json":
            document = json.dumps([devices.tree_to_json(t) for t in trees],
                                  sort_keys=True, indent=2) + "\n"
        else:
            document = "".join(devices.tree_to_dot(t) for t in trees) \
                or "digraph devices {\n}\n"
    out.write(document)
    return EXIT_OK


def _export_links(model: Model, fmt: str) -> str:
    nodes = sorted({link.source for link in model.asserted_links}
                   | {link.target for link in model.asserted_links})
    edges = sorted(
        (l.source, l.target, l.directness, l.subfunction or "")
        for l in model.asserted_links)
    if fmt == "json":
        return json.dumps({
            "nodes": [{"id": n, "kind": model.occurrent(n).kind} for n in nodes],
            "edges": [{"source": s, "target": t, "directness": d,
                       "subfunction": sub or None}
                      for s, t, d, sub in edges],
        }, sort_keys=True, indent=2) + "\n"
    lines = ["digraph links {", '  node [fontname="monospace"];']
    shapes = {"state": "ellipse", "process": "box", "event": "octagon",
              "maintain": "hexagon"}
    for n in nodes:
        kind = model.occurrent(n).kind
        lines.append(f'  "{n}" [shape={shapes[kind]}, label="{n}\\n{kind}"];')
    for s, t, d, sub in edges:
        label = sub or d
        style = "solid" if d == "direct" else "dashed"
        lines.append(f'  "{s}" -> "{t}" [label="{label}", style={style}];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def cmd_corpus(args, out, err) -> int:
    directory = pathlib.Path(args.dir) if args.dir else corpus_mod.shipped_corpus_dir()
    if not directory.is_dir():
        print(f"not a directory: {directory}", file=err)
        return EXIT_USAGE
    report = corpus_mod.run_corpus(directory)
    for warning in report.warnings:
        print(f"warning: {warning}", file=err)
    out.write(report.table())
    return EXIT_OK if report.all_passed else EXIT_ANALYSIS


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="causalfn",
        description="Analyze occurrent-level causal models (.cm files): "
                    "validate, classify subfunction links, explain, simulate, "
                    "export graphs, and run the golden corpus.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="parse and validate a model")
    p.add_argument("model")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("classify", help="derive subfunction links for a pair")
    p.add_argument("model")
    p.add_argument("source")
    p.add_argument("target")
    p.add_argument("--context", default=None)
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("explain", help="backward explanation tree")
    p.add_argument("model")
    p.add_argument("occurrent")
    p.add_argument("--max-depth", type=int, default=6)
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.set_defaults(func=cmd_explain)

    p = sub.add_parser("simulate", help="run the tick simulator")
    p.add_argument("model")
    p.add_argument("--horizon", type=int, required=True)
    p.add_argument("--out", default=None, help="output directory for traces")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("export", help="export link or device graphs")
    p.add_argument("model")
    p.add_argument("--what", choices=("links", "devices"), default="links")
    p.add_argument("--format", choices=("dot", "json"), default="dot")
    p.add_argument("--max-depth", type=int, default=8)
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("corpus", help="run the golden corpus")
    p.add_argument("dir", nargs="?", default=None,
                   help="corpus directory (default: shipped corpus)")
    p.set_defaults(func=cmd_corpus)

    return parser


def main(argv=None, out=None, err=None) -> int:
    out = out if out is not None else sys.stdout
    err = err if err is not None else sys.stderr
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args, out, err)


if __name__ == "__main__":
    sys.exit(main())
