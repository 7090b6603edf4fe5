"""Command line front end.

Exit codes: 0 success, 1 usage error, 2 data or validation error,
3 backend failure. Mutating commands write the taxonomy back to the
file they read unless -o points elsewhere.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import NoReturn, Sequence

from .canonical import branch_to_json, document_bytes, load_taxonomy, save_taxonomy
from .combination import detect_repetition, expand_rule, load_rules, materialize, repetition_report_to_dict
from .errors import BackendError, WorkbenchError
from .expansion import (
    ACCEPTED,
    EngineConfig,
    ExpansionEngine,
    ExpansionRequest,
    VocabularyConstraint,
    apply_proposal,
    lint_taxonomy,
    proposal_to_dict,
    requests_from_file,
    run_session,
)
from .gateway import backend_from_spec
from .seeds import default_seed
from .tree import Taxonomy, TypeNode, TypePath, compute_stats, find_paths, resolve
from .typing_engine import BeamConfig, EntityMention, ScriptedScorer, type_entity_beamed


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on bad usage; the contract here is 1."""

    def error(self, message: str) -> NoReturn:
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _add_file_arg(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("-f", "--file", required=True, type=Path, help="taxonomy JSON file")


def _load(path: Path) -> Taxonomy:
    return load_taxonomy(path)


def _engine(args: argparse.Namespace) -> ExpansionEngine:
    backend = backend_from_spec(args.backend)
    vocab = VocabularyConstraint.from_file(args.vocab, strict=args.strict_vocab) if args.vocab else None
    config = EngineConfig.from_file(args.config) if args.config else EngineConfig()
    return ExpansionEngine(backend, vocab=vocab, config=config)


def _write_back(taxonomy: Taxonomy, args: argparse.Namespace) -> None:
    target = args.output if getattr(args, "output", None) else args.file
    save_taxonomy(taxonomy, target)


def _print_proposal(proposal, stream=None) -> None:
    json.dump(proposal_to_dict(proposal), stream or sys.stdout, indent=2, ensure_ascii=False)
    (stream or sys.stdout).write("\n")


def cmd_init(args: argparse.Namespace) -> int:
    taxonomy = Taxonomy(root=TypeNode(label=args.root))
    save_taxonomy(taxonomy, args.file)
    print(f"wrote {args.file} (version {taxonomy.version})")
    return 0


def cmd_seed(args: argparse.Namespace) -> int:
    if not args.default:
        print("only --default seeding is available", file=sys.stderr)
        return 1
    taxonomy = default_seed()
    save_taxonomy(taxonomy, args.file)
    print(f"wrote {args.file} (version {taxonomy.version})")
    return 0


def cmd_stats(args: argparse.Namespace) -> int:
    taxonomy = _load(args.file)
    stats = compute_stats(taxonomy)
    print(f"version={taxonomy.version}")
    print(f"node_count={stats.node_count}")
    print(f"max_depth={stats.max_depth}")
    print(f"leaf_count={stats.leaf_count}")
    print(f"duplicate_label_count={stats.duplicate_label_count}")
    for depth in sorted(stats.per_depth_counts):
        print(f"depth_{depth}={stats.per_depth_counts[depth]}")
    return 0


def cmd_paths(args: argparse.Namespace) -> int:
    taxonomy = _load(args.file)
    for path in find_paths(taxonomy, args.label, case_sensitive=args.case_sensitive):
        print(path)
    return 0


def cmd_closure(args: argparse.Namespace) -> int:
    taxonomy = _load(args.file)
    path = TypePath.parse(args.path)
    resolve(taxonomy, path)
    for label in path.segments:
        print(label)
    return 0


def cmd_show(args: argparse.Namespace) -> int:
    taxonomy = _load(args.file)
    if args.path:
        node = resolve(taxonomy, TypePath.parse(args.path))
        sys.stdout.write(branch_to_json(node) + "\n")
    else:
        sys.stdout.buffer.write(document_bytes(taxonomy))
    return 0


def _decide(taxonomy: Taxonomy, proposal, args: argparse.Namespace) -> tuple[Taxonomy, int]:
    if not args.apply:
        return taxonomy, 0
    if proposal.status != "pending":
        print(f"proposal is {proposal.status}; nothing to apply", file=sys.stderr)
        return taxonomy, 2
    new_taxonomy, decided = apply_proposal(
        taxonomy, proposal, "accept", override=args.override
    )
    if decided.status == ACCEPTED:
        _write_back(new_taxonomy, args)
        print(f"applied; version {new_taxonomy.version}", file=sys.stderr)
        return new_taxonomy, 0
    return taxonomy, 2


def cmd_expand(args: argparse.Namespace) -> int:
    taxonomy = _load(args.file)
    engine = _engine(args)
    request = ExpansionRequest(
        mode="expand-subtree",
        base_version=taxonomy.version,
        target_path=TypePath.parse(args.path),
        instructions=args.instructions,
    )
    proposal = engine.propose(taxonomy, request)
    _print_proposal(proposal)
    if proposal.status == "failed":
        return 2
    if proposal.validation and proposal.validation.verdict == "blocked" and args.apply and not args.override:
        print("proposal is blocked; use --override to force", file=sys.stderr)
        return 2
    _, code = _decide(taxonomy, proposal, args)
    return code


def cmd_insert(args: argparse.Namespace) -> int:
    taxonomy = _load(args.file)
    engine = _engine(args)
    request = ExpansionRequest(
        mode="insert-type",
        base_version=taxonomy.version,
        new_label=args.label,
        instructions=args.instructions,
    )
    proposal = engine.propose(taxonomy, request)
    _print_proposal(proposal)
    if proposal.status == "failed":
        return 2
    if proposal.validation and proposal.validation.verdict == "blocked" and args.apply and not args.override:
        print("proposal is blocked; use --override to force", file=sys.stderr)
        return 2
    _, code = _decide(taxonomy, proposal, args)
    return code


def cmd_session(args: argparse.Namespace) -> int:
    taxonomy = _load(args.file)
    engine = _engine(args)
    script = requests_from_file(args.script)
    result, log = run_session(
        taxonomy,
        script,
        engine.backend,
        vocab=engine.vocab,
        config=engine.config,
    )
    if args.log:
        log.write_to(args.log)
    if not args.dry_run:
        _write_back(result, args)
    stats = compute_stats(result)
    print(f"version={result.version}")
    print(f"node_count={stats.node_count}")
    return 0


def cmd_combine(args: argparse.Namespace) -> int:
    taxonomy = _load(args.file)
    rules = load_rules(taxonomy, args.rules)
    rule = rules.get(args.name)
    virtual = expand_rule(taxonomy, rule, rules.aliases)
    sys.stdout.write(branch_to_json(virtual.generated) + "\n")
    if args.materialize:
        if not args.parent:
            print("--materialize needs --parent", file=sys.stderr)
            return 1
        taxonomy = materialize(taxonomy, virtual, TypePath.parse(args.parent))
        _write_back(taxonomy, args)
        print(f"materialized under {args.parent}; version {taxonomy.version}", file=sys.stderr)
    return 0


def cmd_detect_repetition(args: argparse.Namespace) -> int:
    taxonomy = _load(args.file)
    report = detect_repetition(
        taxonomy, min_parents=args.min_parents, mirror_threshold=args.threshold
    )
    json.dump(repetition_report_to_dict(report), sys.stdout, indent=2, ensure_ascii=False)
    sys.stdout.write("\n")
    return 0


def cmd_validate(args: argparse.Namespace) -> int:
    taxonomy = _load(args.file)
    vocab = VocabularyConstraint.from_file(args.vocab, strict=args.strict_vocab) if args.vocab else None
    report = lint_taxonomy(taxonomy, vocab=vocab)
    for diag in report.diagnostics:
        print(f"{diag.severity}\t{diag.kind}\t{diag.subject_path}\t{diag.detail}")
    print(f"verdict={report.verdict}")
    return 2 if report.verdict == "blocked" else 0


def cmd_type(args: argparse.Namespace) -> int:
    taxonomy = _load(args.file)
    try:
        start_text, end_text = args.span.split(":", 1)
        span = (int(start_text), int(end_text))
    except ValueError:
        print(f"span must look like START:END, got {args.span!r}", file=sys.stderr)
        return 1
    mention = EntityMention(sentence=args.sentence, start=span[0], end=span[1])
    scorer = ScriptedScorer.from_file(args.scorer)
    config = BeamConfig(
        beam_width=args.beam_width,
        max_depth=args.max_depth,
        stop_policy=args.stop_policy,
    )
    results = type_entity_beamed(mention, taxonomy, scorer, config)
    for result in results:
        score = "" if result.score is None else f"{result.score:.6f}"
        print(f"{score}\t{result.leaf_path}")
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import WorkbenchState, create_app

    taxonomy = _load(args.file)
    engine = _engine(args)
    rules = load_rules(taxonomy, args.rules) if args.rules else None
    scorer = ScriptedScorer.from_file(args.scorer) if args.scorer else None
    state = WorkbenchState(
        taxonomy=taxonomy,
        engine=engine,
        path=args.file,
        log_path=args.log,
        rules=rules,
        scorer=scorer,
    )
    app = create_app(state)
    if args.ui:
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=args.ui, html=True), name="ui")
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="taxo", description="taxonomy construction and curation workbench")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("init", help="create a new taxonomy file with a bare root")
    _add_file_arg(p)
    p.add_argument("--root", default="Entity")
    p.set_defaults(func=cmd_init)

    p = sub.add_parser("seed", help="write the built-in starter taxonomy")
    _add_file_arg(p)
    p.add_argument("--default", action="store_true", help="use the built-in seed")
    p.set_defaults(func=cmd_seed)

    p = sub.add_parser("stats", help="print size and shape counters, one key=value per line")
    _add_file_arg(p)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("paths", help="print every path whose last segment matches a label")
    _add_file_arg(p)
    p.add_argument("label")
    p.add_argument("--case-sensitive", action="store_true")
    p.set_defaults(func=cmd_paths)

    p = sub.add_parser("closure", help="print a path's ancestor labels, one per line")
    _add_file_arg(p)
    p.add_argument("path")
    p.set_defaults(func=cmd_closure)

    p = sub.add_parser("show", help="print the taxonomy document, or one branch")
    _add_file_arg(p)
    p.add_argument("--path", default=None)
    p.set_defaults(func=cmd_show)

    def llm_args(p: argparse.ArgumentParser) -> None:
        p.add_argument("--backend", required=True, help="scripted:FILE or an http(s) endpoint")
        p.add_argument("--vocab", type=Path, default=None)
        p.add_argument("--strict-vocab", action="store_true")
        p.add_argument("--config", type=Path, default=None)
        p.add_argument("--instructions", default="")
        p.add_argument("--apply", action="store_true", help="accept the proposal if it is not blocked")
        p.add_argument("--override", action="store_true", help="accept even when blocked")
        p.add_argument("-o", "--output", type=Path, default=None)

    p = sub.add_parser("expand", help="ask the model to regrow one subtree")
    _add_file_arg(p)
    p.add_argument("--path", required=True)
    llm_args(p)
    p.set_defaults(func=cmd_expand)

    p = sub.add_parser("insert", help="ask the model to place one new type")
    _add_file_arg(p)
    p.add_argument("--label", required=True)
    llm_args(p)
    p.set_defaults(func=cmd_insert)

    p = sub.add_parser("session", help="replay a JSONL request script against a backend")
    _add_file_arg(p)
    p.add_argument("--script", required=True, type=Path)
    p.add_argument("--backend", required=True)
    p.add_argument("--vocab", type=Path, default=None)
    p.add_argument("--strict-vocab", action="store_true")
    p.add_argument("--config", type=Path, default=None)
    p.add_argument("--log", type=Path, default=None)
    p.add_argument("--dry-run", action="store_true", help="run the session but skip the write-back")
    p.add_argument("-o", "--output", type=Path, default=None)
    p.set_defaults(func=cmd_session)

    p = sub.add_parser("combine", help="expand a cross-product rule, optionally graft it")
    _add_file_arg(p)
    p.add_argument("--rules", required=True, type=Path)
    p.add_argument("--name", required=True)
    p.add_argument("--materialize", action="store_true")
    p.add_argument("--parent", default=None)
    p.add_argument("-o", "--output", type=Path, default=None)
    p.set_defaults(func=cmd_combine)

    p = sub.add_parser("detect-repetition", help="report duplicated labels and mirrored sibling sets")
    _add_file_arg(p)
    p.add_argument("--min-parents", type=int, default=2)
    p.add_argument("--threshold", type=float, default=0.6)
    p.set_defaults(func=cmd_detect_repetition)

    p = sub.add_parser("validate", help="lint the stored taxonomy")
    _add_file_arg(p)
    p.add_argument("--vocab", type=Path, default=None)
    p.add_argument("--strict-vocab", action="store_true")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("type", help="assign taxonomy types to an entity mention")
    _add_file_arg(p)
    p.add_argument("--sentence", required=True)
    p.add_argument("--span", required=True, help="character span START:END")
    p.add_argument("--scorer", required=True, type=Path)
    p.add_argument("--beam-width", type=int, default=3)
    p.add_argument("--max-depth", type=int, default=100)
    p.add_argument("--stop-policy", default="leaf-only", choices=["leaf-only", "scorer-may-stop"])
    p.set_defaults(func=cmd_type)

    p = sub.add_parser("serve", help="run the HTTP service")
    _add_file_arg(p)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--backend", required=True)
    p.add_argument("--vocab", type=Path, default=None)
    p.add_argument("--strict-vocab", action="store_true")
    p.add_argument("--config", type=Path, default=None)
    p.add_argument("--rules", type=Path, default=None)
    p.add_argument("--scorer", type=Path, default=None)
    p.add_argument("--log", type=Path, default=None)
    p.add_argument("--ui", type=Path, default=None)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except BackendError as exc:
        print(f"backend error: {exc}", file=sys.stderr)
        return 3
    except WorkbenchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
