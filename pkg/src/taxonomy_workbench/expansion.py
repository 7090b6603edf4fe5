"""Model-driven taxonomy growth: proposals, validation, and sessions.

The engine never edits a taxonomy directly. Each request produces an
ExpansionProposal holding the model's replacement branch; validation
attaches diagnostics; a separate decision step applies or rejects the
proposal. Proposals carry the branch they were based on, so a proposal
whose target changed under it is detected by content, not by guesswork.
"""

from __future__ import annotations

import itertools
import json
import time
from collections.abc import Callable, Iterable, Sequence
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Literal

from .canonical import branch_to_json, branch_to_obj
from .errors import (
    BlockedProposalError,
    ConfigError,
    DuplicateSiblingError,
    InvalidLabelError,
    NoJsonFoundError,
    PathNotFoundError,
    ProposalStateError,
    ResponseRootMismatchError,
    SchemaError,
    StaleProposalError,
)
from .gateway.backends import Backend, ChatRequest
from .gateway.parsing import parse_branch_response, parse_placement_response
from .gateway.templates import load_template, render_expand_prompt, render_insert_prompt
from .labels import clean_label, label_tokens, normalize_label
from .tree import Taxonomy, TypeNode, TypePath, extract_context_subset, iter_nodes, replace_branch, resolve

Mode = Literal["expand-subtree", "insert-type"]
Severity = Literal["info", "warn", "block"]
Decision = Literal["accept", "reject"]

PENDING = "pending"
ACCEPTED = "accepted"
REJECTED = "rejected"
SUPERSEDED = "superseded"
FAILED = "failed"

_PARSE_ERRORS = (
    NoJsonFoundError,
    SchemaError,
    ResponseRootMismatchError,
    DuplicateSiblingError,
    InvalidLabelError,
)


@dataclass(frozen=True)
class EngineConfig:
    """Knobs for proposal generation and validation."""

    context_budget: int = 200
    overlap_threshold: float = 0.8
    max_fanout: int = 50
    temperature: float = 0.0
    max_output_tokens: int = 2048
    template_dir: str | None = None
    repeat_min_parents: int = 2
    mirror_threshold: float = 0.6

    @classmethod
    def from_file(cls, path: str | Path) -> EngineConfig:
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"config {path} must hold a JSON object")
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"config {path} has unknown keys: {sorted(unknown)}")
        return replace(cls(), **data)


@dataclass(frozen=True)
class VocabularyConstraint:
    """A closed label vocabulary; labels are compared in normalized form."""

    allowed: frozenset[str]
    strict: bool = False

    @classmethod
    def from_file(cls, path: str | Path, strict: bool = False) -> VocabularyConstraint:
        entries = set()
        for line in Path(path).read_text(encoding="utf-8").splitlines():
            line = line.strip()
            if line and not line.startswith("#"):
                entries.add(normalize_label(line))
        return cls(allowed=frozenset(entries), strict=strict)

    def __contains__(self, label: str) -> bool:
        return normalize_label(label) in self.allowed


@dataclass(frozen=True)
class ExpansionRequest:
    """One unit of model-assisted work against a known base version."""

    mode: Mode
    base_version: int = 0
    target_path: TypePath | None = None
    new_label: str | None = None
    instructions: str = ""
    grounding: tuple[tuple[str, str], ...] = ()

    def __post_init__(self) -> None:
        if self.mode not in ("expand-subtree", "insert-type"):
            raise ConfigError(f"unknown request mode {self.mode!r}")
        if self.mode == "expand-subtree" and self.target_path is None:
            raise ConfigError("expand-subtree requests need a target_path")
        if self.mode == "insert-type" and not self.new_label:
            raise ConfigError("insert-type requests need a new_label")
        if not isinstance(self.grounding, tuple):
            object.__setattr__(self, "grounding", tuple(tuple(g) for g in self.grounding))


@dataclass(frozen=True)
class Diagnostic:
    kind: str
    severity: Severity
    subject_path: TypePath
    detail: str


@dataclass(frozen=True)
class ValidationReport:
    diagnostics: tuple[Diagnostic, ...]
    verdict: Literal["clean", "warnings", "blocked"]

    @classmethod
    def from_diagnostics(cls, diagnostics: Iterable[Diagnostic]) -> ValidationReport:
        items = tuple(diagnostics)
        if any(d.severity == "block" for d in items):
            verdict = "blocked"
        elif items:
            verdict = "warnings"
        else:
            verdict = "clean"
        return cls(diagnostics=items, verdict=verdict)


@dataclass(frozen=True)
class ExpansionProposal:
    """The model's answer to one request, frozen for review.

    ``base_branch`` is the subtree that stood at the replacement path when
    the proposal was created; apply-time staleness is judged by comparing
    it against the current tree.
    """

    id: str
    request: ExpansionRequest
    status: str
    raw_response: str
    proposed_branch: TypeNode | None = None
    placement_path: TypePath | None = None
    base_branch: TypeNode | None = None
    validation: ValidationReport | None = None
    error: str | None = None
    created_at: str = ""

    @property
    def replace_path(self) -> TypePath | None:
        """The path whose subtree this proposal would replace."""
        if self.request.mode == "expand-subtree":
            return self.request.target_path
        return self.placement_path


def _walk(branch: TypeNode, base: TypePath) -> Iterable[tuple[TypePath, TypeNode]]:
    return iter_nodes(branch, base=base)


def _labels_of(branch: TypeNode) -> dict[str, TypePath]:
    """First path per normalized label, in document order."""
    found: dict[str, TypePath] = {}
    for path, node in iter_nodes(branch):
        found.setdefault(normalize_label(node.label), path)
    return found


def _vocabulary_diagnostics(
    branch: TypeNode,
    base: TypePath,
    old_labels: set[str],
    vocab: VocabularyConstraint,
) -> list[Diagnostic]:
    severity: Severity = "block" if vocab.strict else "warn"
    seen: set[str] = set()
    out: list[Diagnostic] = []
    for path, node in _walk(branch, base):
        key = normalize_label(node.label)
        if key in old_labels or key in seen:
            continue
        if node.label in vocab:
            continue
        seen.add(key)
        out.append(
            Diagnostic(
                kind="out-of-vocabulary",
                severity=severity,
                subject_path=path,
                detail=f"label {node.label!r} is not in the allowed vocabulary",
            )
        )
    return out


def _overlap_diagnostics(branch: TypeNode, base: TypePath, threshold: float) -> list[Diagnostic]:
    out: list[Diagnostic] = []
    for path, node in _walk(branch, base):
        if len(node.children) < 2:
            continue
        parent_tokens = set(label_tokens(node.label))
        if not parent_tokens:
            continue
        sharing = [
            child.label
            for child in node.children
            if parent_tokens & set(label_tokens(child.label))
        ]
        if len(sharing) / len(node.children) >= threshold:
            shown = ", ".join(repr(s) for s in sharing[:5])
            out.append(
                Diagnostic(
                    kind="lexical-overlap-grouping",
                    severity="warn",
                    subject_path=path,
                    detail=(
                        f"{len(sharing)} of {len(node.children)} children share a token "
                        f"with {node.label!r}: {shown}"
                    ),
                )
            )
    return out


def _dropped_diagnostics(old: TypeNode, new: TypeNode, base: TypePath) -> list[Diagnostic]:
    old_paths = {}
    for path, node in _walk(old, base):
        old_paths.setdefault(normalize_label(node.label), (path, node.label))
    new_labels = set(_labels_of(new))
    out: list[Diagnostic] = []
    root_key = normalize_label(old.label)
    for key, (path, raw) in old_paths.items():
        if key == root_key or key in new_labels:
            continue
        out.append(
            Diagnostic(
                kind="dropped-descendants",
                severity="warn",
                subject_path=path,
                detail=f"label {raw!r} from the current branch is absent from the replacement",
            )
        )
    return out


def _structural_diagnostics(branch: TypeNode, base: TypePath, max_fanout: int) -> list[Diagnostic]:
    out: list[Diagnostic] = []
    for path, node in _walk(branch, base):
        groups: dict[str, list[str]] = {}
        for child in node.children:
            groups.setdefault(normalize_label(child.label), []).append(child.label)
        for labels in groups.values():
            if len(labels) >= 2:
                out.append(
                    Diagnostic(
                        kind="sibling-duplicate",
                        severity="block",
                        subject_path=path,
                        detail=f"children of {node.label!r} collide after normalization: {labels}",
                    )
                )
        if len(node.children) > max_fanout:
            out.append(
                Diagnostic(
                    kind="excessive-fanout",
                    severity="warn",
                    subject_path=path,
                    detail=f"{node.label!r} has {len(node.children)} children (limit {max_fanout})",
                )
            )
    return out


def validate_proposal(
    proposal: ExpansionProposal,
    taxonomy: Taxonomy,
    vocab: VocabularyConstraint | None = None,
    config: EngineConfig | None = None,
) -> ValidationReport:
    """Pure validation: same proposal, taxonomy, and config, same report.

    Checks, in order: vocabulary membership of newly introduced labels,
    lexical-overlap grouping, descendants dropped by the replacement, and
    structural limits (normalized sibling collisions, fanout). Insert-mode
    proposals additionally must contain their new label somewhere in the
    branch.
    """
    if proposal.proposed_branch is None:
        raise ProposalStateError(f"proposal {proposal.id} has no parsed branch to validate")
    config = config or EngineConfig()
    base = proposal.replace_path
    assert base is not None
    branch = proposal.proposed_branch

    old_branch = proposal.base_branch
    if old_branch is None:
        try:
            old_branch = resolve(taxonomy, base)
        except PathNotFoundError:
            old_branch = None
    old_labels = set(_labels_of(old_branch)) if old_branch is not None else set()

    diagnostics: list[Diagnostic] = []
    if vocab is not None:
        diagnostics.extend(_vocabulary_diagnostics(branch, base, old_labels, vocab))
    diagnostics.extend(_overlap_diagnostics(branch, base, config.overlap_threshold))
    if old_branch is not None:
        diagnostics.extend(_dropped_diagnostics(old_branch, branch, base))
    diagnostics.extend(_structural_diagnostics(branch, base, config.max_fanout))

    if proposal.request.mode == "insert-type":
        wanted = normalize_label(proposal.request.new_label or "")
        if wanted not in _labels_of(branch):
            diagnostics.append(
                Diagnostic(
                    kind="missing-new-label",
                    severity="block",
                    subject_path=base,
                    detail=f"the requested type {proposal.request.new_label!r} is nowhere in the returned branch",
                )
            )
    return ValidationReport.from_diagnostics(diagnostics)


def lint_taxonomy(
    taxonomy: Taxonomy,
    vocab: VocabularyConstraint | None = None,
    config: EngineConfig | None = None,
) -> ValidationReport:
    """Run the proposal checks over a whole taxonomy, as a standing lint."""
    config = config or EngineConfig()
    base = TypePath((taxonomy.root.label,))
    diagnostics: list[Diagnostic] = []
    if vocab is not None:
        diagnostics.extend(_vocabulary_diagnostics(taxonomy.root, base, set(), vocab))
    diagnostics.extend(_overlap_diagnostics(taxonomy.root, base, config.overlap_threshold))
    diagnostics.extend(_structural_diagnostics(taxonomy.root, base, config.max_fanout))
    return ValidationReport.from_diagnostics(diagnostics)


def _resolve_lenient(taxonomy: Taxonomy, path: TypePath) -> TypePath:
    """Resolve a model-provided path, forgiving case when it stays unambiguous."""
    node = taxonomy.root
    canonical: list[str] = []
    if path.segments[0] != node.label:
        if path.segments[0].casefold() != node.label.casefold():
            raise PathNotFoundError(path, resolved_prefix=())
    canonical.append(node.label)
    for index, segment in enumerate(path.segments[1:], start=1):
        child = node.child(segment)
        if child is None:
            folded = segment.casefold()
            matches = [c for c in node.children if c.label.casefold() == folded]
            if len(matches) != 1:
                raise PathNotFoundError(path, resolved_prefix=tuple(canonical[:index]))
            child = matches[0]
        canonical.append(child.label)
        node = child
    return TypePath(tuple(canonical))


class ExpansionEngine:
    """Builds proposals from requests; holds backend, vocabulary, and config."""

    def __init__(
        self,
        backend: Backend,
        vocab: VocabularyConstraint | None = None,
        config: EngineConfig | None = None,
        clock: Callable[[], float] | None = None,
    ) -> None:
        self.backend = backend
        self.vocab = vocab
        self.config = config or EngineConfig()
        self._clock = clock or time.time
        self._ids = itertools.count(1)

    def _next_id(self) -> str:
        return f"prop-{next(self._ids):06d}"

    def _stamp(self) -> str:
        return f"{self._clock():.3f}"

    def _chat(self, prompt: str) -> ChatRequest:
        return ChatRequest(
            prompt=prompt,
            max_output_tokens=self.config.max_output_tokens,
            temperature=self.config.temperature,
        )

    def propose(self, taxonomy: Taxonomy, request: ExpansionRequest) -> ExpansionProposal:
        if request.mode == "expand-subtree":
            return self.propose_expansion(taxonomy, request)
        return self.propose_insertion(taxonomy, request)

    def propose_expansion(self, taxonomy: Taxonomy, request: ExpansionRequest) -> ExpansionProposal:
        """Ask the model to rewrite the branch at the request's target path.

        Backend failures and an unresolvable target raise; an unparseable
        response is recorded as a failed proposal with the raw text kept.
        """
        target = request.target_path
        if target is None:
            raise ConfigError("expand-subtree requests need a target_path")
        base_branch = resolve(taxonomy, target)
        budget = max(self.config.context_budget, target.depth)
        context = extract_context_subset(taxonomy, target, budget)
        template = load_template("expand", self.config.template_dir)
        prompt = render_expand_prompt(
            context, target, request.instructions, request.grounding, template
        )
        response = self.backend.complete(self._chat(prompt))
        base = replace(request, base_version=request.base_version or taxonomy.version)
        common = dict(
            id=self._next_id(),
            request=base,
            raw_response=response.text,
            base_branch=base_branch,
            created_at=self._stamp(),
        )
        try:
            parsed = parse_branch_response(response.text, expected_root=target.label)
        except _PARSE_ERRORS as exc:
            return ExpansionProposal(status=FAILED, error=str(exc), **common)
        proposal = ExpansionProposal(status=PENDING, proposed_branch=parsed, **common)
        report = validate_proposal(proposal, taxonomy, self.vocab, self.config)
        return replace(proposal, validation=report)

    def propose_insertion(self, taxonomy: Taxonomy, request: ExpansionRequest) -> ExpansionProposal:
        """Ask the model where a new type belongs and for the rewritten branch.

        A placement path that does not resolve against the current tree is
        recorded on a failed proposal rather than raised: the path came
        from the model, not from the caller.
        """
        new_label = clean_label(request.new_label or "")
        root_path = TypePath((taxonomy.root.label,))
        budget = max(self.config.context_budget, 1)
        context = extract_context_subset(taxonomy, root_path, budget)
        template = load_template("insert", self.config.template_dir)
        prompt = render_insert_prompt(
            context, new_label, request.instructions, request.grounding, template
        )
        response = self.backend.complete(self._chat(prompt))
        base = replace(request, base_version=request.base_version or taxonomy.version)
        common = dict(
            id=self._next_id(),
            request=base,
            raw_response=response.text,
            created_at=self._stamp(),
        )
        try:
            placement, parsed = parse_placement_response(response.text)
            canonical = _resolve_lenient(taxonomy, placement)
        except _PARSE_ERRORS + (PathNotFoundError,) as exc:
            return ExpansionProposal(status=FAILED, error=str(exc), **common)
        if parsed.label != canonical.label:
            parsed = TypeNode(canonical.label, parsed.children)
        base_branch = resolve(taxonomy, canonical)
        proposal = ExpansionProposal(
            status=PENDING,
            proposed_branch=parsed,
            placement_path=canonical,
            base_branch=base_branch,
            **common,
        )
        report = validate_proposal(proposal, taxonomy, self.vocab, self.config)
        return replace(proposal, validation=report)


def apply_proposal(
    taxonomy: Taxonomy,
    proposal: ExpansionProposal,
    decision: Decision,
    override: bool = False,
) -> tuple[Taxonomy, ExpansionProposal]:
    """Apply a decision to a pending proposal.

    Accepting replaces the branch at the proposal's path and bumps the
    version by one. If the subtree at that path no longer matches the
    branch the proposal was built against, the proposal is superseded and
    a StaleProposalError carrying it is raised. Blocked proposals cannot
    be accepted unless ``override`` is set. Rejection always succeeds.
    """
    if proposal.status != PENDING:
        raise ProposalStateError(
            f"proposal {proposal.id} is {proposal.status}, not {PENDING}"
        )
    if decision == "reject":
        return taxonomy, replace(proposal, status=REJECTED)
    if decision != "accept":
        raise ConfigError(f"unknown decision {decision!r}")
    if proposal.proposed_branch is None or proposal.replace_path is None:
        raise ProposalStateError(f"proposal {proposal.id} has nothing to apply")
    if proposal.validation is not None and proposal.validation.verdict == "blocked" and not override:
        raise BlockedProposalError(
            f"proposal {proposal.id} has blocking diagnostics; rejected or override required"
        )
    target = proposal.replace_path
    try:
        current = resolve(taxonomy, target)
    except PathNotFoundError:
        current = None
    unchanged = (
        current is not None
        and proposal.base_branch is not None
        and branch_to_json(current) == branch_to_json(proposal.base_branch)
    )
    if taxonomy.version != proposal.request.base_version and not unchanged:
        superseded = replace(proposal, status=SUPERSEDED)
        raise StaleProposalError(
            f"proposal {proposal.id} targets a subtree that changed since version "
            f"{proposal.request.base_version}",
            proposal=superseded,
        )
    if current is None:
        superseded = replace(proposal, status=SUPERSEDED)
        raise StaleProposalError(
            f"proposal {proposal.id} targets a path that no longer exists", proposal=superseded
        )
    new_taxonomy = replace_branch(taxonomy, target, proposal.proposed_branch)
    return new_taxonomy, replace(proposal, status=ACCEPTED)


def diff_branches(old: TypeNode | None, new: TypeNode) -> dict[str, list[str]]:
    """Label-level diff between a current branch and its replacement."""
    new_labels = {}
    for _, node in iter_nodes(new):
        new_labels.setdefault(normalize_label(node.label), node.label)
    old_labels: dict[str, str] = {}
    if old is not None:
        for _, node in iter_nodes(old):
            old_labels.setdefault(normalize_label(node.label), node.label)
    added = sorted(raw for key, raw in new_labels.items() if key not in old_labels)
    removed = sorted(raw for key, raw in old_labels.items() if key not in new_labels)
    retained = sorted(raw for key, raw in new_labels.items() if key in old_labels)
    return {"added": added, "removed": removed, "retained": retained}


def diagnostic_to_dict(diagnostic: Diagnostic) -> dict[str, str]:
    return {
        "kind": diagnostic.kind,
        "severity": diagnostic.severity,
        "subject_path": str(diagnostic.subject_path),
        "detail": diagnostic.detail,
    }


def report_to_dict(report: ValidationReport) -> dict[str, Any]:
    return {
        "verdict": report.verdict,
        "diagnostics": [diagnostic_to_dict(d) for d in report.diagnostics],
    }


def proposal_to_dict(proposal: ExpansionProposal) -> dict[str, Any]:
    return {
        "id": proposal.id,
        "status": proposal.status,
        "mode": proposal.request.mode,
        "base_version": proposal.request.base_version,
        "target_path": str(proposal.request.target_path) if proposal.request.target_path else None,
        "placement_path": str(proposal.placement_path) if proposal.placement_path else None,
        "new_label": proposal.request.new_label,
        "branch": branch_to_obj(proposal.proposed_branch) if proposal.proposed_branch else None,
        "validation": report_to_dict(proposal.validation) if proposal.validation else None,
        "error": proposal.error,
        "raw_response": proposal.raw_response,
        "created_at": proposal.created_at,
    }


@dataclass
class SessionLog:
    """Append-only record of a session: requests, proposals, reports, decisions."""

    events: list[dict[str, Any]] = field(default_factory=list)

    def record(self, event: str, **payload: Any) -> None:
        self.events.append({"event": event, **payload})

    def to_jsonl(self) -> str:
        if not self.events:
            return ""
        return "\n".join(json.dumps(e, ensure_ascii=False) for e in self.events) + "\n"

    def write_to(self, path: str | Path, append: bool = False) -> None:
        mode = "a" if append else "w"
        with open(path, mode, encoding="utf-8") as handle:
            handle.write(self.to_jsonl())

    @staticmethod
    def read(path: str | Path) -> list[dict[str, Any]]:
        events = []
        for line in Path(path).read_text(encoding="utf-8").splitlines():
            if line.strip():
                events.append(json.loads(line))
        return events


def _request_to_dict(request: ExpansionRequest) -> dict[str, Any]:
    return {
        "mode": request.mode,
        "base_version": request.base_version,
        "target_path": str(request.target_path) if request.target_path else None,
        "new_label": request.new_label,
        "instructions": request.instructions,
    }


def run_session(
    taxonomy: Taxonomy,
    script: Sequence[ExpansionRequest],
    backend: Backend,
    auto_accept: bool = True,
    vocab: VocabularyConstraint | None = None,
    config: EngineConfig | None = None,
) -> tuple[Taxonomy, SessionLog]:
    """Run a scripted curation session request by request.

    With ``auto_accept`` every clean or warning proposal is applied and
    blocked ones are skipped; failed proposals are logged and skipped.
    Backend errors abort the session (the caller keeps its original
    taxonomy value). With the scripted backend, two identical sessions
    produce byte-identical taxonomies.
    """
    engine = ExpansionEngine(backend, vocab=vocab, config=config)
    log = SessionLog()
    current = taxonomy
    for request in script:
        request = replace(request, base_version=current.version)
        log.record("request", **_request_to_dict(request))
        proposal = engine.propose(current, request)
        log.record("proposal", **proposal_to_dict(proposal))
        if proposal.validation is not None:
            log.record("report", proposal_id=proposal.id, **report_to_dict(proposal.validation))
        if proposal.status != PENDING:
            continue
        if not auto_accept:
            continue
        if proposal.validation is not None and proposal.validation.verdict == "blocked":
            log.record("decision", proposal_id=proposal.id, decision="skip", status_after=PENDING)
            continue
        current, decided = apply_proposal(current, proposal, "accept")
        log.record(
            "decision",
            proposal_id=decided.id,
            decision="accept",
            status_after=decided.status,
            version_after=current.version,
        )
    return current, log


def requests_from_file(path: str | Path) -> list[ExpansionRequest]:
    """Load a session script: one JSON request object per line."""
    requests = []
    for line_no, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}:{line_no}: invalid JSON: {exc}") from exc
        target = record.get("target_path") or record.get("path")
        requests.append(
            ExpansionRequest(
                mode=record.get("mode", "expand-subtree"),
                target_path=TypePath.parse(target) if target else None,
                new_label=record.get("new_label") or record.get("label"),
                instructions=record.get("instructions", ""),
            )
        )
    return requests


