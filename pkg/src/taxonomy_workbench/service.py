"""HTTP face of the workbench.

Reads are lock-free snapshots of the current immutable taxonomy value.
Mutations (proposal decisions, materializations) funnel through a single
writer lock: the server compares the proposal's recorded base branch with
the live tree and supersedes proposals whose subtree changed, so two
curators can work on disjoint branches concurrently without trampling
each other. Server state is one taxonomy file plus an append-only event
log.
"""

from __future__ import annotations

import json
import logging
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from fastapi import FastAPI, Header, HTTPException, Query, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .canonical import branch_to_obj, document_obj, save_taxonomy
from .combination import (
    RuleSet,
    define_rule,
    detect_repetition,
    expand_rule,
    materialize,
    repetition_report_to_dict,
)
from .errors import (
    BackendError,
    BlockedProposalError,
    PathNotFoundError,
    ProposalStateError,
    StaleProposalError,
    WorkbenchError,
)
from .expansion import (
    ACCEPTED,
    ExpansionEngine,
    ExpansionProposal,
    ExpansionRequest,
    apply_proposal,
    diff_branches,
    proposal_to_dict,
    report_to_dict,
)
from .tree import Taxonomy, TypePath, compute_stats, find_paths, resolve
from .typing_engine import BeamConfig, EntityMention, NodeScorer, type_entity_beamed

logger = logging.getLogger(__name__)


@dataclass
class WorkbenchState:
    """Everything one server process owns."""

    taxonomy: Taxonomy
    engine: ExpansionEngine
    path: Path | None = None
    log_path: Path | None = None
    rules: RuleSet | None = None
    scorer: NodeScorer | None = None
    proposals: dict[str, ExpansionProposal] = field(default_factory=dict)
    lock: threading.Lock = field(default_factory=threading.Lock)

    def log_event(self, event: str, **payload: Any) -> None:
        if self.log_path is None:
            return
        record = {"event": event, **payload}
        with open(self.log_path, "a", encoding="utf-8") as handle:
            handle.write(json.dumps(record, ensure_ascii=False) + "\n")

    def persist(self) -> None:
        if self.path is not None:
            save_taxonomy(self.taxonomy, self.path)


class ExpansionBody(BaseModel):
    mode: str
    path: str | None = None
    label: str | None = None
    instructions: str = ""


class DecisionBody(BaseModel):
    decision: str
    override: bool = False


class CombineBody(BaseModel):
    rule: str | dict[str, Any]
    parent: str | None = None


class TypingBody(BaseModel):
    sentence: str
    span: tuple[int, int]
    beam_width: int = 3
    stop_policy: str = "leaf-only"


_MODE_ALIASES = {
    "expand-subtree": "expand-subtree",
    "expand": "expand-subtree",
    "insert-type": "insert-type",
    "insert": "insert-type",
}


def _base_version(state: WorkbenchState, if_match: str | None) -> int:
    if if_match is None:
        return state.taxonomy.version
    try:
        return int(if_match.strip().strip('"'))
    except ValueError as exc:
        raise HTTPException(400, f"If-Match must be a version number, got {if_match!r}") from exc


def _rule_from_body(state: WorkbenchState, body: CombineBody):
    if isinstance(body.rule, str):
        if state.rules is None:
            raise HTTPException(400, "no rules file is loaded; send the rule inline")
        return state.rules.get(body.rule), dict(state.rules.aliases)
    record = body.rule
    missing = {"left", "right", "template"} - set(record)
    if missing:
        raise HTTPException(400, f"inline rule is missing keys: {sorted(missing)}")
    aliases = record.get("aliases", {})
    rule = define_rule(
        state.taxonomy,
        left_anchor=TypePath.parse(record["left"]),
        right_anchor=TypePath.parse(record["right"]),
        template=record["template"],
        membership=record.get("membership"),
        name=record.get("name"),
        aliases=aliases,
    )
    return rule, aliases


def create_app(state: WorkbenchState) -> FastAPI:
    app = FastAPI(title="taxonomy workbench", version="0.1.0")

    @app.exception_handler(WorkbenchError)
    async def workbench_error_handler(request: Request, exc: WorkbenchError) -> JSONResponse:
        status = 400
        if isinstance(exc, PathNotFoundError):
            status = 404
        elif isinstance(exc, (ProposalStateError, StaleProposalError)):
            status = 409
        elif isinstance(exc, BackendError):
            status = 502
        elif isinstance(exc, BlockedProposalError):
            status = 400
        return JSONResponse(
            status_code=status, content={"error": str(exc), "kind": type(exc).__name__}
        )

    @app.get("/taxonomy")
    def get_taxonomy() -> dict[str, Any]:
        return document_obj(state.taxonomy)

    @app.get("/subtree")
    def get_subtree(path: str = Query(...)) -> dict[str, Any]:
        parsed = TypePath.parse(path)
        node = resolve(state.taxonomy, parsed)
        return {"path": str(parsed), "version": state.taxonomy.version, "branch": branch_to_obj(node)}

    @app.get("/stats")
    def get_stats() -> dict[str, Any]:
        stats = compute_stats(state.taxonomy)
        return {
            "node_count": stats.node_count,
            "max_depth": stats.max_depth,
            "leaf_count": stats.leaf_count,
            "duplicate_label_count": stats.duplicate_label_count,
            "per_depth_counts": {str(k): v for k, v in stats.per_depth_counts.items()},
            "version": state.taxonomy.version,
        }

    @app.get("/search")
    def get_search(label: str = Query(...), case_sensitive: bool = False) -> dict[str, Any]:
        paths = find_paths(state.taxonomy, label, case_sensitive=case_sensitive)
        return {"label": label, "paths": [str(p) for p in paths]}

    @app.post("/expansions", status_code=201)
    def post_expansion(body: ExpansionBody, if_match: str | None = Header(default=None)) -> dict[str, Any]:
        mode = _MODE_ALIASES.get(body.mode)
        if mode is None:
            raise HTTPException(400, f"unknown mode {body.mode!r}")
        if mode == "expand-subtree" and not body.path:
            raise HTTPException(400, "expand-subtree needs 'path'")
        if mode == "insert-type" and not body.label:
            raise HTTPException(400, "insert-type needs 'label'")
        snapshot = state.taxonomy
        request = ExpansionRequest(
            mode=mode,
            base_version=_base_version(state, if_match),
            target_path=TypePath.parse(body.path) if body.path else None,
            new_label=body.label,
            instructions=body.instructions,
        )
        state.log_event("request", mode=mode, path=body.path, label=body.label)
        proposal = state.engine.propose(snapshot, request)
        with state.lock:
            state.proposals[proposal.id] = proposal
        state.log_event("proposal", **proposal_to_dict(proposal))
        return {
            "id": proposal.id,
            "status": proposal.status,
            "verdict": proposal.validation.verdict if proposal.validation else None,
            "error": proposal.error,
        }

    def _proposal_or_404(proposal_id: str) -> ExpansionProposal:
        proposal = state.proposals.get(proposal_id)
        if proposal is None:
            raise HTTPException(404, f"no proposal {proposal_id!r}")
        return proposal

    @app.get("/expansions")
    def list_expansions() -> dict[str, Any]:
        return {
            "proposals": [
                {
                    "id": p.id,
                    "status": p.status,
                    "mode": p.request.mode,
                    "path": str(p.replace_path) if p.replace_path else None,
                    "verdict": p.validation.verdict if p.validation else None,
                }
                for p in state.proposals.values()
            ]
        }

    @app.get("/expansions/{proposal_id}")
    def get_expansion(proposal_id: str) -> dict[str, Any]:
        proposal = _proposal_or_404(proposal_id)
        payload = proposal_to_dict(proposal)
        diff = None
        if proposal.proposed_branch is not None and proposal.replace_path is not None:
            try:
                current = resolve(state.taxonomy, proposal.replace_path)
            except PathNotFoundError:
                current = None
            diff = diff_branches(current, proposal.proposed_branch)
        payload["diff"] = diff
        return payload

    @app.post("/expansions/{proposal_id}/decision")
    def post_decision(
        proposal_id: str, body: DecisionBody, if_match: str | None = Header(default=None)
    ) -> dict[str, Any]:
        if body.decision not in ("accept", "reject"):
            raise HTTPException(400, f"decision must be accept or reject, got {body.decision!r}")
        del if_match  # staleness is judged per subtree, not per header
        with state.lock:
            proposal = _proposal_or_404(proposal_id)
            try:
                new_taxonomy, decided = apply_proposal(
                    state.taxonomy, proposal, body.decision, override=body.override
                )
            except StaleProposalError as exc:
                if isinstance(exc.proposal, ExpansionProposal):
                    state.proposals[proposal_id] = exc.proposal
                    state.log_event(
                        "decision",
                        proposal_id=proposal_id,
                        decision=body.decision,
                        status_after=exc.proposal.status,
                    )
                raise
            state.proposals[proposal_id] = decided
            changed = decided.status == ACCEPTED
            if changed:
                state.taxonomy = new_taxonomy
                state.persist()
        state.log_event(
            "decision",
            proposal_id=proposal_id,
            decision=body.decision,
            status_after=decided.status,
            version_after=state.taxonomy.version,
        )
        return {
            "id": decided.id,
            "status": decided.status,
            "version": state.taxonomy.version,
        }

    @app.post("/combinations/expand")
    def post_combination(body: CombineBody) -> dict[str, Any]:
        rule, aliases = _rule_from_body(state, body)
        virtual = expand_rule(state.taxonomy, rule, aliases)
        return {
            "rule": rule.name,
            "generated": branch_to_obj(virtual.generated),
            "category_count": len(virtual.generated.children),
        }

    @app.post("/combinations/materialize")
    def post_materialize(body: CombineBody, if_match: str | None = Header(default=None)) -> dict[str, Any]:
        if not body.parent:
            raise HTTPException(400, "materialize needs 'parent'")
        base_version = _base_version(state, if_match)
        rule, aliases = _rule_from_body(state, body)
        with state.lock:
            if base_version != state.taxonomy.version:
                raise HTTPException(409, "taxonomy version changed; re-read and retry")
            virtual = expand_rule(state.taxonomy, rule, aliases)
            state.taxonomy = materialize(state.taxonomy, virtual, TypePath.parse(body.parent))
            state.persist()
        state.log_event("materialize", rule=rule.name, parent=body.parent, version_after=state.taxonomy.version)
        return {"rule": rule.name, "version": state.taxonomy.version}

    @app.get("/repetition")
    def get_repetition(min_parents: int = 2, mirror_threshold: float = 0.6) -> dict[str, Any]:
        report = detect_repetition(state.taxonomy, min_parents=min_parents, mirror_threshold=mirror_threshold)
        return repetition_report_to_dict(report)

    @app.post("/typing")
    def post_typing(body: TypingBody) -> dict[str, Any]:
        if state.scorer is None:
            raise HTTPException(400, "no scorer is configured on this server")
        mention = EntityMention(sentence=body.sentence, start=body.span[0], end=body.span[1])
        config = BeamConfig(beam_width=body.beam_width, stop_policy=body.stop_policy)
        results = type_entity_beamed(mention, state.taxonomy, state.scorer, config)
        return {
            "results": [
                {"leaf_path": str(r.leaf_path), "closure": list(r.closure), "score": r.score}
                for r in results
            ]
        }

    return app
