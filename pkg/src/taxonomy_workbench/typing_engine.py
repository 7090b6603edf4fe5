"""Entity typing over a taxonomy: leveled beam search plus patterns.

Typing walks the tree one level at a time. At each node a scorer rates
the candidate children (and optionally stopping right there); a beam
keeps the best partial paths by summed log score. The result of typing is
never just a leaf: the closure (every ancestor plus the leaf) is the full
answer, which is what makes coarse assertions about fine types possible.
"""

from __future__ import annotations

import json
import math
from collections.abc import Callable, Mapping, Sequence
from dataclasses import dataclass
from pathlib import Path

from .errors import ConfigError, ScorerContractError
from .gateway.backends import Backend, ChatRequest
from .gateway.parsing import extract_first_json
from .tree import Taxonomy, TypeNode, TypePath, resolve

SCORE_FLOOR = 1e-9

# Scorers return mappings keyed by candidate label; the None key scores
# the option of stopping at the current node.
ScoreMap = Mapping[str | None, float]
NodeScorer = Callable[["EntityMention", Sequence[tuple[str, TypePath]], bool], ScoreMap]


@dataclass(frozen=True)
class EntityMention:
    """A sentence plus the half-open span of the mention inside it."""

    sentence: str
    start: int
    end: int

    def __post_init__(self) -> None:
        if not (0 <= self.start < self.end <= len(self.sentence)):
            raise ConfigError(
                f"span [{self.start}, {self.end}) does not fit the sentence "
                f"(length {len(self.sentence)})"
            )

    @property
    def text(self) -> str:
        return self.sentence[self.start : self.end]


@dataclass(frozen=True)
class TypingResult:
    leaf_path: TypePath
    closure: tuple[str, ...]
    score: float | None = None


@dataclass(frozen=True)
class BeamConfig:
    beam_width: int = 3
    max_depth: int = 100
    stop_policy: str = "leaf-only"

    def __post_init__(self) -> None:
        if self.beam_width < 1:
            raise ConfigError("beam_width must be at least 1")
        if self.max_depth < 1:
            raise ConfigError("max_depth must be at least 1")
        if self.stop_policy not in ("leaf-only", "scorer-may-stop"):
            raise ConfigError(f"unknown stop policy {self.stop_policy!r}")


@dataclass(frozen=True)
class TypePattern:
    """A relation pattern over typed endpoints.

    Endpoint types are either a bare label (matches anywhere in the
    closure) or a full path (matches as a prefix of the leaf path).
    """

    subject_type: str | TypePath
    relation: str
    object_type: str | TypePath


def closure_labels(taxonomy: Taxonomy, leaf_path: TypePath) -> tuple[str, ...]:
    """Every ancestor label plus the leaf, root first."""
    resolve(taxonomy, leaf_path)
    return leaf_path.segments


def _checked_scores(
    scores: ScoreMap,
    candidates: Sequence[tuple[str, TypePath]],
    allow_stop: bool,
) -> dict[str | None, float]:
    wanted = {label for label, _ in candidates}
    got = set(scores)
    stop_given = None in got
    got.discard(None)
    if stop_given and not allow_stop:
        raise ScorerContractError("scorer returned a stop score where stopping is not allowed")
    if got != wanted:
        missing = sorted(wanted - got)
        extra = sorted(k for k in got if k is not None and k not in wanted)
        raise ScorerContractError(
            f"scorer must cover exactly the candidates; missing {missing}, unexpected {extra}"
        )
    checked: dict[str | None, float] = {}
    for key, value in scores.items():
        if not isinstance(value, (int, float)) or isinstance(value, bool) or not 0.0 <= value <= 1.0:
            raise ScorerContractError(f"score for {key!r} must be a number in [0, 1], got {value!r}")
        checked[key] = float(value)
    return checked


@dataclass(frozen=True)
class _Beam:
    path: TypePath
    node: TypeNode | None  # None once the beam has stopped at an inner node
    log_score: float

    @property
    def terminal(self) -> bool:
        return self.node is None or self.node.is_leaf


def type_entity_beamed(
    mention: EntityMention,
    taxonomy: Taxonomy,
    scorer: NodeScorer,
    config: BeamConfig | None = None,
) -> tuple[TypingResult, ...]:
    """Beam search from the root; results ranked by score, then by path.

    Beam scores are sums of log step scores with each step floored at
    SCORE_FLOOR. Terminal beams (leaves, scorer stops, or beams cut off at
    max_depth) stay in the pool and compete with live ones for the width.
    """
    config = config or BeamConfig()
    root_path = TypePath((taxonomy.root.label,))
    beams: list[_Beam] = [_Beam(root_path, taxonomy.root, 0.0)]
    allow_stop_policy = config.stop_policy == "scorer-may-stop"

    while True:
        live = [b for b in beams if not b.terminal and b.path.depth < config.max_depth]
        if not live:
            break
        pool: list[_Beam] = [b for b in beams if b.terminal or b.path.depth >= config.max_depth]
        for beam in live:
            assert beam.node is not None
            candidates = tuple(
                (child.label, beam.path.child(child.label)) for child in beam.node.children
            )
            scores = _checked_scores(
                scorer(mention, candidates, allow_stop_policy), candidates, allow_stop_policy
            )
            for child in beam.node.children:
                step = math.log(max(scores[child.label], SCORE_FLOOR))
                pool.append(
                    _Beam(beam.path.child(child.label), child, beam.log_score + step)
                )
            if allow_stop_policy and None in scores:
                step = math.log(max(scores[None], SCORE_FLOOR))
                pool.append(_Beam(beam.path, None, beam.log_score + step))
        pool.sort(key=lambda b: (-b.log_score, b.path))
        beams = pool[: config.beam_width]

    ranked = sorted(beams, key=lambda b: (-b.log_score, b.path))
    return tuple(
        TypingResult(leaf_path=b.path, closure=b.path.segments, score=b.log_score)
        for b in ranked
    )


def match_pattern(
    pattern: TypePattern,
    subject: TypingResult,
    obj: TypingResult,
    relation: str,
) -> bool:
    """True when a typed pair instantiates the pattern.

    Relations compare case-insensitively. Bare-label endpoint types match
    against the closure case-insensitively; path endpoint types must be a
    prefix of the leaf path.
    """
    if relation.casefold() != pattern.relation.casefold():
        return False
    return _endpoint_matches(pattern.subject_type, subject) and _endpoint_matches(
        pattern.object_type, obj
    )


def _endpoint_matches(wanted: str | TypePath, result: TypingResult) -> bool:
    if isinstance(wanted, TypePath):
        return result.leaf_path.starts_with(wanted)
    folded = wanted.casefold()
    return any(label.casefold() == folded for label in result.closure)


def parse_pattern_line(line: str) -> TypePattern:
    """One pattern per line: subject, relation, object, tab-separated.

    A ``$`` prefix marks a type position and is stripped; an endpoint
    containing the path separator is read as a full path.
    """
    parts = [p.strip() for p in line.split("\t")]
    if len(parts) != 3 or not all(parts):
        raise ConfigError(f"pattern line needs three tab-separated fields: {line!r}")

    def endpoint(text: str) -> str | TypePath:
        text = text.removeprefix("$")
        if " / " in text:
            return TypePath.parse(text)
        return text

    return TypePattern(subject_type=endpoint(parts[0]), relation=parts[1], object_type=endpoint(parts[2]))


def load_patterns(path: str | Path) -> tuple[TypePattern, ...]:
    patterns = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.strip() and not line.lstrip().startswith("#"):
            patterns.append(parse_pattern_line(line))
    return tuple(patterns)


STOP_KEY = "$stop"  # spelling of the stop option in scripted scorer files


@dataclass(frozen=True)
class ScorerRule:
    """Scores for the children of one parent, optionally mention-gated."""

    parent: str  # full path label of the parent node
    scores: Mapping[str | None, float]
    when: str | None = None  # substring of the mention sentence


class ScriptedScorer:
    """Deterministic scorer driven by per-parent rules.

    The first rule whose parent path matches (and whose ``when`` substring,
    if any, occurs in the sentence) supplies the scores; candidates the
    rule does not name get ``default_score``. With no matching rule every
    candidate scores ``default_score``, so the contract always holds.
    """

    def __init__(self, rules: Sequence[ScorerRule], default_score: float = 0.05) -> None:
        self.rules = list(rules)
        self.default_score = default_score

    @classmethod
    def from_file(cls, path: str | Path) -> ScriptedScorer:
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read scorer fixture {path}: {exc}") from exc
        if not isinstance(data, dict) or "rules" not in data:
            raise ConfigError(f"scorer fixture {path} must hold an object with a 'rules' array")
        rules = []
        for index, record in enumerate(data["rules"]):
            if not isinstance(record, dict) or "parent" not in record or "scores" not in record:
                raise ConfigError(f"rules[{index}] needs 'parent' and 'scores'")
            scores: dict[str | None, float] = {}
            for key, value in record["scores"].items():
                scores[None if key == STOP_KEY else key] = value
            rules.append(ScorerRule(parent=record["parent"], scores=scores, when=record.get("when")))
        return cls(rules, default_score=data.get("default_score", 0.05))

    def __call__(
        self,
        mention: EntityMention,
        candidates: Sequence[tuple[str, TypePath]],
        allow_stop: bool,
    ) -> ScoreMap:
        parent = str(candidates[0][1].parent()) if candidates else ""
        rule = next(
            (
                r
                for r in self.rules
                if r.parent == parent and (r.when is None or r.when in mention.sentence)
            ),
            None,
        )
        out: dict[str | None, float] = {}
        for label, _ in candidates:
            value = rule.scores.get(label, self.default_score) if rule else self.default_score
            out[label] = value
        if allow_stop and rule and None in rule.scores:
            out[None] = rule.scores[None]
        return out


class LlmScorer:
    """Scorer that asks a chat backend to rate the candidates.

    The response is sanitized into a contract-complete score map: missing
    candidates score 0, unknown keys are dropped, values are clamped to
    [0, 1]. Failures to parse fall back to a uniform distribution.
    """

    def __init__(self, backend: Backend, max_output_tokens: int = 512) -> None:
        self.backend = backend
        self.max_output_tokens = max_output_tokens

    def __call__(
        self,
        mention: EntityMention,
        candidates: Sequence[tuple[str, TypePath]],
        allow_stop: bool,
    ) -> ScoreMap:
        listing = "\n".join(f"- {label}" for label, _ in candidates)
        parent = str(candidates[0][1].parent()) if candidates else "(root)"
        stop_line = (
            f'You may also score "{STOP_KEY}" for stopping at the current type.\n'
            if allow_stop
            else ""
        )
        prompt = (
            f"Sentence: {mention.sentence}\n"
            f'Mention: "{mention.text}"\n\n'
            f"The mention is known to be of type {parent}. Rate how well each candidate "
            f"subtype fits, from 0 to 1:\n{listing}\n\n"
            f'{stop_line}Reply with one JSON object: {{"scores": {{"<candidate>": <number>}}}}.'
        )
        response = self.backend.complete(
            ChatRequest(prompt=prompt, max_output_tokens=self.max_output_tokens)
        )
        wanted = [label for label, _ in candidates]
        try:
            obj = extract_first_json(response.text)
            raw = obj.get("scores", {}) if isinstance(obj, dict) else {}
        except Exception:
            raw = {}
        out: dict[str | None, float] = {}
        for label in wanted:
            value = raw.get(label, 0.0)
            if not isinstance(value, (int, float)) or isinstance(value, bool):
                value = 0.0
            out[label] = min(1.0, max(0.0, float(value)))
        if allow_stop:
            stop_value = raw.get(STOP_KEY, 0.0)
            if isinstance(stop_value, (int, float)) and not isinstance(stop_value, bool):
                out[None] = min(1.0, max(0.0, float(stop_value)))
        if not any(out.values()):
            uniform = 1.0 / max(len(wanted), 1)
            out = {label: uniform for label in wanted}
            if allow_stop:
                out[None] = SCORE_FLOOR
        return out
