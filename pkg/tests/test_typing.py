import math
import random

import pytest

from taxonomy_workbench import (
    BeamConfig,
    EntityMention,
    FixtureStep,
    ScriptedBackend,
    ScriptedScorer,
    Taxonomy,
    TypePath,
    TypePattern,
    TypingResult,
    branch,
    closure_labels,
    load_patterns,
    match_pattern,
    type_entity_beamed,
)
from taxonomy_workbench.errors import ConfigError, PathNotFoundError, ScorerContractError
from taxonomy_workbench.typing_engine import LlmScorer, ScorerRule, parse_pattern_line

from helpers import brute_force_best, make_hash_scorer, random_taxonomy

MENTION = EntityMention("The Sun rose over the sea.", 4, 7)


def uniform_scorer(mention, candidates, allow_stop):
    return {label: 0.5 for label, _ in candidates}


# ---------------------------------------------------------------- mentions


def test_mention_text_is_the_span():
    assert MENTION.text == "Sun"


@pytest.mark.parametrize("start, end", [(-1, 3), (3, 3), (5, 2), (0, 999)])
def test_mention_rejects_bad_spans(start, end):
    with pytest.raises(ConfigError):
        EntityMention("short sentence", start, end)


# ---------------------------------------------------------------- closure


def test_closure_is_every_ancestor_plus_leaf(celestial_taxonomy):
    path = TypePath.parse("Object / Celestial body / Star / Sun")
    assert closure_labels(celestial_taxonomy, path) == (
        "Object",
        "Celestial body",
        "Star",
        "Sun",
    )


def test_closure_requires_a_real_path(celestial_taxonomy):
    with pytest.raises(PathNotFoundError):
        closure_labels(celestial_taxonomy, TypePath.parse("Object / Moon"))


# ---------------------------------------------------------------- beam search


@pytest.fixture
def trap_taxonomy():
    """Greedy-at-the-root is wrong: A looks best but leads to weak leaves."""
    return Taxonomy(
        root=branch(
            "Root",
            branch("A", branch("A1"), branch("A2")),
            branch("B", branch("B1"), branch("B2")),
        )
    )


TRAP_RULES = [
    ScorerRule(parent="Root", scores={"A": 0.9, "B": 0.8}),
    ScorerRule(parent="Root / A", scores={"A1": 0.1, "A2": 0.05}),
    ScorerRule(parent="Root / B", scores={"B1": 0.9, "B2": 0.2}),
]


def test_wider_beam_escapes_the_greedy_trap(trap_taxonomy):
    scorer = ScriptedScorer(TRAP_RULES)
    narrow = type_entity_beamed(MENTION, trap_taxonomy, scorer, BeamConfig(beam_width=1))
    wide = type_entity_beamed(MENTION, trap_taxonomy, scorer, BeamConfig(beam_width=2))
    assert str(narrow[0].leaf_path) == "Root / A / A1"
    assert str(wide[0].leaf_path) == "Root / B / B1"
    assert wide[0].score == pytest.approx(math.log(0.8) + math.log(0.9))
    assert wide[0].closure == ("Root", "B", "B1")


def test_results_are_ranked_score_then_path(trap_taxonomy):
    results = type_entity_beamed(
        MENTION, trap_taxonomy, ScriptedScorer(TRAP_RULES), BeamConfig(beam_width=4)
    )
    scores = [r.score for r in results]
    assert scores == sorted(scores, reverse=True)
    assert len(results) == 4


def test_ties_break_lexicographically(trap_taxonomy):
    results = type_entity_beamed(MENTION, trap_taxonomy, uniform_scorer, BeamConfig(beam_width=4))
    assert [str(r.leaf_path) for r in results] == [
        "Root / A / A1",
        "Root / A / A2",
        "Root / B / B1",
        "Root / B / B2",
    ]


def test_max_depth_cuts_the_walk(celestial_taxonomy):
    results = type_entity_beamed(
        MENTION, celestial_taxonomy, uniform_scorer, BeamConfig(beam_width=1, max_depth=2)
    )
    assert str(results[0].leaf_path) == "Object / Celestial body"


def test_zero_scores_hit_the_floor_instead_of_crashing(trap_taxonomy):
    def zeroes(mention, candidates, allow_stop):
        return {label: 0.0 for label, _ in candidates}

    results = type_entity_beamed(MENTION, trap_taxonomy, zeroes, BeamConfig(beam_width=1))
    assert results[0].score == pytest.approx(2 * math.log(1e-9))


def test_scorer_may_stop_keeps_inner_nodes(trap_taxonomy):
    rules = [
        ScorerRule(parent="Root", scores={"A": 0.9, "B": 0.1}),
        ScorerRule(parent="Root / A", scores={"A1": 0.1, "A2": 0.1, None: 0.95}),
    ]
    scorer = ScriptedScorer(rules)
    results = type_entity_beamed(
        MENTION, trap_taxonomy, scorer, BeamConfig(beam_width=2, stop_policy="scorer-may-stop")
    )
    assert str(results[0].leaf_path) == "Root / A"
    assert results[0].closure == ("Root", "A")
    assert results[0].score == pytest.approx(math.log(0.9) + math.log(0.95))


def test_leaf_only_never_passes_stop_permission(trap_taxonomy):
    seen = []

    def recording(mention, candidates, allow_stop):
        seen.append(allow_stop)
        return {label: 0.5 for label, _ in candidates}

    type_entity_beamed(MENTION, trap_taxonomy, recording, BeamConfig(beam_width=4))
    assert seen and not any(seen)


# ---------------------------------------------------------------- contract


def test_scorer_contract_stop_without_permission(trap_taxonomy):
    def stopper(mention, candidates, allow_stop):
        out = {label: 0.5 for label, _ in candidates}
        out[None] = 0.5
        return out

    with pytest.raises(ScorerContractError, match="stop"):
        type_entity_beamed(MENTION, trap_taxonomy, stopper, BeamConfig(beam_width=1))


def test_scorer_contract_missing_and_extra_candidates(trap_taxonomy):
    def partial(mention, candidates, allow_stop):
        label = candidates[0][0]
        return {label: 0.5}

    with pytest.raises(ScorerContractError, match="missing"):
        type_entity_beamed(MENTION, trap_taxonomy, partial, BeamConfig(beam_width=1))

    def chatty(mention, candidates, allow_stop):
        out = {label: 0.5 for label, _ in candidates}
        out["Imaginary"] = 0.5
        return out

    with pytest.raises(ScorerContractError, match="unexpected"):
        type_entity_beamed(MENTION, trap_taxonomy, chatty, BeamConfig(beam_width=1))


@pytest.mark.parametrize("value", [1.5, -0.1, True, "high"])
def test_scorer_contract_value_range(trap_taxonomy, value):
    def weird(mention, candidates, allow_stop):
        out = {label: 0.5 for label, _ in candidates}
        out[candidates[0][0]] = value
        return out

    with pytest.raises(ScorerContractError, match="must be a number"):
        type_entity_beamed(MENTION, trap_taxonomy, weird, BeamConfig(beam_width=1))


def test_beam_config_validation():
    with pytest.raises(ConfigError):
        BeamConfig(beam_width=0)
    with pytest.raises(ConfigError):
        BeamConfig(max_depth=0)
    with pytest.raises(ConfigError):
        BeamConfig(stop_policy="sometimes")


# ---------------------------------------------------------------- oracle spot checks


def test_full_width_beam_matches_brute_force_on_random_trees():
    rng = random.Random(21)
    for trial in range(25):
        taxonomy = random_taxonomy(rng, max_nodes=40)
        scorer = make_hash_scorer(f"trial-{trial}")
        expected = brute_force_best(taxonomy, scorer, MENTION)
        width = len(expected)
        got = type_entity_beamed(MENTION, taxonomy, scorer, BeamConfig(beam_width=width))
        assert str(got[0].leaf_path) == " / ".join(expected[0][1])
        assert got[0].score == pytest.approx(expected[0][0], abs=1e-9)


# ---------------------------------------------------------------- patterns


def _result(path: str) -> TypingResult:
    p = TypePath.parse(path)
    return TypingResult(leaf_path=p, closure=p.segments, score=None)


def test_match_pattern_bare_labels_match_closure():
    pattern = TypePattern(subject_type="star", relation="orbits", object_type="Star")
    sun = _result("Object / Celestial body / Star / Sun")
    assert match_pattern(pattern, sun, sun, "ORBITS")
    assert not match_pattern(pattern, sun, sun, "contains")
    assert not match_pattern(
        pattern, _result("Object / Rock"), sun, "orbits"
    )


def test_match_pattern_path_endpoints_are_prefixes():
    pattern = TypePattern(
        subject_type=TypePath.parse("Object / Celestial body"),
        relation="orbits",
        object_type="object",
    )
    sun = _result("Object / Celestial body / Star / Sun")
    assert match_pattern(pattern, sun, sun, "orbits")
    rock = _result("Object / Rock")
    assert not match_pattern(pattern, rock, sun, "orbits")


def test_parse_pattern_line_forms():
    p = parse_pattern_line("$Person\tworks_at\t$Organization")
    assert p == TypePattern("Person", "works_at", "Organization")
    q = parse_pattern_line("Object / Celestial body\torbits\t$Star")
    assert q.subject_type == TypePath.parse("Object / Celestial body")
    with pytest.raises(ConfigError):
        parse_pattern_line("only two\tfields")
    with pytest.raises(ConfigError):
        parse_pattern_line("a\t\tc")


def test_load_patterns_skips_comments(tmp_path):
    path = tmp_path / "patterns.tsv"
    path.write_text(
        "# header\n$Person\tworks_at\t$Organization\n\n$Star\tlights\t$Planet\n",
        encoding="utf-8",
    )
    patterns = load_patterns(path)
    assert len(patterns) == 2
    assert patterns[1].relation == "lights"


# ---------------------------------------------------------------- scripted scorer


def test_scripted_scorer_from_file(tmp_path):
    path = tmp_path / "scorer.json"
    path.write_text(
        """
        {
          "default_score": 0.2,
          "rules": [
            {"parent": "Root", "scores": {"A": 0.9}, "when": "Sun"},
            {"parent": "Root / A", "scores": {"A1": 0.7, "$stop": 0.4}}
          ]
        }
        """,
        encoding="utf-8",
    )
    scorer = ScriptedScorer.from_file(path)
    assert scorer.default_score == 0.2
    assert scorer.rules[0].when == "Sun"
    assert scorer.rules[1].scores[None] == 0.4

    candidates = (("A", TypePath.parse("Root / A")), ("B", TypePath.parse("Root / B")))
    assert scorer(MENTION, candidates, False) == {"A": 0.9, "B": 0.2}
    # when-gate fails: the rule is skipped and defaults apply
    other = EntityMention("A moon instead.", 2, 6)
    assert scorer(other, candidates, False) == {"A": 0.2, "B": 0.2}

    inner = (("A1", TypePath.parse("Root / A / A1")),)
    assert scorer(MENTION, inner, True) == {"A1": 0.7, None: 0.4}
    assert scorer(MENTION, inner, False) == {"A1": 0.7}


def test_scripted_scorer_file_validation(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"rules": [{"parent": "Root"}]}', encoding="utf-8")
    with pytest.raises(ConfigError, match="'parent' and 'scores'"):
        ScriptedScorer.from_file(bad)
    bad.write_text("[]", encoding="utf-8")
    with pytest.raises(ConfigError, match="'rules' array"):
        ScriptedScorer.from_file(bad)


# ---------------------------------------------------------------- llm scorer


def test_llm_scorer_sanitizes_the_reply():
    backend = ScriptedBackend(
        steps=(
            FixtureStep(
                response='{"scores": {"A": 1.7, "B": -3, "Ghost": 0.5}}', match="Rate"
            ),
        )
    )
    scorer = LlmScorer(backend)
    candidates = (
        ("A", TypePath.parse("Root / A")),
        ("B", TypePath.parse("Root / B")),
        ("C", TypePath.parse("Root / C")),
    )
    scores = scorer(MENTION, candidates, False)
    assert scores == {"A": 1.0, "B": 0.0, "C": 0.0}
    prompt = backend.call_history[0].prompt
    assert "- A" in prompt and "- C" in prompt and '"Sun"' in prompt


def test_llm_scorer_falls_back_to_uniform_on_garbage():
    backend = ScriptedBackend(steps=(FixtureStep(response="no scores here", match=""),))
    scores = LlmScorer(backend)(
        MENTION,
        (("A", TypePath.parse("Root / A")), ("B", TypePath.parse("Root / B"))),
        False,
    )
    assert scores == {"A": 0.5, "B": 0.5}
