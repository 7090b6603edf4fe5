"""Shared fixtures: small trees transcribed from published curation examples."""

from __future__ import annotations

import json
from pathlib import Path

import pytest

from taxonomy_workbench import Taxonomy, branch

DATA_DIR = Path(__file__).parent / "data"


@pytest.fixture
def celestial_taxonomy() -> Taxonomy:
    """Object > Celestial body > Star > Sun."""
    return Taxonomy(
        root=branch("Object", branch("Celestial body", branch("Star", branch("Sun"))))
    )


@pytest.fixture
def deep_taxonomy() -> Taxonomy:
    """A depth-10 tree: occupations, eras, and geographic regions."""
    return Taxonomy(
        root=branch(
            "Entity",
            branch(
                "Object",
                branch(
                    "Physical Object",
                    branch(
                        "Living Beings",
                        branch(
                            "Humans",
                            branch(
                                "By Occupation",
                                branch(
                                    "Healthcare Professional",
                                    branch(
                                        "Doctors",
                                        branch(
                                            "General Practitioners",
                                            branch("Family Physicians"),
                                            branch("Emergency Medicine Doctors"),
                                        ),
                                        branch(
                                            "Specialists",
                                            branch("Surgeons"),
                                            branch("Physicians"),
                                        ),
                                    ),
                                ),
                            ),
                        ),
                    ),
                ),
            ),
            branch(
                "Time",
                branch(
                    "Absolute Time",
                    branch(
                        "Chronological",
                        branch(
                            "Eras",
                            branch("Prehistoric"),
                            branch("Ancient"),
                            branch("Medieval"),
                        ),
                    ),
                ),
            ),
            branch(
                "Location",
                branch(
                    "Geographic Location",
                    branch(
                        "Natural Features",
                        branch(
                            "Water Bodies",
                            branch(
                                "Seas",
                                branch(
                                    "Inland Seas",
                                    branch("Brackish", branch("Estuarine")),
                                    branch("Saline", branch("Hypersaline")),
                                ),
                            ),
                        ),
                    ),
                    branch(
                        "Administrative Regions",
                        branch("Africa"),
                        branch("Asia"),
                        branch("Europe", branch("Albania"), branch("Andorra")),
                        branch("North America"),
                        branch("South America"),
                        branch("Oceania"),
                        branch("Antarctica"),
                    ),
                ),
            ),
        )
    )


@pytest.fixture
def technology_taxonomy() -> Taxonomy:
    """The chain whose full-path label names a duplicated term unambiguously."""
    return Taxonomy(
        root=branch(
            "Entity",
            branch(
                "Object",
                branch(
                    "Physical Object",
                    branch(
                        "Non-living Beings",
                        branch(
                            "Artificial objects",
                            branch("Infrastructure", branch("Technology")),
                        ),
                    ),
                ),
            ),
            branch("Subject", branch("Professional Occupations", branch("Technology"))),
        )
    )


@pytest.fixture
def repetition_taxonomy() -> Taxonomy:
    """Continents next to per-continent country categories: mirrored vocabulary."""
    return Taxonomy(
        root=branch(
            "Entity",
            branch(
                "Location",
                branch(
                    "Geographic",
                    branch(
                        "Administrative Regions",
                        branch(
                            "Continents",
                            branch("Africa"),
                            branch("Antarctica"),
                            branch("Asia"),
                            branch("Europe"),
                            branch("North America"),
                            branch("South America"),
                            branch("Oceania"),
                        ),
                        branch(
                            "Countries --- By Continent",
                            branch("African Countries"),
                            branch("Antarctic Countries"),
                            branch("Asian Countries"),
                            branch("European Countries"),
                            branch("North American Countries"),
                            branch("South American Countries"),
                            branch("Oceanian Countries"),
                        ),
                    ),
                ),
            ),
        )
    )


@pytest.fixture
def vocab_sample_path() -> Path:
    return DATA_DIR / "ultrafine_sample.txt"


SESSION_STEPS: list[tuple[str, list[str]]] = [
    ("Entity / Object", ["Physical Object"]),
    ("Entity / Object / Physical Object", ["Living Beings", "Non-living Beings"]),
    ("Entity / Organization", ["Commercial", "Governmental", "Educational", "Non-Profit"]),
    ("Entity / Organization / Governmental", ["Schools", "Research Institutions"]),
    ("Entity / Organization / Governmental / Schools", ["Primary", "Secondary", "Tertiary"]),
    (
        "Entity / Organization / Governmental / Research Institutions",
        ["Government-Funded", "Private", "Corporate"],
    ),
    ("Entity / Subject", ["Academic Subject", "Idea"]),
    ("Entity / Subject / Academic Subject", ["Sciences", "Artistic Subject", "Professional"]),
    (
        "Entity / Subject / Academic Subject / Artistic Subject",
        ["Visual Arts", "Performing Arts", "Literary Arts"],
    ),
    ("Entity / Subject / Idea", ["Philosophy", "Religion", "Concept"]),
    (
        "Entity / Subject / Idea / Religion",
        ["World Religions", "Indigenous Religions", "New Religious Movements"],
    ),
    ("Entity / Time", ["Absolute Time"]),
]


def session_fixture_lines() -> list[str]:
    """Scripted-backend JSONL for the 12-step growth session.

    Every step expands a node that is a leaf at that point, so the reply
    branch is just the target label with its new children.
    """
    lines = []
    for path, children in SESSION_STEPS:
        label = path.rsplit(" / ", 1)[-1]
        branch_obj = {
            "label": label,
            "children": [{"label": c, "children": []} for c in children],
        }
        lines.append(
            json.dumps(
                {"match": f'"{path}"', "response": json.dumps(branch_obj)},
                ensure_ascii=False,
            )
        )
    return lines


@pytest.fixture
def session_script_paths(tmp_path: Path) -> tuple[Path, Path]:
    """(fixture JSONL for the backend, request JSONL for the session)."""
    fixture_path = tmp_path / "session_fixture.jsonl"
    fixture_path.write_text("\n".join(session_fixture_lines()) + "\n", encoding="utf-8")
    request_lines = [
        json.dumps({"mode": "expand-subtree", "path": path}) for path, _ in SESSION_STEPS
    ]
    script_path = tmp_path / "session_script.jsonl"
    script_path.write_text("\n".join(request_lines) + "\n", encoding="utf-8")
    return fixture_path, script_path
