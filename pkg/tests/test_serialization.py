import json
import os
import random

import pytest

from taxonomy_workbench import Taxonomy, branch
from taxonomy_workbench.canonical import (
    FORMAT_VERSION,
    branch_from_obj,
    branch_to_json,
    branch_to_obj,
    document_bytes,
    load_taxonomy,
    loads,
    save_taxonomy,
    taxonomy_from_obj,
)
from taxonomy_workbench.errors import SchemaError

from helpers import random_taxonomy

EXPECTED_CELESTIAL = """\
{
  "format_version": 1,
  "version": 1,
  "root": {
    "label": "Object",
    "children": [
      {
        "label": "Celestial body",
        "children": [
          {
            "label": "Star",
            "children": [
              {
                "label": "Sun",
                "children": []
              }
            ]
          }
        ]
      }
    ]
  }
}
"""


def test_canonical_bytes_are_frozen(celestial_taxonomy):
    assert document_bytes(celestial_taxonomy) == EXPECTED_CELESTIAL.encode("utf-8")


def test_branch_json_has_label_before_children():
    text = branch_to_json(branch("A", branch("B")))
    assert text.index('"label"') < text.index('"children"')
    assert not text.endswith("\n")


def test_document_optional_fields_in_order(celestial_taxonomy):
    data = document_bytes(celestial_taxonomy, name="night sky")
    obj = json.loads(data)
    assert list(obj) == ["format_version", "version", "name", "root"]
    assert obj["format_version"] == FORMAT_VERSION


def test_non_ascii_labels_stay_readable():
    t = Taxonomy(root=branch("Éntité", branch("Grün")))
    data = document_bytes(t)
    assert "Éntité".encode("utf-8") in data
    assert loads(data).root.label == "Éntité"


def test_round_trip_on_random_trees():
    rng = random.Random(3)
    for _ in range(60):
        t = random_taxonomy(rng, max_nodes=90)
        assert loads(document_bytes(t)) == t


def test_save_load_save_fixed_point(tmp_path):
    rng = random.Random(5)
    for index in range(25):
        t = random_taxonomy(rng, max_nodes=60)
        first = tmp_path / f"a{index}.json"
        second = tmp_path / f"b{index}.json"
        save_taxonomy(t, first)
        save_taxonomy(load_taxonomy(first), second)
        assert first.read_bytes() == second.read_bytes()


# ---------------------------------------------------------------- accepted shapes


def test_load_bare_branch_defaults_version_to_one():
    t = loads('{"label": "Entity", "children": [{"label": "X"}]}')
    assert t.version == 1
    assert t.root.children[0].label == "X"


def test_load_label_keyed_map():
    t = loads('{"Entity": {"Object": {"Star": {}}, "Time": {}}}')
    assert [c.label for c in t.root.children] == ["Object", "Time"]
    assert t.root.children[0].children[0].label == "Star"


def test_label_keyed_map_converts_to_same_canonical_form():
    mapped = loads('{"Entity": {"Object": {}}}')
    canonical = loads('{"format_version": 1, "version": 1, "root": {"label": "Entity", "children": [{"label": "Object", "children": []}]}}')
    assert document_bytes(mapped) == document_bytes(canonical)


def test_children_key_is_optional():
    node = branch_from_obj({"label": "Leaf"})
    assert node.is_leaf


# ---------------------------------------------------------------- rejection


def test_reject_unknown_document_keys():
    with pytest.raises(SchemaError):
        taxonomy_from_obj({"format_version": 1, "version": 1, "root": {"label": "A"}, "extra": 1})


def test_reject_unsupported_format_version():
    with pytest.raises(SchemaError, match="format_version"):
        taxonomy_from_obj({"format_version": 99, "root": {"label": "A"}})


def test_reject_bad_version():
    for bad in (0, -1, "1", True):
        with pytest.raises(SchemaError):
            taxonomy_from_obj({"format_version": 1, "version": bad, "root": {"label": "A"}})


def test_schema_errors_carry_position():
    with pytest.raises(SchemaError) as info:
        branch_from_obj({"label": "A", "children": [{"label": "B"}, {"children": []}]})
    assert "children[1]" in str(info.value)


def test_reject_non_object_top_level():
    with pytest.raises(SchemaError):
        loads("[1, 2]")


def test_reject_invalid_json():
    with pytest.raises(SchemaError, match="invalid JSON"):
        loads("{nope")


def test_reject_unrecognized_shape():
    with pytest.raises(SchemaError, match="unrecognized"):
        taxonomy_from_obj({"a": 1, "b": 2})


# ---------------------------------------------------------------- atomicity


def test_save_is_atomic_when_rename_fails(tmp_path, monkeypatch):
    target = tmp_path / "t.json"
    original = Taxonomy(root=branch("Entity", branch("Object")))
    save_taxonomy(original, target)
    before = target.read_bytes()

    def exploding_replace(src, dst):
        raise OSError("simulated crash at rename")

    monkeypatch.setattr(os, "replace", exploding_replace)
    with pytest.raises(OSError, match="simulated"):
        save_taxonomy(Taxonomy(root=branch("Entity", branch("Time"))), target)
    monkeypatch.undo()

    assert target.read_bytes() == before  # old content intact
    assert list(tmp_path.glob("*.tmp")) == []  # no temp litter


def test_save_creates_parent_relative_file(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    save_taxonomy(Taxonomy(root=branch("A")), "plain.json")
    assert load_taxonomy("plain.json").root.label == "A"
