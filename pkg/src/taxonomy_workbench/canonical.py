"""Canonical JSON persistence for taxonomies.

The canonical form is fixed so that equal taxonomies always serialize to
identical bytes: format header first, fixed key order with "label" before
"children", two-space indentation, UTF-8, and a single trailing newline.
Loading accepts any JSON that matches the documented schemas; saving
always emits the canonical form, so save(load(save(t))) is a fixed point.
"""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path
from typing import Any

from .errors import SchemaError
from .tree import Taxonomy, TypeNode

FORMAT_VERSION = 1

_DOCUMENT_KEYS = {"format_version", "version", "name", "created_at", "root"}
_BRANCH_KEYS = {"label", "children"}


def branch_to_obj(node: TypeNode) -> dict[str, Any]:
    """Plain-dict form of a branch, with the canonical key order."""
    return {
        "label": node.label,
        "children": [branch_to_obj(child) for child in node.children],
    }


def branch_from_obj(obj: Any, at: str = "$") -> TypeNode:
    """Validate and build a branch from its plain-dict form.

    Rejections carry the position of the offending value. "children" may
    be omitted, which reads as a leaf; any other deviation from
    ``{"label": str, "children": [...]}`` is an error.
    """
    if not isinstance(obj, dict):
        raise SchemaError(f"expected an object, got {type(obj).__name__}", at=at)
    unknown = set(obj) - _BRANCH_KEYS
    if unknown:
        raise SchemaError(f"unexpected keys {sorted(unknown)}", at=at)
    if "label" not in obj:
        raise SchemaError("missing required key 'label'", at=at)
    label = obj["label"]
    if not isinstance(label, str):
        raise SchemaError(f"'label' must be a string, got {type(label).__name__}", at=at)
    raw_children = obj.get("children", [])
    if not isinstance(raw_children, list):
        raise SchemaError(
            f"'children' must be an array, got {type(raw_children).__name__}", at=at
        )
    children = tuple(
        branch_from_obj(child, at=f"{at}.children[{index}]")
        for index, child in enumerate(raw_children)
    )
    return TypeNode(label, children)


def branch_to_json(node: TypeNode) -> str:
    """Canonical JSON text for a single branch (no trailing newline)."""
    return json.dumps(branch_to_obj(node), indent=2, ensure_ascii=False)


def document_obj(taxonomy: Taxonomy, name: str | None = None, created_at: str | None = None) -> dict[str, Any]:
    obj: dict[str, Any] = {"format_version": FORMAT_VERSION, "version": taxonomy.version}
    if name is not None:
        obj["name"] = name
    if created_at is not None:
        obj["created_at"] = created_at
    obj["root"] = branch_to_obj(taxonomy.root)
    return obj


def document_bytes(taxonomy: Taxonomy, name: str | None = None, created_at: str | None = None) -> bytes:
    """The canonical on-disk form: header, document, trailing newline."""
    text = json.dumps(document_obj(taxonomy, name, created_at), indent=2, ensure_ascii=False)
    return (text + "\n").encode("utf-8")


def _taxonomy_from_label_map(obj: dict[str, Any]) -> Taxonomy:
    """Import the label-keyed map form: ``{"Entity": {"Object": {...}}}``."""

    def convert(label: Any, value: Any, at: str) -> TypeNode:
        if not isinstance(label, str):
            raise SchemaError(f"label keys must be strings, got {type(label).__name__}", at=at)
        if not isinstance(value, dict):
            raise SchemaError(
                f"children of {label!r} must be an object, got {type(value).__name__}", at=at
            )
        children = tuple(
            convert(key, child, f"{at}.{key}") for key, child in value.items()
        )
        return TypeNode(label, children)

    (root_label, root_value), = obj.items()
    return Taxonomy(root=convert(root_label, root_value, f"$.{root_label}"), version=1)


def taxonomy_from_obj(obj: Any) -> Taxonomy:
    """Build a taxonomy from any of the accepted JSON shapes.

    Accepted shapes: the canonical document, a bare branch object, or a
    label-keyed map. Anything else fails loudly with its position.
    """
    if not isinstance(obj, dict):
        raise SchemaError(f"expected an object at the top level, got {type(obj).__name__}")
    if "format_version" in obj:
        if obj["format_version"] != FORMAT_VERSION:
            raise SchemaError(f"unsupported format_version {obj['format_version']!r}")
        unknown = set(obj) - _DOCUMENT_KEYS
        if unknown:
            raise SchemaError(f"unexpected keys {sorted(unknown)}")
        if "root" not in obj:
            raise SchemaError("missing required key 'root'")
        version = obj.get("version", 1)
        if not isinstance(version, int) or isinstance(version, bool) or version < 1:
            raise SchemaError(f"'version' must be a positive integer, got {version!r}")
        return Taxonomy(root=branch_from_obj(obj["root"], at="$.root"), version=version)
    if "label" in obj:
        return Taxonomy(root=branch_from_obj(obj), version=1)
    if len(obj) == 1 and isinstance(next(iter(obj.values())), dict):
        return _taxonomy_from_label_map(obj)
    raise SchemaError("unrecognized taxonomy shape; expected a canonical document, a branch object, or a label-keyed map")


def loads(data: bytes | str) -> Taxonomy:
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        obj = json.loads(data)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON: {exc}") from exc
    return taxonomy_from_obj(obj)


def load_taxonomy(source: str | Path) -> Taxonomy:
    return loads(Path(source).read_bytes())


def save_taxonomy(taxonomy: Taxonomy, destination: str | Path, name: str | None = None) -> None:
    """Write the canonical document atomically (temp file, then rename).

    A crash mid-write can leave a stray temp file but never a truncated
    destination.
    """
    destination = Path(destination)
    data = document_bytes(taxonomy, name=name)
    fd, tmp_name = tempfile.mkstemp(
        prefix=destination.name + ".", suffix=".tmp", dir=destination.parent or Path(".")
    )
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(data)
            handle.flush()
            os.fsync(handle.fileno())
        os.replace(tmp_name, destination)
    except BaseException:
        try:
            os.unlink(tmp_name)
        except OSError:
            pass
        raise
