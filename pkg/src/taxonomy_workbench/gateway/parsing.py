"""Strict parsing of model responses.

Model output is untrusted text: these helpers pull the first balanced
JSON object out of whatever prose or code fencing surrounds it, then
validate it against the expected schema. Anything that does not validate
raises; silent repair is limited to whitespace trimming and aligning the
case of the expected root label.
"""

from __future__ import annotations

import json

from ..canonical import branch_from_obj
from ..errors import NoJsonFoundError, ResponseRootMismatchError, SchemaError
from ..tree import TypeNode, TypePath

_DECODER = json.JSONDecoder()


def extract_first_json(text: str) -> object:
    """The first balanced top-level JSON object found in free-form text."""
    index = text.find("{")
    while index != -1:
        try:
            value, _ = _DECODER.raw_decode(text, index)
        except json.JSONDecodeError:
            index = text.find("{", index + 1)
            continue
        return value
    raise NoJsonFoundError("no JSON object found in response")


def _with_root_label(node: TypeNode, label: str) -> TypeNode:
    if node.label == label:
        return node
    return TypeNode(label, node.children)


def parse_branch_response(text: str, expected_root: str) -> TypeNode:
    """Parse a replacement branch out of a model response.

    The branch root must equal ``expected_root`` up to case; the expected
    casing wins so the branch keeps the identity of the node it replaces.
    """
    obj = extract_first_json(text)
    branch = branch_from_obj(obj, at="$")
    if branch.label.casefold() != expected_root.casefold():
        raise ResponseRootMismatchError(
            f"branch is rooted at {branch.label!r}, expected {expected_root!r}"
        )
    return _with_root_label(branch, expected_root)


def parse_placement_response(text: str) -> tuple[TypePath, TypeNode]:
    """Parse an insertion response: a placement path plus its rewritten branch.

    The returned branch root is aligned to the final segment of the
    placement path (which must agree with it up to case).
    """
    obj = extract_first_json(text)
    if not isinstance(obj, dict):
        raise SchemaError(f"expected an object, got {type(obj).__name__}")
    unknown = set(obj) - {"placement_path", "branch"}
    if unknown:
        raise SchemaError(f"unexpected keys {sorted(unknown)}")
    if "placement_path" not in obj or "branch" not in obj:
        raise SchemaError("placement response needs 'placement_path' and 'branch'")
    raw_path = obj["placement_path"]
    if not isinstance(raw_path, str):
        raise SchemaError(f"'placement_path' must be a string, got {type(raw_path).__name__}")
    path = TypePath.parse(raw_path)
    branch = branch_from_obj(obj["branch"], at="$.branch")
    if branch.label.casefold() != path.label.casefold():
        raise ResponseRootMismatchError(
            f"branch is rooted at {branch.label!r}, expected {path.label!r} from the placement path"
        )
    return path, _with_root_label(branch, path.label)


def align_placement(path: TypePath, canonical: TypePath, branch: TypeNode) -> tuple[TypePath, TypeNode]:
    """Rewrite a parsed placement onto the taxonomy's own casing."""
    del path  # the canonical path fully determines the result
    return canonical, _with_root_label(branch, canonical.label)


__all__ = [
    "extract_first_json",
    "parse_branch_response",
    "parse_placement_response",
    "align_placement",
]
