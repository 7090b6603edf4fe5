"""Starter taxonomies."""

from __future__ import annotations

from .tree import Taxonomy, TypeNode

DEFAULT_ROOT = "Entity"

# The default seed: one root over the seven broad top-level categories.
DEFAULT_TOP_LEVEL = (
    "Object",
    "Time",
    "Location",
    "Organization",
    "Event",
    "Action",
    "Subject",
)


def default_seed() -> Taxonomy:
    children = tuple(TypeNode(label) for label in DEFAULT_TOP_LEVEL)
    return Taxonomy(root=TypeNode(DEFAULT_ROOT, children), version=1)
