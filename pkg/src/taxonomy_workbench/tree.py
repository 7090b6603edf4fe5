"""Immutable taxonomy tree: nodes, paths, and the structural operations.

A taxonomy is an ordered rooted tree of labeled type nodes. Values are
frozen: every mutation builds a new tree that shares untouched branches
with the old one and bumps the version by exactly one. Node identity is
the root-to-node label path, which is unique because sibling labels are
unique within each children sequence.
"""

from __future__ import annotations

from collections import Counter, deque
from collections.abc import Iterator, Mapping
from dataclasses import dataclass

from .errors import (
    BudgetTooSmallError,
    DuplicateSiblingError,
    InvalidLabelError,
    PathNotFoundError,
    RootLabelMismatchError,
)
from .labels import PATH_SEPARATOR, clean_label


@dataclass(frozen=True, order=True)
class TypePath:
    """Root-to-node label sequence; the unambiguous identity of a type.

    Paths order lexicographically by their segments, which gives every
    consumer (beam ties, report ordering) the same deterministic sort.
    """

    segments: tuple[str, ...]

    def __post_init__(self) -> None:
        if not isinstance(self.segments, tuple):
            object.__setattr__(self, "segments", tuple(self.segments))
        if not self.segments:
            raise InvalidLabelError("a path needs at least one segment")
        object.__setattr__(self, "segments", tuple(clean_label(s) for s in self.segments))

    @classmethod
    def parse(cls, text: str) -> TypePath:
        """Parse a path from its joined string form, e.g. ``"A / B / C"``."""
        return cls(tuple(text.split(PATH_SEPARATOR)))

    @classmethod
    def of(cls, *segments: str) -> TypePath:
        return cls(tuple(segments))

    def __str__(self) -> str:
        return PATH_SEPARATOR.join(self.segments)

    @property
    def label(self) -> str:
        """The final segment: the label of the node this path names."""
        return self.segments[-1]

    @property
    def depth(self) -> int:
        return len(self.segments)

    def parent(self) -> TypePath | None:
        if len(self.segments) == 1:
            return None
        return TypePath(self.segments[:-1])

    def child(self, label: str) -> TypePath:
        return TypePath(self.segments + (clean_label(label),))

    def starts_with(self, other: TypePath) -> bool:
        return self.segments[: len(other.segments)] == other.segments

    def overlaps(self, other: TypePath) -> bool:
        """True when one path is a prefix of the other (shared subtree)."""
        return self.starts_with(other) or other.starts_with(self)


@dataclass(frozen=True)
class TypeNode:
    """One type in the taxonomy: a label plus an ordered children tuple."""

    label: str
    children: tuple[TypeNode, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "label", clean_label(self.label))
        if not isinstance(self.children, tuple):
            object.__setattr__(self, "children", tuple(self.children))
        seen: set[str] = set()
        for child in self.children:
            if child.label in seen:
                raise DuplicateSiblingError(self.label, child.label)
            seen.add(child.label)

    @property
    def is_leaf(self) -> bool:
        return not self.children

    def child(self, label: str) -> TypeNode | None:
        for candidate in self.children:
            if candidate.label == label:
                return candidate
        return None


def branch(label: str, *children: TypeNode) -> TypeNode:
    """Terse builder for fixtures: ``branch("A", branch("B"), branch("C"))``."""
    return TypeNode(label, tuple(children))


@dataclass(frozen=True)
class Taxonomy:
    """A root node plus a version counter that advances on every mutation."""

    root: TypeNode
    version: int = 1


@dataclass(frozen=True)
class TaxonomyStats:
    node_count: int
    max_depth: int
    leaf_count: int
    duplicate_label_count: int
    per_depth_counts: Mapping[int, int]


def create_taxonomy(root_label: str) -> Taxonomy:
    return Taxonomy(root=TypeNode(root_label), version=1)


def iter_nodes(root: TypeNode, base: TypePath | None = None) -> Iterator[tuple[TypePath, TypeNode]]:
    """Yield (path, node) pairs in document order (preorder), iteratively.

    Iterative so that pathologically deep trees cannot exhaust the
    interpreter stack.
    """
    start = base if base is not None else TypePath((root.label,))
    stack: list[tuple[TypePath, TypeNode]] = [(start, root)]
    while stack:
        path, node = stack.pop()
        yield path, node
        for child in reversed(node.children):
            stack.append((path.child(child.label), child))


def resolve(taxonomy: Taxonomy, path: TypePath) -> TypeNode:
    """Return the node a path names, or raise with the longest resolvable prefix."""
    segments = path.segments
    if segments[0] != taxonomy.root.label:
        raise PathNotFoundError(path, resolved_prefix=())
    node = taxonomy.root
    for index, segment in enumerate(segments[1:], start=1):
        child = node.child(segment)
        if child is None:
            raise PathNotFoundError(path, resolved_prefix=segments[:index])
        node = child
    return node


def ancestors(taxonomy: Taxonomy, path: TypePath) -> tuple[str, ...]:
    """Labels of the strict ancestors of a node, root first."""
    resolve(taxonomy, path)
    return path.segments[:-1]


def full_path_label(path: TypePath) -> str:
    """Join a path into its single display string with ``" / "``."""
    return str(path)


def parse_path(text: str) -> TypePath:
    return TypePath.parse(text)


def find_paths(taxonomy: Taxonomy, label: str, case_sensitive: bool = False) -> tuple[TypePath, ...]:
    """All paths whose final label matches, in document order.

    Matching is case-insensitive (simple case folding) unless
    ``case_sensitive`` is set.
    """
    wanted = clean_label(label)
    if not case_sensitive:
        wanted = wanted.casefold()
    matches: list[TypePath] = []
    for path, node in iter_nodes(taxonomy.root):
        candidate = node.label if case_sensitive else node.label.casefold()
        if candidate == wanted:
            matches.append(path)
    return tuple(matches)


def _replace_at(node: TypeNode, segments: tuple[str, ...], replacement: TypeNode) -> TypeNode:
    """Rebuild the spine from ``node`` down to ``segments``, swapping in ``replacement``."""
    if len(segments) == 1:
        return replacement
    head, rest = segments[1], segments[1:]
    rebuilt = tuple(
        _replace_at(child, rest, replacement) if child.label == head else child
        for child in node.children
    )
    return TypeNode(node.label, rebuilt)


def insert_child(taxonomy: Taxonomy, parent: TypePath, label: str) -> Taxonomy:
    """Append a new leaf under ``parent``; duplicate sibling labels are rejected."""
    parent_node = resolve(taxonomy, parent)
    new_leaf = TypeNode(clean_label(label))
    if parent_node.child(new_leaf.label) is not None:
        raise DuplicateSiblingError(parent_node.label, new_leaf.label)
    new_parent = TypeNode(parent_node.label, parent_node.children + (new_leaf,))
    new_root = _replace_at(taxonomy.root, parent.segments, new_parent)
    return Taxonomy(root=new_root, version=taxonomy.version + 1)


def replace_branch(taxonomy: Taxonomy, path: TypePath, replacement: TypeNode) -> Taxonomy:
    """Swap the whole subtree at ``path`` for ``replacement``.

    The replacement must keep the branch's identity: its root label has to
    equal the final segment of ``path``. Everything outside the replaced
    subtree is shared with the old tree, unchanged.
    """
    resolve(taxonomy, path)
    if replacement.label != path.label:
        raise RootLabelMismatchError(
            f"replacement is rooted at {replacement.label!r}, expected {path.label!r}"
        )
    new_root = _replace_at(taxonomy.root, path.segments, replacement)
    return Taxonomy(root=new_root, version=taxonomy.version + 1)


def compute_stats(taxonomy: Taxonomy) -> TaxonomyStats:
    """Single-pass census: counts, depth profile, and duplicated labels.

    A label counts as duplicated when it occurs (case-folded) at two or
    more distinct paths anywhere in the tree.
    """
    per_depth: Counter[int] = Counter()
    label_paths: dict[str, int] = {}
    node_count = 0
    leaf_count = 0
    max_depth = 0
    for path, node in iter_nodes(taxonomy.root):
        node_count += 1
        depth = path.depth
        per_depth[depth] += 1
        max_depth = max(max_depth, depth)
        if node.is_leaf:
            leaf_count += 1
        key = node.label.casefold()
        label_paths[key] = label_paths.get(key, 0) + 1
    duplicates = sum(1 for count in label_paths.values() if count >= 2)
    return TaxonomyStats(
        node_count=node_count,
        max_depth=max_depth,
        leaf_count=leaf_count,
        duplicate_label_count=duplicates,
        per_depth_counts=dict(sorted(per_depth.items())),
    )


def _priority_order(taxonomy: Taxonomy, focus: TypePath) -> Iterator[tuple[str, ...]]:
    """Node paths in context priority order.

    Tiers: the focus spine (ancestors plus the focus itself), then the
    focus subtree in breadth-first order, then siblings along the spine
    (shallowest ancestor's children first), then everything else in global
    breadth-first order. Parents always appear before their descendants,
    so any prefix of this order forms a connected tree.
    """
    emitted: set[tuple[str, ...]] = set()

    def emit(segments: tuple[str, ...]) -> Iterator[tuple[str, ...]]:
        if segments not in emitted:
            emitted.add(segments)
            yield segments

    spine_nodes: list[TypeNode] = [taxonomy.root]
    for segment in focus.segments[1:]:
        child = spine_nodes[-1].child(segment)
        assert child is not None  # focus is resolved by the caller
        spine_nodes.append(child)
    for index in range(len(focus.segments)):
        yield from emit(focus.segments[: index + 1])

    focus_node = spine_nodes[-1]
    queue: deque[tuple[tuple[str, ...], TypeNode]] = deque(
        (focus.segments + (child.label,), child) for child in focus_node.children
    )
    while queue:
        segments, node = queue.popleft()
        yield from emit(segments)
        queue.extend((segments + (child.label,), child) for child in node.children)

    for index, ancestor in enumerate(spine_nodes[:-1]):
        prefix = focus.segments[: index + 1]
        for child in ancestor.children:
            yield from emit(prefix + (child.label,))

    global_queue: deque[tuple[tuple[str, ...], TypeNode]] = deque(
        [((taxonomy.root.label,), taxonomy.root)]
    )
    while global_queue:
        segments, node = global_queue.popleft()
        yield from emit(segments)
        global_queue.extend((segments + (child.label,), child) for child in node.children)


def _prune(node: TypeNode, segments: tuple[str, ...], keep: set[tuple[str, ...]]) -> TypeNode:
    kept_children = tuple(
        _prune(child, segments + (child.label,), keep)
        for child in node.children
        if segments + (child.label,) in keep
    )
    return TypeNode(node.label, kept_children)


def extract_context_subset(taxonomy: Taxonomy, focus: TypePath, node_budget: int) -> TypeNode:
    """A pruned copy of the tree centered on ``focus``, at most ``node_budget`` nodes.

    The budget must cover the focus path itself. Selection follows
    ``_priority_order``; original child order is preserved in the copy.
    When the budget reaches the tree's size the whole tree comes back.
    """
    resolve(taxonomy, focus)
    if node_budget < focus.depth:
        raise BudgetTooSmallError(
            f"budget {node_budget} cannot cover the focus path of length {focus.depth}"
        )
    keep: set[tuple[str, ...]] = set()
    for segments in _priority_order(taxonomy, focus):
        if len(keep) >= node_budget:
            break
        keep.add(segments)
    return _prune(taxonomy.root, (taxonomy.root.label,), keep)
