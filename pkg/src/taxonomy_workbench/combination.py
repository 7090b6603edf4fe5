"""Cross-product categories and repetition detection.

Some category families are systematic combinations of two existing
branches ("Countries in Europe" is Country x Continent). Rules keep that
structure virtual: expanding a rule yields a generated branch that is
never part of the taxonomy unless it is explicitly materialized.
detect_repetition is the lint for the failure mode this avoids: the same
terms echoed across sibling sets or scattered over distinct parents.
"""

from __future__ import annotations

import json
import re
from collections.abc import Mapping, Sequence
from dataclasses import dataclass
from pathlib import Path

from .errors import ConfigError, DuplicateSiblingError, RuleError
from .labels import clean_label, labels_similar, normalize_label
from .tree import Taxonomy, TypeNode, TypePath, iter_nodes, replace_branch, resolve

_RULE_PLACEHOLDER_RE = re.compile(r"\{([a-z_]+)\}")
_RULE_PLACEHOLDERS = {"left", "right"}


@dataclass(frozen=True)
class CombinationRule:
    """A template over two anchor paths.

    ``template`` substitutes {left} with each child label of the left
    anchor and {right} with the right anchor's own label; an alias table
    can swap in adjectival forms. ``membership`` optionally names, per
    left child, the right-descendants that become member leaves of the
    combined category.
    """

    name: str
    left_anchor: TypePath
    right_anchor: TypePath
    template: str
    membership: Mapping[str, tuple[str, ...]] | None = None


@dataclass(frozen=True)
class VirtualBranch:
    """A generated, not-yet-real branch: the group node for one rule."""

    rule_name: str
    generated: TypeNode


@dataclass(frozen=True)
class DuplicateGroup:
    label: str
    paths: tuple[TypePath, ...]


@dataclass(frozen=True)
class MirroredPair:
    left: TypePath
    right: TypePath
    similarity: float


@dataclass(frozen=True)
class RepetitionReport:
    duplicated_label_groups: tuple[DuplicateGroup, ...]
    mirrored_sibling_sets: tuple[MirroredPair, ...]


@dataclass(frozen=True)
class RuleSet:
    rules: tuple[CombinationRule, ...]
    aliases: Mapping[str, str]

    def get(self, name: str) -> CombinationRule:
        for rule in self.rules:
            if rule.name == name:
                return rule
        raise RuleError(f"no rule named {name!r}")


def _template_placeholders(template: str) -> set[str]:
    found = set(_RULE_PLACEHOLDER_RE.findall(template))
    unknown = found - _RULE_PLACEHOLDERS
    if unknown:
        raise RuleError(f"template {template!r} uses unknown placeholders: {sorted(unknown)}")
    if not found:
        raise RuleError(f"template {template!r} must reference {{left}} or {{right}}")
    return found


def render_category_label(
    template: str,
    left_label: str,
    right_label: str,
    aliases: Mapping[str, str] | None = None,
) -> str:
    """One combined category label; aliases substitute adjectival forms."""
    aliases = aliases or {}
    values = {
        "left": aliases.get(left_label, left_label),
        "right": aliases.get(right_label, right_label),
    }
    rendered = _RULE_PLACEHOLDER_RE.sub(lambda m: values[m.group(1)], template)
    try:
        return clean_label(rendered)
    except Exception as exc:
        raise RuleError(f"template {template!r} renders an invalid label: {exc}") from exc


def define_rule(
    taxonomy: Taxonomy,
    left_anchor: TypePath,
    right_anchor: TypePath,
    template: str,
    membership: Mapping[str, Sequence[str]] | None = None,
    name: str | None = None,
    aliases: Mapping[str, str] | None = None,
) -> CombinationRule:
    """Validate and freeze a combination rule against the current tree.

    Both anchors must resolve; the template must reference only {left} and
    {right} and must render a valid label for every current left child.
    """
    left_node = resolve(taxonomy, left_anchor)
    right_node = resolve(taxonomy, right_anchor)
    _template_placeholders(template)
    for child in left_node.children:
        render_category_label(template, child.label, right_node.label, aliases)
    if name is None:
        name = f"{right_node.label} by {left_node.label}"
    frozen_membership = None
    if membership is not None:
        frozen_membership = {key: tuple(values) for key, values in membership.items()}
    return CombinationRule(
        name=clean_label(name),
        left_anchor=left_anchor,
        right_anchor=right_anchor,
        template=template,
        membership=frozen_membership,
    )


def expand_rule(
    taxonomy: Taxonomy,
    rule: CombinationRule,
    aliases: Mapping[str, str] | None = None,
) -> VirtualBranch:
    """Generate the rule's group node: one category per left-anchor child.

    Category order follows the left anchor's child order. Membership
    entries become member leaves, validated against the labels actually
    under the right anchor and ordered as written in the rule.
    """
    left_node = resolve(taxonomy, rule.left_anchor)
    right_node = resolve(taxonomy, rule.right_anchor)
    right_labels = {normalize_label(node.label) for _, node in iter_nodes(right_node)}

    if rule.membership:
        unknown_keys = [
            key for key in rule.membership if left_node.child(key) is None
        ]
        if unknown_keys:
            raise RuleError(
                f"membership names labels that are not children of the left anchor: {unknown_keys}"
            )

    categories: list[TypeNode] = []
    seen: set[str] = set()
    for child in left_node.children:
        label = render_category_label(rule.template, child.label, right_node.label, aliases)
        if label in seen:
            raise RuleError(f"template renders the same label {label!r} for two left children")
        seen.add(label)
        members: list[TypeNode] = []
        member_seen: set[str] = set()
        for member in (rule.membership or {}).get(child.label, ()):
            member = clean_label(member)
            if normalize_label(member) not in right_labels:
                raise RuleError(
                    f"membership label {member!r} does not occur under the right anchor "
                    f"{rule.right_anchor}"
                )
            if member in member_seen:
                continue
            member_seen.add(member)
            members.append(TypeNode(member))
        categories.append(TypeNode(label, tuple(members)))
    return VirtualBranch(rule_name=rule.name, generated=TypeNode(rule.name, tuple(categories)))


def materialize(taxonomy: Taxonomy, virtual: VirtualBranch, parent: TypePath) -> Taxonomy:
    """Insert a generated group node under ``parent`` as one mutation."""
    parent_node = resolve(taxonomy, parent)
    if parent_node.child(virtual.generated.label) is not None:
        raise DuplicateSiblingError(parent_node.label, virtual.generated.label)
    new_parent = TypeNode(parent_node.label, parent_node.children + (virtual.generated,))
    return replace_branch(taxonomy, parent, new_parent)


def _sibling_similarity(a: Sequence[str], b: Sequence[str]) -> float:
    """Symmetric coverage of two child-label sets under token matching.

    Counts how many labels on each side have a lexical counterpart on the
    other ("Africa" pairs with "African Countries") and averages the two
    directions, so fully mirrored sets score 1.0.
    """
    if not a or not b:
        return 0.0
    matched_a = sum(1 for la in a if any(labels_similar(la, lb) for lb in b))
    matched_b = sum(1 for lb in b if any(labels_similar(lb, la) for la in a))
    return (matched_a + matched_b) / (len(a) + len(b))


def detect_repetition(
    taxonomy: Taxonomy,
    min_parents: int = 2,
    mirror_threshold: float = 0.6,
) -> RepetitionReport:
    """Find repeated vocabulary across the tree.

    Duplicated label groups list normalized labels that occur under at
    least ``min_parents`` distinct parents. Mirrored sibling sets pair
    parents (neither an ancestor of the other) whose children lexically
    shadow each other with similarity at or above the threshold.
    """
    occurrences: dict[str, list[TypePath]] = {}
    parents: list[tuple[TypePath, tuple[str, ...]]] = []
    for path, node in iter_nodes(taxonomy.root):
        occurrences.setdefault(normalize_label(node.label), []).append(path)
        if len(node.children) >= 2:
            parents.append((path, tuple(child.label for child in node.children)))

    groups: list[DuplicateGroup] = []
    for key, paths in occurrences.items():
        if len(paths) < 2:
            continue
        parent_keys = {p.parent().segments if p.parent() else () for p in paths}
        if len(parent_keys) >= min_parents:
            groups.append(DuplicateGroup(label=key, paths=tuple(paths)))

    mirrors: list[MirroredPair] = []
    for i in range(len(parents)):
        path_a, children_a = parents[i]
        for j in range(i + 1, len(parents)):
            path_b, children_b = parents[j]
            if path_a.overlaps(path_b):
                continue
            similarity = _sibling_similarity(children_a, children_b)
            if similarity >= mirror_threshold:
                mirrors.append(MirroredPair(path_a, path_b, round(similarity, 6)))

    return RepetitionReport(
        duplicated_label_groups=tuple(groups),
        mirrored_sibling_sets=tuple(mirrors),
    )


def repetition_report_to_dict(report: RepetitionReport) -> dict[str, object]:
    return {
        "duplicated_label_groups": [
            {"label": g.label, "paths": [str(p) for p in g.paths]}
            for g in report.duplicated_label_groups
        ],
        "mirrored_sibling_sets": [
            {"left": str(m.left), "right": str(m.right), "similarity": m.similarity}
            for m in report.mirrored_sibling_sets
        ],
    }


def load_rules(taxonomy: Taxonomy, path: str | Path) -> RuleSet:
    """Load rules from a JSON file and validate them against the tree.

    Schema: ``{"aliases": {label: form}, "rules": [{"name", "left",
    "right", "template", "membership"?}]}``.
    """
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read rules file {path}: {exc}") from exc
    if not isinstance(data, dict) or "rules" not in data:
        raise ConfigError(f"rules file {path} must hold an object with a 'rules' array")
    aliases = data.get("aliases", {})
    if not isinstance(aliases, dict):
        raise ConfigError("'aliases' must map labels to strings")
    rules = []
    for index, record in enumerate(data["rules"]):
        if not isinstance(record, dict):
            raise ConfigError(f"rules[{index}] must be an object")
        missing = {"left", "right", "template"} - set(record)
        if missing:
            raise ConfigError(f"rules[{index}] is missing keys: {sorted(missing)}")
        rules.append(
            define_rule(
                taxonomy,
                left_anchor=TypePath.parse(record["left"]),
                right_anchor=TypePath.parse(record["right"]),
                template=record["template"],
                membership=record.get("membership"),
                name=record.get("name"),
                aliases=aliases,
            )
        )
    return RuleSet(rules=tuple(rules), aliases=dict(aliases))
