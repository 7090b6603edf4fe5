"""Shared test utilities: random tree generators and independent oracles.

The oracles here re-derive expected values through deliberately different
code paths than the package (recursive where the package is iterative,
dict-based where the package uses dataclasses) so that agreement is
evidence rather than tautology.
"""

from __future__ import annotations

import hashlib
import json
import math
import random
from typing import Any

from taxonomy_workbench import Taxonomy, TypeNode, TypePath

WORD_POOL = [
    "alpha", "beta", "gamma", "delta", "epsilon", "zeta", "eta", "theta",
    "iota", "kappa", "lambda", "sigma", "omega", "node", "branch", "leaf",
    "stellar", "marine", "urban", "rural", "ancient", "modern",
]


def random_taxonomy(
    rng: random.Random,
    max_nodes: int = 60,
    max_children: int = 4,
    allow_repeats: bool = True,
) -> Taxonomy:
    """Grow a random tree top-down, one unique-labeled child at a time.

    Labels combine a pool word with a counter; with ``allow_repeats`` some
    nodes reuse a bare pool word so duplicate labels occur across (never
    within) sibling sets.
    """
    target = rng.randint(1, max_nodes)
    counter = 0

    def next_label(taken: set[str]) -> str:
        nonlocal counter
        while True:
            if allow_repeats and rng.random() < 0.3:
                label = rng.choice(WORD_POOL)
            else:
                counter += 1
                label = f"{rng.choice(WORD_POOL)} {counter}"
            if label not in taken:
                return label

    # children lists keyed by path; grow by picking a random open parent
    children: dict[tuple[str, ...], list[tuple[str, ...]]] = {("root",): []}
    open_parents: list[tuple[str, ...]] = [("root",)]
    count = 1
    while count < target and open_parents:
        parent = rng.choice(open_parents)
        taken = {p[-1] for p in children[parent]}
        label = next_label(taken)
        path = parent + (label,)
        children[parent].append(path)
        children[path] = []
        open_parents.append(path)
        if len(children[parent]) >= max_children:
            open_parents.remove(parent)
        count += 1

    def build(path: tuple[str, ...]) -> TypeNode:
        return TypeNode(path[-1], tuple(build(c) for c in children[path]))

    return Taxonomy(root=build(("root",)), version=rng.randint(1, 20))


def all_paths(node: TypeNode, prefix: tuple[str, ...] = ()) -> list[tuple[str, ...]]:
    """Every path in the subtree, preorder, as label tuples."""
    here = prefix + (node.label,)
    out = [here]
    for child in node.children:
        out.extend(all_paths(child, here))
    return out


def nested_list_form(node: TypeNode) -> list[Any]:
    """A serialization-shaped value built without the package serializer."""
    return [node.label, [nested_list_form(c) for c in node.children]]


def drop_subtree(node: TypeNode, path: tuple[str, ...]) -> Any:
    """Nested-list form of the tree with the subtree at ``path`` removed.

    This is the prune-and-compare oracle for branch-replacement locality:
    two trees that differ only inside ``path`` must have equal values here.
    """
    if path == (node.label,):
        return None
    kept = []
    for child in node.children:
        if path[:1] == (node.label,) and path[1:2] == (child.label,):
            sub = drop_subtree(child, path[1:])
            if sub is not None:
                kept.append(sub)
        else:
            kept.append(nested_list_form(child))
    return [node.label, kept]


def recount_stats(node: TypeNode) -> dict[str, Any]:
    """Recursive, dict-based recount of the tree census."""
    per_depth: dict[int, int] = {}
    labels: dict[str, int] = {}
    totals = {"nodes": 0, "leaves": 0, "max_depth": 0}

    def walk(n: TypeNode, depth: int) -> None:
        totals["nodes"] += 1
        totals["max_depth"] = max(totals["max_depth"], depth)
        per_depth[depth] = per_depth.get(depth, 0) + 1
        labels[n.label.casefold()] = labels.get(n.label.casefold(), 0) + 1
        if not n.children:
            totals["leaves"] += 1
        for child in n.children:
            walk(child, depth + 1)

    walk(node, 1)
    return {
        "node_count": totals["nodes"],
        "max_depth": totals["max_depth"],
        "leaf_count": totals["leaves"],
        "duplicate_label_count": sum(1 for v in labels.values() if v >= 2),
        "per_depth_counts": per_depth,
    }


SCORE_FLOOR = 1e-9


def make_hash_scorer(seed: str):
    """A deterministic scorer: score of a child is a hash of (seed, parent path, label)."""

    def score_one(parent: str, label: str) -> float:
        digest = hashlib.sha256(f"{seed}|{parent}|{label}".encode("utf-8")).digest()
        return int.from_bytes(digest[:4], "big") / 0xFFFFFFFF

    def scorer(mention, candidates, allow_stop):
        out = {}
        for label, path in candidates:
            parent = " / ".join(path.segments[:-1])
            out[label] = score_one(parent, label)
        return out

    scorer.score_one = score_one
    return scorer


def brute_force_best(taxonomy: Taxonomy, scorer, mention, max_depth: int = 100):
    """Exhaustively score every root-to-terminal path; return them all ranked.

    Terminal means leaf or cut at ``max_depth``. Step scores come from the
    same scorer the beam uses, floored identically.
    """
    results: list[tuple[float, tuple[str, ...]]] = []

    def walk(node: TypeNode, prefix: tuple[str, ...], log_score: float) -> None:
        if not node.children or len(prefix) >= max_depth:
            results.append((log_score, prefix))
            return
        candidates = tuple(
            (child.label, TypePath(prefix + (child.label,))) for child in node.children
        )
        scores = scorer(mention, candidates, False)
        for child in node.children:
            step = math.log(max(scores[child.label], SCORE_FLOOR))
            walk(child, prefix + (child.label,), log_score + step)

    walk(taxonomy.root, (taxonomy.root.label,), 0.0)
    results.sort(key=lambda item: (-item[0], item[1]))
    return results


def count_branch_nodes(obj: Any) -> int:
    """Node count of a branch given as parsed JSON (the arithmetic oracle)."""
    return 1 + sum(count_branch_nodes(c) for c in obj.get("children", []))


def fixture_line(match: str, branch_obj: Any) -> str:
    """One scripted-backend JSONL line replying with a branch object."""
    return json.dumps({"match": match, "response": json.dumps(branch_obj)}, ensure_ascii=False)
