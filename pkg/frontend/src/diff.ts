// Display-only diff between the live branch and a proposed replacement.
// Computed from the two branch objects themselves, never parsed from text.

import type { BranchNode, LabelDiff } from "./api.js";

export function collectLabels(node: BranchNode | null | undefined): Set<string> {
  const labels = new Set<string>();
  const walk = (n: BranchNode | undefined) => {
    if (!n) return;
    labels.add(n.label);
    for (const child of n.children ?? []) walk(child);
  };
  walk(node ?? undefined);
  return labels;
}

export function diffBranches(
  current: BranchNode | null,
  proposed: BranchNode | null,
): LabelDiff {
  const before = collectLabels(current);
  const after = collectLabels(proposed);
  const added: string[] = [];
  const removed: string[] = [];
  const retained: string[] = [];
  for (const label of after) (before.has(label) ? retained : added).push(label);
  for (const label of before) if (!after.has(label)) removed.push(label);
  added.sort();
  removed.sort();
  retained.sort();
  return { added, removed, retained };
}
