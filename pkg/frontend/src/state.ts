// View state for the tree browser: which nodes are open, what is selected,
// which taxonomy version the view was rendered from, and pending-proposal
// badges keyed by full-path label.

import type { BranchNode, ProposalSummary, TaxonomyDoc } from "./api.js";

export const PATH_SEP = " / ";

export interface TreeViewState {
  expanded: Set<string>;
  selected: string | null;
  version: number;
  badges: Map<string, number>;
}

export function createState(): TreeViewState {
  return { expanded: new Set(), selected: null, version: 0, badges: new Map() };
}

export function toggleExpanded(state: TreeViewState, path: string): boolean {
  if (state.expanded.has(path)) {
    state.expanded.delete(path);
    return false;
  }
  state.expanded.add(path);
  return true;
}

/** Walk a document along a full-path label; null when any segment is missing. */
export function resolveNode(doc: TaxonomyDoc, path: string): BranchNode | null {
  const segments = path.split(PATH_SEP);
  if (segments[0] !== doc.root.label) return null;
  let node: BranchNode = doc.root;
  for (const segment of segments.slice(1)) {
    const next = (node.children ?? []).find((c) => c.label === segment);
    if (!next) return null;
    node = next;
  }
  return node;
}

/** Selection must stay resolvable against the last fetched taxonomy. */
export function reconcileSelection(state: TreeViewState, doc: TaxonomyDoc): void {
  if (state.selected !== null && resolveNode(doc, state.selected) === null) {
    state.selected = null;
  }
}

export function badgeCounts(proposals: ProposalSummary[]): Map<string, number> {
  const counts = new Map<string, number>();
  for (const p of proposals) {
    if (p.status !== "pending" || p.path === null) continue;
    counts.set(p.path, (counts.get(p.path) ?? 0) + 1);
  }
  return counts;
}

/** Labels that occur more than once anywhere in the fetched document. */
export function duplicateLabels(doc: TaxonomyDoc): Set<string> {
  const seen = new Map<string, number>();
  const walk = (node: BranchNode) => {
    seen.set(node.label, (seen.get(node.label) ?? 0) + 1);
    for (const child of node.children ?? []) walk(child);
  };
  walk(doc.root);
  const duplicated = new Set<string>();
  for (const [label, count] of seen) if (count > 1) duplicated.add(label);
  return duplicated;
}

/** Splice a freshly fetched branch into the cached document at its path. */
export function replaceBranchInDoc(
  doc: TaxonomyDoc,
  path: string,
  branch: BranchNode,
): boolean {
  const segments = path.split(PATH_SEP);
  if (segments[0] !== doc.root.label) return false;
  if (segments.length === 1) {
    doc.root = branch;
    return true;
  }
  let node: BranchNode = doc.root;
  for (const segment of segments.slice(1, -1)) {
    const next = (node.children ?? []).find((c) => c.label === segment);
    if (!next) return false;
    node = next;
  }
  const leafLabel = segments[segments.length - 1];
  const children = node.children ?? [];
  const index = children.findIndex((c) => c.label === leafLabel);
  if (index < 0) return false;
  children[index] = branch;
  return true;
}
