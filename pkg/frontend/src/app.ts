// Wires the tree browser, expansion form, and proposal review panel to the
// workbench API. The page owns no taxonomy logic: every mutation is a POST
// and every displayed fact comes back out of a response.

import {
  ApiClient,
  ApiError,
  type BranchNode,
  type ProposalDetail,
  type ProposalSummary,
  type TaxonomyDoc,
} from "./api.js";
import { diffBranches } from "./diff.js";
import {
  PATH_SEP,
  badgeCounts,
  createState,
  duplicateLabels,
  reconcileSelection,
  replaceBranchInDoc,
  resolveNode,
  toggleExpanded,
  type TreeViewState,
} from "./state.js";

const POLL_MS = 2000;

export class Workbench {
  readonly state: TreeViewState = createState();
  doc: TaxonomyDoc | null = null;
  proposals: ProposalSummary[] = [];
  openDetail: ProposalDetail | null = null;
  private timer: ReturnType<typeof setInterval> | null = null;
  private duplicates: Set<string> = new Set();

  constructor(
    readonly api: ApiClient,
    readonly root: Document,
  ) {}

  // ---- lifecycle ----------------------------------------------------

  async start(intervalMs: number = POLL_MS): Promise<void> {
    this.el("request-expand").addEventListener("click", () => void this.requestExpansion());
    this.el("accept").addEventListener("click", () => void this.decide("accept"));
    this.el("reject").addEventListener("click", () => void this.decide("reject"));
    this.el("banner-refresh").addEventListener("click", () => void this.refreshAll());
    await this.refreshAll();
    this.timer = setInterval(() => void this.poll(), intervalMs);
  }

  stop(): void {
    if (this.timer !== null) clearInterval(this.timer);
    this.timer = null;
  }

  /** Full refetch: document, proposal list, and any open detail. */
  async refreshAll(): Promise<void> {
    try {
      this.doc = await this.api.taxonomy();
      this.state.version = this.doc.version;
      this.proposals = (await this.api.listProposals()).proposals;
      this.state.badges = badgeCounts(this.proposals);
      this.duplicates = duplicateLabels(this.doc);
      reconcileSelection(this.state, this.doc);
      this.hideBanner();
      this.renderAll();
      if (this.openDetail !== null) await this.openProposal(this.openDetail.id);
    } catch (error) {
      this.showBanner(`Could not load the taxonomy: ${describe(error)}`);
    }
  }

  /** One polling tick; cheap unless the server version moved. */
  async poll(): Promise<void> {
    let stats;
    try {
      stats = await this.api.stats();
    } catch (error) {
      this.showBanner(`Lost contact with the server: ${describe(error)}`);
      return;
    }
    if (stats.version !== this.state.version) {
      await this.refreshAll();
      this.showBanner(`Taxonomy changed outside this view; now at version ${stats.version}.`);
      return;
    }
    this.proposals = (await this.api.listProposals()).proposals;
    this.state.badges = badgeCounts(this.proposals);
    this.renderQueue();
    if (this.openDetail !== null && this.openDetail.status === "pending") {
      await this.openProposal(this.openDetail.id);
    }
  }

  // ---- actions ------------------------------------------------------

  select(path: string): void {
    this.state.selected = path;
    this.renderTree();
    this.el("selected-path").textContent = path;
  }

  async toggle(path: string): Promise<void> {
    const opened = toggleExpanded(this.state, path);
    if (opened && this.doc !== null) {
      const node = resolveNode(this.doc, path);
      if (node !== null && node.children === undefined) {
        const fetched = await this.api.subtree(path);
        replaceBranchInDoc(this.doc, path, fetched.branch);
      }
    }
    this.renderTree();
  }

  async requestExpansion(): Promise<void> {
    if (this.state.selected === null) {
      this.showToast("Select a node to expand first.");
      return;
    }
    const instructions = (this.el("instructions") as HTMLTextAreaElement).value.trim();
    try {
      const created = await this.api.requestExpansion(
        {
          mode: "expand",
          path: this.state.selected,
          ...(instructions ? { instructions } : {}),
        },
        this.state.version,
      );
      this.hideToast();
      this.proposals = (await this.api.listProposals()).proposals;
      this.state.badges = badgeCounts(this.proposals);
      this.renderQueue();
      this.renderTree();
      await this.openProposal(created.id);
    } catch (error) {
      if (error instanceof ApiError && error.status === 502) {
        this.showToast(`Backend failure: ${error.message}`);
      } else if (error instanceof ApiError && error.status === 409) {
        this.showBanner(`Your view is stale: ${error.message}`);
      } else {
        this.showToast(describe(error));
      }
    }
  }

  async openProposal(id: string): Promise<void> {
    this.openDetail = await this.api.proposal(id);
    this.renderDetail();
  }

  async decide(decision: "accept" | "reject"): Promise<void> {
    const detail = this.openDetail;
    if (detail === null) return;
    try {
      const result = await this.api.decide(detail.id, decision);
      this.hideToast();
      if (result.status === "accepted") {
        this.state.version = result.version;
        await this.refreshSubtree(replacePath(detail));
      }
      this.proposals = (await this.api.listProposals()).proposals;
      this.state.badges = badgeCounts(this.proposals);
      this.renderQueue();
      this.renderTree();
      await this.openProposal(detail.id);
    } catch (error) {
      if (error instanceof ApiError && error.status === 409) {
        // superseded or already decided; the stored proposal has the word
        this.showBanner(`Proposal ${detail.id}: ${error.message}`);
        this.proposals = (await this.api.listProposals()).proposals;
        this.state.badges = badgeCounts(this.proposals);
        this.renderQueue();
        await this.openProposal(detail.id);
      } else {
        this.showToast(describe(error));
      }
    }
  }

  /** Accepts touch one branch; refetch just that branch and splice it in. */
  private async refreshSubtree(path: string | null): Promise<void> {
    if (this.doc === null || path === null) return;
    try {
      const fetched = await this.api.subtree(path);
      replaceBranchInDoc(this.doc, path, fetched.branch);
      this.doc.version = fetched.version;
      this.duplicates = duplicateLabels(this.doc);
    } catch {
      await this.refreshAll();
    }
  }

  // ---- rendering ----------------------------------------------------

  private renderAll(): void {
    this.renderTree();
    this.renderQueue();
    this.renderDetail();
    this.el("selected-path").textContent = this.state.selected ?? "(none)";
  }

  renderTree(): void {
    const host = this.el("tree");
    host.textContent = "";
    if (this.doc === null) return;
    this.el("version-label").textContent = `version ${this.state.version}`;
    host.appendChild(this.renderNode(this.doc.root, this.doc.root.label));
  }

  private renderNode(node: BranchNode, path: string): HTMLElement {
    const docRef = this.root;
    const item = docRef.createElement("div");
    const row = docRef.createElement("div");
    row.className = "node-row";

    const children = node.children ?? [];
    const toggle = docRef.createElement("span");
    toggle.className = "toggle";
    toggle.dataset.path = path;
    if (children.length === 0 && node.children !== undefined) {
      toggle.textContent = "·"; // leaf glyph
    } else {
      toggle.textContent = this.state.expanded.has(path) ? "▾" : "▸";
      toggle.addEventListener("click", () => void this.toggle(path));
    }
    row.appendChild(toggle);

    const label = docRef.createElement("span");
    label.className = "label" + (this.state.selected === path ? " selected" : "");
    label.dataset.path = path;
    label.textContent = node.label;
    label.addEventListener("click", () => this.select(path));
    row.appendChild(label);

    if (node.children !== undefined && children.length > 0) {
      const count = docRef.createElement("span");
      count.className = "count";
      count.textContent = ` (${children.length})`;
      row.appendChild(count);
    }

    if (this.duplicates.has(node.label)) {
      const marker = docRef.createElement("span");
      marker.className = "dup";
      marker.dataset.label = node.label;
      marker.textContent = " ⚠";
      marker.title = "duplicate label";
      marker.addEventListener(
        "mouseenter",
        () => {
          void this.api
            .search(node.label)
            .then((found) => {
              marker.title = found.paths.join("\n");
            })
            .catch(() => undefined);
        },
        { once: true },
      );
      row.appendChild(marker);
    }

    const pending = this.state.badges.get(path);
    if (pending !== undefined) {
      const badge = docRef.createElement("span");
      badge.className = "badge";
      badge.textContent = String(pending);
      row.appendChild(badge);
    }

    item.appendChild(row);
    if (this.state.expanded.has(path) && children.length > 0) {
      const list = docRef.createElement("ul");
      for (const child of children) {
        const entry = docRef.createElement("li");
        entry.appendChild(this.renderNode(child, path + PATH_SEP + child.label));
        list.appendChild(entry);
      }
      item.appendChild(list);
    }
    return item;
  }

  renderQueue(): void {
    const host = this.el("queue");
    host.textContent = "";
    for (const p of this.proposals) {
      const entry = this.root.createElement("li");
      entry.dataset.id = p.id;
      entry.dataset.status = p.status;
      const verdict = p.verdict !== null ? ` (${p.verdict})` : "";
      entry.textContent = `${p.id} ${p.mode} ${p.path ?? ""} — ${p.status}${verdict}`;
      entry.addEventListener("click", () => void this.openProposal(p.id));
      host.appendChild(entry);
    }
  }

  renderDetail(): void {
    const section = this.el("detail");
    const detail = this.openDetail;
    if (detail === null) {
      section.style.display = "none";
      return;
    }
    section.style.display = "";
    this.el("detail-id").textContent = detail.id;

    const meta = this.el("detail-meta");
    meta.textContent = "";
    const verdict = detail.validation?.verdict ?? null;
    const lines = [
      `mode ${detail.mode} on ${replacePath(detail) ?? "?"}`,
      `status ${detail.status}` + (verdict !== null ? `, verdict ${verdict}` : ""),
    ];
    if (detail.error !== null) lines.push(`error: ${detail.error}`);
    for (const line of lines) {
      const div = this.root.createElement("div");
      div.textContent = line;
      meta.appendChild(div);
    }

    this.renderDiff(detail);
    this.renderDiagnostics(detail);

    const accept = this.el("accept") as HTMLButtonElement;
    const reject = this.el("reject") as HTMLButtonElement;
    const pending = detail.status === "pending";
    const blocked = verdict === "blocked";
    accept.disabled = !pending || blocked;
    reject.disabled = !pending;
    if (blocked) {
      const reasons = (detail.validation?.diagnostics ?? [])
        .filter((d) => d.severity === "block")
        .map((d) => `${d.kind}: ${d.detail}`);
      accept.title = reasons.join("\n") || "blocked by validation";
    } else if (!pending) {
      accept.title = `already ${detail.status}`;
    } else {
      accept.title = "";
    }
  }

  private renderDiff(detail: ProposalDetail): void {
    const host = this.el("diff");
    host.textContent = "";
    const path = replacePath(detail);
    if (detail.branch === null || path === null) return;
    // diff what the panel shows: the live branch against the proposed one
    const current = this.doc !== null ? resolveNode(this.doc, path) : null;
    const diff = diffBranches(current, detail.branch);
    const groups: Array<[keyof typeof diff, string]> = [
      ["added", "+"],
      ["removed", "−"],
      ["retained", "="],
    ];
    for (const [group, sign] of groups) {
      if (diff[group].length === 0) continue;
      const line = this.root.createElement("div");
      line.className = "diff-group";
      line.appendChild(this.root.createTextNode(`${group}: `));
      for (const label of diff[group]) {
        const span = this.root.createElement("span");
        span.className = group;
        span.textContent = `${sign}${label}`;
        line.appendChild(span);
        line.appendChild(this.root.createTextNode(" "));
      }
      host.appendChild(line);
    }
  }

  private renderDiagnostics(detail: ProposalDetail): void {
    const host = this.el("diagnostics");
    host.textContent = "";
    for (const diagnostic of detail.validation?.diagnostics ?? []) {
      const entry = this.root.createElement("li");
      entry.className = diagnostic.severity === "block" ? "diag-block" : "diag-warn";
      entry.textContent =
        `${diagnostic.severity} ${diagnostic.kind} at ${diagnostic.subject_path}: ` +
        diagnostic.detail;
      host.appendChild(entry);
    }
  }

  // ---- chrome -------------------------------------------------------

  private el(id: string): HTMLElement {
    const found = this.root.getElementById(id);
    if (found === null) throw new Error(`page is missing #${id}`);
    return found;
  }

  showBanner(text: string): void {
    this.el("banner-text").textContent = text;
    this.el("banner").classList.add("visible");
  }

  hideBanner(): void {
    this.el("banner").classList.remove("visible");
  }

  showToast(text: string): void {
    const toast = this.el("toast");
    toast.textContent = text;
    toast.classList.add("visible");
  }

  hideToast(): void {
    this.el("toast").classList.remove("visible");
  }
}

function replacePath(detail: ProposalDetail): string | null {
  return detail.mode === "insert-type" ? detail.placement_path : detail.target_path;
}

function describe(error: unknown): string {
  return error instanceof Error ? error.message : String(error);
}
