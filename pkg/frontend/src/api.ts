// Typed client for the workbench HTTP API. Every shape here mirrors a
// server response field; nothing is derived client-side.

export interface BranchNode {
  label: string;
  children?: BranchNode[];
}

export interface TaxonomyDoc {
  format_version: number;
  version: number;
  name?: string;
  created_at?: string;
  root: BranchNode;
}

export interface Stats {
  node_count: number;
  max_depth: number;
  leaf_count: number;
  duplicate_label_count: number;
  per_depth_counts: Record<string, number>;
  version: number;
}

export interface SubtreeResponse {
  path: string;
  version: number;
  branch: BranchNode;
}

export interface SearchResponse {
  label: string;
  paths: string[];
}

export interface DiagnosticJson {
  kind: string;
  severity: string;
  subject_path: string;
  detail: string;
}

export interface ValidationJson {
  verdict: string;
  diagnostics: DiagnosticJson[];
}

export interface ProposalSummary {
  id: string;
  status: string;
  mode: string;
  path: string | null;
  verdict: string | null;
}

export interface LabelDiff {
  added: string[];
  removed: string[];
  retained: string[];
}

export interface ProposalDetail {
  id: string;
  status: string;
  mode: string;
  base_version: number;
  target_path: string | null;
  placement_path: string | null;
  new_label: string | null;
  branch: BranchNode | null;
  validation: ValidationJson | null;
  error: string | null;
  raw_response: string | null;
  created_at: string;
  diff: LabelDiff | null;
}

export interface ExpansionCreated {
  id: string;
  status: string;
  verdict: string | null;
  error: string | null;
}

export interface DecisionResponse {
  id: string;
  status: string;
  version: number;
}

export interface ExpansionBody {
  mode: "expand" | "insert";
  path?: string;
  label?: string;
  instructions?: string;
}

/** Error body from the server, either a domain error or a request-shape one. */
export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly kind: string,
    detail: string,
  ) {
    super(detail);
    this.name = "ApiError";
  }
}

async function toApiError(response: Response): Promise<ApiError> {
  let kind = "HttpError";
  let detail = `${response.status} ${response.statusText}`;
  try {
    const body = await response.json();
    if (typeof body.error === "string") {
      detail = body.error;
      if (typeof body.kind === "string") kind = body.kind;
    } else if (body.detail !== undefined) {
      detail = typeof body.detail === "string" ? body.detail : JSON.stringify(body.detail);
    }
  } catch {
    // non-JSON body: keep the status line
  }
  return new ApiError(response.status, kind, detail);
}

export class ApiClient {
  constructor(readonly base: string = "") {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await fetch(this.base + path, init);
    if (!response.ok) throw await toApiError(response);
    return (await response.json()) as T;
  }

  taxonomy(): Promise<TaxonomyDoc> {
    return this.request("/taxonomy");
  }

  stats(): Promise<Stats> {
    return this.request("/stats");
  }

  subtree(path: string): Promise<SubtreeResponse> {
    return this.request(`/subtree?path=${encodeURIComponent(path)}`);
  }

  search(label: string): Promise<SearchResponse> {
    return this.request(`/search?label=${encodeURIComponent(label)}`);
  }

  listProposals(): Promise<{ proposals: ProposalSummary[] }> {
    return this.request("/expansions");
  }

  proposal(id: string): Promise<ProposalDetail> {
    return this.request(`/expansions/${encodeURIComponent(id)}`);
  }

  requestExpansion(body: ExpansionBody, baseVersion?: number): Promise<ExpansionCreated> {
    const headers: Record<string, string> = { "content-type": "application/json" };
    if (baseVersion !== undefined) headers["if-match"] = `"${baseVersion}"`;
    return this.request("/expansions", {
      method: "POST",
      headers,
      body: JSON.stringify(body),
    });
  }

  decide(id: string, decision: "accept" | "reject", override = false): Promise<DecisionResponse> {
    return this.request(`/expansions/${encodeURIComponent(id)}/decision`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ decision, override }),
    });
  }
}
