/** Typed client for the elicitation service REST API. */

export interface QueryItem {
  position: number;
  id?: string;
  name?: string;
  attributes?: string[] | null;
}

export interface QueryPayload {
  turn: number;
  items: QueryItem[];
}

export interface Recommendation {
  id: string;
  name: string | null;
  eu: number;
}

export interface Diagnostics {
  turn: number;
  ess: number;
  evoi: number[];
  regret?: number[];
}

export interface HistoryRow {
  query_idx: number;
  slate_ids: string[];
  response_idx: number;
  evoi: number;
}

export interface SessionCreated {
  session_id: string;
  mode: string;
  strategy: string;
  k: number;
  query: QueryPayload;
}

export interface SessionDetail extends SessionCreated {
  turn: number;
  history: HistoryRow[];
}

export interface AnswerResult {
  answered: { turn: number; evoi: number; regret: number | null };
  query: QueryPayload;
  recommendations: Recommendation[];
  diagnostics: Diagnostics;
}

export interface CatalogInfo {
  id: string;
  n_items: number;
  dim: number;
}

export interface SessionRequest {
  mode: "live" | "demo";
  strategy: string;
  k: number;
  catalog_id?: string;
  catalog?: { kind: string; n?: number; d?: number };
  m?: number;
  tau_eval?: number;
  seed?: number;
  strategy_config?: Record<string, unknown>;
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }

  get isConflict(): boolean {
    return this.status === 409;
  }
}

async function request<T>(url: string, init?: RequestInit): Promise<T> {
  const resp = await fetch(url, init);
  if (!resp.ok) {
    let code = "unknown";
    let message = resp.statusText;
    try {
      const body = (await resp.json()) as { code?: string; message?: string };
      code = body.code ?? code;
      message = body.message ?? message;
    } catch {
      /* non-JSON error body; keep status text */
    }
    throw new ApiError(resp.status, code, message);
  }
  return (await resp.json()) as T;
}

function post<T>(url: string, body: unknown): Promise<T> {
  return request<T>(url, {
    method: "POST",
    headers: { "Content-Type": "application/json" },
    body: JSON.stringify(body),
  });
}

export class Api {
  constructor(private readonly base: string = "") {}

  listCatalogs(): Promise<CatalogInfo[]> {
    return request(`${this.base}/catalogs`);
  }

  createSession(req: SessionRequest): Promise<SessionCreated> {
    return post(`${this.base}/sessions`, req);
  }

  getSession(sessionId: string): Promise<SessionDetail> {
    return request(`${this.base}/sessions/${sessionId}`);
  }

  getQuery(sessionId: string): Promise<QueryPayload> {
    return request(`${this.base}/sessions/${sessionId}/query`);
  }

  /** Posts a response; `turn` is the idempotency token for the answered query. */
  postResponse(sessionId: string, turn: number, chosen: number): Promise<AnswerResult> {
    return post(`${this.base}/sessions/${sessionId}/response`, { turn, chosen });
  }

  getRecommendations(sessionId: string, n = 5): Promise<Recommendation[]> {
    return request(`${this.base}/sessions/${sessionId}/recommendations?n=${n}`);
  }

  getDiagnostics(sessionId: string): Promise<Diagnostics> {
    return request(`${this.base}/sessions/${sessionId}/diagnostics`);
  }
}
