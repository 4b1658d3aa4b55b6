/** Session flow state machine.
 *
 * All belief math lives on the server; this module only tracks the view
 * state, serializes turns, and guards against double submits. The server is
 * the source of truth: every rendered query comes verbatim from a response.
 */

import {
  Api,
  ApiError,
  Diagnostics,
  HistoryRow,
  QueryPayload,
  Recommendation,
  SessionRequest,
} from "./api.js";

export interface FlowView {
  sessionId: string | null;
  mode: string;
  strategy: string;
  k: number;
  query: QueryPayload | null;
  recommendations: Recommendation[];
  diagnostics: Diagnostics | null;
  history: HistoryRow[];
  notice: string | null;
  error: string | null;
  busy: boolean;
}

function emptyView(): FlowView {
  return {
    sessionId: null,
    mode: "live",
    strategy: "",
    k: 0,
    query: null,
    recommendations: [],
    diagnostics: null,
    history: [],
    notice: null,
    error: null,
    busy: false,
  };
}

export type FlowListener = (view: FlowView) => void;

export class SessionFlow {
  private view: FlowView = emptyView();
  private listeners: FlowListener[] = [];

  constructor(private readonly api: Api) {}

  get state(): FlowView {
    return this.view;
  }

  subscribe(listener: FlowListener): void {
    this.listeners.push(listener);
  }

  private update(patch: Partial<FlowView>): void {
    this.view = { ...this.view, ...patch };
    for (const listener of this.listeners) listener(this.view);
  }

  async start(req: SessionRequest): Promise<void> {
    this.update({ ...emptyView(), busy: true });
    try {
      const created = await this.api.createSession(req);
      this.update({
        sessionId: created.session_id,
        mode: created.mode,
        strategy: created.strategy,
        k: created.k,
        query: created.query,
        busy: false,
      });
    } catch (err) {
      this.update({ busy: false, error: describe(err) });
    }
  }

  /** Re-open an existing session (page reload): refetch everything. */
  async resume(sessionId: string): Promise<void> {
    this.update({ ...emptyView(), busy: true });
    try {
      const detail = await this.api.getSession(sessionId);
      const [recommendations, diagnostics] = await Promise.all([
        this.api.getRecommendations(sessionId),
        this.api.getDiagnostics(sessionId),
      ]);
      this.update({
        sessionId,
        mode: detail.mode,
        strategy: detail.strategy,
        k: detail.k,
        query: detail.query,
        history: detail.history,
        recommendations,
        diagnostics,
        busy: false,
      });
    } catch (err) {
      this.update({ busy: false, error: describe(err) });
    }
  }

  /**
   * Submit the chosen card for the current query. The turn number rides
   * along as the idempotency token; a conflict (double click, replayed
   * request) is surfaced as a notice and the pending query is refetched.
   */
  async answer(chosen: number): Promise<void> {
    const { sessionId, query, busy } = this.view;
    if (busy || sessionId === null || query === null) return;
    const turn = query.turn;
    this.update({ busy: true, notice: null, error: null });
    try {
      const result = await this.api.postResponse(sessionId, turn, chosen);
      if (result.query.turn <= turn) {
        throw new Error(`turn did not advance (${result.query.turn} <= ${turn})`);
      }
      this.update({
        query: result.query,
        recommendations: result.recommendations,
        diagnostics: result.diagnostics,
        history: [
          ...this.view.history,
          {
            query_idx: result.answered.turn,
            slate_ids: query.items.map((it) => it.id ?? `#${it.position}`),
            response_idx: chosen,
            evoi: result.answered.evoi,
          },
        ],
        busy: false,
      });
    } catch (err) {
      if (err instanceof ApiError && err.isConflict) {
        const fresh = await this.api.getQuery(sessionId);
        this.update({
          query: fresh,
          notice: "That turn was already answered; showing the current query.",
          busy: false,
        });
      } else {
        this.update({ busy: false, error: describe(err) });
      }
    }
  }

  /** No-preference skip: fetch a fresh view of the pending query without
   * posting a response (the belief is left untouched). */
  async skip(): Promise<void> {
    const { sessionId, busy } = this.view;
    if (busy || sessionId === null) return;
    this.update({ busy: true, notice: null });
    try {
      const fresh = await this.api.getQuery(sessionId);
      this.update({ query: fresh, busy: false, notice: "Skipped — no update sent." });
    } catch (err) {
      this.update({ busy: false, error: describe(err) });
    }
  }

  clearError(): void {
    this.update({ error: null });
  }
}

function describe(err: unknown): string {
  if (err instanceof ApiError) return `${err.code}: ${err.message}`;
  return err instanceof Error ? err.message : String(err);
}
