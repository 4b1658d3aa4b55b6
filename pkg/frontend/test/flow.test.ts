import { describe, expect, it } from "vitest";

import { Api, ApiError, AnswerResult, QueryPayload, SessionCreated } from "../src/api.js";
import { SessionFlow } from "../src/flow.js";

function query(turn: number): QueryPayload {
  return {
    turn,
    items: [
      { position: 0, id: `a${turn}`, name: `Item A${turn}` },
      { position: 1, id: `b${turn}`, name: `Item B${turn}` },
    ],
  };
}

function answerResult(turn: number): AnswerResult {
  return {
    answered: { turn, evoi: 0.5, regret: null },
    query: query(turn + 1),
    recommendations: [{ id: "a0", name: "Item A0", eu: 1.2 }],
    diagnostics: { turn: turn + 1, ess: 42, evoi: [0.5] },
  };
}

interface Call {
  method: string;
  args: unknown[];
}

/** In-memory stand-in for the service client, recording every call. */
function fakeApi(overrides: Partial<Record<string, unknown>> = {}) {
  const calls: Call[] = [];
  let turn = 0;
  const api = {
    calls,
    createSession: async (): Promise<SessionCreated> => {
      calls.push({ method: "createSession", args: [] });
      return {
        session_id: "s1",
        mode: "live",
        strategy: "greedy",
        k: 2,
        query: query(0),
      };
    },
    postResponse: async (_id: string, t: number, chosen: number): Promise<AnswerResult> => {
      calls.push({ method: "postResponse", args: [t, chosen] });
      if (t !== turn) throw new ApiError(409, "stale_turn", "already answered");
      turn += 1;
      return answerResult(t);
    },
    getQuery: async (): Promise<QueryPayload> => {
      calls.push({ method: "getQuery", args: [] });
      return query(turn);
    },
    ...overrides,
  };
  return api as unknown as Api & { calls: Call[] };
}

describe("SessionFlow", () => {
  it("start installs the first query", async () => {
    const flow = new SessionFlow(fakeApi());
    await flow.start({ mode: "live", strategy: "greedy", k: 2 });
    expect(flow.state.sessionId).toBe("s1");
    expect(flow.state.query?.turn).toBe(0);
    expect(flow.state.query?.items).toHaveLength(2);
  });

  it("answer posts the current turn as the idempotency token", async () => {
    const api = fakeApi();
    const flow = new SessionFlow(api);
    await flow.start({ mode: "live", strategy: "greedy", k: 2 });
    await flow.answer(1);
    const post = api.calls.find((c) => c.method === "postResponse");
    expect(post?.args).toEqual([0, 1]);
    expect(flow.state.query?.turn).toBe(1);
    expect(flow.state.history).toHaveLength(1);
    expect(flow.state.history[0].response_idx).toBe(1);
  });

  it("ignores a second submit while one is in flight", async () => {
    const api = fakeApi();
    const flow = new SessionFlow(api);
    await flow.start({ mode: "live", strategy: "greedy", k: 2 });
    await Promise.all([flow.answer(0), flow.answer(1)]);
    const posts = api.calls.filter((c) => c.method === "postResponse");
    expect(posts).toHaveLength(1);
  });

  it("turns a conflict into a notice and refetches the query", async () => {
    const api = fakeApi({
      postResponse: async () => {
        throw new ApiError(409, "stale_turn", "turn 0 already answered");
      },
      getQuery: async (): Promise<QueryPayload> => query(1),
    });
    const flow = new SessionFlow(api);
    await flow.start({ mode: "live", strategy: "greedy", k: 2 });
    await flow.answer(0);
    expect(flow.state.notice).toMatch(/already answered/);
    expect(flow.state.error).toBeNull();
    expect(flow.state.query?.turn).toBe(1);
  });

  it("skip refetches without posting a response", async () => {
    const api = fakeApi();
    const flow = new SessionFlow(api);
    await flow.start({ mode: "live", strategy: "greedy", k: 2 });
    await flow.skip();
    expect(api.calls.some((c) => c.method === "postResponse")).toBe(false);
    expect(api.calls.some((c) => c.method === "getQuery")).toBe(true);
    expect(flow.state.query?.turn).toBe(0);
  });

  it("surfaces non-conflict errors without corrupting the view", async () => {
    const api = fakeApi({
      postResponse: async () => {
        throw new ApiError(422, "invalid_choice", "chosen must be in [0, 2)");
      },
    });
    const flow = new SessionFlow(api);
    await flow.start({ mode: "live", strategy: "greedy", k: 2 });
    await flow.answer(5);
    expect(flow.state.error).toMatch(/invalid_choice/);
    expect(flow.state.query?.turn).toBe(0);
    expect(flow.state.busy).toBe(false);
  });

  it("rejects a response whose turn fails to advance", async () => {
    const api = fakeApi({
      postResponse: async (): Promise<AnswerResult> => ({
        ...answerResult(0),
        query: query(0),
      }),
    });
    const flow = new SessionFlow(api);
    await flow.start({ mode: "live", strategy: "greedy", k: 2 });
    await flow.answer(0);
    expect(flow.state.error).toMatch(/turn did not advance/);
  });

  it("answers across ten turns keep history in lockstep", async () => {
    const flow = new SessionFlow(fakeApi());
    await flow.start({ mode: "live", strategy: "greedy", k: 2 });
    for (let t = 0; t < 10; t += 1) await flow.answer(0);
    expect(flow.state.history).toHaveLength(10);
    expect(flow.state.history.map((h) => h.query_idx)).toEqual([...Array(10).keys()]);
    expect(flow.state.query?.turn).toBe(10);
  });
});
