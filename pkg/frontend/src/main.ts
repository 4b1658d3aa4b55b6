/** DOM wiring: start form, session screen, event delegation. */

import { Api, SessionRequest } from "./api.js";
import { SessionFlow, FlowView } from "./flow.js";
import { renderDiagnostics, renderHistory, renderQuery, renderRecommendations } from "./render.js";

const api = new Api("");
const flow = new SessionFlow(api);

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function renderApp(view: FlowView): void {
  el("setup").hidden = view.sessionId !== null;
  el("session").hidden = view.sessionId === null;
  el<HTMLElement>("notice").textContent = view.notice ?? "";
  el<HTMLElement>("error").textContent = view.error ?? "";
  if (view.sessionId === null) return;
  el<HTMLElement>("meta").textContent =
    `${view.strategy} · k=${view.k}` + (view.mode === "demo" ? " · demo" : "");
  el<HTMLElement>("query-root").innerHTML = view.query ? renderQuery(view.query) : "";
  el<HTMLElement>("recs-root").innerHTML = renderRecommendations(view.recommendations);
  el<HTMLElement>("diag-root").innerHTML = renderDiagnostics(
    view.diagnostics,
    view.mode === "demo",
  );
  el<HTMLElement>("history-root").innerHTML = renderHistory(view.history);
  el<HTMLElement>("query-root").classList.toggle("busy", view.busy);
}

async function populateCatalogs(): Promise<void> {
  const select = el<HTMLSelectElement>("catalog");
  try {
    const catalogs = await api.listCatalogs();
    for (const c of catalogs) {
      const option = document.createElement("option");
      option.value = c.id;
      option.textContent = `${c.id} (${c.n_items} items, d=${c.dim})`;
      select.appendChild(option);
    }
  } catch {
    /* list stays empty; demo mode still works */
  }
}

function startRequest(): SessionRequest {
  const mode = el<HTMLSelectElement>("mode").value as "live" | "demo";
  const strategy = el<HTMLSelectElement>("strategy").value;
  const k = parseInt(el<HTMLInputElement>("slate-size").value, 10) || 2;
  const req: SessionRequest = { mode, strategy, k };
  if (mode === "demo") {
    req.catalog = { kind: "synth", n: 500, d: 10 };
    req.seed = Math.floor(Math.random() * 1_000_000);
  } else {
    req.catalog_id = el<HTMLSelectElement>("catalog").value;
  }
  return req;
}

function wire(): void {
  flow.subscribe(renderApp);
  el("start-form").addEventListener("submit", (ev) => {
    ev.preventDefault();
    void flow.start(startRequest());
  });
  el("query-root").addEventListener("click", (ev) => {
    const target = (ev.target as HTMLElement).closest("button");
    if (!target) return;
    if (target.dataset.action === "skip") {
      void flow.skip();
    } else if (target.dataset.choice !== undefined) {
      void flow.answer(parseInt(target.dataset.choice, 10));
    }
  });
  el("error").addEventListener("click", () => flow.clearError());
  void populateCatalogs();
}

document.addEventListener("DOMContentLoaded", wire);
