// Bootstraps the explorer: one session, controls on top, graph canvases in
// the middle, raw outputs on the right. All state round-trips through the
// URL so any view is shareable.

import { LatticeClient } from "./api.js";
import { Controls } from "./controls.js";
import { GraphView } from "./graphView.js";
import { buildListItems, crosslinkTargets } from "./listPane.js";
import { buildScene } from "./scene.js";
import type { GenerationsResponse, GraphResponse, ViewParams } from "./types.js";
import { DEFAULT_VIEW } from "./types.js";
import { viewFromQuery, viewToQuery } from "./urlState.js";

function el<T extends HTMLElement>(selector: string): T {
  const node = document.querySelector<T>(selector);
  if (!node) throw new Error(`missing element ${selector}`);
  return node;
}

async function boot(): Promise<void> {
  const query = new URLSearchParams(window.location.search);
  const base = query.get("api") ?? "http://localhost:8000";
  const client = new LatticeClient(base);

  let view: ViewParams = viewFromQuery(window.location.search) ?? DEFAULT_VIEW;
  let sessionId = query.get("session") ?? "";
  if (!sessionId) {
    sessionId = (await client.createSession()).session_id;
  }

  let lastGraph: GraphResponse | null = null;
  let lastGens: GenerationsResponse | null = null;
  const selection = new Set<string>(view.selection);

  const graphRoot = el<HTMLDivElement>("#graph-root");
  const listRoot = el<HTMLUListElement>("#list-root");
  const status = el<HTMLSpanElement>("#status");

  const views: Map<string, GraphView> = new Map();

  function syncUrl(): void {
    const params = new URLSearchParams(viewToQuery(view));
    params.set("session", sessionId);
    if (query.get("api")) params.set("api", base);
    history.replaceState(null, "", `?${params.toString()}`);
  }

  function renderGraph(doc: GraphResponse): void {
    lastGraph = doc;
    graphRoot.textContent = "";
    views.clear();
    for (const graphViewDoc of doc.views) {
      const svg = document.createElementNS("http://www.w3.org/2000/svg", "svg");
      svg.setAttribute("class", "graph-canvas");
      const scene = buildScene(doc, graphViewDoc);
      const pad = 20;
      svg.setAttribute("viewBox",
        `${scene.bounds.minX - pad} ${scene.bounds.minY - pad} ` +
        `${scene.bounds.maxX - scene.bounds.minX + 2 * pad} ` +
        `${scene.bounds.maxY - scene.bounds.minY + 2 * pad}`);
      graphRoot.appendChild(svg);
      const gv = new GraphView(svg, {
        onToggleNode: (nodeId) => {
          if (selection.has(nodeId)) selection.delete(nodeId);
          else selection.add(nodeId);
          view = { ...view, selection: [...selection].sort() };
          void refresh();
        },
        onHoverGeneration: (genId) => {
          if (!genId) {
            status.textContent = "";
            return;
          }
          const gen = lastGens?.generations.find((g) => g.id === genId);
          if (gen) status.textContent = gen.text; // full-text preview
        },
      });
      const freqs = new Map(graphViewDoc.lattice.nodes.map(
        (n) => [n.id, n.frequency]));
      gv.render(scene, selection, freqs);
      views.set(graphViewDoc.view_id, gv);
    }
  }

  function renderList(doc: GraphResponse, gens: GenerationsResponse): void {
    lastGens = gens;
    listRoot.textContent = "";
    for (const item of buildListItems(doc, gens.generations)) {
      const li = document.createElement("li");
      li.className = item.emphasized ? "gen emphasized" : "gen deemphasized";
      li.style.borderLeftColor = item.color;
      const preview = document.createElement("span");
      preview.textContent = item.text;
      li.appendChild(preview);
      li.addEventListener("click", () => {
        const path = lastGraph ? crosslinkTargets(lastGraph, item.id) : [];
        selection.clear();
        for (const nid of path) selection.add(nid);
        view = { ...view, selection: [...selection].sort() };
        void refresh();
      });
      li.addEventListener("dblclick", () => li.classList.toggle("expanded"));
      listRoot.appendChild(li);
    }
  }

  async function refresh(): Promise<void> {
    syncUrl();
    status.textContent = "loading…";
    try {
      const doc = await client.getGraph(sessionId, view);
      const gens = await client.getGenerations(sessionId, view);
      renderGraph(doc);
      renderList(doc, gens);
      status.textContent =
        `${doc.views.length} view(s), threshold ${doc.threshold}`;
    } catch (err) {
      if ((err as Error).name === "AbortError") return;  // superseded
      status.textContent = `error: ${(err as Error).message}`;
    }
  }

  const controls = new Controls(el("#controls"), view, {
    onViewChange: (next) => {
      if (next.mode !== view.mode) {
        selection.clear(); // node ids do not survive re-tokenization
      }
      view = { ...next, selection: [...selection].sort() };
      void refresh();
    },
    onAddPrompt: (values) => {
      void (async () => {
        status.textContent = "sampling…";
        const job = await client.addPrompt(sessionId, {
          prompt_text: values.promptText,
          model_id: values.modelId,
          temperature: values.temperature,
          n_generations: values.nGenerations,
        });
        while (true) {
          const st = await client.jobStatus(job.job_id);
          if (st.status === "done") break;
          if (st.status === "error") {
            status.textContent = `sampling failed: ${st.error}`;
            return;
          }
          await new Promise((r) => setTimeout(r, 300));
        }
        void refresh();
      })();
    },
    onToggleComparison: (layout) => {
      view = { ...view, layout };
      void refresh();
    },
  });
  void controls;

  void refresh();
}

void boot();
