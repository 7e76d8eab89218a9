// Every view state is a shareable URL: the query string carries the same
// parameters the /graph endpoint accepts.

import { DEFAULT_VIEW, type ViewParams } from "./types.js";

export function viewToQuery(view: ViewParams): string {
  const params = new URLSearchParams();
  if (view.mode !== DEFAULT_VIEW.mode) params.set("mode", view.mode);
  if (view.threshold !== DEFAULT_VIEW.threshold) {
    params.set("threshold", String(view.threshold));
  }
  if (view.lambda !== DEFAULT_VIEW.lambda) params.set("lambda", String(view.lambda));
  if (view.longtail !== DEFAULT_VIEW.longtail) {
    params.set("longtail", String(view.longtail));
  }
  if (view.seed !== DEFAULT_VIEW.seed) params.set("seed", String(view.seed));
  if (view.selection.length > 0) params.set("selection", view.selection.join(","));
  if (view.layout !== DEFAULT_VIEW.layout) params.set("layout", view.layout);
  return params.toString();
}

export function viewFromQuery(query: string): ViewParams {
  const params = new URLSearchParams(query);
  const num = (name: string, fallback: number): number => {
    const raw = params.get(name);
    const value = raw === null ? NaN : Number(raw);
    return Number.isFinite(value) ? value : fallback;
  };
  const layout = params.get("layout");
  return {
    mode: params.get("mode") ?? DEFAULT_VIEW.mode,
    threshold: num("threshold", DEFAULT_VIEW.threshold),
    lambda: num("lambda", DEFAULT_VIEW.lambda),
    longtail: num("longtail", DEFAULT_VIEW.longtail),
    seed: num("seed", DEFAULT_VIEW.seed),
    selection: (params.get("selection") ?? "").split(",").filter(Boolean),
    layout: layout === "side_by_side" ? "side_by_side" : "merged",
  };
}
