// Global controls: prompt text + sampling settings, the '+' button for
// comparison prompts, and the three sliders (hide-longtail, merge-similar,
// parent-interpolation). Slider input is debounced so a drag issues one
// refresh.

import { debounce, SLIDER_DEBOUNCE_MS } from "./debounce.js";
import type { ViewParams } from "./types.js";

export interface PromptFormValues {
  promptText: string;
  modelId: string;
  temperature: number;
  nGenerations: number;
}

export interface ControlCallbacks {
  onViewChange(view: ViewParams): void;
  onAddPrompt(values: PromptFormValues): void;
  onToggleComparison(layout: "merged" | "side_by_side"): void;
}

export class Controls {
  private view: ViewParams;

  constructor(
    private readonly root: HTMLElement,
    initial: ViewParams,
    private readonly callbacks: ControlCallbacks,
    debounceMs: number = SLIDER_DEBOUNCE_MS,
  ) {
    this.view = { ...initial };
    this.emitViewChange = debounce(
      () => this.callbacks.onViewChange({ ...this.view }), debounceMs);
    this.wire();
  }

  private emitViewChange: () => void;

  private slider(name: string): HTMLInputElement {
    const el = this.root.querySelector<HTMLInputElement>(`[data-slider="${name}"]`);
    if (!el) throw new Error(`missing slider ${name}`);
    return el;
  }

  private wire(): void {
    const longtail = this.slider("longtail");
    longtail.addEventListener("input", () => {
      this.view.longtail = Number(longtail.value);
      this.emitViewChange();
    });
    const threshold = this.slider("threshold");
    threshold.addEventListener("input", () => {
      this.view.threshold = Number(threshold.value);
      this.emitViewChange();
    });
    const lambda = this.slider("lambda");
    lambda.addEventListener("input", () => {
      this.view.lambda = Number(lambda.value);
      this.emitViewChange();
    });

    const mode = this.root.querySelector<HTMLSelectElement>("[data-mode]");
    mode?.addEventListener("change", () => {
      this.view.mode = mode.value;
      this.callbacks.onViewChange({ ...this.view });  // discrete: immediate
    });

    const comparison = this.root.querySelector<HTMLInputElement>("[data-comparison]");
    comparison?.addEventListener("change", () => {
      const layout = comparison.checked ? "side_by_side" : "merged";
      this.view.layout = layout;
      this.callbacks.onToggleComparison(layout);
    });

    const add = this.root.querySelector<HTMLButtonElement>("[data-add-prompt]");
    add?.addEventListener("click", () => {
      this.callbacks.onAddPrompt(this.readPromptForm());
    });
  }

  private readPromptForm(): PromptFormValues {
    const value = (sel: string, fallback: string): string =>
      this.root.querySelector<HTMLInputElement>(sel)?.value ?? fallback;
    return {
      promptText: value("[data-prompt-text]", ""),
      modelId: value("[data-model]", ""),
      temperature: Number(value("[data-temperature]", "0.7")),
      nGenerations: Number(value("[data-n]", "20")),  // study-scale default
    };
  }

  setSelection(selection: string[]): void {
    this.view.selection = selection;
    this.callbacks.onViewChange({ ...this.view });
  }
}
