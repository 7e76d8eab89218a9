// A slider drag is a burst of input events; exactly one /graph request may
// leave the client once the debounce window closes.

import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import { LatticeClient } from "../src/api.js";
import { debounce, SLIDER_DEBOUNCE_MS } from "../src/debounce.js";
import { DEFAULT_VIEW, type ViewParams } from "../src/types.js";

function countingFetch() {
  const calls: string[] = [];
  const fetchFn = async (input: string): Promise<Response> => {
    calls.push(input);
    return {
      ok: true,
      status: 200,
      statusText: "OK",
      json: async () => ({}),
    } as unknown as Response;
  };
  return { calls, fetchFn };
}

describe("debounced graph refresh", () => {
  beforeEach(() => vi.useFakeTimers());
  afterEach(() => vi.useRealTimers());

  it("issues exactly one request for a burst of slider changes", async () => {
    const { calls, fetchFn } = countingFetch();
    const client = new LatticeClient("http://api.test", fetchFn);
    let view: ViewParams = { ...DEFAULT_VIEW };
    const refresh = debounce(() => {
      void client.getGraph("s1", view);
    }, SLIDER_DEBOUNCE_MS);

    // drag: five rapid changes within the debounce window
    for (const value of [0.45, 0.4, 0.35, 0.3, 0.25]) {
      view = { ...view, threshold: value };
      refresh();
      vi.advanceTimersByTime(20);
    }
    expect(calls.length).toBe(0); // still inside the window

    vi.advanceTimersByTime(SLIDER_DEBOUNCE_MS + 1);
    await vi.runAllTimersAsync();
    expect(calls.length).toBe(1);
    expect(calls[0]).toContain("threshold=0.25"); // latest value wins
  });

  it("separate bursts issue separate requests", async () => {
    const { calls, fetchFn } = countingFetch();
    const client = new LatticeClient("http://api.test", fetchFn);
    const refresh = debounce(() => {
      void client.getGraph("s1", DEFAULT_VIEW);
    }, SLIDER_DEBOUNCE_MS);

    refresh();
    vi.advanceTimersByTime(SLIDER_DEBOUNCE_MS + 1);
    refresh();
    vi.advanceTimersByTime(SLIDER_DEBOUNCE_MS + 1);
    await vi.runAllTimersAsync();
    expect(calls.length).toBe(2);
  });

  it("cancel suppresses the trailing call", () => {
    const fn = vi.fn();
    const d = debounce(fn, 100);
    d();
    d.cancel();
    vi.advanceTimersByTime(500);
    expect(fn).not.toHaveBeenCalled();
  });
});

describe("superseded requests are aborted", () => {
  it("aborts the in-flight graph fetch when a new one starts", async () => {
    const aborted: boolean[] = [];
    const fetchFn = (input: string, init?: RequestInit): Promise<Response> =>
      new Promise((resolve, reject) => {
        init?.signal?.addEventListener("abort", () => {
          aborted.push(true);
          reject(new DOMException("aborted", "AbortError"));
        });
        setTimeout(() => resolve({
          ok: true, status: 200, statusText: "OK",
          json: async () => ({}),
        } as unknown as Response), 50);
      });
    const client = new LatticeClient("http://api.test", fetchFn);
    const first = client.getGraph("s1", DEFAULT_VIEW);
    const second = client.getGraph("s1", { ...DEFAULT_VIEW, threshold: 0.3 });
    await expect(first).rejects.toThrow();
    await new Promise((r) => setTimeout(r, 80));
    await second;
    expect(aborted).toEqual([true]);
  });
});
