// The UI's selection semantics must be indistinguishable from the engine's
// FilterResult: same conjunction rule, same partition, on real wire bytes.

import { describe, expect, it } from "vitest";

import { partitionFromResponse, partitionGenerations, traversalPath } from "../src/selection.js";
import type { GenerationsResponse, GraphResponse } from "../src/types.js";

import plainDoc from "./fixtures/graph_20x50.json";
import selectedDoc from "./fixtures/graph_20x50_selected.json";
import generationsDoc from "./fixtures/generations_20x50_selected.json";

const plain = plainDoc as unknown as GraphResponse;
const selected = selectedDoc as unknown as GraphResponse;
const generations = generationsDoc as unknown as GenerationsResponse;

describe("selection partition parity with the engine", () => {
  it("matches FilterResult for the fixture selection", () => {
    const local = partitionFromResponse(selected);
    expect([...local.emphasized].sort()).toEqual(
      [...selected.filter.emphasized].sort(),
    );
    expect([...local.deemphasized].sort()).toEqual(
      [...selected.filter.deemphasized].sort(),
    );
  });

  it("matches the /generations emphasized flags", () => {
    const local = partitionFromResponse(selected);
    for (const gen of generations.generations) {
      expect(local.emphasized.has(gen.id)).toBe(gen.emphasized);
    }
  });

  it("emphasizes everything when nothing is selected", () => {
    const local = partitionFromResponse(plain);
    expect(local.deemphasized.size).toBe(0);
    expect([...local.emphasized].sort()).toEqual(
      [...plain.filter.emphasized].sort(),
    );
  });

  it("conjunction over several selected nodes", () => {
    const lattice = selected.views[0]!.lattice;
    // pick two nodes with overlapping but distinct generation sets
    const genSets = new Map<string, Set<string>>();
    for (const trav of lattice.traversals) {
      for (const nid of trav.path) {
        if (!genSets.has(nid)) genSets.set(nid, new Set());
        genSets.get(nid)!.add(trav.gen);
      }
    }
    const total = lattice.traversals.length;
    const candidates = [...genSets.entries()].filter(
      ([, gens]) => gens.size >= 2 && gens.size <= total - 2,
    );
    const [idA, gensA] = candidates[0]!;
    const [idB, gensB] = candidates.find(
      ([, gens]) =>
        [...gens].some((g) => gensA.has(g)) &&
        [...gens].some((g) => !gensA.has(g)),
    )!;
    const local = partitionGenerations([lattice], new Set([idA, idB]));
    const expected = [...gensB].filter((g) => gensA.has(g)).sort();
    expect([...local.emphasized].sort()).toEqual(expected);
  });

  it("selection is stable across repeated evaluation", () => {
    const a = partitionFromResponse(selected);
    const b = partitionFromResponse(selected);
    expect([...a.emphasized].sort()).toEqual([...b.emphasized].sort());
  });
});

describe("crosslink", () => {
  it("returns the full ordered node path for a generation", () => {
    const lattice = selected.views[0]!.lattice;
    const trav = lattice.traversals[0]!;
    expect(traversalPath(lattice, trav.gen)).toEqual(trav.path);
  });

  it("returns empty for unknown generations", () => {
    expect(traversalPath(selected.views[0]!.lattice, "nope")).toEqual([]);
  });
});
