// Selection semantics, kept in lockstep with the engine's FilterResult:
// a generation is emphasized iff its traversal visits every selected node.
// The UI normally consumes the server's filter field directly; this local
// version exists for optimistic highlighting and is contract-tested to
// produce identical partitions.

import type { GraphResponse, LatticeExport } from "./types.js";

export interface Partition {
  emphasized: Set<string>;
  deemphasized: Set<string>;
}

export function partitionGenerations(
  lattices: LatticeExport[],
  selection: ReadonlySet<string>,
): Partition {
  const all = new Set<string>();
  for (const lattice of lattices) {
    for (const trav of lattice.traversals) all.add(trav.gen);
  }
  if (selection.size === 0) {
    return { emphasized: all, deemphasized: new Set() };
  }
  const emphasized = new Set<string>();
  for (const lattice of lattices) {
    for (const trav of lattice.traversals) {
      const visited = new Set(trav.path);
      let containsAll = true;
      for (const nid of selection) {
        if (!visited.has(nid)) {
          containsAll = false;
          break;
        }
      }
      if (containsAll) emphasized.add(trav.gen);
    }
  }
  const deemphasized = new Set<string>();
  for (const gen of all) {
    if (!emphasized.has(gen)) deemphasized.add(gen);
  }
  return { emphasized, deemphasized };
}

export function partitionFromResponse(doc: GraphResponse): Partition {
  return partitionGenerations(
    doc.views.map((v) => v.lattice),
    new Set(doc.selection),
  );
}

/** Graph-to-list crosslink: the ordered node path of one generation. */
export function traversalPath(lattice: LatticeExport, gen: string): string[] {
  const trav = lattice.traversals.find((t) => t.gen === gen);
  return trav ? [...trav.path] : [];
}
