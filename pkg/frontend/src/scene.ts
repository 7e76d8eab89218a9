// Pure scene construction from engine exports. Rendering adapters (SVG,
// canvas) draw exactly what this produces; no client-side path synthesis.

import type { GraphResponse, GraphView } from "./types.js";

export const DEEMPHASIS_OPACITY = 0.25;
export const STROKE_OPACITY = 0.35;
export const STROKE_WIDTH = 1.6;

export interface SceneEllipse {
  id: string;
  x: number;
  y: number;
  rx: number;
  ry: number;
  fill: string;
  opacity: number;
  blurred: boolean;
  label: string;
  fontSize: number;
}

export interface SceneStroke {
  gen: string;
  points: [number, number][];
  color: string;
  opacity: number;
  width: number;
  blurred: boolean;
}

export interface Scene {
  viewId: string;
  ellipses: SceneEllipse[];
  strokes: SceneStroke[];
  bounds: { minX: number; minY: number; maxX: number; maxY: number };
}

export function buildScene(doc: GraphResponse, view: GraphView): Scene {
  const promptOf = new Map<string, string>();
  for (const trav of view.lattice.traversals) promptOf.set(trav.gen, trav.prompt);
  const labelOf = new Map<string, string>();
  for (const node of view.lattice.nodes) labelOf.set(node.id, node.label);

  const ellipses: SceneEllipse[] = view.layout.nodes.map((node) => {
    const dim = node.emphasized ? 1 : DEEMPHASIS_OPACITY;
    return {
      id: node.id,
      x: node.x,
      y: node.y,
      rx: node.rx,
      ry: node.ry,
      fill: node.color_hex,
      opacity: node.opacity * dim,
      blurred: !node.emphasized,
      label: labelOf.get(node.id) ?? "",
      fontSize: 4 + 7 * node.size_scale,
    };
  });

  const strokes: SceneStroke[] = view.layout.paths
    .filter((path) => path.points.length >= 2)
    .map((path) => {
      const dim = path.emphasized ? 1 : DEEMPHASIS_OPACITY;
      const prompt = promptOf.get(path.gen) ?? "";
      return {
        gen: path.gen,
        points: path.points,
        color: doc.palette[prompt] ?? "#888888",
        opacity: STROKE_OPACITY * dim,
        width: STROKE_WIDTH,
        blurred: !path.emphasized,
      };
    });

  let minX = Infinity;
  let minY = Infinity;
  let maxX = -Infinity;
  let maxY = -Infinity;
  for (const e of ellipses) {
    minX = Math.min(minX, e.x - e.rx);
    maxX = Math.max(maxX, e.x + e.rx);
    minY = Math.min(minY, e.y - e.ry);
    maxY = Math.max(maxY, e.y + e.ry);
  }
  if (ellipses.length === 0) {
    minX = minY = 0;
    maxX = maxY = 100;
  }
  return {
    viewId: view.view_id,
    ellipses,
    strokes,
    bounds: { minX, minY, maxX, maxY },
  };
}

/** Every stroke segment must be an exported transition of its generation. */
export function strokeSegmentCount(scene: Scene): number {
  return scene.strokes.reduce((acc, s) => acc + s.points.length - 1, 0);
}
