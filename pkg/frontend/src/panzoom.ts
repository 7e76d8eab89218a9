// Pan/zoom as a tiny pure state machine. Rendering applies the transform
// to one group element, so a frame update is O(visible strokes) at most
// and typically just a transform attribute write.

import type { Scene } from "./scene.js";

export interface Transform {
  x: number;
  y: number;
  k: number;
}

export const IDENTITY: Transform = { x: 0, y: 0, k: 1 };
export const MIN_ZOOM = 0.1;
export const MAX_ZOOM = 12;

export function pan(t: Transform, dx: number, dy: number): Transform {
  return { x: t.x + dx, y: t.y + dy, k: t.k };
}

/** Zoom by `factor` keeping the screen point (cx, cy) fixed. */
export function zoomAt(
  t: Transform,
  cx: number,
  cy: number,
  factor: number,
): Transform {
  const k = Math.min(MAX_ZOOM, Math.max(MIN_ZOOM, t.k * factor));
  const scale = k / t.k;
  return {
    k,
    x: cx - (cx - t.x) * scale,
    y: cy - (cy - t.y) * scale,
  };
}

export function toSvgAttribute(t: Transform): string {
  return `translate(${t.x} ${t.y}) scale(${t.k})`;
}

export function apply(t: Transform, x: number, y: number): [number, number] {
  return [x * t.k + t.x, y * t.k + t.y];
}

export interface FrameStats {
  visibleEllipses: number;
  visibleSegments: number;
}

/**
 * One interactive frame: apply the transform and cull against the
 * viewport. This is the per-frame work the renderer performs while the
 * user pans or zooms (element positions are static under the group
 * transform; culling decides what stays in the DOM/draw list).
 */
export function frame(
  scene: Scene,
  t: Transform,
  viewport: { width: number; height: number },
): FrameStats {
  let visibleEllipses = 0;
  for (const e of scene.ellipses) {
    const [sx, sy] = apply(t, e.x, e.y);
    const rx = e.rx * t.k;
    const ry = e.ry * t.k;
    if (
      sx + rx >= 0 &&
      sx - rx <= viewport.width &&
      sy + ry >= 0 &&
      sy - ry <= viewport.height
    ) {
      visibleEllipses += 1;
    }
  }
  let visibleSegments = 0;
  for (const stroke of scene.strokes) {
    const pts = stroke.points;
    for (let i = 1; i < pts.length; i++) {
      const a = apply(t, pts[i - 1]![0], pts[i - 1]![1]);
      const b = apply(t, pts[i]![0], pts[i]![1]);
      const lo = Math.min(a[0], b[0]);
      const hi = Math.max(a[0], b[0]);
      const top = Math.min(a[1], b[1]);
      const bot = Math.max(a[1], b[1]);
      if (hi >= 0 && lo <= viewport.width && bot >= 0 && top <= viewport.height) {
        visibleSegments += 1;
      }
    }
  }
  return { visibleEllipses, visibleSegments };
}
