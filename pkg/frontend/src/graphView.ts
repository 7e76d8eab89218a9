// SVG renderer: one <g> per scene, transformed as a whole for pan/zoom.
// Node clicks toggle selection; hover shows frequency tooltips.

import { frame, IDENTITY, pan, toSvgAttribute, zoomAt, type Transform } from "./panzoom.js";
import type { Scene } from "./scene.js";

const SVG_NS = "http://www.w3.org/2000/svg";

export interface GraphViewCallbacks {
  onToggleNode(nodeId: string): void;
  onHoverGeneration?(genId: string | null): void;
}

export class GraphView {
  private transform: Transform = IDENTITY;
  private group: SVGGElement | null = null;
  private scene: Scene | null = null;
  private dragging: { x: number; y: number } | null = null;

  constructor(
    private readonly svg: SVGSVGElement,
    private readonly callbacks: GraphViewCallbacks,
  ) {
    svg.addEventListener("wheel", (ev) => {
      ev.preventDefault();
      const factor = ev.deltaY < 0 ? 1.15 : 1 / 1.15;
      const rect = svg.getBoundingClientRect();
      this.transform = zoomAt(
        this.transform, ev.clientX - rect.left, ev.clientY - rect.top, factor);
      this.applyTransform();
    }, { passive: false });
    svg.addEventListener("pointerdown", (ev) => {
      this.dragging = { x: ev.clientX, y: ev.clientY };
      svg.setPointerCapture(ev.pointerId);
    });
    svg.addEventListener("pointermove", (ev) => {
      if (!this.dragging) return;
      this.transform = pan(
        this.transform, ev.clientX - this.dragging.x, ev.clientY - this.dragging.y);
      this.dragging = { x: ev.clientX, y: ev.clientY };
      this.applyTransform();
    });
    svg.addEventListener("pointerup", () => {
      this.dragging = null;
    });
  }

  private applyTransform(): void {
    if (this.group) {
      this.group.setAttribute("transform", toSvgAttribute(this.transform));
    }
  }

  frameStats(): { visibleEllipses: number; visibleSegments: number } | null {
    if (!this.scene) return null;
    const rect = this.svg.getBoundingClientRect();
    return frame(this.scene, this.transform,
                 { width: rect.width, height: rect.height });
  }

  render(scene: Scene, selection: ReadonlySet<string>,
         frequencies: Map<string, number>): void {
    this.scene = scene;
    this.svg.textContent = "";
    const group = document.createElementNS(SVG_NS, "g");
    group.setAttribute("transform", toSvgAttribute(this.transform));
    this.group = group;

    const strokesGroup = document.createElementNS(SVG_NS, "g");
    strokesGroup.setAttribute("fill", "none");
    for (const stroke of scene.strokes) {
      const poly = document.createElementNS(SVG_NS, "polyline");
      poly.setAttribute("points",
                        stroke.points.map(([x, y]) => `${x},${y}`).join(" "));
      poly.setAttribute("stroke", stroke.color);
      poly.setAttribute("stroke-width", String(stroke.width));
      poly.setAttribute("stroke-opacity", String(stroke.opacity));
      if (stroke.blurred) poly.setAttribute("filter", "blur(1px)");
      poly.addEventListener("pointerenter",
                            () => this.callbacks.onHoverGeneration?.(stroke.gen));
      poly.addEventListener("pointerleave",
                            () => this.callbacks.onHoverGeneration?.(null));
      strokesGroup.appendChild(poly);
    }
    group.appendChild(strokesGroup);

    for (const ellipse of scene.ellipses) {
      const el = document.createElementNS(SVG_NS, "ellipse");
      el.setAttribute("cx", String(ellipse.x));
      el.setAttribute("cy", String(ellipse.y));
      el.setAttribute("rx", String(ellipse.rx));
      el.setAttribute("ry", String(ellipse.ry));
      el.setAttribute("fill", ellipse.fill);
      el.setAttribute("fill-opacity", String(0.85 * ellipse.opacity));
      el.setAttribute("stroke",
                      selection.has(ellipse.id) ? "#111111" : "#44444d");
      el.setAttribute("stroke-width", selection.has(ellipse.id) ? "2" : "0.8");
      if (ellipse.blurred) el.setAttribute("filter", "blur(1px)");
      el.style.cursor = "pointer";
      el.addEventListener("click",
                          () => this.callbacks.onToggleNode(ellipse.id));
      const title = document.createElementNS(SVG_NS, "title");
      title.textContent =
        `${ellipse.label}\nin ${frequencies.get(ellipse.id) ?? 0} generations`;
      el.appendChild(title);
      group.appendChild(el);

      const text = document.createElementNS(SVG_NS, "text");
      text.setAttribute("x", String(ellipse.x));
      text.setAttribute("y", String(ellipse.y + ellipse.fontSize * 0.35));
      text.setAttribute("text-anchor", "middle");
      text.setAttribute("font-size", String(ellipse.fontSize));
      text.setAttribute("fill-opacity", String(ellipse.opacity));
      text.setAttribute("pointer-events", "none");
      text.textContent = ellipse.label.length > 28
        ? `${ellipse.label.slice(0, 27)}…`
        : ellipse.label;
      group.appendChild(text);
    }

    this.svg.appendChild(group);
  }
}
