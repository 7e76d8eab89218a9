// Wire types for the lattice service. The UI renders these exports as-is:
// it never derives graph structure on its own.

export interface LatticeNodeExport {
  id: string;
  label: string;
  members: [string, number, number][];
  frequency: number;
  prompt_counts: Record<string, number>;
}

export interface TraversalExport {
  gen: string;
  prompt: string;
  path: string[];
}

export interface LatticeExport {
  version: number;
  mode: string;
  threshold: number | null;
  nodes: LatticeNodeExport[];
  traversals: TraversalExport[];
}

export interface LayoutNodeExport {
  id: string;
  x: number;
  y: number;
  rx: number;
  ry: number;
  size_scale: number;
  opacity: number;
  color: [number, number, number];
  color_hex: string;
  emphasized: boolean;
}

export interface LayoutPathExport {
  gen: string;
  points: [number, number][];
  emphasized: boolean;
}

export interface LayoutExport {
  version: number;
  params: Record<string, number>;
  converged: boolean;
  iterations_used: number;
  nodes: LayoutNodeExport[];
  paths: LayoutPathExport[];
}

export interface GraphView {
  view_id: string;
  lattice: LatticeExport;
  layout: LayoutExport;
}

export interface GraphResponse {
  session_id: string;
  snapshot_id: string;
  comparison_layout: "merged" | "side_by_side";
  mode: string;
  threshold: number;
  parent_interpolation: number;
  longtail: number;
  seed: number;
  selection: string[];
  palette: Record<string, string>;
  filter: { emphasized: string[]; deemphasized: string[] };
  views: GraphView[];
}

export interface GenerationItem {
  id: string;
  prompt_id: string;
  text: string;
  emphasized: boolean;
}

export interface GenerationsResponse {
  generations: GenerationItem[];
}

export interface ViewParams {
  mode: string;
  threshold: number;
  lambda: number;
  longtail: number;
  seed: number;
  selection: string[];
  layout: "merged" | "side_by_side";
}

export const DEFAULT_VIEW: ViewParams = {
  mode: "space",
  threshold: 0.5,
  lambda: 0.5,
  longtail: 0,
  seed: 42,
  selection: [],
  layout: "merged",
};
