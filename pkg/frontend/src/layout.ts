/** Static layered DAG layout: nodes are assigned to layers by longest path
 * from a root, then spread horizontally. Deterministic, so node positions do
 * not move when assignments are toggled.
 */

import type { GraphEdge } from "./types";

export interface NodePosition {
  node: string;
  layer: number;
  x: number;
  y: number;
}

export interface Layout {
  positions: Map<string, NodePosition>;
  layerCount: number;
  width: number;
  height: number;
}

export const LAYER_HEIGHT = 90;
export const COLUMN_WIDTH = 110;

export function layerByLongestPath(
  nodes: string[],
  edges: GraphEdge[],
): Map<string, number> {
  const parents = new Map<string, string[]>(nodes.map((n) => [n, []]));
  for (const e of edges) parents.get(e.to)?.push(e.from);

  const layer = new Map<string, number>();
  const visiting = new Set<string>();

  const depth = (n: string): number => {
    const known = layer.get(n);
    if (known !== undefined) return known;
    if (visiting.has(n)) throw new Error(`cycle through ${n}`);
    visiting.add(n);
    const ps = parents.get(n) ?? [];
    const d = ps.length === 0 ? 0 : 1 + Math.max(...ps.map(depth));
    visiting.delete(n);
    layer.set(n, d);
    return d;
  };

  for (const n of nodes) depth(n);
  return layer;
}

export function layoutGraph(nodes: string[], edges: GraphEdge[]): Layout {
  const layers = layerByLongestPath(nodes, edges);
  const byLayer = new Map<number, string[]>();
  for (const n of [...nodes].sort()) {
    const l = layers.get(n) ?? 0;
    const row = byLayer.get(l) ?? [];
    row.push(n);
    byLayer.set(l, row);
  }
  const layerCount = Math.max(...byLayer.keys()) + 1;
  const widest = Math.max(...[...byLayer.values()].map((r) => r.length));
  const width = widest * COLUMN_WIDTH;

  const positions = new Map<string, NodePosition>();
  for (const [l, row] of byLayer) {
    const offset = (width - row.length * COLUMN_WIDTH) / 2;
    row.forEach((node, i) => {
      positions.set(node, {
        node,
        layer: l,
        x: offset + (i + 0.5) * COLUMN_WIDTH,
        y: (l + 0.5) * LAYER_HEIGHT,
      });
    });
  }
  return { positions, layerCount, width, height: layerCount * LAYER_HEIGHT };
}
