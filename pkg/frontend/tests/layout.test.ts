import { describe, expect, it } from "vitest";

import { LAYER_HEIGHT, layerByLongestPath, layoutGraph } from "../src/layout";
import type { GraphEdge } from "../src/types";

const DIAMOND: GraphEdge[] = [
  { from: "A", to: "B" },
  { from: "A", to: "C" },
  { from: "B", to: "D" },
  { from: "C", to: "D" },
  { from: "A", to: "D" },
];

describe("layerByLongestPath", () => {
  it("assigns each node its longest distance from a root", () => {
    const layers = layerByLongestPath(["A", "B", "C", "D"], DIAMOND);
    expect(layers.get("A")).toBe(0);
    expect(layers.get("B")).toBe(1);
    expect(layers.get("C")).toBe(1);
    // D has a direct edge from A but sits below B/C: longest path wins
    expect(layers.get("D")).toBe(2);
  });

  it("puts disconnected nodes on layer 0", () => {
    const layers = layerByLongestPath(["A", "B"], []);
    expect(layers.get("A")).toBe(0);
    expect(layers.get("B")).toBe(0);
  });

  it("rejects cyclic input", () => {
    const cyclic: GraphEdge[] = [
      { from: "A", to: "B" },
      { from: "B", to: "A" },
    ];
    expect(() => layerByLongestPath(["A", "B"], cyclic)).toThrow(/cycle/);
  });
});

describe("layoutGraph", () => {
  it("every edge points downward (strictly increasing y)", () => {
    const layout = layoutGraph(["A", "B", "C", "D"], DIAMOND);
    for (const e of DIAMOND) {
      const a = layout.positions.get(e.from)!;
      const b = layout.positions.get(e.to)!;
      expect(b.y).toBeGreaterThan(a.y);
    }
  });

  it("nodes in the same layer get distinct x positions", () => {
    const layout = layoutGraph(["A", "B", "C", "D"], DIAMOND);
    const b = layout.positions.get("B")!;
    const c = layout.positions.get("C")!;
    expect(b.layer).toBe(c.layer);
    expect(b.x).not.toBe(c.x);
  });

  it("is deterministic regardless of node order", () => {
    const one = layoutGraph(["A", "B", "C", "D"], DIAMOND);
    const two = layoutGraph(["D", "C", "B", "A"], DIAMOND);
    for (const n of ["A", "B", "C", "D"]) {
      expect(two.positions.get(n)).toEqual(one.positions.get(n));
    }
  });

  it("reports a bounding box covering all layers", () => {
    const layout = layoutGraph(["A", "B", "C", "D"], DIAMOND);
    expect(layout.layerCount).toBe(3);
    expect(layout.height).toBe(3 * LAYER_HEIGHT);
    for (const p of layout.positions.values()) {
      expect(p.x).toBeGreaterThan(0);
      expect(p.x).toBeLessThan(layout.width);
      expect(p.y).toBeGreaterThan(0);
      expect(p.y).toBeLessThan(layout.height);
    }
  });
});
