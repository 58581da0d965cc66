/** DOM rendering. Every number shown on screen is a formatted copy of a
 * value taken verbatim from a service response; nothing is recomputed here.
 */

import { layoutGraph } from "./layout";
import type {
  Assignment,
  GraphResponse,
  QueryResponse,
  SensitivityResponse,
} from "./types";

const SVG_NS = "http://www.w3.org/2000/svg";

const TIER_COLORS: Record<string, string> = {
  high: "#2e7d32", // green
  moderate: "#1565c0", // blue
  low: "#c62828", // red
};
const DEFAULT_EDGE_COLOR = "#555";

export function formatProbability(p: number): string {
  return p.toFixed(4);
}

export function formatDeltaPp(d: number): string {
  const sign = d > 0 ? "+" : "";
  return `${sign}${d.toFixed(2)}pp`;
}

export function deltaClass(d: number): string {
  if (d > 0) return "delta-positive";
  if (d < 0) return "delta-negative";
  return "delta-zero";
}

/** Node fill under sensitivity shading: rank 0 (most sensitive) is the
 * strongest red, fading with rank. */
export function sensitivityFill(rank: number, total: number): string {
  const t = total <= 1 ? 0 : rank / (total - 1);
  const lightness = 45 + Math.round(t * 50); // 45% (strong) .. 95% (faint)
  return `hsl(0, 75%, ${lightness}%)`;
}

export interface GraphRenderOptions {
  assignments?: Record<string, Assignment>;
  target?: string | null;
  sensitivity?: SensitivityResponse | null;
  onNodeClick?: (node: string) => void;
}

export function renderGraph(
  container: HTMLElement,
  graph: GraphResponse,
  opts: GraphRenderOptions = {},
): void {
  container.textContent = "";
  const layout = layoutGraph(graph.nodes, graph.edges);
  const svg = document.createElementNS(SVG_NS, "svg");
  svg.setAttribute("viewBox", `0 0 ${layout.width} ${layout.height}`);
  svg.setAttribute("class", "dag-view");

  for (const edge of graph.edges) {
    const a = layout.positions.get(edge.from);
    const b = layout.positions.get(edge.to);
    if (!a || !b) continue;
    const line = document.createElementNS(SVG_NS, "line");
    line.setAttribute("x1", String(a.x));
    line.setAttribute("y1", String(a.y));
    line.setAttribute("x2", String(b.x));
    line.setAttribute("y2", String(b.y));
    line.setAttribute("marker-end", "url(#arrow)");
    line.setAttribute(
      "stroke",
      edge.tier ? (TIER_COLORS[edge.tier] ?? DEFAULT_EDGE_COLOR) : DEFAULT_EDGE_COLOR,
    );
    line.setAttribute("data-edge", `${edge.from}->${edge.to}`);
    // a do-intervention severs incoming edges: mark them cut
    if (opts.assignments?.[edge.to]?.kind === "do") {
      line.setAttribute("stroke-dasharray", "4 3");
      line.setAttribute("data-cut", "true");
    }
    svg.appendChild(line);
  }

  const ranking = opts.sensitivity?.ranking ?? null;
  for (const node of graph.nodes) {
    const pos = layout.positions.get(node);
    if (!pos) continue;
    const g = document.createElementNS(SVG_NS, "g");
    g.setAttribute("class", "dag-node");
    g.setAttribute("data-node", node);
    const circle = document.createElementNS(SVG_NS, "circle");
    circle.setAttribute("cx", String(pos.x));
    circle.setAttribute("cy", String(pos.y));
    circle.setAttribute("r", "26");
    if (ranking && node !== opts.sensitivity?.target) {
      const rank = ranking.indexOf(node);
      circle.setAttribute(
        "fill",
        rank >= 0 ? sensitivityFill(rank, ranking.length) : "#eee",
      );
      circle.setAttribute("data-sensitivity-rank", String(rank));
    } else {
      circle.setAttribute("fill", node === opts.target ? "#ffd54f" : "#e3eaf2");
    }
    g.appendChild(circle);

    const label = document.createElementNS(SVG_NS, "text");
    label.setAttribute("x", String(pos.x));
    label.setAttribute("y", String(pos.y + 40));
    label.setAttribute("text-anchor", "middle");
    label.textContent = node;
    g.appendChild(label);

    const assignment = opts.assignments?.[node];
    if (assignment) {
      const badge = document.createElementNS(SVG_NS, "text");
      badge.setAttribute("x", String(pos.x));
      badge.setAttribute("y", String(pos.y + 4));
      badge.setAttribute("text-anchor", "middle");
      badge.setAttribute(
        "class",
        assignment.kind === "do" ? "badge-do" : "badge-evidence",
      );
      // scissors for surgery, eye for observation
      badge.textContent =
        assignment.kind === "do"
          ? `✂ ${assignment.state}`
          : `\u{1F441} ${assignment.state}`;
      g.appendChild(badge);
    }

    if (opts.onNodeClick) {
      g.addEventListener("click", () => opts.onNodeClick?.(node));
    }
    svg.appendChild(g);
  }
  container.appendChild(svg);
}

/** One row per target state: baseline, posterior, delta — all verbatim from
 * the response. */
export function renderDeltaView(
  container: HTMLElement,
  response: QueryResponse,
): void {
  container.textContent = "";
  const table = document.createElement("table");
  table.setAttribute("class", "delta-view");
  const head = table.createTHead().insertRow();
  for (const h of ["state", "baseline", "posterior", "delta"]) {
    const th = document.createElement("th");
    th.textContent = h;
    head.appendChild(th);
  }
  const body = table.createTBody();
  response.states.forEach((state, i) => {
    const row = body.insertRow();
    row.insertCell().textContent = state;
    const baseline = row.insertCell();
    baseline.textContent = formatProbability(response.baseline[i]);
    baseline.setAttribute("data-raw", String(response.baseline[i]));
    const posterior = row.insertCell();
    posterior.textContent = formatProbability(response.posterior[i]);
    posterior.setAttribute("data-raw", String(response.posterior[i]));
    const delta = row.insertCell();
    delta.textContent = formatDeltaPp(response.delta_pp[i]);
    delta.setAttribute("data-raw", String(response.delta_pp[i]));
    delta.setAttribute("class", deltaClass(response.delta_pp[i]));
  });
  container.appendChild(table);
}

/** Side-by-side delta columns for two models answering the same request.
 * A column-level error (e.g. a state invalid in one model) must not blank
 * the other column. */
export function renderComparePanel(
  container: HTMLElement,
  columns: {
    modelId: string;
    response: QueryResponse | null;
    error: string | null;
  }[],
): void {
  container.textContent = "";
  for (const col of columns) {
    const div = document.createElement("div");
    div.setAttribute("class", "compare-column");
    div.setAttribute("data-model", col.modelId);
    const title = document.createElement("h3");
    title.textContent = col.modelId;
    div.appendChild(title);
    if (col.error !== null) {
      const err = document.createElement("p");
      err.setAttribute("class", "column-error");
      err.textContent = col.error;
      div.appendChild(err);
    } else if (col.response) {
      const holder = document.createElement("div");
      renderDeltaView(holder, col.response);
      div.appendChild(holder);
    }
    container.appendChild(div);
  }
}

export function renderErrorBanner(container: HTMLElement, message: string): void {
  const banner = document.createElement("div");
  banner.setAttribute("class", "error-banner");
  banner.textContent = message;
  container.prepend(banner);
}
