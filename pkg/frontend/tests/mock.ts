/** Shared test fixtures: a canned service and a recording fetch stub. */

import type { FetchLike } from "../src/api";
import type {
  GraphResponse,
  ModelsResponse,
  QueryResponse,
  SensitivityResponse,
} from "../src/types";

export interface RecordedCall {
  url: string;
  method: string;
  body: unknown;
}

export interface MockService {
  fetch: FetchLike;
  calls: RecordedCall[];
}

type Handler = (call: RecordedCall) => { status: number; json: unknown };

/** Deterministic fetch stub: routes each request through `route` and records
 * every call in order. */
export function mockFetch(route: Handler): MockService {
  const calls: RecordedCall[] = [];
  const fetchImpl: FetchLike = async (url, init) => {
    const call: RecordedCall = {
      url,
      method: init?.method ?? "GET",
      body: init?.body ? JSON.parse(String(init.body)) : null,
    };
    calls.push(call);
    const { status, json } = route(call);
    return new Response(JSON.stringify(json), {
      status,
      headers: { "Content-Type": "application/json" },
    });
  };
  return { fetch: fetchImpl, calls };
}

// Deliberately awkward numbers: any client-side rounding or re-derivation
// would be visible in the data-raw attributes.
export const QUERY_RESPONSE: QueryResponse = {
  schema_version: 1,
  target: "Diabetes_binary",
  states: ["0", "1"],
  baseline: [0.8613724190509967, 0.1386275809490033],
  posterior: [0.7201563412908771, 0.2798436587091229],
  delta_pp: [-14.12160777601196, 14.12160777601196],
  elapsed_ms: 3.14,
};

export const MODELS_RESPONSE: ModelsResponse = {
  schema_version: 1,
  models: [
    { id: "average", algorithm: "average", fitted_at: "", nodes: 22, edges: 37 },
    { id: "hc", algorithm: "hc", fitted_at: "", nodes: 22, edges: 40 },
  ],
};

export function smallGraph(): GraphResponse {
  return {
    schema_version: 1,
    nodes: ["A", "B", "C", "D"],
    edges: [
      { from: "A", to: "C", tier: "high" },
      { from: "B", to: "C", tier: "moderate" },
      { from: "C", to: "D", tier: "low" },
      { from: "A", to: "D" },
    ],
    states: { A: ["0", "1"], B: ["0", "1"], C: ["0", "1"], D: ["0", "1"] },
  };
}

/** A 22-node chain graph matching the advertised model size. */
export function wideGraph(): GraphResponse {
  const nodes = Array.from({ length: 22 }, (_, i) => `N${String(i).padStart(2, "0")}`);
  const edges = nodes.slice(1).map((n, i) => ({ from: nodes[i], to: n }));
  const states = Object.fromEntries(nodes.map((n) => [n, ["0", "1"]]));
  return { schema_version: 1, nodes, edges, states };
}

export const SENSITIVITY_RESPONSE: SensitivityResponse = {
  schema_version: 1,
  target: "D",
  ranking: ["C", "A", "B"],
  max_abs_derivative: { C: 0.41, A: 0.2, B: 0.0 },
};

/** Route table covering the whole mocked service. */
export function defaultRoute(overrides?: {
  query?: (call: RecordedCall) => QueryResponse;
}): Handler {
  return (call) => {
    if (call.url.endsWith("/models")) {
      return { status: 200, json: MODELS_RESPONSE };
    }
    if (call.url.includes("/graph")) {
      return { status: 200, json: smallGraph() };
    }
    if (call.url.includes("/query")) {
      const json = overrides?.query ? overrides.query(call) : QUERY_RESPONSE;
      return { status: 200, json };
    }
    if (call.url.includes("/sensitivity")) {
      return { status: 200, json: SENSITIVITY_RESPONSE };
    }
    return { status: 404, json: { detail: `no route for ${call.url}` } };
  };
}
