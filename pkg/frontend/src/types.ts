/** Wire types for the query service (schema_version 1). */

export interface ModelSummary {
  id: string;
  algorithm: string;
  fitted_at: string;
  nodes: number;
  edges: number;
}

export interface ModelsResponse {
  schema_version: number;
  models: ModelSummary[];
}

export interface GraphEdge {
  from: string;
  to: string;
  tier?: string | null;
}

export interface GraphResponse {
  schema_version: number;
  nodes: string[];
  edges: GraphEdge[];
  states: Record<string, string[]>;
}

export interface QueryRequest {
  target: string;
  evidence: Record<string, string>;
  do: Record<string, string>;
}

export interface QueryResponse {
  schema_version: number;
  target: string;
  states: string[];
  baseline: number[];
  posterior: number[];
  delta_pp: number[];
  elapsed_ms: number;
}

export interface AceRequest {
  target: string;
  target_state: string;
  variable: string;
  state1: string;
  state0: string;
}

export interface AceResponse {
  schema_version: number;
  ace: number;
}

export interface SensitivityResponse {
  schema_version: number;
  target: string;
  ranking: string[];
  max_abs_derivative: Record<string, number>;
}

/** Per-node assignment in a session: observed evidence or a do-intervention. */
export type Assignment =
  | { kind: "evidence"; state: string }
  | { kind: "do"; state: string };

export interface SessionState {
  modelId: string | null;
  compareModelId: string | null;
  target: string | null;
  assignments: Record<string, Assignment>;
}
