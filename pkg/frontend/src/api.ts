/** Thin typed client over the service HTTP API.
 *
 * All probability numbers pass through untouched: the client never rounds,
 * scales, or recomputes anything it received.
 */

import type {
  AceRequest,
  AceResponse,
  GraphResponse,
  ModelsResponse,
  QueryRequest,
  QueryResponse,
  SensitivityResponse,
} from "./types";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ServiceError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    super(`service error ${status}: ${detail}`);
  }
}

async function asJson<T>(res: Response): Promise<T> {
  if (!res.ok) {
    let detail = res.statusText;
    try {
      const body = (await res.json()) as { detail?: string };
      if (body.detail) detail = body.detail;
    } catch {
      /* non-JSON error body; keep statusText */
    }
    throw new ServiceError(res.status, detail);
  }
  return (await res.json()) as T;
}

export class ApiClient {
  constructor(
    readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = (u, i) => fetch(u, i),
  ) {}

  listModels(): Promise<ModelsResponse> {
    return this.get<ModelsResponse>("/models");
  }

  getGraph(modelId: string): Promise<GraphResponse> {
    return this.get<GraphResponse>(`/models/${encodeURIComponent(modelId)}/graph`);
  }

  query(modelId: string, req: QueryRequest): Promise<QueryResponse> {
    return this.post<QueryResponse>(
      `/models/${encodeURIComponent(modelId)}/query`,
      req,
    );
  }

  ace(modelId: string, req: AceRequest): Promise<AceResponse> {
    return this.post<AceResponse>(
      `/models/${encodeURIComponent(modelId)}/ace`,
      req,
    );
  }

  sensitivity(modelId: string, target: string): Promise<SensitivityResponse> {
    return this.get<SensitivityResponse>(
      `/models/${encodeURIComponent(modelId)}/sensitivity?target=${encodeURIComponent(target)}`,
    );
  }

  private async get<T>(path: string): Promise<T> {
    return asJson<T>(await this.fetchImpl(this.baseUrl + path));
  }

  private async post<T>(path: string, body: unknown): Promise<T> {
    return asJson<T>(
      await this.fetchImpl(this.baseUrl + path, {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify(body),
      }),
    );
  }
}

/**
 * Wraps an async request function with sequence tagging: responses arriving
 * after a newer request was issued resolve to null and must be discarded by
 * the caller. This is how overlapping queries against the stateless service
 * are reconciled without aborting in-flight requests.
 */
export class SequencedRequests {
  private seq = 0;

  async run<T>(fn: () => Promise<T>): Promise<T | null> {
    const tag = ++this.seq;
    const result = await fn();
    return tag === this.seq ? result : null;
  }
}
