/** Application wiring: session state, request sequencing, URL-fragment
 * persistence, and re-rendering on every state change.
 *
 * The app never computes probabilities; it renders service responses.
 */

import { ApiClient, SequencedRequests, ServiceError } from "./api";
import {
  emptySession,
  sessionFromFragment,
  sessionToFragment,
  setAssignment,
  setTarget,
  toQueryRequest,
} from "./state";
import {
  renderComparePanel,
  renderDeltaView,
  renderErrorBanner,
  renderGraph,
} from "./render";
import type {
  Assignment,
  GraphResponse,
  QueryResponse,
  SensitivityResponse,
  SessionState,
} from "./types";

export interface AppElements {
  graph: HTMLElement;
  delta: HTMLElement;
  compare: HTMLElement;
  modelSelect: HTMLSelectElement;
  errors: HTMLElement;
}

export class App {
  session: SessionState = emptySession();
  private graphCache: GraphResponse | null = null;
  private sensitivityCache: SensitivityResponse | null = null;
  private sensitivityMode = false;
  private readonly sequence = new SequencedRequests();
  /** Request bodies issued, in order — inspectable by tests and by the
   * session-restore logic. */
  readonly requestLog: { modelId: string; body: unknown }[] = [];

  constructor(
    private readonly api: ApiClient,
    private readonly el: AppElements,
    private readonly fragment: {
      read: () => string;
      write: (f: string) => void;
    } = {
      read: () => window.location.hash,
      write: (f) => {
        window.location.hash = f;
      },
    },
  ) {}

  async start(): Promise<void> {
    const models = await this.api.listModels();
    this.el.modelSelect.textContent = "";
    for (const m of models.models) {
      const opt = document.createElement("option");
      opt.value = m.id;
      opt.textContent = `${m.id} (${m.nodes} nodes, ${m.edges} edges)`;
      this.el.modelSelect.appendChild(opt);
    }
    const restored = sessionFromFragment(this.fragment.read());
    if (restored && restored.modelId) {
      this.session = restored;
      await this.selectModel(restored.modelId, { keepSession: true });
      if (this.session.target) await this.refreshQuery();
    } else if (models.models.length > 0) {
      await this.selectModel(models.models[0].id);
    }
  }

  async selectModel(
    modelId: string,
    opts: { keepSession?: boolean } = {},
  ): Promise<void> {
    if (!opts.keepSession) {
      this.session = { ...emptySession(), modelId };
    } else {
      this.session = { ...this.session, modelId };
    }
    this.sensitivityCache = null;
    this.graphCache = await this.api.getGraph(modelId);
    this.persist();
    this.renderAll();
  }

  setTarget(node: string | null): void {
    this.session = setTarget(this.session, node);
    this.sensitivityCache = null;
    this.persist();
    this.renderAll();
  }

  /** Toggle a node's assignment: none -> evidence -> do -> none, keeping the
   * state; or set an explicit assignment. */
  async assign(node: string, assignment: Assignment | null): Promise<void> {
    this.session = setAssignment(this.session, node, assignment);
    this.persist();
    this.renderAll();
    if (this.session.target) await this.refreshQuery();
  }

  async refreshQuery(): Promise<void> {
    const modelId = this.session.modelId;
    if (!modelId || !this.session.target) return;
    const body = toQueryRequest(this.session);
    const compareId = this.session.compareModelId;
    try {
      if (compareId) {
        await this.runCompare(modelId, compareId, body);
        return;
      }
      this.requestLog.push({ modelId, body });
      const response = await this.sequence.run(() =>
        this.api.query(modelId, body),
      );
      if (response === null) return; // stale: a newer request superseded it
      renderDeltaView(this.el.delta, response);
    } catch (err) {
      this.surface(err);
    }
  }

  private async runCompare(
    idA: string,
    idB: string,
    body: ReturnType<typeof toQueryRequest>,
  ): Promise<void> {
    const ask = async (
      id: string,
    ): Promise<{ response: QueryResponse | null; error: string | null }> => {
      this.requestLog.push({ modelId: id, body });
      try {
        return { response: await this.api.query(id, body), error: null };
      } catch (err) {
        // isolation: an error in one column must not hide the other
        return {
          response: null,
          error: err instanceof Error ? err.message : String(err),
        };
      }
    };
    const result = await this.sequence.run(() =>
      Promise.all([ask(idA), ask(idB)]),
    );
    if (result === null) return;
    const [a, b] = result;
    renderComparePanel(this.el.compare, [
      { modelId: idA, ...a },
      { modelId: idB, ...b },
    ]);
  }

  async setCompareModel(modelId: string | null): Promise<void> {
    this.session = { ...this.session, compareModelId: modelId };
    this.persist();
    if (this.session.target) await this.refreshQuery();
  }

  async toggleSensitivity(): Promise<void> {
    this.sensitivityMode = !this.sensitivityMode;
    if (
      this.sensitivityMode &&
      !this.sensitivityCache &&
      this.session.modelId &&
      this.session.target
    ) {
      try {
        this.sensitivityCache = await this.api.sensitivity(
          this.session.modelId,
          this.session.target,
        );
      } catch (err) {
        this.sensitivityMode = false;
        this.surface(err);
        return;
      }
    }
    this.renderAll();
  }

  renderAll(): void {
    if (!this.graphCache) return;
    renderGraph(this.el.graph, this.graphCache, {
      assignments: this.session.assignments,
      target: this.session.target,
      sensitivity: this.sensitivityMode ? this.sensitivityCache : null,
      onNodeClick: (node) => this.cycleAssignment(node),
    });
  }

  /** Clicking a node cycles none -> evidence(first state) -> do(same state)
   * -> none, the §evidence-vs-do toggle. */
  cycleAssignment(node: string): Promise<void> {
    if (node === this.session.target) return Promise.resolve();
    const current = this.session.assignments[node];
    const states = this.graphCache?.states[node] ?? [];
    if (!current) {
      return this.assign(node, { kind: "evidence", state: states[0] ?? "0" });
    }
    if (current.kind === "evidence") {
      return this.assign(node, { kind: "do", state: current.state });
    }
    return this.assign(node, null);
  }

  private persist(): void {
    this.fragment.write(sessionToFragment(this.session));
  }

  private surface(err: unknown): void {
    const message =
      err instanceof ServiceError
        ? err.detail
        : err instanceof Error
          ? err.message
          : String(err);
    renderErrorBanner(this.el.errors, message);
  }
}
