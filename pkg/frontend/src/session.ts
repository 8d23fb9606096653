// Session view-model: one pending pair at a time, server-authoritative.
//
// Invariants enforced here rather than in the DOM layer:
//  - an answer is only ever submitted for the pair currently displayed;
//  - every state-mutating response triggers a clustering refresh;
//  - a stale answer (409) silently re-fetches the real pending pair;
//  - network failures surface a retry banner and never double-submit.

import { ClusteringPayload, SampleMeta, SessionApi } from "./api.js";

export interface UiSessionView {
  sessionId: string;
  status: "loading" | "running" | "awaiting_answer" | "finished" | "processing";
  pair: [number, number] | null;
  sampleMeta: SampleMeta[];
  queriesUsed: number;
  budget: number;
  nC: number;
  certainSets: number[][];
  clusters: number[][];
  metrics: ClusteringPayload["metrics"] | null;
  error: string | null;
  submitting: boolean;
}

export type ViewListener = (view: UiSessionView) => void;

export function groupByLabel(labels: number[]): number[][] {
  const groups = new Map<number, number[]>();
  labels.forEach((label, sample) => {
    const members = groups.get(label) ?? [];
    members.push(sample);
    groups.set(label, members);
  });
  return [...groups.entries()].sort((a, b) => a[0] - b[0]).map(([, m]) => m);
}

export class SessionController {
  private view: UiSessionView;
  private listeners: ViewListener[] = [];

  constructor(
    private readonly api: SessionApi,
    sessionId: string,
  ) {
    this.view = {
      sessionId,
      status: "loading",
      pair: null,
      sampleMeta: [],
      queriesUsed: 0,
      budget: 0,
      nC: 0,
      certainSets: [],
      clusters: [],
      metrics: null,
      error: null,
      submitting: false,
    };
  }

  current(): UiSessionView {
    return this.view;
  }

  onChange(listener: ViewListener): void {
    this.listeners.push(listener);
  }

  private update(patch: Partial<UiSessionView>): void {
    this.view = { ...this.view, ...patch };
    for (const listener of this.listeners) {
      listener(this.view);
    }
  }

  /** Fetch the pending query and the latest clustering snapshot. */
  async refresh(): Promise<void> {
    try {
      const query = await this.api.nextQuery(this.view.sessionId);
      const patch: Partial<UiSessionView> = {
        status: query.status === "running" ? "awaiting_answer" : query.status,
        queriesUsed: query.queries_used,
        budget: query.budget,
        pair: query.pair ?? null,
        sampleMeta: query.sample_meta ?? [],
        error: null,
      };
      const clustering = await this.api.clustering(this.view.sessionId);
      if (clustering) {
        patch.nC = clustering.n_c;
        patch.certainSets = clustering.certain_sets;
        patch.clusters = groupByLabel(clustering.labels);
        patch.metrics = clustering.metrics ?? null;
      }
      this.update(patch);
    } catch (err) {
      this.update({ error: `connection problem: ${String(err)} — retry`, submitting: false });
    }
  }

  /**
   * Submit an answer for the currently displayed pair.
   *
   * No-ops while a submission is in flight; a stale response refreshes
   * silently so the panel snaps to the server's actual pending pair.
   */
  async answer(kind: "must" | "cannot"): Promise<void> {
    const pair = this.view.pair;
    if (!pair || this.view.submitting || this.view.status !== "awaiting_answer") {
      return;
    }
    this.update({ submitting: true });
    try {
      const result = await this.api.submitAnswer(this.view.sessionId, pair, kind);
      this.update({ submitting: false });
      if (result.stale) {
        await this.refresh(); // silent re-sync, no error banner
        return;
      }
      await this.refresh(); // mutating response -> mandatory cluster refresh
    } catch (err) {
      // leave the same pair displayed; the user may retry explicitly
      this.update({
        submitting: false,
        error: `answer not delivered: ${String(err)} — retry`,
      });
    }
  }
}
