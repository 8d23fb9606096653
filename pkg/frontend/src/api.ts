// Typed client for the session service JSON API. The UI performs no
// clustering of its own; the server is the single source of truth.

export interface SampleMeta {
  id: number;
  features?: number[];
  image?: string;
}

export interface QueryPayload {
  status: "running" | "awaiting_answer" | "finished" | "processing";
  pair?: [number, number];
  sample_meta?: SampleMeta[];
  queries_used: number;
  budget: number;
}

export interface ClusteringPayload {
  labels: number[];
  n_c: number;
  certain_sets: number[][];
  queries_used: number;
  status: string;
  metrics?: {
    jcc: number;
    v_measure: number;
    homogeneity: number;
    completeness: number;
  };
}

export interface AnswerResult {
  ok: boolean;
  stale: boolean; // 409: the pending pair moved on under us
  status?: string;
  next?: [number, number] | null;
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(readonly status: number, message: string) {
    super(message);
  }
}

export class SessionApi {
  constructor(
    private readonly base: string = "",
    private readonly fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  async createSession(config: Record<string, unknown>): Promise<string> {
    const res = await this.fetchImpl(`${this.base}/sessions`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(config),
    });
    const body = await res.json();
    if (res.status !== 201) {
      throw new ApiError(res.status, body.error ?? "session creation failed");
    }
    return body.id as string;
  }

  async nextQuery(sessionId: string): Promise<QueryPayload> {
    const res = await this.fetchImpl(`${this.base}/sessions/${sessionId}/query`);
    if (res.status === 202) {
      return { status: "processing", queries_used: 0, budget: 0 };
    }
    if (!res.ok) {
      throw new ApiError(res.status, `query fetch failed (${res.status})`);
    }
    return (await res.json()) as QueryPayload;
  }

  async clustering(sessionId: string): Promise<ClusteringPayload | null> {
    const res = await this.fetchImpl(`${this.base}/sessions/${sessionId}/clustering`);
    if (res.status === 409) {
      return null; // nothing clustered yet
    }
    if (!res.ok) {
      throw new ApiError(res.status, `clustering fetch failed (${res.status})`);
    }
    return (await res.json()) as ClusteringPayload;
  }

  async submitAnswer(
    sessionId: string,
    pair: [number, number],
    answer: "must" | "cannot",
  ): Promise<AnswerResult> {
    const res = await this.fetchImpl(`${this.base}/sessions/${sessionId}/answer`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ pair, answer }),
    });
    if (res.status === 409) {
      return { ok: false, stale: true };
    }
    if (!res.ok && res.status !== 202) {
      throw new ApiError(res.status, `answer rejected (${res.status})`);
    }
    const body = await res.json();
    return { ok: true, stale: false, status: body.status, next: body.next ?? null };
  }
}
