/**
 * Typed client for the annotation service API.
 *
 * All agreement/progress figures are produced by the server; this client
 * hands them through untouched so the UI never derives its own numbers.
 */

export type Label = 0 | 1 | 2;

export interface Task {
  pair_id: string;
  lemma: string;
  concept_id: string;
  concept_name: string;
  set_index: number;
  assigned_annotators: [string, string];
  context_tweets: string[];
  low_context: boolean;
  round: number;
  current_label?: Label | null;
}

export interface NextTaskResponse {
  task: Task | null;
  remaining: number;
}

export interface Progress {
  round: number;
  pairs: number;
  labels_expected: number;
  labels_recorded: number;
  by_annotator: Record<string, { assigned: number; labeled: number }>;
}

export interface SetKappa {
  annotators: [string, string];
  kappa: number;
  observed_agreement: number;
  expected_agreement: number;
  n_items: number;
  degenerate: boolean;
}

export interface KappaReport {
  per_set: Record<string, SetKappa>;
  weighted_mean: number | null;
}

export interface Disagreement {
  pair_id: string;
  labels: [number, number];
  lemma: string;
  concept_id: string;
  resolution?: number;
  note?: string;
}

export interface DisagreementsResponse {
  disagreements: Disagreement[];
  unresolved: string[];
  closeable: boolean;
}

export class ApiError extends Error {
  constructor(
    message: string,
    readonly status: number,
  ) {
    super(message);
  }
}

/** Network-level failure (offline, refused); retryable, unlike ApiError. */
export class NetworkError extends Error {}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly token: string,
    private readonly fetchFn: FetchLike = (...args) => fetch(...args),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    let response: Response;
    try {
      response = await this.fetchFn(`${this.baseUrl}${path}`, {
        method,
        headers: {
          "Content-Type": "application/json",
          "X-Collex-Token": this.token,
        },
        body: body === undefined ? undefined : JSON.stringify(body),
      });
    } catch (err) {
      throw new NetworkError(`request failed: ${String(err)}`);
    }
    if (!response.ok) {
      let detail = response.statusText;
      try {
        const payload = await response.json();
        detail = payload.error ?? payload.detail ?? detail;
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ApiError(String(detail), response.status);
    }
    return (await response.json()) as T;
  }

  nextTask(round: number, annotator: string): Promise<NextTaskResponse> {
    const q = encodeURIComponent(annotator);
    return this.request("GET", `/api/rounds/${round}/next?annotator=${q}`);
  }

  submitLabel(pairId: string, annotator: string, label: Label): Promise<unknown> {
    return this.request("POST", "/api/labels", {
      pair_id: pairId,
      annotator_id: annotator,
      label,
    });
  }

  context(pairId: string): Promise<{ pair_id: string; context_tweets: string[] }> {
    return this.request("GET", `/api/pairs/${encodeURIComponent(pairId)}/context`);
  }

  progress(round: number): Promise<Progress> {
    return this.request("GET", `/api/rounds/${round}/progress`);
  }

  kappa(round: number): Promise<KappaReport> {
    return this.request("GET", `/api/rounds/${round}/kappa`);
  }

  disagreements(round: number): Promise<DisagreementsResponse> {
    return this.request("GET", `/api/rounds/${round}/disagreements`);
  }

  adjudicate(round: number, pairId: string, label: Label, note = ""): Promise<unknown> {
    return this.request("POST", `/api/rounds/${round}/adjudicate`, {
      pair_id: pairId,
      label,
      note,
    });
  }

  closeRound(round: number): Promise<{ round: number; exported: string | null }> {
    return this.request("POST", `/api/rounds/${round}/close`);
  }
}
