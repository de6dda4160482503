/**
 * Labeling session state machine: fetch next -> render -> submit -> advance.
 *
 * Advancing is optimistic: the card clears as soon as a label is chosen.
 * A server rejection rolls the task back with a visible reason, a 403
 * (pair not assigned) skips it with a notice, and a transport failure
 * queues the label for a later flush - nothing is dropped silently.
 */

import { ApiClient, ApiError, Label, NetworkError, Task } from "./api.js";
import { SubmissionQueue } from "./queue.js";

export type Phase = "idle" | "loading" | "task" | "offline" | "done" | "error";

export interface SessionState {
  phase: Phase;
  task: Task | null;
  remaining: number;
  labeled: number;
  queued: number;
  banner: string | null;
}

export type StateListener = (state: SessionState) => void;

export class AnnotatorSession {
  private state: SessionState = {
    phase: "idle",
    task: null,
    remaining: 0,
    labeled: 0,
    queued: 0,
    banner: null,
  };
  private listeners: StateListener[] = [];

  constructor(
    private readonly api: ApiClient,
    private readonly round: number,
    private readonly annotator: string,
    private readonly queue: SubmissionQueue = new SubmissionQueue(),
  ) {}

  onChange(listener: StateListener): void {
    this.listeners.push(listener);
  }

  snapshot(): SessionState {
    return { ...this.state };
  }

  private update(patch: Partial<SessionState>): void {
    this.state = { ...this.state, ...patch, queued: this.queue.size };
    for (const listener of this.listeners) {
      listener(this.snapshot());
    }
  }

  async start(): Promise<void> {
    await this.fetchNext();
  }

  private async fetchNext(): Promise<void> {
    this.update({ phase: "loading", task: null });
    try {
      const next = await this.api.nextTask(this.round, this.annotator);
      if (next.task === null) {
        this.update({ phase: "done", task: null, remaining: 0 });
      } else {
        this.update({ phase: "task", task: next.task, remaining: next.remaining });
      }
    } catch (err) {
      if (err instanceof NetworkError) {
        this.update({ phase: "offline", banner: "Connection lost. Retry when back online." });
      } else {
        this.update({ phase: "error", banner: `Cannot fetch tasks: ${String(err)}` });
      }
    }
  }

  /** Submits a label for the current task and advances. */
  async submit(label: Label): Promise<void> {
    const task = this.state.task;
    if (this.state.phase !== "task" || task === null) {
      return;
    }
    this.update({ phase: "loading", task: null, banner: null });
    try {
      await this.api.submitLabel(task.pair_id, this.annotator, label);
      this.update({ labeled: this.state.labeled + 1 });
      await this.fetchNext();
    } catch (err) {
      if (err instanceof NetworkError) {
        this.queue.enqueue(task.pair_id, this.annotator, label);
        this.update({
          phase: "offline",
          banner: "Offline: label queued locally, will flush on reconnect.",
        });
      } else if (err instanceof ApiError && err.status === 403) {
        this.update({ banner: `Pair not assigned to you; task skipped (${task.lemma}).` });
        await this.fetchNext();
      } else if (err instanceof ApiError) {
        // rollback: the task returns to the card with the server's reason
        this.update({ phase: "task", task, banner: `Rejected by server: ${err.message}` });
      } else {
        throw err;
      }
    }
  }

  /** Flushes queued labels and resumes; used by the reconnect banner. */
  async retry(): Promise<void> {
    this.update({ phase: "loading", banner: null });
    try {
      const result = await this.queue.flush(this.api);
      if (result.remaining > 0) {
        this.update({
          phase: "offline",
          banner: "Still offline: labels remain queued.",
        });
        return;
      }
      if (result.rejected.length > 0) {
        this.update({
          banner: `${result.rejected.length} queued label(s) were rejected by the server.`,
        });
      }
      this.update({ labeled: this.state.labeled + result.sent });
      await this.fetchNext();
    } catch (err) {
      this.update({ phase: "error", banner: String(err) });
    }
  }
}
