/**
 * Offline-safe submission queue.
 *
 * A label that cannot reach the server is parked here and flushed when
 * connectivity returns, so no decision is ever silently lost. Server
 * rejections (4xx) are not retried; only transport failures are.
 */

import { ApiClient, ApiError, Label, NetworkError } from "./api.js";

export interface PendingLabel {
  pair_id: string;
  annotator_id: string;
  label: Label;
  queued_at: string;
}

export interface QueueStorage {
  load(): PendingLabel[];
  save(items: PendingLabel[]): void;
}

export class MemoryStorage implements QueueStorage {
  private items: PendingLabel[] = [];
  load(): PendingLabel[] {
    return [...this.items];
  }
  save(items: PendingLabel[]): void {
    this.items = [...items];
  }
}

/** localStorage-backed persistence so a tab reload keeps queued labels. */
export class BrowserStorage implements QueueStorage {
  constructor(private readonly key = "collex-label-queue") {}
  load(): PendingLabel[] {
    try {
      return JSON.parse(window.localStorage.getItem(this.key) ?? "[]");
    } catch {
      return [];
    }
  }
  save(items: PendingLabel[]): void {
    window.localStorage.setItem(this.key, JSON.stringify(items));
  }
}

export interface FlushResult {
  sent: number;
  rejected: PendingLabel[];
  remaining: number;
}

export class SubmissionQueue {
  private items: PendingLabel[];

  constructor(private readonly storage: QueueStorage = new MemoryStorage()) {
    this.items = storage.load();
  }

  get size(): number {
    return this.items.length;
  }

  enqueue(pairId: string, annotator: string, label: Label): void {
    // a newer decision for the same pair replaces the queued one
    this.items = this.items.filter(
      (item) => !(item.pair_id === pairId && item.annotator_id === annotator),
    );
    this.items.push({
      pair_id: pairId,
      annotator_id: annotator,
      label,
      queued_at: new Date().toISOString(),
    });
    this.storage.save(this.items);
  }

  /**
   * Attempts every queued item in order. Stops at the first transport
   * failure (still offline); drops items the server rejects outright.
   */
  async flush(api: ApiClient): Promise<FlushResult> {
    const rejected: PendingLabel[] = [];
    let sent = 0;
    while (this.items.length > 0) {
      const item = this.items[0];
      try {
        await api.submitLabel(item.pair_id, item.annotator_id, item.label);
        sent += 1;
        this.items.shift();
      } catch (err) {
        if (err instanceof NetworkError) {
          break;
        }
        if (err instanceof ApiError) {
          rejected.push(item);
          this.items.shift();
          continue;
        }
        throw err;
      }
    }
    this.storage.save(this.items);
    return { sent, rejected, remaining: this.items.length };
  }
}
