/*
  Incremental state synchronization.

  One poll in flight at a time. Each tick asks the server for anything newer
  than the interface version we already rendered; `unchanged` responses touch
  nothing. A 404 means the session is gone for good: show the expired screen
  and stop polling. Network errors leave the cursor alone and surface on the
  next tick.
*/

import { ApplyResult } from "./render.js";
import { ActionRecord } from "./types.js";

export type FetchStateResult =
  | { status: 200; body: unknown }
  | { status: 404 }
  | { status: number; body?: unknown }
  | { status: null; detail: string };

export interface SyncTarget {
  apply(payload: unknown): ApplyResult;
  appendHistory(records: ActionRecord[]): void;
  showSessionExpired(): void;
}

export interface SyncSource {
  fetchState(since: number | null): Promise<FetchStateResult>;
  /** Optional history feed; omit to leave the drawer untouched. */
  fetchHistory?(since: number): Promise<{ records: ActionRecord[]; latestSeq: number } | null>;
}

export interface SyncOptions {
  intervalMs?: number;
}

export class SyncLoop {
  private readonly source: SyncSource;
  private readonly target: SyncTarget;
  private readonly intervalMs: number;

  private sinceVersion: number | null = null;
  private sinceSeq = 0;
  private inFlight = false;
  private stopped = false;
  private timer: ReturnType<typeof setTimeout> | null = null;

  constructor(source: SyncSource, target: SyncTarget, options: SyncOptions = {}) {
    this.source = source;
    this.target = target;
    this.intervalMs = options.intervalMs ?? 750;
  }

  /** Interface version of the last applied document. */
  cursor(): number | null {
    return this.sinceVersion;
  }

  isStopped(): boolean {
    return this.stopped;
  }

  /** Run one poll. Overlapping calls collapse: only one request is ever in flight. */
  async tick(): Promise<void> {
    if (this.inFlight || this.stopped) return;
    this.inFlight = true;
    try {
      const result = await this.source.fetchState(this.sinceVersion);
      if (this.stopped) return;
      if (result.status === 404) {
        this.stopped = true;
        this.target.showSessionExpired();
        return;
      }
      if (result.status === 200) {
        const applied = this.target.apply(result.body);
        if (applied.kind === "rendered") {
          this.sinceVersion = applied.interfaceVersion;
        } else if (applied.kind === "unchanged") {
          const body = result.body as { interfaceVersion?: unknown };
          if (typeof body?.interfaceVersion === "number") {
            this.sinceVersion = body.interfaceVersion;
          }
        }
        if (this.source.fetchHistory) {
          const history = await this.source.fetchHistory(this.sinceSeq);
          if (history) {
            this.target.appendHistory(history.records);
            this.sinceSeq = Math.max(this.sinceSeq, history.latestSeq);
          }
        }
      }
      // Other statuses and network errors: keep the cursor, try again next tick.
    } catch {
      // Network hiccup; the next tick retries from the same cursor.
    } finally {
      this.inFlight = false;
    }
  }

  start(): void {
    if (this.timer || this.stopped) return;
    const loop = async () => {
      await this.tick();
      if (!this.stopped) this.timer = setTimeout(loop, this.intervalMs);
      else this.timer = null;
    };
    this.timer = setTimeout(loop, 0);
  }

  stop(): void {
    this.stopped = true;
    if (this.timer) {
      clearTimeout(this.timer);
      this.timer = null;
    }
  }
}
