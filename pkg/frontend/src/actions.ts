/*
  Outbound action queue.

  User manipulations are posted strictly in interaction order with one request
  in flight at a time. Network failures keep the action at the head of the queue
  and retry after a delay; the pending count is surfaced so the UI can show a
  badge. A definitive server rejection (4xx) is reported and dequeued — replaying
  a body the server has already refused would wedge everything behind it.
*/

import { ActionBody } from "./types.js";

export type PostOutcome =
  | { ok: true; status: number; seq: number; loopsScheduled: number }
  | { ok: false; status: number; detail: string }
  | { ok: false; status: null; detail: string };

export interface QueueHooks {
  onPending?(count: number): void;
  onAccepted?(body: ActionBody, seq: number, loopsScheduled: number): void;
  onRejected?(body: ActionBody, status: number, detail: string): void;
}

export interface QueueOptions extends QueueHooks {
  retryDelayMs?: number;
  /** Injectable for tests; defaults to setTimeout. */
  delay?(ms: number): Promise<void>;
}

const defaultDelay = (ms: number) => new Promise<void>((resolve) => setTimeout(resolve, ms));

export class ActionQueue {
  private readonly post: (body: ActionBody) => Promise<PostOutcome>;
  private readonly hooks: QueueHooks;
  private readonly retryDelayMs: number;
  private readonly delay: (ms: number) => Promise<void>;

  private readonly queue: ActionBody[] = [];
  private draining = false;
  private idleResolvers: Array<() => void> = [];

  constructor(post: (body: ActionBody) => Promise<PostOutcome>, options: QueueOptions = {}) {
    this.post = post;
    this.hooks = options;
    this.retryDelayMs = options.retryDelayMs ?? 1000;
    this.delay = options.delay ?? defaultDelay;
  }

  /** Actions waiting or in flight. */
  pending(): number {
    return this.queue.length;
  }

  enqueue(body: ActionBody): void {
    this.queue.push(body);
    this.hooks.onPending?.(this.queue.length);
    void this.drain();
  }

  /** Resolves once the queue is empty and nothing is in flight. */
  whenIdle(): Promise<void> {
    if (!this.draining && this.queue.length === 0) return Promise.resolve();
    return new Promise((resolve) => this.idleResolvers.push(resolve));
  }

  private async drain(): Promise<void> {
    if (this.draining) return;
    this.draining = true;
    try {
      while (this.queue.length > 0) {
        const head = this.queue[0]!;
        let outcome: PostOutcome;
        try {
          outcome = await this.post(head);
        } catch (error) {
          outcome = { ok: false, status: null, detail: String(error) };
        }
        if (outcome.ok) {
          this.queue.shift();
          this.hooks.onPending?.(this.queue.length);
          this.hooks.onAccepted?.(head, outcome.seq, outcome.loopsScheduled);
        } else if (outcome.status !== null && outcome.status < 500) {
          // The server understood and said no; retrying the same bytes cannot succeed.
          this.queue.shift();
          this.hooks.onPending?.(this.queue.length);
          this.hooks.onRejected?.(head, outcome.status, outcome.detail);
        } else {
          await this.delay(this.retryDelayMs);
        }
      }
    } finally {
      this.draining = false;
      const resolvers = this.idleResolvers;
      this.idleResolvers = [];
      for (const resolve of resolvers) resolve();
    }
  }
}
