/*
  HTTP wiring: binds the renderer, action queue, and sync loop to a running
  duet service. Everything here speaks only the public API.
*/

import { ActionQueue, PostOutcome } from "./actions.js";
import { DuetView } from "./render.js";
import { FetchStateResult, SyncLoop } from "./sync.js";
import { ActionBody, ActionRecord, historyResponseSchema } from "./types.js";

export interface DuetClient {
  sessionId: string;
  view: DuetView;
  queue: ActionQueue;
  sync: SyncLoop;
  stop(): void;
}

export interface MountOptions {
  baseUrl: string;
  goal: string;
  container: HTMLElement;
  pollIntervalMs?: number;
  fetchImpl?: typeof fetch;
}

async function postAction(
  fetchImpl: typeof fetch,
  baseUrl: string,
  sessionId: string,
  body: ActionBody,
): Promise<PostOutcome> {
  let response: Response;
  try {
    response = await fetchImpl(`${baseUrl}/sessions/${sessionId}/actions`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
  } catch (error) {
    return { ok: false, status: null, detail: String(error) };
  }
  if (response.ok) {
    const data = (await response.json()) as { seq: number; loopsScheduled: number };
    return { ok: true, status: response.status, seq: data.seq, loopsScheduled: data.loopsScheduled };
  }
  return { ok: false, status: response.status, detail: await response.text() };
}

/** Create a session on the server and stand up the full client UI over it. */
export async function mountDuet(options: MountOptions): Promise<DuetClient> {
  const fetchImpl = options.fetchImpl ?? fetch;
  const base = options.baseUrl.replace(/\/$/, "");

  const created = await fetchImpl(`${base}/sessions`, {
    method: "POST",
    headers: { "content-type": "application/json" },
    body: JSON.stringify({ goal: options.goal }),
  });
  if (!created.ok) {
    throw new Error(`session create failed: ${created.status} ${await created.text()}`);
  }
  const { sessionId } = (await created.json()) as { sessionId: string };

  const view = new DuetView(options.container, {
    submit: (body) => queue.enqueue(body),
  });
  const queue = new ActionQueue((body) => postAction(fetchImpl, base, sessionId, body), {
    onPending: (count) => view.setPending(count),
  });

  const sync = new SyncLoop(
    {
      async fetchState(since): Promise<FetchStateResult> {
        const suffix = since === null ? "" : `?since=${since}`;
        try {
          const response = await fetchImpl(`${base}/sessions/${sessionId}/state${suffix}`);
          if (response.status === 404) return { status: 404 };
          if (response.status !== 200) return { status: response.status };
          return { status: 200, body: await response.json() };
        } catch (error) {
          return { status: null, detail: String(error) };
        }
      },
      async fetchHistory(since): Promise<{ records: ActionRecord[]; latestSeq: number } | null> {
        try {
          const response = await fetchImpl(`${base}/sessions/${sessionId}/history?since=${since}`);
          if (response.status !== 200) return null;
          const parsed = historyResponseSchema.safeParse(await response.json());
          return parsed.success ? parsed.data : null;
        } catch {
          return null;
        }
      },
    },
    view,
    { intervalMs: options.pollIntervalMs },
  );

  await sync.tick();
  sync.start();
  return {
    sessionId,
    view,
    queue,
    sync,
    stop: () => sync.stop(),
  };
}
