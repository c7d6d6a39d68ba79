// Thin client over the documented service endpoints. Every method maps
// 1:1 to one endpoint; nothing else is called.

import type { RepairMode, SessionEvent, SessionView } from './types';

export class ApiError extends Error {
  constructor(
    public status: number,
    public code: string,
    message: string,
  ) {
    super(message);
  }
}

async function expect<T>(resp: Response, ...statuses: number[]): Promise<T> {
  const body = await resp.json().catch(() => ({}));
  if (!statuses.includes(resp.status)) {
    const err = body as { code?: string; message?: string };
    throw new ApiError(resp.status, err.code ?? 'unknown', err.message ?? resp.statusText);
  }
  return body as T;
}

export class ApiClient {
  constructor(
    private baseUrl: string,
    private fetchFn: typeof fetch = fetch,
  ) {}

  private async request(path: string, init?: RequestInit): Promise<Response> {
    return this.fetchFn(`${this.baseUrl}${path}`, {
      headers: { 'Content-Type': 'application/json' },
      ...init,
    });
  }

  async health(): Promise<{ status: string; version: string }> {
    return expect(await this.request('/health'), 200);
  }

  async createSession(): Promise<string> {
    const body = await expect<{ id: string }>(
      await this.request('/sessions', { method: 'POST' }),
      201,
    );
    return body.id;
  }

  async getSession(id: string): Promise<SessionView> {
    return expect(await this.request(`/sessions/${id}`), 200);
  }

  async submitSubtask(
    id: string,
    question: string,
    forceBuildup = false,
  ): Promise<string> {
    const body = await expect<{ job_id: string }>(
      await this.request(`/sessions/${id}/subtasks`, {
        method: 'POST',
        body: JSON.stringify({ question, force_buildup: forceBuildup }),
      }),
      202,
    );
    return body.job_id;
  }

  async repairLintMessage(id: string, messageId: string): Promise<string> {
    const body = await expect<{ job_id: string }>(
      await this.request(`/sessions/${id}/repairs`, {
        method: 'POST',
        body: JSON.stringify({ message_id: messageId }),
      }),
      202,
    );
    return body.job_id;
  }

  async repairRuntime(id: string, mode: RepairMode, text: string): Promise<string> {
    const body = await expect<{ job_id: string }>(
      await this.request(`/sessions/${id}/repairs`, {
        method: 'POST',
        body: JSON.stringify({ mode, text }),
      }),
      202,
    );
    return body.job_id;
  }

  async defineKeyword(id: string, surface: string): Promise<string> {
    const body = await expect<{ job_id: string }>(
      await this.request(
        `/sessions/${id}/keywords/${encodeURIComponent(surface)}/define`,
        { method: 'POST' },
      ),
      202,
    );
    return body.job_id;
  }

  async accept(id: string): Promise<{ accepted: number; status: string }> {
    return expect(await this.request(`/sessions/${id}/accept`, { method: 'POST' }), 200);
  }

  /**
   * Read the event stream once from `after`, invoking onEvent per record.
   * Returns the last seq seen so callers can resume after reconnecting.
   */
  async readEvents(
    id: string,
    after: number,
    onEvent: (event: SessionEvent) => void,
    follow = false,
    timeout = 5,
  ): Promise<number> {
    const resp = await this.request(
      `/sessions/${id}/events?after=${after}&follow=${follow}&timeout=${timeout}`,
    );
    if (resp.status !== 200) {
      const err = (await resp.json().catch(() => ({}))) as {
        code?: string;
        message?: string;
      };
      throw new ApiError(resp.status, err.code ?? 'unknown', err.message ?? 'stream error');
    }
    let last = after;
    for await (const event of parseSseBody(resp)) {
      if (event.seq > last) {
        last = event.seq;
        onEvent(event);
      }
    }
    return last;
  }
}

/** Incremental `data: {json}\n\n` parser; tolerates chunk boundaries anywhere. */
export class SseParser {
  private buffer = '';

  push(chunk: string): SessionEvent[] {
    this.buffer += chunk;
    const events: SessionEvent[] = [];
    let idx: number;
    while ((idx = this.buffer.indexOf('\n\n')) >= 0) {
      const frame = this.buffer.slice(0, idx);
      this.buffer = this.buffer.slice(idx + 2);
      for (const line of frame.split('\n')) {
        if (line.startsWith('data: ')) {
          try {
            events.push(JSON.parse(line.slice(6)) as SessionEvent);
          } catch {
            // Malformed frames are dropped, never rendered.
          }
        }
      }
    }
    return events;
  }
}

async function* parseSseBody(resp: Response): AsyncGenerator<SessionEvent> {
  const reader = resp.body?.getReader();
  if (!reader) {
    return;
  }
  const decoder = new TextDecoder();
  const parser = new SseParser();
  try {
    for (;;) {
      const { done, value } = await reader.read();
      if (done) {
        break;
      }
      for (const event of parser.push(decoder.decode(value, { stream: true }))) {
        yield event;
      }
    }
  } finally {
    reader.releaseLock();
  }
}
