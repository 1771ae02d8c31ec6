/**
 * HTTP client for the live session server.
 *
 * Talks only to the public endpoints: create/join/choice/state, the
 * server-sent event stream, and the session log export. The SSE parser is
 * hand-rolled on top of fetch because EventSource cannot run in node and
 * offers no way to stop cleanly on the finished event.
 */

export interface SessionConfigInput {
  b: number;
  permutation?: string;
  rounds?: number;
  players?: number;
  seed?: number;
  session_id?: string;
}

export interface CreateSessionRequest {
  config: SessionConfigInput;
  seat_plan?: string[];
  timeout_s?: number | null;
  allow_any_b?: boolean;
}

export interface CreateSessionResponse {
  session_id: string;
  permutation: string;
  phase: string;
}

/** Per-round numbers shown to one seat. Mirrors the log record fields. */
export interface Feedback {
  strategy: number;
  counts: number[];
  game_earn: number;
  reward: number;
  tax: number;
  round_sum: number;
  cumulative: number;
}

export interface RankingRow {
  seat: number;
  kind: string;
  token: string | null;
  cumulative: number;
  rank: number;
}

export interface SessionView {
  session_id: string;
  phase: string;
  t: number;
  rounds: number;
  players: number;
  b: number;
  permutation: string;
  timeout_s: number | null;
  joined: number;
  needed: number;
  seat: number | null;
  submitted: boolean | null;
  feedback: Feedback | null;
  cumulative: number | null;
  ranking: RankingRow[] | null;
}

export type SessionEvent =
  | { type: "phase"; phase: string; t: number | null }
  | { type: "lobby"; joined: number; needed: number }
  | { type: "round_open"; t: number }
  | { type: "round_result"; t: number; feedback: Feedback }
  | { type: "finished"; ranking: RankingRow[] };

/**
 * Parse a text/event-stream body into JSON payloads.
 *
 * Events are separated by blank lines; comment lines (keepalive pings)
 * start with ":" and carry no data. Multi-line data fields are joined
 * with newlines per the SSE framing rules.
 */
export async function* parseSseStream(
  body: ReadableStream<Uint8Array>,
): AsyncGenerator<unknown> {
  const reader = body.getReader();
  const decoder = new TextDecoder();
  let buf = "";
  try {
    for (;;) {
      const { done, value } = await reader.read();
      if (done) break;
      buf += decoder.decode(value, { stream: true });
      let cut: number;
      while ((cut = buf.indexOf("\n\n")) >= 0) {
        const frame = buf.slice(0, cut);
        buf = buf.slice(cut + 2);
        const data = frame
          .split("\n")
          .filter((line) => line.startsWith("data:"))
          .map((line) => line.slice(5).replace(/^ /, ""))
          .join("\n");
        if (data) yield JSON.parse(data);
      }
    }
  } finally {
    reader.releaseLock();
  }
}

async function expectOk(res: Response): Promise<Response> {
  if (!res.ok) {
    const text = await res.text();
    throw new Error(`HTTP ${res.status}: ${text}`);
  }
  return res;
}

export class SessionClient {
  constructor(readonly base: string) {}

  private async post(path: string, payload: unknown): Promise<unknown> {
    const res = await expectOk(
      await fetch(this.base + path, {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify(payload),
      }),
    );
    return res.json();
  }

  async createSession(req: CreateSessionRequest): Promise<CreateSessionResponse> {
    return (await this.post("/sessions", req)) as CreateSessionResponse;
  }

  async join(sid: string, token: string): Promise<SessionView & { seat: number }> {
    return (await this.post(`/sessions/${sid}/join`, { token })) as SessionView & {
      seat: number;
    };
  }

  async submitChoice(sid: string, token: string, strategy: number): Promise<void> {
    await this.post(`/sessions/${sid}/choice`, { token, strategy });
  }

  async state(sid: string, token?: string): Promise<SessionView> {
    const query = token === undefined ? "" : `?token=${encodeURIComponent(token)}`;
    const res = await expectOk(await fetch(`${this.base}/sessions/${sid}/state${query}`));
    return (await res.json()) as SessionView;
  }

  /**
   * Subscribe to a session's event stream. Yields the snapshot first, then
   * live events; returns after the finished event.
   */
  async *events(sid: string, token: string): AsyncGenerator<SessionEvent> {
    const url = `${this.base}/sessions/${sid}/events?token=${encodeURIComponent(token)}`;
    const res = await expectOk(await fetch(url));
    if (!res.body) throw new Error("event stream has no body");
    for await (const payload of parseSseStream(res.body)) {
      const event = payload as SessionEvent;
      yield event;
      if (event.type === "finished") return;
    }
  }

  async fetchLog(sid: string, partial = false): Promise<string> {
    const query = partial ? "?partial=true" : "";
    const res = await expectOk(await fetch(`${this.base}/sessions/${sid}/log${query}`));
    return res.text();
  }
}
