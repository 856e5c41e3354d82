// HTTP client for the session service. Every body that crosses the wire is
// recorded in `wireLog` so leakage audits can inspect the actual traffic.

import type {
  AdvanceResult,
  CloseSummary,
  ContactEstimate,
  DeclareResult,
  EventPage,
  ReferenceCaptured,
  SenseResult,
  SessionCreated,
  StreamEvent,
  TrialNext,
  TrialsExhausted,
} from "./protocol.js";

export interface CreateSessionOptions {
  mode?: "study" | "single";
  condition?: "control" | "sensing";
  trials?: number;
  seed?: number;
  model_id?: string;
}

/** Transport surface the stepper depends on (mockable in tests). */
export interface SessionCommands {
  advance(stepMm: number): Promise<AdvanceResult>;
  captureReference(): Promise<ReferenceCaptured>;
  sense(): Promise<SenseResult>;
  declare(estimate: ContactEstimate): Promise<DeclareResult>;
  nextTrial(): Promise<TrialNext | TrialsExhausted>;
  close(): Promise<CloseSummary>;
}

export class ServiceError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    super(`service error ${status}: ${detail}`);
  }
}

export class SessionClient implements SessionCommands {
  readonly wireLog: unknown[] = [];
  sessionId: string | null = null;

  constructor(readonly baseUrl: string) {}

  private async call<T>(method: string, path: string, body?: unknown): Promise<T> {
    const response = await fetch(`${this.baseUrl}${path}`, {
      method,
      headers: body === undefined ? undefined : { "content-type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const payload = (await response.json()) as T;
    this.wireLog.push(payload);
    if (!response.ok) {
      const detail = (payload as { detail?: unknown }).detail;
      throw new ServiceError(response.status, String(detail ?? "unknown"));
    }
    return payload;
  }

  private base(): string {
    if (this.sessionId === null) throw new Error("no session created yet");
    return `/v1/sessions/${this.sessionId}`;
  }

  async createSession(options: CreateSessionOptions = {}): Promise<SessionCreated> {
    const created = await this.call<SessionCreated>("POST", "/v1/sessions", {
      mode: "study",
      seed: 0,
      model_id: "default",
      ...options,
    });
    this.sessionId = created.session_id;
    return created;
  }

  advance(stepMm: number): Promise<AdvanceResult> {
    return this.call("POST", `${this.base()}/advance`, { step_mm: stepMm });
  }

  captureReference(): Promise<ReferenceCaptured> {
    return this.call("POST", `${this.base()}/reference`);
  }

  sense(): Promise<SenseResult> {
    return this.call("POST", `${this.base()}/sense`);
  }

  declare(estimate: ContactEstimate): Promise<DeclareResult> {
    return this.call("POST", `${this.base()}/declare`, { estimate });
  }

  nextTrial(): Promise<TrialNext | TrialsExhausted> {
    return this.call("POST", `${this.base()}/trial/next`);
  }

  close(): Promise<CloseSummary> {
    return this.call("POST", `${this.base()}/close`);
  }

  async events(since = 0): Promise<EventPage> {
    return this.call("GET", `${this.base()}/events?since=${since}`);
  }

  /** Browser-side push subscription; falls back to polling off the page. */
  subscribe(onEvent: (event: StreamEvent) => void): () => void {
    const source = new EventSource(`${this.baseUrl}${this.base()}/stream`);
    source.onmessage = (message) => {
      onEvent(JSON.parse(message.data) as StreamEvent);
    };
    return () => source.close();
  }
}
