// Wire types and a thin client for the session API.

export interface ConfigJson {
  representation: "face" | "edge";
  entries: [string, number][];
}

export interface RulesJson {
  representation: "face" | "edge";
  hole: string | null;
  transfer_threshold: number;
}

export interface LastAction {
  action: string;
  move?: (string | number)[];
  deltas?: Record<string, number>;
  [key: string]: unknown;
}

export interface Snapshot {
  session: string;
  version: number;
  kind: string;
  rules: RulesJson;
  pulse_k: number | null;
  steps: number;
  terminal: boolean;
  state: ConfigJson;
  faces: ConfigJson | null;
  edges: ConfigJson;
  monitors: Record<string, number>;
  window: [number, number, number, number] | null;
  last: LastAction | null;
  autorun?: { steps: number; terminal: boolean; stop_reason: string };
}

export interface MoveEntry {
  index: number;
  move: (string | number)[];
  label: string;
  edges: string[];
}

export interface MovesPayload {
  session: string;
  version: number;
  moves: MoveEntry[];
}

export interface Prediction {
  session: string;
  version: number;
  pulse_k: number;
  predicted: ConfigJson;
  matches: boolean;
}

export interface CreateSessionBody {
  complex: Record<string, unknown>;
  config: ConfigJson;
  rules?: "nohole" | "hole";
  pulse_k?: number | null;
  transfer_threshold?: number;
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  status: number;
  detail: unknown;

  constructor(status: number, detail: unknown) {
    super(`api error ${status}: ${JSON.stringify(detail)}`);
    this.status = status;
    this.detail = detail;
  }

  /** For 409 conflicts the server reports the version it expected. */
  expectedVersion(): number | null {
    const d = this.detail as { expected?: unknown } | null;
    return d && typeof d.expected === "number" ? d.expected : null;
  }
}

export class Client {
  private base: string;
  private fetchFn: FetchLike;

  constructor(base = "", fetchFn: FetchLike = fetch) {
    this.base = base.replace(/\/$/, "");
    this.fetchFn = fetchFn;
  }

  private async call<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method, headers: { "content-type": "application/json" } };
    if (body !== undefined) init.body = JSON.stringify(body);
    const res = await this.fetchFn(this.base + path, init);
    const payload = res.status === 204 ? null : await res.json();
    if (!res.ok) {
      throw new ApiError(res.status, (payload as { detail?: unknown })?.detail ?? payload);
    }
    return payload as T;
  }

  healthz(): Promise<{ ok: boolean; sessions: number }> {
    return this.call("GET", "/healthz");
  }

  createSession(body: CreateSessionBody): Promise<Snapshot> {
    return this.call("POST", "/sessions", body);
  }

  snapshot(session: string): Promise<Snapshot> {
    return this.call("GET", `/sessions/${session}`);
  }

  moves(session: string): Promise<MovesPayload> {
    return this.call("GET", `/sessions/${session}/moves`);
  }

  fire(session: string, version: number, moveIndex: number): Promise<Snapshot> {
    return this.call("POST", `/sessions/${session}/fire`, { version, move_index: moveIndex });
  }

  undo(session: string, version: number): Promise<Snapshot> {
    return this.call("POST", `/sessions/${session}/undo`, { version });
  }

  autorun(
    session: string,
    version: number,
    opts: { strategy?: string; seed?: number; step_cap?: number } = {},
  ): Promise<Snapshot> {
    return this.call("POST", `/sessions/${session}/autorun`, {
      version,
      strategy: opts.strategy ?? "seeded-random",
      seed: opts.seed ?? 0,
      step_cap: opts.step_cap ?? 100000,
    });
  }

  predict(session: string): Promise<Prediction> {
    return this.call("GET", `/sessions/${session}/predict`);
  }
}
