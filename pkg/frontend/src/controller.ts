// Session lifecycle and user actions. Serializes clicks, recovers from
// stale-version conflicts, and chunks long autoruns so the board repaints.

import { ApiError, Client } from "./api.js";
import type { CreateSessionBody, MovesPayload, Prediction, Snapshot } from "./api.js";
import { explainClick } from "./viewmodel.js";

export interface BoardState {
  snapshot: Snapshot | null;
  moves: MovesPayload | null;
  message: string;
  running: boolean;
}

export type Listener = (state: BoardState) => void;

export class BoardController {
  readonly client: Client;
  private listener: Listener;
  private session: string | null = null;
  private snapshot: Snapshot | null = null;
  private moves: MovesPayload | null = null;
  private busy = false;
  private stopRequested = false;
  private running = false;

  constructor(client: Client, listener: Listener) {
    this.client = client;
    this.listener = listener;
  }

  state(): BoardState {
    return { snapshot: this.snapshot, moves: this.moves, message: "", running: this.running };
  }

  private notify(message: string): void {
    this.listener({ snapshot: this.snapshot, moves: this.moves, message, running: this.running });
  }

  private async sync(snapshot: Snapshot | null, message: string): Promise<void> {
    if (!this.session) return;
    let snap = snapshot ?? (await this.client.snapshot(this.session));
    // moves are fetched separately; if someone raced us, converge on the
    // newer version before painting
    for (let attempt = 0; attempt < 3; attempt++) {
      const moves = await this.client.moves(this.session);
      if (moves.version === snap.version) {
        this.snapshot = snap;
        this.moves = moves;
        this.notify(message);
        return;
      }
      snap = await this.client.snapshot(this.session);
    }
    throw new Error("session version kept moving; is another tab autorunning?");
  }

  async create(body: CreateSessionBody): Promise<void> {
    const snap = await this.client.createSession(body);
    this.session = snap.session;
    await this.sync(snap, `session ${snap.session} created`);
  }

  async attach(session: string): Promise<void> {
    this.session = session;
    await this.sync(null, `attached to ${session}`);
  }

  async click(edgeId: string): Promise<void> {
    if (!this.session || !this.snapshot || !this.moves) return;
    if (this.busy) {
      this.notify("still applying the previous action");
      return;
    }
    const outcome = explainClick(edgeId, this.snapshot, this.moves);
    if (outcome.kind === "noop") {
      this.notify(outcome.reason);
      return;
    }
    this.busy = true;
    try {
      const snap = await this.client.fire(this.session, this.snapshot.version, outcome.moveIndex);
      await this.sync(snap, describeLast(snap));
    } catch (err) {
      await this.recover(err);
    } finally {
      this.busy = false;
    }
  }

  async undo(): Promise<void> {
    if (!this.session || !this.snapshot || this.busy) return;
    this.busy = true;
    try {
      const snap = await this.client.undo(this.session, this.snapshot.version);
      await this.sync(snap, "undid one step");
    } catch (err) {
      await this.recover(err);
    } finally {
      this.busy = false;
    }
  }

  /**
   * Run a strategy in chunks of `chunk` steps up to `stepCap` total so the
   * board repaints between server calls and stop() can interrupt.
   */
  async autorun(opts: { strategy: string; seed: number; stepCap: number; chunk?: number }): Promise<void> {
    if (!this.session || !this.snapshot || this.busy) return;
    this.busy = true;
    this.running = true;
    this.stopRequested = false;
    const chunk = opts.chunk ?? 200;
    let remaining = opts.stepCap;
    try {
      while (remaining > 0 && !this.stopRequested) {
        const snap = await this.client.autorun(this.session, this.snapshot!.version, {
          strategy: opts.strategy,
          seed: opts.seed,
          step_cap: Math.min(chunk, remaining),
        });
        remaining -= snap.autorun?.steps ?? chunk;
        const done = !snap.autorun || snap.autorun.stop_reason !== "step-cap";
        if (done || remaining <= 0 || this.stopRequested) {
          this.running = false;
          await this.sync(snap, autorunMessage(snap, opts.stepCap - remaining));
          return;
        }
        await this.sync(snap, `running: ${opts.stepCap - remaining} steps so far`);
      }
      this.running = false;
      this.notify("stopped");
    } catch (err) {
      this.running = false;
      await this.recover(err);
    } finally {
      this.busy = false;
      this.running = false;
    }
  }

  stop(): void {
    this.stopRequested = true;
  }

  async predict(): Promise<Prediction | null> {
    if (!this.session) return null;
    return this.client.predict(this.session);
  }

  private async recover(err: unknown): Promise<void> {
    if (err instanceof ApiError && err.status === 409) {
      await this.sync(null, "the board was stale; refreshed to the latest state");
      return;
    }
    if (err instanceof ApiError) {
      const detail = err.detail as { reason?: string } | null;
      this.notify(detail?.reason ?? `request failed (${err.status})`);
      return;
    }
    throw err;
  }
}

function describeLast(snap: Snapshot): string {
  const last = snap.last;
  if (!last || last.action !== "fire") return `step ${snap.steps}`;
  const psi = last.deltas?.["psi"];
  const phi = last.deltas?.["phi"];
  const drop = psi !== undefined ? `, psi ${fmtDelta(psi)}` : phi !== undefined ? `, phi ${fmtDelta(phi)}` : "";
  return `fired: ${JSON.stringify(last.move)}${drop}${snap.terminal ? " (terminal)" : ""}`;
}

function fmtDelta(d: number): string {
  return d > 0 ? `+${d}` : String(d);
}

function autorunMessage(snap: Snapshot, steps: number): string {
  if (snap.terminal) return `terminal after ${snap.steps} total steps`;
  const reason = snap.autorun?.stop_reason ?? "stopped";
  return `stopped (${reason}) after ${steps} steps`;
}
