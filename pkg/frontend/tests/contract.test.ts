// Contract test against a real server: the board's click path must agree
// with the session API. Needs the python package installed (see README).

import { spawn } from "node:child_process";
import type { ChildProcess } from "node:child_process";
import { createServer } from "node:net";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { Client } from "../src/api.js";
import type { Snapshot } from "../src/api.js";
import { buildViewModel, explainClick } from "../src/viewmodel.js";

const STARTUP_MS = 20000;

function freePort(): Promise<number> {
  return new Promise((resolve, reject) => {
    const probe = createServer();
    probe.once("error", reject);
    probe.listen(0, "127.0.0.1", () => {
      const address = probe.address();
      if (address === null || typeof address === "string") {
        reject(new Error("no port assigned"));
        return;
      }
      probe.close(() => resolve(address.port));
    });
  });
}

function contentOf(snap: Snapshot) {
  const { state, faces, edges, monitors, steps, terminal } = snap;
  return { state, faces, edges, monitors, steps, terminal };
}

let server: ChildProcess;
let client: Client;

beforeAll(async () => {
  const port = await freePort();
  server = spawn("python3", ["-m", "flowfire.cli", "serve", "--host", "127.0.0.1", "--port", String(port)], {
    stdio: ["ignore", "ignore", "inherit"],
  });
  client = new Client(`http://127.0.0.1:${port}`);
  const deadline = Date.now() + STARTUP_MS;
  for (;;) {
    try {
      await client.healthz();
      break;
    } catch {
      if (Date.now() > deadline) throw new Error("server did not come up");
      if (server.exitCode !== null) throw new Error(`server exited early (${server.exitCode})`);
      await new Promise((r) => setTimeout(r, 200));
    }
  }
}, STARTUP_MS + 5000);

afterAll(() => {
  server?.kill("SIGTERM");
});

async function freshPulse(k = 2): Promise<Snapshot> {
  return client.createSession({
    complex: { kind: "grid", distinguished: "F:0,0" },
    config: { representation: "face", entries: [["F:0,0", k]] },
    rules: "hole",
  });
}

describe("board contract", () => {
  it("fires a clicked legal edge and the psi delta matches the server's", async () => {
    const snap0 = await freshPulse();
    const moves0 = await client.moves(snap0.session);
    const vm = buildViewModel(snap0, moves0);
    const legal = vm.edges.filter((e) => e.moveIndex !== null);
    expect(legal.length).toBeGreaterThan(0);

    const clicked = legal.find((e) => e.id === "V:0,0")!;
    const outcome = explainClick(clicked.id, snap0, moves0);
    expect(outcome.kind).toBe("fire");
    if (outcome.kind !== "fire") return;

    const snap1 = await client.fire(snap0.session, snap0.version, outcome.moveIndex);
    expect(snap1.version).toBe(snap0.version + 1);
    expect(snap1.last?.action).toBe("fire");
    expect(snap1.last?.move).toEqual(moves0.moves[outcome.moveIndex]!.move);
    const serverDelta = snap1.last?.deltas?.["psi"];
    expect(typeof serverDelta).toBe("number");
    expect(snap1.monitors["psi"]! - snap0.monitors["psi"]!).toBe(serverDelta);
  });

  it("treats a 1-unit edge away from the hole as a no-op and explains the threshold", async () => {
    const snap0 = await freshPulse();
    const moves0 = await client.moves(snap0.session);
    // fire across V:0,0 so the faraway side picks up 1-unit edges
    const createLeft = explainClick("V:0,0", snap0, moves0);
    expect(createLeft.kind).toBe("fire");
    if (createLeft.kind !== "fire") return;
    const snap1 = await client.fire(snap0.session, snap0.version, createLeft.moveIndex);
    const moves1 = await client.moves(snap1.session);

    const edgeValue = new Map(snap1.edges.entries).get("V:-1,0");
    expect(Math.abs(edgeValue ?? 0)).toBe(1);
    const outcome = explainClick("V:-1,0", snap1, moves1);
    expect(outcome.kind).toBe("noop");
    if (outcome.kind === "noop") {
      expect(outcome.reason).toContain("needs 2 units");
      expect(outcome.reason).toContain("carries 1");
    }
    // a no-op click never reaches the server
    const after = await client.snapshot(snap1.session);
    expect(after.version).toBe(snap1.version);
    expect(contentOf(after)).toEqual(contentOf(snap1));
  });

  it("undo restores the exact prior snapshot content", async () => {
    const snap0 = await freshPulse();
    const moves0 = await client.moves(snap0.session);
    const snap1 = await client.fire(snap0.session, snap0.version, moves0.moves[0]!.index);
    expect(contentOf(snap1)).not.toEqual(contentOf(snap0));

    const snap2 = await client.undo(snap1.session, snap1.version);
    expect(contentOf(snap2)).toEqual(contentOf(snap0));
    expect(snap2.version).toBeGreaterThan(snap1.version);
    expect(snap2.last?.action).toBe("undo");
  });

  it("autorun reaches the predicted pyramid", async () => {
    const snap0 = await freshPulse(2);
    const snap1 = await client.autorun(snap0.session, snap0.version, { seed: 9, step_cap: 100000 });
    expect(snap1.terminal).toBe(true);
    const prediction = await client.predict(snap1.session);
    expect(prediction.matches).toBe(true);
  });
});
