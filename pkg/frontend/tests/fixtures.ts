// Canned payloads captured from a live server: a fresh k=2 hole pulse and
// the state one create later.

import type { MovesPayload, Snapshot } from "../src/api.js";

export function pulseSnapshot(): Snapshot {
  return {
    session: "fixture000001",
    version: 0,
    kind: "grid",
    rules: { representation: "face", hole: "F:0,0", transfer_threshold: 2 },
    pulse_k: 2,
    steps: 0,
    terminal: false,
    state: { representation: "face", entries: [["F:0,0", 2]] },
    faces: { representation: "face", entries: [["F:0,0", 2]] },
    edges: {
      representation: "edge",
      entries: [
        ["H:0,0", -2],
        ["H:0,1", 2],
        ["V:0,0", 2],
        ["V:1,0", -2],
      ],
    },
    monitors: { chips: 2, max: 2, min: 0, psi: 96 },
    window: [-4, -4, 4, 4],
    last: null,
  };
}

export function pulseMoves(): MovesPayload {
  return {
    session: "fixture000001",
    version: 0,
    moves: [
      { index: 0, move: ["create", "F:-1,0"], label: "create at F:-1,0", edges: ["V:0,0"] },
      { index: 1, move: ["create", "F:0,-1"], label: "create at F:0,-1", edges: ["H:0,0"] },
      { index: 2, move: ["create", "F:0,1"], label: "create at F:0,1", edges: ["H:0,1"] },
      { index: 3, move: ["create", "F:1,0"], label: "create at F:1,0", edges: ["V:1,0"] },
    ],
  };
}

export function afterCreateSnapshot(): Snapshot {
  return {
    session: "fixture000001",
    version: 1,
    kind: "grid",
    rules: { representation: "face", hole: "F:0,0", transfer_threshold: 2 },
    pulse_k: 2,
    steps: 1,
    terminal: false,
    state: {
      representation: "face",
      entries: [
        ["F:-1,0", 1],
        ["F:0,0", 2],
      ],
    },
    faces: {
      representation: "face",
      entries: [
        ["F:-1,0", 1],
        ["F:0,0", 2],
      ],
    },
    edges: {
      representation: "edge",
      entries: [
        ["H:-1,0", -1],
        ["H:-1,1", 1],
        ["H:0,0", -2],
        ["H:0,1", 2],
        ["V:-1,0", 1],
        ["V:0,0", 1],
        ["V:1,0", -2],
      ],
    },
    monitors: { chips: 3, max: 2, min: 0, psi: 93 },
    window: [-4, -4, 4, 4],
    last: { action: "fire", move: ["create", "F:-1,0"], deltas: { chips: 1, max: 0, min: 0, psi: -3 } },
  };
}

export function afterCreateMoves(): MovesPayload {
  return {
    session: "fixture000001",
    version: 1,
    moves: [
      { index: 0, move: ["create", "F:-1,0"], label: "create at F:-1,0", edges: ["V:0,0"] },
      { index: 1, move: ["create", "F:0,-1"], label: "create at F:0,-1", edges: ["H:0,0"] },
      { index: 2, move: ["create", "F:0,1"], label: "create at F:0,1", edges: ["H:0,1"] },
      { index: 3, move: ["create", "F:1,0"], label: "create at F:1,0", edges: ["V:1,0"] },
    ],
  };
}
