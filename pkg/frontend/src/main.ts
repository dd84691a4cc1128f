// DOM bootstrap: wires the controller to the page.

import { Client } from "./api.js";
import { BoardController } from "./controller.js";
import type { BoardState } from "./controller.js";
import { buildViewModel, diffFaces } from "./viewmodel.js";
import { renderBoard } from "./svg.js";

const boardEl = document.getElementById("board")!;
const statusEl = document.getElementById("status")!;
const monitorsEl = document.getElementById("monitors")!;
const kInput = document.getElementById("pulse-k") as HTMLInputElement;
const holeInput = document.getElementById("with-hole") as HTMLInputElement;
const newButton = document.getElementById("new-session") as HTMLButtonElement;
const undoButton = document.getElementById("undo") as HTMLButtonElement;
const runButton = document.getElementById("autorun") as HTMLButtonElement;
const stopButton = document.getElementById("stop") as HTMLButtonElement;
const predictButton = document.getElementById("predict") as HTMLButtonElement;
const strategySelect = document.getElementById("strategy") as HTMLSelectElement;
const seedInput = document.getElementById("seed") as HTMLInputElement;

let mismatches: Set<string> | null = null;

function paint(state: BoardState): void {
  if (state.message) statusEl.textContent = state.message;
  const { snapshot, moves } = state;
  if (!snapshot || !moves) return;
  boardEl.innerHTML = renderBoard(buildViewModel(snapshot, moves), {
    mismatches: mismatches ?? undefined,
  });
  const bits = [
    `step ${snapshot.steps}`,
    `v${snapshot.version}`,
    snapshot.terminal ? "terminal" : `${moves.moves.length} legal moves`,
  ];
  for (const [name, value] of Object.entries(snapshot.monitors)) {
    bits.push(`${name}=${value}`);
  }
  monitorsEl.textContent = bits.join("  ·  ");
  stopButton.disabled = !state.running;
}

const controller = new BoardController(new Client(""), (state) => {
  if (state.snapshot?.last) mismatches = null; // any change invalidates the overlay
  paint(state);
});

function sessionBody() {
  const k = Math.max(1, Math.min(9, Number(kInput.value) || 2));
  const withHole = holeInput.checked;
  return {
    complex: withHole ? { kind: "grid", distinguished: "F:0,0" } : { kind: "grid" },
    config: { representation: "face" as const, entries: [["F:0,0", k] as [string, number]] },
    rules: withHole ? ("hole" as const) : ("nohole" as const),
  };
}

newButton.addEventListener("click", () => {
  mismatches = null;
  controller.create(sessionBody()).catch(showError);
});

boardEl.addEventListener("click", (event) => {
  const target = (event.target as Element).closest("[data-edge]");
  if (!target) return;
  controller.click(target.getAttribute("data-edge")!).catch(showError);
});

undoButton.addEventListener("click", () => {
  mismatches = null;
  controller.undo().catch(showError);
});

runButton.addEventListener("click", () => {
  mismatches = null;
  controller
    .autorun({
      strategy: strategySelect.value,
      seed: Number(seedInput.value) || 0,
      stepCap: 100000,
    })
    .catch(showError);
});

stopButton.addEventListener("click", () => controller.stop());

predictButton.addEventListener("click", () => {
  controller
    .predict()
    .then((prediction) => {
      if (!prediction) return;
      const snap = controller.state().snapshot;
      if (!snap) return;
      mismatches = new Set(diffFaces(snap.faces, prediction.predicted));
      statusEl.textContent = prediction.matches
        ? "state matches the predicted terminal"
        : `${mismatches.size} faces differ from the predicted terminal`;
      paint(controller.state());
    })
    .catch(showError);
});

function showError(err: unknown): void {
  statusEl.textContent = err instanceof Error ? err.message : String(err);
}

controller.create(sessionBody()).catch(showError);
