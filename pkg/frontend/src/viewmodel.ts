// Pure board logic: grid cell ids, the view model, and click handling.
// Everything here is synchronous and side-effect free so it can be tested
// without a DOM or a server.

import type { ConfigJson, MoveEntry, MovesPayload, Snapshot } from "./api.js";

export interface FaceCell {
  id: string;
  x: number;
  y: number;
  value: number;
  hole: boolean;
}

export interface EdgeCell {
  id: string;
  orientation: "H" | "V";
  x: number;
  y: number;
  value: number;
  moveIndex: number | null;
  label: string | null;
  onHoleBoundary: boolean;
}

export interface ViewModel {
  window: [number, number, number, number];
  faces: FaceCell[];
  edges: EdgeCell[];
  hole: string | null;
}

export type ClickOutcome =
  | { kind: "fire"; moveIndex: number; label: string }
  | { kind: "noop"; reason: string };

export function parseFaceId(id: string): { x: number; y: number } {
  const m = /^F:(-?\d+),(-?\d+)$/.exec(id);
  if (!m) throw new Error(`not a grid face id: ${id}`);
  return { x: Number(m[1]), y: Number(m[2]) };
}

export function parseEdgeId(id: string): { orientation: "H" | "V"; x: number; y: number } {
  const m = /^([HV]):(-?\d+),(-?\d+)$/.exec(id);
  if (!m) throw new Error(`not a grid edge id: ${id}`);
  return { orientation: m[1] as "H" | "V", x: Number(m[2]), y: Number(m[3]) };
}

export function faceId(x: number, y: number): string {
  return `F:${x},${y}`;
}

export function edgeId(orientation: "H" | "V", x: number, y: number): string {
  return `${orientation}:${x},${y}`;
}

/** The four edges around face (x, y), the one-sided firing sites of a hole. */
export function faceBoundaryEdges(x: number, y: number): string[] {
  return [edgeId("H", x, y), edgeId("H", x, y + 1), edgeId("V", x, y), edgeId("V", x + 1, y)];
}

function entryMap(config: ConfigJson | null): Map<string, number> {
  const map = new Map<string, number>();
  if (config) {
    for (const [id, value] of config.entries) map.set(id, value);
  }
  return map;
}

export function buildViewModel(snapshot: Snapshot, moves: MovesPayload): ViewModel {
  if (snapshot.kind !== "grid" || !snapshot.window) {
    throw new Error(`the board renders grid sessions only, got kind=${snapshot.kind}`);
  }
  const [x0, y0, x1, y1] = snapshot.window;
  const faceValues = entryMap(snapshot.faces);
  const edgeValues = entryMap(snapshot.edges);
  const hole = snapshot.rules.hole;
  const holeEdges = new Set<string>();
  if (hole) {
    const { x, y } = parseFaceId(hole);
    for (const e of faceBoundaryEdges(x, y)) holeEdges.add(e);
  }

  const edgeMove = new Map<string, MoveEntry>();
  for (const entry of moves.moves) {
    for (const e of entry.edges) {
      if (!edgeMove.has(e)) edgeMove.set(e, entry);
    }
  }

  const faces: FaceCell[] = [];
  for (let y = y1; y >= y0; y--) {
    for (let x = x0; x <= x1; x++) {
      const id = faceId(x, y);
      faces.push({ id, x, y, value: faceValues.get(id) ?? 0, hole: id === hole });
    }
  }

  const edges: EdgeCell[] = [];
  const push = (orientation: "H" | "V", x: number, y: number) => {
    const id = edgeId(orientation, x, y);
    const entry = edgeMove.get(id) ?? null;
    edges.push({
      id,
      orientation,
      x,
      y,
      value: edgeValues.get(id) ?? 0,
      moveIndex: entry ? entry.index : null,
      label: entry ? entry.label : null,
      onHoleBoundary: holeEdges.has(id),
    });
  };
  for (let x = x0; x <= x1; x++) {
    for (let y = y0; y <= y1 + 1; y++) push("H", x, y);
  }
  for (let x = x0; x <= x1 + 1; x++) {
    for (let y = y0; y <= y1; y++) push("V", x, y);
  }

  return { window: [x0, y0, x1, y1], faces, edges, hole };
}

/**
 * Decide what a click on an edge does. A click either names the legal move
 * the server listed for that edge, or is a no-op with a human explanation
 * of why the edge cannot fire.
 */
export function explainClick(id: string, snapshot: Snapshot, moves: MovesPayload): ClickOutcome {
  for (const entry of moves.moves) {
    if (entry.edges.includes(id)) {
      return { kind: "fire", moveIndex: entry.index, label: entry.label };
    }
  }

  const magnitude = Math.abs(entryMap(snapshot.edges).get(id) ?? 0);
  const threshold = snapshot.rules.transfer_threshold;
  let onHoleBoundary = false;
  if (snapshot.rules.hole) {
    const { x, y } = parseFaceId(snapshot.rules.hole);
    onHoleBoundary = faceBoundaryEdges(x, y).includes(id);
  }

  if (onHoleBoundary) {
    if (magnitude === 0) {
      return { kind: "noop", reason: `${id} is balanced against the hole; hole edges fire with 1 unit` };
    }
    return { kind: "noop", reason: `no legal move reroutes ${id}` };
  }
  if (magnitude < threshold) {
    return {
      kind: "noop",
      reason: `${id} needs ${threshold} units to fire; it carries ${magnitude}`,
    };
  }
  return { kind: "noop", reason: `no legal move reroutes ${id}` };
}

/** Face ids whose current value differs from the prediction. */
export function diffFaces(current: ConfigJson | null, predicted: ConfigJson): string[] {
  const have = entryMap(current);
  const want = entryMap(predicted);
  const ids = new Set([...have.keys(), ...want.keys()]);
  const out: string[] = [];
  for (const id of ids) {
    if ((have.get(id) ?? 0) !== (want.get(id) ?? 0)) out.push(id);
  }
  return out.sort();
}
