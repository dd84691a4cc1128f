// SVG rendering of the board view model. Pure string building so tests can
// assert on the markup; main.ts owns injection and event wiring.

import type { EdgeCell, ViewModel } from "./viewmodel.js";

const UNIT = 56;
const PAD = 26;

function esc(text: string): string {
  return text.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;").replace(/"/g, "&quot;");
}

function faceFill(value: number, hole: boolean): string {
  if (hole) return "var(--hole, #f6c453)";
  if (value === 0) return "var(--zero, #ffffff)";
  const depth = Math.min(Math.abs(value), 5);
  const alpha = 0.12 + 0.16 * depth;
  return value > 0 ? `rgba(43, 108, 176, ${alpha.toFixed(2)})` : `rgba(197, 48, 48, ${alpha.toFixed(2)})`;
}

export interface RenderOptions {
  mismatches?: Set<string>;
}

export function renderBoard(vm: ViewModel, options: RenderOptions = {}): string {
  const [x0, y0, x1, y1] = vm.window;
  const sx = (x: number) => PAD + (x - x0) * UNIT;
  const sy = (y: number) => PAD + (y1 + 1 - y) * UNIT;
  const width = 2 * PAD + (x1 - x0 + 1) * UNIT;
  const height = 2 * PAD + (y1 - y0 + 1) * UNIT;
  const parts: string[] = [];
  parts.push(
    `<svg class="board" xmlns="http://www.w3.org/2000/svg" viewBox="0 0 ${width} ${height}" width="${width}" height="${height}">`,
  );

  for (const face of vm.faces) {
    const cls = options.mismatches?.has(face.id) ? "face mismatch" : "face";
    parts.push(
      `<rect class="${cls}" data-face="${face.id}" x="${sx(face.x)}" y="${sy(face.y + 1)}" ` +
        `width="${UNIT}" height="${UNIT}" fill="${faceFill(face.value, face.hole)}"/>`,
    );
    const label = face.hole ? `${face.value}∘` : face.value === 0 ? "" : String(face.value);
    if (label) {
      parts.push(
        `<text class="face-label" x="${sx(face.x) + UNIT / 2}" y="${sy(face.y + 1) + UNIT / 2}" ` +
          `text-anchor="middle" dominant-baseline="central">${label}</text>`,
      );
    }
  }

  for (const edge of vm.edges) {
    parts.push(edgeMarkup(edge, sx, sy));
  }

  parts.push("</svg>");
  return parts.join("\n");
}

function edgeMarkup(edge: EdgeCell, sx: (x: number) => number, sy: (y: number) => number): string {
  const ax = sx(edge.x);
  const ay = sy(edge.y);
  const bx = edge.orientation === "H" ? sx(edge.x + 1) : ax;
  const by = edge.orientation === "V" ? sy(edge.y + 1) : ay;
  const classes = ["edge"];
  if (edge.moveIndex !== null) classes.push("legal");
  if (edge.onHoleBoundary) classes.push("hole-edge");
  if (edge.value !== 0) classes.push("carrying");
  const width = edge.value === 0 ? 1 : 2 + 2 * Math.min(Math.abs(edge.value), 4);
  const tip = edge.label ? `${edge.label} (${edge.value})` : `${edge.id} = ${edge.value}`;
  const line =
    `<line class="${classes.join(" ")}" data-edge="${edge.id}" x1="${ax}" y1="${ay}" ` +
    `x2="${bx}" y2="${by}" stroke-width="${width}"><title>${esc(tip)}</title></line>`;
  // wide transparent twin so thin edges are still clickable
  const hit =
    `<line class="hit" data-edge="${edge.id}" x1="${ax}" y1="${ay}" x2="${bx}" y2="${by}" ` +
    `stroke-width="13"/>`;
  return line + "\n" + hit;
}
