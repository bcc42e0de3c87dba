// Canvas drawing. Keeps all math in geometry.ts; this file is the thin layer
// that touches the 2D context.

import {
  chartY,
  fitViewport,
  linkColor,
  poleEndpoint,
  statusColor,
  worldToScreen,
  type Viewport,
} from "./geometry.js";
import type { StateFrame } from "./protocol.js";
import type { HistoryPoint } from "./store.js";

const PEND_COLORS = ["#4c78a8", "#f58518", "#54a24b", "#b279a2", "#e45756"];

export function drawPendulums(ctx: CanvasRenderingContext2D, frame: StateFrame): void {
  const { width, height } = ctx.canvas;
  ctx.clearRect(0, 0, width, height);
  const n = frame.pendulums.length;
  const laneW = width / n;
  const railY = height * 0.72;
  const poleLen = Math.min(laneW * 0.42, height * 0.5);
  const xScale = laneW * 0.28; // metres to pixels inside a lane

  for (const p of frame.pendulums) {
    const cx = laneW * (p.id + 0.5);
    ctx.strokeStyle = "#555";
    ctx.lineWidth = 1;
    ctx.beginPath();
    ctx.moveTo(cx - laneW * 0.45, railY);
    ctx.lineTo(cx + laneW * 0.45, railY);
    ctx.stroke();

    const cartX = cx + Math.max(-laneW * 0.42, Math.min(laneW * 0.42, p.x * xScale));
    const color = p.active ? PEND_COLORS[p.id % PEND_COLORS.length] : "#888";
    ctx.fillStyle = color;
    ctx.fillRect(cartX - 14, railY - 8, 28, 16);

    const tip = poleEndpoint(cartX, railY - 8, p.theta, poleLen);
    ctx.strokeStyle = color;
    ctx.lineWidth = 4;
    ctx.beginPath();
    ctx.moveTo(cartX, railY - 8);
    ctx.lineTo(tip.x, tip.y);
    ctx.stroke();
    ctx.beginPath();
    ctx.arc(tip.x, tip.y, 6, 0, 2 * Math.PI);
    ctx.fill();

    ctx.fillStyle = "#ccc";
    ctx.font = "12px sans-serif";
    ctx.textAlign = "center";
    ctx.fillText(
      `P${p.id + 1} ${p.active ? "" : "(idle)"}`.trim(),
      cx,
      height - 8,
    );
  }
}

export function drawCharts(
  ctx: CanvasRenderingContext2D,
  history: HistoryPoint[],
  nPend: number,
): void {
  const { width, height } = ctx.canvas;
  ctx.clearRect(0, 0, width, height);
  if (history.length < 2) {
    return;
  }
  let maxAbs = 0;
  for (const h of history) {
    for (const th of h.thetas) {
      maxAbs = Math.max(maxAbs, Math.abs(th));
    }
  }
  ctx.strokeStyle = "#444";
  ctx.lineWidth = 1;
  ctx.beginPath();
  ctx.moveTo(0, height / 2);
  ctx.lineTo(width, height / 2);
  ctx.stroke();

  const r0 = history[0].round;
  const rSpan = Math.max(history[history.length - 1].round - r0, 1);
  for (let i = 0; i < nPend; i++) {
    ctx.strokeStyle = PEND_COLORS[i % PEND_COLORS.length];
    ctx.lineWidth = 1.5;
    ctx.beginPath();
    let pen = false;
    for (const h of history) {
      const x = ((h.round - r0) / rSpan) * width;
      const y = chartY(h.thetas[i], maxAbs, 0.01, height);
      if (h.gapBefore) {
        pen = false; // gap marker: break the line where rounds were skipped
      }
      if (pen) {
        ctx.lineTo(x, y);
      } else {
        ctx.moveTo(x, y);
        pen = true;
      }
    }
    ctx.stroke();
  }
  // gap ticks along the top edge
  ctx.fillStyle = "#e04848";
  for (const h of history) {
    if (h.gapBefore) {
      const x = ((h.round - r0) / rSpan) * width;
      ctx.fillRect(x - 1, 0, 2, 8);
    }
  }
  ctx.fillStyle = "#999";
  ctx.font = "11px sans-serif";
  ctx.textAlign = "left";
  ctx.fillText(`pole angle, full scale ±${Math.max(maxAbs, 0.01).toFixed(3)} rad`, 6, 12);
}

export interface MapLayout {
  viewport: Viewport;
}

export function computeMapViewport(frame: StateFrame, width: number, height: number): Viewport {
  let minX = Infinity;
  let maxX = -Infinity;
  let minY = Infinity;
  let maxY = -Infinity;
  for (const n of frame.nodes) {
    minX = Math.min(minX, n.x);
    maxX = Math.max(maxX, n.x);
    minY = Math.min(minY, n.y);
    maxY = Math.max(maxY, n.y);
  }
  return fitViewport(minX - 0.5, maxX + 0.5, minY - 0.5, maxY + 0.5, width, height, 18);
}

export function drawMap(
  ctx: CanvasRenderingContext2D,
  frame: StateFrame,
  viewport: Viewport,
  dragNode: number | null,
  dragPos: { x: number; y: number } | null,
): void {
  const { width, height } = ctx.canvas;
  ctx.clearRect(0, 0, width, height);

  const pos = new Map<number, { x: number; y: number }>();
  for (const n of frame.nodes) {
    const world =
      n.id === dragNode && dragPos !== null ? dragPos : { x: n.x, y: n.y };
    pos.set(n.id, worldToScreen(viewport, world.x, world.y));
  }
  for (const link of frame.links) {
    const a = pos.get(link.a);
    const b = pos.get(link.b);
    if (!a || !b) {
      continue;
    }
    ctx.strokeStyle = linkColor(link.p);
    ctx.lineWidth = 1 + 2 * link.p;
    ctx.beginPath();
    ctx.moveTo(a.x, a.y);
    ctx.lineTo(b.x, b.y);
    ctx.stroke();
  }
  for (const n of frame.nodes) {
    const s = pos.get(n.id)!;
    ctx.fillStyle = statusColor(n.status, n.rx);
    ctx.beginPath();
    ctx.arc(s.x, s.y, n.id === 0 ? 9 : 7, 0, 2 * Math.PI);
    ctx.fill();
    if (n.id === 0) {
      ctx.strokeStyle = "#fff";
      ctx.lineWidth = 2;
      ctx.stroke(); // ring marks the controller
    }
    ctx.fillStyle = "#ddd";
    ctx.font = "10px sans-serif";
    ctx.textAlign = "center";
    ctx.fillText(String(n.id), s.x, s.y - 10);
  }
}
