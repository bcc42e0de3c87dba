// Pure geometry for the renderer: world<->screen transforms, pendulum pose,
// chart scaling, status colors. Kept free of DOM types so it tests headless.

export interface Viewport {
  scale: number; // screen px per world unit
  offsetX: number; // screen x of world origin
  offsetY: number; // screen y of world origin (screen y grows downward)
}

export function worldToScreen(v: Viewport, wx: number, wy: number): { x: number; y: number } {
  return { x: v.offsetX + wx * v.scale, y: v.offsetY - wy * v.scale };
}

export function screenToWorld(v: Viewport, sx: number, sy: number): { x: number; y: number } {
  return { x: (sx - v.offsetX) / v.scale, y: (v.offsetY - sy) / v.scale };
}

/** Fit the given world bounding box into a screen box with padding. */
export function fitViewport(
  worldMinX: number,
  worldMaxX: number,
  worldMinY: number,
  worldMaxY: number,
  screenW: number,
  screenH: number,
  pad: number,
): Viewport {
  const spanX = Math.max(worldMaxX - worldMinX, 1e-9);
  const spanY = Math.max(worldMaxY - worldMinY, 1e-9);
  const scale = Math.min((screenW - 2 * pad) / spanX, (screenH - 2 * pad) / spanY);
  return {
    scale,
    offsetX: pad - worldMinX * scale + (screenW - 2 * pad - spanX * scale) / 2,
    offsetY: screenH - pad + worldMinY * scale - (screenH - 2 * pad - spanY * scale) / 2,
  };
}

/** Pole tip position from cart position and pole angle (theta = 0 upright,
 * positive theta tips in +x). Screen y grows downward. */
export function poleEndpoint(
  cartScreenX: number,
  cartScreenY: number,
  theta: number,
  poleLenPx: number,
): { x: number; y: number } {
  return {
    x: cartScreenX + poleLenPx * Math.sin(theta),
    y: cartScreenY - poleLenPx * Math.cos(theta),
  };
}

/** Maps a value to a chart y coordinate; the value range is symmetric about
 * zero and covers at least minRange so flat lines do not fill the panel. */
export function chartY(
  value: number,
  maxAbs: number,
  minRange: number,
  heightPx: number,
): number {
  const bound = Math.max(maxAbs, minRange);
  const clamped = Math.max(-bound, Math.min(bound, value));
  return heightPx / 2 - (clamped / bound) * (heightPx / 2 - 2);
}

export function statusColor(status: "ACTIVE" | "SAFE", rx: boolean): string {
  if (status === "SAFE") {
    return "#e04848"; // alert
  }
  return rx ? "#3fa34d" : "#c9a227"; // healthy vs missing floods
}

export function linkColor(p: number): string {
  const alpha = 0.15 + 0.85 * p;
  return `rgba(90, 130, 190, ${alpha.toFixed(3)})`;
}
