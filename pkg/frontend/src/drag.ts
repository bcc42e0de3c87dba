// Node dragging on the map: hit test in world coordinates, track the grab,
// emit a single move_node command on drop.

import type { NodeState } from "./protocol.js";

export interface DragState {
  node: number;
  worldX: number;
  worldY: number;
}

/** Nearest node within radius of the pointer (world units), else null. */
export function hitTest(
  nodes: Pick<NodeState, "id" | "x" | "y">[],
  worldX: number,
  worldY: number,
  radius: number,
): number | null {
  let best: number | null = null;
  let bestD = radius;
  for (const n of nodes) {
    const d = Math.hypot(n.x - worldX, n.y - worldY);
    if (d <= bestD) {
      bestD = d;
      best = n.id;
    }
  }
  return best;
}

export function beginDrag(
  nodes: Pick<NodeState, "id" | "x" | "y">[],
  worldX: number,
  worldY: number,
  radius = 0.35,
): DragState | null {
  const node = hitTest(nodes, worldX, worldY, radius);
  return node === null ? null : { node, worldX, worldY };
}

export function updateDrag(drag: DragState, worldX: number, worldY: number): DragState {
  return { ...drag, worldX, worldY };
}

/** Drop: the final coordinates become the move_node payload. */
export function endDrag(drag: DragState): { type: "move_node"; node: number; x: number; y: number } {
  return { type: "move_node", node: drag.node, x: drag.worldX, y: drag.worldY };
}
