// Wire protocol shared with the gateway. Every message is a single JSON
// object with a "type" field; field names here mirror the server bit for bit.

export interface PendulumState {
  id: number;
  x: number;
  theta: number;
  u: number;
  active: boolean;
}

export interface NodeState {
  id: number;
  x: number;
  y: number;
  mode: number;
  epoch: number;
  status: "ACTIVE" | "SAFE";
  rx: boolean;
}

export interface LinkState {
  a: number;
  b: number;
  p: number;
}

export interface StateFrame {
  type: "state";
  round: number;
  t_ms: number;
  pendulums: PendulumState[];
  nodes: NodeState[];
  links: LinkState[];
  mode: number;
  dwell_remaining: number;
}

export interface ModeChangedFrame {
  type: "mode_changed";
  mode: number;
  round: number;
}

export interface RejectedFrame {
  type: "rejected";
  earliest_round: number | null;
}

export interface AnnounceFrame {
  type: "announce";
  mode: number;
  switch_round: number;
  epoch: number;
}

export interface SafeEntryFrame {
  type: "safe_entry";
  node: number;
  reason: string;
  round: number;
}

export interface ResyncFrame {
  type: "resync";
  node: number;
  round: number;
}

export interface FallFrame {
  type: "fall";
  pendulum: number;
  round: number;
}

export interface ErrorFrame {
  type: "error";
  message: string;
}

export type ServerFrame =
  | StateFrame
  | ModeChangedFrame
  | RejectedFrame
  | AnnounceFrame
  | SafeEntryFrame
  | ResyncFrame
  | FallFrame
  | ErrorFrame;

export interface ModeInfo {
  id: number;
  name: string;
  laws: Record<string, string>;
  energy_ms: number;
}

export interface ModeCatalog {
  modes: ModeInfo[];
  tau_min: number;
  lead_rounds: number;
}

const KNOWN_TYPES = new Set([
  "state",
  "mode_changed",
  "rejected",
  "announce",
  "safe_entry",
  "resync",
  "fall",
  "error",
]);

function isNum(v: unknown): v is number {
  return typeof v === "number" && Number.isFinite(v);
}

function validState(f: Record<string, unknown>): boolean {
  if (!isNum(f.round) || !isNum(f.t_ms) || !isNum(f.mode) || !isNum(f.dwell_remaining)) {
    return false;
  }
  if (!Array.isArray(f.pendulums) || !Array.isArray(f.nodes) || !Array.isArray(f.links)) {
    return false;
  }
  return (f.pendulums as unknown[]).every((p) => {
    const q = p as Record<string, unknown>;
    return isNum(q.id) && isNum(q.x) && isNum(q.theta) && isNum(q.u) && typeof q.active === "boolean";
  });
}

/** Parse one wire message. Returns null for junk (the UI never fabricates
 * state from a message it cannot trust). */
export function parseFrame(raw: string): ServerFrame | null {
  let data: unknown;
  try {
    data = JSON.parse(raw);
  } catch {
    return null;
  }
  if (typeof data !== "object" || data === null) {
    return null;
  }
  const f = data as Record<string, unknown>;
  if (typeof f.type !== "string" || !KNOWN_TYPES.has(f.type)) {
    return null;
  }
  if (f.type === "state" && !validState(f)) {
    return null;
  }
  return data as ServerFrame;
}

export function parseCatalog(data: unknown): ModeCatalog | null {
  if (typeof data !== "object" || data === null) {
    return null;
  }
  const c = data as Record<string, unknown>;
  if (!Array.isArray(c.modes) || !isNum(c.tau_min)) {
    return null;
  }
  return data as ModeCatalog;
}

// Commands the dashboard may send.
export function modeRequest(mode: number): string {
  return JSON.stringify({ type: "mode_request", mode });
}

export function moveNode(node: number, x: number, y: number): string {
  return JSON.stringify({ type: "move_node", node, x, y });
}

export function setReference(x: number): string {
  return JSON.stringify({ type: "set_reference", x });
}
