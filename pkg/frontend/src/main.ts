// Dashboard wiring: mode buttons from /modes, the websocket stream into the
// store, a rAF render loop over the three panels, and drag-to-move nodes.

import { beginDrag, endDrag, updateDrag, type DragState } from "./drag.js";
import { screenToWorld } from "./geometry.js";
import { modeRequest, parseCatalog, type ModeCatalog } from "./protocol.js";
import { computeMapViewport, drawCharts, drawMap, drawPendulums } from "./render.js";
import { SocketClient } from "./socket.js";
import { SessionView } from "./store.js";

const store = new SessionView();

function canvasCtx(id: string): CanvasRenderingContext2D {
  const canvas = document.getElementById(id) as HTMLCanvasElement;
  const ctx = canvas.getContext("2d");
  if (!ctx) {
    throw new Error(`no 2d context for #${id}`);
  }
  return ctx;
}

const wsUrl = `${location.protocol === "https:" ? "wss" : "ws"}://${location.host}/ws`;
const client = new SocketClient(wsUrl, store, (url) => new WebSocket(url) as never);
client.connect();

let catalog: ModeCatalog | null = null;
const modeBar = document.getElementById("modes") as HTMLDivElement;
const buttons = new Map<number, HTMLButtonElement>();

fetch("/modes")
  .then((r) => r.json())
  .then((data) => {
    catalog = parseCatalog(data);
    if (!catalog) {
      return;
    }
    for (const mode of catalog.modes) {
      const btn = document.createElement("button");
      btn.textContent = `${mode.id}: ${mode.name}`;
      btn.onclick = () => {
        if (!store.canRequestMode()) {
          return; // disabled while dwell_remaining > 0: no message sent
        }
        if (client.send(modeRequest(mode.id))) {
          store.markRequested(mode.id);
        }
      };
      buttons.set(mode.id, btn);
      modeBar.appendChild(btn);
    }
  })
  .catch(() => {
    /* catalog fetch retries on reload; stream still renders */
  });

// --- node dragging ---------------------------------------------------------
const mapCanvas = document.getElementById("map") as HTMLCanvasElement;
let drag: DragState | null = null;

function pointerWorld(ev: MouseEvent): { x: number; y: number } | null {
  if (!store.latest) {
    return null;
  }
  const rect = mapCanvas.getBoundingClientRect();
  const viewport = computeMapViewport(store.latest, mapCanvas.width, mapCanvas.height);
  return screenToWorld(viewport, ev.clientX - rect.left, ev.clientY - rect.top);
}

mapCanvas.addEventListener("mousedown", (ev) => {
  const w = pointerWorld(ev);
  if (w && store.latest) {
    drag = beginDrag(store.latest.nodes, w.x, w.y);
  }
});
mapCanvas.addEventListener("mousemove", (ev) => {
  if (drag) {
    const w = pointerWorld(ev);
    if (w) {
      drag = updateDrag(drag, w.x, w.y);
    }
  }
});
mapCanvas.addEventListener("mouseup", () => {
  if (drag) {
    client.send(JSON.stringify(endDrag(drag))); // final coordinates on drop
    drag = null;
  }
});
mapCanvas.addEventListener("mouseleave", () => {
  drag = null;
});

// --- render loop -----------------------------------------------------------
const pendCtx = canvasCtx("pendulums");
const chartCtx = canvasCtx("charts");
const mapCtx = canvasCtx("map");
const banner = document.getElementById("banner") as HTMLDivElement;
const status = document.getElementById("status") as HTMLDivElement;
const toasts = document.getElementById("toasts") as HTMLDivElement;

function renderLoop(): void {
  const frame = store.latest;
  banner.style.display = store.connection === "open" ? "none" : "block";
  banner.textContent =
    store.connection === "connecting" ? "connecting…" : "connection lost — reconnecting";

  if (frame) {
    drawPendulums(pendCtx, frame);
    drawCharts(chartCtx, store.history, frame.pendulums.length);
    const viewport = computeMapViewport(frame, mapCanvas.width, mapCanvas.height);
    drawMap(
      mapCtx,
      frame,
      viewport,
      drag ? drag.node : null,
      drag ? { x: drag.worldX, y: drag.worldY } : null,
    );
    const dwell = frame.dwell_remaining;
    status.textContent =
      `round ${frame.round}  ·  t=${(frame.t_ms / 1000).toFixed(1)} s  ·  mode ${frame.mode}` +
      (catalog ? ` (${catalog.modes[frame.mode]?.name ?? "?"})` : "") +
      (dwell > 0 ? `  ·  dwell ${dwell}` : "");
    const allow = store.canRequestMode();
    for (const [id, btn] of buttons) {
      btn.disabled = !allow;
      btn.classList.toggle("active-mode", id === frame.mode);
    }
  }
  toasts.innerHTML = "";
  for (const t of store.toasts.slice(-4)) {
    const div = document.createElement("div");
    div.className = `toast ${t.kind}`;
    div.textContent = t.text;
    toasts.appendChild(div);
  }
  requestAnimationFrame(renderLoop);
}

requestAnimationFrame(renderLoop);
