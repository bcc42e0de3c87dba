// Client-side session state. The stream handler appends here; the render
// loop reads. Every rendered value traces back to a received message field.

import type { ServerFrame, StateFrame } from "./protocol.js";

export type Connection = "connecting" | "open" | "closed";

export interface HistoryPoint {
  round: number;
  t_ms: number;
  thetas: number[];
  xs: number[];
  gapBefore: boolean;
}

export interface Toast {
  text: string;
  kind: "info" | "warn";
}

const HARD_CAP = 5000;

export class SessionView {
  connection: Connection = "connecting";
  latest: StateFrame | null = null;
  history: HistoryPoint[] = [];
  toasts: Toast[] = [];
  framesApplied = 0;
  gapsDetected = 0;
  /** mode id of an unacknowledged request, if any */
  pendingRequest: number | null = null;

  constructor(readonly historyWindowMs: number = 30_000) {}

  /** Apply one parsed frame from the stream. */
  applyFrame(frame: ServerFrame): void {
    switch (frame.type) {
      case "state": {
        const gap = this.latest !== null && frame.round > this.latest.round + 1;
        if (gap) {
          this.gapsDetected += 1;
        }
        this.latest = frame;
        this.framesApplied += 1;
        this.history.push({
          round: frame.round,
          t_ms: frame.t_ms,
          thetas: frame.pendulums.map((p) => p.theta),
          xs: frame.pendulums.map((p) => p.x),
          gapBefore: gap,
        });
        this.trimHistory();
        break;
      }
      case "mode_changed":
        this.pendingRequest = null;
        this.pushToast(`mode changed to ${frame.mode} at round ${frame.round}`, "info");
        break;
      case "rejected":
        this.pendingRequest = null;
        this.pushToast(
          frame.earliest_round === null
            ? "request rejected"
            : `request rejected; earliest admissible round ${frame.earliest_round}`,
          "warn",
        );
        break;
      case "safe_entry":
        this.pushToast(`node ${frame.node} entered SAFE (${frame.reason})`, "warn");
        break;
      case "resync":
        this.pushToast(`node ${frame.node} resynchronized`, "info");
        break;
      case "fall":
        this.pushToast(`pendulum ${frame.pendulum} fell`, "warn");
        break;
      case "error":
        this.pushToast(`server: ${frame.message}`, "warn");
        break;
      case "announce":
        this.pushToast(`switch to mode ${frame.mode} scheduled for round ${frame.switch_round}`, "info");
        break;
    }
  }

  /** Buttons stay locked while the dwell window is open, a request is in
   * flight, or there is nothing to act on. */
  canRequestMode(): boolean {
    return (
      this.connection === "open" &&
      this.latest !== null &&
      this.latest.dwell_remaining === 0 &&
      this.pendingRequest === null
    );
  }

  markRequested(mode: number): void {
    this.pendingRequest = mode;
  }

  setConnection(state: Connection): void {
    this.connection = state;
    if (state !== "open") {
      // renders degrade gracefully: frozen last frame + banner; history stays
      this.pendingRequest = null;
    }
  }

  private trimHistory(): void {
    const newest = this.history[this.history.length - 1];
    const cutoff = newest.t_ms - this.historyWindowMs;
    let start = 0;
    while (start < this.history.length && this.history[start].t_ms < cutoff) {
      start += 1;
    }
    if (start > 0) {
      this.history = this.history.slice(start);
    }
    if (this.history.length > HARD_CAP) {
      this.history = this.history.slice(this.history.length - HARD_CAP);
    }
  }

  private pushToast(text: string, kind: Toast["kind"]): void {
    this.toasts.push({ text, kind });
    if (this.toasts.length > 6) {
      this.toasts.shift();
    }
  }
}
