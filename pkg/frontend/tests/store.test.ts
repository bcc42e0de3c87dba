import { describe, expect, it } from "vitest";

import type { StateFrame } from "../src/protocol.js";
import { SessionView } from "../src/store.js";

function frame(round: number, overrides: Partial<StateFrame> = {}): StateFrame {
  return {
    type: "state",
    round,
    t_ms: round * 50,
    pendulums: [
      { id: 0, x: 0.0, theta: 0.01 * round, u: 0, active: true },
      { id: 1, x: 0.1, theta: -0.01, u: 0, active: false },
    ],
    nodes: [],
    links: [],
    mode: 3,
    dwell_remaining: 0,
    ...overrides,
  };
}

describe("SessionView", () => {
  it("keeps latest and appends history", () => {
    const view = new SessionView();
    view.setConnection("open");
    view.applyFrame(frame(0));
    view.applyFrame(frame(1));
    expect(view.latest?.round).toBe(1);
    expect(view.history.map((h) => h.round)).toEqual([0, 1]);
    expect(view.history[1].thetas[0]).toBeCloseTo(0.01, 12);
  });

  it("bounds history to the rolling window", () => {
    const view = new SessionView(1000); // 1 s window = 20 rounds at 50 ms
    view.setConnection("open");
    for (let r = 0; r < 100; r++) {
      view.applyFrame(frame(r));
    }
    expect(view.history.length).toBeLessThanOrEqual(21);
    expect(view.history[0].t_ms).toBeGreaterThanOrEqual(99 * 50 - 1000);
    expect(view.history[view.history.length - 1].round).toBe(99);
  });

  it("marks gaps when rounds skip", () => {
    const view = new SessionView();
    view.applyFrame(frame(0));
    view.applyFrame(frame(1));
    view.applyFrame(frame(5)); // dropped frames
    expect(view.gapsDetected).toBe(1);
    expect(view.history[2].gapBefore).toBe(true);
  });

  it("gates mode requests on dwell, connection and in-flight requests", () => {
    const view = new SessionView();
    expect(view.canRequestMode()).toBe(false); // no state yet
    view.setConnection("open");
    view.applyFrame(frame(0, { dwell_remaining: 3 }));
    expect(view.canRequestMode()).toBe(false); // dwell window open
    view.applyFrame(frame(1, { dwell_remaining: 0 }));
    expect(view.canRequestMode()).toBe(true);
    view.markRequested(4);
    expect(view.canRequestMode()).toBe(false); // await ack
    view.applyFrame({ type: "mode_changed", mode: 4, round: 6 });
    expect(view.canRequestMode()).toBe(true);
    view.setConnection("closed");
    expect(view.canRequestMode()).toBe(false);
  });

  it("clears a pending request on rejection and records the toast", () => {
    const view = new SessionView();
    view.setConnection("open");
    view.applyFrame(frame(0));
    view.markRequested(2);
    view.applyFrame({ type: "rejected", earliest_round: 130 });
    expect(view.pendingRequest).toBeNull();
    expect(view.toasts.at(-1)?.text).toContain("130");
    expect(view.toasts.at(-1)?.kind).toBe("warn");
  });

  it("keeps the last frame when the connection drops", () => {
    const view = new SessionView();
    view.setConnection("open");
    view.applyFrame(frame(7));
    view.setConnection("closed");
    expect(view.latest?.round).toBe(7); // frozen frame still rendered
    expect(view.history).toHaveLength(1);
  });
});
