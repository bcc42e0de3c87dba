// WebSocket client: parse incoming frames into the store, reconnect with
// backoff, refuse to send while disconnected.

import { Backoff } from "./backoff.js";
import { parseFrame } from "./protocol.js";
import type { SessionView } from "./store.js";

export interface SocketLike {
  onopen: ((ev: unknown) => void) | null;
  onclose: ((ev: unknown) => void) | null;
  onmessage: ((ev: { data: string }) => void) | null;
  send(data: string): void;
  close(): void;
}

export type SocketFactory = (url: string) => SocketLike;

export class SocketClient {
  private ws: SocketLike | null = null;
  private closed = false;
  private timer: ReturnType<typeof setTimeout> | null = null;

  constructor(
    readonly url: string,
    readonly store: SessionView,
    readonly factory: SocketFactory,
    readonly backoff: Backoff = new Backoff(),
  ) {}

  connect(): void {
    this.store.setConnection("connecting");
    const ws = this.factory(this.url);
    this.ws = ws;
    ws.onopen = () => {
      this.backoff.reset();
      this.store.setConnection("open");
    };
    ws.onmessage = (ev) => {
      const frame = parseFrame(ev.data);
      if (frame !== null) {
        this.store.applyFrame(frame);
      }
    };
    ws.onclose = () => {
      this.store.setConnection("closed");
      this.ws = null;
      if (!this.closed) {
        this.timer = setTimeout(() => this.connect(), this.backoff.nextDelay());
      }
    };
  }

  /** Send a serialized command; true when actually handed to the socket. */
  send(payload: string): boolean {
    if (this.ws === null || this.store.connection !== "open") {
      return false;
    }
    this.ws.send(payload);
    return true;
  }

  close(): void {
    this.closed = true;
    if (this.timer !== null) {
      clearTimeout(this.timer);
    }
    this.ws?.close();
  }
}
