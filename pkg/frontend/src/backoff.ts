// Reconnect pacing: exponential with a ceiling, reset on a healthy connection.

export class Backoff {
  private attempt = 0;

  constructor(
    readonly baseMs: number = 500,
    readonly factor: number = 2,
    readonly maxMs: number = 10_000,
  ) {}

  nextDelay(): number {
    const delay = Math.min(this.baseMs * this.factor ** this.attempt, this.maxMs);
    this.attempt += 1;
    return delay;
  }

  reset(): void {
    this.attempt = 0;
  }

  get attempts(): number {
    return this.attempt;
  }
}
