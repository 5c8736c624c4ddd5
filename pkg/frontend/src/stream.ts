// SSE subscription with auto-reconnect and idempotent resume via last_seq.

import type { StreamType } from "./types.js";

const TYPES: StreamType[] = ["event", "event_update", "job", "selection", "playback"];

export type StreamHandler = (type: StreamType, data: any) => void;

interface EventSourceLike {
  addEventListener(type: string, handler: (event: { data: string }) => void): void;
  close(): void;
  onerror: ((this: any, ev: any) => any) | null;
}

type EventSourceFactory = (url: string) => EventSourceLike;

export class EventStreamClient {
  lastSeq = 0;
  private source: EventSourceLike | null = null;
  private retryTimer: ReturnType<typeof setTimeout> | null = null;
  private closed = false;

  constructor(
    private handler: StreamHandler,
    private url = "/stream",
    private factory: EventSourceFactory = (u) => new EventSource(u) as EventSourceLike,
    private retryMs = 1000,
  ) {}

  connect(): void {
    if (this.closed) return;
    const source = this.factory(`${this.url}?last_seq=${this.lastSeq}`);
    this.source = source;
    for (const type of TYPES) {
      source.addEventListener(type, (event) => {
        const data = JSON.parse(event.data);
        if (typeof data.seq === "number" && data.seq > this.lastSeq) {
          this.lastSeq = data.seq;
        }
        this.handler(type, data);
      });
    }
    source.onerror = () => {
      source.close();
      if (this.closed || this.retryTimer) return;
      this.retryTimer = setTimeout(() => {
        this.retryTimer = null;
        this.connect();
      }, this.retryMs);
    };
  }

  close(): void {
    this.closed = true;
    if (this.retryTimer) clearTimeout(this.retryTimer);
    this.source?.close();
  }
}
