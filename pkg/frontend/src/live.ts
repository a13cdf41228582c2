// Live event feed: server-sent events with automatic fallback to polling.
// The fallback is visible to the user so they know the view may lag.

import type { ApiClient } from "./api.js";
import type { EventFilters, EventRecord } from "./types.js";

export interface EventSourceLike {
  onmessage: ((event: { data: string }) => void) | null;
  onerror: (() => void) | null;
  close(): void;
}

export type EventSourceFactory = (url: string) => EventSourceLike;

export type FeedMode = "stream" | "polling";

export interface FeedCallbacks {
  onEvent(event: EventRecord): void;
  onModeChange?(mode: FeedMode): void;
}

export class LiveFeed {
  mode: FeedMode = "stream";
  private lastSeq = 0;
  private source: EventSourceLike | null = null;
  private pollTimer: ReturnType<typeof setInterval> | null = null;

  constructor(
    private readonly api: ApiClient,
    private readonly callbacks: FeedCallbacks,
    private readonly makeEventSource: EventSourceFactory,
    private readonly pollIntervalMs = 1000,
    private readonly filters: EventFilters = {},
  ) {}

  start(fromSeq = 0): void {
    this.lastSeq = fromSeq;
    this.source = this.makeEventSource(this.api.eventStreamUrl(fromSeq));
    this.source.onmessage = (message) => {
      const event = JSON.parse(message.data) as EventRecord;
      this.lastSeq = Math.max(this.lastSeq, event.seq);
      this.callbacks.onEvent(event);
    };
    this.source.onerror = () => this.fallBackToPolling();
  }

  private fallBackToPolling(): void {
    if (this.mode === "polling") return;
    this.mode = "polling";
    this.source?.close();
    this.source = null;
    this.callbacks.onModeChange?.("polling");
    this.pollTimer = setInterval(() => void this.poll(), this.pollIntervalMs);
  }

  async poll(): Promise<void> {
    const events = await this.api.getEvents(this.lastSeq, this.filters);
    for (const event of events) {
      this.lastSeq = Math.max(this.lastSeq, event.seq);
      this.callbacks.onEvent(event);
    }
  }

  stop(): void {
    this.source?.close();
    this.source = null;
    if (this.pollTimer !== null) {
      clearInterval(this.pollTimer);
      this.pollTimer = null;
    }
  }
}
