import type { LiveEvent } from './types.js';

interface RawFrame {
  id?: number;
  event?: string;
  data?: string;
}

/** Parse a complete text/event-stream body into live events. */
export function parseSseStream(text: string): LiveEvent[] {
  const events: LiveEvent[] = [];
  let frame: RawFrame = {};
  for (const line of text.split('\n')) {
    if (line.startsWith('id: ')) {
      frame.id = Number(line.slice(4));
    } else if (line.startsWith('event: ')) {
      frame.event = line.slice(7);
    } else if (line.startsWith('data: ')) {
      frame.data = line.slice(6);
    } else if (line === '' && frame.data !== undefined) {
      const data = JSON.parse(frame.data) as { session_id: string; kind: string; payload: Record<string, unknown> };
      events.push({
        seq: frame.id ?? 0,
        kind: frame.event ?? data.kind,
        session_id: data.session_id,
        payload: data.payload,
      });
      frame = {};
    }
  }
  return events;
}

export type StreamSource = (lastSeq: number) => AsyncIterable<LiveEvent>;

export interface StreamClientOptions {
  /** Opens a stream delivering events with seq > lastSeq. */
  source: StreamSource;
  onEvent: (event: LiveEvent) => void;
  onStatus?: (status: 'connected' | 'reconnecting' | 'closed') => void;
  maxReconnects?: number;
}

/**
 * Consumes a live stream with resume-by-sequence reconnects. Events are
 * deduplicated by seq, so a server that replays after resume (or an
 * overlapping reconnect) never reaches the handler twice.
 */
export class LiveStreamClient {
  private lastSeq = 0;
  private stopped = false;

  constructor(private readonly options: StreamClientOptions) {}

  get resumeFrom(): number {
    return this.lastSeq;
  }

  stop(): void {
    this.stopped = true;
  }

  async run(): Promise<void> {
    const maxReconnects = this.options.maxReconnects ?? 5;
    let attempts = 0;
    while (!this.stopped) {
      try {
        this.options.onStatus?.(attempts === 0 ? 'connected' : 'reconnecting');
        for await (const event of this.options.source(this.lastSeq)) {
          if (this.stopped) break;
          if (event.seq <= this.lastSeq) continue; // replayed duplicate
          this.lastSeq = event.seq;
          this.options.onEvent(event);
        }
        break; // stream ended cleanly
      } catch (err) {
        attempts += 1;
        if (attempts > maxReconnects) throw err;
      }
    }
    this.options.onStatus?.('closed');
  }
}
