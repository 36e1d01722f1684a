import { afterEach, beforeEach, describe, expect, it, vi } from 'vitest';

import { UiQueue } from '../src/queue.js';
import { LiveStreamClient } from '../src/sse.js';
import {
  applyLiveEvent,
  formatTimer,
  initialLiveView,
  visiblePane,
  type LiveViewState,
} from '../src/views.js';
import type { LiveEvent } from '../src/types.js';
import eventsFixture from './fixtures/live_events.json';

interface FixtureFrame {
  seq: number;
  event: string;
  data: { session_id: string; kind: string; payload: Record<string, unknown> };
}

const frames = eventsFixture as FixtureFrame[];
const events: LiveEvent[] = frames.map((f) => ({
  seq: f.seq,
  kind: f.event,
  session_id: f.data.session_id,
  payload: f.data.payload,
}));

function reduceAll(input: LiveEvent[]): LiveViewState {
  return input.reduce(applyLiveEvent, initialLiveView());
}

describe('live view reducer', () => {
  it('replays the recorded session to its final state', () => {
    const state = reduceAll(events);
    expect(state.sessionState).toBe('Ended');
    expect(state.mode).toBe('FollowUps');
    expect(state.snapshot!.version).toBe(2);
    expect(state.lastSeq).toBe(events.length);
  });

  it('mode_changed switches the visible pane', () => {
    let state = initialLiveView();
    for (const event of events) {
      state = applyLiveEvent(state, event);
      if (event.kind === 'mode_changed') {
        expect(visiblePane(state).kind).toBe(event.payload['mode']);
      }
    }
  });

  it('a later snapshot replaces an earlier one, never the reverse', () => {
    const versions: number[] = [];
    let state = initialLiveView();
    for (const event of events) {
      state = applyLiveEvent(state, event);
      if (state.snapshot) versions.push(state.snapshot.version);
    }
    expect([...versions].sort((a, b) => a - b)).toEqual(versions);
    expect(state.snapshot!.version).toBe(2);
  });

  it('applying the same event twice leaves the state unchanged', () => {
    let state = initialLiveView();
    for (const event of events) {
      state = applyLiveEvent(state, event);
      expect(applyLiveEvent(state, event)).toBe(state);
    }
    const once = reduceAll(events);
    const twice = reduceAll([...events, ...events]);
    expect(twice).toEqual(once);
  });

  it('formats the timer like the device screen', () => {
    expect(formatTimer(0)).toBe('00:00');
    expect(formatTimer(27_000)).toBe('00:27');
    expect(formatTimer(61_500)).toBe('01:01');
  });
});

describe('live pane latency', () => {
  beforeEach(() => vi.useFakeTimers());
  afterEach(() => vi.useRealTimers());

  it('updates the pane within 1s of snapshot_ready in a simulated stream', async () => {
    const queue = new UiQueue();
    let state = initialLiveView();
    const updateTimes = new Map<number, number>();

    const start = Date.now();
    for (const event of events) {
      // each event arrives 50 simulated ms after the previous one
      vi.advanceTimersByTime(50);
      const receivedAt = Date.now();
      void queue.push(() => {
        state = applyLiveEvent(state, event);
        if (event.kind === 'snapshot_ready') {
          const version = state.snapshot!.version;
          updateTimes.set(version, Date.now() - receivedAt);
        }
      });
      await queue.drain();
    }

    expect(updateTimes.size).toBe(2);
    for (const latency of updateTimes.values()) {
      expect(latency).toBeLessThan(1000);
    }
    expect(Date.now() - start).toBe(events.length * 50);
  });
});

describe('reconnect behaviour', () => {
  function flakySource(dropAfter: number) {
    let call = 0;
    return (lastSeq: number): AsyncIterable<LiveEvent> => {
      call += 1;
      const failThisCall = call === 1;
      return (async function* () {
        let delivered = 0;
        for (const event of events) {
          if (event.seq <= lastSeq) continue; // server resumes after lastSeq
          yield event;
          delivered += 1;
          if (failThisCall && delivered === dropAfter) {
            throw new Error('connection reset');
          }
        }
      })();
    };
  }

  it('resumes after a drop with no duplicate or missing events', async () => {
    const seen: number[] = [];
    const statuses: string[] = [];
    const client = new LiveStreamClient({
      source: flakySource(12),
      onEvent: (e) => seen.push(e.seq),
      onStatus: (s) => statuses.push(s),
    });
    await client.run();
    expect(seen).toEqual(events.map((e) => e.seq));
    expect(new Set(seen).size).toBe(seen.length);
    expect(statuses).toEqual(['connected', 'reconnecting', 'closed']);
  });

  it('dedupes even when the server replays an overlap', async () => {
    // a sloppy server that resends a few already-delivered events on resume
    let call = 0;
    const source = (lastSeq: number): AsyncIterable<LiveEvent> => {
      call += 1;
      const overlapFrom = Math.max(0, lastSeq - 3);
      const failThisCall = call === 1;
      return (async function* () {
        let delivered = 0;
        for (const event of events) {
          if (event.seq <= overlapFrom) continue;
          yield event;
          delivered += 1;
          if (failThisCall && delivered === 10) throw new Error('reset');
        }
      })();
    };
    const seen: number[] = [];
    const client = new LiveStreamClient({ source, onEvent: (e) => seen.push(e.seq) });
    await client.run();
    expect(seen).toEqual(events.map((e) => e.seq));
  });

  it('sentence-bearing state is identical to an uninterrupted run', async () => {
    let interrupted = initialLiveView();
    const client = new LiveStreamClient({
      source: flakySource(7),
      onEvent: (e) => {
        interrupted = applyLiveEvent(interrupted, e);
      },
    });
    await client.run();
    expect(interrupted).toEqual(reduceAll(events));
  });

  it('gives up after exhausting reconnect attempts', async () => {
    const source = (): AsyncIterable<LiveEvent> =>
      (async function* () {
        throw new Error('down');
      })();
    const client = new LiveStreamClient({ source, onEvent: () => {}, maxReconnects: 2 });
    await expect(client.run()).rejects.toThrow('down');
  });
});
