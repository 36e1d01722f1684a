import { readFileSync } from 'node:fs';
import { join } from 'node:path';

import { describe, expect, it } from 'vitest';

import { parseSseStream } from '../src/sse.js';
import eventsFixture from './fixtures/live_events.json';

const raw = readFileSync(join(__dirname, 'fixtures', 'live_stream.sse'), 'utf-8');

describe('SSE parsing', () => {
  it('parses the recorded stream into the same events as the JSON fixture', () => {
    const parsed = parseSseStream(raw);
    expect(parsed.length).toBe(eventsFixture.length);
    parsed.forEach((event, i) => {
      const expected = eventsFixture[i]!;
      expect(event.seq).toBe(expected.seq);
      expect(event.kind).toBe(expected.event);
      expect(event.payload).toEqual(expected.data.payload);
    });
  });

  it('event ids are gapless from 1', () => {
    const seqs = parseSseStream(raw).map((e) => e.seq);
    expect(seqs).toEqual(seqs.map((_, i) => i + 1));
  });

  it('ignores a trailing incomplete frame', () => {
    const truncated = raw.slice(0, raw.lastIndexOf('id: '));
    const parsed = parseSseStream(truncated);
    expect(parsed.length).toBe(eventsFixture.length - 1);
  });
});
