// Browser entry point: wires the API client, the live stream, and the
// pure view models into plain DOM rendering. All logic lives in the
// imported modules; this file only draws.

import { ApiClient, ApiError } from './api.js';
import { UiQueue } from './queue.js';
import { LiveStreamClient, parseSseStream } from './sse.js';
import type { LiveEvent } from './types.js';
import {
  applyLiveEvent,
  formatTimer,
  initialLiveView,
  sessionDetailView,
  sessionListView,
  visiblePane,
} from './views.js';

function esc(text: string): string {
  const div = document.createElement('div');
  div.textContent = text;
  return div.innerHTML;
}

async function* sseIterable(url: string, headers: Record<string, string>): AsyncIterable<LiveEvent> {
  const resp = await fetch(url, { headers });
  if (!resp.ok || resp.body === null) throw new Error(`stream failed: ${resp.status}`);
  const reader = resp.body.getReader();
  const decoder = new TextDecoder();
  let buffer = '';
  for (;;) {
    const { done, value } = await reader.read();
    if (done) break;
    buffer += decoder.decode(value, { stream: true });
    const cut = buffer.lastIndexOf('\n\n');
    if (cut < 0) continue;
    const complete = buffer.slice(0, cut + 2);
    buffer = buffer.slice(cut + 2);
    yield* parseSseStream(complete);
  }
}

export function startApp(root: HTMLElement, baseUrl: string, readerKey: string): void {
  const client = new ApiClient({ baseUrl, readerKey });
  const queue = new UiQueue();

  async function showList(): Promise<void> {
    try {
      const view = sessionListView(await client.listSessions());
      if (view.empty) {
        root.innerHTML = '<p class="empty">No sessions recorded yet.</p>';
        return;
      }
      root.innerHTML = `<ul class="sessions">${view.rows
        .map(
          (r) =>
            `<li data-id="${esc(r.sessionId)}"><span class="badge">${esc(r.stateBadge)}</span> ` +
            `${esc(r.title || r.sessionId)} - ${r.segmentCount} segments</li>`,
        )
        .join('')}</ul>`;
      for (const li of root.querySelectorAll<HTMLElement>('li[data-id]')) {
        li.addEventListener('click', () => void showDetail(li.dataset['id']!));
      }
    } catch (err) {
      if (err instanceof ApiError && err.status === 401) {
        root.innerHTML = '<p class="error">Reader credential required.</p>';
      } else {
        root.innerHTML = `<p class="error">Could not load sessions. <button>Retry</button></p>`;
        root.querySelector('button')?.addEventListener('click', () => void showList());
      }
    }
  }

  async function showDetail(sessionId: string, label: string | null = null): Promise<void> {
    const detail = await client.sessionDetail(sessionId, label ?? undefined);
    const view = sessionDetailView(detail, label);
    root.innerHTML = `
      <h2>${esc(view.title || view.sessionId)} <span class="badge">${esc(view.state)}</span></h2>
      <p class="filters">${view.filters
        .map(
          (f) =>
            `<button data-label="${esc(f.label)}" class="${f.active ? 'active' : ''}">` +
            `${esc(f.label)} (${f.count})</button>`,
        )
        .join(' ')}</p>
      <ul class="sentences">${view.sentences
        .map((s) => `<li>${esc(s.text)} <small>${s.labels.map(esc).join(', ')}</small></li>`)
        .join('')}</ul>
      ${view.sentimentGauge === null ? '' : `<p>Sentiment: ${view.sentimentGauge.toFixed(2)}</p>`}
      <ol class="keywords">${view.keywordChart
        .map((k) => `<li>${esc(k.token)}: ${k.count}</li>`)
        .join('')}</ol>`;
    for (const button of root.querySelectorAll<HTMLElement>('button[data-label]')) {
      const next = button.dataset['label'] === label ? null : button.dataset['label']!;
      button.addEventListener('click', () => void showDetail(sessionId, next));
    }
    if (detail.state === 'Recording') watchLive(sessionId);
  }

  function watchLive(sessionId: string): void {
    const pane = document.createElement('div');
    pane.className = 'live';
    root.appendChild(pane);
    let state = initialLiveView();
    const stream = new LiveStreamClient({
      source: (lastSeq) =>
        sseIterable(`${baseUrl}/v1/sessions/${sessionId}/live?last_seq=${lastSeq}`, {
          'X-Reader-Key': readerKey,
        }),
      onEvent: (event) =>
        void queue.push(() => {
          state = applyLiveEvent(state, event);
          const shown = visiblePane(state);
          pane.innerHTML =
            `<p>${esc(state.sessionState)} - ${esc(state.mode)} - ${formatTimer(state.timerMs)}</p>` +
            `<ul>${shown.lines.map((l) => `<li>${esc(l)}</li>`).join('')}</ul>`;
        }),
      onStatus: (status) => pane.setAttribute('data-stream', status),
    });
    void stream.run();
  }

  void showList();
}
