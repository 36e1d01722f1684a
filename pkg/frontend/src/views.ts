// View models are pure projections of API responses. Nothing in this
// module counts, ranks, summarizes, or scores; it only rearranges fields
// the server already computed.

import type {
  LiveEvent,
  SessionDetailResponse,
  SessionListResponse,
  Snapshot,
  TaxonomyLabel,
  TaxonomyResponse,
} from './types.js';

// -- session list ------------------------------------------------------------

export interface SessionRow {
  sessionId: string;
  title: string;
  createdAt: number;
  stateBadge: string;
  segmentCount: number;
  latestSnapshotVersion: number | null;
}

export interface SessionListView {
  rows: SessionRow[];
  empty: boolean;
}

export function sessionListView(resp: SessionListResponse): SessionListView {
  // API order is authoritative (newest first); render as-is.
  const rows = resp.sessions.map((s) => ({
    sessionId: s.session_id,
    title: s.title,
    createdAt: s.created_at,
    stateBadge: s.state,
    segmentCount: s.segment_count,
    latestSnapshotVersion: s.latest_snapshot_version,
  }));
  return { rows, empty: rows.length === 0 };
}

// -- session detail ----------------------------------------------------------

export interface TagFilterOption {
  label: string;
  count: number;
  active: boolean;
}

export interface SentenceRow {
  sentenceId: string;
  text: string;
  labels: string[];
  polarity: string | null;
}

export interface KeywordBar {
  token: string;
  count: number;
}

export interface SessionDetailView {
  sessionId: string;
  title: string;
  state: string;
  summary: string | null;
  filters: TagFilterOption[];
  sentences: SentenceRow[];
  keywordChart: KeywordBar[];
  sentimentGauge: number | null;
  themes: { label: string; summary: string; sentenceIds: string[] }[];
}

export function sessionDetailView(
  resp: SessionDetailResponse,
  activeLabel: string | null = null,
): SessionDetailView {
  const filters = Object.entries(resp.tag_counts).map(([label, count]) => ({
    label,
    count,
    active: label === activeLabel,
  }));
  return {
    sessionId: resp.session_id,
    title: resp.title,
    state: resp.state,
    summary: resp.latest_snapshot?.summary ?? null,
    filters,
    sentences: resp.sentences.map((s) => ({
      sentenceId: s.sentence_id,
      text: s.text,
      labels: s.labels,
      polarity: s.polarity,
    })),
    keywordChart: resp.report?.keyword_stats ?? [],
    sentimentGauge: resp.report?.overall_sentiment.value ?? null,
    themes:
      resp.report?.groups.map((g) => ({
        label: g.label,
        summary: g.theme_summary,
        sentenceIds: g.sentence_ids,
      })) ?? [],
  };
}

// -- live view ---------------------------------------------------------------

export interface LiveViewState {
  sessionState: string;
  mode: string;
  timerMs: number;
  snapshot: Snapshot | null;
  lastSeq: number;
}

export function initialLiveView(): LiveViewState {
  return { sessionState: 'Locked', mode: 'Summary', timerMs: 0, snapshot: null, lastSeq: 0 };
}

/**
 * Apply one live event. Idempotent: replaying an already-applied seq is a
 * no-op, so reconnect overlap cannot double-apply anything.
 */
export function applyLiveEvent(state: LiveViewState, event: LiveEvent): LiveViewState {
  if (event.seq <= state.lastSeq) return state;
  const next: LiveViewState = { ...state, lastSeq: event.seq };
  switch (event.kind) {
    case 'state_changed':
      next.sessionState = event.payload['state'] as string;
      break;
    case 'timer_tick':
      next.timerMs = event.payload['elapsed_ms'] as number;
      break;
    case 'mode_changed':
      next.mode = event.payload['mode'] as string;
      break;
    case 'snapshot_ready': {
      const snap = event.payload as unknown as Snapshot;
      if (state.snapshot === null || snap.version > state.snapshot.version) {
        next.snapshot = snap;
      }
      break;
    }
    default:
      break; // unknown kinds are ignored, forward compatible
  }
  return next;
}

/** Which pane the live screen shows, mirroring the device display. */
export function visiblePane(state: LiveViewState): { kind: string; lines: string[] } {
  if (state.snapshot === null) return { kind: state.mode, lines: [] };
  if (state.mode === 'FollowUps') {
    return { kind: 'FollowUps', lines: state.snapshot.follow_up_questions };
  }
  return { kind: 'Summary', lines: [state.snapshot.summary, ...state.snapshot.key_points] };
}

export function formatTimer(timerMs: number): string {
  const total = Math.floor(timerMs / 1000);
  const mm = String(Math.floor(total / 60)).padStart(2, '0');
  const ss = String(total % 60).padStart(2, '0');
  return `${mm}:${ss}`;
}

// -- taxonomy editor ---------------------------------------------------------

export interface TaxonomyEditorState {
  version: number;
  labels: TaxonomyLabel[];
  errors: Record<number, string>;
  dirty: boolean;
  visible: boolean;
}

export function initTaxonomyEditor(resp: TaxonomyResponse, isAdmin: boolean): TaxonomyEditorState {
  return { version: resp.version, labels: [...resp.labels], errors: {}, dirty: false, visible: isAdmin };
}

function withValidation(state: TaxonomyEditorState): TaxonomyEditorState {
  const errors: Record<number, string> = {};
  const seen = new Map<string, number>();
  state.labels.forEach((label, i) => {
    if (!label.name.trim()) {
      errors[i] = 'name must be non-empty';
    } else if (seen.has(label.name)) {
      errors[i] = `duplicate of "${label.name}"`;
    } else {
      seen.set(label.name, i);
    }
  });
  return { ...state, errors };
}

export function addLabel(state: TaxonomyEditorState, name: string): TaxonomyEditorState {
  return withValidation({ ...state, labels: [...state.labels, { name }], dirty: true });
}

export function renameLabel(state: TaxonomyEditorState, index: number, name: string): TaxonomyEditorState {
  const labels = state.labels.map((l, i) => (i === index ? { ...l, name } : l));
  return withValidation({ ...state, labels, dirty: true });
}

export function removeLabel(state: TaxonomyEditorState, index: number): TaxonomyEditorState {
  return withValidation({ ...state, labels: state.labels.filter((_, i) => i !== index), dirty: true });
}

export function canSubmit(state: TaxonomyEditorState): boolean {
  return state.dirty && state.labels.length > 0 && Object.keys(state.errors).length === 0;
}
