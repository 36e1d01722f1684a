// Shapes of /v1 API responses. The dashboard never derives analytics
// itself; every number on screen comes from one of these fields.

export interface SessionListEntry {
  session_id: string;
  created_at: number;
  title: string;
  state: string;
  segment_count: number;
  latest_snapshot_version: number | null;
}

export interface SessionListResponse {
  sessions: SessionListEntry[];
}

export interface Snapshot {
  session_id: string;
  version: number;
  coverage_seq: number;
  summary: string;
  key_points: string[];
  follow_up_questions: string[];
  generated_at: number;
  provider_name: string;
  taxonomy_version: number;
  template_version: string;
}

export interface SentenceView {
  sentence_id: string;
  text: string;
  labels: string[];
  polarity: string | null;
}

export interface ThemeGroup {
  label: string;
  sentence_ids: string[];
  theme_summary: string;
}

export interface Report {
  session_id: string;
  taxonomy_version: number;
  groups: ThemeGroup[];
  keyword_stats: { token: string; count: number }[];
  overall_sentiment: { value: number; basis: string };
}

export interface SessionDetailResponse {
  session_id: string;
  created_at: number;
  title: string;
  state: string;
  elapsed_ms: number | null;
  segment_count: number;
  latest_snapshot: Snapshot | null;
  tag_counts: Record<string, number>;
  sentences: SentenceView[];
  report: Report | null;
}

export interface TaxonomyLabel {
  name: string;
  description?: string;
  lexicon?: string[];
}

export interface TaxonomyResponse {
  version: number;
  labels: TaxonomyLabel[];
}

export interface ApiErrorBody {
  error: { code: string; message: string; details: Record<string, unknown> };
}

export interface LiveEvent {
  seq: number;
  kind: string;
  session_id: string;
  payload: Record<string, unknown>;
}
