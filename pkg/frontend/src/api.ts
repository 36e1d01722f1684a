import type {
  ApiErrorBody,
  SessionDetailResponse,
  SessionListResponse,
  TaxonomyLabel,
  TaxonomyResponse,
} from './types.js';

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
    readonly details: Record<string, unknown> = {},
  ) {
    super(message);
    this.name = 'ApiError';
  }
}

export interface FetchLike {
  (url: string, init?: { method?: string; headers?: Record<string, string>; body?: string }): Promise<{
    status: number;
    json(): Promise<unknown>;
  }>;
}

export interface ClientOptions {
  baseUrl: string;
  readerKey?: string;
  adminKey?: string;
  fetchImpl?: FetchLike;
}

/** Thin typed wrapper over the /v1 API. No response reshaping happens here. */
export class ApiClient {
  private readonly fetchImpl: FetchLike;

  constructor(private readonly options: ClientOptions) {
    this.fetchImpl = options.fetchImpl ?? (globalThis.fetch as unknown as FetchLike);
  }

  private async request<T>(
    method: string,
    path: string,
    headers: Record<string, string>,
    body?: unknown,
  ): Promise<T> {
    const resp = await this.fetchImpl(this.options.baseUrl + path, {
      method,
      headers: body === undefined ? headers : { ...headers, 'Content-Type': 'application/json' },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const parsed = (await resp.json()) as T | ApiErrorBody;
    if (resp.status >= 400) {
      const err = (parsed as ApiErrorBody).error;
      throw new ApiError(resp.status, err?.code ?? 'internal', err?.message ?? 'request failed', err?.details);
    }
    return parsed as T;
  }

  private readerHeaders(): Record<string, string> {
    return this.options.readerKey ? { 'X-Reader-Key': this.options.readerKey } : {};
  }

  listSessions(state?: string): Promise<SessionListResponse> {
    const qs = state ? `?state=${encodeURIComponent(state)}` : '';
    return this.request('GET', `/v1/sessions${qs}`, this.readerHeaders());
  }

  sessionDetail(sessionId: string, label?: string): Promise<SessionDetailResponse> {
    const qs = label ? `?label=${encodeURIComponent(label)}` : '';
    return this.request('GET', `/v1/sessions/${sessionId}${qs}`, this.readerHeaders());
  }

  getTaxonomy(): Promise<TaxonomyResponse> {
    return this.request('GET', '/v1/taxonomy', this.readerHeaders());
  }

  putTaxonomy(labels: TaxonomyLabel[]): Promise<{ version: number }> {
    const headers: Record<string, string> = this.options.adminKey
      ? { 'X-Admin-Key': this.options.adminKey }
      : {};
    return this.request('PUT', '/v1/taxonomy', headers, { labels });
  }
}
