// Typed client for the recommendation service. The UI holds no scoring logic:
// every number it shows comes from these endpoints.

export interface ConferenceHit {
  conference_id: string;
  name: string;
}

export interface TopicEntry {
  topic: string;
  label: string;
  weight: number;
}

export type Verdict = 'positive' | 'negative';

export interface Card {
  product_id: string;
  title: string;
  kind: 'book' | 'journal_year' | 'conference_series';
  year_min: number;
  year_max: number;
  link: string;
  score: number;
  topics: TopicEntry[];
  persons: string[];
  feedback: Verdict | null;
}

export interface Filters {
  kinds: string[]; // empty or all three = server default (everything)
  from_year: number | null;
  to_year: number | null;
  limit: number;
  person: string;
}

export const ALL_KINDS = ['book', 'journal_year', 'conference_series'] as const;

export type CompareMode = 'conference' | 'product' | 'intersection' | 'all';

export interface ComparisonNode {
  topic: string;
  label: string;
  conference_weight: number;
  product_weight: number;
  membership: 'conference_only' | 'product_only' | 'both';
}

export interface ComparisonEdge {
  src: string;
  dst: string;
}

export interface ComparisonGraph {
  conference_id: string;
  product_id: string;
  mode: CompareMode;
  min_weight: number;
  nodes: ComparisonNode[];
  edges: ComparisonEdge[];
}

export interface RecommendationsResponse {
  conference_id: string;
  query: {
    kinds: string[];
    from_year: number;
    to_year: number;
    limit: number;
    person: string | null;
  };
  cards: Card[];
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
  }
}

async function expectOk(resp: Response): Promise<Response> {
  if (resp.ok) return resp;
  let code = 'http_error';
  let message = `${resp.status} ${resp.statusText}`;
  try {
    const payload = await resp.json();
    if (payload?.error) {
      code = payload.error.code;
      message = payload.error.message;
    }
  } catch {
    // non-JSON error body; keep the status line
  }
  throw new ApiError(resp.status, code, message);
}

/** Query parameters for /recommendations and /export. Parameters the server
 * defaults are omitted so the request mirrors what the controls show. */
export function filterParams(conferenceId: string, filters: Filters): URLSearchParams {
  const params = new URLSearchParams({ conference_id: conferenceId });
  if (filters.kinds.length > 0 && filters.kinds.length < ALL_KINDS.length) {
    params.set('kinds', [...filters.kinds].sort().join(','));
  }
  if (filters.from_year !== null) params.set('from_year', String(filters.from_year));
  if (filters.to_year !== null) params.set('to_year', String(filters.to_year));
  params.set('limit', String(filters.limit));
  if (filters.person.trim()) params.set('person', filters.person.trim());
  return params;
}

export class ApiClient {
  constructor(readonly baseUrl: string = '') {}

  private url(path: string, params?: URLSearchParams): string {
    const query = params ? `?${params}` : '';
    return `${this.baseUrl}${path}${query}`;
  }

  async searchConferences(text: string, signal?: AbortSignal): Promise<ConferenceHit[]> {
    const params = new URLSearchParams({ q: text });
    const resp = await expectOk(await fetch(this.url('/conferences', params), { signal }));
    return (await resp.json()).conferences;
  }

  async conferenceTopics(conferenceId: string, signal?: AbortSignal): Promise<TopicEntry[]> {
    const resp = await expectOk(
      await fetch(this.url(`/conferences/${encodeURIComponent(conferenceId)}/topics`), { signal }),
    );
    return (await resp.json()).topics;
  }

  async recommendations(
    conferenceId: string,
    filters: Filters,
    signal?: AbortSignal,
  ): Promise<RecommendationsResponse> {
    const resp = await expectOk(
      await fetch(this.url('/recommendations', filterParams(conferenceId, filters)), { signal }),
    );
    return resp.json();
  }

  async compare(
    conferenceId: string,
    productId: string,
    mode: CompareMode,
    minWeight: number,
    signal?: AbortSignal,
  ): Promise<ComparisonGraph> {
    const params = new URLSearchParams({
      conference_id: conferenceId,
      product_id: productId,
      mode,
      min_weight: String(minWeight),
    });
    const resp = await expectOk(await fetch(this.url('/compare', params), { signal }));
    return resp.json();
  }

  async fetchExport(
    conferenceId: string,
    filters: Filters,
    format: 'csv' | 'json',
  ): Promise<Uint8Array> {
    const params = filterParams(conferenceId, filters);
    params.set('format', format);
    const resp = await expectOk(await fetch(this.url('/export', params)));
    return new Uint8Array(await resp.arrayBuffer());
  }

  async submitFeedback(conferenceId: string, productId: string, verdict: Verdict): Promise<void> {
    await expectOk(
      await fetch(this.url('/feedback'), {
        method: 'POST',
        headers: { 'Content-Type': 'application/json' },
        body: JSON.stringify({ conference_id: conferenceId, product_id: productId, verdict }),
      }),
    );
  }
}
