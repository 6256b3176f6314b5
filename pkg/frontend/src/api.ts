// Thin typed client over the logtriad HTTP service. The UI renders API
// responses only; no detection logic lives on this side.

import type {
  CorporaDoc,
  DecompositionDoc,
  EntryDoc,
  NodeSummaryDoc,
  ReportDoc,
  SequenceInfo,
  SequenceLabel,
  TrainStatusDoc,
  TreeDoc,
} from './types.js';

export const DEFAULT_BASE_URL = 'http://127.0.0.1:8574';

export class ApiError extends Error {
  constructor(
    public status: number,
    public code: string,
    message: string,
    public detail: Record<string, unknown> = {},
  ) {
    super(message);
  }
}

/** Base URL precedence: `?api=` query parameter, then localStorage, then default. */
export function resolveBaseUrl(search: string, storage: Pick<Storage, 'getItem'> | null): string {
  const fromQuery = new URLSearchParams(search).get('api');
  if (fromQuery) return fromQuery.replace(/\/+$/, '');
  const stored = storage?.getItem('logtriad.api');
  if (stored) return stored.replace(/\/+$/, '');
  return DEFAULT_BASE_URL;
}

export interface DetectOptions {
  mode?: string;
  k?: number;
  budget?: number;
}

type FetchFn = typeof fetch;

export class ApiClient {
  constructor(
    public baseUrl: string,
    private fetchFn: FetchFn = globalThis.fetch.bind(globalThis),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const response = await this.fetchFn(`${this.baseUrl}${path}`, {
      method,
      headers: body === undefined ? {} : { 'Content-Type': 'application/json' },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const text = await response.text();
    const payload = text ? JSON.parse(text) : {};
    if (!response.ok) {
      throw new ApiError(
        response.status,
        payload.code ?? 'HttpError',
        payload.message ?? `${method} ${path} failed with ${response.status}`,
        payload.detail ?? {},
      );
    }
    return payload as T;
  }

  health(): Promise<{ status: string }> {
    return this.request('GET', '/health');
  }

  getTemplates(): Promise<{ templates: Record<string, string> }> {
    return this.request('GET', '/templates');
  }

  extractHierarchy(): Promise<TreeDoc> {
    return this.request('POST', '/hierarchy/extract', {});
  }

  getHierarchy(): Promise<TreeDoc> {
    return this.request('GET', '/hierarchy');
  }

  listCorpora(): Promise<CorporaDoc> {
    return this.request('GET', '/corpora');
  }

  listSequences(corpus: string): Promise<{ corpus: string; sequences: SequenceInfo[] }> {
    return this.request('GET', `/sequences?corpus=${encodeURIComponent(corpus)}`);
  }

  startTraining(corpus: string): Promise<{ job_id: string; total: number }> {
    return this.request('POST', '/train', { corpus });
  }

  trainStatus(): Promise<TrainStatusDoc> {
    return this.request('GET', '/train/status');
  }

  getDecomposition(sequenceId: string): Promise<DecompositionDoc> {
    return this.request('GET', `/sequences/${encodeURIComponent(sequenceId)}/decomposition`);
  }

  detect(sequenceId: string, options: DetectOptions = {}): Promise<ReportDoc> {
    return this.request('POST', `/detect/${encodeURIComponent(sequenceId)}`, options);
  }

  getReport(sequenceId: string): Promise<ReportDoc> {
    return this.request('GET', `/detect/${encodeURIComponent(sequenceId)}/report`);
  }

  nodeSummary(nodeId: string): Promise<NodeSummaryDoc> {
    return this.request('GET', `/kb/nodes/${encodeURI(nodeId)}/summary`);
  }

  listEntries(parent: string, level: string): Promise<{ entries: EntryDoc[] }> {
    return this.request(
      'GET',
      `/kb/entries?parent=${encodeURIComponent(parent)}&level=${encodeURIComponent(level)}`,
    );
  }

  override(key: string, label: SequenceLabel, note: string): Promise<EntryDoc> {
    return this.request('POST', `/kb/entries/${encodeURIComponent(key)}/override`, { label, note });
  }
}
