// Thin typed client over the session service. All state lives server-side;
// every call returns the authoritative snapshot.

import type { EditPayload, SessionSnapshot, TableInfo } from './types.js';

export class ApiError extends Error {
  constructor(
    public status: number,
    public detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
  }
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private baseUrl: string = '',
    private fetchImpl: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method, headers: { 'Content-Type': 'application/json' } };
    if (body !== undefined) {
      init.body = JSON.stringify(body);
    }
    const response = await this.fetchImpl(this.baseUrl + path, init);
    if (!response.ok) {
      let detail = response.statusText;
      try {
        const data = (await response.json()) as { detail?: string };
        if (data.detail) detail = data.detail;
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ApiError(response.status, detail);
    }
    return (await response.json()) as T;
  }

  listTables(): Promise<TableInfo[]> {
    return this.request('GET', '/tables');
  }

  async createSession(
    caseText: string,
    table: string,
    shots: number,
    ablation: boolean,
  ): Promise<string> {
    const body = { case_text: caseText, table, shots, ablation };
    const created = await this.request<{ session_id: string }>('POST', '/sessions', body);
    return created.session_id;
  }

  getSession(id: string): Promise<SessionSnapshot> {
    return this.request('GET', `/sessions/${id}`);
  }

  decompose(id: string): Promise<SessionSnapshot> {
    return this.request('POST', `/sessions/${id}/decompose`);
  }

  attribute(id: string): Promise<SessionSnapshot> {
    return this.request('POST', `/sessions/${id}/attribute`);
  }

  resolve(id: string): Promise<SessionSnapshot> {
    return this.request('POST', `/sessions/${id}/resolve`);
  }

  reopen(id: string): Promise<SessionSnapshot> {
    return this.request('POST', `/sessions/${id}/reopen`);
  }

  saveEdits(id: string, edits: EditPayload, actor = 'expert'): Promise<SessionSnapshot> {
    return this.request('PUT', `/sessions/${id}/attributes`, { edits, actor });
  }
}
