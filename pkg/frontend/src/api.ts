// Typed client for the annotation service. All state transitions go through
// these endpoints; the UI never mutates anything locally.

import type { ItemView, JudgmentResponse, StatsView, TaxonomyView, Verdict } from './types.js'

export class ApiError extends Error {
  constructor(
    public code: string,
    message: string,
    public status: number,
  ) {
    super(message)
  }
}

export class VersionConflictError extends ApiError {
  constructor(message: string) {
    super('VersionConflict', message, 409)
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>

export class ApiClient {
  constructor(
    private annotator: string,
    private baseUrl = '',
    private token: string | null = null,
    private fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private headers(): Record<string, string> {
    const headers: Record<string, string> = { 'Content-Type': 'application/json' }
    if (this.token) headers['X-Annotation-Token'] = this.token
    return headers
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const response = await this.fetchFn(this.baseUrl + path, {
      method,
      headers: this.headers(),
      body: body === undefined ? undefined : JSON.stringify(body),
    })
    if (!response.ok) {
      let code = `HTTP${response.status}`
      let message = response.statusText
      try {
        const payload = await response.json()
        code = payload.code ?? code
        message = payload.message ?? message
      } catch {
        // non-JSON error body; keep the status text
      }
      if (code === 'VersionConflict') throw new VersionConflictError(message)
      throw new ApiError(code, message, response.status)
    }
    return (await response.json()) as T
  }

  async config(): Promise<{ service: string; n_items: number; balance_available: boolean }> {
    return this.request('GET', '/api/config')
  }

  async taxonomy(): Promise<TaxonomyView> {
    return this.request('GET', '/api/taxonomy')
  }

  async nextItem(): Promise<ItemView | null> {
    const payload = await this.request<{ item: ItemView | null }>(
      'GET',
      `/api/items/next?annotator=${encodeURIComponent(this.annotator)}`,
    )
    return payload.item
  }

  async submitJudgment(
    itemId: string,
    verdict: Verdict,
    notes: string,
    version: number,
  ): Promise<JudgmentResponse> {
    return this.request(
      'POST',
      `/api/items/${encodeURIComponent(itemId)}/judgment?annotator=${encodeURIComponent(this.annotator)}`,
      { verdict, notes, version },
    )
  }

  async submitEdit(
    itemId: string,
    newOutput: string,
    newSpan: string,
    version: number,
  ): Promise<JudgmentResponse> {
    return this.request(
      'POST',
      `/api/items/${encodeURIComponent(itemId)}/edit?annotator=${encodeURIComponent(this.annotator)}`,
      { new_output: newOutput, new_span: newSpan, version },
    )
  }

  async stats(): Promise<StatsView> {
    return this.request('GET', '/api/stats')
  }
}
