import type {
  DigestDoc,
  ErrorBody,
  GraphViewDoc,
  RepairDoc,
  RunDoc,
  SourceLocationDoc,
} from './types.js';

export class ApiError extends Error {
  constructor(public status: number, public body: ErrorBody) {
    super(body.message || `HTTP ${status}`);
  }
}

async function request<T>(method: string, url: string, body?: unknown): Promise<T> {
  const response = await fetch(url, {
    method,
    headers: body === undefined ? {} : { 'Content-Type': 'application/json' },
    body: body === undefined ? undefined : JSON.stringify(body),
  });
  if (response.status === 204) return undefined as T;
  const text = await response.text();
  const parsed = text ? JSON.parse(text) : {};
  if (!response.ok) {
    throw new ApiError(response.status, parsed as ErrorBody);
  }
  return parsed as T;
}

/** Typed client for the service; the UI never computes graph structure
 * itself, it only renders what these endpoints return. */
export class ApiClient {
  constructor(private base = '/api') {}

  createSession(): Promise<{ id: string }> {
    return request('POST', `${this.base}/sessions`);
  }

  putSpec(sid: string, spec: string, cfg: string): Promise<void> {
    return request('PUT', `${this.base}/sessions/${sid}/spec`, { spec, cfg });
  }

  getSpec(sid: string): Promise<{ spec: string; cfg: string }> {
    return request('GET', `${this.base}/sessions/${sid}/spec`);
  }

  getLlmSettings(sid: string): Promise<Record<string, unknown>> {
    return request('GET', `${this.base}/sessions/${sid}/llm-settings`);
  }

  putLlmSettings(sid: string, settings: Record<string, unknown>): Promise<unknown> {
    return request('PUT', `${this.base}/sessions/${sid}/llm-settings`, settings);
  }

  startCheck(sid: string, options?: Record<string, unknown>): Promise<{ run_id: number }> {
    return request('POST', `${this.base}/sessions/${sid}/check`,
      options ? { options } : {});
  }

  getRun(sid: string, rid: number): Promise<RunDoc> {
    return request('GET', `${this.base}/sessions/${sid}/runs/${rid}`);
  }

  cancelRun(sid: string, rid: number): Promise<unknown> {
    return request('POST', `${this.base}/sessions/${sid}/runs/${rid}/cancel`);
  }

  getGraphView(sid: string, rid: number, tree?: number, depth?: number): Promise<GraphViewDoc> {
    const params = new URLSearchParams();
    if (tree !== undefined) params.set('tree', String(tree));
    if (depth !== undefined) params.set('depth', String(depth));
    const query = params.toString();
    return request('GET',
      `${this.base}/sessions/${sid}/runs/${rid}/graph${query ? '?' + query : ''}`);
  }

  postFold(sid: string, rid: number, node: string, folded: boolean): Promise<GraphViewDoc> {
    return request('POST', `${this.base}/sessions/${sid}/runs/${rid}/graph/folds`,
      { node, folded });
  }

  getSummary(sid: string, rid: number): Promise<DigestDoc['summary']> {
    return request('GET', `${this.base}/sessions/${sid}/runs/${rid}/summary`);
  }

  startDigest(sid: string, selection?: [number, number]): Promise<{ digest_id: number }> {
    return request('POST', `${this.base}/sessions/${sid}/digest`,
      selection ? { selection } : {});
  }

  getDigest(sid: string, n: number): Promise<DigestDoc> {
    return request('GET', `${this.base}/sessions/${sid}/digest/${n}`);
  }

  startRepair(sid: string, mode: 'single' | 'multi', maxPasses?: number): Promise<{ repair_id: number }> {
    const body: Record<string, unknown> = { mode };
    if (maxPasses !== undefined) body.max_passes = maxPasses;
    return request('POST', `${this.base}/sessions/${sid}/repair`, body);
  }

  getRepair(sid: string, n: number): Promise<RepairDoc> {
    return request('GET', `${this.base}/sessions/${sid}/repair/${n}`);
  }

  acceptRepair(sid: string, n: number): Promise<void> {
    return request('POST', `${this.base}/sessions/${sid}/repair/${n}/accept`);
  }

  cancelRepair(sid: string, n: number): Promise<unknown> {
    return request('POST', `${this.base}/sessions/${sid}/repair/${n}/cancel`);
  }

  sourceLocation(sid: string, action: string): Promise<SourceLocationDoc> {
    return request('GET',
      `${this.base}/sessions/${sid}/source/location?action=${encodeURIComponent(action)}`);
  }
}
