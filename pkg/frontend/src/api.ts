// Thin typed client for the simulator service.  All numeric payloads stay as
// the service's round-trip decimal strings; this module does no math.

import type {
  ActivationPayload,
  BacktrackTracePayload,
  BoundaryPayload,
  ChecksumConfigPayload,
  DatasetPayload,
  DatasetRequest,
  DefenseHistogramsResult,
  EpochLine,
  FlipReportPayload,
  PredictPayload,
  RandomSearchResult,
  ServiceError,
  SignatureResult,
  TrainRequest,
  TrainSummary,
} from './types';

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly code: string,
    message: string,
  ) {
    super(message);
  }

  get isConcurrentMutation(): boolean {
    return this.status === 409;
  }
}

async function fail(res: Response): Promise<never> {
  let body: ServiceError = { code: 'error', message: res.statusText };
  try {
    body = (await res.json()) as ServiceError;
  } catch {
    // non-JSON error body; keep the status text
  }
  throw new ApiError(res.status, body.code, body.message);
}

export class ApiClient {
  private sessionId: string | null = null;

  constructor(
    private readonly baseUrl: string = '',
    private readonly fetchImpl: FetchLike = (u, i) => fetch(u, i),
  ) {}

  get session(): string | null {
    return this.sessionId;
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method };
    if (body !== undefined) {
      init.headers = { 'Content-Type': 'application/json' };
      init.body = JSON.stringify(body);
    }
    const res = await this.fetchImpl(this.baseUrl + path, init);
    if (!res.ok) await fail(res);
    return (await res.json()) as T;
  }

  private sessionPath(suffix: string): string {
    if (!this.sessionId) throw new Error('no session; call createSession first');
    return `/sessions/${this.sessionId}${suffix}`;
  }

  async createSession(): Promise<string> {
    const { id } = await this.request<{ id: string }>('POST', '/sessions');
    this.sessionId = id;
    return id;
  }

  generateDataset(req: DatasetRequest): Promise<DatasetPayload> {
    return this.request('POST', this.sessionPath('/dataset'), req);
  }

  getDataset(): Promise<DatasetPayload> {
    return this.request('GET', this.sessionPath('/dataset'));
  }

  // Streams NDJSON epoch lines; resolves with the final summary line.
  async train(
    req: TrainRequest,
    onEpoch?: (line: EpochLine) => void,
  ): Promise<TrainSummary> {
    const res = await this.fetchImpl(this.baseUrl + this.sessionPath('/train'), {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify(req),
    });
    if (!res.ok) await fail(res);
    let summary: TrainSummary | null = null;
    for await (const line of ndjsonLines(res)) {
      const parsed = JSON.parse(line) as EpochLine | TrainSummary;
      if ('done' in parsed) {
        summary = parsed;
      } else if (onEpoch) {
        onEpoch(parsed);
      }
    }
    if (!summary) throw new Error('train stream ended without a summary line');
    return summary;
  }

  storeModel(): Promise<{ stored: boolean }> {
    return this.request('POST', this.sessionPath('/model/store'));
  }

  recallModel(): Promise<{ recalled: boolean }> {
    return this.request('POST', this.sessionPath('/model/recall'));
  }

  setActivation(payload: ActivationPayload): Promise<{ kind: string }> {
    return this.request('POST', this.sessionPath('/activation'), payload);
  }

  signatureAttack(cfg: ChecksumConfigPayload): Promise<SignatureResult> {
    return this.request('POST', this.sessionPath('/attack/signature'), cfg);
  }

  backtrack(pointIndex: number): Promise<BacktrackTracePayload> {
    return this.request('POST', this.sessionPath('/attack/backtrack'), {
      point_index: pointIndex,
    });
  }

  backtrackAt(x: string, y: string): Promise<BacktrackTracePayload> {
    return this.request('POST', this.sessionPath('/attack/backtrack'), { x, y });
  }

  randomSearch(budget?: number, seed?: number): Promise<RandomSearchResult> {
    return this.request('POST', this.sessionPath('/attack/random_search'), {
      ...(budget !== undefined ? { budget } : {}),
      ...(seed !== undefined ? { seed } : {}),
    });
  }

  defenseHistograms(deltaR?: number): Promise<DefenseHistogramsResult> {
    return this.request(
      'POST',
      this.sessionPath('/defense/histograms'),
      deltaR !== undefined ? { delta_r: deltaR } : {},
    );
  }

  robustify(radius?: string): Promise<FlipReportPayload> {
    return this.request(
      'POST',
      this.sessionPath('/defense/robustify'),
      radius !== undefined ? { R: radius } : {},
    );
  }

  boundary(grid: number): Promise<BoundaryPayload> {
    return this.request('GET', this.sessionPath(`/boundary?grid=${grid}`));
  }

  predict(x: string, y: string): Promise<PredictPayload> {
    return this.request(
      'GET',
      this.sessionPath(`/predict?x=${encodeURIComponent(x)}&y=${encodeURIComponent(y)}`),
    );
  }
}

// Yields complete lines from a streaming (or buffered) NDJSON response.
export async function* ndjsonLines(res: Response): AsyncGenerator<string> {
  if (res.body && typeof res.body.getReader === 'function') {
    const reader = res.body.getReader();
    const decoder = new TextDecoder();
    let buffer = '';
    for (;;) {
      const { done, value } = await reader.read();
      if (done) break;
      buffer += decoder.decode(value, { stream: true });
      let nl: number;
      while ((nl = buffer.indexOf('\n')) >= 0) {
        const line = buffer.slice(0, nl).trim();
        buffer = buffer.slice(nl + 1);
        if (line) yield line;
      }
    }
    const rest = buffer.trim();
    if (rest) yield rest;
    return;
  }
  // test doubles and old runtimes deliver the body in one piece
  const text = await res.text();
  for (const line of text.split('\n')) {
    const trimmed = line.trim();
    if (trimmed) yield trimmed;
  }
}
