// Typed client for the annotation service. Field names mirror the service
// payloads exactly; all matching logic stays on the server side.

export interface CandidateView {
  iri: string;
  label: string;
  gloss: string;
  kind: string;
  parent_label: string;
}

export interface HitView {
  gid: number;
  preferred: string;
  wsr: number;
  gloss: string;
}

export interface SessionView {
  done: boolean;
  index: number;
  total: number;
  candidate: CandidateView | null;
  hits: HitView[];
}

export type Decision =
  | { action: 'accept'; gid: number; override?: boolean }
  | { action: 'new'; gloss: string }
  | { action: 'skip' };

export interface SheetViolation {
  code: string;
  severity: string;
  row: number;
  message: string;
}

export interface FinalizeResult {
  mapping: Record<string, number>;
}

export class ServiceError extends Error {
  constructor(
    readonly status: number,
    message: string,
    readonly violations: SheetViolation[] = [],
  ) {
    super(message);
    this.name = 'ServiceError';
  }
}

/** The service is unreachable (as opposed to answering with an error). */
export class ConnectionError extends Error {
  constructor(cause: unknown) {
    super(`annotation service unreachable: ${String(cause)}`);
    this.name = 'ConnectionError';
  }
}

async function parseError(response: Response): Promise<ServiceError> {
  let message = `${response.status} ${response.statusText}`;
  let violations: SheetViolation[] = [];
  try {
    const body = await response.json();
    if (typeof body.error === 'string') message = body.error;
    if (Array.isArray(body.violations)) violations = body.violations;
  } catch {
    // non-JSON error body; keep the status line
  }
  return new ServiceError(response.status, message, violations);
}

/** What the app needs from a client; AnnotationApi is the HTTP implementation. */
export interface AnnotationClient {
  session(): Promise<SessionView>;
  decide(decision: Decision): Promise<SessionView>;
  sheet(): Promise<string>;
  finalize(): Promise<FinalizeResult>;
  search(lemma: string, lang?: string): Promise<HitView[]>;
}

export class AnnotationApi implements AnnotationClient {
  constructor(private readonly base: string = '') {}

  private async request(path: string, init?: RequestInit): Promise<Response> {
    let response: Response;
    try {
      response = await fetch(this.base + path, init);
    } catch (cause) {
      throw new ConnectionError(cause);
    }
    if (!response.ok) throw await parseError(response);
    return response;
  }

  async session(): Promise<SessionView> {
    const response = await this.request('/session');
    return response.json();
  }

  /** Post one decision; the service acknowledges with the advanced view. */
  async decide(decision: Decision): Promise<SessionView> {
    const response = await this.request('/decision', {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify(decision),
    });
    return response.json();
  }

  /** The draft sheet as CSV, byte-faithful to what the service would write. */
  async sheet(): Promise<string> {
    const response = await this.request('/sheet');
    return response.text();
  }

  async finalize(): Promise<FinalizeResult> {
    const response = await this.request('/finalize', { method: 'POST' });
    return response.json();
  }

  async search(lemma: string, lang?: string): Promise<HitView[]> {
    const params = new URLSearchParams({ lemma });
    if (lang) params.set('lang', lang);
    const response = await this.request(`/core/search?${params}`);
    const body = await response.json();
    return body.hits;
  }
}
