/**
 * Typed client for the worldsmith /v1 API.
 *
 * The fetch function is injectable so tests can run against a stub server.
 * Mutations are funneled through a single promise chain: the server
 * serializes edits per session, and queuing here keeps in-flight requests
 * from arriving out of order.
 */

export type CellStateName = "empty" | "blocked" | "filled";

export interface PlacedObjectState {
  name: string;
  contains: string[];
}

export interface CellState {
  row: number;
  col: number;
  state: CellStateName;
  location?: { name: string; category: string; is_filler: boolean };
  characters?: string[];
  objects?: PlacedObjectState[];
}

export interface SessionState {
  id: string;
  width: number;
  height: number;
  seed: number;
  suggestions_enabled: boolean;
  cells: CellState[];
  exits: [number, number][][];
  generated: Record<string, string[]>;
  seq: number;
  created_at: string;
  updated_at: string;
}

export interface Suggestion {
  name: string;
  score: number;
  rank: number;
  kind: string;
}

export interface SearchResult {
  name: string;
  generated: boolean;
  match: "prefix" | "substring";
}

export interface ExportIssue {
  severity: string;
  ref: string;
  message: string;
}

export interface GeneratedElement {
  id: string;
  name: string;
  generated: true;
  [field: string]: unknown;
}

export class ApiError extends Error {
  constructor(
    public status: number,
    public code: string,
    message: string,
    public issues: ExportIssue[] = [],
  ) {
    super(message);
  }
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export type ElementKind = "location" | "character" | "object";

export interface PlaceRequest {
  row: number;
  col: number;
  kind: string;
  name: string;
  connect_to?: [number, number][];
  host?: string;
}

async function unwrap<T>(response: Response): Promise<T> {
  if (response.ok) {
    return (await response.json()) as T;
  }
  let code = "http_error";
  let message = `request failed with status ${response.status}`;
  let issues: ExportIssue[] = [];
  try {
    const body = await response.json();
    const detail = body.detail ?? body;
    if (typeof detail === "object" && detail !== null) {
      code = detail.code ?? code;
      message = detail.message ?? message;
      issues = detail.issues ?? [];
    } else if (typeof detail === "string") {
      message = detail;
    }
  } catch {
    // non-JSON error body: keep the generic message
  }
  throw new ApiError(response.status, code, message, issues);
}

export class WorldsmithApi {
  private mutationQueue: Promise<unknown> = Promise.resolve();

  constructor(
    private baseUrl: string = "",
    private fetchFn: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private get(path: string): Promise<Response> {
    return this.fetchFn(`${this.baseUrl}${path}`);
  }

  private send(path: string, method: string, body?: unknown): Promise<Response> {
    return this.fetchFn(`${this.baseUrl}${path}`, {
      method,
      headers: body === undefined ? undefined : { "Content-Type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
  }

  /** Queue a mutation behind every earlier one to preserve server ordering. */
  private enqueue<T>(run: () => Promise<T>): Promise<T> {
    const next = this.mutationQueue.then(run, run);
    this.mutationQueue = next.catch(() => undefined);
    return next;
  }

  createSession(
    width = 3,
    height = 3,
    seed = 0,
    suggestionsEnabled = true,
  ): Promise<SessionState> {
    return this.enqueue(() =>
      this.send("/v1/sessions", "POST", {
        width,
        height,
        seed,
        suggestions_enabled: suggestionsEnabled,
      }).then((r) => unwrap<SessionState>(r)),
    );
  }

  getSession(sessionId: string): Promise<SessionState> {
    return this.get(`/v1/sessions/${sessionId}`).then((r) => unwrap<SessionState>(r));
  }

  suggest(
    sessionId: string,
    row: number,
    col: number,
    kind: string,
    k = 10,
  ): Promise<Suggestion[]> {
    const params = new URLSearchParams({
      row: String(row),
      col: String(col),
      kind,
      k: String(k),
    });
    return this.get(`/v1/sessions/${sessionId}/suggest?${params}`).then((r) =>
      unwrap<{ suggestions: Suggestion[] }>(r).then((body) => body.suggestions),
    );
  }

  search(
    query: string,
    kind: ElementKind,
    sessionId?: string,
    limit = 20,
  ): Promise<SearchResult[]> {
    const params = new URLSearchParams({ q: query, kind, limit: String(limit) });
    if (sessionId) params.set("session_id", sessionId);
    return this.get(`/v1/search?${params}`).then((r) =>
      unwrap<{ results: SearchResult[] }>(r).then((body) => body.results),
    );
  }

  place(sessionId: string, request: PlaceRequest): Promise<SessionState> {
    return this.enqueue(() =>
      this.send(`/v1/sessions/${sessionId}/place`, "POST", request).then((r) =>
        unwrap<SessionState>(r),
      ),
    );
  }

  removeCell(
    sessionId: string,
    row: number,
    col: number,
    kind?: string,
    name?: string,
  ): Promise<SessionState> {
    const params = new URLSearchParams({ row: String(row), col: String(col) });
    if (kind) params.set("kind", kind);
    if (name) params.set("name", name);
    return this.enqueue(() =>
      this.send(`/v1/sessions/${sessionId}/cell?${params}`, "DELETE").then((r) =>
        unwrap<SessionState>(r),
      ),
    );
  }

  generateElement(
    sessionId: string,
    name: string,
    kind: ElementKind,
    seed = 0,
  ): Promise<GeneratedElement> {
    return this.enqueue(() =>
      this.send("/v1/generate-element", "POST", {
        session_id: sessionId,
        name,
        kind,
        seed,
      }).then((r) => unwrap<{ element: GeneratedElement }>(r).then((body) => body.element)),
    );
  }

  exportWorld(sessionId: string): Promise<Record<string, unknown>> {
    return this.enqueue(() =>
      this.send(`/v1/sessions/${sessionId}/export`, "POST").then((r) =>
        unwrap<Record<string, unknown>>(r),
      ),
    );
  }
}
