/**
 * Typed client for the retrieval service's JSON endpoints.
 *
 * Enforces the single in-flight query rule: submitting a new query aborts the
 * previous one, whose promise rejects with QueryCancelled.
 */

export interface QueryRequest {
  text: string;
  model: string;
  box?: [number, number, number, number] | null;
  selection_mode?: string;
  enlargement?: number;
  top_k?: number;
}

export interface QueryEcho {
  text: string;
  model: string;
  box: [number, number, number, number] | null;
  selection_mode: string;
  enlargement: number;
  top_k: number;
}

export interface Hit {
  image_id: string;
  score: number;
  rank: number;
  thumbnail_uri: string | null;
  matched_cell_ids?: string[];
}

export interface QueryResponse {
  query: QueryEcho;
  selected_cell_ids: string[];
  total_images: number;
  results: Hit[];
  timing_ms: number;
}

export interface GridCellJson {
  id: string;
  x1: number;
  y1: number;
  x2: number;
  y2: number;
}

export interface GridsResponse {
  grids: Record<string, GridCellJson[]>;
  loaded_region_sets: Record<string, GridCellJson[]>;
}

export interface HealthResponse {
  status: string;
  stores: string[];
  images: number;
}

export class ServiceError extends Error {
  constructor(
    message: string,
    readonly status: number,
    readonly field?: string,
  ) {
    super(message);
    this.name = "ServiceError";
  }
}

export class QueryCancelled extends Error {
  constructor() {
    super("query superseded by a newer one");
    this.name = "QueryCancelled";
  }
}

type FetchLike = typeof fetch;

async function readJson(response: Response): Promise<unknown> {
  if (response.ok) {
    return response.json();
  }
  let message = `${response.status} ${response.statusText}`;
  let field: string | undefined;
  try {
    const body = (await response.json()) as {
      error?: { message?: string; field?: string };
    };
    if (body.error?.message) {
      message = body.error.message;
      field = body.error.field;
    }
  } catch {
    // keep the status-line message
  }
  throw new ServiceError(message, response.status, field);
}

export class ApiClient {
  private inflight: AbortController | null = null;

  constructor(
    public baseUrl: string,
    private fetchImpl: FetchLike = fetch,
  ) {}

  private url(path: string): string {
    return this.baseUrl.replace(/\/+$/, "") + path;
  }

  private async get<T>(path: string): Promise<T> {
    const response = await this.fetchImpl(this.url(path));
    return (await readJson(response)) as T;
  }

  grids(): Promise<GridsResponse> {
    return this.get("/v1/grids");
  }

  models(): Promise<{ models: string[] }> {
    return this.get("/v1/models");
  }

  report(id: string): Promise<Record<string, unknown>> {
    return this.get(`/v1/reports/${encodeURIComponent(id)}`);
  }

  health(): Promise<HealthResponse> {
    return this.get("/v1/health");
  }

  /** POST the query, cancelling any query still in flight. */
  async query(request: QueryRequest): Promise<QueryResponse> {
    this.inflight?.abort();
    const controller = new AbortController();
    this.inflight = controller;
    try {
      const response = await this.fetchImpl(this.url("/v1/query"), {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify(request),
        signal: controller.signal,
      });
      return (await readJson(response)) as QueryResponse;
    } catch (err) {
      if (controller.signal.aborted) {
        throw new QueryCancelled();
      }
      throw err;
    } finally {
      if (this.inflight === controller) {
        this.inflight = null;
      }
    }
  }
}
