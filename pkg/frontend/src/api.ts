/** Typed client for the compass HTTP API. */

export interface GenerationParams {
  beam_size: number;
  num_candidates: number;
  max_length: number;
}

export const DEFAULT_PARAMS: GenerationParams = {
  beam_size: 4,
  num_candidates: 3,
  max_length: 256,
};

export interface Candidate {
  text: string;
  score: number;
}

export interface FlowPoint {
  /** sentence index */
  i: number;
  /** valence */
  v: number;
  /** arousal */
  a: number;
}

export interface Diagnostic {
  kind: string;
  detail: string;
}

export interface AssistRequest {
  text: string;
  approach?: string;
  beam_size?: number;
  num_candidates?: number;
  max_length?: number;
  include_flow?: boolean;
  include_likeness?: boolean;
}

export interface AssistResponse {
  sentences: string[];
  /** indices into the completed story where sentences are predicted missing */
  gap_positions: number[];
  candidates_per_gap: Candidate[][];
  best_completion: string[];
  story_likeness: number | null;
  flow_before: FlowPoint[] | null;
  flow_after: FlowPoint[] | null;
  diagnostics: Diagnostic[];
  timing_ms: number;
}

export interface ServiceConfig {
  approach: string;
  markers: { missing: string; completion: string };
  defaults: Partial<GenerationParams>;
  version: string;
}

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

async function postJson<T>(url: string, body: unknown, signal?: AbortSignal): Promise<T> {
  const resp = await fetch(url, {
    method: "POST",
    headers: { "Content-Type": "application/json" },
    body: JSON.stringify(body),
    signal,
  });
  if (!resp.ok) {
    let detail = resp.statusText;
    try {
      const data = (await resp.json()) as { detail?: unknown };
      if (data.detail !== undefined) detail = JSON.stringify(data.detail);
    } catch {
      /* non-JSON error body; keep statusText */
    }
    throw new ApiError(resp.status, detail);
  }
  return (await resp.json()) as T;
}

export class CompassClient {
  constructor(private readonly baseUrl: string = "") {}

  assist(request: AssistRequest, signal?: AbortSignal): Promise<AssistResponse> {
    return postJson(`${this.baseUrl}/assist`, request, signal);
  }

  async config(): Promise<ServiceConfig> {
    const resp = await fetch(`${this.baseUrl}/config`);
    if (!resp.ok) throw new ApiError(resp.status, resp.statusText);
    return (await resp.json()) as ServiceConfig;
  }
}

/**
 * Serializes assist calls: a new submission aborts the pending one, so at
 * most one request is in flight and stale responses never reach the UI.
 */
export class AssistRunner {
  private controller: AbortController | null = null;

  constructor(private readonly client: CompassClient) {}

  async run(request: AssistRequest): Promise<AssistResponse | null> {
    this.controller?.abort();
    const controller = new AbortController();
    this.controller = controller;
    try {
      return await this.client.assist(request, controller.signal);
    } catch (err) {
      if (err instanceof DOMException && err.name === "AbortError") return null;
      throw err;
    } finally {
      if (this.controller === controller) this.controller = null;
    }
  }
}
