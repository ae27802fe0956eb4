/** Typed fetch client for the draft assistant's /v1 API. */

import type {
  ApiErrorBody,
  CreateSessionBody,
  CreateSessionResponse,
  MetaPayload,
  RecommendationsPayload,
  StatePayload,
  StrategyName,
} from "./types.js";

/** A 4xx/5xx response carrying the service's {code, message, field?} body. */
export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
    readonly field?: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

/** fetch itself failed — the service is unreachable, nothing was applied. */
export class NetworkError extends Error {
  constructor(cause: unknown) {
    super(cause instanceof Error ? cause.message : String(cause));
    this.name = "NetworkError";
  }
}

export interface RecommendationQuery {
  k?: number;
  strategy?: StrategyName;
  tau?: number;
}

export class DraftApi {
  constructor(readonly baseUrl: string = "") {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    let resp: Response;
    try {
      resp = await fetch(this.baseUrl + path, init);
    } catch (err) {
      throw new NetworkError(err);
    }
    if (!resp.ok) {
      let body: ApiErrorBody | null = null;
      try {
        body = (await resp.json()) as ApiErrorBody;
      } catch {
        body = null;
      }
      throw new ApiError(
        resp.status,
        body?.code ?? "http_error",
        body?.message ?? `HTTP ${resp.status}`,
        body?.field,
      );
    }
    return (await resp.json()) as T;
  }

  private post<T>(path: string, body: unknown): Promise<T> {
    return this.request<T>(path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  meta(): Promise<MetaPayload> {
    return this.request<MetaPayload>("/v1/meta");
  }

  createSession(body: CreateSessionBody): Promise<CreateSessionResponse> {
    return this.post<CreateSessionResponse>("/v1/sessions", body);
  }

  state(sessionId: string): Promise<StatePayload> {
    return this.request<StatePayload>(
      `/v1/sessions/${encodeURIComponent(sessionId)}/state`,
    );
  }

  pick(sessionId: string, turn: number, champion: string): Promise<StatePayload> {
    return this.post<StatePayload>(
      `/v1/sessions/${encodeURIComponent(sessionId)}/picks`,
      { turn, champion },
    );
  }

  recommendations(
    sessionId: string,
    query: RecommendationQuery = {},
  ): Promise<RecommendationsPayload> {
    const params = new URLSearchParams();
    if (query.k !== undefined) params.set("k", String(query.k));
    if (query.strategy !== undefined) params.set("strategy", query.strategy);
    if (query.tau !== undefined) params.set("tau", String(query.tau));
    const qs = params.toString();
    return this.request<RecommendationsPayload>(
      `/v1/sessions/${encodeURIComponent(sessionId)}/recommendations` +
        (qs ? `?${qs}` : ""),
    );
  }
}
