/**
 * Thin client for the three service endpoints. The fetch implementation is
 * injectable so unit tests can run without a network or a browser.
 */

import { API_BASE } from "./config.js";

export interface Card {
  id: string;
  name: string;
  genre: string;
  description: string;
  rank?: number;
}

export interface RecommendResponse {
  items: Card[];
  factual_fraction: number;
  intent: unknown;
  latency_ms: number;
}

export interface FeedbackEvent {
  session_id: string;
  request_text: string;
  item_id: string | null;
  verdict: "up" | "down";
}

export interface HealthResponse {
  status: string;
  catalog_items: number;
  backend: string;
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

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

async function postJson<T>(
  path: string,
  body: unknown,
  fetchImpl: FetchLike,
  base: string,
): Promise<T> {
  const response = await fetchImpl(`${base}${path}`, {
    method: "POST",
    headers: { "Content-Type": "application/json" },
    body: JSON.stringify(body),
  });
  if (!response.ok) {
    let detail = "";
    try {
      const payload = (await response.json()) as { error?: string };
      detail = payload.error ?? "";
    } catch {
      // non-JSON error body; the status alone will have to do
    }
    throw new ApiError(response.status, detail || `HTTP ${response.status}`);
  }
  return (await response.json()) as T;
}

export function requestRecommendations(
  text: string,
  k: number,
  sessionId: string,
  fetchImpl: FetchLike = fetch,
  base: string = API_BASE,
): Promise<RecommendResponse> {
  return postJson<RecommendResponse>(
    "/api/recommend",
    { request: text, k, session_id: sessionId },
    fetchImpl,
    base,
  );
}

export async function postFeedback(
  event: FeedbackEvent,
  fetchImpl: FetchLike = fetch,
  base: string = API_BASE,
): Promise<void> {
  await postJson<{ accepted: boolean }>("/api/feedback", event, fetchImpl, base);
}

export async function getHealth(
  fetchImpl: FetchLike = fetch,
  base: string = API_BASE,
): Promise<HealthResponse> {
  const response = await fetchImpl(`${base}/api/health`);
  if (!response.ok) {
    throw new ApiError(response.status, `HTTP ${response.status}`);
  }
  return (await response.json()) as HealthResponse;
}
