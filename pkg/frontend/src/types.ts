export interface ChatRequest {
  session_id: string;
  text: string;
}

export type RouteKind = "nlu" | "rag";

export interface ChatResponse {
  reply: string;
  route: RouteKind;
  intent: string | null;
  confidence: number;
  sources: string[];
  latency_ms: Record<string, number>;
}

export interface ApiError {
  error: { code: string; message: string };
}

export interface UiMessage {
  author: "user" | "bot" | "error";
  text: string;
  route?: RouteKind;
  intent?: string | null;
  confidence?: number;
  sources?: string[];
  latencyMs?: Record<string, number>;
  /** original user text, kept on error bubbles so retry can resend it */
  retryText?: string;
}
