import type { ApiError, ChatRequest, ChatResponse } from "./types";

export class ChatApiError extends Error {
  constructor(
    message: string,
    public readonly status: number,
    public readonly code: string,
  ) {
    super(message);
  }
}

export async function postChat(baseUrl: string, request: ChatRequest): Promise<ChatResponse> {
  const response = await fetch(`${baseUrl}/v1/chat`, {
    method: "POST",
    headers: { "Content-Type": "application/json" },
    body: JSON.stringify(request),
  });
  if (!response.ok) {
    let code = "http_error";
    let message = `chat API returned ${response.status}`;
    try {
      const body = (await response.json()) as ApiError;
      code = body.error.code;
      message = body.error.message;
    } catch {
      // non-JSON error body; keep the status message
    }
    throw new ChatApiError(message, response.status, code);
  }
  return (await response.json()) as ChatResponse;
}

export async function getHealth(baseUrl: string): Promise<boolean> {
  try {
    const response = await fetch(`${baseUrl}/v1/healthz`);
    return response.ok;
  } catch {
    return false;
  }
}
