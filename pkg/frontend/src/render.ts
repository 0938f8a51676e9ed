import { textDirection } from "./direction";
import type { UiMessage } from "./types";

export interface RetryHandler {
  (text: string): void;
}

function badgeFor(message: UiMessage): HTMLElement {
  const badge = document.createElement("span");
  const route = message.route === "rag" ? "RAG" : "NLU";
  badge.className = `badge badge-${message.route}`;
  const confidence =
    message.confidence !== undefined ? ` ${(message.confidence * 100).toFixed(0)}%` : "";
  badge.textContent = `${route}${confidence}`;
  if (message.intent) {
    badge.title = `intent: ${message.intent}`;
  }
  return badge;
}

function sourcesFor(message: UiMessage): HTMLElement | null {
  if (!message.sources || message.sources.length === 0) {
    return null;
  }
  const details = document.createElement("details");
  details.className = "sources";
  const summary = document.createElement("summary");
  summary.textContent = `sources (${message.sources.length})`;
  details.appendChild(summary);
  const list = document.createElement("ul");
  for (const chunkId of message.sources) {
    const item = document.createElement("li");
    item.textContent = chunkId;
    list.appendChild(item);
  }
  details.appendChild(list);
  return details;
}

function latencyFor(message: UiMessage): HTMLElement | null {
  if (!message.latencyMs || Object.keys(message.latencyMs).length === 0) {
    return null;
  }
  const total = Object.values(message.latencyMs).reduce((a, b) => a + b, 0);
  const span = document.createElement("span");
  span.className = "latency";
  span.textContent = `${total.toFixed(1)} ms`;
  span.title = Object.entries(message.latencyMs)
    .map(([stage, ms]) => `${stage}: ${ms.toFixed(1)} ms`)
    .join("\n");
  return span;
}

export function renderMessage(message: UiMessage, onRetry?: RetryHandler): HTMLElement {
  const bubble = document.createElement("div");
  bubble.className = `bubble bubble-${message.author}`;

  const text = document.createElement("p");
  text.className = "bubble-text";
  text.textContent = message.text;
  text.setAttribute("dir", textDirection(message.text));

  if (message.author === "bot") {
    const meta = document.createElement("div");
    meta.className = "bubble-meta";
    meta.appendChild(badgeFor(message));
    const latency = latencyFor(message);
    if (latency) {
      meta.appendChild(latency);
    }
    bubble.appendChild(meta);
    bubble.appendChild(text);
    const sources = sourcesFor(message);
    if (sources) {
      bubble.appendChild(sources);
    }
  } else if (message.author === "error") {
    bubble.appendChild(text);
    if (message.retryText && onRetry) {
      const retry = document.createElement("button");
      retry.className = "retry";
      retry.textContent = "retry";
      retry.addEventListener("click", () => onRetry(message.retryText!));
      bubble.appendChild(retry);
    }
  } else {
    bubble.appendChild(text);
  }
  return bubble;
}

export function renderTranscript(
  container: HTMLElement,
  messages: UiMessage[],
  onRetry?: RetryHandler,
): void {
  container.replaceChildren();
  for (const message of messages) {
    container.appendChild(renderMessage(message, onRetry));
  }
  container.scrollTop = container.scrollHeight;
}
