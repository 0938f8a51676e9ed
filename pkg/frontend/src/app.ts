import { ChatApiError, getHealth, postChat } from "./api";
import { renderTranscript } from "./render";
import { getSessionId } from "./session";
import {
  TranscriptState,
  beginSend,
  canSend,
  completeSend,
  emptyTranscript,
  failSend,
} from "./transcript";
import type { UiMessage } from "./types";

export interface AppElements {
  transcript: HTMLElement;
  input: HTMLInputElement;
  send: HTMLButtonElement;
  status: HTMLElement;
}

export interface ChatApp {
  state(): TranscriptState;
  send(text: string): Promise<void>;
  sessionId: string;
}

/** Wire the panel: input gating, one in-flight request, render on change. */
export function createChatApp(
  elements: AppElements,
  baseUrl: string,
  storage: Storage,
): ChatApp {
  let state = emptyTranscript();
  const sessionId = getSessionId(storage);

  const update = (next: TranscriptState) => {
    state = next;
    renderTranscript(elements.transcript, state.messages, (text) => void send(text));
    syncControls();
  };

  const syncControls = () => {
    elements.send.disabled = !canSend(state, elements.input.value);
    elements.input.disabled = state.pending;
  };

  const send = async (raw: string): Promise<void> => {
    const text = raw.trim();
    if (!canSend(state, text)) {
      return;
    }
    update(beginSend(state, text));
    try {
      const response = await postChat(baseUrl, { session_id: sessionId, text });
      const bot: UiMessage = {
        author: "bot",
        text: response.reply,
        route: response.route,
        intent: response.intent,
        confidence: response.confidence,
        sources: response.sources,
        latencyMs: response.latency_ms,
      };
      update(completeSend(state, bot));
    } catch (error) {
      const bubble: UiMessage =
        error instanceof ChatApiError
          ? { author: "error", text: `request rejected: ${error.message}` }
          : { author: "error", text: "network error, the engine is unreachable", retryText: text };
      update(failSend(state, bubble));
    }
  };

  elements.send.addEventListener("click", () => {
    const text = elements.input.value;
    elements.input.value = "";
    void send(text);
  });
  elements.input.addEventListener("keydown", (event) => {
    if (event.key === "Enter" && canSend(state, elements.input.value)) {
      const text = elements.input.value;
      elements.input.value = "";
      void send(text);
    }
  });
  elements.input.addEventListener("input", syncControls);

  void getHealth(baseUrl).then((ok) => {
    elements.status.textContent = ok ? "engine: online" : "engine: offline";
    elements.status.className = ok ? "status status-ok" : "status status-down";
  });

  syncControls();
  return { state: () => state, send, sessionId };
}

function main(): void {
  const elements: AppElements = {
    transcript: document.getElementById("transcript") as HTMLElement,
    input: document.getElementById("chat-input") as HTMLInputElement,
    send: document.getElementById("chat-send") as HTMLButtonElement,
    status: document.getElementById("status") as HTMLElement,
  };
  if (!elements.transcript) {
    return; // not running inside the panel page (e.g. under test import)
  }
  const baseUrl = (window as { DARJABOT_API?: string }).DARJABOT_API ?? "http://127.0.0.1:8321";
  createChatApp(elements, baseUrl, window.localStorage);
}

if (typeof document !== "undefined" && document.readyState !== "loading") {
  main();
} else if (typeof document !== "undefined") {
  document.addEventListener("DOMContentLoaded", main);
}
