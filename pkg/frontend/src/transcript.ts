import type { UiMessage } from "./types";

/**
 * Transcript state with a per-session request queue of depth one: while a
 * request is pending nothing else can be sent, so the rendered order always
 * equals the send order even on slow responses.
 */
export interface TranscriptState {
  messages: UiMessage[];
  pending: boolean;
}

export function emptyTranscript(): TranscriptState {
  return { messages: [], pending: false };
}

export function canSend(state: TranscriptState, text: string): boolean {
  return !state.pending && text.trim().length > 0;
}

export function beginSend(state: TranscriptState, text: string): TranscriptState {
  return {
    messages: [...state.messages, { author: "user", text: text.trim() }],
    pending: true,
  };
}

export function completeSend(state: TranscriptState, bot: UiMessage): TranscriptState {
  return { messages: [...state.messages, bot], pending: false };
}

export function failSend(state: TranscriptState, error: UiMessage): TranscriptState {
  return { messages: [...state.messages, error], pending: false };
}
