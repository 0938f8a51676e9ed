import { describe, expect, it } from "vitest";

import {
  beginSend,
  canSend,
  completeSend,
  emptyTranscript,
  failSend,
} from "../src/transcript";

describe("transcript state", () => {
  it("blocks empty and whitespace-only input", () => {
    const state = emptyTranscript();
    expect(canSend(state, "")).toBe(false);
    expect(canSend(state, "   ")).toBe(false);
    expect(canSend(state, "salam")).toBe(true);
  });

  it("queues at most one in-flight request", () => {
    const state = beginSend(emptyTranscript(), "first");
    expect(state.pending).toBe(true);
    expect(canSend(state, "second")).toBe(false);
  });

  it("keeps messages in send order", () => {
    let state = beginSend(emptyTranscript(), "one");
    state = completeSend(state, { author: "bot", text: "reply one" });
    state = beginSend(state, "two");
    state = failSend(state, { author: "error", text: "boom", retryText: "two" });
    expect(state.messages.map((m) => m.text)).toEqual(["one", "reply one", "two", "boom"]);
    expect(state.pending).toBe(false);
  });
});
