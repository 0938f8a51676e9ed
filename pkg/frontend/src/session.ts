const STORAGE_KEY = "darjabot.session_id";

function freshId(): string {
  if (typeof crypto !== "undefined" && "randomUUID" in crypto) {
    return crypto.randomUUID();
  }
  return `s-${Date.now().toString(36)}-${Math.random().toString(36).slice(2, 10)}`;
}

/** Session id survives page reloads via localStorage. */
export function getSessionId(storage: Storage): string {
  const existing = storage.getItem(STORAGE_KEY);
  if (existing) {
    return existing;
  }
  const id = freshId();
  storage.setItem(STORAGE_KEY, id);
  return id;
}
