"""Confidence-threshold routing, dialogue sessions and response templates.

Routine intents answer from static templates; anything flagged as a
knowledge intent, or predicted below the confidence threshold, falls back
to the retrieval pipeline. Keeping knowledge intents in configuration
means new offers land in documents, not in ever-growing intent sets.
"""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from .classify import Prediction
from .errors import ConfigError, DataError
from .normalize import Script

DEFAULT_TAU = 0.7
DEFAULT_SESSION_TTL_S = 1800.0


class RoutePath(Enum):
    DETERMINISTIC = "nlu"
    KNOWLEDGE = "rag"


@dataclass(frozen=True)
class RouteDecision:
    path: RoutePath
    intent_id: int | None
    confidence: float


@dataclass(frozen=True)
class BotReply:
    text: str
    route: RouteDecision
    sources: tuple[str, ...]
    stage_ms: dict[str, float]


@dataclass(frozen=True)
class Turn:
    user_text: str
    reply_text: str
    route: RoutePath
    timestamp: float


def route(
    prediction: Prediction,
    tau: float = DEFAULT_TAU,
    knowledge_intent_ids: frozenset[int] = frozenset(),
) -> RouteDecision:
    """Knowledge intents always go to retrieval; otherwise the template path
    requires confidence >= tau (boundary inclusive)."""
    if prediction.intent_id in knowledge_intent_ids:
        return RouteDecision(RoutePath.KNOWLEDGE, None, prediction.confidence)
    if prediction.confidence >= tau:
        return RouteDecision(RoutePath.DETERMINISTIC, prediction.intent_id, prediction.confidence)
    return RouteDecision(RoutePath.KNOWLEDGE, None, prediction.confidence)


class TemplateRegistry:
    """(intent name, script) -> static response text.

    Lookup falls back to the intent's other-script template, so one
    template per intent is the minimum.
    """

    def __init__(self, entries: dict[tuple[str, Script], str]):
        self._entries = dict(entries)

    def get(self, intent: str, script: Script) -> str:
        text = self._entries.get((intent, script))
        if text is not None:
            return text
        for other in Script:
            text = self._entries.get((intent, other))
            if text is not None:
                return text
        raise ConfigError(f"no template for intent {intent!r}")

    def covered_intents(self) -> set[str]:
        return {intent for intent, _ in self._entries}

    def validate(self, intent_names: list[str], knowledge_intents: set[str]) -> None:
        missing = [
            name
            for name in intent_names
            if name not in knowledge_intents and name not in self.covered_intents()
        ]
        if missing:
            raise ConfigError(f"intents without templates: {', '.join(sorted(missing))}")

    @classmethod
    def load(cls, path: str | Path) -> "TemplateRegistry":
        entries: dict[tuple[str, Script], str] = {}
        for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 3 or not all(p.strip() for p in parts):
                raise DataError(f"{path}:{lineno}: expected 'intent<TAB>script<TAB>template'")
            try:
                script = Script.from_tag(parts[1])
            except ValueError as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from None
            entries[(parts[0].strip(), script)] = parts[2].strip()
        return cls(entries)


@dataclass
class DialogueSession:
    session_id: str
    created: float
    history: list[Turn] = field(default_factory=list)
    last_active: float = 0.0
    lock: threading.Lock = field(default_factory=threading.Lock)

    def append(self, turn: Turn) -> None:
        self.history.append(turn)
        self.last_active = turn.timestamp


class SessionStore:
    """In-memory sessions with TTL eviction; per-session turn serialization."""

    def __init__(self, ttl_s: float = DEFAULT_SESSION_TTL_S, clock=time.monotonic):
        self._ttl = ttl_s
        self._clock = clock
        self._sessions: dict[str, DialogueSession] = {}
        self._lock = threading.Lock()

    def get_or_create(self, session_id: str) -> DialogueSession:
        now = self._clock()
        with self._lock:
            self._evict(now)
            session = self._sessions.get(session_id)
            if session is None:
                session = DialogueSession(session_id, created=now, last_active=now)
                self._sessions[session_id] = session
            return session

    def _evict(self, now: float) -> None:
        dead = [sid for sid, s in self._sessions.items() if now - s.last_active > self._ttl]
        for sid in dead:
            del self._sessions[sid]

    def __len__(self) -> int:
        with self._lock:
            return len(self._sessions)
