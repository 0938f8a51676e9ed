"""Retrieval, hybrid re-ranking, bilingual prompt assembly and generation.

Dense candidates come from the vector index; a lexical Jaccard score over
normalized token sets is blended in (final = alpha*dense + (1-alpha)*lex)
because embedding similarity alone smooths out the exact product tokens
that telecom questions hinge on. Results under min_score are dropped so an
empty context falls back to a fixed sentence instead of weak guessing.

Generation goes through a provider: a remote HTTP endpoint at temperature
0, or a deterministic extractive mock whose output is verbatim passage
text, keeping every content token grounded in the retrieved context.
"""

from __future__ import annotations

import json
import logging
import re
import time
import urllib.error
import urllib.request
from dataclasses import dataclass, field

from .embed import EmbeddingRole
from .errors import ProviderError
from .ingest import Chunk, KnowledgeSnapshot
from .normalize import Script, normalize

logger = logging.getLogger(__name__)

DEFAULT_FALLBACK = "Smahli, ma lqitch ljawab f documentation li aandi."

_LANG_HINT = {
    Script.ARABIC: "Respond in Arabic-script Darja.",
    Script.LATIN: "Respond in Latin-script Darja.",
}


@dataclass(frozen=True)
class Candidate:
    chunk: Chunk
    node_id: int
    dense: float


@dataclass(frozen=True)
class RetrievalResult:
    chunk: Chunk
    node_id: int
    dense: float
    lexical: float
    final: float


@dataclass(frozen=True)
class PromptBundle:
    instruction: str
    passages: tuple[tuple[str, str], ...]  # (chunk_id, text) in rank order
    question: str
    language_hint: str
    fallback_text: str
    empty_context: bool


@dataclass(frozen=True)
class Answer:
    text: str
    sources: tuple[str, ...]
    grounded: bool


@dataclass
class StageTimer:
    """Per-stage wall-clock milliseconds for the latency breakdown."""

    stages: dict[str, float] = field(default_factory=dict)

    def measure(self, name: str):
        timer = self

        class _Ctx:
            def __enter__(self):
                self.t0 = time.perf_counter()

            def __exit__(self, *exc):
                timer.stages[name] = timer.stages.get(name, 0.0) + (
                    (time.perf_counter() - self.t0) * 1000.0
                )

        return _Ctx()


def token_set(text: str) -> frozenset[str]:
    return frozenset(normalize(text).text.split())


def retrieve(
    question: str, provider, snapshot: KnowledgeSnapshot, k1: int = 20
) -> list[Candidate]:
    """Embed the normalized question (query role) and take the dense top-k1."""
    if snapshot.chunk_count == 0:
        return []
    vec = provider.embed([normalize(question).text], EmbeddingRole.QUERY)[0]
    hits = snapshot.index.search(vec, k1)
    return [Candidate(snapshot.chunk_for_hit(h.id), h.id, h.score) for h in hits]


def jaccard(a: frozenset[str], b: frozenset[str]) -> float:
    if not a or not b:
        return 0.0
    union = len(a | b)
    return len(a & b) / union if union else 0.0


def rerank(
    question: str,
    candidates: list[Candidate],
    alpha: float = 0.7,
    k2: int = 4,
    min_score: float = 0.3,
) -> list[RetrievalResult]:
    """Blend dense and lexical evidence, drop weak results, keep top-k2."""
    q_tokens = token_set(question)
    results = []
    for cand in candidates:
        lexical = jaccard(q_tokens, token_set(cand.chunk.body))
        final = alpha * cand.dense + (1.0 - alpha) * lexical
        if final >= min_score:
            results.append(RetrievalResult(cand.chunk, cand.node_id, cand.dense, lexical, final))
    results.sort(key=lambda r: (-r.final, r.chunk.chunk_id))
    return results[:k2]


def build_prompt(
    question: str,
    results: list[RetrievalResult],
    script: Script,
    fallback_text: str = DEFAULT_FALLBACK,
) -> PromptBundle:
    """Grounding instruction + numbered passages + language hint."""
    instruction = (
        "You are a telecom support assistant. Answer using ONLY the numbered "
        "passages below. If the passages do not contain the answer, reply with "
        f'exactly this sentence: "{fallback_text}". '
        "Cite nothing that is not in the passages."
    )
    passages = tuple((r.chunk.chunk_id, r.chunk.body) for r in results)
    return PromptBundle(
        instruction=instruction,
        passages=passages,
        question=question,
        language_hint=_LANG_HINT[script],
        fallback_text=fallback_text,
        empty_context=not passages,
    )


def render_prompt(bundle: PromptBundle) -> str:
    lines = [bundle.instruction, bundle.language_hint, ""]
    for i, (chunk_id, text) in enumerate(bundle.passages, 1):
        lines.append(f"[{i}] ({chunk_id}) {text}")
    lines.extend(["", f"Question: {bundle.question}", "Answer:"])
    return "\n".join(lines)


def _sentences(text: str) -> list[str]:
    parts = re.split(r"(?<=[.!?؟…])\s+", text)
    return [p.strip() for p in parts if p.strip()]


class ExtractiveMockGenerator:
    """Deterministic stand-in for the LLM: quotes the best passage sentence.

    Picks the passage with the highest question-token overlap (ties go to
    the earlier passage), then the sentence inside it with the highest
    overlap (ties go to the earlier sentence). Output is verbatim context,
    so it can never introduce tokens the passages do not contain.
    """

    def __init__(self, delay_ms: float = 0.0):
        self.delay_ms = delay_ms

    def complete(self, bundle: PromptBundle, max_tokens: int = 256) -> str:
        if self.delay_ms > 0:
            time.sleep(self.delay_ms / 1000.0)
        q_tokens = token_set(bundle.question)
        best_passage = None
        best_overlap = -1
        for _, text in bundle.passages:
            overlap = len(q_tokens & token_set(text))
            if overlap > best_overlap:
                best_overlap = overlap
                best_passage = text
        if best_passage is None:
            return bundle.fallback_text
        best_sentence = None
        best_score = -1
        for sentence in _sentences(best_passage):
            score = len(q_tokens & token_set(sentence))
            if score > best_score:
                best_score = score
                best_sentence = sentence
        return best_sentence if best_sentence is not None else best_passage


class RemoteGenerator:
    """POST {"prompt", "max_tokens", "temperature": 0} -> {"text"}."""

    def __init__(self, endpoint: str, timeout_ms: int = 8000):
        if not endpoint:
            raise ValueError("remote generator requires an endpoint")
        self.endpoint = endpoint
        self.timeout_ms = timeout_ms

    def complete(self, bundle: PromptBundle, max_tokens: int = 256) -> str:
        payload = json.dumps(
            {"prompt": render_prompt(bundle), "max_tokens": max_tokens, "temperature": 0}
        )
        request = urllib.request.Request(
            self.endpoint,
            data=payload.encode("utf-8"),
            headers={"Content-Type": "application/json"},
            method="POST",
        )
        try:
            with urllib.request.urlopen(request, timeout=self.timeout_ms / 1000.0) as resp:
                if resp.status != 200:
                    raise ProviderError(f"generator returned HTTP {resp.status}", retryable=True)
                body = json.loads(resp.read().decode("utf-8"))
        except ProviderError:
            raise
        except (urllib.error.URLError, TimeoutError, OSError, ValueError) as exc:
            raise ProviderError(f"generator unreachable: {exc}", retryable=True) from exc
        if "text" not in body:
            raise ProviderError("generator response lacks a 'text' field", retryable=False)
        return str(body["text"])


def generate(bundle: PromptBundle, provider, max_tokens: int = 256) -> Answer:
    """Produce a grounded answer; one retry on retryable failures, then the
    fallback sentence flagged ungrounded."""
    sources = tuple(chunk_id for chunk_id, _ in bundle.passages)
    if bundle.empty_context:
        return Answer(bundle.fallback_text, sources, grounded=True)
    for attempt in (0, 1):
        try:
            text = provider.complete(bundle, max_tokens=max_tokens)
            return Answer(text, sources, grounded=True)
        except ProviderError as exc:
            if not exc.retryable or attempt == 1:
                logger.error("generation failed (%s); serving fallback", exc)
                return Answer(bundle.fallback_text, sources, grounded=False)
    raise AssertionError("unreachable")


def answer_question(
    question: str,
    script: Script,
    embed_provider,
    gen_provider,
    snapshot: KnowledgeSnapshot,
    k1: int = 20,
    alpha: float = 0.7,
    k2: int = 4,
    min_score: float = 0.3,
    fallback_text: str = DEFAULT_FALLBACK,
    max_tokens: int = 256,
    timer: StageTimer | None = None,
) -> Answer:
    """Full pipeline with per-stage latency accounting."""
    timer = timer if timer is not None else StageTimer()
    try:
        with timer.measure("embed"):
            if snapshot.chunk_count == 0:
                candidates: list[Candidate] = []
                vec = None
            else:
                vec = embed_provider.embed([normalize(question).text], EmbeddingRole.QUERY)[0]
        with timer.measure("search"):
            if vec is not None:
                hits = snapshot.index.search(vec, k1)
                candidates = [
                    Candidate(snapshot.chunk_for_hit(h.id), h.id, h.score) for h in hits
                ]
        with timer.measure("rerank"):
            results = rerank(question, candidates, alpha=alpha, k2=k2, min_score=min_score)
        with timer.measure("prompt"):
            bundle = build_prompt(question, results, script, fallback_text)
        with timer.measure("generate"):
            return generate(bundle, gen_provider, max_tokens=max_tokens)
    except ProviderError as exc:
        logger.error("knowledge pipeline failed (%s); serving fallback", exc)
        return Answer(fallback_text, (), grounded=False)
