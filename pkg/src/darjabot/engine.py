"""Turn orchestration: one object owning models, providers and knowledge.

Three logical subsystems live in this process: the dialogue side
(normalize + classify + route + templates + sessions), the provider
clients (embedding, generation), and the vector index snapshot. The
provider wire contracts and the index directory are the documented split
points if these ever need to become separate services.
"""

from __future__ import annotations

import threading
import time
from pathlib import Path

from . import classify, rag
from .classify import LinearModel, MlpModel, Prediction
from .config import EngineConfig
from .corpus import LabelCodec
from .embed import ProviderConfig, build_embedder
from .errors import ConfigError
from .features import TfidfVocabulary, load_vocabulary, save_vocabulary, transform
from .ingest import (
    KnowledgeSnapshot,
    SourceDocument,
    build_snapshot,
    load_snapshot,
    save_snapshot,
)
from .normalize import NormalizedUtterance, normalize
from .rag import ExtractiveMockGenerator, RemoteGenerator, StageTimer
from .router import (
    BotReply,
    RoutePath,
    SessionStore,
    TemplateRegistry,
    Turn,
    route,
)
from .vecindex import HnswIndex

MODEL_FILENAMES = {
    "vocab": "tfidf.bin",
    "linear": "intent_lr.bin",
    "mlp": "intent_mlp.bin",
    "codec": "labels.tsv",
}


def build_gen_provider(config: EngineConfig):
    if config.gen_kind == "extractive-mock":
        return ExtractiveMockGenerator(delay_ms=config.gen_delay_ms)
    if config.gen_kind == "remote":
        return RemoteGenerator(config.gen_endpoint, timeout_ms=config.gen_timeout_ms)
    raise ConfigError(f"unknown generation provider kind {config.gen_kind!r}")


def build_embed_provider(config: EngineConfig):
    return build_embedder(
        ProviderConfig(
            kind=config.embed_kind,
            endpoint=config.embed_endpoint,
            dim=config.embed_dim,
            timeout_ms=config.embed_timeout_ms,
            seed=config.embed_seed,
        )
    )


class Engine:
    def __init__(
        self,
        config: EngineConfig,
        vocab: TfidfVocabulary,
        model: LinearModel | MlpModel,
        codec: LabelCodec,
        templates: TemplateRegistry,
        snapshot: KnowledgeSnapshot,
        embed_provider=None,
        gen_provider=None,
    ):
        config.validate()
        self.config = config
        self.vocab = vocab
        self.model = model
        self.codec = codec
        self.templates = templates
        self.embed_provider = embed_provider or build_embed_provider(config)
        self.gen_provider = gen_provider or build_gen_provider(config)
        self.sessions = SessionStore(ttl_s=config.session_ttl_s)
        self._snapshot = snapshot
        self._ingest_lock = threading.Lock()

        unknown = [n for n in config.knowledge_intent_names() if n not in codec]
        if unknown:
            raise ConfigError(f"knowledge intents not in the label set: {', '.join(sorted(unknown))}")
        self.knowledge_intent_ids = frozenset(
            codec.encode(n) for n in config.knowledge_intent_names()
        )
        templates.validate(list(codec.names), config.knowledge_intent_names())

    # -- snapshot handling --------------------------------------------------

    @property
    def snapshot(self) -> KnowledgeSnapshot:
        return self._snapshot

    def reingest(self, doc: SourceDocument) -> int:
        """Rebuild knowledge with ``doc`` added/replaced; swap atomically.

        In-flight queries keep the snapshot they grabbed; nothing is
        published unless the whole rebuild succeeds.
        """
        with self._ingest_lock:
            docs = dict(self._snapshot.docs)
            docs[doc.doc_id] = doc
            fresh = build_snapshot(
                docs,
                self.config.offer_names(),
                self.embed_provider,
                self.embed_provider.dim,
                max_chunk_chars=self.config.max_chunk_chars,
                index_seed=self.config.index_seed,
            )
            count = sum(1 for c in fresh.chunks_by_node.values() if c.chunk_id.startswith(f"{doc.doc_id}#"))
            self._snapshot = fresh
            return count

    def save_knowledge(self, index_dir: str | Path | None = None) -> None:
        save_snapshot(self._snapshot, index_dir or self.config.index_dir)

    # -- turn pipeline --------------------------------------------------------

    def classify_text(self, text: str) -> tuple[NormalizedUtterance, Prediction]:
        norm = normalize(text)
        vec = transform(self.vocab, norm.text)
        return norm, classify.predict(self.model, vec)

    def handle_turn(self, session_id: str, raw_text: str) -> BotReply:
        session = self.sessions.get_or_create(session_id)
        with session.lock:
            timer = StageTimer()
            with timer.measure("normalize"):
                norm = normalize(raw_text)
            with timer.measure("featurize"):
                vec = transform(self.vocab, norm.text)
            with timer.measure("predict"):
                prediction = classify.predict(self.model, vec)
            decision = route(prediction, self.config.tau, self.knowledge_intent_ids)
            if decision.path is RoutePath.DETERMINISTIC:
                with timer.measure("template"):
                    intent = self.codec.decode(decision.intent_id)
                    text = self.templates.get(intent, norm.script)
                sources: tuple[str, ...] = ()
            else:
                snapshot = self._snapshot
                answer = rag.answer_question(
                    raw_text,
                    norm.script,
                    self.embed_provider,
                    self.gen_provider,
                    snapshot,
                    k1=self.config.k1,
                    alpha=self.config.alpha,
                    k2=self.config.k2,
                    min_score=self.config.min_score,
                    fallback_text=self.config.fallback_text,
                    max_tokens=self.config.gen_max_tokens,
                    timer=timer,
                )
                text = answer.text
                sources = answer.sources
            reply = BotReply(text, decision, sources, dict(timer.stages))
            session.append(Turn(raw_text, text, decision.path, time.time()))
            return reply


def save_models(
    models_dir: str | Path,
    vocab: TfidfVocabulary,
    codec: LabelCodec,
    linear: LinearModel | None = None,
    mlp: MlpModel | None = None,
) -> None:
    models_dir = Path(models_dir)
    models_dir.mkdir(parents=True, exist_ok=True)
    save_vocabulary(vocab, models_dir / MODEL_FILENAMES["vocab"])
    codec.save(models_dir / MODEL_FILENAMES["codec"])
    if linear is not None:
        classify.save_linear(linear, models_dir / MODEL_FILENAMES["linear"])
    if mlp is not None:
        classify.save_mlp(mlp, models_dir / MODEL_FILENAMES["mlp"])


def load_engine(config: EngineConfig, model_kind: str = "linear") -> Engine:
    """Assemble an engine from saved artifacts; fail with explicit messages."""
    models_dir = Path(config.models_dir)
    for key in ("vocab", "codec"):
        if not (models_dir / MODEL_FILENAMES[key]).exists():
            raise ConfigError(
                f"missing model artifact {models_dir / MODEL_FILENAMES[key]}; run 'darjabot train' first"
            )
    vocab = load_vocabulary(models_dir / MODEL_FILENAMES["vocab"])
    codec = LabelCodec.load(models_dir / MODEL_FILENAMES["codec"])
    model_file = models_dir / MODEL_FILENAMES[model_kind]
    if not model_file.exists():
        raise ConfigError(f"missing model artifact {model_file}; run 'darjabot train' first")
    if model_kind == "linear":
        model: LinearModel | MlpModel = classify.load_linear(model_file, codec)
    elif model_kind == "mlp":
        model = classify.load_mlp(model_file, codec)
    else:
        raise ConfigError(f"unknown model kind {model_kind!r}")
    if not config.templates_path or not Path(config.templates_path).exists():
        raise ConfigError(f"templates file not found: {config.templates_path!r}")
    templates = TemplateRegistry.load(config.templates_path)
    index_dir = Path(config.index_dir)
    if (index_dir / "index.hnsw").exists():
        snapshot = load_snapshot(index_dir)
    else:
        snapshot = KnowledgeSnapshot(HnswIndex(config.embed_dim), {}, {})
    return Engine(config, vocab, model, codec, templates, snapshot)
