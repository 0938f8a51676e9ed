"""Shared fixtures: bundled data paths, a small trained engine, counting providers."""

from __future__ import annotations

from importlib import resources
from pathlib import Path

import pytest

from darjabot import synthetic
from darjabot.cli import train_pipeline
from darjabot.config import EngineConfig
from darjabot.corpus import save_dataset
from darjabot.embed import EmbeddingRole
from darjabot.engine import load_engine
from darjabot.ingest import load_document


DATA_DIR = Path(str(resources.files("darjabot") / "data"))


@pytest.fixture(scope="session")
def knowledge_pack_path() -> Path:
    return DATA_DIR / "knowledge_pack.md"


@pytest.fixture(scope="session")
def fixture_questions() -> list[tuple[str, str]]:
    rows = []
    for line in (DATA_DIR / "fixture_questions.tsv").read_text(encoding="utf-8").splitlines():
        if line.strip():
            question, gold = line.split("\t")
            rows.append((question, gold))
    return rows


class CountingEmbedder:
    """Delegates to a real provider while counting calls."""

    def __init__(self, inner):
        self.inner = inner
        self.calls = 0

    @property
    def dim(self):
        return self.inner.dim

    def embed(self, texts, role: EmbeddingRole):
        self.calls += 1
        return self.inner.embed(texts, role)


class CountingGenerator:
    def __init__(self, inner):
        self.inner = inner
        self.calls = 0

    def complete(self, bundle, max_tokens: int = 256):
        self.calls += 1
        return self.inner.complete(bundle, max_tokens=max_tokens)


@pytest.fixture(scope="session")
def engine_config(tmp_path_factory) -> EngineConfig:
    """Train a small model once per session and point a config at it."""
    root = tmp_path_factory.mktemp("engine")
    dataset_path = root / "corpus.tsv"
    save_dataset(synthetic.generate_corpus(seed=5, per_intent=14), dataset_path)
    config = EngineConfig(
        models_dir=str(root / "models"),
        index_dir=str(root / "index"),
        reports_dir=str(root / "reports"),
        templates_path=str(DATA_DIR / "templates.tsv"),
        lexicon_path=str(DATA_DIR / "lexicon.tsv"),
        dataset_path=str(dataset_path),
        knowledge_intents=",".join(synthetic.KNOWLEDGE_INTENT_NAMES),
        min_score=0.15,  # hash-mock similarity scale sits lower than a real encoder's
        seed=11,
    )
    train_pipeline(config, quiet=True)
    return config


@pytest.fixture()
def engine(engine_config, knowledge_pack_path):
    eng = load_engine(engine_config)
    embedder = CountingEmbedder(eng.embed_provider)
    generator = CountingGenerator(eng.gen_provider)
    eng.embed_provider = embedder
    eng.gen_provider = generator
    eng.reingest(load_document(knowledge_pack_path))
    embedder.calls = 0
    generator.calls = 0
    return eng
