"""Engine configuration: a flat ``key = value`` UTF-8 text format.

Every knob the CLI and service honor lives here with a documented default;
serializing the effective config and reloading it yields an equal config.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from pathlib import Path

from .errors import ConfigError
from .rag import DEFAULT_FALLBACK


@dataclass
class EngineConfig:
    # artifact paths
    models_dir: str = "artifacts/models"
    index_dir: str = "artifacts/index"
    templates_path: str = ""
    lexicon_path: str = ""
    dataset_path: str = ""
    reports_dir: str = "artifacts/reports"
    # routing / retrieval thresholds
    tau: float = 0.7
    alpha: float = 0.7
    min_score: float = 0.3
    k1: int = 20
    k2: int = 4
    fallback_text: str = DEFAULT_FALLBACK
    knowledge_intents: str = ""  # comma-separated intent names
    offers: str = "pixx,win,sama"
    max_chunk_chars: int = 1200
    session_ttl_s: float = 1800.0
    # embedding provider
    embed_kind: str = "hash-mock"
    embed_endpoint: str = ""
    embed_dim: int = 384
    embed_timeout_ms: int = 3000
    embed_seed: int = 13
    # generation provider
    gen_kind: str = "extractive-mock"
    gen_endpoint: str = ""
    gen_timeout_ms: int = 8000
    gen_max_tokens: int = 256
    gen_delay_ms: float = 0.0
    # server
    host: str = "127.0.0.1"
    port: int = 8321
    # training
    seed: int = 7
    min_per_intent: int = 13
    min_df: int = 1
    lr: float = 0.5
    l2: float = 1e-4
    batch: int = 64
    max_epochs: int = 200
    patience: int = 5
    mlp_lr: float = 0.01
    mlp_momentum: float = 0.9
    mlp_dropout: float = 0.3
    index_seed: int = 0

    def knowledge_intent_names(self) -> set[str]:
        return {n.strip() for n in self.knowledge_intents.split(",") if n.strip()}

    def offer_names(self) -> list[str]:
        return [n.strip() for n in self.offers.split(",") if n.strip()]

    def validate(self) -> None:
        if not 0.0 <= self.tau <= 1.0:
            raise ConfigError(f"tau must be in [0,1], got {self.tau}")
        if not 0.0 <= self.alpha <= 1.0:
            raise ConfigError(f"alpha must be in [0,1], got {self.alpha}")
        if self.k2 < 1 or self.k1 < self.k2:
            raise ConfigError(f"need k1 >= k2 >= 1, got k1={self.k1} k2={self.k2}")
        if self.embed_dim < 8:
            raise ConfigError(f"embed_dim must be >= 8, got {self.embed_dim}")

    def to_text(self) -> str:
        lines = ["# darjabot engine configuration"]
        for f in fields(self):
            lines.append(f"{f.name} = {getattr(self, f.name)}")
        return "\n".join(lines) + "\n"

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_text(), encoding="utf-8")

    @classmethod
    def from_text(cls, text: str, source: str = "<config>") -> "EngineConfig":
        known = {f.name: f.type for f in fields(cls)}
        casts = {f.name: type(getattr(cls(), f.name)) for f in fields(cls)}
        values: dict[str, object] = {}
        for lineno, line in enumerate(text.splitlines(), 1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            if "=" not in stripped:
                raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
            key, _, raw = stripped.partition("=")
            key = key.strip()
            raw = raw.strip()
            if key not in known:
                raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
            cast = casts[key]
            try:
                if cast is bool:
                    values[key] = raw.lower() in ("1", "true", "yes")
                else:
                    values[key] = cast(raw)
            except ValueError:
                raise ConfigError(
                    f"{source}:{lineno}: cannot parse {raw!r} as {cast.__name__}"
                ) from None
        config = cls(**values)  # type: ignore[arg-type]
        config.validate()
        return config

    @classmethod
    def load(cls, path: str | Path) -> "EngineConfig":
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        return cls.from_text(path.read_text(encoding="utf-8"), source=str(path))
