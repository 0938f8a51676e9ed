"""Latency measurement for both reply paths.

Runs the template path and the knowledge path against an engine with mock
providers, collects per-stage wall-clock samples from the turn pipeline
and summarizes p50/p95 plus each stage's share of the total. An artificial
generation delay can be injected to reproduce the generation-dominates
profile end-to-end.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .engine import Engine


def percentile(samples: list[float], pct: float) -> float:
    """Nearest-rank percentile; deterministic, no interpolation."""
    if not samples:
        return 0.0
    ordered = sorted(samples)
    rank = max(1, math.ceil(pct / 100.0 * len(ordered)))
    return ordered[rank - 1]


@dataclass
class StageStats:
    stage: str
    p50_ms: float
    p95_ms: float
    mean_ms: float
    share: float  # fraction of summed mean stage time


@dataclass
class PathReport:
    path: str
    n: int
    total_p50_ms: float
    total_p95_ms: float
    stages: list[StageStats]


def _summarize(path: str, per_turn: list[dict[str, float]]) -> PathReport:
    if not per_turn:
        return PathReport(path, 0, 0.0, 0.0, [])
    stage_samples: dict[str, list[float]] = {}
    totals: list[float] = []
    for stages in per_turn:
        totals.append(sum(stages.values()))
        for stage, ms in stages.items():
            stage_samples.setdefault(stage, []).append(ms)
    mean_by_stage = {s: sum(v) / len(v) for s, v in stage_samples.items()}
    mean_total = sum(mean_by_stage.values()) or 1.0
    stats = [
        StageStats(
            stage,
            percentile(stage_samples[stage], 50),
            percentile(stage_samples[stage], 95),
            mean_by_stage[stage],
            mean_by_stage[stage] / mean_total,
        )
        for stage in sorted(stage_samples, key=lambda s: -mean_by_stage[s])
    ]
    return PathReport(path, len(per_turn), percentile(totals, 50), percentile(totals, 95), stats)


def run_path(engine: Engine, queries: list[str], n: int, label: str) -> PathReport:
    """Issue n turns cycling through queries; returns the latency summary."""
    per_turn: list[dict[str, float]] = []
    for i in range(n):
        reply = engine.handle_turn(f"bench-{label}-{i % 37}", queries[i % len(queries)])
        per_turn.append(reply.stage_ms)
    return _summarize(label, per_turn)


def deterministic_queries(engine: Engine, candidates: list[str], want: int = 16) -> list[str]:
    """Keep candidates the engine would actually answer from templates."""
    from .router import RoutePath, route

    kept = []
    for text in candidates:
        _, prediction = engine.classify_text(text)
        decision = route(prediction, engine.config.tau, engine.knowledge_intent_ids)
        if decision.path is RoutePath.DETERMINISTIC:
            kept.append(text)
            if len(kept) >= want:
                break
    return kept
