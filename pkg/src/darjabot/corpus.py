"""Dataset loading, label encoding, stratified splitting and balancing.

Dataset files are UTF-8 TSV, one ``intent<TAB>text`` example per line.
Synonym lexicons are ``token<TAB>replacement1,replacement2,...`` lines.
"""

from __future__ import annotations

import math
import random
import sys
from dataclasses import dataclass
from pathlib import Path

from .errors import DataError
from .normalize import RawUtterance, Script

SPLIT_RATIOS = (0.8, 0.1, 0.1)


@dataclass(frozen=True)
class LabeledExample:
    utterance: RawUtterance
    intent: str
    augmented: bool = False


@dataclass(frozen=True)
class Dataset:
    """A labeled corpus; ``script`` is None for a mixed-script corpus."""

    examples: tuple[LabeledExample, ...]
    script: Script | None = None

    def __len__(self) -> int:
        return len(self.examples)

    def intents(self) -> list[str]:
        return sorted({ex.intent for ex in self.examples})

    def by_intent(self) -> dict[str, list[LabeledExample]]:
        groups: dict[str, list[LabeledExample]] = {}
        for ex in self.examples:
            groups.setdefault(ex.intent, []).append(ex)
        return groups


class LabelCodec:
    """Bijective intent-name <-> id map, ids assigned in lexicographic order."""

    def __init__(self, names: list[str]):
        self.names = tuple(sorted(names))
        self._ids = {name: i for i, name in enumerate(self.names)}
        if len(self._ids) != len(self.names):
            raise DataError("duplicate intent names in label codec")

    @property
    def num_classes(self) -> int:
        return len(self.names)

    def encode(self, name: str) -> int:
        try:
            return self._ids[name]
        except KeyError:
            raise DataError(f"unknown intent {name!r}") from None

    def decode(self, label_id: int) -> str:
        if not 0 <= label_id < len(self.names):
            raise DataError(f"label id {label_id} out of range 0..{len(self.names) - 1}")
        return self.names[label_id]

    def __contains__(self, name: str) -> bool:
        return name in self._ids

    def __eq__(self, other) -> bool:
        return isinstance(other, LabelCodec) and self.names == other.names

    def save(self, path: str | Path) -> None:
        lines = [f"{name}\t{i}" for i, name in enumerate(self.names)]
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "LabelCodec":
        names = []
        for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
            if not line.strip():
                continue
            try:
                name, id_str = line.split("\t")
                expected = int(id_str)
            except ValueError:
                raise DataError(f"{path}:{lineno}: malformed codec line {line!r}") from None
            if expected != len(names):
                raise DataError(f"{path}:{lineno}: non-contiguous label ids")
            names.append(name)
        codec = cls(names)
        if codec.names != tuple(names):
            raise DataError(f"{path}: label names are not in lexicographic order")
        return codec


def load_dataset(path: str | Path, script: Script | str | None = None) -> Dataset:
    """Parse a TSV dataset file; blank lines are skipped.

    ``script`` may be a Script, a tag string ('arabic', 'latin', 'mixed')
    or None for mixed corpora.
    """
    if isinstance(script, str):
        script = None if script.strip().lower() == "mixed" else Script.from_tag(script)
    path = Path(path)
    if not path.exists():
        raise DataError(f"dataset file not found: {path}")
    examples: list[LabeledExample] = []
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        parts = line.split("\t", 1)
        if len(parts) != 2 or not parts[0].strip() or not parts[1].strip():
            raise DataError(f"{path}:{lineno}: expected 'intent<TAB>text', got {line!r}")
        intent, text = parts[0].strip(), parts[1]
        examples.append(LabeledExample(RawUtterance(text, source_tag=str(path)), intent))
    return Dataset(tuple(examples), script)


def save_dataset(dataset: Dataset, path: str | Path) -> None:
    lines = [f"{ex.intent}\t{ex.utterance.text}" for ex in dataset.examples]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def fit_label_codec(dataset: Dataset) -> LabelCodec:
    if not dataset.examples:
        raise DataError("cannot fit a label codec on an empty dataset")
    return LabelCodec(dataset.intents())


def _largest_remainder(n: int, ratios: tuple[float, ...]) -> list[int]:
    quotas = [n * r for r in ratios]
    counts = [int(math.floor(q)) for q in quotas]
    leftover = n - sum(counts)
    order = sorted(range(len(ratios)), key=lambda i: (-(quotas[i] - counts[i]), i))
    for i in range(leftover):
        counts[order[i]] += 1
    # Every split keeps at least one example so each intent stays evaluable.
    while any(c == 0 for c in counts):
        zero = counts.index(0)
        donor = max(range(len(counts)), key=lambda i: (counts[i], -i))
        counts[zero] += 1
        counts[donor] -= 1
    return counts


def stratified_split(
    dataset: Dataset,
    ratios: tuple[float, float, float] = SPLIT_RATIOS,
    seed: int = 0,
) -> tuple[Dataset, Dataset, Dataset]:
    """Per-intent shuffled split with largest-remainder rounding.

    Each intent contributes at least one example to train, val and test,
    which requires at least 3 examples per intent.
    """
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError(f"split ratios must sum to 1, got {ratios}")
    groups = dataset.by_intent()
    for intent in sorted(groups):
        if len(groups[intent]) < 3:
            raise DataError(
                f"intent {intent!r} has only {len(groups[intent])} examples; "
                "balance the dataset to at least 3 per intent before splitting"
            )
    rng = random.Random(seed)
    splits: tuple[list[LabeledExample], ...] = ([], [], [])
    for intent in sorted(groups):
        group = list(groups[intent])
        rng.shuffle(group)
        counts = _largest_remainder(len(group), ratios)
        start = 0
        for split, count in zip(splits, counts):
            split.extend(group[start : start + count])
            start += count
    return tuple(Dataset(tuple(s), dataset.script) for s in splits)  # type: ignore[return-value]


class SynonymLexicon:
    """Surface token -> replacement tokens; no token may map to itself."""

    def __init__(self, entries: dict[str, set[str]]):
        for token, reps in entries.items():
            if token in reps:
                raise DataError(f"lexicon token {token!r} maps to itself")
        self._entries = {token: frozenset(reps) for token, reps in entries.items() if reps}

    def replacements(self, token: str) -> list[str]:
        return sorted(self._entries.get(token, ()))

    def __len__(self) -> int:
        return len(self._entries)

    @classmethod
    def load(cls, path: str | Path) -> "SynonymLexicon":
        entries: dict[str, set[str]] = {}
        for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2 or not parts[0].strip() or not parts[1].strip():
                raise DataError(f"{path}:{lineno}: expected 'token<TAB>rep1,rep2,...'")
            token = parts[0].strip()
            reps = {r.strip() for r in parts[1].split(",") if r.strip()}
            entries.setdefault(token, set()).update(reps)
        return cls(entries)

    @classmethod
    def empty(cls) -> "SynonymLexicon":
        return cls({})


def augment_synonyms(
    example: LabeledExample, lexicon: SynonymLexicon, max_variants: int
) -> list[LabeledExample]:
    """Single-token substitution variants, in (position, replacement) order."""
    tokens = example.utterance.text.split()
    variants: list[LabeledExample] = []
    for i, token in enumerate(tokens):
        for replacement in lexicon.replacements(token):
            if len(variants) >= max_variants:
                return variants
            new_tokens = list(tokens)
            new_tokens[i] = replacement
            variants.append(
                LabeledExample(
                    RawUtterance(" ".join(new_tokens), example.utterance.source_tag),
                    example.intent,
                    augmented=True,
                )
            )
    return variants


def balance_dataset(
    dataset: Dataset,
    min_per_intent: int,
    lexicon: SynonymLexicon,
    seed: int = 0,
) -> Dataset:
    """Lift every intent to ``min_per_intent`` examples.

    Distinct synonym variants are appended first; if those run out, seeded
    duplicates of existing examples fill the rest. Intents at or above the
    floor are left untouched.
    """
    if min_per_intent < 3:
        raise ValueError("min_per_intent must be at least 3")
    groups = dataset.by_intent()
    rng = random.Random(seed)
    appended: list[LabeledExample] = []
    for intent in sorted(groups):
        group = groups[intent]
        if not group:
            raise DataError(f"intent {intent!r} has zero examples")
        need = min_per_intent - len(group)
        if need <= 0:
            continue
        seen = {ex.utterance.text for ex in group}
        for ex in group:
            if need <= 0:
                break
            for variant in augment_synonyms(ex, lexicon, sys.maxsize):
                if need <= 0:
                    break
                if variant.utterance.text in seen:
                    continue
                seen.add(variant.utterance.text)
                appended.append(variant)
                need -= 1
        while need > 0:
            source = rng.choice(group)
            appended.append(LabeledExample(source.utterance, source.intent, augmented=True))
            need -= 1
    return Dataset(dataset.examples + tuple(appended), dataset.script)


def intent_stats(dataset: Dataset) -> dict[str, object]:
    """Per-intent count summary: total, classes, min/max/mean/median."""
    counts = sorted(len(g) for g in dataset.by_intent().values())
    if not counts:
        raise DataError("empty dataset")
    mid = len(counts) // 2
    median = counts[mid] if len(counts) % 2 else (counts[mid - 1] + counts[mid]) / 2
    return {
        "total": len(dataset),
        "intents": len(counts),
        "min": counts[0],
        "max": counts[-1],
        "mean": sum(counts) / len(counts),
        "median": median,
        "per_intent": {intent: len(g) for intent, g in sorted(dataset.by_intent().items())},
    }
