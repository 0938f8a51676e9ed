"""Character n-gram TF-IDF features.

Character 3-4 grams are extracted verbatim (spaces included, no boundary
padding), weighted by smoothed idf ``ln((1+N)/(1+df)) + 1`` and the output
vector is L2-normalized. Robust to the spelling variance of dialectal text.
"""

from __future__ import annotations

import math
import struct
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError, IndexFormatError

_MAGIC = b"TFV1"


@dataclass(frozen=True)
class SparseVector:
    """Sorted-index sparse vector; ``indices`` strictly increasing, < dim."""

    indices: np.ndarray  # int32
    values: np.ndarray   # float64
    dim: int

    @property
    def nnz(self) -> int:
        return len(self.indices)

    def to_dense(self) -> np.ndarray:
        dense = np.zeros(self.dim)
        dense[self.indices] = self.values
        return dense


class TfidfVocabulary:
    def __init__(
        self,
        ngrams: list[str],
        df: np.ndarray,
        doc_count: int,
        n_range: tuple[int, int] = (3, 4),
    ):
        self.index = {g: i for i, g in enumerate(ngrams)}
        self.ngrams = list(ngrams)
        self.df = np.asarray(df, dtype=np.int64)
        self.doc_count = int(doc_count)
        self.n_range = (int(n_range[0]), int(n_range[1]))
        self.idf = np.log((1.0 + self.doc_count) / (1.0 + self.df)) + 1.0

    @property
    def size(self) -> int:
        return len(self.ngrams)


def char_ngrams(text: str, n_range: tuple[int, int] = (3, 4)) -> list[str]:
    lo, hi = n_range
    grams: list[str] = []
    length = len(text)
    for n in range(lo, hi + 1):
        grams.extend(text[i : i + n] for i in range(length - n + 1))
    return grams


def fit_tfidf(
    texts: list[str],
    n_range: tuple[int, int] = (3, 4),
    min_df: int = 1,
) -> TfidfVocabulary:
    """Build the vocabulary over all texts; n-grams below min_df are dropped."""
    if not texts:
        raise ValueError("fit_tfidf requires a non-empty list of texts")
    df_counter: Counter[str] = Counter()
    for text in texts:
        df_counter.update(set(char_ngrams(text, n_range)))
    kept = sorted(g for g, c in df_counter.items() if c >= min_df)
    if not kept:
        raise DataError(
            "empty vocabulary: no character n-gram met min_df "
            f"(texts shorter than {n_range[0]} chars produce none)"
        )
    df = np.array([df_counter[g] for g in kept], dtype=np.int64)
    return TfidfVocabulary(kept, df, doc_count=len(texts), n_range=n_range)


def transform(vocab: TfidfVocabulary, text: str) -> SparseVector:
    """tf * idf with L2 row normalization; unseen text maps to the zero vector."""
    counts: Counter[int] = Counter()
    for gram in char_ngrams(text, vocab.n_range):
        col = vocab.index.get(gram)
        if col is not None:
            counts[col] += 1
    if not counts:
        return SparseVector(np.empty(0, np.int32), np.empty(0, np.float64), vocab.size)
    cols = np.array(sorted(counts), dtype=np.int32)
    tf = np.array([counts[c] for c in cols], dtype=np.float64)
    weights = tf * vocab.idf[cols]
    norm = math.sqrt(float(weights @ weights))
    return SparseVector(cols, weights / norm, vocab.size)


def transform_many(vocab: TfidfVocabulary, texts: list[str]) -> list[SparseVector]:
    return [transform(vocab, t) for t in texts]


def save_vocabulary(vocab: TfidfVocabulary, path: str | Path) -> None:
    """Binary layout: magic, n_lo, n_hi, V, N, then (len, ngram utf-8, df, idf)
    records in column order. Little-endian throughout."""
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<BBII", vocab.n_range[0], vocab.n_range[1], vocab.size, vocab.doc_count))
        for i, gram in enumerate(vocab.ngrams):
            raw = gram.encode("utf-8")
            fh.write(struct.pack("<H", len(raw)))
            fh.write(raw)
            fh.write(struct.pack("<Id", int(vocab.df[i]), float(vocab.idf[i])))


def load_vocabulary(path: str | Path) -> TfidfVocabulary:
    """Load and re-derive idf from df, verifying it against the stored values."""
    data = Path(path).read_bytes()
    if data[:4] != _MAGIC:
        raise IndexFormatError(f"{path}: bad magic at offset 0 (not a vocabulary file)")
    try:
        n_lo, n_hi, size, doc_count = struct.unpack_from("<BBII", data, 4)
        offset = 4 + struct.calcsize("<BBII")
        ngrams: list[str] = []
        df = np.empty(size, dtype=np.int64)
        stored_idf = np.empty(size, dtype=np.float64)
        for i in range(size):
            (gram_len,) = struct.unpack_from("<H", data, offset)
            offset += 2
            ngrams.append(data[offset : offset + gram_len].decode("utf-8"))
            offset += gram_len
            df[i], stored_idf[i] = struct.unpack_from("<Id", data, offset)
            offset += struct.calcsize("<Id")
    except struct.error as exc:
        raise IndexFormatError(f"{path}: truncated vocabulary file at offset {offset}") from exc
    if offset != len(data):
        raise IndexFormatError(f"{path}: {len(data) - offset} trailing bytes at offset {offset}")
    vocab = TfidfVocabulary(ngrams, df, doc_count, (n_lo, n_hi))
    if not np.allclose(vocab.idf, stored_idf, rtol=0.0, atol=1e-12):
        raise IndexFormatError(f"{path}: stored idf disagrees with recomputed idf")
    return vocab
