"""Knowledge-document ingestion: offer-based chunking, embedding, indexing.

Documents arrive as pre-extracted text or markdown (PDF extraction is an
upstream concern). A chunk starts at every markdown heading or at a line
that opens with a configured offer name, so a price never drifts away from
the offer it belongs to. Sections longer than max_chunk_chars split at
sentence boundaries and every sub-chunk gets the section header injected
up front for the same reason.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .embed import EmbeddingRole
from .errors import DataError
from .normalize import normalize
from .vecindex import HnswIndex

_HEADING_RE = re.compile(r"^\s{0,3}#{1,6}\s+(.*\S)\s*$")
_SENT_RE = re.compile(r"[.!?؟…]+\s+")

DEFAULT_MAX_CHUNK_CHARS = 1200


@dataclass(frozen=True)
class SourceDocument:
    doc_id: str
    title: str
    body: str
    format: str = "markdown"  # "markdown" | "plain"

    def __post_init__(self):
        if self.format not in ("markdown", "plain"):
            raise DataError(f"unknown document format {self.format!r}")


@dataclass(frozen=True)
class Chunk:
    chunk_id: str
    header: str
    body: str
    span: tuple[int, int]
    order: int


def _offer_line_re(header_patterns: list[str]) -> re.Pattern | None:
    names = [re.escape(p.strip()) for p in header_patterns if p.strip()]
    if not names:
        return None
    return re.compile(r"^\s*(" + "|".join(names) + r")\b.*\S", re.IGNORECASE)


def _section_boundaries(doc: SourceDocument, header_patterns: list[str]) -> list[tuple[int, str]]:
    """(char offset, header text) for every line that opens a section."""
    offer_re = _offer_line_re(header_patterns)
    boundaries: list[tuple[int, str]] = []
    offset = 0
    for line in doc.body.splitlines(keepends=True):
        stripped = line.rstrip("\n")
        heading = _HEADING_RE.match(stripped) if doc.format == "markdown" else None
        if heading:
            boundaries.append((offset, heading.group(1)))
        elif offer_re and offer_re.match(stripped):
            boundaries.append((offset, stripped.strip()))
        offset += len(line)
    return boundaries


def _sentence_units(text: str, max_chars: int) -> list[tuple[int, int]]:
    """Tile ``text`` into sentence spans, hard-cutting any oversized one."""
    cuts = [m.end() for m in _SENT_RE.finditer(text)]
    if not cuts or cuts[-1] != len(text):
        cuts.append(len(text))
    units: list[tuple[int, int]] = []
    start = 0
    for cut in cuts:
        s = start
        while cut - s > max_chars:
            units.append((s, s + max_chars))
            s += max_chars
        if cut > s:
            units.append((s, cut))
        start = cut
    return units


def _pack_units(units: list[tuple[int, int]], max_chars: int) -> list[tuple[int, int]]:
    """Greedily merge consecutive sentence spans up to max_chars."""
    packed: list[tuple[int, int]] = []
    group_start, group_end = units[0]
    for s, e in units[1:]:
        if e - group_start <= max_chars:
            group_end = e
        else:
            packed.append((group_start, group_end))
            group_start, group_end = s, e
    packed.append((group_start, group_end))
    return packed


def header_prefix(header: str) -> str:
    return f"«{header}» — "


def chunk_by_offer(
    doc: SourceDocument,
    header_patterns: list[str] | None = None,
    max_chunk_chars: int = DEFAULT_MAX_CHUNK_CHARS,
) -> list[Chunk]:
    """Split a document into offer-bound chunks covering its whole body.

    Text before the first header becomes a preamble chunk (header "").
    Ordered spans tile the body exactly; sub-chunk bodies carry the
    injected header prefix on top of their span text.
    """
    if not doc.body.strip():
        raise DataError(f"document {doc.doc_id!r} is empty")
    boundaries = _section_boundaries(doc, header_patterns or [])
    sections: list[tuple[str, int, int]] = []
    if not boundaries or boundaries[0][0] > 0:
        first = boundaries[0][0] if boundaries else len(doc.body)
        if doc.body[:first].strip():
            sections.append(("", 0, first))
    for i, (start, header) in enumerate(boundaries):
        end = boundaries[i + 1][0] if i + 1 < len(boundaries) else len(doc.body)
        sections.append((header, start, end))
    chunks: list[Chunk] = []
    for header, start, end in sections:
        text = doc.body[start:end]
        if len(text) <= max_chunk_chars:
            parts = [(start, end)]
        else:
            units = _sentence_units(text, max_chunk_chars)
            parts = [(start + s, start + e) for s, e in _pack_units(units, max_chunk_chars)]
        prefix = header_prefix(header) if len(parts) > 1 and header else ""
        for s, e in parts:
            chunks.append(
                Chunk(
                    chunk_id=f"{doc.doc_id}#{len(chunks)}",
                    header=header,
                    body=prefix + doc.body[s:e],
                    span=(s, e),
                    order=len(chunks),
                )
            )
    return chunks


def index_document(
    doc: SourceDocument,
    header_patterns: list[str],
    provider,
    index: HnswIndex,
    max_chunk_chars: int = DEFAULT_MAX_CHUNK_CHARS,
    start_id: int = 0,
) -> list[Chunk]:
    """Chunk, embed (passage role, over normalized text) and insert.

    Callers build into a fresh index and swap it in only on success, so a
    provider failure never publishes a half-indexed document.
    """
    chunks = chunk_by_offer(doc, header_patterns, max_chunk_chars)
    vectors = provider.embed([normalize(c.body).text for c in chunks], EmbeddingRole.PASSAGE)
    for i, (chunk, vec) in enumerate(zip(chunks, vectors)):
        index.insert(start_id + i, np.asarray(vec), metadata=chunk.chunk_id)
    return chunks


class KnowledgeSnapshot:
    """Immutable view served to queries: index plus chunk/document stores."""

    def __init__(
        self,
        index: HnswIndex,
        chunks_by_node: dict[int, Chunk],
        docs: dict[str, SourceDocument],
    ):
        self.index = index
        self.chunks_by_node = dict(chunks_by_node)
        self.docs = dict(docs)

    @property
    def chunk_count(self) -> int:
        return len(self.chunks_by_node)

    def chunk_for_hit(self, node_id: int) -> Chunk:
        return self.chunks_by_node[node_id]


def build_snapshot(
    docs: dict[str, SourceDocument],
    header_patterns: list[str],
    provider,
    dim: int,
    max_chunk_chars: int = DEFAULT_MAX_CHUNK_CHARS,
    index_seed: int = 0,
) -> KnowledgeSnapshot:
    """Embed and index every document into a fresh snapshot."""
    index = HnswIndex(dim, seed=index_seed)
    chunks_by_node: dict[int, Chunk] = {}
    next_id = 0
    for doc_id in sorted(docs):
        chunks = index_document(
            docs[doc_id], header_patterns, provider, index, max_chunk_chars, start_id=next_id
        )
        for i, chunk in enumerate(chunks):
            chunks_by_node[next_id + i] = chunk
        next_id += len(chunks)
    return KnowledgeSnapshot(index, chunks_by_node, docs)


def save_snapshot(snapshot: KnowledgeSnapshot, index_dir: str | Path) -> None:
    index_dir = Path(index_dir)
    index_dir.mkdir(parents=True, exist_ok=True)
    snapshot.index.save(index_dir / "index.hnsw")
    with open(index_dir / "chunks.jsonl", "w", encoding="utf-8") as fh:
        for node_id in sorted(snapshot.chunks_by_node):
            c = snapshot.chunks_by_node[node_id]
            fh.write(
                json.dumps(
                    {
                        "node_id": node_id,
                        "chunk_id": c.chunk_id,
                        "header": c.header,
                        "body": c.body,
                        "span": list(c.span),
                        "order": c.order,
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )
    docs_payload = {
        doc_id: {"title": d.title, "body": d.body, "format": d.format}
        for doc_id, d in snapshot.docs.items()
    }
    (index_dir / "docs.json").write_text(
        json.dumps(docs_payload, ensure_ascii=False, indent=1), encoding="utf-8"
    )


def load_snapshot(index_dir: str | Path) -> KnowledgeSnapshot:
    index_dir = Path(index_dir)
    index_path = index_dir / "index.hnsw"
    if not index_path.exists():
        raise DataError(f"no index file at {index_path}")
    index = HnswIndex.load(index_path)
    chunks_by_node: dict[int, Chunk] = {}
    for lineno, line in enumerate(
        (index_dir / "chunks.jsonl").read_text(encoding="utf-8").splitlines(), 1
    ):
        if not line.strip():
            continue
        try:
            row = json.loads(line)
            chunk = Chunk(
                row["chunk_id"], row["header"], row["body"], tuple(row["span"]), row["order"]
            )
            node_id = int(row["node_id"])
        except (KeyError, ValueError, json.JSONDecodeError) as exc:
            raise DataError(f"{index_dir / 'chunks.jsonl'}:{lineno}: {exc}") from exc
        chunks_by_node[node_id] = chunk
        index.set_metadata(node_id, chunk.chunk_id)
    docs_raw = json.loads((index_dir / "docs.json").read_text(encoding="utf-8"))
    docs = {
        doc_id: SourceDocument(doc_id, d["title"], d["body"], d["format"])
        for doc_id, d in docs_raw.items()
    }
    return KnowledgeSnapshot(index, chunks_by_node, docs)


def load_document(path: str | Path, doc_id: str | None = None) -> SourceDocument:
    path = Path(path)
    if not path.exists():
        raise DataError(f"document not found: {path}")
    body = path.read_text(encoding="utf-8")
    fmt = "markdown" if path.suffix.lower() in (".md", ".markdown") else "plain"
    title = path.stem.replace("_", " ")
    return SourceDocument(doc_id or path.stem, title, body, fmt)
