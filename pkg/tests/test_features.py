"""TF-IDF fitting/transform against an independent brute-force oracle."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from darjabot.errors import DataError, IndexFormatError
from darjabot.features import (
    char_ngrams,
    fit_tfidf,
    load_vocabulary,
    save_vocabulary,
    transform,
)


def brute_force_tfidf(texts: list[str], n_range=(3, 4), min_df=1):
    """Dict-based reference: returns (sorted ngrams, {ngram: idf}, per-text dense rows)."""

    def grams(text):
        out = []
        for n in range(n_range[0], n_range[1] + 1):
            for i in range(len(text) - n + 1):
                out.append(text[i : i + n])
        return out

    df: dict[str, int] = {}
    for text in texts:
        for g in set(grams(text)):
            df[g] = df.get(g, 0) + 1
    vocab = sorted(g for g, c in df.items() if c >= min_df)
    n_docs = len(texts)
    idf = {g: math.log((1 + n_docs) / (1 + df[g])) + 1.0 for g in vocab}
    rows = []
    for text in texts:
        counts: dict[str, int] = {}
        for g in grams(text):
            if g in idf:
                counts[g] = counts.get(g, 0) + 1
        row = np.zeros(len(vocab))
        for j, g in enumerate(vocab):
            row[j] = counts.get(g, 0) * idf[g]
        norm = np.linalg.norm(row)
        rows.append(row / norm if norm > 0 else row)
    return vocab, idf, rows


TOY_CORPUS = [
    "nheb nactivi roaming",
    "saha khouya",
    "chhal f solde",
    "kifash nkhalles fattra",
    "internet ma yemchich",
    "win nelqa code puk",
    "aatini forfait data",
    "nheb credit flexy",
    "bonjour service client",
    "wach kayen couverture",
    "transfert solde svp",
    "la puce mkassra",
    "activation roaming svp",
    "prix dyal appel",
    "nheb nbadel sim",
    "solde taai chhal",
    "connexion daifa bezaf",
    "code puk blanche",
    "pack data rkhis",
    "agence qriba meni",
]


def test_ngram_extraction_exhaustive():
    assert char_ngrams("abcd", (3, 4)) == ["abc", "bcd", "abcd"]
    assert char_ngrams("ab", (3, 4)) == []


def test_single_doc_idf_is_one():
    vocab = fit_tfidf(["abc"])
    assert list(vocab.ngrams) == ["abc"]
    assert vocab.df.tolist() == [1]
    assert vocab.idf.tolist() == [1.0]  # ln(2/2)+1


def test_df_counts_two_docs():
    vocab = fit_tfidf(["abcd", "abce"])
    df = {g: int(vocab.df[i]) for g, i in vocab.index.items()}
    assert df == {"abc": 2, "bcd": 1, "bce": 1, "abcd": 1, "abce": 1}


def test_fit_rejects_short_texts():
    with pytest.raises(DataError):
        fit_tfidf(["ab", "x"])


def test_fit_rejects_empty_list():
    with pytest.raises(ValueError):
        fit_tfidf([])


def test_transform_single_term_unit_vector():
    vocab = fit_tfidf(["abc"])
    vec = transform(vocab, "abc")
    assert vec.indices.tolist() == [0]
    assert vec.values.tolist() == [1.0]


def test_transform_unknown_text_zero_vector():
    vocab = fit_tfidf(["abc"])
    vec = transform(vocab, "zzz-not-in-vocab")
    assert vec.nnz == 0
    assert vec.dim == 1


def test_oracle_equivalence_toy_corpus():
    vocab = fit_tfidf(TOY_CORPUS)
    ref_vocab, ref_idf, ref_rows = brute_force_tfidf(TOY_CORPUS)
    assert list(vocab.ngrams) == ref_vocab
    for g in ref_vocab:
        assert abs(vocab.idf[vocab.index[g]] - ref_idf[g]) < 1e-12
    for text, ref_row in zip(TOY_CORPUS, ref_rows):
        dense = transform(vocab, text).to_dense()
        assert np.max(np.abs(dense - ref_row)) < 1e-9


def test_norms_are_unit():
    vocab = fit_tfidf(TOY_CORPUS)
    for text in TOY_CORPUS:
        vec = transform(vocab, text)
        assert abs(float(vec.values @ vec.values) - 1.0) < 1e-9


def test_transform_deterministic():
    vocab = fit_tfidf(TOY_CORPUS)
    a = transform(vocab, TOY_CORPUS[0])
    b = transform(vocab, TOY_CORPUS[0])
    assert a.indices.tolist() == b.indices.tolist()
    assert a.values.tolist() == b.values.tolist()


def test_min_df_prunes():
    vocab = fit_tfidf(["abcd", "abce"], min_df=2)
    assert list(vocab.ngrams) == ["abc"]


@settings(max_examples=80, derandomize=True)
@given(st.lists(st.text(alphabet="abcdef ", min_size=3, max_size=20), min_size=1, max_size=12))
def test_property_monotone_df(texts):
    base = fit_tfidf(texts)
    grown = fit_tfidf(texts + ["abcdef"])
    for g, i in base.index.items():
        assert grown.df[grown.index[g]] >= base.df[i]


@settings(max_examples=50, derandomize=True)
@given(st.lists(st.text(alphabet="abcdef ", min_size=3, max_size=24), min_size=1, max_size=10))
def test_property_oracle_equivalence(texts):
    vocab = fit_tfidf(texts)
    ref_vocab, _, ref_rows = brute_force_tfidf(texts)
    assert list(vocab.ngrams) == ref_vocab
    for text, ref_row in zip(texts, ref_rows):
        assert np.max(np.abs(transform(vocab, text).to_dense() - ref_row)) < 1e-9


# -- persistence ---------------------------------------------------------------

def test_vocabulary_file_roundtrip(tmp_path):
    vocab = fit_tfidf(TOY_CORPUS)
    path = tmp_path / "tfidf.bin"
    save_vocabulary(vocab, path)
    loaded = load_vocabulary(path)
    assert loaded.ngrams == vocab.ngrams
    assert loaded.df.tolist() == vocab.df.tolist()
    assert loaded.doc_count == vocab.doc_count
    assert loaded.n_range == vocab.n_range
    assert np.array_equal(loaded.idf, vocab.idf)


def test_vocabulary_bad_magic(tmp_path):
    path = tmp_path / "junk.bin"
    path.write_bytes(b"NOPE" + b"\x00" * 20)
    with pytest.raises(IndexFormatError, match="magic"):
        load_vocabulary(path)


def test_vocabulary_truncated(tmp_path):
    vocab = fit_tfidf(TOY_CORPUS)
    path = tmp_path / "tfidf.bin"
    save_vocabulary(vocab, path)
    data = path.read_bytes()
    path.write_bytes(data[: len(data) - 7])
    with pytest.raises(IndexFormatError):
        load_vocabulary(path)
