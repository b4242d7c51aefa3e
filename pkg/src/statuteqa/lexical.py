"""Fielded inverted index over article titles and contents, scored with BM25.

The quickview lexical score of an article is a weighted sum of two
whole-field BM25 scores: ``alpha * bm25(title) + beta * bm25(content)``.
Field statistics (document count, average length, per-article length) are
kept per field; articles without a title are simply absent from the title
field.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

from .corpus import Article, TokenizerConfig, clean_text, tokenize

__all__ = [
    "FieldStats",
    "Bm25Params",
    "QuickviewConfig",
    "LexIndex",
    "build_lex_index",
    "idf",
    "bm25",
    "quickview_lex_score",
    "retrieve_topk",
    "save_lex_index",
    "load_lex_index",
]

FIELDS = ("title", "content")

LEX_INDEX_FORMAT = "statuteqa.lexindex"
LEX_INDEX_VERSION = 1


@dataclass(frozen=True)
class Bm25Params:
    """Robertson defaults; the saturation/length knobs of the BM25 formula."""

    k1: float = 1.2
    b: float = 0.75

    def __post_init__(self) -> None:
        if self.k1 < 0:
            raise ValueError("k1 must be >= 0")
        if not 0.0 <= self.b <= 1.0:
            raise ValueError("b must be in [0, 1]")


@dataclass(frozen=True)
class QuickviewConfig:
    """Boosting weights for the title and content BM25 scores."""

    alpha: float = 1.5
    beta: float = 1.0

    def __post_init__(self) -> None:
        if self.alpha < 0 or self.beta < 0:
            raise ValueError("boost weights must be >= 0")
        if self.alpha + self.beta <= 0:
            raise ValueError("alpha + beta must be > 0")


@dataclass(frozen=True)
class FieldStats:
    field: str
    doc_count: int
    avgdl: float
    doc_len: Mapping[str, int]


@dataclass(frozen=True)
class LexIndex:
    """Immutable after build; safe for concurrent readers."""

    title_stats: FieldStats
    content_stats: FieldStats
    # field -> term -> article_id -> term frequency
    postings: Mapping[str, Mapping[str, Mapping[str, int]]]
    params: Bm25Params
    tokenizer_fingerprint: str

    def stats(self, field: str) -> FieldStats:
        if field == "title":
            return self.title_stats
        if field == "content":
            return self.content_stats
        raise ValueError(f"unknown field: {field!r}")

    def article_ids(self) -> list[str]:
        ids = set(self.content_stats.doc_len) | set(self.title_stats.doc_len)
        return sorted(ids)


def _field_tokens(article: Article, field: str, tok: TokenizerConfig) -> list[str]:
    if field == "title":
        return tokenize(clean_text(article.title), tok) if article.title else []
    return tokenize(clean_text(article.content), tok)


def build_lex_index(
    articles: Sequence[Article],
    tok: TokenizerConfig | None = None,
    params: Bm25Params | None = None,
) -> LexIndex:
    """Index title and content tokens of every article.

    Title tokens are indexed only when a title is present; a field whose
    cleaned text has no tokens leaves the article out of that field.
    """
    if not articles:
        raise ValueError("empty corpus")
    tok = tok or TokenizerConfig()
    params = params or Bm25Params()

    seen: set[str] = set()
    for article in articles:
        if article.article_id in seen:
            raise ValueError(f"duplicate article id {article.article_id!r}")
        seen.add(article.article_id)

    postings: dict[str, dict[str, dict[str, int]]] = {f: {} for f in FIELDS}
    doc_len: dict[str, dict[str, int]] = {f: {} for f in FIELDS}
    for article in articles:
        for field in FIELDS:
            tokens = _field_tokens(article, field, tok)
            if not tokens:
                continue
            doc_len[field][article.article_id] = len(tokens)
            field_postings = postings[field]
            for token in tokens:
                entry = field_postings.setdefault(token, {})
                entry[article.article_id] = entry.get(article.article_id, 0) + 1

    def stats(field: str) -> FieldStats:
        lengths = doc_len[field]
        count = len(lengths)
        avgdl = sum(lengths.values()) / count if count else 0.0
        return FieldStats(field=field, doc_count=count, avgdl=avgdl, doc_len=lengths)

    return LexIndex(
        title_stats=stats("title"),
        content_stats=stats("content"),
        postings=postings,
        params=params,
        tokenizer_fingerprint=tok.fingerprint(),
    )


def idf(index: LexIndex, field: str, term: str) -> float:
    """Inverse document frequency: ln(1 + (N - n + 0.5) / (n + 0.5))."""
    n = len(index.postings[field].get(term, ()))
    big_n = index.stats(field).doc_count
    return math.log(1.0 + (big_n - n + 0.5) / (n + 0.5))


def bm25(index: LexIndex, field: str, query: Sequence[str], article_id: str) -> float:
    """BM25 score of one article's field against the query token sequence.

    Repeated query tokens contribute once per occurrence. Articles unknown
    to the field score 0.
    """
    stats = index.stats(field)
    length = stats.doc_len.get(article_id)
    if length is None:
        return 0.0
    k1, b = index.params.k1, index.params.b
    norm = k1 * (1.0 - b + b * length / stats.avgdl)
    field_postings = index.postings[field]
    score = 0.0
    for token in query:
        entry = field_postings.get(token)
        if not entry:
            continue
        tf = entry.get(article_id)
        if not tf:
            continue
        score += idf(index, field, token) * tf * (k1 + 1.0) / (tf + norm)
    return score


def quickview_lex_score(
    index: LexIndex,
    query: Sequence[str],
    article_id: str,
    cfg: QuickviewConfig | None = None,
) -> float:
    """alpha * title BM25 + beta * content BM25; a missing title contributes 0."""
    cfg = cfg or QuickviewConfig()
    score = 0.0
    if cfg.alpha:
        score += cfg.alpha * bm25(index, "title", query, article_id)
    if cfg.beta:
        score += cfg.beta * bm25(index, "content", query, article_id)
    return score


def retrieve_topk(
    index: LexIndex,
    query: Sequence[str],
    k: int,
    cfg: QuickviewConfig | None = None,
) -> list[tuple[str, float]]:
    """Top-k articles by raw quickview score, descending.

    Only articles with score > 0 are returned; ties break by ascending
    article id for a deterministic total order.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    cfg = cfg or QuickviewConfig()
    candidates: set[str] = set()
    for field in FIELDS:
        weight = cfg.alpha if field == "title" else cfg.beta
        if not weight:
            continue
        field_postings = index.postings[field]
        for token in set(query):
            entry = field_postings.get(token)
            if entry:
                candidates.update(entry)
    scored = [
        (article_id, score)
        for article_id in candidates
        if (score := quickview_lex_score(index, query, article_id, cfg)) > 0.0
    ]
    scored.sort(key=lambda item: (-item[1], item[0]))
    return scored[:k]


def save_lex_index(index: LexIndex, path: str | Path) -> None:
    """Persist as line-delimited JSON with a version header. Deterministic."""
    header = {
        "format": LEX_INDEX_FORMAT,
        "version": LEX_INDEX_VERSION,
        "tokenizer_fingerprint": index.tokenizer_fingerprint,
        "k1": index.params.k1,
        "b": index.params.b,
    }
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(json.dumps(header, sort_keys=True) + "\n")
        for field in FIELDS:
            stats = index.stats(field)
            record = {
                "field": field,
                "doc_count": stats.doc_count,
                "avgdl": stats.avgdl,
                "doc_len": dict(sorted(stats.doc_len.items())),
                "postings": {
                    term: sorted(entry.items())
                    for term, entry in sorted(index.postings[field].items())
                },
            }
            handle.write(json.dumps(record, sort_keys=True, ensure_ascii=False) + "\n")


def load_lex_index(
    path: str | Path, expected_fingerprint: str | None = None
) -> LexIndex:
    """Load a persisted index; verify the tokenizer fingerprint if given."""
    with open(path, encoding="utf-8") as handle:
        header = json.loads(handle.readline())
        if header.get("format") != LEX_INDEX_FORMAT:
            raise ValueError(f"{path}: not a lexical index file")
        if header.get("version") != LEX_INDEX_VERSION:
            raise ValueError(f"{path}: unsupported version {header.get('version')}")
        fingerprint = header["tokenizer_fingerprint"]
        if expected_fingerprint is not None and fingerprint != expected_fingerprint:
            raise ValueError(
                f"{path}: tokenizer fingerprint mismatch "
                f"(index {fingerprint}, expected {expected_fingerprint})"
            )
        stats: dict[str, FieldStats] = {}
        postings: dict[str, dict[str, dict[str, int]]] = {}
        for line in handle:
            record = json.loads(line)
            field = record["field"]
            stats[field] = FieldStats(
                field=field,
                doc_count=record["doc_count"],
                avgdl=record["avgdl"],
                doc_len=record["doc_len"],
            )
            postings[field] = {
                term: dict(entry) for term, entry in record["postings"].items()
            }
    for field in FIELDS:
        if field not in stats:
            raise ValueError(f"{path}: missing field record {field!r}")
    return LexIndex(
        title_stats=stats["title"],
        content_stats=stats["content"],
        postings=postings,
        params=Bm25Params(k1=header["k1"], b=header["b"]),
        tokenizer_fingerprint=fingerprint,
    )
