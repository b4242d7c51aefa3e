"""Statute corpus parsing: documents, articles, cleaning, tokenization.

Corpus file format: UTF-8, one JSON object per line:
    {"doc_id": str, "articles": [{"article_id": str, "title": str|null, "content": str}]}
Article order within a document is preserved.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

__all__ = [
    "Article",
    "LegalDocument",
    "TokenizerConfig",
    "ParseStats",
    "CorpusFormatError",
    "clean_text",
    "tokenize",
    "split_sentences",
    "parse_corpus",
    "load_corpus_file",
    "write_corpus_file",
]

PHRASE_JOINER = "_"

_SENTENCE_DELIMS = re.compile(r"[.;?!\n]")


class CorpusFormatError(ValueError):
    """Raised for malformed corpus records or duplicate identifiers."""


@dataclass(frozen=True)
class Article:
    """One statute article, the retrieval unit. Content is stored raw."""

    article_id: str
    doc_id: str
    title: str | None
    content: str


@dataclass(frozen=True)
class LegalDocument:
    doc_id: str
    articles: tuple[Article, ...]


@dataclass(frozen=True)
class TokenizerConfig:
    """Whitespace tokenizer with an optional phrase-merge hook.

    In ``whitespace_with_phrase_merge`` mode, adjacent tokens matching a
    lexicon phrase (greedy, longest match first) are joined with
    ``PHRASE_JOINER`` into a single token.
    """

    mode: str = "whitespace"
    phrase_lexicon: frozenset[str] = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        if self.mode not in ("whitespace", "whitespace_with_phrase_merge"):
            raise ValueError(f"unknown tokenizer mode: {self.mode!r}")
        if self.mode == "whitespace_with_phrase_merge" and not self.phrase_lexicon:
            raise ValueError("phrase_lexicon required for whitespace_with_phrase_merge")
        if self.mode == "whitespace" and self.phrase_lexicon:
            raise ValueError("phrase_lexicon only valid with whitespace_with_phrase_merge")
        object.__setattr__(self, "phrase_lexicon", frozenset(self.phrase_lexicon))

    def fingerprint(self) -> str:
        payload = self.mode + "|" + ",".join(sorted(self.phrase_lexicon))
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]


def clean_text(raw: str) -> str:
    """Lowercase and keep only letters (any script) and decimal digits.

    Every run of other characters collapses to a single space; the result
    has no leading or trailing space. Idempotent.
    """
    out: list[str] = []
    space_pending = False
    for ch in raw.lower():
        if ch.isalpha() or ch.isdecimal():
            if space_pending and out:
                out.append(" ")
            space_pending = False
            out.append(ch)
        else:
            space_pending = True
    return "".join(out)


def tokenize(text: str, cfg: TokenizerConfig | None = None) -> list[str]:
    """Split cleaned text into tokens, merging lexicon phrases if configured."""
    tokens = text.split()
    if cfg is None or cfg.mode == "whitespace" or not tokens:
        return tokens

    phrases = sorted((p.split() for p in cfg.phrase_lexicon), key=len, reverse=True)
    merged: list[str] = []
    i = 0
    while i < len(tokens):
        for parts in phrases:
            n = len(parts)
            if n > 1 and tokens[i : i + n] == parts:
                merged.append(PHRASE_JOINER.join(parts))
                i += n
                break
        else:
            merged.append(tokens[i])
            i += 1
    return merged


def split_sentences(content: str) -> list[str]:
    """Split raw article content on '.', ';', '?', '!' and newlines.

    Segments are trimmed and empty segments dropped.
    """
    return [seg.strip() for seg in _SENTENCE_DELIMS.split(content) if seg.strip()]


@dataclass
class ParseStats:
    documents: int = 0
    articles: int = 0
    titled: int = 0
    missing_title: int = 0
    dropped_empty_content: int = 0


def parse_corpus(lines: Iterable[str]) -> tuple[list[LegalDocument], ParseStats]:
    """Parse a corpus record stream into documents plus parse statistics.

    Articles whose cleaned content is empty are dropped and counted.
    Titles that clean to empty are treated as missing. Raises
    CorpusFormatError with the offending line number for malformed records
    and names the id for duplicate article or document ids.
    """
    docs: list[LegalDocument] = []
    stats = ParseStats()
    seen_articles: set[str] = set()
    seen_docs: set[str] = set()

    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise CorpusFormatError(f"line {lineno}: invalid JSON: {exc}") from exc
        if not isinstance(record, dict):
            raise CorpusFormatError(f"line {lineno}: record must be a JSON object")

        doc_id = record.get("doc_id")
        if not isinstance(doc_id, str) or not doc_id:
            raise CorpusFormatError(f"line {lineno}: missing or empty doc_id")
        if doc_id in seen_docs:
            raise CorpusFormatError(f"line {lineno}: duplicate doc id {doc_id!r}")
        seen_docs.add(doc_id)

        raw_articles = record.get("articles")
        if not isinstance(raw_articles, list):
            raise CorpusFormatError(f"line {lineno}: articles must be a list")

        kept: list[Article] = []
        for raw in raw_articles:
            if not isinstance(raw, dict):
                raise CorpusFormatError(f"line {lineno}: article must be a JSON object")
            article_id = raw.get("article_id")
            if not isinstance(article_id, str) or not article_id:
                raise CorpusFormatError(f"line {lineno}: missing or empty article_id")
            if article_id in seen_articles:
                raise CorpusFormatError(
                    f"line {lineno}: duplicate article id {article_id!r}"
                )
            seen_articles.add(article_id)
            title = raw.get("title")
            if title is not None and not isinstance(title, str):
                raise CorpusFormatError(f"line {lineno}: title must be string or null")
            content = raw.get("content")
            if not isinstance(content, str):
                raise CorpusFormatError(f"line {lineno}: content must be a string")

            if not clean_text(content):
                stats.dropped_empty_content += 1
                continue
            if title is not None and not clean_text(title):
                title = None
            kept.append(Article(article_id, doc_id, title, content))
            stats.articles += 1
            if title is None:
                stats.missing_title += 1
            else:
                stats.titled += 1

        docs.append(LegalDocument(doc_id, tuple(kept)))
        stats.documents += 1

    return docs, stats


def load_corpus_file(path: str | Path) -> tuple[list[LegalDocument], ParseStats]:
    with open(path, encoding="utf-8") as handle:
        return parse_corpus(handle)


def write_corpus_file(docs: Iterable[LegalDocument], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for doc in docs:
            record = {
                "doc_id": doc.doc_id,
                "articles": [
                    {"article_id": a.article_id, "title": a.title, "content": a.content}
                    for a in doc.articles
                ],
            }
            handle.write(json.dumps(record, ensure_ascii=False, sort_keys=True) + "\n")


def iter_articles(docs: Iterable[LegalDocument]) -> Iterator[Article]:
    for doc in docs:
        yield from doc.articles
