"""Declarative pipeline configuration and runtime assembly.

A single flat config (JSON file, overridable by CLI flags) carries every
path and parameter of the phases: indexing, weak-label generation,
training, querying, evaluation and serving.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .corpus import Article, TokenizerConfig, iter_articles, load_corpus_file
from .dense import (
    DenseIndex,
    ExternalEmbedder,
    HashedProjectionEmbedder,
    load_dense_index,
)
from .ensemble import AnswerSet, EnsembleConfig, rank_and_select
from .lexical import (
    Bm25Params,
    LexIndex,
    QuickviewConfig,
    load_lex_index,
    retrieve_topk,
)
from .corpus import clean_text, tokenize
from .reranker import (
    ExternalScorer,
    FeatureExtractor,
    ModelScorer,
    TrainConfig,
    load_model,
)
from .weak_label import WeakGenConfig

__all__ = ["PipelineConfig", "Pipeline", "question_id_for"]

CONFIG_ENV_VAR = "STATUTEQA_CONFIG"


@dataclass
class PipelineConfig:
    # paths
    corpus_path: str = "corpus.jsonl"
    lex_index_path: str = "lex_index.jsonl"
    dense_index_path: str = "dense_index.jsonl"
    model_path: str = "model.json"
    weak_dataset_path: str = "weak_dataset.jsonl"
    gold_path: str = "gold_queries.jsonl"
    report_path: str = "eval_report.json"
    # lexical scoring
    k1: float = 1.2
    b: float = 0.75
    alpha: float = 1.5
    beta: float = 1.0
    # ensemble
    gamma: float = 0.5
    top_k: int = 200
    threshold: float | None = None
    quickview_source: str = "lexical"
    # tokenizer
    tokenizer_mode: str = "whitespace"
    phrase_lexicon: list[str] = field(default_factory=list)
    # embedder
    embedder_dimension: int = 300
    embedder_seed: int = 0
    external_embedder_cmd: list[str] | None = None
    external_embedder_timeout: float = 30.0
    # supervised scorer
    external_scorer_cmd: list[str] | None = None
    external_scorer_timeout: float = 30.0
    # training
    learning_rate: float = 0.1
    epochs: int = 50
    batch_size: int = 32
    train_seed: int = 0
    patience: int = 10
    # weak labels and splits
    weak_negative_ratio: int = 4
    weak_seed: int = 0
    split_ratio: float = 0.9
    split_seed: int = 0
    # service
    max_question_chars: int = 2000

    @classmethod
    def from_file(cls, path: str | Path) -> "PipelineConfig":
        with open(path, encoding="utf-8") as handle:
            raw = json.load(handle)
        if not isinstance(raw, dict):
            raise ValueError(f"{path}: config must be a JSON object")
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise ValueError(f"{path}: unknown config keys: {sorted(unknown)}")
        return cls(**raw)

    def tokenizer_config(self) -> TokenizerConfig:
        return TokenizerConfig(
            mode=self.tokenizer_mode, phrase_lexicon=frozenset(self.phrase_lexicon)
        )

    def bm25_params(self) -> Bm25Params:
        return Bm25Params(k1=self.k1, b=self.b)

    def quickview_config(self) -> QuickviewConfig:
        return QuickviewConfig(alpha=self.alpha, beta=self.beta)

    def ensemble_config(self) -> EnsembleConfig:
        return EnsembleConfig(
            gamma=self.gamma,
            top_k=self.top_k,
            threshold=self.threshold,
            quickview_source=self.quickview_source,
        )

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            learning_rate=self.learning_rate,
            epochs=self.epochs,
            batch_size=self.batch_size,
            rng_seed=self.train_seed,
            patience=self.patience,
        )

    def weak_config(self) -> WeakGenConfig:
        return WeakGenConfig(
            negative_ratio=self.weak_negative_ratio, rng_seed=self.weak_seed
        )

    def make_embedder(self):
        if self.external_embedder_cmd:
            return ExternalEmbedder(
                self.external_embedder_cmd,
                dimension=self.embedder_dimension,
                timeout=self.external_embedder_timeout,
            )
        return HashedProjectionEmbedder(
            dimension=self.embedder_dimension, seed=self.embedder_seed
        )


def question_id_for(question: str) -> str:
    """Stable id for ad-hoc questions (CLI query and HTTP answer agree)."""
    return "q" + hashlib.sha1(question.encode("utf-8")).hexdigest()[:8]


class Pipeline:
    """Loaded corpus, indexes, and scorer behind one answer() call."""

    def __init__(
        self,
        cfg: PipelineConfig,
        articles: Sequence[Article],
        lex: LexIndex,
        dense: DenseIndex,
        scorer,
    ) -> None:
        self.cfg = cfg
        self.articles = list(articles)
        self.by_id = {a.article_id: a for a in self.articles}
        self.lex = lex
        self.dense = dense
        self.scorer = scorer
        self.tok = cfg.tokenizer_config()

    @classmethod
    def load(cls, cfg: PipelineConfig) -> "Pipeline":
        docs, _ = load_corpus_file(cfg.corpus_path)
        articles = list(iter_articles(docs))
        tok = cfg.tokenizer_config()
        lex = load_lex_index(cfg.lex_index_path, expected_fingerprint=tok.fingerprint())

        if cfg.external_embedder_cmd:
            dense = load_dense_index(cfg.dense_index_path, embedder=cfg.make_embedder())
        else:
            dense = load_dense_index(
                cfg.dense_index_path,
                expected_fingerprint=cfg.make_embedder().fingerprint(),
            )

        if cfg.external_scorer_cmd:
            scorer = ExternalScorer(
                cfg.external_scorer_cmd, timeout=cfg.external_scorer_timeout
            )
        else:
            model = load_model(cfg.model_path)
            extractor = FeatureExtractor(articles, lex, dense, tok)
            scorer = ModelScorer(model, extractor)
        return cls(cfg, articles, lex, dense, scorer)

    def quickview_rank(self, question: str, k: int | None = None) -> list[tuple[str, float]]:
        tokens = tokenize(clean_text(question), self.tok)
        return retrieve_topk(
            self.lex, tokens, k or self.cfg.top_k, self.cfg.quickview_config()
        )

    def answer(
        self, question_id: str, question: str, top_k: int | None = None
    ) -> AnswerSet:
        ensemble_cfg = self.cfg.ensemble_config()
        if top_k is not None:
            ensemble_cfg = dataclasses.replace(ensemble_cfg, top_k=top_k)
        return rank_and_select(
            question_id,
            question,
            self.lex,
            self.scorer,
            self.by_id,
            ensemble_cfg,
            quickview_cfg=self.cfg.quickview_config(),
            tok=self.tok,
            dense=self.dense,
        )

    def fingerprints(self) -> dict[str, str]:
        info = {
            "tokenizer": self.lex.tokenizer_fingerprint,
            "embedder": self.dense.embedder_fingerprint,
        }
        if hasattr(self.scorer, "fingerprint"):
            info["scorer"] = self.scorer.fingerprint()
        return info

    def close(self) -> None:
        for obj in (self.scorer, self.dense.embedder):
            close = getattr(obj, "close", None)
            if callable(close):
                close()
