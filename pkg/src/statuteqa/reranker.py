"""Supervised relevance scoring of question/article pairs.

The baseline scorer is a logistic model over eight pipeline features
(saturated field BM25 scores, dense max-cosine, token overlaps, length
terms, bias), trained with mini-batch Adam on binary cross-entropy. The
training protocol is two-stage: pretrain on the weak-label dataset, then
fine-tune from the best pretrained weights on gold data, keeping the
weights with the lowest validation loss at each stage.

Scoring can also be delegated to an external model through a child
process line protocol: requests ``{"question", "title", "content"}``,
responses ``{"score": float in [0, 1]}`` in order.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .corpus import Article, TokenizerConfig, clean_text, tokenize
from .dense import DenseIndex, embed, quickview_dense_score
from .lexical import LexIndex, bm25
from .lineproto import LineProtocolClient, ProtocolError
from .weak_label import TrainingExample

__all__ = [
    "NUM_FEATURES",
    "FEATURE_NAMES",
    "LinearModel",
    "TrainConfig",
    "FeatureExtractor",
    "extract_features",
    "predict",
    "mean_cross_entropy",
    "cross_entropy_gradient",
    "train_stage",
    "train_two_stage",
    "ModelScorer",
    "ExternalScorer",
    "score_candidates",
    "zero_model",
    "save_model",
    "load_model",
]

NUM_FEATURES = 8
FEATURE_NAMES = (
    "title_bm25_saturated",
    "content_bm25_saturated",
    "dense_max_cosine",
    "title_jaccard",
    "content_jaccard",
    "log_question_len",
    "log_content_len",
    "bias",
)

MODEL_FORMAT = "statuteqa.model"
MODEL_VERSION = 1

_PROB_EPS = 1e-12


def _saturate(score: float) -> float:
    return score / (1.0 + score)


def _jaccard(a: set[str], b: set[str]) -> float:
    if not a and not b:
        return 0.0
    return len(a & b) / len(a | b)


def extract_features(
    question: str,
    article: Article,
    lex: LexIndex,
    dense: DenseIndex,
    tok: TokenizerConfig | None = None,
    question_vector: np.ndarray | None = None,
) -> np.ndarray:
    """Feature vector for one question/article pair.

    Raises if the article is absent from either index. A missing title
    zeroes the title features.
    """
    tok = tok or TokenizerConfig()
    q_tokens = tokenize(clean_text(question), tok)
    if article.article_id not in lex.content_stats.doc_len:
        raise ValueError(f"article {article.article_id!r} not in lexical index")
    if article.article_id not in dense.vectors:
        raise ValueError(f"article {article.article_id!r} not in dense index")
    if question_vector is None:
        if dense.embedder is None:
            raise ValueError("dense index has no runtime embedder attached")
        question_vector = embed(dense.embedder, q_tokens)

    content_tokens = tokenize(clean_text(article.content), tok)
    title_tokens = (
        tokenize(clean_text(article.title), tok) if article.title is not None else []
    )

    features = np.empty(NUM_FEATURES, dtype=np.float64)
    features[0] = _saturate(bm25(lex, "title", q_tokens, article.article_id))
    features[1] = _saturate(bm25(lex, "content", q_tokens, article.article_id))
    features[2] = quickview_dense_score(dense, question_vector, article.article_id)
    features[3] = _jaccard(set(q_tokens), set(title_tokens)) if title_tokens else 0.0
    features[4] = _jaccard(set(q_tokens), set(content_tokens))
    features[5] = math.log1p(len(q_tokens))
    features[6] = math.log1p(lex.content_stats.doc_len[article.article_id])
    features[7] = 1.0
    return features


class FeatureExtractor:
    """Feature source bound to a corpus and its indexes."""

    def __init__(
        self,
        articles: Sequence[Article],
        lex: LexIndex,
        dense: DenseIndex,
        tok: TokenizerConfig | None = None,
    ) -> None:
        self.by_id: Mapping[str, Article] = {a.article_id: a for a in articles}
        self.lex = lex
        self.dense = dense
        self.tok = tok or TokenizerConfig()
        self._question_vectors: dict[str, np.ndarray] = {}

    def question_vector(self, question: str) -> np.ndarray:
        # cache writes may race under concurrent scoring; embedding is
        # deterministic, so racing writers store identical vectors
        vec = self._question_vectors.get(question)
        if vec is None:
            if self.dense.embedder is None:
                raise ValueError("dense index has no runtime embedder attached")
            vec = embed(self.dense.embedder, tokenize(clean_text(question), self.tok))
            self._question_vectors[question] = vec
        return vec

    def features(self, question: str, article_id: str) -> np.ndarray:
        article = self.by_id.get(article_id)
        if article is None:
            raise ValueError(f"unknown article id {article_id!r}")
        return extract_features(
            question,
            article,
            self.lex,
            self.dense,
            self.tok,
            question_vector=self.question_vector(question),
        )

    def matrix(
        self, examples: Sequence[TrainingExample]
    ) -> tuple[np.ndarray, np.ndarray]:
        x = np.vstack([self.features(ex.question, ex.article_id) for ex in examples])
        y = np.asarray([ex.label for ex in examples], dtype=np.float64)
        return x, y


@dataclass(frozen=True)
class LinearModel:
    weights: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        weights = np.asarray(self.weights, dtype=np.float64)
        if weights.shape != (NUM_FEATURES,):
            raise ValueError(f"weights must have shape ({NUM_FEATURES},)")
        if not np.all(np.isfinite(weights)):
            raise ValueError("weights must be finite")
        object.__setattr__(self, "weights", weights)


def zero_model() -> LinearModel:
    return LinearModel(np.zeros(NUM_FEATURES))


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.1
    epochs: int = 50
    batch_size: int = 32
    rng_seed: int = 0
    patience: int = 10  # early-stop patience on validation loss
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8

    def __post_init__(self) -> None:
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.patience < 1:
            raise ValueError("patience must be >= 1")


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def predict(model: LinearModel, features: np.ndarray) -> float:
    """Relevance probability sigmoid(w . f), clamped to the open unit interval."""
    z = float(np.dot(model.weights, features))
    p = 1.0 / (1.0 + math.exp(-z)) if z >= 0 else math.exp(z) / (1.0 + math.exp(z))
    return min(max(p, _PROB_EPS), 1.0 - _PROB_EPS)


def mean_cross_entropy(weights: np.ndarray, x: np.ndarray, y: np.ndarray) -> float:
    """Mean binary cross-entropy computed from logits: softplus(z) - y*z."""
    z = x @ weights
    return float(np.mean(np.logaddexp(0.0, z) - y * z))


def cross_entropy_gradient(
    weights: np.ndarray, x: np.ndarray, y: np.ndarray
) -> np.ndarray:
    z = x @ weights
    return x.T @ (_sigmoid(z) - y) / len(y)


def train_stage(
    model: LinearModel,
    data: Sequence[TrainingExample],
    valid: Sequence[TrainingExample],
    cfg: TrainConfig,
    extractor: FeatureExtractor,
    stage: str = "single",
) -> LinearModel:
    """Mini-batch Adam on mean cross-entropy, starting from ``model``.

    Keeps the weights with the best validation loss; an empty validation
    set disables early stopping and returns the final weights. Training is
    deterministic given the seed.
    """
    if not data:
        raise ValueError("training data is empty")
    x, y = extractor.matrix(data)
    xv, yv = (extractor.matrix(valid)) if valid else (None, None)

    weights = model.weights.copy()
    m = np.zeros_like(weights)
    v = np.zeros_like(weights)
    step = 0
    rng = np.random.default_rng(cfg.rng_seed)

    loss_curve = [mean_cross_entropy(weights, x, y)]
    val_curve: list[float] = []
    best_weights = weights.copy()
    best_val = math.inf
    bad_epochs = 0
    epochs_run = 0

    if xv is not None:
        best_val = mean_cross_entropy(weights, xv, yv)
        val_curve.append(best_val)

    for _ in range(cfg.epochs):
        order = rng.permutation(len(y))
        for start in range(0, len(y), cfg.batch_size):
            batch = order[start : start + cfg.batch_size]
            grad = cross_entropy_gradient(weights, x[batch], y[batch])
            step += 1
            m = cfg.adam_beta1 * m + (1.0 - cfg.adam_beta1) * grad
            v = cfg.adam_beta2 * v + (1.0 - cfg.adam_beta2) * grad * grad
            m_hat = m / (1.0 - cfg.adam_beta1**step)
            v_hat = v / (1.0 - cfg.adam_beta2**step)
            weights -= cfg.learning_rate * m_hat / (np.sqrt(v_hat) + cfg.adam_eps)
        epochs_run += 1

        train_loss = mean_cross_entropy(weights, x, y)
        if not math.isfinite(train_loss):
            raise ValueError("diverged: non-finite training loss")
        loss_curve.append(train_loss)

        if xv is not None:
            val_loss = mean_cross_entropy(weights, xv, yv)
            val_curve.append(val_loss)
            if val_loss < best_val:
                best_val = val_loss
                best_weights = weights.copy()
                bad_epochs = 0
            else:
                bad_epochs += 1
                if bad_epochs >= cfg.patience:
                    break
        else:
            best_weights = weights

    metadata = {
        "stage": stage,
        "epochs_run": epochs_run,
        "seed": cfg.rng_seed,
        "learning_rate": cfg.learning_rate,
        "batch_size": cfg.batch_size,
        "initial_weights": model.weights.tolist(),
        "loss_curve": loss_curve,
        "val_loss_curve": val_curve,
        "best_val_loss": None if xv is None else best_val,
    }
    return LinearModel(best_weights.copy(), metadata)


def train_two_stage(
    weak: Sequence[TrainingExample],
    gold: Sequence[TrainingExample],
    valid: Sequence[TrainingExample],
    cfg: TrainConfig,
    extractor: FeatureExtractor,
) -> LinearModel:
    """Weak pretraining from zero weights, then gold fine-tuning from the
    best pretrained weights."""
    if not weak:
        raise ValueError("weak dataset is empty")
    if not gold:
        raise ValueError("gold dataset is empty")
    pretrained = train_stage(
        zero_model(), weak, valid, cfg, extractor, stage="weak_pretrain"
    )
    tuned = train_stage(pretrained, gold, valid, cfg, extractor, stage="gold_finetune")
    metadata = dict(tuned.metadata)
    metadata["stage"] = "two_stage"
    metadata["stages"] = [pretrained.metadata, tuned.metadata]
    return LinearModel(tuned.weights, metadata)


class ModelScorer:
    """Scores candidates with a trained linear model over extracted features."""

    def __init__(self, model: LinearModel, extractor: FeatureExtractor) -> None:
        self.model = model
        self.extractor = extractor

    def fingerprint(self) -> str:
        digest = hashlib.sha256(self.model.weights.tobytes()).hexdigest()[:16]
        return f"linear:{digest}"

    def score_batch(self, question: str, candidates: Sequence[Article]) -> list[float]:
        return [
            predict(self.model, self.extractor.features(question, a.article_id))
            for a in candidates
        ]


class ExternalScorer:
    """Scorer backed by a child process speaking the line protocol."""

    def __init__(
        self, command: Sequence[str], timeout: float = 30.0, name: str | None = None
    ) -> None:
        self._name = name or " ".join(command)
        self._client = LineProtocolClient(command, timeout=timeout)

    def fingerprint(self) -> str:
        return "external:" + hashlib.sha256(self._name.encode()).hexdigest()[:16]

    def score_batch(self, question: str, candidates: Sequence[Article]) -> list[float]:
        requests = [
            {"question": question, "title": a.title, "content": a.content}
            for a in candidates
        ]
        batch_ids = [a.article_id for a in candidates]
        try:
            responses = self._client.call(requests)
        except ProtocolError as exc:
            raise ProtocolError(
                f"external scorer failed on candidate batch {batch_ids}: {exc}"
            ) from exc
        scores = []
        for response in responses:
            score = response.get("score")
            if not isinstance(score, (int, float)) or not 0.0 <= float(score) <= 1.0:
                raise ProtocolError(
                    f"external scorer sent a malformed score for batch {batch_ids}: "
                    f"{response!r}"
                )
            scores.append(float(score))
        return scores

    def close(self) -> None:
        self._client.close()

    def __enter__(self) -> "ExternalScorer":
        return self

    def __exit__(self, *exc: object) -> None:
        self.close()


def score_candidates(
    scorer: ModelScorer | ExternalScorer,
    question: str,
    candidates: Sequence[Article],
) -> list[tuple[str, float]]:
    """One supervised score per candidate, input order preserved."""
    if not candidates:
        raise ValueError("candidates must be non-empty")
    scores = scorer.score_batch(question, candidates)
    return list(zip((a.article_id for a in candidates), scores))


def save_model(model: LinearModel, path: str | Path) -> None:
    payload = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "weights": model.weights.tolist(),
        "feature_names": list(FEATURE_NAMES),
        "metadata": model.metadata,
    }
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(payload, handle, sort_keys=True, indent=2)
        handle.write("\n")


def load_model(path: str | Path) -> LinearModel:
    with open(path, encoding="utf-8") as handle:
        payload = json.load(handle)
    if payload.get("format") != MODEL_FORMAT:
        raise ValueError(f"{path}: not a model file")
    return LinearModel(np.asarray(payload["weights"]), payload.get("metadata", {}))
