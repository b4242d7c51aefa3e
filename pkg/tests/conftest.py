import sys
from pathlib import Path

import pytest

from statuteqa.corpus import Article, TokenizerConfig, clean_text, iter_articles, tokenize
from statuteqa.dense import HashedProjectionEmbedder, build_dense_index
from statuteqa.lexical import build_lex_index
from statuteqa.reranker import FeatureExtractor, ModelScorer, TrainConfig, train_two_stage
from statuteqa.synth import synthetic_corpus, title_gold_queries
from statuteqa.weak_label import WeakGenConfig, generate_gold_examples, generate_weak_dataset

sys.path.insert(0, str(Path(__file__).parent))

SCRIPTS_DIR = Path(__file__).resolve().parent.parent / "scripts"

# Hand-counted fixture: content token counts 8, 8, 5 (avgdl 7.0); titles on
# a1 (3 tokens) and a3 (2 tokens) only.
TINY_ARTICLES = (
    Article("d1#1", "d1", "Law of Contracts",
            "A contract binds two parties. Breach causes damages."),
    Article("d1#2", "d1", None,
            "Property law governs land. Land registry records titles."),
    Article("d2#1", "d2", "Civil Code",
            "The civil code defines obligations."),
)


@pytest.fixture(scope="session")
def tiny_articles():
    return list(TINY_ARTICLES)


@pytest.fixture(scope="session")
def tiny_lex(tiny_articles):
    return build_lex_index(tiny_articles, TokenizerConfig())


def field_token_lists(articles, field):
    """Raw token lists per article for the oracle, bypassing the index."""
    tok = TokenizerConfig()
    out = {}
    for a in articles:
        text = a.title if field == "title" else a.content
        out[a.article_id] = tokenize(clean_text(text), tok) if text else []
    return out


@pytest.fixture(scope="session")
def scripts_dir():
    return SCRIPTS_DIR


class SynthBundle:
    """Synthetic 100-article corpus with built indexes and a trained model."""

    def __init__(self):
        self.docs = synthetic_corpus(100, seed=0)
        self.articles = list(iter_articles(self.docs))
        self.by_id = {a.article_id: a for a in self.articles}
        self.tok = TokenizerConfig()
        self.lex = build_lex_index(self.articles, self.tok)
        self.embedder = HashedProjectionEmbedder(dimension=128, seed=0)
        self.dense, _ = build_dense_index(self.articles, self.embedder, self.tok)
        self.extractor = FeatureExtractor(self.articles, self.lex, self.dense, self.tok)
        self.queries = title_gold_queries(self.docs)
        self.weak = generate_weak_dataset(self.articles, WeakGenConfig(4, 0))

        train_q = self.queries[:80]
        valid_q = self.queries[80:]
        gold_train = generate_gold_examples(
            [(q.question, sorted(q.gold_article_ids)) for q in train_q],
            self.articles, WeakGenConfig(4, 1),
        )
        gold_valid = generate_gold_examples(
            [(q.question, sorted(q.gold_article_ids)) for q in valid_q],
            self.articles, WeakGenConfig(4, 2),
        )
        self.model = train_two_stage(
            self.weak, gold_train, gold_valid,
            TrainConfig(epochs=30, rng_seed=0), self.extractor,
        )
        self.scorer = ModelScorer(self.model, self.extractor)


@pytest.fixture(scope="session")
def synth():
    return SynthBundle()
