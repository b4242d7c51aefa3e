import itertools
import math
import random

import pytest

from bm25_oracle import oracle_bm25, oracle_quickview
from conftest import field_token_lists
from statuteqa.corpus import Article, TokenizerConfig, clean_text, tokenize
from statuteqa.lexical import (
    Bm25Params,
    QuickviewConfig,
    bm25,
    build_lex_index,
    idf,
    load_lex_index,
    quickview_lex_score,
    retrieve_topk,
    save_lex_index,
)


def test_build_field_stats(tiny_lex):
    assert tiny_lex.content_stats.doc_count == 3
    assert tiny_lex.content_stats.avgdl == 7.0
    assert tiny_lex.content_stats.doc_len == {"d1#1": 8, "d1#2": 8, "d2#1": 5}
    assert tiny_lex.title_stats.doc_count == 2
    assert tiny_lex.title_stats.avgdl == 2.5
    assert "d1#2" not in tiny_lex.title_stats.doc_len  # untitled


def test_build_errors(tiny_articles):
    with pytest.raises(ValueError, match="empty corpus"):
        build_lex_index([])
    with pytest.raises(ValueError, match="duplicate"):
        build_lex_index(tiny_articles + [tiny_articles[0]])


def test_params_validation():
    with pytest.raises(ValueError):
        Bm25Params(k1=-0.1)
    with pytest.raises(ValueError):
        Bm25Params(b=1.5)
    with pytest.raises(ValueError):
        QuickviewConfig(alpha=0.0, beta=0.0)


def test_idf_frozen_values():
    # N=2 title field of the tiny fixture
    a = Article("a", "d", "shared term", "shared text here")
    b = Article("b", "d", "shared other", "different words entirely")
    index = build_lex_index([a, b])
    assert idf(index, "title", "shared") == pytest.approx(0.1823215567939546, abs=1e-12)
    assert idf(index, "title", "absent") == pytest.approx(1.791759469228055, abs=1e-12)
    single = build_lex_index([a])
    assert idf(single, "title", "shared") == pytest.approx(0.28768207245178085, abs=1e-12)


def test_bm25_trivial_cases(tiny_lex):
    assert bm25(tiny_lex, "content", ["zebra", "quark"], "d1#1") == 0.0
    assert bm25(tiny_lex, "content", [], "d1#1") == 0.0
    assert bm25(tiny_lex, "content", ["law"], "no-such-article") == 0.0


def test_bm25_frozen_value(tiny_lex):
    # idf(civil: N=3, n=1) * 2.2 / (1 + 1.2 * (0.25 + 0.75 * 5/7))
    assert bm25(tiny_lex, "content", ["civil"], "d2#1") == pytest.approx(
        1.110644889439749, abs=1e-12
    )


def test_bm25_repeated_query_token_counts_per_occurrence(tiny_lex):
    once = bm25(tiny_lex, "content", ["law"], "d1#2")
    twice = bm25(tiny_lex, "content", ["law", "law"], "d1#2")
    assert twice == pytest.approx(2 * once, abs=1e-12)


def test_bm25_matches_oracle_on_fixture(tiny_articles, tiny_lex):
    content = field_token_lists(tiny_articles, "content")
    title = field_token_lists(tiny_articles, "title")
    queries = [["civil", "law"], ["land", "registry"], ["contract"], ["the", "code"]]
    for query, article in itertools.product(queries, tiny_articles):
        for field, tokens in (("content", content), ("title", title)):
            expected = oracle_bm25(tokens, query, article.article_id)
            got = bm25(tiny_lex, field, query, article.article_id)
            assert got == pytest.approx(expected, abs=1e-9)


def _random_corpus(rng, n_articles):
    vocab = [f"w{i}" for i in range(30)]
    articles = []
    for i in range(n_articles):
        title = " ".join(rng.choices(vocab, k=rng.randint(1, 6))) if rng.random() > 0.2 else None
        content = " ".join(rng.choices(vocab, k=rng.randint(3, 40)))
        articles.append(Article(f"a{i:03d}", f"d{i // 7}", title, content))
    return articles


def test_bm25_matches_oracle_randomized():
    rng = random.Random(7)
    articles = _random_corpus(rng, 30)
    index = build_lex_index(articles)
    content = field_token_lists(articles, "content")
    title = field_token_lists(articles, "title")
    for _ in range(50):
        query = rng.choices([f"w{i}" for i in range(30)], k=rng.randint(1, 5))
        article = rng.choice(articles)
        for field, tokens in (("content", content), ("title", title)):
            expected = oracle_bm25(tokens, query, article.article_id)
            assert bm25(index, field, query, article.article_id) == pytest.approx(
                expected, abs=1e-9
            )


def test_quickview_composition(tiny_articles, tiny_lex):
    query = ["civil", "code"]
    content_only = QuickviewConfig(alpha=0.0, beta=1.0)
    assert quickview_lex_score(tiny_lex, query, "d2#1", content_only) == pytest.approx(
        bm25(tiny_lex, "content", query, "d2#1")
    )
    title_only = QuickviewConfig(alpha=1.0, beta=0.0)
    assert quickview_lex_score(tiny_lex, query, "d1#2", title_only) == 0.0  # untitled

    title = field_token_lists(tiny_articles, "title")
    content = field_token_lists(tiny_articles, "content")
    expected = oracle_quickview(title, content, query, "d2#1", alpha=1.5, beta=1.0)
    got = quickview_lex_score(tiny_lex, query, "d2#1", QuickviewConfig(1.5, 1.0))
    assert got == pytest.approx(expected, abs=1e-9)


def test_retrieve_title_match_ranks_first(tiny_lex):
    query = tokenize(clean_text("Law of Contracts"))
    ranked = retrieve_topk(tiny_lex, query, 3, QuickviewConfig(1.5, 1.0))
    assert ranked[0][0] == "d1#1"


def test_retrieve_k_larger_than_matches(tiny_lex):
    ranked = retrieve_topk(tiny_lex, ["civil"], 100)
    assert [article_id for article_id, _ in ranked] == ["d2#1"]


def test_retrieve_only_positive_scores(tiny_lex):
    assert retrieve_topk(tiny_lex, ["zebra"], 5) == []
    for _, score in retrieve_topk(tiny_lex, ["law", "zebra"], 5):
        assert score > 0.0


def test_retrieve_tie_broken_by_id():
    a = Article("b-second", "d", "same words", "identical content here")
    b = Article("a-first", "d", "same words", "identical content here")
    index = build_lex_index([a, b])
    ranked = retrieve_topk(index, ["identical"], 2)
    assert [article_id for article_id, _ in ranked] == ["a-first", "b-second"]
    assert ranked[0][1] == ranked[1][1]


def test_retrieve_prefix_property(synth):
    rng = random.Random(3)
    vocab = sorted(synth.lex.postings["content"])
    for _ in range(20):
        query = rng.sample(vocab, k=3)
        small = retrieve_topk(synth.lex, query, 5)
        large = retrieve_topk(synth.lex, query, 15)
        assert large[: len(small)] == small


def test_quickview_score_linearity(tiny_lex):
    query = ["civil", "law", "contract"]
    base = QuickviewConfig(1.5, 1.0)
    doubled = QuickviewConfig(3.0, 2.0)
    ranked = retrieve_topk(tiny_lex, query, 10, base)
    ranked2 = retrieve_topk(tiny_lex, query, 10, doubled)
    assert [a for a, _ in ranked] == [a for a, _ in ranked2]
    for (_, s1), (_, s2) in zip(ranked, ranked2):
        assert s2 == pytest.approx(2 * s1, rel=1e-12)


def test_content_monotonic_in_term_frequency(tiny_articles):
    # appending one more "law" to d1#2's content must not lower its score
    before = build_lex_index(tiny_articles)
    bumped = [
        Article(a.article_id, a.doc_id, a.title, a.content + " law")
        if a.article_id == "d1#2"
        else a
        for a in tiny_articles
    ]
    after = build_lex_index(bumped)
    assert bm25(after, "content", ["law"], "d1#2") >= bm25(
        before, "content", ["law"], "d1#2"
    )


def test_save_load_round_trip(tiny_articles, tiny_lex, tmp_path):
    path = tmp_path / "lex.jsonl"
    save_lex_index(tiny_lex, path)
    loaded = load_lex_index(path, expected_fingerprint=TokenizerConfig().fingerprint())
    query = ["civil", "law", "contracts"]
    for article in tiny_articles:
        for field in ("title", "content"):
            assert bm25(loaded, field, query, article.article_id) == bm25(
                tiny_lex, field, query, article.article_id
            )


def test_save_deterministic_bytes(tiny_lex, tmp_path):
    p1, p2 = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    save_lex_index(tiny_lex, p1)
    save_lex_index(tiny_lex, p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_load_fingerprint_mismatch(tiny_lex, tmp_path):
    path = tmp_path / "lex.jsonl"
    save_lex_index(tiny_lex, path)
    with pytest.raises(ValueError, match="fingerprint mismatch"):
        load_lex_index(path, expected_fingerprint="0000000000000000")


def test_idf_positive_and_decreasing_in_df():
    articles = [
        Article(f"a{i}", "d", None, " ".join(["common"] + [f"rare{i}"]))
        for i in range(10)
    ]
    index = build_lex_index(articles)
    assert idf(index, "content", "common") > 0
    assert idf(index, "content", "rare3") > idf(index, "content", "common")
    assert math.isclose(
        idf(index, "content", "never-seen"),
        math.log(1 + 10.5 / 0.5),
    )
