"""Synthetic statute corpora for experiments and fixtures.

Every generated article carries two topic tokens that occur nowhere else
in the corpus, embedded in shared legal boilerplate. Titles summarize
their article, so title-derived queries have a unique lexical anchor and
weak labels behave the way real statute titles do.
"""

from __future__ import annotations

import random

from .corpus import Article, LegalDocument
from .evaluation import GoldQuery

__all__ = [
    "synthetic_corpus",
    "synthetic_family_corpus",
    "title_gold_queries",
    "paraphrase_gold_queries",
    "family_mixed_queries",
]

_SYLLABLES = (
    "ba", "cor", "dan", "fel", "gor", "hin", "jol", "kam", "lun", "mor",
    "nel", "pra", "quil", "ros", "sil", "tor", "ung", "vex", "wom", "zet",
)

_COMMON = (
    "regulation", "duties", "contract", "liability", "registration",
    "penalty", "procedure", "rights", "obligations", "permits",
)

_FILLER_SENTENCES = (
    "The competent authority supervises compliance with this provision",
    "Violations are subject to the general penalty regime",
    "The parties may agree otherwise where the law allows",
    "Implementation guidance is issued by decree",
)

# content-only noise overlapping typical question wording
_CONTENT_FILLER = (
    "General rules apply to such cases",
    "The authority handles disputes in these matters",
    "Such cases are handled by the competent court",
    "These rules apply unless otherwise provided",
    "Matters of this kind are handled on application",
    "What applies here is determined case by case",
    "Provisions on how such matters are handled apply",
    "Rules governing these cases apply in full",
)


def _topic_word(index: int) -> str:
    base = len(_SYLLABLES)
    parts = []
    value = index
    for _ in range(3):
        parts.append(_SYLLABLES[value % base])
        value //= base
    return "".join(parts)


def synthetic_corpus(
    n_articles: int = 100,
    seed: int = 0,
    articles_per_doc: int = 10,
    missing_title_every: int | None = 10,
) -> list[LegalDocument]:
    """Deterministic corpus of ``n_articles`` articles grouped into documents.

    Every ``missing_title_every``-th article has no title (None disables).
    """
    if n_articles < 1:
        raise ValueError("n_articles must be >= 1")
    rng = random.Random(seed)
    docs: list[LegalDocument] = []
    articles: list[Article] = []
    doc_index = 0

    for i in range(n_articles):
        topic_a = _topic_word(2 * i)
        topic_b = _topic_word(2 * i + 1)
        common = _COMMON[i % len(_COMMON)]
        title: str | None = f"{common.capitalize()} of {topic_a} {topic_b} activities"
        if missing_title_every and (i + 1) % missing_title_every == 0:
            title = None

        sentences = [
            f"The {topic_a} {topic_b} {common} must be registered with the authority",
            f"Any change to a {topic_a} arrangement requires prior notice",
            f"Breaching {topic_b} requirements leads to suspension of the {common}",
        ]
        n_filler = rng.randint(1, 2)
        sentences.extend(rng.sample(_FILLER_SENTENCES, n_filler))
        content = ". ".join(sentences) + "."

        doc_id = f"{90 + doc_index}/2015/QH13"
        article_id = f"{doc_id}#{i + 1}"
        articles.append(Article(article_id, doc_id, title, content))

        if len(articles) == articles_per_doc or i == n_articles - 1:
            docs.append(LegalDocument(doc_id, tuple(articles)))
            articles = []
            doc_index += 1

    return docs


def synthetic_family_corpus(
    n_families: int = 12, members_per_family: int = 4
) -> list[LegalDocument]:
    """Corpus of topic families: siblings share a family token, each article
    adds its own specific token.

    Queries mentioning both tokens make the siblings competitive
    candidates, so ranking quality (not just retrieval) separates good
    scorers from bad ones.
    """
    if n_families < 1 or members_per_family < 1:
        raise ValueError("need at least one family with one member")
    docs: list[LegalDocument] = []
    index = 0
    for fam in range(n_families):
        family_tok = "fam" + _topic_word(fam)
        doc_id = f"{90 + fam}/2015/QH13"
        specifics = [
            "spc" + _topic_word(index + m) for m in range(members_per_family)
        ]
        articles = []
        for m, specific in enumerate(specifics):
            n = index + m
            common = _COMMON[n % len(_COMMON)]
            # cross-reference a sibling, the way statute clauses do
            sibling = specifics[(m + 1) % len(specifics)]
            filler = " ".join(
                _CONTENT_FILLER[(n + j) % len(_CONTENT_FILLER)] + "."
                for j in range(2 + n % 3)
            )
            title = f"{common.capitalize()} of {family_tok} {specific} activities"
            content = (
                f"The {family_tok} {specific} {common} must be registered with the"
                f" authority. Any {family_tok} arrangement requires prior notice."
                f" Breaching {specific} requirements leads to suspension,"
                f" notwithstanding the {sibling} provisions. {filler}"
            )
            articles.append(Article(f"{doc_id}#{n + 1}", doc_id, title, content))
        index += members_per_family
        docs.append(LegalDocument(doc_id, tuple(articles)))
    return docs


def _titled_articles(docs: list[LegalDocument]) -> list[Article]:
    return [a for doc in docs for a in doc.articles if a.title]


def title_gold_queries(docs: list[LegalDocument]) -> list[GoldQuery]:
    """One query per titled article, the question being the verbatim title."""
    return [
        GoldQuery(f"q{i:04d}", article.title, frozenset({article.article_id}))
        for i, article in enumerate(_titled_articles(docs))
    ]


def paraphrase_gold_queries(docs: list[LegalDocument], seed: int = 0) -> list[GoldQuery]:
    """Title paraphrases: keep the topic tokens, rephrase the rest."""
    rng = random.Random(seed)
    templates = (
        "what rules apply to {a} {b} cases",
        "how is a {a} {b} situation handled",
        "which provisions govern {a} and {b}",
        "when does {a} {b} conduct become unlawful",
    )
    queries = []
    for i, article in enumerate(_titled_articles(docs)):
        words = article.title.split()
        # topic tokens sit at positions 2 and 3 of the generated titles
        topic_a, topic_b = words[2], words[3]
        template = templates[rng.randrange(len(templates))]
        question = template.format(a=topic_a, b=topic_b)
        queries.append(GoldQuery(f"q{i:04d}", question, frozenset({article.article_id})))
    return queries


def family_mixed_queries(
    docs: list[LegalDocument], seed: int = 0, family_only_rate: float = 0.4
) -> list[GoldQuery]:
    """Queries over a family corpus, a fraction of them ambiguous.

    Specific queries name one article (singleton gold set); family-only
    queries name just the shared family token and every sibling is gold.
    """
    rng = random.Random(seed)
    by_family: dict[str, list[Article]] = {}
    for article in _titled_articles(docs):
        family_tok = article.title.split()[2]
        by_family.setdefault(family_tok, []).append(article)

    queries = []
    counter = 0
    for family_tok, members in by_family.items():
        for article in members:
            specific = article.title.split()[3]
            if rng.random() < family_only_rate:
                question = f"what rules apply to {family_tok} matters"
                gold = frozenset(m.article_id for m in members)
            else:
                question = f"how is a {family_tok} {specific} case handled"
                gold = frozenset({article.article_id})
            queries.append(GoldQuery(f"q{counter:04d}", question, gold))
            counter += 1
    return queries
