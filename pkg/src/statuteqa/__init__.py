"""Article-level retrieval question answering for statute-like corpora.

Two-stage pipeline: a fast lexical/dense quickview retriever proposes
candidate articles, a supervised relevance scorer reranks them, and a
thresholded score fusion selects the returned answer set. Training data
for the scorer can be enriched with weak labels derived from article
titles.
"""

__version__ = "0.1.0"
