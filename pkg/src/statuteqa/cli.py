"""Command-line entry point for the pipeline phases.

Subcommands: ``index``, ``weaklabel``, ``train``, ``query``, ``eval``,
``serve``. Parameters come from a JSON config file (``--config`` or the
STATUTEQA_CONFIG environment variable) with per-flag overrides; flags win.
Exit codes: 0 success, 1 runtime failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import contextlib
import dataclasses
import os
import sys
from pathlib import Path

from . import server as server_mod
from .corpus import clean_text, iter_articles, load_corpus_file, tokenize
from .dense import build_dense_index, load_dense_index, save_dense_index
from .ensemble import answer_set_to_json
from .evaluation import load_gold_file, run_eval, save_report, split_train_valid
from .lexical import build_lex_index, load_lex_index, retrieve_topk, save_lex_index
from .pipeline import CONFIG_ENV_VAR, Pipeline, PipelineConfig, question_id_for
from .reranker import (
    FeatureExtractor,
    save_model,
    train_stage,
    train_two_stage,
    zero_model,
)
from .weak_label import (
    dataset_stats,
    generate_gold_examples,
    generate_weak_dataset,
    read_dataset,
    write_dataset,
)

LOCK_FILE_NAME = ".statuteqa.lock"


@contextlib.contextmanager
def _exclusive_lock(directory: Path):
    """index/train are exclusive single-process operations."""
    directory.mkdir(parents=True, exist_ok=True)
    lock_path = directory / LOCK_FILE_NAME
    try:
        fd = os.open(lock_path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        raise RuntimeError(
            f"lock file {lock_path} exists; another index/train run may be active"
        ) from None
    try:
        os.write(fd, str(os.getpid()).encode())
        os.close(fd)
        yield
    finally:
        os.unlink(lock_path)


def _load_config(args: argparse.Namespace) -> PipelineConfig:
    path = args.config or os.environ.get(CONFIG_ENV_VAR)
    cfg = PipelineConfig.from_file(path) if path else PipelineConfig()
    overrides = {}
    for field in dataclasses.fields(PipelineConfig):
        value = getattr(args, field.name, None)
        if value is not None:
            overrides[field.name] = value
    return dataclasses.replace(cfg, **overrides) if overrides else cfg


def _add_override(parser: argparse.ArgumentParser, *names: str) -> None:
    types = {f.name: f.type for f in dataclasses.fields(PipelineConfig)}
    casts = {"float | None": float, "float": float, "int": int, "str": str}
    for name in names:
        flag = "--" + name.replace("_", "-")
        parser.add_argument(flag, dest=name, type=casts[types[name]], default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="statuteqa",
        description="Article-level retrieval question answering over statute corpora.",
    )
    parser.add_argument("--config", help="JSON pipeline config file")
    sub = parser.add_subparsers(dest="command", required=True)

    p_index = sub.add_parser("index", help="build the lexical and dense indexes")
    _add_override(
        p_index,
        "corpus_path", "lex_index_path", "dense_index_path",
        "k1", "b", "embedder_dimension", "embedder_seed", "tokenizer_mode",
    )

    p_weak = sub.add_parser("weaklabel", help="generate the weak-label dataset")
    _add_override(p_weak, "corpus_path", "weak_dataset_path", "weak_negative_ratio")
    p_weak.add_argument("--seed", dest="weak_seed", type=int, default=None)

    p_train = sub.add_parser("train", help="train the supervised scorer")
    _add_override(
        p_train,
        "corpus_path", "lex_index_path", "dense_index_path", "model_path",
        "weak_dataset_path", "gold_path",
        "learning_rate", "epochs", "batch_size", "patience",
        "weak_negative_ratio", "split_ratio",
    )
    p_train.add_argument("--seed", dest="train_seed", type=int, default=None)
    p_train.add_argument("--weak-seed", dest="weak_seed", type=int, default=None)
    p_train.add_argument("--split-seed", dest="split_seed", type=int, default=None)
    p_train.add_argument(
        "--mode",
        choices=("two-stage", "gold-only", "weak-only"),
        default="two-stage",
    )

    p_query = sub.add_parser("query", help="answer one question or run a REPL")
    _add_override(
        p_query,
        "corpus_path", "lex_index_path", "dense_index_path", "model_path",
        "alpha", "beta", "gamma", "threshold",
    )
    p_query.add_argument("--question", help="one-shot question (otherwise interactive)")
    p_query.add_argument("--k", type=int, default=None, help="candidate list size")
    p_query.add_argument("--json", action="store_true", help="print result JSON lines")

    p_eval = sub.add_parser("eval", help="evaluate quickview and/or end-to-end")
    _add_override(
        p_eval,
        "corpus_path", "lex_index_path", "dense_index_path", "model_path",
        "gold_path", "report_path",
        "alpha", "beta", "gamma", "threshold", "top_k",
    )
    p_eval.add_argument("--quickview", action="store_true", help="quickview recall only")
    p_eval.add_argument("--end-to-end", action="store_true", help="answer-set metrics only")
    p_eval.add_argument("--k", default="50,100,200", help="comma-separated recall cutoffs")

    p_serve = sub.add_parser("serve", help="HTTP query service")
    _add_override(
        p_serve,
        "corpus_path", "lex_index_path", "dense_index_path", "model_path",
        "max_question_chars",
    )
    p_serve.add_argument("--bind", default="127.0.0.1:8080")

    return parser


def _cmd_index(cfg: PipelineConfig) -> int:
    docs, stats = load_corpus_file(cfg.corpus_path)
    articles = list(iter_articles(docs))
    tok = cfg.tokenizer_config()
    with _exclusive_lock(Path(cfg.lex_index_path).resolve().parent):
        lex = build_lex_index(articles, tok, cfg.bm25_params())
        save_lex_index(lex, cfg.lex_index_path)
        embedder = cfg.make_embedder()
        dense, excluded = build_dense_index(articles, embedder, tok)
        save_dense_index(dense, cfg.dense_index_path)
    print(
        f"indexed {stats.documents} documents, {stats.articles} articles "
        f"({stats.titled} titled, {stats.missing_title} untitled, "
        f"{stats.dropped_empty_content} dropped empty)"
    )
    print(f"lexical index: {cfg.lex_index_path} (tokenizer {tok.fingerprint()})")
    print(
        f"dense index: {cfg.dense_index_path} "
        f"(embedder {dense.embedder_fingerprint}, {excluded} articles without sentences)"
    )
    return 0


def _cmd_weaklabel(cfg: PipelineConfig) -> int:
    docs, _ = load_corpus_file(cfg.corpus_path)
    articles = list(iter_articles(docs))
    examples = generate_weak_dataset(articles, cfg.weak_config())
    write_dataset(examples, cfg.weak_dataset_path)
    stats = dataset_stats(examples)
    print(
        f"wrote {stats.total} examples ({stats.positives} positive, "
        f"{stats.negatives} negative, ratio {stats.ratio:.1f}, "
        f"{stats.duplicate_pairs} duplicate pairs) to {cfg.weak_dataset_path}"
    )
    return 0


def _cmd_train(cfg: PipelineConfig, mode: str) -> int:
    docs, _ = load_corpus_file(cfg.corpus_path)
    articles = list(iter_articles(docs))
    tok = cfg.tokenizer_config()
    lex = load_lex_index(cfg.lex_index_path, expected_fingerprint=tok.fingerprint())
    dense = load_dense_index(
        cfg.dense_index_path, expected_fingerprint=cfg.make_embedder().fingerprint()
    )
    extractor = FeatureExtractor(articles, lex, dense, tok)

    gold_queries = load_gold_file(cfg.gold_path)
    train_queries, valid_queries = split_train_valid(
        gold_queries, cfg.split_ratio, cfg.split_seed
    )
    weak_cfg = cfg.weak_config()
    gold_train = generate_gold_examples(
        [(q.question, sorted(q.gold_article_ids)) for q in train_queries],
        articles,
        weak_cfg,
    )
    gold_valid = generate_gold_examples(
        [(q.question, sorted(q.gold_article_ids)) for q in valid_queries],
        articles,
        dataclasses.replace(weak_cfg, rng_seed=weak_cfg.rng_seed + 1),
    )

    train_cfg = cfg.train_config()
    with _exclusive_lock(Path(cfg.model_path).resolve().parent):
        if mode == "two-stage":
            weak = read_dataset(cfg.weak_dataset_path)
            model = train_two_stage(weak, gold_train, gold_valid, train_cfg, extractor)
        elif mode == "weak-only":
            weak = read_dataset(cfg.weak_dataset_path)
            model = train_stage(
                zero_model(), weak, gold_valid, train_cfg, extractor, stage="weak_only"
            )
        else:
            model = train_stage(
                zero_model(), gold_train, gold_valid, train_cfg, extractor,
                stage="gold_only",
            )
        save_model(model, cfg.model_path)

    best = model.metadata.get("best_val_loss")
    best_text = f"{best:.4f}" if isinstance(best, float) else "n/a"
    print(
        f"trained {mode} model on {len(gold_train)} gold examples "
        f"(validation loss {best_text}); saved to {cfg.model_path}"
    )
    return 0


def _cmd_query(cfg: PipelineConfig, args: argparse.Namespace) -> int:
    pipeline = Pipeline.load(cfg)
    try:
        if args.question is not None:
            _answer_one(pipeline, args.question, args.k, args.json)
            return 0
        for line in sys.stdin:
            question = line.strip()
            if not question:
                continue
            _answer_one(pipeline, question, args.k, args.json)
        return 0
    finally:
        pipeline.close()


def _answer_one(
    pipeline: Pipeline, question: str, top_k: int | None, as_json: bool
) -> None:
    answer = pipeline.answer(question_id_for(question), question, top_k=top_k)
    if as_json:
        print(answer_set_to_json(answer))
        return
    if answer.no_candidates:
        print("(no candidates)")
        return
    for candidate in answer.returned:
        print(
            f"{candidate.article_id}\tcombined={candidate.combined:.6f}"
            f"\tqs={candidate.qs_norm:.6f}\tss={candidate.ss_norm:.6f}"
        )


def _cmd_eval(cfg: PipelineConfig, args: argparse.Namespace) -> int:
    try:
        ks = sorted({int(part) for part in args.k.split(",") if part.strip()})
    except ValueError:
        print(f"invalid --k list: {args.k!r}", file=sys.stderr)
        return 2
    do_quickview = args.quickview or not args.end_to_end
    do_end_to_end = args.end_to_end or not args.quickview

    queries = load_gold_file(cfg.gold_path)
    if do_end_to_end:
        pipeline = Pipeline.load(cfg)
        answer = pipeline.answer
        quickview = (
            (lambda q: pipeline.quickview_rank(q, max(ks))) if do_quickview else None
        )
    else:
        # quickview-only evaluation does not need the trained model
        tok = cfg.tokenizer_config()
        lex = load_lex_index(cfg.lex_index_path, expected_fingerprint=tok.fingerprint())

        def quickview(question: str):
            tokens = tokenize(clean_text(question), tok)
            return retrieve_topk(lex, tokens, max(ks), cfg.quickview_config())

        answer = None
        pipeline = None

    try:
        report = run_eval(
            queries,
            ks=ks if do_quickview else (),
            quickview_rank=quickview,
            answer=answer,
        )
    finally:
        if pipeline is not None:
            pipeline.close()

    for k in ks if do_quickview else []:
        print(f"Recall@{k}: {report.recall_at_k[k]:.4f}")
    if do_end_to_end:
        print(f"Precision: {report.mean_precision:.4f}")
        print(f"Recall: {report.mean_recall:.4f}")
        print(f"F2: {report.f2:.4f}")
    print(f"Mean latency: {report.mean_latency_ms:.2f} ms over {report.queries} queries")
    save_report(report, cfg.report_path)
    print(f"report written to {cfg.report_path}")
    if report.failures:
        print(f"{report.failures} queries failed", file=sys.stderr)
        return 1
    return 0


def _cmd_serve(cfg: PipelineConfig, bind: str) -> int:
    pipeline = Pipeline.load(cfg)
    try:
        print(f"serving on http://{bind}  (GET /answer?q=...&k=..., GET /healthz)")
        server_mod.serve(pipeline, bind)
    finally:
        pipeline.close()
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    cfg = _load_config(args)
    try:
        if args.command == "index":
            return _cmd_index(cfg)
        if args.command == "weaklabel":
            return _cmd_weaklabel(cfg)
        if args.command == "train":
            return _cmd_train(cfg, args.mode)
        if args.command == "query":
            return _cmd_query(cfg, args)
        if args.command == "eval":
            return _cmd_eval(cfg, args)
        if args.command == "serve":
            return _cmd_serve(cfg, args.bind)
        parser.error(f"unknown command {args.command!r}")
    except (OSError, ValueError, KeyError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 2


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
