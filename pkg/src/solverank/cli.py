"""Command-line interface: every pipeline stage as a reproducible command.

Exit codes: 0 success, 1 usage error, 2 data error, 3 client or runner
failure.  Logs go to standard error; data goes to files and standard
output.  ``--config FILE`` supplies defaults (INI sections, ``section.key``)
that individual flags override; ``--seed`` and ``--jobs`` work everywhere.

Environment: SOLVERANK_API_KEY authenticates the HTTP client;
SOLVERANK_CACHE, when set, caches every prompt/reply pair on disk keyed by
(model, prompt) hash, making synth and rag runs resumable.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from solverank import __version__
from solverank.clients import (
    CachingClient,
    ConstClient,
    HttpTextClient,
    ParaphraseClient,
    ReplayClient,
    TextClient,
)
from solverank.config import RunConfig, artifact_meta, resolve
from solverank.errors import ClientError, DataError, RunnerError, SolveRankError

log = logging.getLogger("solverank")

CACHE_ENV = "SOLVERANK_CACHE"

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_CLIENT = 3


class _Parser(argparse.ArgumentParser):
    """argparse defaults to exit code 2 on usage errors; the contract is 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _require_paths(*pairs: tuple[str, str | None]) -> None:
    for label, path in pairs:
        if path is None:
            raise DataError(f"missing required path: {label}")
        if not Path(path).exists():
            raise DataError(f"{label} path does not exist: {path}")


def make_client(spec: str | None, temperature: float = 1.0, model: str | None = None) -> TextClient:
    """Build a client from "kind:arg" (http:URL, replay:DIR, const:FILE,
    paraphrase:DICTJSON); SOLVERANK_CACHE wraps it with a reply cache."""
    if spec is None:
        raise DataError("no client configured (use --gen-client/--judge-client or config)")
    kind, _, arg = spec.partition(":")
    if kind == "http":
        if not arg:
            raise DataError("http client needs an endpoint URL (http:https://...)")
        client: TextClient = HttpTextClient(arg, model=model or "default", temperature=temperature)
    elif kind == "replay":
        _require_paths(("replay directory", arg))
        client = ReplayClient(arg, model=model or "replay")
    elif kind == "const":
        _require_paths(("const reply file", arg))
        client = ConstClient(Path(arg).read_text("utf-8"), model=model or "const")
    elif kind == "paraphrase":
        _require_paths(("substitution dictionary", arg))
        with open(arg, encoding="utf-8") as fh:
            client = ParaphraseClient(json.load(fh), model=model or "paraphrase")
    else:
        raise DataError(f"unknown client kind {kind!r}")
    cache_dir = os.environ.get(CACHE_ENV)
    if cache_dir:
        client = CachingClient(client, cache_dir)
    return client


def _template_override(cfg: RunConfig, key: str) -> str | None:
    """Prompt templates are overridable via config keys pointing at files
    (prompts.generate, prompts.verify, prompts.codegen)."""
    template_path = cfg.get(key)
    if template_path is None:
        return None
    _require_paths((key, template_path))
    return Path(template_path).read_text("utf-8")


def _emit_json(payload: dict, out: str | None) -> None:
    text = json.dumps(payload, sort_keys=True, indent=2) + "\n"
    if out:
        from solverank.util import atomic_write_text

        atomic_write_text(out, text)
    else:
        sys.stdout.write(text)


def _load_docs(corpus_path: str | None, synth_path: str | None, label: str = "documents"):
    """A document pool: a corpus file, a synthetic dataset (verified
    variants as pseudo-problems), or the union of both (variants plus the
    original problems as distractors)."""
    from solverank.corpus import Corpus, load_corpus
    from solverank.synth import corpus_from_variants, load_synthetic

    if corpus_path is None and synth_path is None:
        raise DataError(f"--corpus and/or --synth must define the {label}")
    pools = []
    if synth_path is not None:
        _require_paths(("synthetic dataset", synth_path))
        pools.append(corpus_from_variants(load_synthetic(synth_path)))
    if corpus_path is not None:
        _require_paths(("corpus", corpus_path))
        pools.append(load_corpus(corpus_path))
    if len(pools) == 1:
        return pools[0]
    return Corpus([p for pool in pools for p in pool])


# ---------------------------------------------------------------- commands


def cmd_ingest(args, cfg: RunConfig) -> int:
    from solverank.corpus import load_corpus, split_by_difficulty

    _require_paths(("corpus", args.corpus))
    strict = not args.lenient
    corpus = load_corpus(args.corpus, strict=strict)
    easy, medium, hard = split_by_difficulty(corpus)
    effective = {"corpus": args.corpus, "strict": strict}
    payload = {
        "problems": len(corpus),
        "skipped_lines": corpus.skipped_lines,
        "difficulty_bins": {"easy": len(easy), "medium": len(medium), "hard": len(hard)},
        "meta": artifact_meta("ingest", effective, args.seed),
    }
    _emit_json(payload, args.out)
    return EXIT_OK


def cmd_synth(args, cfg: RunConfig) -> int:
    from solverank.corpus import load_corpus
    from solverank.evalrank import build_qrels, save_qrels
    from solverank.synth import save_synthetic, synthesize_dataset

    if not args.out:
        raise DataError("--out is required for this command")
    _require_paths(("corpus", args.corpus))
    corpus = load_corpus(args.corpus)
    temperature = resolve(args.temperature, cfg, "client.temperature", 1.0, float)
    gen = make_client(args.gen_client or cfg.get("client.gen"), temperature, args.model)
    judge = make_client(args.judge_client or cfg.get("client.judge"), 0.0, args.model)
    gen_template = _template_override(cfg, "prompts.generate")
    verify_template = _template_override(cfg, "prompts.verify")
    synth = synthesize_dataset(
        corpus,
        gen,
        judge,
        seed=args.seed,
        jobs=args.jobs,
        gen_template=gen_template,
        verify_template=verify_template,
    )
    effective = {
        "corpus": args.corpus,
        "gen": gen.model,
        "judge": judge.model,
        "temperature": temperature,
        "custom_templates": sorted(
            k for k, t in (("generate", gen_template), ("verify", verify_template)) if t
        ),
    }
    meta = artifact_meta("synth", effective, args.seed)
    save_synthetic(synth, args.out, meta=meta)
    if args.qrels_out:
        save_qrels(build_qrels(synth), args.qrels_out, meta=meta)
    log.info(
        "synthesized %d variants (%d verified) for %d anchors",
        len(synth),
        synth.verified_count,
        len(corpus),
    )
    return EXIT_OK


def cmd_stats(args, cfg: RunConfig) -> int:
    from solverank.corpus import load_corpus
    from solverank.stats import compute_stats
    from solverank.synth import load_synthetic

    _require_paths(("corpus", args.corpus), ("synthetic dataset", args.synth))
    corpus = load_corpus(args.corpus)
    synth = load_synthetic(args.synth, corpus=corpus)
    report = compute_stats(list(corpus), synth.variants)
    payload = report.to_json()
    payload["meta"] = artifact_meta(
        "stats", {"corpus": args.corpus, "synth": args.synth}, args.seed
    )
    _emit_json(payload, args.out)
    print(report.to_text(), file=sys.stderr)
    return EXIT_OK


def cmd_index_bm25(args, cfg: RunConfig) -> int:
    from solverank.bm25 import build_bm25, save_bm25

    if not args.out:
        raise DataError("--out is required for this command")
    k1 = resolve(args.k1, cfg, "retriever.k1", 1.2, float)
    b = resolve(args.b, cfg, "retriever.b", 0.75, float)
    docs = _load_docs(args.corpus, args.synth)
    index = build_bm25(docs, k1=k1, b=b)
    effective = {"corpus": args.corpus, "synth": args.synth, "k1": k1, "b": b}
    save_bm25(index, args.out, meta=artifact_meta("index-bm25", effective, args.seed))
    log.info("indexed %d documents, %d distinct tokens", index.doc_count, len(index.postings))
    return EXIT_OK


def cmd_train(args, cfg: RunConfig) -> int:
    from solverank.bm25 import build_bm25
    from solverank.corpus import load_corpus
    from solverank.encoder import save_checkpoint
    from solverank.synth import load_synthetic
    from solverank.trainer import TrainConfig, train
    from solverank.util import write_jsonl

    if not args.out:
        raise DataError("--out is required for this command")
    _require_paths(("corpus", args.corpus), ("synthetic dataset", args.synth))
    corpus = load_corpus(args.corpus)
    synth = load_synthetic(args.synth, corpus=corpus)
    train_config = TrainConfig(
        epochs=resolve(args.epochs, cfg, "trainer.epochs", 10, int),
        batch_size=resolve(args.batch_size, cfg, "trainer.batch_size", 4, int),
        learning_rate=resolve(args.learning_rate, cfg, "trainer.learning_rate", 1e-3, float),
        embed_dim=resolve(args.dim, cfg, "trainer.dim", 128, int),
        feature_dim=resolve(args.features, cfg, "trainer.features", 1 << 16, int),
        normalize=not args.no_normalize,
        tau=resolve(args.tau, cfg, "trainer.tau", None, float),
        seed=args.seed,
    )
    bm25 = build_bm25(corpus)
    params, training_log = train(train_config, corpus, synth, bm25)
    effective = {
        "corpus": args.corpus,
        "synth": args.synth,
        "epochs": train_config.epochs,
        "batch_size": train_config.batch_size,
        "learning_rate": train_config.learning_rate,
        "dim": train_config.embed_dim,
        "features": train_config.feature_dim,
        "normalize": train_config.normalize,
        "tau": train_config.tau,
    }
    meta = artifact_meta("train", effective, args.seed)
    save_checkpoint(params, args.out, sidecar={"config": effective, "seed": args.seed, "meta": meta})
    log_path = args.log or (args.out + ".log.jsonl")
    write_jsonl(log_path, training_log.to_jsonl_records(), meta=meta)
    log.info("trained %d epochs; final mean loss %.6f", train_config.epochs, training_log.epochs[-1].mean_loss)
    return EXIT_OK


def cmd_index_dense(args, cfg: RunConfig) -> int:
    from solverank.dense_index import build_dense_index, save_dense_index
    from solverank.encoder import load_checkpoint
    from solverank.util import atomic_write_text

    if not args.out:
        raise DataError("--out is required for this command")
    _require_paths(("checkpoint", args.checkpoint))
    params = load_checkpoint(args.checkpoint)
    docs = _load_docs(args.corpus, args.synth)
    index = build_dense_index(params, docs)
    save_dense_index(index, args.out)
    effective = {"checkpoint": args.checkpoint, "corpus": args.corpus, "synth": args.synth}
    meta = artifact_meta("index-dense", effective, args.seed)
    atomic_write_text(args.out + ".json", json.dumps({"meta": meta}, sort_keys=True, indent=2) + "\n")
    log.info("indexed %d documents at d=%d", len(index.doc_ids), params.embed_dim)
    return EXIT_OK


def _build_retriever(args, docs, seed: int):
    from solverank.dense_index import load_dense_index
    from solverank.encoder import load_checkpoint
    from solverank.raggen import DenseRetriever, RandomRetriever, SparseRetriever

    if args.retriever == "none":
        return None
    if args.retriever == "bm25":
        from solverank.bm25 import build_bm25, load_bm25

        if getattr(args, "bm25_index", None):
            _require_paths(("bm25 index", args.bm25_index))
            return SparseRetriever(load_bm25(args.bm25_index))
        return SparseRetriever(build_bm25(docs))
    if args.retriever == "dense":
        _require_paths(("dense index", args.index), ("checkpoint", args.checkpoint))
        return DenseRetriever(load_dense_index(args.index), load_checkpoint(args.checkpoint))
    if args.retriever == "random":
        return RandomRetriever(docs.ids, seed=seed)
    raise DataError(f"unknown retriever {args.retriever!r}")


def cmd_search(args, cfg: RunConfig) -> int:
    from solverank.corpus import load_corpus
    from solverank.dense_index import filter_verified
    from solverank.ranking import write_run_file

    if not args.out:
        raise DataError("--out is required for this command")
    _require_paths(("queries", args.queries))
    queries = load_corpus(args.queries)
    docs = _load_docs(args.corpus, args.synth, label="document pool")
    retriever = _build_retriever(args, docs, args.seed)
    if retriever is None:
        raise DataError("search needs a retriever (bm25, dense, or random)")
    judge = None
    verify_template = None
    if args.filter_verified:
        judge = make_client(args.judge_client or cfg.get("client.judge"), 0.0, args.model)
        verify_template = _template_override(cfg, "prompts.verify")
    runs = []
    for problem in queries:
        ranked = retriever.retrieve(problem.id, problem.statement, args.k)
        if judge is not None:
            ranked, _audits = filter_verified(
                problem.statement, ranked, docs, judge, template_text=verify_template
            )
        runs.append(ranked)
    effective = {
        "retriever": args.retriever,
        "queries": args.queries,
        "corpus": args.corpus,
        "synth": args.synth,
        "k": args.k,
        "filter_verified": bool(args.filter_verified),
    }
    write_run_file(args.out, runs, tag=args.tag or args.retriever, meta=artifact_meta("search", effective, args.seed))
    log.info("wrote %d rankings to %s", len(runs), args.out)
    return EXIT_OK


def cmd_eval_rank(args, cfg: RunConfig) -> int:
    from solverank.evalrank import build_qrels, evaluate_ranking, load_qrels
    from solverank.ranking import read_run_file
    from solverank.synth import load_synthetic

    _require_paths(("run file", args.run))
    if (args.qrels is None) == (args.synth is None):
        raise DataError("exactly one of --qrels/--synth must supply relevance judgments")
    if args.qrels:
        _require_paths(("qrels", args.qrels))
        qrels = load_qrels(args.qrels)
    else:
        _require_paths(("synthetic dataset", args.synth))
        qrels = build_qrels(load_synthetic(args.synth))
    runs = read_run_file(args.run)
    ks = tuple(int(k) for k in args.ks.split(","))
    report = evaluate_ranking(runs, qrels, ks=ks)
    effective = {"run": args.run, "qrels": args.qrels, "synth": args.synth, "ks": ks}
    payload = report.to_json(meta=artifact_meta("eval-rank", effective, args.seed))
    _emit_json(payload, args.out)
    print(report.to_text(), file=sys.stderr)
    return EXIT_OK


def cmd_rag(args, cfg: RunConfig) -> int:
    from solverank.corpus import load_corpus
    from solverank.raggen import ExecConfig, run_rag_pipeline, save_records

    if not args.out:
        raise DataError("--out is required for this command")
    _require_paths(("targets", args.targets), ("pool", args.pool))
    targets = load_corpus(args.targets)
    pool = load_corpus(args.pool)
    retriever = _build_retriever(args, pool, args.seed)
    temperature = resolve(args.temperature, cfg, "client.temperature", 0.0, float)
    gen = make_client(args.gen_client or cfg.get("client.gen"), temperature, args.model)
    judge = None
    if args.filter_verified:
        judge = make_client(args.judge_client or cfg.get("client.judge"), 0.0, args.model)
    exec_cfg = ExecConfig(
        runner=resolve(args.runner, cfg, "raggen.runner", "python3 {src}", str),
        timeout_s=resolve(args.timeout, cfg, "raggen.timeout", 5.0, float),
        compare=resolve(args.compare, cfg, "raggen.compare", "trim", str),
    )
    records = run_rag_pipeline(
        targets,
        pool,
        retriever,
        k=args.k,
        gen=gen,
        exec_cfg=exec_cfg,
        lang_label=args.lang,
        verify_judge=judge,
        jobs=args.jobs,
        codegen_template=_template_override(cfg, "prompts.codegen"),
    )
    effective = {
        "targets": args.targets,
        "pool": args.pool,
        "retriever": args.retriever,
        "k": args.k,
        "gen": gen.model,
        "runner": exec_cfg.runner,
        "compare": exec_cfg.compare,
        "lang": args.lang,
    }
    save_records(records, args.out, meta=artifact_meta("rag", effective, args.seed))
    passes = sum(1 for r in records if r.verdict == "pass")
    log.info("generated %d records (%d pass)", len(records), passes)
    return EXIT_OK


def cmd_report(args, cfg: RunConfig) -> int:
    from solverank.corpus import load_corpus
    from solverank.raggen import load_records, pass_at_1

    _require_paths(("records", args.records), ("targets", args.targets))
    records = load_records(args.records)
    corpus = load_corpus(args.targets)
    bounds = tuple(int(x) for x in args.bounds.split(","))
    if len(bounds) != 2:
        raise DataError("--bounds expects 'lo,hi'")
    report = pass_at_1(records, corpus, bounds=bounds)
    effective = {"records": args.records, "targets": args.targets, "bounds": bounds}
    payload = report.to_json(meta=artifact_meta("report", effective, args.seed))
    _emit_json(payload, args.out)
    print(report.to_text(), file=sys.stderr)
    return EXIT_OK


# ---------------------------------------------------------------- parser


def build_parser() -> _Parser:
    parser = _Parser(prog="solverank", description=__doc__)
    parser.add_argument("--version", action="version", version=f"solverank {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    def common(p):
        p.add_argument("--config", help="INI config file with section.key defaults")
        p.add_argument("--seed", type=int, default=0, help="global random seed")
        p.add_argument("--jobs", type=int, default=1, help="worker pool bound")
        p.add_argument("-v", "--verbose", action="store_true", help="debug logging")
        p.add_argument("--out", help="output path (defaults to stdout for reports)")

    def client_flags(p, gen=True, judge=True):
        if gen:
            p.add_argument("--gen-client", help="generator client spec (kind:arg)")
        if judge:
            p.add_argument("--judge-client", help="judge client spec (kind:arg)")
        p.add_argument("--model", help="model name for http clients")
        p.add_argument("--temperature", type=float, default=None)

    p = sub.add_parser("ingest", help="validate a corpus file and print stats")
    common(p)
    p.add_argument("--corpus", required=True)
    p.add_argument("--lenient", action="store_true", help="skip malformed lines instead of failing")

    p = sub.add_parser("synth", help="generate and verify synthetic variants")
    common(p)
    p.add_argument("--corpus", required=True)
    p.add_argument("--qrels-out", help="also write relevance judgments")
    client_flags(p)

    p = sub.add_parser("stats", help="distribution-shift statistics")
    common(p)
    p.add_argument("--corpus", required=True)
    p.add_argument("--synth", required=True)

    p = sub.add_parser("index-bm25", help="build and persist a BM25 index")
    common(p)
    p.add_argument("--corpus")
    p.add_argument("--synth", help="index verified variants instead of a corpus")
    p.add_argument("--k1", type=float, default=None)
    p.add_argument("--b", type=float, default=None)

    p = sub.add_parser("train", help="contrastive training of the dual encoder")
    common(p)
    p.add_argument("--corpus", required=True)
    p.add_argument("--synth", required=True)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--batch-size", type=int, default=None)
    p.add_argument("--learning-rate", type=float, default=None)
    p.add_argument("--dim", type=int, default=None)
    p.add_argument("--features", type=int, default=None)
    p.add_argument("--tau", type=float, default=None)
    p.add_argument("--no-normalize", action="store_true", help="raw inner-product similarity")
    p.add_argument("--log", help="training log path (default: <out>.log.jsonl)")

    p = sub.add_parser("index-dense", help="embed a document pool with a checkpoint")
    common(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--corpus")
    p.add_argument("--synth", help="index verified variants instead of a corpus")

    p = sub.add_parser("search", help="run a retriever over queries, emit a run file")
    common(p)
    p.add_argument("--retriever", required=True, choices=["bm25", "dense", "random"])
    p.add_argument("--queries", required=True, help="corpus-format file of query problems")
    p.add_argument("--corpus", help="document pool (corpus file)")
    p.add_argument("--synth", help="document pool (verified variants)")
    p.add_argument("--bm25-index", help="persisted BM25 index (else built from the pool)")
    p.add_argument("--index", help="dense index file")
    p.add_argument("--checkpoint", help="encoder checkpoint for dense retrieval")
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--tag", help="run tag (defaults to retriever name)")
    p.add_argument("--filter-verified", action="store_true", help="judge-filter candidates")
    client_flags(p, gen=False)

    p = sub.add_parser("eval-rank", help="P@K / R@K / MRR of a run file")
    common(p)
    p.add_argument("--run", required=True)
    p.add_argument("--qrels")
    p.add_argument("--synth", help="build qrels from a synthetic dataset")
    p.add_argument("--ks", default="1,3,5")

    p = sub.add_parser("rag", help="retrieval-augmented generation and execution")
    common(p)
    p.add_argument("--targets", required=True)
    p.add_argument("--pool", required=True)
    p.add_argument("--retriever", default="none", choices=["none", "bm25", "dense", "random"])
    p.add_argument("--bm25-index")
    p.add_argument("--index")
    p.add_argument("--checkpoint")
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--lang", default="Python")
    p.add_argument("--runner", default=None, help="command template, e.g. 'python3 {src}'")
    p.add_argument("--timeout", type=float, default=None)
    p.add_argument("--compare", choices=["trim", "exact"], default=None)
    p.add_argument("--filter-verified", action="store_true")
    client_flags(p)

    p = sub.add_parser("report", help="pass@1 by difficulty bin from records")
    common(p)
    p.add_argument("--records", required=True)
    p.add_argument("--targets", required=True)
    p.add_argument("--bounds", default="1400,2000")

    return parser


_COMMANDS = {
    "ingest": cmd_ingest,
    "synth": cmd_synth,
    "stats": cmd_stats,
    "index-bm25": cmd_index_bm25,
    "train": cmd_train,
    "index-dense": cmd_index_dense,
    "search": cmd_search,
    "eval-rank": cmd_eval_rank,
    "rag": cmd_rag,
    "report": cmd_report,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        cfg = RunConfig.load(args.config)
        return _COMMANDS[args.command](args, cfg)
    except (ClientError, RunnerError) as exc:
        log.error("%s", exc)
        return EXIT_CLIENT
    except DataError as exc:
        log.error("%s", exc)
        return EXIT_DATA
    except SolveRankError as exc:
        log.error("%s", exc)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
