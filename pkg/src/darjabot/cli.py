"""Operator command line: train, eval, ingest, serve, chat, bench, normalize, stats.

Exit codes: 0 success, 1 usage or configuration problem, 2 malformed data,
3 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import classify, corpus, synthetic
from .bench import run_path
from .config import EngineConfig
from .corpus import SynonymLexicon, balance_dataset, fit_label_codec, load_dataset, stratified_split
from .engine import Engine, load_engine, save_models
from .errors import ConfigError, DarjabotError, DataError
from .features import fit_tfidf, transform_many
from .ingest import load_document
from .normalize import normalize
from .service import ChatService

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_RUNTIME = 0, 1, 2, 3


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _load_config(args) -> EngineConfig:
    config = EngineConfig.load(args.config) if args.config else EngineConfig()
    for field in ("dataset_path", "templates_path", "lexicon_path", "models_dir",
                  "index_dir", "reports_dir"):
        flag = getattr(args, field, None)
        if flag:
            setattr(config, field, flag)
    config.validate()
    return config


def _normalized_dataset(dataset: corpus.Dataset) -> corpus.Dataset:
    examples = []
    for i, ex in enumerate(dataset.examples):
        norm = normalize(ex.utterance.text)
        if not norm.text:
            raise DataError(
                f"example {i} of intent {ex.intent!r} is empty after normalization"
            )
        examples.append(
            corpus.LabeledExample(
                corpus.RawUtterance(norm.text, ex.utterance.source_tag), ex.intent, ex.augmented
            )
        )
    return corpus.Dataset(tuple(examples), dataset.script)


def train_pipeline(config: EngineConfig, with_mlp: bool = False, quiet: bool = False):
    """balance -> split (80/10/10) -> fit TF-IDF -> train -> evaluate -> persist."""
    if not config.dataset_path or not Path(config.dataset_path).exists():
        raise DataError(f"dataset file not found: {config.dataset_path!r}")
    dataset = _normalized_dataset(load_dataset(config.dataset_path, script="mixed"))
    lexicon = (
        SynonymLexicon.load(config.lexicon_path)
        if config.lexicon_path and Path(config.lexicon_path).exists()
        else SynonymLexicon.empty()
    )
    dataset = balance_dataset(dataset, config.min_per_intent, lexicon, seed=config.seed)
    train, val, test = stratified_split(dataset, seed=config.seed)
    codec = fit_label_codec(dataset)

    def vectorize(split):
        texts = [ex.utterance.text for ex in split.examples]
        labels = [codec.encode(ex.intent) for ex in split.examples]
        return texts, labels

    train_texts, train_y = vectorize(train)
    vocab = fit_tfidf(train_texts, min_df=config.min_df)
    X_train = transform_many(vocab, train_texts)
    val_texts, val_y = vectorize(val)
    X_val = transform_many(vocab, val_texts)
    test_texts, test_y = vectorize(test)
    X_test = transform_many(vocab, test_texts)

    linear = classify.train_logreg(
        (X_train, train_y), (X_val, val_y), codec,
        l2=config.l2, lr=config.lr, batch=config.batch,
        max_epochs=config.max_epochs, patience=config.patience, seed=config.seed,
    )
    mlp = None
    if with_mlp:
        mlp = classify.train_mlp(
            (X_train, train_y), (X_val, val_y), codec,
            dropout=config.mlp_dropout, lr=config.mlp_lr, momentum=config.mlp_momentum,
            batch=config.batch, max_epochs=config.max_epochs,
            patience=config.patience, seed=config.seed,
        )
    metrics = classify.evaluate(linear, (X_test, test_y), codec)
    save_models(config.models_dir, vocab, codec, linear=linear, mlp=mlp)

    from .report import write_confusion_figure, write_metrics_report

    report_path = write_metrics_report(metrics, config.reports_dir)
    y_pred = [classify.predict(linear, v).intent_id for v in X_test]
    cm = classify.confusion_matrix(test_y, y_pred, codec.num_classes)
    write_confusion_figure(cm, list(codec.names), config.reports_dir)
    if not quiet:
        print(f"trained on {len(train)} / validated on {len(val)} / tested on {len(test)}")
        print(f"accuracy={metrics.accuracy:.4f} weighted_f1={metrics.weighted_f1:.4f} "
              f"macro_f1={metrics.macro_f1:.4f}")
        print(f"report: {report_path}")
    return metrics


def _cmd_train(args) -> int:
    config = _load_config(args)
    if args.synthetic:
        corpus_path = Path(config.dataset_path or "artifacts/synthetic.tsv")
        corpus_path.parent.mkdir(parents=True, exist_ok=True)
        corpus.save_dataset(synthetic.generate_corpus(seed=args.synthetic_seed), corpus_path)
        config.dataset_path = str(corpus_path)
        if not config.knowledge_intents:
            config.knowledge_intents = ",".join(synthetic.KNOWLEDGE_INTENT_NAMES)
    train_pipeline(config, with_mlp=args.mlp)
    return EXIT_OK


def _cmd_eval(args) -> int:
    config = _load_config(args)
    engine = load_engine(config, model_kind=args.model)
    dataset = _normalized_dataset(load_dataset(args.dataset or config.dataset_path, script="mixed"))
    texts = [ex.utterance.text for ex in dataset.examples]
    labels = [engine.codec.encode(ex.intent) for ex in dataset.examples]
    vectors = transform_many(engine.vocab, texts)
    metrics = classify.evaluate(engine.model, (vectors, labels), engine.codec)
    print(f"accuracy={metrics.accuracy:.4f} weighted_f1={metrics.weighted_f1:.4f} "
          f"macro_f1={metrics.macro_f1:.4f}")
    return EXIT_OK


def _cmd_ingest(args) -> int:
    config = _load_config(args)
    if args.offers:
        config.offers = args.offers
    engine = load_engine(config)
    doc = load_document(args.doc)
    count = engine.reingest(doc)
    engine.save_knowledge(config.index_dir)
    print(f"indexed {count} chunks from {doc.doc_id} into {config.index_dir}")
    return EXIT_OK


def _cmd_serve(args) -> int:
    config = _load_config(args)
    if args.port is not None:
        config.port = args.port
    engine = load_engine(config)
    service = ChatService(engine)
    host, port = service.start()
    print(f"listening on http://{host}:{port}  (Ctrl-C to stop)")
    try:
        service.serve_forever()
    except KeyboardInterrupt:
        service.stop()
    return EXIT_OK


def _cmd_chat(args) -> int:
    config = _load_config(args)
    engine = load_engine(config)
    session_id = "repl"
    print("darjabot chat (empty line to quit)")
    while True:
        try:
            line = input("you> ").strip()
        except EOFError:
            break
        if not line:
            break
        reply = engine.handle_turn(session_id, line)
        route_tag = reply.route.path.value
        print(f"bot[{route_tag} conf={reply.route.confidence:.2f}]> {reply.text}")
        if reply.sources:
            print(f"     sources: {', '.join(reply.sources)}")
    return EXIT_OK


def _cmd_bench(args) -> int:
    config = _load_config(args)
    if args.gen_delay_ms is not None:
        config.gen_delay_ms = args.gen_delay_ms
    engine = load_engine(config)
    from .bench import deterministic_queries
    from .report import write_bench_report

    reports = []
    if args.n > 0:
        candidates = [
            "nheb nactivi roaming",
            "chhal bqali f solde",
            "nsit code puk taai",
            "kifash ncharger flexy",
        ]
        if config.dataset_path and Path(config.dataset_path).exists():
            dataset = load_dataset(config.dataset_path, script="mixed")
            knowledge = config.knowledge_intent_names()
            candidates = [
                normalize(ex.utterance.text).text
                for ex in dataset.examples[:400]
                if ex.intent not in knowledge
            ] + candidates
        det_queries = deterministic_queries(engine, candidates)
        if not det_queries:
            raise DataError(
                "no candidate query routes to the template path; point dataset_path "
                "at the training corpus so bench can sample confident utterances"
            )
        reports.append(run_path(engine, det_queries, args.n, "nlu"))
        if engine.snapshot.chunk_count:
            rag_queries = [
                "chhal prix dyal pixx 500",
                "wach yaati win 2000 f data",
                "kifash nactivi sama mix",
            ]
            reports.append(run_path(engine, rag_queries, max(1, args.n // 20), "rag"))
    path = write_bench_report(reports, config.reports_dir)
    for report in reports:
        print(f"{report.path}: n={report.n} p50={report.total_p50_ms:.2f}ms "
              f"p95={report.total_p95_ms:.2f}ms")
    print(f"report: {path}")
    return EXIT_OK


def _cmd_normalize(args) -> int:
    out_lines = []
    in_path = Path(args.infile)
    if not in_path.exists():
        raise DataError(f"input file not found: {in_path}")
    for line in in_path.read_text(encoding="utf-8").splitlines():
        result = normalize(line)
        out_lines.append(f"{result.script.value}\t{result.text}")
    output = "\n".join(out_lines) + ("\n" if out_lines else "")
    if args.outfile == "-":
        sys.stdout.write(output)
    else:
        Path(args.outfile).write_text(output, encoding="utf-8")
    return EXIT_OK


def _cmd_stats(args) -> int:
    dataset = load_dataset(args.dataset, script="mixed")
    stats = corpus.intent_stats(dataset)
    print(json.dumps(stats, indent=2, ensure_ascii=False))
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="darjabot", description="Hybrid Darja conversational engine")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="path to a key=value config file")
        p.add_argument("--models-dir", dest="models_dir")
        p.add_argument("--index-dir", dest="index_dir")
        p.add_argument("--reports-dir", dest="reports_dir")
        p.add_argument("--templates", dest="templates_path")
        p.add_argument("--lexicon", dest="lexicon_path")

    p = sub.add_parser("train", help="train the intent classifiers")
    common(p)
    p.add_argument("--data", dest="dataset_path")
    p.add_argument("--mlp", action="store_true", help="also train the MLP head")
    p.add_argument("--synthetic", action="store_true", help="generate the synthetic benchmark corpus first")
    p.add_argument("--synthetic-seed", type=int, default=42)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("eval", help="evaluate saved models on a dataset")
    common(p)
    p.add_argument("--data", dest="dataset")
    p.add_argument("--model", choices=("linear", "mlp"), default="linear")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("ingest", help="chunk, embed and index a knowledge document")
    common(p)
    p.add_argument("--doc", required=True)
    p.add_argument("--offers", help="comma-separated offer names that open sections")
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("serve", help="run the HTTP service")
    common(p)
    p.add_argument("--port", type=int)
    p.set_defaults(func=_cmd_serve)

    p = sub.add_parser("chat", help="interactive REPL against the local engine")
    common(p)
    p.set_defaults(func=_cmd_chat)

    p = sub.add_parser("bench", help="measure per-stage latency for both paths")
    common(p)
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--gen-delay-ms", type=float, default=None,
                   help="inject an artificial mock generation delay")
    p.set_defaults(func=_cmd_bench)

    p = sub.add_parser("normalize", help="normalize utterances line by line")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", dest="outfile", required=True, help="output path or - for stdout")
    p.set_defaults(func=_cmd_normalize)

    p = sub.add_parser("stats", help="per-intent dataset statistics")
    p.add_argument("--data", dest="dataset", required=True)
    p.set_defaults(func=_cmd_stats)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except DarjabotError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except KeyboardInterrupt:
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
