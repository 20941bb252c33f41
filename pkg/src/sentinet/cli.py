"""Batch command-line front end.

Subcommands wire the library into the usual offline workflow:

    ingest          CSV -> cleaned, encoded corpus cache + class histogram
    train           cache -> model file + per-epoch history CSV
    evaluate        model + corpus -> metrics report + confusion matrix CSV
    predict         model + raw text lines -> label + class probabilities
    history-export  model file -> per-epoch history CSV

Settings may come from an INI config file (sections [data], [model],
[train], [split]); command-line flags override the file.  There is no
interactive mode and no wall-clock seeding: identical inputs, flags and
seeds reproduce identical outputs byte for byte.

Exit codes: 0 success, 1 usage error, 2 I/O or format error,
3 numerical divergence during training.
"""

from __future__ import annotations

import argparse
import configparser
import json
import sys
from pathlib import Path

from . import corpus_io, metrics
from .corpus_io import CorpusError, SplitSpec
from .model_training import (
    CorruptFile,
    FormatVersionMismatch,
    InvalidConfig,
    Model,
    ModelConfig,
    NonFiniteLoss,
    TrainConfig,
    build_model,
    evaluate,
    load_model,
    predict_text,
    save_model,
    train,
)
from .preprocess import (
    EncodedCorpus,
    PipelineConfig,
    StopWordList,
    Vocabulary,
    build_vocabulary,
    default_stop_words,
    encode_corpus,
    load_stop_words,
    read_corpus_cache,
    write_corpus_cache,
)
from .tensor_core import Rng

USAGE_ERROR, DATA_ERROR, DIVERGENCE_ERROR = 1, 2, 3


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # exit 1 on usage errors instead of argparse's 2
        raise _UsageError(message)


def _load_config(path: str | None) -> dict[str, str]:
    """Flatten an INI file into {key: raw string}; sections only group keys."""
    if path is None:
        return {}
    parser = configparser.ConfigParser()
    with open(path, encoding="utf-8") as fh:
        parser.read_file(fh)
    flat: dict[str, str] = {}
    for section in parser.sections():
        for key, value in parser.items(section):
            flat[key.replace("-", "_")] = value
    return flat


_BOOL_TRUE = {"1", "true", "yes", "on"}
_BOOL_FALSE = {"0", "false", "no", "off"}


def _resolve(args, config: dict[str, str], key: str, default, kind=str):
    """Flag value if given, else config-file value, else the default."""
    flag = getattr(args, key, None)
    if flag is not None:
        return flag
    if key in config:
        raw = config[key]
        if kind is bool:
            lowered = raw.strip().lower()
            if lowered in _BOOL_TRUE:
                return True
            if lowered in _BOOL_FALSE:
                return False
            raise _UsageError(f"config key {key}: not a boolean: {raw!r}")
        try:
            return kind(raw)
        except ValueError:
            raise _UsageError(f"config key {key}: bad value {raw!r}") from None
    return default


def build_parser() -> _Parser:
    parser = _Parser(prog="sentinet", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    ingest = sub.add_parser("ingest", help="clean, encode, and cache a labeled CSV")
    ingest.add_argument("--csv", required=True, help="input CSV with text and label columns")
    ingest.add_argument("--out-dir", required=True, help="directory for the prepared corpus")
    ingest.add_argument("--config", help="INI config file")
    ingest.add_argument("--text-column", help="text column name (default text)")
    ingest.add_argument("--label-column", help="label column name (default label)")
    ingest.add_argument("--stopwords", help="stop-word file (default: packaged list)")
    ingest.add_argument("--seq-len", type=int, help="padded sequence length (default 40)")
    ingest.add_argument("--min-freq", type=int, help="vocabulary frequency cutoff (default 1)")
    ingest.add_argument(
        "--drop-hashtag-words",
        action="store_true",
        default=None,
        help="remove whole hashtag tokens instead of only the # marker",
    )
    ingest.add_argument(
        "--dedupe",
        action="store_true",
        default=None,
        help="drop rows whose exact text appeared earlier",
    )

    tr = sub.add_parser("train", help="train a model on a prepared corpus")
    tr.add_argument("--data", required=True, help="directory written by ingest")
    tr.add_argument("--out-dir", required=True, help="directory for model.bin and history.csv")
    tr.add_argument("--config", help="INI config file")
    tr.add_argument("--variant", choices=("cnn-lstm", "cnn", "lstm"))
    tr.add_argument("--embed-dim", type=int, help="word-vector dimension (default 64)")
    tr.add_argument("--window", type=int, help="convolution window width (default 3)")
    tr.add_argument("--filters", type=int, help="convolution filter count (default 64)")
    tr.add_argument("--hidden", type=int, help="LSTM hidden size (default 64)")
    tr.add_argument("--activation", choices=("tanh", "sigmoid"))
    tr.add_argument("--epochs", type=int, help="training epochs (default 60; 0 = init only)")
    tr.add_argument("--batch-size", type=int, help="mini-batch size (default 32)")
    tr.add_argument("--lr", type=float, help="learning rate (default 1e-3)")
    tr.add_argument("--optimizer", choices=("adam", "sgd"))
    tr.add_argument("--beta1", type=float, help="Adam beta1 (default 0.9)")
    tr.add_argument("--beta2", type=float, help="Adam beta2 (default 0.999)")
    tr.add_argument("--eps", type=float, help="Adam epsilon (default 1e-8)")
    tr.add_argument("--seed", type=int, help="init + shuffle seed (default 42)")
    tr.add_argument(
        "--no-shuffle", action="store_true", default=None, help="keep corpus order each epoch"
    )
    tr.add_argument("--train-frac", type=float, help="train fraction (default 0.8)")
    tr.add_argument("--val-frac", type=float, help="validation fraction (default 0.1)")
    tr.add_argument("--split-seed", type=int, help="stratified split seed (default 42)")

    ev = sub.add_parser("evaluate", help="score a model and export metric CSVs")
    ev.add_argument("--model", required=True, help="model file from train")
    ev.add_argument("--out-dir", required=True, help="directory for report.csv and confusion.csv")
    ev.add_argument("--config", help="INI config file")
    src = ev.add_mutually_exclusive_group(required=True)
    src.add_argument("--data", help="prepared corpus directory")
    src.add_argument("--csv", help="raw labeled CSV (preprocessed with the model's pipeline)")
    ev.add_argument("--text-column", help="text column name (default text)")
    ev.add_argument("--label-column", help="label column name (default label)")
    ev.add_argument(
        "--split",
        choices=("all", "train", "val", "test"),
        default="all",
        help="score only one partition of the deterministic split",
    )
    ev.add_argument("--train-frac", type=float, help="train fraction (default 0.8)")
    ev.add_argument("--val-frac", type=float, help="validation fraction (default 0.1)")
    ev.add_argument("--split-seed", type=int, help="stratified split seed (default 42)")

    pr = sub.add_parser("predict", help="classify raw text lines")
    pr.add_argument("--model", required=True, help="model file from train")
    pr.add_argument("texts", nargs="*", help="texts to classify (one prediction each)")
    pr.add_argument("--stdin", action="store_true", help="also read one text per stdin line")

    hx = sub.add_parser("history-export", help="write a model's epoch history as CSV")
    hx.add_argument("--model", required=True, help="model file from train")
    hx.add_argument("--out", required=True, help="output CSV path")

    return parser


def _pipeline_from_meta(meta: dict) -> PipelineConfig:
    return PipelineConfig(
        stop_words=StopWordList(frozenset(meta["stop_words"])),
        drop_hashtag_words=meta["drop_hashtag_words"],
        dedupe=meta["dedupe"],
    )


def cmd_ingest(args, config) -> int:
    text_column = _resolve(args, config, "text_column", "text")
    label_column = _resolve(args, config, "label_column", "label")
    seq_len = _resolve(args, config, "seq_len", 40, int)
    min_freq = _resolve(args, config, "min_freq", 1, int)
    drop_tags = bool(_resolve(args, config, "drop_hashtag_words", False, bool))
    dedupe = bool(_resolve(args, config, "dedupe", False, bool))
    stop_path = _resolve(args, config, "stopwords", None)
    stops = load_stop_words(stop_path) if stop_path else default_stop_words()

    corpus = corpus_io.load_corpus(args.csv, text_column, label_column)
    if dedupe:
        corpus = corpus_io.deduplicate(corpus)
    pipeline = PipelineConfig(stops, drop_tags, dedupe)
    token_lists = [pipeline.tokens(ex.text) for ex in corpus.examples]
    vocab = build_vocabulary(token_lists, min_freq)
    encoded = encode_corpus(token_lists, corpus.labels(), vocab, seq_len)

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_corpus_cache(encoded, out / "encoded.csv")
    (out / "vocab.json").write_text(
        json.dumps(
            {"tokens": list(vocab.tokens()), "min_frequency": vocab.min_frequency},
            sort_keys=True,
        ),
        encoding="utf-8",
    )
    (out / "meta.json").write_text(
        json.dumps(
            {
                "seq_len": seq_len,
                "stop_words": sorted(stops.words),
                "drop_hashtag_words": drop_tags,
                "dedupe": dedupe,
                "text_column": text_column,
                "label_column": label_column,
                "source_csv": str(args.csv),
            },
            sort_keys=True,
        ),
        encoding="utf-8",
    )
    histogram = corpus_io.class_histogram(corpus)
    (out / "histogram.csv").write_text(
        corpus_io.histogram_to_csv(histogram), encoding="utf-8"
    )
    print(f"ingested {len(corpus)} examples, vocabulary size {len(vocab)}")
    print(f"class counts (-1, 0, 1): {histogram}")
    return 0


def cmd_train(args, config) -> int:
    data_dir = Path(args.data)
    encoded = read_corpus_cache(data_dir / "encoded.csv")
    vocab_blob = json.loads((data_dir / "vocab.json").read_text("utf-8"))
    vocab = Vocabulary(vocab_blob["tokens"], vocab_blob["min_frequency"])
    meta = json.loads((data_dir / "meta.json").read_text("utf-8"))

    model_config = ModelConfig(
        variant=_resolve(args, config, "variant", "cnn-lstm"),
        seq_len=meta["seq_len"],
        embed_dim=_resolve(args, config, "embed_dim", 64, int),
        window=_resolve(args, config, "window", 3, int),
        filters=_resolve(args, config, "filters", 64, int),
        hidden=_resolve(args, config, "hidden", 64, int),
        activation=_resolve(args, config, "activation", "tanh"),
    )
    no_shuffle = bool(_resolve(args, config, "no_shuffle", False, bool))
    train_config = TrainConfig(
        epochs=_resolve(args, config, "epochs", 60, int),
        batch_size=_resolve(args, config, "batch_size", 32, int),
        learning_rate=_resolve(args, config, "lr", 1e-3, float),
        optimizer=_resolve(args, config, "optimizer", "adam"),
        beta1=_resolve(args, config, "beta1", 0.9, float),
        beta2=_resolve(args, config, "beta2", 0.999, float),
        epsilon=_resolve(args, config, "eps", 1e-8, float),
        seed=_resolve(args, config, "seed", 42, int),
        shuffle=not no_shuffle,
    )
    split = SplitSpec(
        train_fraction=_resolve(args, config, "train_frac", 0.8, float),
        val_fraction=_resolve(args, config, "val_frac", 0.1, float),
        seed=_resolve(args, config, "split_seed", 42, int),
    )

    train_idx, val_idx, _ = corpus_io.stratified_indices(encoded.labels, split)
    train_part = encoded.subset(train_idx)
    val_part = encoded.subset(val_idx) if val_idx else None

    model = build_model(
        model_config, vocab, Rng(train_config.seed), _pipeline_from_meta(meta)
    )
    model, history = train(model, train_part, val_part, train_config)

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    save_model(model, out / "model.bin")
    (out / "history.csv").write_text(history.to_csv(), encoding="utf-8")
    final_val = history.records[-1].val_accuracy if history.records else float("nan")
    print(f"final val accuracy: {final_val!r}")
    return 0


def _encoded_for_evaluate(args, model: Model) -> EncodedCorpus:
    if args.data is not None:
        data_dir = Path(args.data)
        encoded = read_corpus_cache(data_dir / "encoded.csv")
        vocab_blob = json.loads((data_dir / "vocab.json").read_text("utf-8"))
        if tuple(vocab_blob["tokens"]) != model.vocab.tokens():
            raise CorpusError(
                "prepared corpus was encoded with a different vocabulary"
            )
        if encoded.n != model.config.seq_len:
            raise CorpusError(
                f"cache sequence length {encoded.n} != model {model.config.seq_len}"
            )
        return encoded
    if model.pipeline is None:
        raise CorpusError("model lacks pipeline settings; evaluate with --data")
    corpus = corpus_io.load_corpus(
        args.csv,
        args.text_column or "text",
        args.label_column or "label",
    )
    if model.pipeline.dedupe:
        corpus = corpus_io.deduplicate(corpus)
    token_lists = [model.pipeline.tokens(ex.text) for ex in corpus.examples]
    return encode_corpus(token_lists, corpus.labels(), model.vocab, model.config.seq_len)


def cmd_evaluate(args, config) -> int:
    model = load_model(args.model)
    encoded = _encoded_for_evaluate(args, model)
    if args.split != "all":
        split = SplitSpec(
            train_fraction=_resolve(args, config, "train_frac", 0.8, float),
            val_fraction=_resolve(args, config, "val_frac", 0.1, float),
            seed=_resolve(args, config, "split_seed", 42, int),
        )
        parts = dict(
            zip(("train", "val", "test"), corpus_io.stratified_indices(encoded.labels, split))
        )
        encoded = encoded.subset(parts[args.split])
    result = evaluate(model, encoded)
    cm = metrics.confusion(result.predictions, [int(l) for l in encoded.labels])
    report = metrics.macro_report(cm)

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.csv").write_text(metrics.report_to_csv(report), encoding="utf-8")
    (out / "confusion.csv").write_text(metrics.confusion_to_csv(cm), encoding="utf-8")
    print(f"examples: {len(encoded)}")
    print(f"accuracy: {report.accuracy!r}")
    print(f"mean loss: {result.loss!r}")
    return 0


def cmd_predict(args) -> int:
    model = load_model(args.model)
    texts = list(args.texts)
    if args.stdin:
        texts.extend(line.rstrip("\n") for line in sys.stdin)
    for raw in texts:
        label, probs = predict_text(model, raw)
        probs_str = "\t".join(repr(float(p)) for p in probs)
        print(f"{corpus_io.external_label(label)}\t{probs_str}")
    return 0


def cmd_history_export(args) -> int:
    model = load_model(args.model)
    Path(args.out).write_text(model.history.to_csv(), encoding="utf-8")
    print(f"wrote {len(model.history)} epoch records to {args.out}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        config = _load_config(getattr(args, "config", None))
        if args.command == "ingest":
            return cmd_ingest(args, config)
        if args.command == "train":
            return cmd_train(args, config)
        if args.command == "evaluate":
            return cmd_evaluate(args, config)
        if args.command == "predict":
            return cmd_predict(args)
        return cmd_history_export(args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except InvalidConfig as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except NonFiniteLoss as exc:
        print(f"training diverged: {exc}", file=sys.stderr)
        return DIVERGENCE_ERROR
    except (
        CorpusError,
        CorruptFile,
        FormatVersionMismatch,
        OSError,
        ValueError,
        KeyError,
        json.JSONDecodeError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return DATA_ERROR


if __name__ == "__main__":
    sys.exit(main())
