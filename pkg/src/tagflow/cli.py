"""Command-line entry point.

Subcommands: train, predict, evaluate, baselines, compare, emotion-flow.
Configuration precedence is command line > config file > defaults; the
fully resolved configuration is written next to every training run so the
run can be re-executed from that file alone.

Exit codes: 0 success, 1 usage or configuration error, 2 data error,
3 runtime numeric error.
"""

from __future__ import annotations

import argparse
import json
import sys
from contextlib import contextmanager
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .checkpoint import load_checkpoint, save_checkpoint
from .corpus import (
    Split,
    TagVocabulary,
    build_vocabulary,
    encode_records,
    encode_synopsis,
    load_corpus,
    load_stopwords,
    preprocess,
    validation_split,
)
from .emotion import DEFAULT_SEGMENTS, emotion_flow, flow_to_csv, load_lexicon
from .errors import ConfigError, DataError, NumericError
from .layers import compute_class_weights
from .metrics import (
    MetricsReport,
    baseline_most_frequent,
    baseline_random,
    evaluate_predictions,
    prediction_overlap,
    recall_delta,
)
from .model import ModelConfig, build_model, load_pretrained_embeddings, predict_top_k
from .training import TrainConfig, evaluate_loss, train


@dataclass
class RunConfig:
    """Fully resolved inputs for one command invocation."""

    model: ModelConfig
    train: TrainConfig
    corpus: str | None = None
    lexicon: str | None = None
    embeddings: str | None = None
    out: str | None = None

    def to_dict(self):
        return {
            "model": self.model.to_dict(),
            "train": self.train.to_dict(),
            "corpus": self.corpus,
            "lexicon": self.lexicon,
            "embeddings": self.embeddings,
            "out": self.out,
        }


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems as ConfigError (exit code 1)."""

    def error(self, message):
        raise ConfigError(message)


@contextmanager
def _stage(name):
    """Prefix pipeline errors with the stage that raised them."""
    try:
        yield
    except (ConfigError, DataError, NumericError) as e:
        raise type(e)(f"[{name}] {e}") from None
    except OSError as e:
        raise DataError(f"[{name}] {e}") from None


def _load_config_file(path):
    with open(path, encoding="utf-8") as f:
        try:
            doc = json.load(f)
        except json.JSONDecodeError as e:
            raise ConfigError(f"{path}: invalid JSON: {e}") from None
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: config must be a JSON object")
    return doc


def _apply_set_overrides(doc, assignments):
    """Apply repeated ``--set section.key=value`` (or ``key=value``) pairs."""
    for assignment in assignments or ():
        if "=" not in assignment:
            raise ConfigError(f"--set expects key=value, got '{assignment}'")
        key, _, raw = assignment.partition("=")
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        target = doc
        parts = key.split(".")
        for part in parts[:-1]:
            target = target.setdefault(part, {})
            if not isinstance(target, dict):
                raise ConfigError(f"--set key '{key}' does not name a config section")
        target[parts[-1]] = value
    return doc


def _resolve_run_config(args):
    doc = _load_config_file(args.config) if getattr(args, "config", None) else {}
    _apply_set_overrides(doc, getattr(args, "set", None))
    model_doc = dict(doc.get("model", {}))
    train_doc = dict(doc.get("train", {}))
    if getattr(args, "variant", None):
        model_doc["variant"] = args.variant
    if getattr(args, "seed", None) is not None:
        model_doc["seed"] = args.seed
        train_doc["seed"] = args.seed
    model_config = ModelConfig.from_dict(model_doc)
    train_config = TrainConfig.from_dict(train_doc)
    return RunConfig(
        model=model_config,
        train=train_config,
        corpus=getattr(args, "corpus", None) or doc.get("corpus"),
        lexicon=getattr(args, "lexicon", None) or doc.get("lexicon"),
        embeddings=getattr(args, "embeddings", None) or doc.get("embeddings"),
        out=getattr(args, "out", None) or doc.get("out"),
    )


def _parse_k_list(text):
    try:
        ks = [int(part) for part in str(text).split(",") if part.strip()]
    except ValueError:
        raise ConfigError(f"--k expects integers, got '{text}'") from None
    if not ks or any(k < 1 for k in ks):
        raise ConfigError(f"--k expects positive integers, got '{text}'")
    return ks


def _read_input_texts(args):
    """(movie_id, text) pairs from --text or --input (TSV id<TAB>text or raw lines)."""
    if getattr(args, "text", None) is not None:
        return [("input-1", args.text)]
    if getattr(args, "input", None):
        pairs = []
        with open(args.input, encoding="utf-8") as f:
            for i, line in enumerate(f, start=1):
                line = line.rstrip("\n")
                if not line.strip():
                    continue
                if "\t" in line:
                    movie_id, _, text = line.partition("\t")
                    pairs.append((movie_id, text))
                else:
                    pairs.append((f"input-{i}", line))
        if not pairs:
            raise DataError(f"{args.input}: no input texts found")
        return pairs
    raise ConfigError("provide --text or --input")


def _write_or_print(text, out_path):
    if out_path:
        Path(out_path).parent.mkdir(parents=True, exist_ok=True)
        with open(out_path, "w", encoding="utf-8") as f:
            f.write(text)
    else:
        sys.stdout.write(text)


def _prediction_lines(movie_id, ranked, probs_by_tag):
    return [
        f"{movie_id}\t{rank}\t{tag}\t{probs_by_tag[tag]:.6f}"
        for rank, tag in enumerate(ranked, start=1)
    ]


def _load_prediction_file(path):
    """Read line-delimited (movie_id, rank, tag, probability) records."""
    by_movie = {}
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) != 4:
                raise DataError(f"{path}: line {lineno}: expected 4 tab-separated fields")
            movie_id, rank, tag = parts[0], parts[1], parts[2]
            try:
                rank = int(rank)
            except ValueError:
                raise DataError(f"{path}: line {lineno}: rank '{parts[1]}' is not an integer") from None
            by_movie.setdefault(movie_id, []).append((rank, tag))
    if not by_movie:
        raise DataError(f"{path}: no prediction records found")
    return {movie: [tag for _, tag in sorted(entries)] for movie, entries in by_movie.items()}


def _model_inputs(model, text, stopwords, lexicon):
    """Encode one raw synopsis with the model's own vocabularies."""
    tokens = encode_synopsis(preprocess(text, stopwords), model.vocab, model.config.seq_len)
    flow = None
    if model.config.uses_flow:
        flow = emotion_flow(text, lexicon, model.config.n_segments).astype(np.float32)
    return tokens, flow


def _require(value, flag, why):
    if not value:
        raise ConfigError(f"{flag} is required {why}")
    return value


def _load_model(args):
    path = _require(getattr(args, "checkpoint", None), "--checkpoint", "to load a model")
    with _stage("checkpoint"):
        model = load_checkpoint(path)
    if getattr(args, "variant", None) and args.variant != model.config.variant:
        raise ConfigError(
            f"checkpoint holds variant '{model.config.variant}', not '{args.variant}'"
        )
    if model.vocab is None or model.tag_vocab is None:
        raise DataError(f"{path}: checkpoint lacks vocabularies; cannot encode inputs")
    return model


def _maybe_lexicon(model, args):
    if not model.config.uses_flow:
        return None
    path = _require(getattr(args, "lexicon", None), "--lexicon",
                    f"for variant '{model.config.variant}'")
    with _stage("lexicon"):
        return load_lexicon(path)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_train(args):
    run = _resolve_run_config(args)
    corpus_path = _require(run.corpus, "--corpus", "to train")
    out_dir = Path(_require(run.out, "--out", "to store the checkpoint"))
    if run.model.variant == "cnn_fe_pretrained":
        _require(run.embeddings, "--embeddings", "for variant 'cnn_fe_pretrained'")
    lexicon = None
    if run.model.uses_flow:
        lexicon_path = _require(run.lexicon, "--lexicon", f"for variant '{run.model.variant}'")
        with _stage("lexicon"):
            lexicon = load_lexicon(lexicon_path)

    with _stage("corpus"):
        records = load_corpus(corpus_path)
        train_records = [r for r in records if r.split is Split.TRAIN]
        if not train_records:
            raise DataError("corpus has no training records")
        stopwords = load_stopwords()
        vocab = build_vocabulary(train_records, max_words=run.model.vocab_size, stopwords=stopwords)
        tag_vocab = TagVocabulary.from_records(train_records)
    if len(tag_vocab) != run.model.n_tags:
        run.model.n_tags = len(tag_vocab)
        run.model.validate()
    if vocab.size != run.model.vocab_size:
        run.model.vocab_size = vocab.size
        run.model.validate()

    with _stage("encode"):
        examples = encode_records(
            train_records, vocab, tag_vocab, stopwords,
            lexicon=lexicon, max_len=run.model.seq_len, n_segments=run.model.n_segments,
        )
        train_examples, val_examples = validation_split(examples, seed=run.train.seed)

    with _stage("model"):
        model = build_model(run.model)
        model.vocab = vocab
        model.tag_vocab = tag_vocab
        if run.model.variant == "cnn_fe_pretrained":
            coverage = load_pretrained_embeddings(run.embeddings, vocab, model.embedding)
            print(f"pretrained embedding coverage: {coverage:.1%}")

    class_weights = None
    use_cw = run.train.use_class_weights
    if use_cw or (use_cw is None and run.model.uses_class_weights):
        # count over the full training split, before the validation carve-out,
        # so a rare tag cannot lose its only record to the validation set
        with _stage("class-weights"):
            class_weights = compute_class_weights(examples, tag_vocab)
        model.class_weights = class_weights

    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "config.json", "w", encoding="utf-8") as f:
        json.dump(run.to_dict(), f, indent=2)
        f.write("\n")

    with _stage("train"):
        model, history = train(
            model, train_examples, val_examples, run.train,
            class_weights=class_weights, log_path=out_dir / "history.jsonl",
        )

    with _stage("checkpoint"):
        save_checkpoint(model, out_dir / "model.ckpt")
    best = history.epochs[history.best_epoch - 1]
    print(f"trained {len(history.epochs)} epochs; best epoch {history.best_epoch} "
          f"(val_loss {best.val_loss:.4f})")
    print(f"wrote {out_dir / 'model.ckpt'}")
    return 0


def cmd_predict(args):
    model = _load_model(args)
    lexicon = _maybe_lexicon(model, args)
    k = _parse_k_list(args.k)
    if len(k) != 1:
        raise ConfigError("predict takes a single --k")
    k = k[0]
    if not 1 <= k <= model.config.n_tags:
        raise ConfigError(f"--k must be in [1, {model.config.n_tags}]")
    stopwords = load_stopwords()
    lines = []
    with _stage("predict"):
        for movie_id, text in _read_input_texts(args):
            tokens, flow = _model_inputs(model, text, stopwords, lexicon)
            probs = model.forward(tokens, flow).data
            ranked = predict_top_k(probs, k, model.tag_vocab)
            probs_by_tag = {tag: float(probs[model.tag_vocab.index(tag)]) for tag in ranked}
            lines.extend(_prediction_lines(movie_id, ranked, probs_by_tag))
    _write_or_print("\n".join(lines) + "\n", getattr(args, "out", None))
    return 0


def _encode_test_set(model, corpus_path, lexicon):
    records = load_corpus(corpus_path)
    test_records = [r for r in records if r.split is Split.TEST]
    if not test_records:
        raise DataError("corpus has no test records")
    stopwords = load_stopwords()
    truths = {r.movie_id: set(r.tags) for r in test_records}
    synopses = {r.movie_id: r.synopsis for r in test_records}
    examples = encode_records(
        test_records, model.vocab, model.tag_vocab, stopwords,
        lexicon=lexicon, max_len=model.config.seq_len, n_segments=model.config.n_segments,
    )
    return test_records, examples, truths, synopses


def cmd_evaluate(args):
    model = _load_model(args)
    lexicon = _maybe_lexicon(model, args)
    corpus_path = _require(getattr(args, "corpus", None), "--corpus", "to evaluate")
    ks = _parse_k_list(args.k)
    out_dir = Path(args.out) if getattr(args, "out", None) else None
    with _stage("corpus"):
        test_records, examples, truths, _ = _encode_test_set(model, corpus_path, lexicon)

    with _stage("evaluate"):
        prob_rows = {}
        for record, example in zip(test_records, examples):
            flow = example.flow if model.config.uses_flow else None
            prob_rows[record.movie_id] = model.forward(example.tokens, flow).data
        mean_kl = evaluate_loss(model, examples)
        for k in ks:
            preds = {
                movie: predict_top_k(probs, k, model.tag_vocab)
                for movie, probs in prob_rows.items()
            }
            report = evaluate_predictions(
                preds, truths, model.tag_vocab, k,
                metadata={"variant": model.config.variant, "mean_kl": mean_kl,
                          "n_movies": len(preds)},
            )
            print(report.summary_line())
            if out_dir:
                out_dir.mkdir(parents=True, exist_ok=True)
                with open(out_dir / f"metrics_k{k}.json", "w", encoding="utf-8") as f:
                    f.write(report.to_json())
                pred_lines = []
                for movie, ranked in preds.items():
                    probs = prob_rows[movie]
                    probs_by_tag = {t: float(probs[model.tag_vocab.index(t)]) for t in ranked}
                    pred_lines.extend(_prediction_lines(movie, ranked, probs_by_tag))
                with open(out_dir / f"predictions_k{k}.tsv", "w", encoding="utf-8") as f:
                    f.write("\n".join(pred_lines) + "\n")
    return 0


def cmd_baselines(args):
    corpus_path = _require(getattr(args, "corpus", None), "--corpus", "to compute baselines")
    ks = _parse_k_list(args.k)
    seed = args.seed if args.seed is not None else 0
    out_dir = Path(args.out) if getattr(args, "out", None) else None
    with _stage("corpus"):
        records = load_corpus(corpus_path)
        train_records = [r for r in records if r.split is Split.TRAIN]
        test_records = [r for r in records if r.split is Split.TEST]
        if not train_records or not test_records:
            raise DataError("baselines need both train and test records")
        tag_vocab = TagVocabulary.from_records(train_records)
        truths = {r.movie_id: set(r.tags) for r in test_records}
        movie_ids = [r.movie_id for r in test_records]

    for k in ks:
        frequent = baseline_most_frequent(train_records, tag_vocab, k, movie_ids)
        random_preds = baseline_random(tag_vocab, movie_ids, k, seed)
        for name, preds in (("most_frequent", frequent), ("random", random_preds)):
            report = evaluate_predictions(
                preds, truths, tag_vocab, k,
                metadata={"baseline": name, "seed": seed if name == "random" else None,
                          "n_movies": len(preds)},
            )
            print(f"{name:>14}  {report.summary_line()}")
            if out_dir:
                out_dir.mkdir(parents=True, exist_ok=True)
                with open(out_dir / f"{name}_k{k}.json", "w", encoding="utf-8") as f:
                    f.write(report.to_json())
    return 0


def cmd_compare(args):
    corpus_path = _require(getattr(args, "corpus", None), "--corpus", "to score both prediction sets")
    with _stage("predictions"):
        preds_a = _load_prediction_file(args.preds_a)
        preds_b = _load_prediction_file(args.preds_b)
    with _stage("corpus"):
        records = load_corpus(corpus_path)
        train_records = [r for r in records if r.split is Split.TRAIN]
        tag_vocab = TagVocabulary.from_records(train_records)
        truths = {r.movie_id: set(r.tags) for r in records}

    with _stage("compare"):
        overlaps, bands = prediction_overlap(preds_a, preds_b)
        k = len(next(iter(preds_a.values())))
        report_a = evaluate_predictions(preds_a, truths, tag_vocab, k, metadata={"file": args.preds_a})
        report_b = evaluate_predictions(preds_b, truths, tag_vocab, k, metadata={"file": args.preds_b})
        deltas = recall_delta(report_a, report_b)

    print("prediction overlap bands (fraction of movies):")
    for band, fraction in bands.items():
        print(f"  {band:>7}: {fraction:.1%}")
    shown = [d for d in deltas if d[1] != 0.0][:20]
    print(f"largest per-tag recall changes (a - b), top {len(shown)}:")
    for tag, delta in shown:
        print(f"  {delta:+.4f}  {tag}")
    if getattr(args, "out", None):
        payload = {
            "overlap_bands": bands,
            "per_movie_overlap": overlaps,
            "recall_delta": [{"tag": t, "delta": d} for t, d in deltas],
            "micro_f1_a": report_a.micro_f1,
            "micro_f1_b": report_b.micro_f1,
        }
        _write_or_print(json.dumps(payload, indent=2) + "\n", args.out)
    return 0


def cmd_emotion_flow(args):
    lexicon_path = _require(getattr(args, "lexicon", None), "--lexicon", "to score emotions")
    with _stage("lexicon"):
        lexicon = load_lexicon(lexicon_path)
    pairs = _read_input_texts(args)
    if len(pairs) != 1:
        raise ConfigError("emotion-flow takes exactly one text")
    with _stage("emotion"):
        flow = emotion_flow(pairs[0][1], lexicon, args.n_segments)
    _write_or_print(flow_to_csv(flow), getattr(args, "out", None))
    return 0


# ---------------------------------------------------------------------------
# argument wiring
# ---------------------------------------------------------------------------

def _add_common(sub, *flags):
    if "config" in flags:
        sub.add_argument("--config", help="JSON config file")
        sub.add_argument("--set", action="append", metavar="KEY=VALUE",
                         help="override one config key (e.g. model.lstm_units=8); repeatable")
    if "corpus" in flags:
        sub.add_argument("--corpus", help="delimiter-separated corpus file")
    if "lexicon" in flags:
        sub.add_argument("--lexicon", help="word-emotion association file")
    if "checkpoint" in flags:
        sub.add_argument("--checkpoint", help="model checkpoint path")
    if "variant" in flags:
        sub.add_argument("--variant", help="model variant",
                         choices=["cnn", "cnn_cw", "cnn_fe", "cnn_fe_pretrained"])
    if "k" in flags:
        sub.add_argument("--k", default=None, help="top-k cutoff (or comma list)")
    if "seed" in flags:
        sub.add_argument("--seed", type=int, default=None, help="random seed")
    if "out" in flags:
        sub.add_argument("--out", help="output file or directory")
    if "input" in flags:
        sub.add_argument("--text", help="one synopsis given inline")
        sub.add_argument("--input", help="file of synopses (movie_id<TAB>text or one text per line)")


def build_parser():
    parser = _Parser(prog="tagflow", description="Movie-tag prediction from plot synopses.")
    commands = parser.add_subparsers(dest="command", metavar="command")

    p = commands.add_parser("train", help="train a model and write a checkpoint")
    _add_common(p, "config", "corpus", "lexicon", "variant", "seed", "out")
    p.add_argument("--embeddings", help="pretrained word-vector text file")
    p.set_defaults(func=cmd_train)

    p = commands.add_parser("predict", help="rank tags for new synopses")
    _add_common(p, "checkpoint", "lexicon", "variant", "k", "out", "input")
    p.set_defaults(func=cmd_predict, k_default="5")

    p = commands.add_parser("evaluate", help="score a checkpoint on the test split")
    _add_common(p, "checkpoint", "corpus", "lexicon", "variant", "k", "out")
    p.set_defaults(func=cmd_evaluate, k_default="3,5,10")

    p = commands.add_parser("baselines", help="most-frequent and random baselines")
    _add_common(p, "corpus", "k", "seed", "out")
    p.set_defaults(func=cmd_baselines, k_default="3,5,10")

    p = commands.add_parser("compare", help="contrast two prediction files")
    p.add_argument("preds_a", help="first prediction file (tsv)")
    p.add_argument("preds_b", help="second prediction file (tsv)")
    _add_common(p, "corpus", "out")
    p.set_defaults(func=cmd_compare)

    p = commands.add_parser("emotion-flow", help="export a synopsis's emotion trajectory")
    _add_common(p, "lexicon", "out", "input")
    p.add_argument("--n-segments", type=int, default=DEFAULT_SEGMENTS,
                   help="number of narrative segments")
    p.set_defaults(func=cmd_emotion_flow)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not getattr(args, "command", None):
            parser.print_help(sys.stderr)
            return 1
        if hasattr(args, "k") and args.k is None:
            args.k = getattr(args, "k_default", "5")
        return args.func(args) or 0
    except (ConfigError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except (DataError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except NumericError as e:
        print(f"error: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
