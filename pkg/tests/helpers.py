"""Shared builders for the test suite: corpora, lexicons, prediction oracles."""

from __future__ import annotations

import csv

import numpy as np

from tagflow.corpus import Split, SynopsisRecord

CORPUS_COLUMNS = ("movie_id", "title", "plot_synopsis", "tags", "split", "synopsis_source")

#: Synthetic three-word emotion lexicon used across emotion tests.
SYNTHETIC_LEXICON = """\
gleam\tjoy\t1
gleam\tpositive\t1
dread\tfear\t1
dread\tnegative\t1
mourn\tsadness\t1
mourn\tnegative\t1
calm\tanger\t0
"""

#: 80-token synopsis whose 20-segment flow is hand-computed in the golden CSV:
#: segments 1-5 all "gleam", 6-10 half "gleam" half "dread", 11-15 one
#: "mourn" in four words, 16-20 lexicon-free.
GOLDEN_SYNOPSIS = " ".join(
    ["gleam"] * 20
    + ["gleam", "gleam", "dread", "dread"] * 5
    + ["mourn", "table", "table", "table"] * 5
    + ["table"] * 20
)


def write_lexicon(path, text=SYNTHETIC_LEXICON):
    path.write_text(text, encoding="utf-8")
    return path


def write_corpus_csv(path, records):
    """Serialize records in the corpus column layout."""
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(CORPUS_COLUMNS)
        for r in records:
            split = r.split.value if isinstance(r.split, Split) else r.split
            writer.writerow([r.movie_id, r.title, r.synopsis, ", ".join(sorted(r.tags)), split, r.source])
    return path


def make_record(movie_id, synopsis, tags, split=Split.TRAIN, title=None):
    return SynopsisRecord(
        movie_id=movie_id,
        title=title or movie_id,
        synopsis=synopsis,
        tags=frozenset(tags),
        split=split,
    )


def separable_records(n=50, n_tags=5, seed=0, words_per_synopsis=40, split=Split.TRAIN):
    """Synthetic corpus whose tags are recoverable from signature words.

    Each tag owns six signature words; an example carries one or two tags
    and its synopsis is drawn almost entirely from their signatures, so a
    model that overfits the training set can rank the true tags on top.
    """
    rng = np.random.default_rng(seed)
    tags = [f"tone{chr(ord('a') + i)}" for i in range(n_tags)]
    signatures = {t: [f"{t}mark{j}" for j in range(6)] for t in tags}
    records = []
    for i in range(n):
        chosen = [tags[j] for j in rng.choice(n_tags, size=1 + (i % 2), replace=False)]
        words = []
        for _ in range(words_per_synopsis - 4):
            tag = chosen[int(rng.integers(len(chosen)))]
            words.append(signatures[tag][int(rng.integers(6))])
        words.extend(["common"] * 4)
        records.append(make_record(f"m{i:03d}", " ".join(words), chosen, split=split))
    return records


def brute_force_micro_f1(preds, truths):
    """Independent re-derivation: walk every (movie, tag) pair separately."""
    tp = fp = fn = 0
    for movie in preds:
        for tag in set(preds[movie]):
            if tag in truths[movie]:
                tp += 1
            else:
                fp += 1
        for tag in truths[movie]:
            if tag not in set(preds[movie]):
                fn += 1
    if 2 * tp + fp + fn == 0:
        return 0.0
    # 2PR/(P+R) simplified over pooled counts
    return 2 * tp / (2 * tp + fp + fn)


def brute_force_tag_recall(preds, truths, all_tags):
    """Independent re-derivation of mean per-tag recall with zero-fill."""
    recalls = []
    for tag in all_tags:
        instances = [movie for movie in preds if tag in truths[movie]]
        if not instances:
            recalls.append(0.0)
            continue
        hit = sum(1 for movie in instances if tag in set(preds[movie]))
        recalls.append(hit / len(instances))
    return sum(recalls) / len(all_tags), recalls


def brute_force_tags_learned(preds):
    seen = set()
    for tags in preds.values():
        for tag in tags:
            seen.add(tag)
    return len(seen)


def random_metric_instance(rng, max_movies=10, max_tags=10):
    """One random toy (preds, truths, vocab) triple for oracle comparison."""
    n_tags = int(rng.integers(2, max_tags + 1))
    vocab = [f"t{i}" for i in range(n_tags)]
    n_movies = int(rng.integers(1, max_movies + 1))
    k = int(rng.integers(1, n_tags + 1))
    preds = {}
    truths = {}
    for m in range(n_movies):
        movie = f"m{m}"
        preds[movie] = [vocab[i] for i in rng.choice(n_tags, size=k, replace=False)]
        n_truth = int(rng.integers(0, n_tags + 1))
        truths[movie] = {vocab[i] for i in rng.choice(n_tags, size=n_truth, replace=False)}
    return preds, truths, vocab
