from __future__ import annotations

import re

import pytest

from helpers import (
    GOLDEN_SYNOPSIS,
    SYNTHETIC_LEXICON,
    make_record,
    separable_records,
    write_corpus_csv,
    write_lexicon,
)
from tagflow.corpus import Split, load_stopwords
from tagflow.emotion import load_lexicon


@pytest.fixture(scope="session")
def stopwords():
    return load_stopwords()


@pytest.fixture(scope="session")
def synthetic_lexicon_path(tmp_path_factory):
    return write_lexicon(tmp_path_factory.mktemp("lexicon") / "emotions.txt")


@pytest.fixture(scope="session")
def synthetic_lexicon(synthetic_lexicon_path):
    return load_lexicon(synthetic_lexicon_path)


@pytest.fixture(scope="session")
def toy_corpus_records():
    """Six train + three test records with overlapping tags."""
    train = [
        make_record("t1", "a grim detective hunts the ruthless killer downtown", ["murder", "violence"]),
        make_record("t2", "two friends fall in love over a long charming summer", ["romantic"]),
        make_record("t3", "the killer returns and the detective sets a trap", ["murder"]),
        make_record("t4", "a haunted house terrifies the family with ghostly visions", ["paranormal"]),
        make_record("t5", "love letters and a wedding end the charming tale", ["romantic"]),
        make_record("t6", "violence erupts as rival gangs fight for the city", ["violence", "murder"]),
    ]
    test = [
        make_record("x1", "a detective chases a killer through the rainy city", ["murder"], split=Split.TEST),
        make_record("x2", "a charming love story blooms in the village", ["romantic"], split=Split.TEST),
        make_record("x3", "ghosts haunt the manor and violence follows", ["paranormal", "violence"], split=Split.TEST),
    ]
    return train + test


@pytest.fixture()
def toy_corpus_path(tmp_path, toy_corpus_records):
    return write_corpus_csv(tmp_path / "corpus.csv", toy_corpus_records)


@pytest.fixture(scope="session")
def separable_corpus():
    return separable_records(n=50, n_tags=5, seed=0)


@pytest.fixture(scope="session")
def golden_synopsis():
    return GOLDEN_SYNOPSIS


_CRITERION = re.compile(r"test_criterion_(\d+)_(\w+)")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Append one verdict line per acceptance criterion to the summary."""
    rows = {}
    for outcome, verdict in (("passed", "PASS"), ("failed", "FAIL"), ("skipped", "SKIP")):
        for report in terminalreporter.stats.get(outcome, ()):
            match = _CRITERION.search(getattr(report, "nodeid", ""))
            if match is None:
                continue
            detail = ""
            if outcome == "skipped" and isinstance(report.longrepr, tuple):
                detail = " -- " + report.longrepr[2].removeprefix("Skipped: ")
            rows[int(match.group(1))] = (match.group(2).replace("_", " "), verdict, detail)
    if not rows:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for number in sorted(rows):
        name, verdict, detail = rows[number]
        terminalreporter.write_line(f"criterion {number} ({name}): {verdict}{detail}")
