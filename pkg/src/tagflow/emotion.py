"""Emotion flow: per-segment emotion/polarity percentages over a synopsis.

A synopsis is tokenized (before any stopword removal), split into N
contiguous word segments, and each segment is scored against a binary
word-emotion lexicon.  Entry d of a segment vector is the percentage of
the segment's words whose lexicon entry has dimension d set; a word
counts once per associated dimension.  All operations are pure.
"""

from __future__ import annotations

import numpy as np

from .corpus import tokenize
from .errors import DataError

#: Fixed dimension order of every emotion vector and of the CSV export.
EMOTIONS = ("anger", "anticipation", "disgust", "fear", "joy",
            "sadness", "surprise", "trust", "negative", "positive")

_EMOTION_INDEX = {name: i for i, name in enumerate(EMOTIONS)}

DEFAULT_SEGMENTS = 20


class EmotionLexicon:
    """Word to 10-bit association vector (see ``EMOTIONS`` for the order)."""

    def __init__(self, associations=None):
        self._vectors = {}
        if associations:
            for word, vec in associations.items():
                vec = np.asarray(vec, dtype=np.uint8)
                if vec.shape != (len(EMOTIONS),):
                    raise DataError(f"lexicon vector for '{word}' has shape {vec.shape}")
                self._vectors[word.lower()] = vec

    def __len__(self):
        return len(self._vectors)

    def __contains__(self, word):
        return word.lower() in self._vectors

    def vector(self, word):
        """Association bits for a word; zeros when absent."""
        vec = self._vectors.get(word.lower())
        if vec is None:
            return np.zeros(len(EMOTIONS), dtype=np.uint8)
        return vec

    def _set(self, word, emotion_idx, flag):
        vec = self._vectors.setdefault(word, np.zeros(len(EMOTIONS), dtype=np.uint8))
        vec[emotion_idx] = flag


def load_lexicon(path):
    """Parse the tab-separated triple format ``word<TAB>emotion<TAB>{0,1}``."""
    lex = EmotionLexicon()
    seen = {}
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise DataError(f"{path}: line {lineno}: expected 3 tab-separated fields")
            word, emotion, flag = parts[0].strip().lower(), parts[1].strip().lower(), parts[2].strip()
            if emotion not in _EMOTION_INDEX:
                raise DataError(f"{path}: line {lineno}: unknown emotion label '{emotion}'")
            if flag not in ("0", "1"):
                raise DataError(f"{path}: line {lineno}: association must be 0 or 1, got '{flag}'")
            key = (word, emotion)
            value = int(flag)
            if key in seen and seen[key] != value:
                raise DataError(f"{path}: line {lineno}: conflicting duplicate for {key}")
            seen[key] = value
            lex._set(word, _EMOTION_INDEX[emotion], value)
    return lex


def segment_words(tokens, n_segments=DEFAULT_SEGMENTS):
    """Split tokens into ``n_segments`` contiguous, order-preserving parts.

    With ``len(tokens) = q * n + r`` the first r segments hold q+1 tokens and
    the rest hold q; segments may be empty when there are fewer tokens than
    segments.
    """
    if n_segments < 1:
        raise ValueError(f"segment count must be >= 1, got {n_segments}")
    q, r = divmod(len(tokens), n_segments)
    segments = []
    start = 0
    for i in range(n_segments):
        size = q + 1 if i < r else q
        segments.append(tokens[start:start + size])
        start += size
    return segments


def emotion_vector(segment, lexicon):
    """Percentage of segment words associated with each dimension."""
    if not segment:
        return np.zeros(len(EMOTIONS), dtype=np.float64)
    counts = np.zeros(len(EMOTIONS), dtype=np.float64)
    for word in segment:
        counts += lexicon.vector(word)
    return 100.0 * counts / len(segment)


def emotion_flow(text, lexicon, n_segments=DEFAULT_SEGMENTS):
    """N x 10 matrix of per-segment emotion percentages for a raw text."""
    segments = segment_words(tokenize(text), n_segments)
    return np.stack([emotion_vector(s, lexicon) for s in segments])


def flow_to_csv(flow):
    """Render a flow matrix as CSV with 1-based segment numbers."""
    lines = ["segment," + ",".join(EMOTIONS)]
    for i, row in enumerate(flow, start=1):
        lines.append(f"{i}," + ",".join(format(float(v), "g") for v in row))
    return "\n".join(lines) + "\n"
