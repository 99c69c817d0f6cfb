"""Emotion flow extraction: lexicon parsing, segmentation, percentages, CSV."""

from __future__ import annotations

import os
from pathlib import Path

import numpy as np
import numpy.testing as npt
import pytest

from helpers import GOLDEN_SYNOPSIS, write_lexicon
from tagflow.corpus import tokenize
from tagflow.emotion import (
    DEFAULT_SEGMENTS,
    EMOTIONS,
    EmotionLexicon,
    emotion_flow,
    emotion_vector,
    flow_to_csv,
    load_lexicon,
    segment_words,
)
from tagflow.errors import DataError

GOLDEN_CSV = Path(__file__).parent / "fixtures" / "emotion_flow_golden.csv"


def idx(name):
    return EMOTIONS.index(name)


class TestLexicon:
    def test_dimension_order_is_fixed(self):
        assert EMOTIONS == ("anger", "anticipation", "disgust", "fear", "joy",
                            "sadness", "surprise", "trust", "negative", "positive")

    def test_triples_become_bit_vectors(self, synthetic_lexicon):
        vec = synthetic_lexicon.vector("gleam")
        expected = np.zeros(10, dtype=np.uint8)
        expected[idx("joy")] = 1
        expected[idx("positive")] = 1
        npt.assert_array_equal(vec, expected)

    def test_absent_word_is_all_zeros(self, synthetic_lexicon):
        npt.assert_array_equal(synthetic_lexicon.vector("table"), np.zeros(10, dtype=np.uint8))

    def test_zero_flag_rows_leave_word_neutral(self, synthetic_lexicon):
        # "calm" appears in the file only with association 0
        assert "calm" in synthetic_lexicon
        npt.assert_array_equal(synthetic_lexicon.vector("calm"), np.zeros(10, dtype=np.uint8))

    def test_lookup_is_case_insensitive(self, synthetic_lexicon):
        npt.assert_array_equal(synthetic_lexicon.vector("GLEAM"),
                               synthetic_lexicon.vector("gleam"))

    def test_wrong_field_count_reports_line(self, tmp_path):
        path = write_lexicon(tmp_path / "bad.txt", "gleam\tjoy\t1\ndread\tfear\n")
        with pytest.raises(DataError, match="line 2"):
            load_lexicon(path)

    def test_unknown_emotion_reports_line(self, tmp_path):
        path = write_lexicon(tmp_path / "bad.txt", "gleam\tbliss\t1\n")
        with pytest.raises(DataError, match="line 1.*bliss"):
            load_lexicon(path)

    def test_non_binary_flag_rejected(self, tmp_path):
        path = write_lexicon(tmp_path / "bad.txt", "gleam\tjoy\t2\n")
        with pytest.raises(DataError, match="0 or 1"):
            load_lexicon(path)

    def test_conflicting_duplicate_rejected(self, tmp_path):
        path = write_lexicon(tmp_path / "bad.txt", "gleam\tjoy\t1\ngleam\tjoy\t0\n")
        with pytest.raises(DataError, match="line 2"):
            load_lexicon(path)

    def test_consistent_duplicate_tolerated(self, tmp_path):
        path = write_lexicon(tmp_path / "dup.txt", "gleam\tjoy\t1\ngleam\tjoy\t1\n")
        lex = load_lexicon(path)
        assert lex.vector("gleam")[idx("joy")] == 1

    def test_blank_lines_skipped(self, tmp_path):
        path = write_lexicon(tmp_path / "blank.txt", "\ngleam\tjoy\t1\n\n")
        assert len(load_lexicon(path)) == 1

    def test_direct_construction_validates_shape(self):
        with pytest.raises(DataError):
            EmotionLexicon({"w": [1, 0]})


class TestSegmentWords:
    def test_even_division(self):
        segments = segment_words([f"w{i}" for i in range(100)], 20)
        assert len(segments) == 20
        assert all(len(s) == 5 for s in segments)

    def test_remainder_goes_to_leading_segments(self):
        segments = segment_words(list(range(43)), 20)
        sizes = [len(s) for s in segments]
        assert sizes == [3] * 3 + [2] * 17

    def test_fewer_tokens_than_segments(self):
        segments = segment_words(list("abcde"), 20)
        sizes = [len(s) for s in segments]
        assert sizes == [1] * 5 + [0] * 15
        assert segments[0] == ["a"] and segments[4] == ["e"]

    def test_concatenation_restores_input(self):
        rng = np.random.default_rng(4)
        for _ in range(100):
            tokens = [f"t{i}" for i in range(int(rng.integers(0, 200)))]
            n = int(rng.integers(1, 40))
            segments = segment_words(tokens, n)
            assert len(segments) == n
            assert [t for s in segments for t in s] == tokens
            assert max(len(s) for s in segments) - min(len(s) for s in segments) <= 1

    def test_invalid_segment_count(self):
        with pytest.raises(ValueError):
            segment_words(["a"], 0)


class TestEmotionVector:
    def test_hand_computed_percentages(self, synthetic_lexicon):
        vec = emotion_vector(["gleam", "gleam", "dread", "mourn"], synthetic_lexicon)
        expected = np.zeros(10)
        expected[idx("joy")] = 50.0
        expected[idx("positive")] = 50.0
        expected[idx("fear")] = 25.0
        expected[idx("sadness")] = 25.0
        expected[idx("negative")] = 50.0
        npt.assert_allclose(vec, expected)

    def test_empty_segment_is_zero(self, synthetic_lexicon):
        npt.assert_array_equal(emotion_vector([], synthetic_lexicon), np.zeros(10))

    def test_word_counts_once_per_dimension(self, synthetic_lexicon):
        vec = emotion_vector(["gleam"], synthetic_lexicon)
        assert vec[idx("joy")] == 100.0
        assert vec[idx("positive")] == 100.0
        assert vec.sum() == 200.0


class TestEmotionFlow:
    def test_shape_and_dtype(self, synthetic_lexicon):
        flow = emotion_flow("gleam dread mourn", synthetic_lexicon)
        assert flow.shape == (DEFAULT_SEGMENTS, 10)
        assert flow.dtype == np.float64

    def test_uniform_text_gives_constant_rows(self, synthetic_lexicon):
        flow = emotion_flow(" ".join(["gleam"] * 40), synthetic_lexicon)
        expected = np.zeros(10)
        expected[idx("joy")] = 100.0
        expected[idx("positive")] = 100.0
        npt.assert_array_equal(flow, np.tile(expected, (20, 1)))

    def test_custom_segment_count(self, synthetic_lexicon):
        flow = emotion_flow("gleam dread", synthetic_lexicon, n_segments=2)
        assert flow.shape == (2, 10)
        assert flow[0, idx("joy")] == 100.0
        assert flow[1, idx("fear")] == 100.0

    def test_tokenization_matches_corpus_rules(self, synthetic_lexicon):
        # Punctuation-stripped, case-folded tokens feed the lexicon.
        flow = emotion_flow('"GLEAM!"', synthetic_lexicon, n_segments=1)
        assert flow[0, idx("joy")] == 100.0

    def test_bounds_and_repetition_invariance(self, synthetic_lexicon):
        rng = np.random.default_rng(11)
        words = ["gleam", "dread", "mourn", "calm", "table", "river"]
        for _ in range(200):
            n_tokens = int(rng.integers(1, 120))
            tokens = [words[i] for i in rng.integers(0, len(words), size=n_tokens)]
            text = " ".join(tokens)
            n = int(rng.integers(1, 30))
            flow = emotion_flow(text, synthetic_lexicon, n_segments=n)
            assert flow.shape == (n, 10)
            assert (flow >= 0.0).all() and (flow <= 100.0).all()
            # the flow decomposes into per-segment vectors, and each vector
            # is invariant to repeating its segment's words k times
            segments = segment_words(tokenize(text), n)
            k = int(rng.integers(2, 5))
            npt.assert_array_equal(
                flow, np.stack([emotion_vector(s, synthetic_lexicon) for s in segments])
            )
            for s, row in zip(segments, flow):
                if s:
                    npt.assert_allclose(emotion_vector(s * k, synthetic_lexicon), row, atol=1e-12)


class TestFlowCsv:
    def test_golden_synopsis_byte_exact(self, synthetic_lexicon):
        flow = emotion_flow(GOLDEN_SYNOPSIS, synthetic_lexicon)
        assert flow_to_csv(flow) == GOLDEN_CSV.read_text(encoding="utf-8")

    def test_header_and_segment_numbering(self, synthetic_lexicon):
        lines = flow_to_csv(np.zeros((3, 10))).splitlines()
        assert lines[0] == "segment," + ",".join(EMOTIONS)
        assert [ln.split(",")[0] for ln in lines[1:]] == ["1", "2", "3"]

    def test_fractional_values_render_compactly(self):
        flow = np.zeros((1, 10))
        flow[0, 0] = 100.0 / 3.0
        cell = flow_to_csv(flow).splitlines()[1].split(",")[1]
        assert cell == format(100.0 / 3.0, "g")


@pytest.mark.skipif("NRC_LEXICON" not in os.environ,
                    reason="set NRC_LEXICON to the word-level lexicon file to enable")
def test_real_lexicon_loads_with_expected_coverage():
    lex = load_lexicon(os.environ["NRC_LEXICON"])
    assert len(lex) == 14182
    vec = lex.vector("abandon")
    assert vec[idx("fear")] == 1
    assert vec[idx("negative")] == 1
    assert vec[idx("sadness")] == 1
    assert vec[idx("joy")] == 0
