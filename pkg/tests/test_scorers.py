import numpy as np
import pytest

from articodec.scorers import ScorerCache, SubprocessScorer, score_external
from articodec.types import Waveform


class CountingScorer:
    """In-process fake adapter that records how often it runs."""

    scorer_id = "counting"

    def __init__(self, transcript="hello world"):
        self.calls = 0
        self.transcript = transcript

    def score(self, wav_path):
        self.calls += 1
        return self.transcript


class FailingScorer:
    scorer_id = "failing"

    def score(self, wav_path):
        raise RuntimeError("adapter exploded")


def clip(seed=0):
    return Waveform(np.random.default_rng(seed).uniform(-0.5, 0.5, 1600), 16000)


class TestScoreExternal:
    def test_no_adapter_degrades_to_skipped(self):
        results = score_external([clip(0), clip(1)], None)
        assert results == [{"skipped": True}, {"skipped": True}]

    def test_mock_adapter_returns_transcripts(self, tmp_path):
        scorer = CountingScorer("the quick fox")
        results = score_external([clip(0)], scorer, ScorerCache(tmp_path))
        assert results[0]["result"] == "the quick fox"
        assert scorer.calls == 1

    def test_cache_hit_skips_second_invocation(self, tmp_path):
        scorer = CountingScorer()
        cache = ScorerCache(tmp_path)
        score_external([clip(0)], scorer, cache)
        results = score_external([clip(0)], scorer, cache)
        assert scorer.calls == 1
        assert results[0]["cached"] is True

    def test_distinct_content_not_cached_together(self, tmp_path):
        scorer = CountingScorer()
        cache = ScorerCache(tmp_path)
        score_external([clip(0), clip(1)], scorer, cache)
        assert scorer.calls == 2

    def test_per_item_error_record(self, tmp_path):
        results = score_external([clip(0)], FailingScorer(), ScorerCache(tmp_path))
        assert "error" in results[0]
        assert "exploded" in results[0]["error"]

    def test_subprocess_echo_adapter(self, tmp_path):
        scorer = SubprocessScorer(["/bin/echo", "fixed transcript for"],
                                  scorer_id="echo")
        results = score_external([clip(0)], scorer, ScorerCache(tmp_path))
        assert results[0]["result"].startswith("fixed transcript for")

    def test_subprocess_timeout_recorded(self, tmp_path):
        # sh -c swallows the appended wav path as $0
        scorer = SubprocessScorer(["/bin/sh", "-c", "sleep 5"],
                                  scorer_id="sleepy", timeout_s=0.2)
        results = score_external([clip(0)], scorer, ScorerCache(tmp_path))
        assert results[0] == {"error": "timeout"}
