"""Oracle behavior: ground truth, seeded noise, interactive handover, replay."""

from __future__ import annotations

import numpy as np
import pytest

from activespectral import Answer, GroundTruthOracle, InteractiveOracle, NoisyOracle
from activespectral.errors import NoGroundTruth, NotLogged, PendingAnswer
from activespectral.oracle import replay


class TestGroundTruth:
    def test_equal_labels_must_link(self):
        oracle = GroundTruthOracle([3, 3, 5])
        assert oracle.answer(0, 1) is Answer.MUST_LINK

    def test_unequal_labels_cannot_link(self):
        oracle = GroundTruthOracle([3, 3, 5])
        assert oracle.answer(0, 2) is Answer.CANNOT_LINK

    def test_symmetric(self, rng):
        labels = rng.integers(0, 4, size=20)
        oracle = GroundTruthOracle(labels)
        for _ in range(50):
            i, j = rng.integers(0, 20, size=2)
            if i == j:
                continue
            assert oracle.answer(i, j) is oracle.answer(j, i)

    def test_requires_labels(self):
        with pytest.raises(NoGroundTruth):
            GroundTruthOracle(None)

    def test_log_grows_per_query(self):
        oracle = GroundTruthOracle([0, 1, 0])
        oracle.answer(0, 1)
        oracle.answer(0, 2)
        assert len(oracle.answer_log) == 2


class TestNoisy:
    def test_rate_zero_equals_ground_truth(self, rng):
        labels = rng.integers(0, 3, size=15)
        clean = GroundTruthOracle(labels)
        noisy = NoisyOracle(labels, rate=0.0, seed=5)
        for _ in range(100):
            i, j = rng.integers(0, 15, size=2)
            if i == j:
                continue
            assert noisy.answer(i, j) is clean.answer(i, j)

    def test_flip_fraction_near_rate(self):
        # binomial CI: 100k draws at p=0.02 lie in [0.017, 0.023] w.h.p.
        labels = np.array([0, 1])
        oracle = NoisyOracle(labels, rate=0.02, seed=1234)
        flips = 0
        for _ in range(100_000):
            if oracle.answer(0, 1) is Answer.MUST_LINK:  # truth is cannot-link
                flips += 1
        assert 0.017 <= flips / 100_000 <= 0.023

    def test_flips_recorded_in_log(self):
        oracle = NoisyOracle([0, 0], rate=1.0, seed=0)
        assert oracle.answer(0, 1) is Answer.CANNOT_LINK  # always flipped
        assert oracle.answer_log[0].flipped is True

    def test_invalid_rate(self):
        with pytest.raises(ValueError):
            NoisyOracle([0, 1], rate=1.5)


class TestInteractive:
    def test_pending_without_answer(self):
        oracle = InteractiveOracle()
        with pytest.raises(PendingAnswer) as exc:
            oracle.answer(4, 17)
        assert exc.value.pair == (4, 17)

    def test_provided_answer_is_served_once(self):
        oracle = InteractiveOracle()
        oracle.provide(4, 17, Answer.MUST_LINK)
        assert oracle.answer(4, 17) is Answer.MUST_LINK
        with pytest.raises(PendingAnswer):
            oracle.answer(4, 17)

    def test_order_insensitive_handover(self):
        oracle = InteractiveOracle()
        oracle.provide(17, 4, Answer.CANNOT_LINK)
        assert oracle.answer(4, 17) is Answer.CANNOT_LINK


class TestReplay:
    def test_logged_pair(self):
        oracle = GroundTruthOracle([1, 1, 2, 2, 1, 2, 1, 1])
        oracle.answer(2, 7)
        assert replay(oracle.answer_log, 2, 7) is Answer.CANNOT_LINK
        assert replay(oracle.answer_log, 7, 2) is Answer.CANNOT_LINK

    def test_absent_pair(self):
        with pytest.raises(NotLogged):
            replay([], 0, 1)
