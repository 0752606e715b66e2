import itertools
import math

import pytest

from caieval.consistency import identify, stratified_accuracy
from caieval.simulate import (
    SimParams,
    consistency_prob,
    expected_ratio,
    law_of_consistency_check,
    simulate_run,
    summarize_run,
)


def params(k=10, n=1000, a=0.9, seed=0, **kw):
    base = dict(
        n_labels=k, n_samples=n, acc_student=a, acc_zero=a, acc_single=a, seed=seed
    )
    base.update(kw)
    return SimParams(**base)


def consistency_prob_oracle(p: SimParams) -> float:
    """Exhaustive enumeration over per-annotator label choices (gold fixed at 0)."""
    k = p.n_labels

    def choice_prob(label: int, acc: float) -> float:
        return acc if label == 0 else (1 - acc) / (k - 1)

    total = 0.0
    for label in range(k):
        total += (
            choice_prob(label, p.acc_student)
            * choice_prob(label, p.acc_zero)
            * choice_prob(label, p.acc_single)
        )
    return total


class TestConsistencyProb:
    def test_perfect_annotators(self):
        assert consistency_prob(params(a=1.0)) == 1.0

    def test_hand_value(self):
        got = consistency_prob(params(k=10, a=0.9))
        assert abs(got - (0.729 + 0.001 / 81)) < 1e-15

    def test_all_wrong_binary_collides(self):
        # with two labels, annotators that are always wrong always agree
        assert consistency_prob(params(k=2, a=0.0)) == 1.0

    def test_matches_enumeration_oracle(self):
        for a_s, a_z, a_g in itertools.product((0.0, 0.25, 0.6, 1.0), repeat=3):
            for k in (2, 3, 7):
                p = params(k=k, acc_student=a_s, acc_zero=a_z, acc_single=a_g)
                assert abs(consistency_prob(p) - consistency_prob_oracle(p)) < 1e-14


class TestSimulateRun:
    def test_perfect_annotators_copy_gold(self):
        gold, tracks = simulate_run(params(a=1.0, n=500))
        for track in tracks:
            assert track.labels == gold

    def test_always_wrong_binary_flips_everything(self):
        gold, (_s, _z, single) = simulate_run(params(k=2, n=200, acc_single=0.0, a=1.0))
        assert all(single.labels[i] != gold[i] for i in gold)

    def test_deterministic_per_seed_and_trial(self):
        first = simulate_run(params(seed=5), trial=3)
        second = simulate_run(params(seed=5), trial=3)
        assert first[0] == second[0]
        for a, b in zip(first[1], second[1]):
            assert a.labels == b.labels

    def test_trials_are_distinct_streams(self):
        a = simulate_run(params(seed=5, a=0.5), trial=0)
        b = simulate_run(params(seed=5, a=0.5), trial=1)
        assert a[0] != b[0]

    def test_track_sources_and_coverage(self):
        gold, tracks = simulate_run(params(n=50))
        assert [t.source for t in tracks] == ["student", "teacher-zero", "teacher-single"]
        for track in tracks:
            assert set(track.labels) == set(gold)

    def test_param_validation(self):
        with pytest.raises(ValueError, match="acc_student"):
            params(acc_student=1.2)
        with pytest.raises(ValueError, match="n_labels"):
            params(k=1)


class TestLawOfConsistency:
    def test_competent_models_win(self):
        # consistency_prob ~ 0.729 >> 0.5, so every trial has N_C > N_IC
        assert law_of_consistency_check(params(k=10, n=2000, a=0.9), trials=20) == 1.0

    def test_incompetent_models_lose(self):
        # consistency_prob ~ 0.014 << 0.5
        assert law_of_consistency_check(params(k=10, n=2000, a=0.2), trials=20) == 0.0

    def test_single_sample_is_a_coin_flip_at_half(self):
        # k=2 with accuracies ~0.7887 puts the consistency probability at ~0.5
        p = params(k=2, n=1, a=0.7887, seed=11)
        assert abs(consistency_prob(p) - 0.5) < 1e-3
        fraction = law_of_consistency_check(p, trials=2000)
        assert 0.45 < fraction < 0.55

    def test_trials_validation(self):
        with pytest.raises(ValueError, match="trials"):
            law_of_consistency_check(params(), trials=0)


class TestAgainstAnalyticOracle:
    def test_empirical_consistency_within_99pct_ci(self):
        p = params(k=10, n=10_000, a=0.9, seed=21)
        _gold, tracks = simulate_run(p)
        partition = identify(*tracks)
        expected = consistency_prob(p)
        half_width = 2.576 * math.sqrt(expected * (1 - expected) / p.n_samples)
        assert abs(len(partition.consistent) / p.n_samples - expected) < half_width

    def test_expected_ratio_within_5pct_at_50k(self):
        p = params(k=10, n=50_000, a=0.9, seed=8)
        row = summarize_run(p)
        assert row["ratio"] == pytest.approx(expected_ratio(p), rel=0.05)

    def test_expected_ratio_infinite_when_certain(self):
        assert math.isinf(expected_ratio(params(a=1.0)))


def test_summarize_run_row_shape():
    row = summarize_run(params(k=5, n=400, a=0.8, seed=2), trial=1)
    assert row["n_consistent"] + row["n_inconsistent"] == 400
    assert row["trial"] == 1
    assert 0.0 <= row["empirical_p"] <= 1.0
    assert row["analytic_p"] == consistency_prob(params(k=5, n=400, a=0.8))
    for key in ("student", "zero", "single"):
        assert f"{key}_acc_consistent" in row
        assert f"{key}_acc_inconsistent" in row


def test_stratified_accuracy_gap_on_grid():
    # teacher accuracy restricted to the consistent side must beat the
    # inconsistent side whenever every annotator is better than chance
    grid = itertools.product((0.3, 0.5, 0.7, 0.9), repeat=3)
    for acc_s, acc_z, acc_g in grid:
        for k in (5, 10):
            p = SimParams(
                n_labels=k,
                n_samples=20_000,
                acc_student=acc_s,
                acc_zero=acc_z,
                acc_single=acc_g,
                seed=31,
            )
            gold, tracks = simulate_run(p)
            partition = identify(*tracks)
            acc_c, acc_i = stratified_accuracy(partition, tracks[1], gold)
            assert acc_c is not None and acc_i is not None
            assert acc_c > acc_i, (acc_s, acc_z, acc_g, k)
