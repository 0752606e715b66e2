"""Synthetic annotation runs under an independent-uniform error model.

Gold labels are uniform over K classes; each annotator is independently
correct with its own accuracy and otherwise picks uniformly among the K-1
wrong labels.  Under this model the per-sample consistency probability has the
closed form ``a_s*a_z*a_g + (1-a_s)(1-a_z)(1-a_g)/(K-1)^2``, which serves as
the analytic oracle for the simulator.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .annotations import AnnotationTrack
from .consistency import cai_ratio, identify, stratified_accuracy


@dataclass(frozen=True)
class SimParams:
    """Size, class count, per-annotator accuracies, and RNG seed of one run."""

    n_labels: int
    n_samples: int
    acc_student: float
    acc_zero: float
    acc_single: float
    seed: int = 0

    def __post_init__(self):
        if self.n_labels < 2:
            raise ValueError(f"n_labels must be >= 2, got {self.n_labels}")
        if self.n_samples < 1:
            raise ValueError(f"n_samples must be >= 1, got {self.n_samples}")
        for name in ("acc_student", "acc_zero", "acc_single"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {value}")

    def accuracies(self) -> tuple[float, float, float]:
        return (self.acc_student, self.acc_zero, self.acc_single)


def _noisy_labels(rng: np.random.Generator, gold: np.ndarray, acc: float, k: int) -> np.ndarray:
    correct = rng.random(gold.shape[0]) < acc
    offsets = rng.integers(1, k, size=gold.shape[0])
    return np.where(correct, gold, (gold + offsets) % k)


def simulate_run(
    params: SimParams, trial: int = 0
) -> tuple[dict[str, str], tuple[AnnotationTrack, AnnotationTrack, AnnotationTrack]]:
    """Draw one synthetic run: gold labels plus the three annotation tracks.

    The RNG stream is derived from (seed, trial), so trials are independent
    and reproducible regardless of execution order.
    """
    rng = np.random.default_rng((params.seed, trial))
    k, n = params.n_labels, params.n_samples
    gold = rng.integers(0, k, size=n)
    arrays = [_noisy_labels(rng, gold, acc, k) for acc in params.accuracies()]

    ids = [f"s{i}" for i in range(n)]
    names = np.array([f"c{j}" for j in range(k)])
    gold_map = dict(zip(ids, names[gold].tolist()))
    sources = ("student", "teacher-zero", "teacher-single")
    tracks = tuple(
        AnnotationTrack(source=src, labels=dict(zip(ids, names[arr].tolist())))
        for src, arr in zip(sources, arrays)
    )
    return gold_map, tracks


def consistency_prob(params: SimParams) -> float:
    """Closed-form P(consistent): all annotators correct, or all wrong and
    colliding on the same one of the K-1 wrong labels."""
    a_s, a_z, a_g = params.accuracies()
    k = params.n_labels
    return a_s * a_z * a_g + (1 - a_s) * (1 - a_z) * (1 - a_g) / (k - 1) ** 2


def law_of_consistency_check(params: SimParams, trials: int) -> float:
    """Fraction of independent runs in which consistent samples outnumber
    inconsistent ones."""
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    wins = 0
    for trial in range(trials):
        _gold, (student, zero, single) = simulate_run(params, trial=trial)
        partition = identify(student, zero, single)
        if len(partition.consistent) > len(partition.inconsistent):
            wins += 1
    return wins / trials


def summarize_run(params: SimParams, trial: int = 0) -> dict[str, object]:
    """One sweep row: analytic vs empirical consistency, counts, ratio, and
    per-track stratified accuracies."""
    gold, (student, zero, single) = simulate_run(params, trial=trial)
    partition = identify(student, zero, single)
    ratio = cai_ratio(partition)
    row: dict[str, object] = {
        "n_labels": params.n_labels,
        "n_samples": params.n_samples,
        "acc_student": params.acc_student,
        "acc_zero": params.acc_zero,
        "acc_single": params.acc_single,
        "seed": params.seed,
        "trial": trial,
        "analytic_p": consistency_prob(params),
        "empirical_p": len(partition.consistent) / len(partition),
        "n_consistent": ratio.n_consistent,
        "n_inconsistent": ratio.n_inconsistent,
        "ratio": ratio.ratio,
    }
    for name, track in (("student", student), ("zero", zero), ("single", single)):
        acc_c, acc_i = stratified_accuracy(partition, track, gold)
        row[f"{name}_acc_consistent"] = acc_c
        row[f"{name}_acc_inconsistent"] = acc_i
    return row


def expected_ratio(params: SimParams) -> float:
    """Analytic CAI ratio p/(1-p) implied by the consistency probability."""
    p = consistency_prob(params)
    if p >= 1.0:
        return float("inf")
    return p / (1.0 - p)
