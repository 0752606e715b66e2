"""Consistency identification across the three annotation tracks and the CAI ratio.

An instance is consistent when the student, zero-shot teacher, and single-shot
teacher all assigned the same valid label; any disagreement or invalid label
makes it inconsistent.  The CAI ratio N_C / N_IC is the resulting unsupervised
reliability signal.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

from .annotations import AnnotationTrack


@dataclass(frozen=True)
class ConsistencyPartition:
    """Disjoint split of the jointly annotated ids into consistent/inconsistent."""

    consistent: frozenset[str]
    inconsistent: frozenset[str]
    triples: dict[str, tuple[str | None, str | None, str | None]]

    def __post_init__(self):
        if self.consistent & self.inconsistent:
            raise ValueError("consistent and inconsistent sets overlap")
        if self.consistent | self.inconsistent != set(self.triples):
            raise ValueError("partition does not cover the annotated id set")

    def __len__(self) -> int:
        return len(self.triples)


@dataclass(frozen=True)
class CaiRatio:
    """Consistent-over-inconsistent sample counts and their ratio.

    ``ratio`` is ``math.inf`` when there is no inconsistent sample; an empty
    partition (0/0) is rejected.
    """

    n_consistent: int
    n_inconsistent: int

    def __post_init__(self):
        if self.n_consistent < 0 or self.n_inconsistent < 0:
            raise ValueError("counts must be non-negative")
        if self.n_consistent == 0 and self.n_inconsistent == 0:
            raise ValueError("CAI ratio undefined on an empty partition")

    @property
    def ratio(self) -> float:
        if self.n_inconsistent == 0:
            return math.inf
        return self.n_consistent / self.n_inconsistent

    def formatted(self, digits: int = 3) -> str:
        return "inf" if math.isinf(self.ratio) else f"{self.ratio:.{digits}f}"


def identify(
    student: AnnotationTrack,
    zero: AnnotationTrack,
    single: AnnotationTrack,
) -> ConsistencyPartition:
    """Partition ids by triple agreement: consistent iff all three labels are
    equal and none is invalid."""
    ids = set(student.labels)
    for track in (zero, single):
        other = set(track.labels)
        if other != ids:
            only_a = sorted(ids - other)[:5]
            only_b = sorted(other - ids)[:5]
            raise ValueError(
                f"tracks cover different id sets (e.g. student-only {only_a}, "
                f"{track.source}-only {only_b})"
            )
    consistent: set[str] = set()
    inconsistent: set[str] = set()
    triples: dict[str, tuple[str | None, str | None, str | None]] = {}
    for iid, s_label in student.labels.items():
        z_label = zero.labels[iid]
        g_label = single.labels[iid]
        triples[iid] = (s_label, z_label, g_label)
        if s_label is not None and s_label == z_label and s_label == g_label:
            consistent.add(iid)
        else:
            inconsistent.add(iid)
    return ConsistencyPartition(
        consistent=frozenset(consistent),
        inconsistent=frozenset(inconsistent),
        triples=triples,
    )


def cai_ratio(partition: ConsistencyPartition) -> CaiRatio:
    if len(partition) == 0:
        raise ValueError("cannot compute the CAI ratio of an empty partition")
    return CaiRatio(
        n_consistent=len(partition.consistent),
        n_inconsistent=len(partition.inconsistent),
    )


def stratified_accuracy(
    partition: ConsistencyPartition,
    track: AnnotationTrack,
    gold: Mapping[str, str],
) -> tuple[float | None, float | None]:
    """Track accuracy (percent) over the consistent and inconsistent subsets.

    An empty subset yields None for its side.
    """
    missing = [iid for iid in partition.triples if iid not in gold]
    if missing:
        raise ValueError(f"gold labels missing for ids {missing[:5]}")
    uncovered = [iid for iid in partition.triples if iid not in track.labels]
    if uncovered:
        raise ValueError(f"track {track.source!r} does not cover ids {uncovered[:5]}")

    def subset_accuracy(subset: frozenset[str]) -> float | None:
        if not subset:
            return None
        hits = sum(
            1 for iid in subset if track.labels[iid] is not None and track.labels[iid] == gold[iid]
        )
        return 100.0 * hits / len(subset)

    return subset_accuracy(partition.consistent), subset_accuracy(partition.inconsistent)


def aggregate_ratios(ratios: Sequence[float]) -> tuple[float, float]:
    """Mean and population standard deviation of per-run CAI ratios.

    Infinite ratios propagate to an infinite mean (std is 0 for a single run).
    """
    if not ratios:
        raise ValueError("no ratios to aggregate")
    n = len(ratios)
    mean = sum(ratios) / n
    if math.isinf(mean):
        return mean, 0.0 if n == 1 else math.nan
    variance = sum((r - mean) ** 2 for r in ratios) / n
    return mean, math.sqrt(variance)


def export_partition(partition: ConsistencyPartition, path: str | Path) -> None:
    """Write the per-id partition as jsonl, one object per annotated id."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as handle:
        for iid, (s_label, z_label, g_label) in partition.triples.items():
            obj = {
                "id": iid,
                "student": s_label,
                "zero": z_label,
                "single": g_label,
                "consistent": iid in partition.consistent,
            }
            handle.write(json.dumps(obj, ensure_ascii=False) + "\n")
