"""Corpus domain types, jsonl ingestion, preference splitting, and cluster construction.

The corpus-jsonl format is one JSON object per line with fields ``id`` (string),
``text`` (string), ``gold`` (string, optional) and ``vector`` (array of floats,
optional).  An optional first line ``{"labels": [...]}`` declares the label space;
otherwise the space is inferred from the gold labels present.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .validation import as_embedding, canonical_label


class CorpusFormatError(ValueError):
    """Raised when a corpus file violates the corpus-jsonl contract."""


@dataclass(frozen=True)
class TextInstance:
    """One unit of annotation: a unique id, its text, and an optional gold label."""

    id: str
    text: str
    gold: str | None = None
    vector: np.ndarray | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if not self.id:
            raise ValueError("instance id must be non-empty")
        if not self.text:
            raise ValueError(f"instance {self.id!r}: text must be non-empty")


class LabelSpace:
    """The ordered set of allowed labels.

    Labels are canonicalized (trimmed, lowercased) and kept in lexicographic
    order, which is the deterministic tie-break order used downstream.
    """

    def __init__(self, labels: Iterable[str]):
        canonical = [canonical_label(str(lab)) for lab in labels]
        if not canonical:
            raise ValueError("label space must be non-empty")
        if any(not lab for lab in canonical):
            raise ValueError("label space contains an empty label")
        if len(set(canonical)) != len(canonical):
            dupes = sorted({lab for lab in canonical if canonical.count(lab) > 1})
            raise ValueError(f"labels not distinct after canonicalization: {dupes}")
        self.labels: tuple[str, ...] = tuple(sorted(canonical))
        self.index: dict[str, int] = {lab: i for i, lab in enumerate(self.labels)}

    def __contains__(self, label: str) -> bool:
        return label in self.index

    def __len__(self) -> int:
        return len(self.labels)

    def __iter__(self):
        return iter(self.labels)

    def __eq__(self, other) -> bool:
        return isinstance(other, LabelSpace) and self.labels == other.labels

    def __repr__(self) -> str:
        return f"LabelSpace({list(self.labels)!r})"

    def position(self, label: str) -> int:
        return self.index[label]


@dataclass(frozen=True)
class Corpus:
    """A list of text instances together with their label space."""

    instances: tuple[TextInstance, ...]
    label_space: LabelSpace

    def __post_init__(self):
        seen = set()
        for inst in self.instances:
            if inst.id in seen:
                raise ValueError(f"duplicate instance id {inst.id!r}")
            seen.add(inst.id)
            if inst.gold is not None and inst.gold not in self.label_space:
                raise ValueError(
                    f"instance {inst.id!r}: gold label {inst.gold!r} outside declared label space"
                )

    def __len__(self) -> int:
        return len(self.instances)

    def ids(self) -> list[str]:
        return [inst.id for inst in self.instances]

    def texts(self) -> dict[str, str]:
        return {inst.id: inst.text for inst in self.instances}

    def golds(self) -> dict[str, str]:
        return {inst.id: inst.gold for inst in self.instances if inst.gold is not None}

    def vectors(self) -> dict[str, np.ndarray]:
        return {inst.id: inst.vector for inst in self.instances if inst.vector is not None}


def load_corpus(path: str | Path, labels: Sequence[str] | None = None) -> Corpus:
    """Load a corpus-jsonl file.

    ``labels`` optionally declares the label space explicitly (sidecar style);
    it is combined with / checked against a ``{"labels": [...]}`` header line.
    Errors report the offending 1-based line number.
    """
    path = Path(path)
    declared = list(labels) if labels is not None else None
    instances: list[TextInstance] = []
    seen_ids: dict[str, int] = {}
    dim: int | None = None

    with path.open(encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusFormatError(f"{path.name}:{lineno}: malformed JSON ({exc.msg})") from exc
            if not isinstance(obj, dict):
                raise CorpusFormatError(f"{path.name}:{lineno}: expected a JSON object")
            if "labels" in obj and "id" not in obj:
                if lineno != 1 and instances:
                    raise CorpusFormatError(
                        f"{path.name}:{lineno}: label header allowed only as the first line"
                    )
                header = [str(lab) for lab in obj["labels"]]
                declared = header if declared is None else declared + header
                continue
            if "id" not in obj or "text" not in obj:
                raise CorpusFormatError(f"{path.name}:{lineno}: missing required field 'id' or 'text'")
            iid = str(obj["id"])
            if iid in seen_ids:
                raise CorpusFormatError(
                    f"{path.name}:{lineno}: duplicate id {iid!r} (first seen on line {seen_ids[iid]})"
                )
            seen_ids[iid] = lineno
            text = str(obj["text"])
            if not text:
                raise CorpusFormatError(f"{path.name}:{lineno}: empty text for id {iid!r}")
            gold = obj.get("gold")
            gold = canonical_label(str(gold)) if gold is not None else None
            vector = None
            if obj.get("vector") is not None:
                try:
                    vector = as_embedding(obj["vector"], name=f"vector for id {iid!r}")
                except ValueError as exc:
                    raise CorpusFormatError(f"{path.name}:{lineno}: {exc}") from exc
                if dim is None:
                    dim = vector.size
                elif vector.size != dim:
                    raise CorpusFormatError(
                        f"{path.name}:{lineno}: inconsistent embedding dimension "
                        f"({vector.size} != {dim})"
                    )
            instances.append(TextInstance(id=iid, text=text, gold=gold, vector=vector))

    if not instances:
        raise CorpusFormatError(f"{path.name}: corpus is empty")

    golds = sorted({inst.gold for inst in instances if inst.gold is not None})
    if declared is not None:
        space = LabelSpace(declared)
        missing = [g for g in golds if g not in space]
        if missing:
            raise CorpusFormatError(
                f"{path.name}: gold label(s) outside declared label space: {missing}"
            )
    else:
        if not golds:
            raise CorpusFormatError(
                f"{path.name}: no gold labels and no label header; label space unknown"
            )
        space = LabelSpace(golds)
    return Corpus(instances=tuple(instances), label_space=space)


def save_corpus(corpus: Corpus, path: str | Path) -> None:
    """Write a corpus back to corpus-jsonl, label header first."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as handle:
        handle.write(json.dumps({"labels": list(corpus.label_space)}, ensure_ascii=False) + "\n")
        for inst in corpus.instances:
            obj: dict = {"id": inst.id, "text": inst.text}
            if inst.gold is not None:
                obj["gold"] = inst.gold
            if inst.vector is not None:
                obj["vector"] = inst.vector.tolist()
            handle.write(json.dumps(obj, ensure_ascii=False) + "\n")


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def split_preference(
    corpus: Corpus,
    fraction: float,
    seed: int,
    strategy: str = "stratified",
) -> tuple[list[tuple[str, str]], list[str]]:
    """Split a fully gold-labeled corpus into a preference set and a remainder.

    The preference size is ``max(#labels present, round-half-up(fraction * N))``.
    ``stratified`` guarantees at least one sample per label; ``random`` samples
    uniformly.  Deterministic for a fixed seed; preference and remainder
    partition the corpus ids.
    """
    if not 0.0 < fraction <= 1.0:
        raise ValueError(f"fraction must be in (0, 1], got {fraction}")
    if strategy not in ("stratified", "random"):
        raise ValueError(f"unknown strategy {strategy!r}")
    missing = [inst.id for inst in corpus.instances if inst.gold is None]
    if missing:
        raise ValueError(f"preference split requires gold labels; missing for ids {missing[:5]}")

    by_label: dict[str, list[int]] = {}
    for pos, inst in enumerate(corpus.instances):
        by_label.setdefault(inst.gold, []).append(pos)
    present = sorted(by_label)
    n = len(corpus)
    size = max(len(present), _round_half_up(fraction * n))
    rng = np.random.default_rng(seed)

    if strategy == "stratified":
        empty = [lab for lab in corpus.label_space if lab not in by_label]
        if empty:
            raise ValueError(f"stratified split impossible: no gold samples for label(s) {empty}")
        chosen = _stratified_pick(by_label, present, size, n, rng)
    else:
        chosen = set(rng.choice(n, size=size, replace=False).tolist())

    preference = [(inst.id, inst.gold) for pos, inst in enumerate(corpus.instances) if pos in chosen]
    remainder = [inst.id for pos, inst in enumerate(corpus.instances) if pos not in chosen]
    return preference, remainder


def _stratified_pick(
    by_label: Mapping[str, list[int]],
    present: list[str],
    size: int,
    n: int,
    rng: np.random.Generator,
) -> set[int]:
    """Per-label quotas: one guaranteed sample each, the rest allocated by
    largest remainder proportional to remaining capacity."""
    n_labels = len(present)
    extra = size - n_labels
    quotas = {lab: 1 for lab in present}
    if extra > 0:
        capacity = n - n_labels
        ideals = {lab: extra * (len(by_label[lab]) - 1) / capacity for lab in present}
        for lab in present:
            quotas[lab] += int(math.floor(ideals[lab]))
        leftover = extra - sum(int(math.floor(ideals[lab])) for lab in present)
        fractional = sorted(
            present, key=lambda lab: (-(ideals[lab] - math.floor(ideals[lab])), lab)
        )
        for lab in fractional[:leftover]:
            quotas[lab] += 1
    chosen: set[int] = set()
    for lab in present:
        positions = by_label[lab]
        order = rng.permutation(len(positions))
        chosen.update(positions[i] for i in order[: quotas[lab]])
    return chosen


@dataclass(frozen=True)
class PreferenceClusterSet:
    """The preference set grouped into one non-overlapping cluster per label."""

    clusters: dict[str, tuple[tuple[str, np.ndarray], ...]]
    dim: int

    def __post_init__(self):
        if not self.clusters:
            raise ValueError("no clusters: preference set is empty")
        seen: set[str] = set()
        for label, members in self.clusters.items():
            if not members:
                raise ValueError(f"cluster {label!r} is empty")
            for iid, _vec in members:
                if iid in seen:
                    raise ValueError(f"clusters overlap on id {iid!r}")
                seen.add(iid)

    def labels(self) -> tuple[str, ...]:
        return tuple(self.clusters)

    def total(self) -> int:
        return sum(len(members) for members in self.clusters.values())

    def member_ids(self) -> set[str]:
        return {iid for members in self.clusters.values() for iid, _ in members}

    def matrix(self, label: str) -> np.ndarray:
        return np.vstack([vec for _, vec in self.clusters[label]])


def build_clusters(
    preference: Sequence[tuple[str, str]],
    embeddings: Mapping[str, np.ndarray],
) -> PreferenceClusterSet:
    """Group preference (id, label) pairs into per-label clusters of embeddings."""
    if not preference:
        raise ValueError("no clusters: preference set is empty")
    grouped: dict[str, list[tuple[str, np.ndarray]]] = {}
    dim: int | None = None
    for iid, label in preference:
        if iid not in embeddings:
            raise ValueError(f"missing embedding for preference id {iid!r}")
        vec = as_embedding(embeddings[iid], dim=dim, name=f"embedding for id {iid!r}")
        dim = vec.size
        grouped.setdefault(canonical_label(label), []).append((iid, vec))
    clusters = {label: tuple(grouped[label]) for label in sorted(grouped)}
    return PreferenceClusterSet(clusters=clusters, dim=dim)
