"""Annotation tracks: one source's label per instance, jsonl-serializable.

A label of ``None`` marks an invalid annotation (unparseable or missing
response); it never equals any real label.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

SOURCES = ("student", "teacher-zero", "teacher-single")


@dataclass(frozen=True)
class AnnotationTrack:
    """Labels assigned by one annotator over a fixed id set.

    ``labels`` preserves insertion order (corpus order) so serialization is
    byte-deterministic.  ``scores`` optionally carries per-label similarity
    scores for sources that produce them.
    """

    source: str
    labels: dict[str, str | None]
    scores: dict[str, dict[str, float]] | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.source not in SOURCES:
            raise ValueError(f"unknown track source {self.source!r}; expected one of {SOURCES}")
        if self.scores is not None:
            stray = set(self.scores) - set(self.labels)
            if stray:
                raise ValueError(f"scores present for ids outside the track: {sorted(stray)[:5]}")

    def __len__(self) -> int:
        return len(self.labels)

    def ids(self) -> list[str]:
        return list(self.labels)

    def validate_labels(self, label_space) -> None:
        """Check that every non-invalid label belongs to the given label space."""
        bad = sorted({lab for lab in self.labels.values() if lab is not None and lab not in label_space})
        if bad:
            raise ValueError(f"track {self.source!r} has labels outside the label space: {bad}")

    def to_jsonl(self, path: str | Path) -> None:
        path = Path(path)
        with path.open("w", encoding="utf-8") as handle:
            for iid, label in self.labels.items():
                obj: dict = {"id": iid, "source": self.source, "label": label}
                if self.scores is not None and iid in self.scores:
                    obj["scores"] = self.scores[iid]
                handle.write(json.dumps(obj, ensure_ascii=False) + "\n")

    @classmethod
    def from_jsonl(cls, path: str | Path, expected_source: str | None = None) -> "AnnotationTrack":
        path = Path(path)
        labels: dict[str, str | None] = {}
        scores: dict[str, dict[str, float]] = {}
        source: str | None = None
        with path.open(encoding="utf-8") as handle:
            for lineno, line in enumerate(handle, start=1):
                line = line.strip()
                if not line:
                    continue
                obj = json.loads(line)
                if source is None:
                    source = obj["source"]
                elif obj["source"] != source:
                    raise ValueError(f"{path.name}:{lineno}: mixed sources in one track file")
                iid = str(obj["id"])
                if iid in labels:
                    raise ValueError(f"{path.name}:{lineno}: duplicate id {iid!r}")
                labels[iid] = obj["label"]
                if "scores" in obj:
                    scores[iid] = {str(k): float(v) for k, v in obj["scores"].items()}
        if source is None:
            # a zero-line file is a legitimate empty track when the caller
            # knows which source it expects
            if expected_source is None:
                raise ValueError(f"{path.name}: empty track file with unknown source")
            source = expected_source
        if expected_source is not None and source != expected_source:
            raise ValueError(f"{path.name}: source {source!r}, expected {expected_source!r}")
        return cls(source=source, labels=labels, scores=scores or None)


def accuracy(track: AnnotationTrack, gold: Mapping[str, str]) -> float:
    """Percentage of track labels equal to gold; invalid labels count as wrong."""
    if not track.labels:
        raise ValueError("cannot compute accuracy of an empty track")
    missing = [iid for iid in track.labels if iid not in gold]
    if missing:
        raise ValueError(f"gold labels missing for ids {missing[:5]}")
    hits = sum(1 for iid, lab in track.labels.items() if lab is not None and lab == gold[iid])
    return 100.0 * hits / len(track.labels)
