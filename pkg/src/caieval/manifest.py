"""Run manifests: the single JSON config that ties a pipeline run together.

A manifest names the corpus, the embedding provider, the student settings, and
one or more teachers; commands append completed stages to an append-only log
in the output directory, which is what makes runs resumable and auditable.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path

from .student import StudentConfig
from .teacher import TeacherConfig


@dataclass(frozen=True)
class TeacherSpec:
    """One teacher entry: base config, client kind, and replicate runs."""

    alias: str
    config: TeacherConfig
    client: str = "http"
    replay_file: Path | None = None
    runs: tuple[tuple[float, int], ...] = ()

    def __post_init__(self):
        if self.client not in ("http", "replay"):
            raise ValueError(f"teacher {self.alias!r}: unknown client {self.client!r}")
        if self.client == "replay" and self.replay_file is None:
            raise ValueError(f"teacher {self.alias!r}: replay client requires replay_file")
        if not self.runs:
            object.__setattr__(self, "runs", ((self.config.temperature, self.config.seed),))

    def run_config(self, run: int) -> TeacherConfig:
        temperature, seed = self.runs[run]
        return replace(self.config, temperature=temperature, seed=seed)


@dataclass(frozen=True)
class RunManifest:
    """Validated view of a manifest file plus derived output paths."""

    base_dir: Path
    name: str
    corpus_path: Path
    out_dir: Path
    seed: int
    preference_fraction: float
    preference_strategy: str
    embedding: dict
    student: StudentConfig
    include_preference: bool
    labels: tuple[str, ...] | None = None
    teachers: dict[str, TeacherSpec] = field(default_factory=dict)

    def teacher(self, alias: str) -> TeacherSpec:
        if alias not in self.teachers:
            raise ValueError(f"manifest defines no teacher {alias!r}; known: {sorted(self.teachers)}")
        return self.teachers[alias]

    # Output layout -------------------------------------------------------
    def preference_path(self) -> Path:
        return self.out_dir / "preference.json"

    def student_track_path(self) -> Path:
        return self.out_dir / "student.jsonl"

    def teacher_track_path(self, alias: str, mode: str, run: int) -> Path:
        return self.out_dir / f"{alias}.{mode}.r{run}.jsonl"

    def cache_path(self, alias: str) -> Path:
        return self.out_dir / f"cache.{alias}.jsonl"

    def cai_summary_path(self, alias: str) -> Path:
        return self.out_dir / f"cai.{alias}.json"

    def partition_path(self, alias: str, run: int) -> Path:
        return self.out_dir / f"cai.{alias}.r{run}.partition.jsonl"

    def stage_log(self) -> "StageLog":
        return StageLog(self.out_dir / "stages.jsonl")


class StageLog:
    """Append-only jsonl log of completed pipeline stages."""

    def __init__(self, path: Path):
        self.path = path

    def append(self, record: dict) -> None:
        entry = dict(record)
        entry["ts"] = datetime.now(timezone.utc).isoformat()
        self.path.parent.mkdir(parents=True, exist_ok=True)
        with self.path.open("a", encoding="utf-8") as handle:
            handle.write(json.dumps(entry, ensure_ascii=False) + "\n")

    def entries(self) -> list[dict]:
        if not self.path.exists():
            return []
        out = []
        with self.path.open(encoding="utf-8") as handle:
            for line in handle:
                line = line.strip()
                if line:
                    out.append(json.loads(line))
        return out


def _resolve(base: Path, value: str) -> Path:
    path = Path(value)
    return path if path.is_absolute() else base / path


def load_manifest(
    path: str | Path,
    out_override: str | None = None,
    seed_override: int | None = None,
) -> RunManifest:
    """Load and validate a manifest; referenced input files must exist."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"manifest not found: {path}")
    base = path.parent
    with path.open(encoding="utf-8") as handle:
        raw = json.load(handle)

    if "corpus" not in raw:
        raise ValueError(f"{path.name}: manifest missing 'corpus'")
    corpus_path = _resolve(base, raw["corpus"])
    if not corpus_path.exists():
        raise FileNotFoundError(f"{path.name}: corpus file not found: {corpus_path}")

    seed = int(seed_override if seed_override is not None else raw.get("seed", 0))
    out_dir = _resolve(base, out_override if out_override is not None else raw.get("out_dir", "out"))

    pref = raw.get("preference", {})
    student_raw = raw.get("student", {})
    student = StudentConfig(
        top_k=int(student_raw.get("top_k", 5)),
        record_scores=bool(student_raw.get("record_scores", False)),
    )

    embedding = dict(raw.get("embedding", {"provider": "hash", "dim": 256}))
    if embedding.get("provider") == "file" and "path" in embedding:
        file_path = _resolve(base, embedding["path"])
        if not file_path.exists():
            raise FileNotFoundError(f"{path.name}: embedding file not found: {file_path}")
        embedding["path"] = str(file_path)

    teachers: dict[str, TeacherSpec] = {}
    for alias, spec_raw in raw.get("teachers", {}).items():
        if "model_name" not in spec_raw:
            raise ValueError(f"{path.name}: teacher {alias!r} missing 'model_name'")
        config = TeacherConfig(
            model_name=spec_raw["model_name"],
            base_url=spec_raw.get("base_url", ""),
            api_key_env=spec_raw.get("api_key_env", ""),
            temperature=float(spec_raw.get("temperature", 0.0)),
            seed=int(spec_raw.get("seed", seed)),
            max_parallel=int(spec_raw.get("max_parallel", 1)),
            max_attempts=int(spec_raw.get("max_attempts", 3)),
            base_backoff_ms=int(spec_raw.get("base_backoff_ms", 250)),
            batch_size=int(spec_raw.get("batch_size", 1)),
            timeout=float(spec_raw.get("timeout", 120.0)),
        )
        replay_file = None
        if spec_raw.get("replay_file"):
            replay_file = _resolve(base, spec_raw["replay_file"])
            if not replay_file.exists():
                raise FileNotFoundError(f"{path.name}: replay file not found: {replay_file}")
        runs = tuple(
            (float(run["temperature"]), int(run["seed"])) for run in spec_raw.get("runs", [])
        )
        teachers[alias] = TeacherSpec(
            alias=alias,
            config=config,
            client=spec_raw.get("client", "http"),
            replay_file=replay_file,
            runs=runs,
        )

    labels = raw.get("labels")
    if labels is not None:
        if isinstance(labels, str):
            labels_path = _resolve(base, labels)
            if not labels_path.exists():
                raise FileNotFoundError(f"{path.name}: label file not found: {labels_path}")
            with labels_path.open(encoding="utf-8") as handle:
                loaded = json.load(handle)
            labels = loaded["labels"] if isinstance(loaded, dict) else loaded
        labels = tuple(str(lab) for lab in labels)

    return RunManifest(
        base_dir=base,
        name=str(raw.get("name", corpus_path.stem)),
        corpus_path=corpus_path,
        out_dir=out_dir,
        seed=seed,
        preference_fraction=float(pref.get("fraction", 0.05)),
        preference_strategy=str(pref.get("strategy", "stratified")),
        embedding=embedding,
        student=student,
        include_preference=bool(student_raw.get("include_preference", False)),
        labels=labels,
        teachers=teachers,
    )
