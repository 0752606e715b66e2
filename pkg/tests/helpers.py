"""Shared builders and oracles for the CLI and acceptance tests."""
from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from caieval.corpus import Corpus, TextInstance, build_clusters, split_preference
from caieval.embeddings import HashEmbeddingProvider, embed_corpus
from caieval.student import StudentConfig, annotate_student
from caieval.teacher import TeacherConfig, build_prompt, cache_key

def t_density(x: np.ndarray, dof: int) -> np.ndarray:
    coeff = math.exp(math.lgamma((dof + 1) / 2.0) - math.lgamma(dof / 2.0)) / math.sqrt(dof * math.pi)
    return coeff * (1.0 + x * x / dof) ** (-(dof + 1) / 2.0)


def two_tailed_p_by_trapezoid(dof: int, t_values: np.ndarray, n_points: int = 2_000_001) -> np.ndarray:
    """Independent oracle: composite trapezoid integration of the t density.

    Integrates the density cumulatively over [0, 20] on a uniform grid and
    reads p = 1 - 2 * integral at each requested |t|, which must lie on the
    grid.  With 2M points the truncation error is far below 1e-10.
    """
    grid = np.linspace(0.0, 20.0, n_points)
    dens = t_density(grid, dof)
    h = grid[1] - grid[0]
    cumulative = np.concatenate(([0.0], np.cumsum((dens[1:] + dens[:-1]) * 0.5 * h)))
    idx = np.rint(np.abs(np.asarray(t_values)) / h).astype(int)
    assert np.allclose(grid[idx], np.abs(t_values), atol=1e-12), "t values must lie on the grid"
    return 1.0 - 2.0 * cumulative[idx]


def pearson_oracle(xs, ys) -> float:
    """Straight textbook formula evaluated independently of the library."""
    n = len(xs)
    mean_x = sum(xs) / n
    mean_y = sum(ys) / n
    num = sum((x - mean_x) * (y - mean_y) for x, y in zip(xs, ys))
    den = math.sqrt(sum((x - mean_x) ** 2 for x in xs)) * math.sqrt(
        sum((y - mean_y) ** 2 for y in ys)
    )
    return num / den


LABEL_TOKENS = {
    "billing": ("invoice", "payment", "charge", "refund", "fee"),
    "shipping": ("delivery", "parcel", "tracking", "courier", "postage"),
    "account": ("login", "password", "profile", "signup", "settings"),
}

TOY = {
    "fraction": 0.2,
    "strategy": "stratified",
    "seed": 7,
    "dim": 64,
    "top_k": 3,
    "batch_size": 4,
    "model_name": "toy-chat",
}


def write_toy_corpus(path: Path, n_per_label: int = 10) -> None:
    lines = [json.dumps({"labels": sorted(LABEL_TOKENS)})]
    i = 0
    for label in sorted(LABEL_TOKENS):
        tokens = LABEL_TOKENS[label]
        for j in range(n_per_label):
            text = f"{tokens[j % 5]} {tokens[(j + 1) % 5]} {tokens[(j + 2) % 5]} ticket{i:02d}"
            lines.append(json.dumps({"id": f"t{i:02d}", "text": text, "gold": label}))
            i += 1
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def toy_student_setup(corpus: Corpus):
    """Reproduce the pipeline's student stage outside the CLI: returns
    (student_track, preference, remainder, embeddings)."""
    preference, remainder = split_preference(corpus, TOY["fraction"], TOY["seed"], TOY["strategy"])
    provider = HashEmbeddingProvider(dim=TOY["dim"], seed=TOY["seed"])
    embeddings = embed_corpus(provider, corpus)
    clusters = build_clusters(preference, embeddings)
    track = annotate_student(remainder, embeddings, clusters, StudentConfig(top_k=TOY["top_k"]))
    return track, preference, remainder, embeddings


def toy_teacher_config(**overrides) -> TeacherConfig:
    base = dict(
        model_name=TOY["model_name"],
        temperature=0.0,
        seed=TOY["seed"],
        batch_size=TOY["batch_size"],
        max_attempts=2,
        base_backoff_ms=0,
    )
    base.update(overrides)
    return TeacherConfig(**base)


def chunked(seq, size):
    return [list(seq[i : i + size]) for i in range(0, len(seq), size)]


def replay_entries(corpus: Corpus, ids, cfg: TeacherConfig, mode: str, answers, student_labels=None):
    """Canned responses keyed exactly as annotate_teacher will ask for them.

    ``answers`` maps id -> label text; an id mapping to None is omitted from
    the response (the parser should mark it invalid).
    """
    entries = []
    texts = corpus.texts()
    for batch in chunked(list(ids), cfg.batch_size):
        instances = [TextInstance(id=iid, text=texts[iid]) for iid in batch]
        prompt = build_prompt(instances, corpus.label_space, mode, student_labels)
        key = cache_key(cfg.model_name, prompt.text, cfg.temperature, cfg.seed)
        response = "\n".join(
            f"{iid}: {answers[iid]}" for iid in batch if answers.get(iid) is not None
        )
        entries.append({"key": key, "response": response})
    return entries


def write_jsonl(path: Path, objs) -> None:
    with path.open("w", encoding="utf-8") as handle:
        for obj in objs:
            handle.write(json.dumps(obj, ensure_ascii=False) + "\n")


def write_toy_manifest(path: Path, corpus_name: str, out_name: str, replay_name: str) -> None:
    manifest = {
        "name": "toy",
        "corpus": corpus_name,
        "out_dir": out_name,
        "seed": TOY["seed"],
        "preference": {"fraction": TOY["fraction"], "strategy": TOY["strategy"]},
        "embedding": {"provider": "hash", "dim": TOY["dim"], "seed": TOY["seed"]},
        "student": {"top_k": TOY["top_k"], "record_scores": False},
        "teachers": {
            "toy-model": {
                "model_name": TOY["model_name"],
                "client": "replay",
                "replay_file": replay_name,
                "temperature": 0.0,
                "seed": TOY["seed"],
                "batch_size": TOY["batch_size"],
            }
        },
    }
    path.write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")


def build_toy_workspace(root: Path, out_name: str = "out") -> dict:
    """Create corpus + replay + manifest under ``root``; returns key paths.

    The zero-shot replay flips the answers of the first two remainder ids so
    the partition has a non-trivial inconsistent side; single-shot answers are
    the gold labels throughout.
    """
    corpus_path = root / "corpus.jsonl"
    write_toy_corpus(corpus_path)
    from caieval.corpus import load_corpus

    corpus = load_corpus(corpus_path)
    student_track, preference, remainder, _embeddings = toy_student_setup(corpus)

    golds = corpus.golds()
    labels = list(corpus.label_space)
    zero_answers = dict(golds)
    for iid in remainder[:2]:
        current = labels.index(zero_answers[iid])
        zero_answers[iid] = labels[(current + 1) % len(labels)]

    cfg = toy_teacher_config()
    student_labels = {iid: lab for iid, lab in student_track.labels.items()}
    entries = replay_entries(corpus, remainder, cfg, "zero", zero_answers)
    entries += replay_entries(corpus, remainder, cfg, "single", golds, student_labels)
    replay_path = root / "replay.jsonl"
    write_jsonl(replay_path, entries)

    manifest_path = root / "manifest.json"
    write_toy_manifest(manifest_path, corpus_path.name, out_name, replay_path.name)
    return {
        "manifest": manifest_path,
        "corpus": corpus_path,
        "replay": replay_path,
        "out": root / out_name,
        "remainder": remainder,
        "student_track": student_track,
        "golds": golds,
    }
