"""Command-line surface tying the pipeline together.

Subcommands mirror the pipeline stages: annotate-student, annotate-teacher,
cai, correlate, select, simulate.  Commands are idempotent given identical
manifests and caches; errors exit nonzero with a single JSON line on stderr.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import replace
from pathlib import Path

from . import benchmarks
from .annotations import AnnotationTrack, accuracy
from .consistency import aggregate_ratios, cai_ratio, export_partition, identify, stratified_accuracy
from .corpus import Corpus, build_clusters, load_corpus, split_preference
from .embeddings import (
    EmbeddingProvider,
    FileEmbeddingProvider,
    HashEmbeddingProvider,
    RemoteEmbeddingProvider,
    embed_corpus,
)
from .manifest import RunManifest, load_manifest
from .simulate import SimParams, consistency_prob, summarize_run
from .stats import build_selection_report, correlate, write_selection_csv
from .student import annotate_student
from .teacher import HttpChatClient, ReplayChatClient, ResponseCache, TeacherRunError, annotate_teacher


def _emit(obj: dict) -> None:
    sys.stdout.write(json.dumps(obj, ensure_ascii=False) + "\n")


def _json_ratio(value: float):
    return "inf" if math.isinf(value) else value


def _parse_ratio(value) -> float:
    return math.inf if value == "inf" else float(value)


def _build_provider(manifest: RunManifest, corpus: Corpus) -> EmbeddingProvider:
    cfg = manifest.embedding
    kind = cfg.get("provider", "hash")
    if kind == "hash":
        return HashEmbeddingProvider(dim=int(cfg.get("dim", 256)), seed=int(cfg.get("seed", manifest.seed)))
    if kind == "file":
        if cfg.get("path"):
            return FileEmbeddingProvider.from_jsonl(cfg["path"])
        return FileEmbeddingProvider.from_corpus(corpus, source=str(manifest.corpus_path))
    if kind == "remote":
        return RemoteEmbeddingProvider(
            base_url=cfg["base_url"],
            model=cfg.get("model", ""),
            api_key_env=cfg.get("api_key_env", ""),
            batch_size=int(cfg.get("batch_size", 64)),
            max_parallel=int(cfg.get("max_parallel", 1)),
            max_attempts=int(cfg.get("max_attempts", 3)),
            base_backoff_ms=int(cfg.get("base_backoff_ms", 250)),
            timeout=float(cfg.get("timeout", 60.0)),
        )
    raise ValueError(f"unknown embedding provider {kind!r}")


def _target_ids(manifest: RunManifest, corpus: Corpus, preference_ids: set[str]) -> list[str]:
    if manifest.include_preference:
        return corpus.ids()
    return [iid for iid in corpus.ids() if iid not in preference_ids]


def _load_run_manifest(args) -> RunManifest:
    manifest = load_manifest(
        args.manifest, out_override=args.out, seed_override=getattr(args, "seed", None)
    )
    if getattr(args, "include_preference", False):
        manifest = replace(manifest, include_preference=True)
    return manifest


def _load_preference(manifest: RunManifest) -> tuple[list[tuple[str, str]], list[str]]:
    path = manifest.preference_path()
    if not path.exists():
        raise FileNotFoundError(
            f"missing preference split {path.name} (run annotate-student first)"
        )
    with path.open(encoding="utf-8") as handle:
        obj = json.load(handle)
    return [(str(i), str(lab)) for i, lab in obj["preference"]], [str(i) for i in obj["remainder"]]


def cmd_annotate_student(args) -> int:
    manifest = _load_run_manifest(args)
    manifest.out_dir.mkdir(parents=True, exist_ok=True)
    corpus = load_corpus(manifest.corpus_path, labels=manifest.labels)
    preference, remainder = split_preference(
        corpus, manifest.preference_fraction, manifest.seed, manifest.preference_strategy
    )
    with manifest.preference_path().open("w", encoding="utf-8") as handle:
        json.dump({"preference": preference, "remainder": remainder}, handle, ensure_ascii=False)
        handle.write("\n")

    provider = _build_provider(manifest, corpus)
    embeddings = embed_corpus(provider, corpus)
    clusters = build_clusters(preference, embeddings)
    ids = _target_ids(manifest, corpus, {iid for iid, _ in preference})
    track = annotate_student(ids, embeddings, clusters, manifest.student)
    track.to_jsonl(manifest.student_track_path())
    manifest.stage_log().append(
        {"stage": "annotate-student", "output": manifest.student_track_path().name, "ids": len(ids)}
    )
    _emit(
        {
            "stage": "annotate-student",
            "ids": len(ids),
            "preference_size": len(preference),
            "provider": provider.info(),
            "output": str(manifest.student_track_path()),
        }
    )
    return 0


def cmd_annotate_teacher(args) -> int:
    manifest = _load_run_manifest(args)
    manifest.out_dir.mkdir(parents=True, exist_ok=True)
    spec = manifest.teacher(args.model)
    corpus = load_corpus(manifest.corpus_path, labels=manifest.labels)
    preference, _remainder = _load_preference(manifest)
    ids = _target_ids(manifest, corpus, {iid for iid, _ in preference})

    student_track = None
    if args.mode == "single":
        student_path = manifest.student_track_path()
        if not student_path.exists():
            raise FileNotFoundError(
                f"missing student track {student_path.name} (run annotate-student first)"
            )
        student_track = AnnotationTrack.from_jsonl(student_path, expected_source="student")

    client = ReplayChatClient(spec.replay_file) if spec.client == "replay" else HttpChatClient()
    cache = ResponseCache(manifest.cache_path(args.model))
    texts = corpus.texts()
    outputs = []
    for run in range(len(spec.runs)):
        cfg = spec.run_config(run)
        out_path = manifest.teacher_track_path(args.model, args.mode, run)
        try:
            track = annotate_teacher(
                ids, texts, corpus.label_space, args.mode, cfg, cache, client, student_track
            )
        except TeacherRunError as exc:
            partial = out_path.with_suffix(out_path.suffix + ".partial")
            exc.completed.to_jsonl(partial)
            raise RuntimeError(f"{exc} (completed prefix saved to {partial.name})") from exc
        track.validate_labels(corpus.label_space)
        track.to_jsonl(out_path)
        outputs.append(str(out_path))
        manifest.stage_log().append(
            {"stage": "annotate-teacher", "model": args.model, "mode": args.mode, "run": run,
             "output": out_path.name}
        )
    _emit(
        {
            "stage": "annotate-teacher",
            "model": args.model,
            "mode": args.mode,
            "runs": len(spec.runs),
            "ids": len(ids),
            "requests": client.calls,
            "cache_hits": cache.hits,
            "outputs": outputs,
        }
    )
    return 0


def cmd_cai(args) -> int:
    manifest = load_manifest(args.manifest, out_override=args.out)
    spec = manifest.teacher(args.model)
    corpus = load_corpus(manifest.corpus_path, labels=manifest.labels)
    student_path = manifest.student_track_path()
    if not student_path.exists():
        raise FileNotFoundError(f"missing student track {student_path.name} (run annotate-student first)")
    student = AnnotationTrack.from_jsonl(student_path, expected_source="student")

    golds = corpus.golds()
    have_golds = all(iid in golds for iid in student.labels)
    track_names = ("student", "teacher-zero", "teacher-single")

    runs = []
    ratios = []
    acc_sums = {name: 0.0 for name in track_names}
    for run in range(len(spec.runs)):
        tracks = {"student": student}
        for mode, source in (("zero", "teacher-zero"), ("single", "teacher-single")):
            path = manifest.teacher_track_path(args.model, mode, run)
            if not path.exists():
                raise FileNotFoundError(
                    f"missing teacher track {path.name} (run annotate-teacher --model {args.model} "
                    f"--mode {mode} first)"
                )
            tracks[source] = AnnotationTrack.from_jsonl(path, expected_source=source)
        partition = identify(tracks["student"], tracks["teacher-zero"], tracks["teacher-single"])
        export_partition(partition, manifest.partition_path(args.model, run))
        ratio = cai_ratio(partition)
        ratios.append(ratio.ratio)
        entry = {
            "run": run,
            "n_consistent": ratio.n_consistent,
            "n_inconsistent": ratio.n_inconsistent,
            "ratio": _json_ratio(ratio.ratio),
        }
        if have_golds:
            entry["accuracy"] = {}
            for name in track_names:
                acc = accuracy(tracks[name], golds)
                entry["accuracy"][name] = acc
                acc_sums[name] += acc
            acc_c, acc_i = stratified_accuracy(partition, tracks["teacher-zero"], golds)
            entry["stratified_teacher_zero"] = {"consistent": acc_c, "inconsistent": acc_i}
        runs.append(entry)

    mean, std = aggregate_ratios(ratios)
    summary = {
        "dataset": manifest.name,
        "model": args.model,
        "n_runs": len(runs),
        "runs": runs,
        "ratio_mean": _json_ratio(mean),
        "ratio_std": None if math.isnan(std) else std,
    }
    if have_golds:
        summary["accuracy_mean"] = {
            name: acc_sums[name] / len(runs) for name in track_names
        }
    out_path = manifest.cai_summary_path(args.model)
    with out_path.open("w", encoding="utf-8") as handle:
        json.dump(summary, handle, ensure_ascii=False, indent=2, sort_keys=True)
        handle.write("\n")
    manifest.stage_log().append({"stage": "cai", "model": args.model, "output": out_path.name})
    _emit(summary)
    return 0


def _load_summaries(paths: list[str]) -> list[dict]:
    out = []
    for raw in paths:
        with Path(raw).open(encoding="utf-8") as handle:
            out.append(json.load(handle))
    return out


def cmd_correlate(args) -> int:
    rows = []
    if args.fixture:
        for model in benchmarks.MODELS:
            cais, accs = benchmarks.correlation_series(model)
            result = correlate(cais, accs)
            rows.append({"model": model, **result.as_dict()})
    else:
        summaries = _load_summaries(args.summaries)
        by_model: dict[str, list[tuple[float, float]]] = {}
        for summary in summaries:
            if "accuracy_mean" not in summary:
                raise ValueError(
                    f"summary for {summary.get('dataset')!r}/{summary.get('model')!r} has no "
                    "accuracies; correlation needs gold labels"
                )
            ratio = _parse_ratio(summary["ratio_mean"])
            acc = summary["accuracy_mean"][args.track]
            if math.isinf(ratio):
                sys.stderr.write(
                    f"warning: dropping infinite CAI ratio for {summary['dataset']}/{summary['model']} "
                    "from correlation inputs\n"
                )
                continue
            by_model.setdefault(summary["model"], []).append((ratio, acc))
        for model in sorted(by_model):
            pairs = by_model[model]
            result = correlate([c for c, _ in pairs], [a for _, a in pairs])
            rows.append({"model": model, **result.as_dict()})

    if args.out:
        with Path(args.out).open("w", encoding="utf-8") as handle:
            json.dump(rows, handle, ensure_ascii=False, indent=2)
            handle.write("\n")
    _emit({"stage": "correlate", "models": len(rows), "report": rows, "output": args.out})
    return 0


def cmd_select(args) -> int:
    if args.fixture:
        cai_table, acc_table = benchmarks.selection_tables()
    else:
        summaries = _load_summaries(args.summaries)
        cai_table: dict[str, dict[str, float]] = {}
        acc_table: dict[str, dict[str, float]] = {}
        have_acc = True
        for summary in summaries:
            dataset, model = summary["dataset"], summary["model"]
            cai_table.setdefault(dataset, {})[model] = _parse_ratio(summary["ratio_mean"])
            if "accuracy_mean" in summary:
                acc_table.setdefault(dataset, {})[model] = summary["accuracy_mean"][args.track]
            else:
                have_acc = False
        if not have_acc:
            acc_table = None
    report = build_selection_report(cai_table, acc_table)
    if args.out:
        write_selection_csv(report, args.out)
    _emit(
        {
            "stage": "select",
            "datasets": len(report.rows),
            "match_rate": report.match_rate,
            "rows": [
                {**row, "accuracy_difference": row["accuracy_difference"]}
                for row in report.as_rows()
            ],
            "output": args.out,
        }
    )
    return 0


def _sim_params_from(obj: dict, default_seed: int) -> SimParams:
    return SimParams(
        n_labels=int(obj["n_labels"]),
        n_samples=int(obj["n_samples"]),
        acc_student=float(obj["acc_student"]),
        acc_zero=float(obj["acc_zero"]),
        acc_single=float(obj["acc_single"]),
        seed=int(obj.get("seed", default_seed)),
    )


def cmd_simulate(args) -> int:
    if args.sweep:
        with Path(args.sweep).open(encoding="utf-8") as handle:
            param_objs = json.load(handle)
        params_list = [_sim_params_from(obj, args.seed) for obj in param_objs]
    else:
        acc_student = args.acc_student if args.acc_student is not None else args.acc
        acc_zero = args.acc_zero if args.acc_zero is not None else args.acc
        acc_single = args.acc_single if args.acc_single is not None else args.acc
        if None in (acc_student, acc_zero, acc_single):
            raise ValueError("set --acc or all of --acc-student/--acc-zero/--acc-single")
        params_list = [
            SimParams(
                n_labels=args.n_labels,
                n_samples=args.n_samples,
                acc_student=acc_student,
                acc_zero=acc_zero,
                acc_single=acc_single,
                seed=args.seed,
            )
        ]

    rows = []
    for params in params_list:
        for trial in range(args.trials):
            rows.append(summarize_run(params, trial=trial))

    if args.out:
        fieldnames = list(rows[0].keys())
        with Path(args.out).open("w", encoding="utf-8", newline="") as handle:
            writer = csv.DictWriter(handle, fieldnames=fieldnames)
            writer.writeheader()
            for row in rows:
                writer.writerow({k: ("" if v is None else v) for k, v in row.items()})

    total = sum(row["n_consistent"] + row["n_inconsistent"] for row in rows)
    consistent = sum(row["n_consistent"] for row in rows)
    law_wins = sum(1 for row in rows if row["n_consistent"] > row["n_inconsistent"])
    _emit(
        {
            "stage": "simulate",
            "rows": len(rows),
            "analytic_p": [consistency_prob(p) for p in params_list],
            "empirical_p": consistent / total,
            "law_fraction": law_wins / len(rows),
            "output": args.out,
        }
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="caieval", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_run_flags(p):
        p.add_argument("--manifest", required=True, help="path to the run manifest JSON")
        p.add_argument("--out", default=None, help="override the manifest output directory")
        p.add_argument("--seed", type=int, default=None, help="override the manifest seed")
        p.add_argument(
            "--include-preference",
            action="store_true",
            help="annotate the preference samples too, not just the remainder",
        )

    p = sub.add_parser("annotate-student", help="split preference set, embed, and annotate")
    add_run_flags(p)
    p.set_defaults(func=cmd_annotate_student)

    p = sub.add_parser("annotate-teacher", help="query the teacher for one model and mode")
    add_run_flags(p)
    p.add_argument("--model", required=True, help="teacher alias from the manifest")
    p.add_argument("--mode", required=True, choices=["zero", "single"])
    p.set_defaults(func=cmd_annotate_teacher)

    p = sub.add_parser("cai", help="partition tracks and compute the CAI ratio")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", default=None)
    p.add_argument("--model", required=True)
    p.set_defaults(func=cmd_cai)

    p = sub.add_parser("correlate", help="Pearson correlation of CAI ratio vs accuracy")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--fixture", action="store_true", help="use the bundled benchmark table")
    group.add_argument("--summaries", nargs="+", help="cai summary JSON files")
    p.add_argument("--track", default="teacher-zero", help="accuracy track for summaries mode")
    p.add_argument("--out", default=None, help="write the report JSON here")
    p.set_defaults(func=cmd_correlate)

    p = sub.add_parser("select", help="pick the best model per dataset by CAI ratio")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--fixture", action="store_true")
    group.add_argument("--summaries", nargs="+")
    p.add_argument("--track", default="teacher-zero")
    p.add_argument("--out", default=None, help="write the selection CSV here")
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("simulate", help="synthetic annotation runs with analytic oracle")
    p.add_argument("--n-labels", type=int, default=10)
    p.add_argument("--n-samples", type=int, default=10_000)
    p.add_argument("--acc", type=float, default=None, help="set all three accuracies at once")
    p.add_argument("--acc-student", type=float, default=None)
    p.add_argument("--acc-zero", type=float, default=None)
    p.add_argument("--acc-single", type=float, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int, default=1)
    p.add_argument("--sweep", default=None, help="JSON file with a list of parameter objects")
    p.add_argument("--out", default=None, help="write the sweep CSV here")
    p.set_defaults(func=cmd_simulate)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:  # surface a single machine-parsable line
        sys.stderr.write(json.dumps({"error": f"{type(exc).__name__}: {exc}"}) + "\n")
        return 1


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
