"""Noisy-teacher annotation through a chat-completion endpoint.

The teacher is queried in two modes: zero-shot (text only) and single-shot
(text plus the student's preliminary label for the same instance).  Responses
are cached by a SHA-256 key over (model, prompt, temperature, seed) so a key
is fetched from the network at most once per run; the same cache format doubles
as a replay file for fully offline, deterministic runs.
"""
from __future__ import annotations

import hashlib
import json
import re
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Mapping, Sequence

import requests

from ._http import BadResponseError, TransportError, post_json
from .annotations import AnnotationTrack
from .corpus import LabelSpace, TextInstance
from .validation import canonical_label


class RetriesExhaustedError(RuntimeError):
    """All configured attempts against the endpoint failed."""


class TeacherResponseError(RuntimeError):
    """The endpoint answered, but not with a usable chat completion."""


class ReplayMissError(RuntimeError):
    """The replay file has no response recorded for the requested prompt."""


class TeacherRunError(RuntimeError):
    """An annotation run aborted partway; ``completed`` holds the finished prefix."""

    def __init__(self, message: str, completed: AnnotationTrack):
        super().__init__(message)
        self.completed = completed


@dataclass(frozen=True)
class TeacherConfig:
    """Endpoint, sampling, batching, and retry settings for one teacher."""

    model_name: str
    base_url: str = ""
    api_key_env: str = ""
    temperature: float = 0.0
    seed: int = 0
    max_parallel: int = 1
    max_attempts: int = 3
    base_backoff_ms: int = 250
    batch_size: int = 1
    timeout: float = 120.0

    def __post_init__(self):
        if not self.model_name:
            raise ValueError("model_name must be non-empty")
        if self.temperature < 0:
            raise ValueError(f"temperature must be >= 0, got {self.temperature}")
        if self.max_parallel < 1:
            raise ValueError(f"max_parallel must be >= 1, got {self.max_parallel}")
        if self.max_attempts < 1:
            raise ValueError(f"max_attempts must be >= 1, got {self.max_attempts}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")


@dataclass(frozen=True)
class PromptRecord:
    """A rendered prompt together with the instance ids it covers."""

    ids: tuple[str, ...]
    text: str
    mode: str
    student_labels: tuple[tuple[str, str], ...] | None = None


_PROMPT_HEADER = (
    "You are a careful text annotator. Assign exactly one label to each text below.\n"
    "Allowed labels:\n{labels}\n"
    "Answer with one line per text, formatted exactly as `<id>: <label>`,\n"
    "using only labels from the allowed list.\n"
)


def build_prompt(
    instances: Sequence[TextInstance],
    label_space: LabelSpace,
    mode: str,
    student_labels: Mapping[str, str] | None = None,
) -> PromptRecord:
    """Render the deterministic annotation prompt for a batch of instances.

    In single mode each instance block carries the student's label as a
    preliminary suggestion; zero mode carries none.
    """
    if mode not in ("zero", "single"):
        raise ValueError(f"mode must be 'zero' or 'single', got {mode!r}")
    if not instances:
        raise ValueError("cannot build a prompt for zero instances")
    if mode == "single":
        if student_labels is None:
            raise ValueError("single mode requires student labels")
        missing = [inst.id for inst in instances if inst.id not in student_labels]
        if missing:
            raise ValueError(f"single mode missing student label for ids {missing[:5]}")

    parts = [_PROMPT_HEADER.format(labels="\n".join(f"- {lab}" for lab in label_space))]
    kept: list[tuple[str, str]] = []
    for inst in instances:
        block = f"\n[{inst.id}]\n{inst.text}\n"
        if mode == "single":
            label = student_labels[inst.id]
            block += f"A preliminary annotation suggests: {label}\n"
            kept.append((inst.id, label))
        parts.append(block)
    return PromptRecord(
        ids=tuple(inst.id for inst in instances),
        text="".join(parts),
        mode=mode,
        student_labels=tuple(kept) if mode == "single" else None,
    )


def cache_key(model_name: str, prompt_text: str, temperature: float, seed: int) -> str:
    """SHA-256 over the request-defining tuple (model, prompt, temperature, seed)."""
    payload = json.dumps([model_name, prompt_text, temperature, seed], ensure_ascii=False)
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


class ResponseCache:
    """Append-only jsonl response cache, loaded into memory on open.

    Lines are ``{"key": hex, "response": str, "ts": iso8601}``.  Writes of the
    same key are idempotent (identical values), so concurrent writers are safe.
    """

    def __init__(self, path: str | Path | None = None):
        self.path = Path(path) if path is not None else None
        self._entries: dict[str, str] = {}
        self._lock = threading.Lock()
        self.hits = 0
        if self.path is not None and self.path.exists():
            with self.path.open(encoding="utf-8") as handle:
                for line in handle:
                    line = line.strip()
                    if not line:
                        continue
                    obj = json.loads(line)
                    self._entries[obj["key"]] = obj["response"]

    def __len__(self) -> int:
        return len(self._entries)

    def get(self, key: str) -> str | None:
        value = self._entries.get(key)
        if value is not None:
            with self._lock:
                self.hits += 1
        return value

    def put(self, key: str, response: str) -> None:
        with self._lock:
            self._entries[key] = response
            if self.path is not None:
                record = {
                    "key": key,
                    "response": response,
                    "ts": datetime.now(timezone.utc).isoformat(),
                }
                with self.path.open("a", encoding="utf-8") as handle:
                    handle.write(json.dumps(record, ensure_ascii=False) + "\n")


class _CallCounter:
    """Thread-safe request counter shared by the client implementations."""

    def __init__(self):
        self._count = 0
        self._lock = threading.Lock()

    def bump(self) -> None:
        with self._lock:
            self._count += 1

    @property
    def value(self) -> int:
        return self._count


class HttpChatClient:
    """One-shot chat-completion request against an OpenAI-style gateway."""

    def __init__(self, session: requests.Session | None = None):
        self.session = session or requests.Session()
        self._calls = _CallCounter()

    @property
    def calls(self) -> int:
        return self._calls.value

    def complete(self, prompt_text: str, cfg: TeacherConfig) -> str:
        self._calls.bump()
        url = cfg.base_url.rstrip("/") + "/chat/completions"
        payload = {
            "model": cfg.model_name,
            "messages": [{"role": "user", "content": prompt_text}],
            "temperature": cfg.temperature,
        }
        headers = {"Content-Type": "application/json"}
        if cfg.api_key_env:
            import os

            key = os.environ.get(cfg.api_key_env)
            if not key:
                raise TeacherResponseError(
                    f"API key environment variable {cfg.api_key_env!r} is not set"
                )
            headers["Authorization"] = f"Bearer {key}"
        try:
            body = post_json(self.session, url, payload, headers, cfg.timeout)
        except BadResponseError as exc:
            raise TeacherResponseError(str(exc)) from exc
        try:
            content = body["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise TeacherResponseError("response missing choices[0].message.content") from exc
        if not isinstance(content, str):
            raise TeacherResponseError("response content is not a string")
        return content


class ReplayChatClient:
    """Offline teacher returning canned responses keyed by prompt hash."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._calls = _CallCounter()
        self._responses: dict[str, str] = {}
        with self.path.open(encoding="utf-8") as handle:
            for line in handle:
                line = line.strip()
                if not line:
                    continue
                obj = json.loads(line)
                self._responses[obj["key"]] = obj["response"]

    @property
    def calls(self) -> int:
        return self._calls.value

    def complete(self, prompt_text: str, cfg: TeacherConfig) -> str:
        self._calls.bump()
        key = cache_key(cfg.model_name, prompt_text, cfg.temperature, cfg.seed)
        if key not in self._responses:
            raise ReplayMissError(f"{self.path.name}: no canned response for key {key[:12]}...")
        return self._responses[key]


def query_teacher(client, prompt: PromptRecord, cfg: TeacherConfig, cache: ResponseCache) -> str:
    """Return the raw response for a prompt, consulting the cache first.

    Cache hits never touch the client.  Transport/5xx failures are retried with
    exponential backoff up to ``cfg.max_attempts``; other failures propagate
    immediately.
    """
    key = cache_key(cfg.model_name, prompt.text, cfg.temperature, cfg.seed)
    hit = cache.get(key)
    if hit is not None:
        return hit
    delay = cfg.base_backoff_ms / 1000.0
    for attempt in range(1, cfg.max_attempts + 1):
        try:
            response = client.complete(prompt.text, cfg)
            break
        except TransportError as exc:
            if attempt == cfg.max_attempts:
                raise RetriesExhaustedError(
                    f"retries exhausted after {cfg.max_attempts} attempts: {exc}"
                ) from exc
            if delay > 0:
                time.sleep(delay)
            delay *= 2
    cache.put(key, response)
    return response


_TERMINAL_PUNCT = ".,;:!?\"'`"


def _canonical_candidate(raw: str) -> str:
    candidate = canonical_label(raw)
    return candidate.rstrip(_TERMINAL_PUNCT).strip()


def parse_labels(
    raw: str,
    expected_ids: Sequence[str],
    label_space: LabelSpace,
) -> dict[str, str | None]:
    """Map each expected id to the label found on its ``<id>: <label>`` line.

    Candidates are canonicalized (lowercased, trimmed, terminal punctuation
    stripped) and matched exactly first, then by unique substring; anything
    else, including a missing line, maps to None (invalid).  Total and
    idempotent: never raises on malformed output.
    """
    lines = raw.splitlines()
    out: dict[str, str | None] = {}
    for iid in expected_ids:
        pattern = re.compile(r"^\s*(?:[-*]\s*)?" + re.escape(iid) + r"\s*:\s*(.+?)\s*$")
        label: str | None = None
        for line in lines:
            match = pattern.match(line)
            if match is None:
                continue
            candidate = _canonical_candidate(match.group(1))
            if candidate in label_space:
                label = candidate
            else:
                contained = [lab for lab in label_space if lab in candidate]
                if len(contained) == 1:
                    label = contained[0]
            break
        out[iid] = label
    return out


def _chunks(items: list, size: int) -> list[list]:
    return [items[i : i + size] for i in range(0, len(items), size)]


def annotate_teacher(
    ids: Sequence[str],
    texts: Mapping[str, str],
    label_space: LabelSpace,
    mode: str,
    cfg: TeacherConfig,
    cache: ResponseCache,
    client,
    student_track: AnnotationTrack | None = None,
) -> AnnotationTrack:
    """Annotate the requested ids with the teacher in the given mode.

    Ids are prompted in batches of ``cfg.batch_size`` with up to
    ``cfg.max_parallel`` requests in flight; labels are assembled in id order.
    If a batch fails after retries, the run aborts with the completed prefix
    attached to the raised TeacherRunError.  Raw responses land in the cache,
    which doubles as the audit log.
    """
    if mode not in ("zero", "single"):
        raise ValueError(f"mode must be 'zero' or 'single', got {mode!r}")
    student_labels: Mapping[str, str] | None = None
    if mode == "single":
        if student_track is None:
            raise ValueError("single mode requires the student track (missing student annotations)")
        missing = [iid for iid in ids if iid not in student_track.labels]
        if missing:
            raise ValueError(f"student track does not cover ids {missing[:5]}")
        student_labels = {
            iid: lab if lab is not None else "unknown" for iid, lab in student_track.labels.items()
        }
    absent = [iid for iid in ids if iid not in texts]
    if absent:
        raise ValueError(f"texts missing for ids {absent[:5]}")

    source = "teacher-zero" if mode == "zero" else "teacher-single"
    instances = [TextInstance(id=iid, text=texts[iid]) for iid in ids]
    batches = _chunks(instances, cfg.batch_size)
    prompts = [build_prompt(batch, label_space, mode, student_labels) for batch in batches]

    def run_one(prompt: PromptRecord) -> dict[str, str | None]:
        raw = query_teacher(client, prompt, cfg, cache)
        return parse_labels(raw, prompt.ids, label_space)

    labels: dict[str, str | None] = {}
    if cfg.max_parallel > 1 and len(prompts) > 1:
        with ThreadPoolExecutor(max_workers=cfg.max_parallel) as pool:
            futures = [pool.submit(run_one, prompt) for prompt in prompts]
            for idx, future in enumerate(futures):
                try:
                    labels.update(future.result())
                except Exception as exc:
                    for later in futures[idx + 1 :]:
                        later.cancel()
                    prefix = AnnotationTrack(source=source, labels=dict(labels))
                    raise TeacherRunError(
                        f"teacher run aborted at batch {idx + 1}/{len(prompts)}: {exc}", prefix
                    ) from exc
    else:
        for idx, prompt in enumerate(prompts):
            try:
                labels.update(run_one(prompt))
            except Exception as exc:
                prefix = AnnotationTrack(source=source, labels=dict(labels))
                raise TeacherRunError(
                    f"teacher run aborted at batch {idx + 1}/{len(prompts)}: {exc}", prefix
                ) from exc
    return AnnotationTrack(source=source, labels=labels)
