"""Minimal HTTP plumbing shared by the remote embedding provider and the chat client."""
from __future__ import annotations

import time
from typing import Callable

import requests


class TransportError(RuntimeError):
    """A retryable failure: connection problem, timeout, or 5xx status."""


class BadResponseError(RuntimeError):
    """A non-retryable bad response: 4xx status, non-JSON body, or missing fields."""


def post_json(session: requests.Session, url: str, payload: dict, headers: dict, timeout: float) -> dict:
    """POST JSON and return the decoded JSON body, mapping failures onto
    TransportError (retryable) or BadResponseError (not)."""
    try:
        response = session.post(url, json=payload, headers=headers, timeout=timeout)
    except requests.RequestException as exc:
        raise TransportError(f"request to {url} failed: {exc}") from exc
    if response.status_code >= 500:
        raise TransportError(f"{url} returned {response.status_code}")
    if response.status_code >= 400:
        raise BadResponseError(f"{url} returned {response.status_code}: {response.text[:200]}")
    try:
        return response.json()
    except ValueError as exc:
        raise BadResponseError(f"{url} returned non-JSON body") from exc


def with_retries(
    request: Callable[[], dict],
    max_attempts: int,
    base_backoff_s: float,
    sleep: Callable[[float], None] = time.sleep,
) -> dict:
    """Run ``request`` with exponential backoff on TransportError."""
    if max_attempts < 1:
        raise ValueError("max_attempts must be >= 1")
    delay = base_backoff_s
    for attempt in range(1, max_attempts + 1):
        try:
            return request()
        except TransportError:
            if attempt == max_attempts:
                raise
            if delay > 0:
                sleep(delay)
            delay *= 2
    raise AssertionError("unreachable")
