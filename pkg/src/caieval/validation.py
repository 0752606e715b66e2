"""Input validation helpers shared across the package."""
from __future__ import annotations

import numpy as np


def canonical_label(label: str) -> str:
    """Canonical form of a label: stripped of surrounding whitespace, lowercased."""
    return label.strip().lower()


def as_embedding(values, *, dim: int | None = None, name: str = "vector") -> np.ndarray:
    """Validate and convert one embedding to a 1-D float64 array.

    Rejects empty, non-finite, and zero-norm vectors; enforces ``dim`` when given.
    """
    vec = np.asarray(values, dtype=np.float64)
    if vec.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {vec.shape}")
    if vec.size < 1:
        raise ValueError(f"{name} must have at least one component")
    if not np.all(np.isfinite(vec)):
        raise ValueError(f"{name} contains non-finite values")
    if dim is not None and vec.size != dim:
        raise ValueError(f"{name} has dimension {vec.size}, expected {dim}")
    if not np.any(vec):
        raise ValueError(f"{name} has zero norm")
    return vec


def as_embedding_matrix(rows, *, dim: int | None = None, name: str = "X") -> np.ndarray:
    """Stack embeddings into an (n, dim) float64 matrix, validating every row."""
    mat = np.asarray(rows, dtype=np.float64)
    if mat.ndim == 1:
        mat = mat.reshape(1, -1)
    if mat.ndim != 2:
        raise ValueError(f"{name} must be two-dimensional, got shape {mat.shape}")
    if mat.shape[0] == 0 or mat.shape[1] == 0:
        raise ValueError(f"{name} must be non-empty, got shape {mat.shape}")
    if not np.all(np.isfinite(mat)):
        raise ValueError(f"{name} contains non-finite values")
    if dim is not None and mat.shape[1] != dim:
        raise ValueError(f"{name} has dimension {mat.shape[1]}, expected {dim}")
    norms = np.linalg.norm(mat, axis=1)
    zero = np.flatnonzero(norms == 0.0)
    if zero.size:
        raise ValueError(f"{name} row {zero[0]} has zero norm")
    return mat
