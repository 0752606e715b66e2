"""Student annotator: top-k cosine-similarity voting against preference clusters.

The score of a query embedding against a cluster is the mean of its top-k
cosine similarities with the cluster's members; the predicted label is the
cluster maximizing that score, ties broken toward the lexicographically
smallest label.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_is_fitted

from .annotations import AnnotationTrack
from .corpus import PreferenceClusterSet
from .validation import as_embedding, as_embedding_matrix


@dataclass(frozen=True)
class StudentConfig:
    """Run configuration for the student annotator."""

    top_k: int = 5
    tie_break: str = "canonical-order"
    record_scores: bool = False

    def __post_init__(self):
        if self.top_k < 1:
            raise ValueError(f"top_k must be >= 1, got {self.top_k}")
        if self.tie_break != "canonical-order":
            raise ValueError(f"unsupported tie_break {self.tie_break!r}")


def average_similarity(query, cluster, top_k: int) -> float:
    """Mean of the top-``min(top_k, |cluster|)`` cosine similarities between
    the query and the cluster members."""
    if top_k < 1:
        raise ValueError(f"top_k must be >= 1, got {top_k}")
    if len(cluster) == 0:
        raise ValueError("cluster must be non-empty")
    q = as_embedding(query, name="query")
    members = as_embedding_matrix(cluster, dim=q.size, name="cluster")
    sims = _unit_rows(members) @ (q / np.linalg.norm(q))
    k = min(top_k, sims.size)
    top = np.sort(sims)[-k:]
    return float(top.mean())


def _unit_rows(matrix: np.ndarray) -> np.ndarray:
    return matrix / np.linalg.norm(matrix, axis=1, keepdims=True)


class StudentAnnotator(ClassifierMixin, BaseEstimator):
    """Nearest-cluster classifier over embeddings, scored by average top-k cosine.

    fit(X, y) stores the labeled preference embeddings grouped per class;
    predict(X) assigns each query the class whose members are most similar on
    average.  Duplicate member vectors count with multiplicity.

    Parameters
    ----------
    top_k : int, default=5
        Number of most-similar cluster members averaged per class.  Classes
        with fewer members than ``top_k`` average over all their members.
    """

    def __init__(self, top_k: int = 5):
        self.top_k = top_k

    def fit(self, X, y):
        if self.top_k < 1:
            raise ValueError(f"top_k must be >= 1, got {self.top_k}")
        X = as_embedding_matrix(X, name="X")
        y = np.asarray(y)
        if y.ndim != 1 or y.shape[0] != X.shape[0]:
            raise ValueError(f"y must be 1-D with {X.shape[0]} entries, got shape {y.shape}")
        self.classes_ = np.unique(y)
        self.n_features_in_ = X.shape[1]
        self._cluster_matrices = [_unit_rows(X[y == cls]) for cls in self.classes_]
        return self

    def average_similarities(self, X) -> np.ndarray:
        """(n_samples, n_classes) matrix of average top-k cosine scores."""
        check_is_fitted(self, "classes_")
        X = as_embedding_matrix(X, dim=self.n_features_in_, name="X")
        queries = _unit_rows(X)
        scores = np.empty((X.shape[0], len(self.classes_)), dtype=np.float64)
        for j, members in enumerate(self._cluster_matrices):
            sims = queries @ members.T
            k = min(self.top_k, members.shape[0])
            top = np.sort(sims, axis=1)[:, -k:]
            scores[:, j] = top.mean(axis=1)
        return scores

    def predict(self, X) -> np.ndarray:
        scores = self.average_similarities(X)
        return self.classes_[np.argmax(scores, axis=1)]


def assign_annotation(
    query,
    clusters: PreferenceClusterSet,
    cfg: StudentConfig = StudentConfig(),
) -> tuple[str, dict[str, float]]:
    """Label of the cluster with the highest average similarity to the query.

    On exact score ties the label earliest in canonical order wins.  The
    per-cluster scores are returned alongside the label.
    """
    labels = clusters.labels()
    scores = {
        label: average_similarity(query, clusters.matrix(label), cfg.top_k) for label in labels
    }
    # max() keeps the first maximum, so exact ties resolve to the earliest
    # label in canonical order.
    best = max(labels, key=scores.__getitem__)
    return best, scores


def annotate_student(
    ids: Sequence[str],
    embeddings: Mapping[str, np.ndarray],
    clusters: PreferenceClusterSet,
    cfg: StudentConfig = StudentConfig(),
) -> AnnotationTrack:
    """Annotate the requested ids against the preference clusters."""
    missing = [iid for iid in ids if iid not in embeddings]
    if missing:
        raise ValueError(f"missing embeddings for ids {missing[:5]}")
    if not ids:
        return AnnotationTrack(source="student", labels={}, scores={} if cfg.record_scores else None)

    labels = list(clusters.labels())
    member_vectors = []
    member_labels = []
    for label in labels:
        for _iid, vec in clusters.clusters[label]:
            member_vectors.append(vec)
            member_labels.append(label)
    estimator = StudentAnnotator(top_k=cfg.top_k).fit(np.vstack(member_vectors), member_labels)

    X = np.vstack([as_embedding(embeddings[iid], dim=clusters.dim, name=f"embedding {iid!r}") for iid in ids])
    scores = estimator.average_similarities(X)
    predicted = estimator.classes_[np.argmax(scores, axis=1)]

    track_labels = {iid: str(lab) for iid, lab in zip(ids, predicted)}
    track_scores = None
    if cfg.record_scores:
        track_scores = {
            iid: {str(cls): float(score) for cls, score in zip(estimator.classes_, row)}
            for iid, row in zip(ids, scores)
        }
    return AnnotationTrack(source="student", labels=track_labels, scores=track_scores)
