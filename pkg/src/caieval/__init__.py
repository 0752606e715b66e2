"""caieval: reference-free evaluation of LLM annotations.

A lightweight embedding-based student annotates a corpus by top-k cosine
voting against a small user-labeled preference set; a noisy teacher LLM
annotates the same corpus zero-shot and single-shot.  The ratio of
consistently to inconsistently annotated samples (the CAI ratio) is an
unsupervised reliability signal usable for significance-tested correlation
analysis and model selection.
"""

from .annotations import AnnotationTrack, accuracy
from .consistency import (
    CaiRatio,
    ConsistencyPartition,
    aggregate_ratios,
    cai_ratio,
    export_partition,
    identify,
    stratified_accuracy,
)
from .corpus import (
    Corpus,
    LabelSpace,
    PreferenceClusterSet,
    TextInstance,
    build_clusters,
    load_corpus,
    save_corpus,
    split_preference,
)
from .embeddings import (
    EmbeddingProvider,
    FileEmbeddingProvider,
    HashEmbeddingProvider,
    RemoteEmbeddingProvider,
    cosine,
    embed_corpus,
    hash_embed,
)
from .manifest import RunManifest, TeacherSpec, load_manifest
from .simulate import (
    SimParams,
    consistency_prob,
    expected_ratio,
    law_of_consistency_check,
    simulate_run,
    summarize_run,
)
from .stats import (
    CorrelationResult,
    ModelSelection,
    SelectionReport,
    build_selection_report,
    correlate,
    p_value,
    pearson,
    regularized_incomplete_beta,
    select_model,
    t_statistic,
)
from .student import StudentAnnotator, StudentConfig, annotate_student, assign_annotation, average_similarity
from .teacher import (
    HttpChatClient,
    PromptRecord,
    ReplayChatClient,
    ResponseCache,
    TeacherConfig,
    annotate_teacher,
    build_prompt,
    cache_key,
    parse_labels,
    query_teacher,
)

__version__ = "0.1.0"

__all__ = [
    "AnnotationTrack",
    "CaiRatio",
    "ConsistencyPartition",
    "CorrelationResult",
    "Corpus",
    "EmbeddingProvider",
    "FileEmbeddingProvider",
    "HashEmbeddingProvider",
    "HttpChatClient",
    "LabelSpace",
    "ModelSelection",
    "PreferenceClusterSet",
    "PromptRecord",
    "RemoteEmbeddingProvider",
    "ReplayChatClient",
    "ResponseCache",
    "RunManifest",
    "SelectionReport",
    "SimParams",
    "StudentAnnotator",
    "StudentConfig",
    "TeacherConfig",
    "TeacherSpec",
    "TextInstance",
    "accuracy",
    "aggregate_ratios",
    "annotate_student",
    "annotate_teacher",
    "assign_annotation",
    "average_similarity",
    "build_clusters",
    "build_prompt",
    "build_selection_report",
    "cache_key",
    "cai_ratio",
    "consistency_prob",
    "correlate",
    "cosine",
    "embed_corpus",
    "expected_ratio",
    "export_partition",
    "hash_embed",
    "identify",
    "law_of_consistency_check",
    "load_corpus",
    "load_manifest",
    "p_value",
    "parse_labels",
    "pearson",
    "query_teacher",
    "regularized_incomplete_beta",
    "save_corpus",
    "select_model",
    "simulate_run",
    "split_preference",
    "stratified_accuracy",
    "summarize_run",
    "t_statistic",
]
