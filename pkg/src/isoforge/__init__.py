"""Toolkit for measuring and removing dominant directions from static
embedding matrices, with learned per-direction removal weights and the
standard full-removal and conceptor baselines.
"""

from .datasets import (
    AnalogyDatasetSpec,
    AnalogyQuestion,
    Manifest,
    SimilarityDatasetSpec,
    StsDatasetSpec,
    StsPair,
    load_manifest,
    load_pretokenized_sts,
    parse_analogy_dataset,
    parse_similarity_dataset,
    parse_sts_dataset,
)
from .diagnostics import (
    DiagnosticsReport,
    average_cosine,
    average_norm,
    diagnose,
    frequency_correlations,
    mean_vector,
    pearson,
    projection_2d,
    singular_spectrum,
    write_projection_csv,
    write_report_json,
    write_spectrum_csv,
)
from .embeddings import (
    EmbeddingMatrix,
    FrequencyTable,
    Vocabulary,
    fingerprint_file,
    load_counts,
    load_embeddings,
    normalize,
    save_embeddings,
)
from .evaluation import (
    AnalogyResult,
    EvalResult,
    ResultRow,
    candidate_mask,
    eval_analogy,
    eval_similarity,
    eval_sts,
    sentence_embedding,
    sweep,
    tokenize_simple,
    write_results_csv,
)
from .spectral import PrincipalDirections, compute_directions, project_coefficient
from .training import (
    FitEpoch,
    FitResult,
    LabeledPair,
    LabeledPairSet,
    TrainConfig,
    fit,
    loss,
    loss_gradient,
    predict_similarity,
    scale_annotations,
    split_pairs,
    transform_vector,
    write_fit_log,
)
from .transforms import (
    RemovalModel,
    abtt,
    conceptor_negation,
    load_model,
    save_model,
    weighted_removal,
)

__version__ = "0.1.0"

__all__ = [
    "AnalogyDatasetSpec",
    "AnalogyQuestion",
    "AnalogyResult",
    "DiagnosticsReport",
    "EmbeddingMatrix",
    "EvalResult",
    "FitEpoch",
    "FitResult",
    "FrequencyTable",
    "LabeledPair",
    "LabeledPairSet",
    "Manifest",
    "PrincipalDirections",
    "RemovalModel",
    "ResultRow",
    "SimilarityDatasetSpec",
    "StsDatasetSpec",
    "StsPair",
    "TrainConfig",
    "Vocabulary",
    "abtt",
    "average_cosine",
    "average_norm",
    "candidate_mask",
    "compute_directions",
    "conceptor_negation",
    "diagnose",
    "eval_analogy",
    "eval_similarity",
    "eval_sts",
    "fingerprint_file",
    "fit",
    "frequency_correlations",
    "load_counts",
    "load_embeddings",
    "load_manifest",
    "load_model",
    "load_pretokenized_sts",
    "loss",
    "loss_gradient",
    "mean_vector",
    "normalize",
    "parse_analogy_dataset",
    "parse_similarity_dataset",
    "parse_sts_dataset",
    "pearson",
    "predict_similarity",
    "project_coefficient",
    "projection_2d",
    "save_embeddings",
    "save_model",
    "scale_annotations",
    "sentence_embedding",
    "singular_spectrum",
    "split_pairs",
    "sweep",
    "tokenize_simple",
    "transform_vector",
    "weighted_removal",
    "write_fit_log",
    "write_projection_csv",
    "write_report_json",
    "write_results_csv",
    "write_spectrum_csv",
]
