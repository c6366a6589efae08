"""Anisotropy diagnostics: mean vector, average cosine similarity, singular
spectrum, frequency correlations, and the 2-D principal projection.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .embeddings import EmbeddingMatrix, FrequencyTable
from .spectral import PrincipalDirections, compute_directions

logger = logging.getLogger(__name__)


def mean_vector(matrix: EmbeddingMatrix) -> np.ndarray:
    """Arithmetic mean of all rows (the common vector)."""
    return matrix.vectors.mean(axis=0)


def average_norm(matrix: EmbeddingMatrix) -> float:
    """Mean Euclidean norm over rows."""
    return float(np.linalg.norm(matrix.vectors, axis=1).mean())


def average_cosine(matrix: EmbeddingMatrix) -> float:
    """Mean pairwise cosine similarity over all ordered row pairs,
    self-pairs included.

    Computed in closed form as the squared norm of the mean normalized row,
    which equals the literal double sum exactly.
    """
    norms = np.linalg.norm(matrix.vectors, axis=1)
    zero = np.flatnonzero(norms == 0.0)
    if zero.size:
        raise ValueError(f"zero row encountered at row {int(zero[0])}")
    unit_mean = (matrix.vectors / norms[:, None]).mean(axis=0)
    return float(unit_mean @ unit_mean)


def pearson(x: Sequence[float], y: Sequence[float]) -> float:
    """Pearson correlation coefficient.

    Raises on length mismatch, fewer than two samples, or a constant
    sequence (undefined correlation).
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.ndim != 1 or y.ndim != 1 or len(x) != len(y):
        raise ValueError("sequences must be 1-D and of equal length")
    if len(x) < 2:
        raise ValueError("need at least two samples")
    xc = x - x.mean()
    yc = y - y.mean()
    vx = float(xc @ xc)
    vy = float(yc @ yc)
    if vx == 0.0 or vy == 0.0:
        raise ValueError("undefined correlation: constant sequence")
    r = float(xc @ yc) / np.sqrt(vx * vy)
    return float(np.clip(r, -1.0, 1.0))


def _overlap(matrix: EmbeddingMatrix, counts: FrequencyTable) -> tuple[np.ndarray, np.ndarray]:
    """Row indices present in the counts table and their log counts."""
    idx, logc = [], []
    for i, tok in enumerate(matrix.vocab):
        c = counts.get(tok)
        if c is not None:
            idx.append(i)
            logc.append(np.log(c))
    return np.asarray(idx, dtype=np.intp), np.asarray(logc, dtype=np.float64)


def frequency_correlations(
    matrix: EmbeddingMatrix,
    counts: FrequencyTable,
    *,
    directions: PrincipalDirections | None = None,
) -> tuple[float, float]:
    """Pearson r of (row norm, ln count) and (first principal coefficient,
    ln count), over tokens present in both the matrix and the counts table.
    """
    idx, logc = _overlap(matrix, counts)
    if len(idx) < 2:
        raise ValueError(
            f"insufficient data: {len(idx)} tokens shared between matrix and counts"
        )
    if directions is None:
        directions = compute_directions(matrix, 1)
    rows = matrix.vectors[idx]
    norms = np.linalg.norm(rows, axis=1)
    pc1 = rows @ directions.directions[0]
    return pearson(norms, logc), pearson(pc1, logc)


def projection_2d(
    matrix: EmbeddingMatrix,
    counts: FrequencyTable | None = None,
    *,
    directions: PrincipalDirections | None = None,
) -> list[tuple[str, float, float, float | None]]:
    """Per-token (pc1, pc2, ln count) coordinates on the top two directions.

    Tokens missing from the counts table (or when no table is given) carry
    None in the last slot.
    """
    if matrix.dim < 2:
        raise ValueError("projection requires dim >= 2")
    if directions is None or directions.k < 2:
        directions = compute_directions(matrix, 2)
    coords = matrix.vectors @ directions.directions[:2].T
    out: list[tuple[str, float, float, float | None]] = []
    for i, tok in enumerate(matrix.vocab):
        c = counts.get(tok) if counts is not None else None
        logc = float(np.log(c)) if c is not None else None
        out.append((tok, float(coords[i, 0]), float(coords[i, 1]), logc))
    return out


def singular_spectrum(matrix: EmbeddingMatrix) -> np.ndarray:
    """Full non-increasing singular value spectrum of the row matrix."""
    return np.linalg.svd(matrix.vectors, compute_uv=False)


@dataclass
class DiagnosticsReport:
    mean_vector_norm: float
    average_vector_norm: float
    average_cosine: float
    singular_values: np.ndarray
    norm_logfreq_pearson: float | None = None
    pc1_logfreq_pearson: float | None = None
    projection_2d: list[tuple[str, float, float, float | None]] = field(default_factory=list)


def diagnose(
    matrix: EmbeddingMatrix, counts: FrequencyTable | None = None, *, center: bool = False
) -> DiagnosticsReport:
    """Compute the full diagnostics report for a matrix.

    Frequency correlations appear only when a counts table with at least two
    overlapping tokens is supplied; otherwise they are absent and the gap is
    logged. ``center`` switches the projection/correlation directions to the
    mean-subtracted decomposition (the spectrum itself is always of the raw
    matrix).
    """
    spectrum = singular_spectrum(matrix)
    k = min(2, matrix.dim, len(matrix))
    directions = compute_directions(matrix, k, center=center)

    norm_r: float | None = None
    pc1_r: float | None = None
    if counts is not None:
        idx, _ = _overlap(matrix, counts)
        if len(idx) >= 2:
            norm_r, pc1_r = frequency_correlations(matrix, counts, directions=directions)
        else:
            logger.warning(
                "insufficient data for frequency correlations: "
                "%d tokens shared between matrix and counts",
                len(idx),
            )

    projection: list[tuple[str, float, float, float | None]] = []
    if matrix.dim >= 2 and directions.k >= 2:
        projection = projection_2d(matrix, counts, directions=directions)

    return DiagnosticsReport(
        mean_vector_norm=float(np.linalg.norm(mean_vector(matrix))),
        average_vector_norm=average_norm(matrix),
        average_cosine=average_cosine(matrix),
        singular_values=spectrum,
        norm_logfreq_pearson=norm_r,
        pc1_logfreq_pearson=pc1_r,
        projection_2d=projection,
    )


def write_report_json(
    report: DiagnosticsReport, path: str | Path, meta: dict | None = None
) -> None:
    """Serialize the scalar statistics and spectrum as a JSON document.

    Absent correlations are omitted rather than written as null.
    """
    doc: dict = {
        "mean_vector_norm": report.mean_vector_norm,
        "average_vector_norm": report.average_vector_norm,
        "average_cosine": report.average_cosine,
        "singular_values": [float(s) for s in report.singular_values],
    }
    if report.norm_logfreq_pearson is not None:
        doc["norm_logfreq_pearson"] = report.norm_logfreq_pearson
    if report.pc1_logfreq_pearson is not None:
        doc["pc1_logfreq_pearson"] = report.pc1_logfreq_pearson
    if meta:
        doc["meta"] = meta
    Path(path).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def write_projection_csv(
    projection: list[tuple[str, float, float, float | None]],
    path: str | Path,
    header_comments: Sequence[str] = (),
) -> None:
    """Write per-token projection coordinates as ``token,pc1,pc2,logcount``."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for line in header_comments:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh)
        writer.writerow(["token", "pc1", "pc2", "logcount"])
        for tok, pc1, pc2, logc in projection:
            writer.writerow([tok, f"{pc1:.9f}", f"{pc2:.9f}", "" if logc is None else f"{logc:.9f}"])


def write_spectrum_csv(
    spectrum: np.ndarray, path: str | Path, header_comments: Sequence[str] = ()
) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for line in header_comments:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh)
        writer.writerow(["rank", "singular_value"])
        for i, s in enumerate(spectrum, start=1):
            writer.writerow([i, f"{s:.9f}"])
