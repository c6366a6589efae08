"""Embedding transforms: weighted direction removal, complete top-direction
removal, and conceptor negation, plus the removal-model artifact format.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .embeddings import EmbeddingMatrix
from .spectral import compute_directions

_ORTHO_TOL = 1e-8


class RemovalModel:
    """d removal weights over d stored orthonormal directions.

    Weights are unconstrained: values outside [0, 1] over-remove or reflect
    along a direction and are legal. The optional fingerprint records which
    embedding file the directions were computed from, so a model cannot be
    silently applied to a different matrix.
    """

    def __init__(
        self,
        alphas: np.ndarray,
        directions: np.ndarray,
        source_fingerprint: str | None = None,
    ):
        alphas = np.ascontiguousarray(alphas, dtype=np.float64)
        directions = np.ascontiguousarray(directions, dtype=np.float64)
        if alphas.ndim != 1 or alphas.size < 1:
            raise ValueError("d must be >= 1")
        if directions.ndim != 2 or directions.shape[0] != alphas.size:
            raise ValueError(
                f"need one direction per weight: {alphas.size} weights, "
                f"{directions.shape[0] if directions.ndim == 2 else '?'} directions"
            )
        if not np.all(np.isfinite(alphas)) or not np.all(np.isfinite(directions)):
            raise ValueError("model contains non-finite values")
        gram = directions @ directions.T
        dev = np.max(np.abs(gram - np.eye(directions.shape[0])))
        if dev > _ORTHO_TOL:
            raise ValueError(f"directions are not orthonormal (max deviation {dev:.3e})")
        alphas.setflags(write=False)
        directions.setflags(write=False)
        self._alphas = alphas
        self._directions = directions
        self.source_fingerprint = source_fingerprint

    @property
    def alphas(self) -> np.ndarray:
        return self._alphas

    @property
    def directions(self) -> np.ndarray:
        return self._directions

    @property
    def d(self) -> int:
        return self._alphas.size

    @property
    def dim(self) -> int:
        return self._directions.shape[1]


def _check_fingerprint(
    matrix: EmbeddingMatrix, model: RemovalModel, ignore_fingerprint: bool
) -> None:
    if ignore_fingerprint or model.source_fingerprint is None:
        return
    actual = matrix.fingerprint()
    if actual is not None and actual != model.source_fingerprint:
        raise ValueError(
            f"fingerprint mismatch: model was fitted on {model.source_fingerprint}, "
            f"matrix file is {actual} (pass ignore_fingerprint to override)"
        )


def weighted_removal(
    matrix: EmbeddingMatrix, model: RemovalModel, *, ignore_fingerprint: bool = False
) -> EmbeddingMatrix:
    """Subtract each stored direction from every row, scaled by its weight
    times the row's coefficient on that direction.
    """
    if model.dim != matrix.dim:
        raise ValueError(f"dimension mismatch: model dim {model.dim}, matrix dim {matrix.dim}")
    _check_fingerprint(matrix, model, ignore_fingerprint)
    u = model.directions
    coeffs = matrix.vectors @ u.T
    out = matrix.vectors - (coeffs * model.alphas) @ u
    return EmbeddingMatrix(matrix.vocab, out)


def abtt(matrix: EmbeddingMatrix, d: int, *, remove_mean: bool = False) -> EmbeddingMatrix:
    """Remove the top d dominant directions completely.

    ``remove_mean=True`` first subtracts the common vector and computes the
    directions on the centered rows (the classical variant); the default
    works directly on the raw matrix.
    """
    if not 1 <= d <= matrix.dim:
        raise ValueError(f"d must be in [1, {matrix.dim}], got {d}")
    rows = matrix.vectors
    if remove_mean:
        rows = rows - rows.mean(axis=0)
    u = compute_directions(
        EmbeddingMatrix(matrix.vocab, rows) if remove_mean else matrix,
        d,
    ).directions
    # Explicit projector onto the complement of span(u); deliberately a
    # different arithmetic route than weighted_removal with unit weights.
    projector = u.T @ u
    out = rows - rows @ projector
    return EmbeddingMatrix(matrix.vocab, out)


def conceptor_negation(matrix: EmbeddingMatrix, aperture: float = 2.0) -> EmbeddingMatrix:
    """Soft-suppress high-variance directions by multiplying every row with
    (I - C), where C is the conceptor of the row correlation matrix.
    """
    if not aperture > 0:
        raise ValueError(f"aperture must be positive, got {aperture}")
    rows = matrix.vectors
    r = rows.T @ rows / rows.shape[0]
    ridge = r + aperture ** -2 * np.eye(matrix.dim)
    # C = R (R + a^-2 I)^-1; both factors are symmetric and share an
    # eigenbasis, so C^T = (R + a^-2 I)^-1 R = solve(ridge, r).
    c_t = np.linalg.solve(ridge, r)
    out = rows - rows @ c_t
    return EmbeddingMatrix(matrix.vocab, out)


def save_model(model: RemovalModel, path: str | Path) -> None:
    """Write the model artifact: ``d e`` header, one line of d weights, d
    direction rows, then the source fingerprint (12 significant digits).
    """
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"{model.d} {model.dim}\n")
        fh.write(" ".join(f"{a:.12g}" for a in model.alphas) + "\n")
        for row in model.directions:
            fh.write(" ".join(f"{x:.12g}" for x in row) + "\n")
        fh.write(f"fingerprint {model.source_fingerprint or 'none'}\n")


def load_model(path: str | Path) -> RemovalModel:
    """Read a model artifact, re-validating shape and orthonormality."""
    path = Path(path)
    lines = [ln for ln in Path(path).read_text(encoding="utf-8").splitlines() if ln.strip()]
    if not lines:
        raise ValueError(f"{path}: empty model file")
    fields = lines[0].split()
    if len(fields) != 2:
        raise ValueError(f"{path}: malformed header: {lines[0]!r}")
    try:
        d, dim = int(fields[0]), int(fields[1])
    except ValueError:
        raise ValueError(f"{path}: malformed header: {lines[0]!r}") from None
    if d < 1:
        raise ValueError(f"{path}: d must be >= 1, got {d}")
    if dim < 1:
        raise ValueError(f"{path}: dim must be >= 1, got {dim}")
    if len(lines) != d + 3:
        raise ValueError(f"{path}: expected {d + 3} lines for d={d}, found {len(lines)}")
    try:
        alphas = np.array(lines[1].split(), dtype=np.float64)
        directions = np.array([ln.split() for ln in lines[2 : 2 + d]], dtype=np.float64)
    except ValueError:
        raise ValueError(f"{path}: unparseable numeric data") from None
    if alphas.size != d:
        raise ValueError(f"{path}: expected {d} weights, found {alphas.size}")
    if directions.shape != (d, dim):
        raise ValueError(
            f"{path}: expected {d}x{dim} directions, found {directions.shape}"
        )
    tail = lines[2 + d].split()
    if len(tail) != 2 or tail[0] != "fingerprint":
        raise ValueError(f"{path}: malformed fingerprint line: {lines[2 + d]!r}")
    fingerprint = None if tail[1] == "none" else tail[1]
    return RemovalModel(alphas, directions, source_fingerprint=fingerprint)
