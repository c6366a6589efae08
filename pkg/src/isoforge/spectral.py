"""Principal directions and singular values of an embedding matrix.

The decomposition is uncentered by default: the SVD is taken of the raw
row matrix, not of mean-subtracted rows. Pass ``center=True`` for the
classical PCA variant.
"""

from __future__ import annotations

import numpy as np

from .embeddings import EmbeddingMatrix

_ORTHO_TOL = 1e-8


def _canonical_signs(directions: np.ndarray) -> np.ndarray:
    # Deterministic sign: the entry of largest magnitude is positive. Removal
    # via u(u^T v) is sign-invariant, so this only pins reproducibility.
    out = np.array(directions, dtype=np.float64)
    for row in out:
        if row[np.argmax(np.abs(row))] < 0:
            row *= -1.0
    return out


class PrincipalDirections:
    """k orthonormal directions of length e with non-increasing singular values.

    Signs are canonicalized on construction; orthonormality and spectrum
    ordering are validated.
    """

    def __init__(self, directions: np.ndarray, singular_values: np.ndarray):
        directions = np.ascontiguousarray(directions, dtype=np.float64)
        singular_values = np.ascontiguousarray(singular_values, dtype=np.float64)
        if directions.ndim != 2 or directions.shape[0] < 1:
            raise ValueError("directions must be a non-empty 2-D array of rows")
        if singular_values.ndim != 1 or len(singular_values) != directions.shape[0]:
            raise ValueError("one singular value per direction required")
        if np.any(singular_values < 0):
            raise ValueError("singular values must be non-negative")
        if np.any(np.diff(singular_values) > 0):
            raise ValueError("singular values must be non-increasing")
        gram = directions @ directions.T
        dev = np.max(np.abs(gram - np.eye(directions.shape[0])))
        if dev > _ORTHO_TOL:
            raise ValueError(
                f"directions are not orthonormal (max deviation {dev:.3e})"
            )
        directions = _canonical_signs(directions)
        directions.setflags(write=False)
        singular_values.setflags(write=False)
        self._directions = directions
        self._singular_values = singular_values

    @property
    def directions(self) -> np.ndarray:
        return self._directions

    @property
    def singular_values(self) -> np.ndarray:
        return self._singular_values

    @property
    def k(self) -> int:
        return self._directions.shape[0]

    @property
    def dim(self) -> int:
        return self._directions.shape[1]

    def top(self, d: int) -> "PrincipalDirections":
        """The leading d directions (for sweeping over removal depth)."""
        if not 1 <= d <= self.k:
            raise ValueError(f"d must be in [1, {self.k}], got {d}")
        return PrincipalDirections(self._directions[:d], self._singular_values[:d])


def compute_directions(
    matrix: EmbeddingMatrix, k: int, *, center: bool = False
) -> PrincipalDirections:
    """Top-k right-singular directions of the row matrix with their singular
    values.

    ``center=True`` subtracts the mean row first (classical PCA); the default
    decomposes the raw matrix, so the leading direction absorbs the common
    vector.
    """
    n, e = len(matrix), matrix.dim
    if not 1 <= k <= min(n, e):
        raise ValueError(f"k must be in [1, {min(n, e)}], got {k}")
    rows = matrix.vectors
    if center:
        rows = rows - rows.mean(axis=0)
    _, sigma, vh = np.linalg.svd(rows, full_matrices=False)
    return PrincipalDirections(vh[:k], sigma[:k])


def project_coefficient(v: np.ndarray, u: np.ndarray) -> float:
    """Scalar projection coefficient u . v."""
    v = np.asarray(v, dtype=np.float64)
    u = np.asarray(u, dtype=np.float64)
    if v.shape != u.shape:
        raise ValueError(f"dimension mismatch: {v.shape} vs {u.shape}")
    return float(u @ v)
