import numpy as np
import pytest

from isoforge import EmbeddingMatrix, Vocabulary


def make_matrix(n: int, e: int, seed: int = 0, common_scale: float = 0.0) -> EmbeddingMatrix:
    """Random test matrix; common_scale > 0 adds a shared offset vector so the
    cloud is anisotropic like a real embedding table."""
    rng = np.random.default_rng(seed)
    rows = rng.normal(size=(n, e))
    if common_scale:
        rows = rows + rng.normal(size=e) * common_scale
    return EmbeddingMatrix(Vocabulary([f"w{i}" for i in range(n)]), rows)


@pytest.fixture
def small_matrix() -> EmbeddingMatrix:
    return make_matrix(20, 6, seed=1, common_scale=2.0)


@pytest.fixture
def anisotropic_matrix() -> EmbeddingMatrix:
    return make_matrix(120, 12, seed=2, common_scale=3.0)
