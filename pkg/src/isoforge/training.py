"""Learning per-direction removal weights from word-similarity supervision.

The objective is the mean squared error between human similarity targets
(scaled to [-1, 1]) and the cosine similarity of transformed vectors. With
orthonormal directions each pair reduces once to its per-direction
coefficients plus residual dot products, so an epoch costs O(pairs * d)
regardless of the embedding dimension.
"""

from __future__ import annotations

import csv
import logging
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .embeddings import EmbeddingMatrix, Vocabulary
from .spectral import PrincipalDirections
from .transforms import RemovalModel

logger = logging.getLogger(__name__)

_DIVERGENCE_LIMIT = 1e3
_MIN_LR = 1e-12


class LabeledPair(NamedTuple):
    token_a: str
    token_b: str
    target: float
    source: str = ""


class LabeledPairSet:
    """Word pairs with similarity targets scaled to [-1, 1]."""

    def __init__(self, pairs: Iterable[LabeledPair | tuple]):
        clean = []
        for p in pairs:
            p = LabeledPair(*p)
            if not p.token_a or not p.token_b:
                raise ValueError(f"empty token in pair {p!r}")
            if not -1.0 <= p.target <= 1.0:
                raise ValueError(f"target outside [-1, 1] in pair {p!r}")
            clean.append(p)
        self._pairs = tuple(clean)

    @property
    def pairs(self) -> tuple[LabeledPair, ...]:
        return self._pairs

    def __len__(self) -> int:
        return len(self._pairs)

    def __iter__(self):
        return iter(self._pairs)

    def sources(self) -> tuple[str, ...]:
        """Distinct source tags, in first-appearance order."""
        return tuple(dict.fromkeys(p.source for p in self._pairs))

    def restrict_to_vocab(self, vocab: Vocabulary) -> "LabeledPairSet":
        """Drop pairs with either token out of vocabulary, logging per-source
        drop counts."""
        kept, dropped = [], Counter()
        for p in self._pairs:
            if p.token_a in vocab and p.token_b in vocab:
                kept.append(p)
            else:
                dropped[p.source] += 1
        if dropped:
            detail = ", ".join(f"{src or '?'}: {n}" for src, n in sorted(dropped.items()))
            logger.info(
                "dropped %d of %d out-of-vocabulary pairs (%s)",
                sum(dropped.values()), len(self._pairs), detail,
            )
        return LabeledPairSet(kept)

    @classmethod
    def pooled(cls, sets: Sequence["LabeledPairSet"]) -> "LabeledPairSet":
        return cls(p for s in sets for p in s)


def scale_annotations(raw: float, scale_min: float, scale_max: float) -> float:
    """Affinely map a raw human score from [scale_min, scale_max] to [-1, 1].

    Scores outside the nominal range are clamped with a warning; published
    files occasionally contain boundary excursions.
    """
    if not scale_min < scale_max:
        raise ValueError(f"invalid scale range [{scale_min}, {scale_max}]")
    if raw < scale_min or raw > scale_max:
        logger.warning(
            "score %g outside nominal range [%g, %g]; clamping", raw, scale_min, scale_max
        )
        raw = min(max(raw, scale_min), scale_max)
    return 2.0 * (raw - scale_min) / (scale_max - scale_min) - 1.0


def split_pairs(
    pairs: LabeledPairSet, train_fraction: float, seed: int
) -> tuple[LabeledPairSet, LabeledPairSet]:
    """Uniform random disjoint train/test split, deterministic per seed."""
    if not 0.0 < train_fraction < 1.0:
        raise ValueError(f"train_fraction must be in (0, 1), got {train_fraction}")
    n = len(pairs)
    if n == 0:
        raise ValueError("cannot split an empty pair set")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    n_train = int(round(n * train_fraction))
    train_idx = np.sort(perm[:n_train])
    test_idx = np.sort(perm[n_train:])
    all_pairs = pairs.pairs
    return (
        LabeledPairSet(all_pairs[i] for i in train_idx),
        LabeledPairSet(all_pairs[i] for i in test_idx),
    )


@dataclass
class TrainConfig:
    d: int
    learning_rate: float = 0.05
    epochs: int = 500
    batch: int | None = None
    seed: int = 42
    init_alpha: float = 1.0

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("d must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        # epochs == 0 is legal: it returns the initialization untouched.
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.batch is not None and self.batch < 1:
            raise ValueError("batch must be >= 1 or None for full batch")


def transform_vector(v: np.ndarray, model: RemovalModel) -> np.ndarray:
    """Literal per-vector removal: v - sum_i alpha_i (u_i . v) u_i."""
    u = model.directions
    return v - u.T @ (model.alphas * (u @ v))


def predict_similarity(
    token_a: str, token_b: str, matrix: EmbeddingMatrix, model: RemovalModel
) -> float:
    """Cosine similarity of the two tokens' transformed vectors."""
    va = transform_vector(matrix.vector(token_a), model)
    vb = transform_vector(matrix.vector(token_b), model)
    na, nb = np.linalg.norm(va), np.linalg.norm(vb)
    if na == 0.0 or nb == 0.0:
        zero = token_a if na == 0.0 else token_b
        raise ValueError(f"zero vector after transform for token {zero!r}")
    return float(np.clip(va @ vb / (na * nb), -1.0, 1.0))


class _PairFeatures:
    """Per-pair sufficient statistics for the MSE objective.

    Every pair (v, w) is summarized by its direction coefficients and the
    direction-orthogonal residual dot products; all epoch-time quantities
    follow from these. Exact up to the orthonormality of the directions,
    which RemovalModel enforces at 1e-8.
    """

    def __init__(self, pairs: LabeledPairSet, matrix: EmbeddingMatrix, directions: np.ndarray):
        if len(pairs) == 0:
            raise ValueError("empty pair set")
        vocab = matrix.vocab
        idx_a = np.fromiter((vocab.index(p.token_a) for p in pairs), dtype=np.intp)
        idx_b = np.fromiter((vocab.index(p.token_b) for p in pairs), dtype=np.intp)
        a = matrix.vectors[idx_a]
        b = matrix.vectors[idx_b]
        ca = a @ directions.T
        cb = b @ directions.T
        self.cab = ca * cb
        self.ca2 = ca ** 2
        self.cb2 = cb ** 2
        # Residual (orthogonal-complement) dot products; clamp tiny negative
        # rounding in the squared norms.
        self.r_ab = np.einsum("ij,ij->i", a, b) - np.einsum("ij,ij->i", ca, cb)
        self.r_aa = np.maximum(np.einsum("ij,ij->i", a, a) - np.einsum("ij,ij->i", ca, ca), 0.0)
        self.r_bb = np.maximum(np.einsum("ij,ij->i", b, b) - np.einsum("ij,ij->i", cb, cb), 0.0)
        self.targets = np.fromiter((p.target for p in pairs), dtype=np.float64)
        self.n = len(pairs)

    def _predictions(self, alphas: np.ndarray, sel: slice | np.ndarray):
        w2 = (1.0 - alphas) ** 2
        dot = self.r_ab[sel] + self.cab[sel] @ w2
        n2a = np.maximum(self.r_aa[sel] + self.ca2[sel] @ w2, 1e-300)
        n2b = np.maximum(self.r_bb[sel] + self.cb2[sel] @ w2, 1e-300)
        # Multiplying the square roots (not the squared norms) avoids
        # underflow when both vectors are annihilated by full removal.
        inv_norm = 1.0 / (np.sqrt(n2a) * np.sqrt(n2b))
        sims = np.clip(dot * inv_norm, -1.0, 1.0)
        return sims, inv_norm, n2a, n2b

    def loss(self, alphas: np.ndarray, sel: slice | np.ndarray = slice(None)) -> float:
        s, _, _, _ = self._predictions(alphas, sel)
        res = s - self.targets[sel]
        return float(np.mean(res ** 2))

    def gradient(self, alphas: np.ndarray, sel: slice | np.ndarray = slice(None)) -> np.ndarray:
        # dS/da_i = w_i (-2 cab_i / (na nb) + S (ca2_i/na^2 + cb2_i/nb^2)),
        # with w = 1 - alpha; dL/da = mean 2 (S - t) dS/da.
        s, inv_norm, n2a, n2b = self._predictions(alphas, sel)
        res = s - self.targets[sel]
        w = 1.0 - alphas
        ds = w * (
            -2.0 * self.cab[sel] * inv_norm[:, None]
            + s[:, None] * (self.ca2[sel] / n2a[:, None] + self.cb2[sel] / n2b[:, None])
        )
        return (2.0 / len(res)) * (res @ ds)


def loss(pairs: LabeledPairSet, matrix: EmbeddingMatrix, model: RemovalModel) -> float:
    """Mean squared error of predicted vs target similarity over all pairs."""
    return _PairFeatures(pairs, matrix, model.directions).loss(model.alphas)


def loss_gradient(
    pairs: LabeledPairSet, matrix: EmbeddingMatrix, model: RemovalModel
) -> np.ndarray:
    """Analytic d-vector of loss derivatives with respect to the weights."""
    return _PairFeatures(pairs, matrix, model.directions).gradient(model.alphas)


class FitEpoch(NamedTuple):
    epoch: int
    loss: float
    lr: float


@dataclass
class FitResult:
    model: RemovalModel
    history: list[FitEpoch]

    @property
    def final_loss(self) -> float:
        return self.history[-1].loss


def fit(
    train_pairs: LabeledPairSet,
    matrix: EmbeddingMatrix,
    directions: PrincipalDirections,
    config: TrainConfig,
) -> FitResult:
    """Gradient-descend the removal weights on the training pairs.

    Full-batch mode (the default) halves the learning rate and retries
    whenever a step would increase the loss, so the recorded trajectory is
    non-increasing. Mini-batch mode shuffles per epoch with the config seed
    and halves the rate when an epoch ends worse than the last.

    The loss depends on each weight only through (1 - alpha_i)^2, so
    init_alpha=1.0 (the complete-removal baseline) is an exact stationary
    point: gradients vanish there and the weights stay at 1. Start slightly
    away from 1 (for example 0.9) when the weights should actually move.
    """
    if config.d > directions.k:
        raise ValueError(
            f"d={config.d} exceeds the {directions.k} available directions"
        )
    u = directions.directions[: config.d]
    feats = _PairFeatures(train_pairs, matrix, u)
    alphas = np.full(config.d, config.init_alpha, dtype=np.float64)
    lr = config.learning_rate

    cur_loss = feats.loss(alphas)
    _check_divergence(cur_loss, 0)
    history = [FitEpoch(0, cur_loss, lr)]

    if config.batch is None:
        for epoch in range(1, config.epochs + 1):
            g = feats.gradient(alphas)
            stepped = False
            while lr >= _MIN_LR:
                cand = alphas - lr * g
                cand_loss = feats.loss(cand)
                if cand_loss <= cur_loss:
                    alphas, cur_loss, stepped = cand, cand_loss, True
                    break
                lr *= 0.5
            if not stepped:
                logger.info("no descent step possible at epoch %d; stopping", epoch)
                break
            _check_divergence(cur_loss, epoch)
            history.append(FitEpoch(epoch, cur_loss, lr))
    else:
        rng = np.random.default_rng(config.seed)
        for epoch in range(1, config.epochs + 1):
            order = rng.permutation(feats.n)
            for start in range(0, feats.n, config.batch):
                sel = order[start : start + config.batch]
                alphas = alphas - lr * feats.gradient(alphas, sel)
            epoch_loss = feats.loss(alphas)
            _check_divergence(epoch_loss, epoch)
            if epoch_loss > cur_loss:
                lr *= 0.5
            cur_loss = epoch_loss
            history.append(FitEpoch(epoch, epoch_loss, lr))

    model = RemovalModel(alphas, u, source_fingerprint=matrix.fingerprint())
    return FitResult(model, history)


def _check_divergence(value: float, epoch: int) -> None:
    if not np.isfinite(value) or value > _DIVERGENCE_LIMIT:
        raise RuntimeError(
            f"training diverged at epoch {epoch}: loss={value!r} "
            f"(try a smaller learning rate)"
        )


def write_fit_log(
    history: Sequence[FitEpoch], path: str | Path, header_comments: Sequence[str] = ()
) -> None:
    """Write the per-epoch trajectory as ``epoch,loss,lr``."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for line in header_comments:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh)
        writer.writerow(["epoch", "loss", "lr"])
        for rec in history:
            writer.writerow([rec.epoch, f"{rec.loss:.12g}", f"{rec.lr:.12g}"])
