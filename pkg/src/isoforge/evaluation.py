"""Scoring embeddings on word similarity, word analogy, and sentence
similarity, plus the removal-depth sweep that compares methods side by side.
"""

from __future__ import annotations

import csv
import logging
import re
import string
from dataclasses import dataclass, replace
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np

from .datasets import AnalogyQuestion, StsPair
from .diagnostics import pearson
from .embeddings import EmbeddingMatrix, Vocabulary
from .spectral import compute_directions
from .training import LabeledPairSet, TrainConfig, fit
from .transforms import abtt, conceptor_negation, weighted_removal

logger = logging.getLogger(__name__)

METHODS = ("orig", "wr", "abtt", "cn")

# Analogy answers are whole words: drop wordpiece continuations and the
# bracketed special/reserved tokens from the candidate pool.
_SPECIAL_TOKENS = {"[pad]", "[unk]", "[cls]", "[sep]", "[mask]"}
_UNUSED_RE = re.compile(r"^\[unused\d+\]$", re.IGNORECASE)

CANDIDATE_POLICY = (
    "analogy candidates exclude the three query tokens, '##' continuations, "
    "and bracketed specials ([PAD],[UNK],[CLS],[SEP],[MASK],[unusedN]); "
    "questions with any out-of-vocabulary token are skipped and counted in coverage"
)


@dataclass(frozen=True)
class EvalResult:
    task: str
    dataset: str
    metric: float
    coverage: float
    n: int


def eval_similarity(
    matrix: EmbeddingMatrix, pairs: LabeledPairSet, dataset: str | None = None
) -> EvalResult:
    """Pearson correlation between pairwise cosine similarity and the scaled
    human targets, over in-vocabulary pairs."""
    if len(pairs) == 0:
        raise ValueError("empty pair set")
    vocab = matrix.vocab
    usable = [p for p in pairs if p.token_a in vocab and p.token_b in vocab]
    ia = np.array([vocab.index(p.token_a) for p in usable], dtype=np.intp)
    ib = np.array([vocab.index(p.token_b) for p in usable], dtype=np.intp)
    if len(usable) >= 1:
        a = matrix.vectors[ia]
        b = matrix.vectors[ib]
        na = np.linalg.norm(a, axis=1)
        nb = np.linalg.norm(b, axis=1)
        ok = (na > 0) & (nb > 0)
        if not ok.all():
            logger.warning(
                "excluding %d pairs with zero-norm vectors", int((~ok).sum())
            )
        sims = np.einsum("ij,ij->i", a[ok], b[ok]) / (na[ok] * nb[ok])
        targets = np.array([p.target for p in usable], dtype=np.float64)[ok]
    else:
        sims = targets = np.array([])
    if len(sims) < 2:
        raise ValueError(f"fewer than 2 usable pairs ({len(sims)} of {len(pairs)})")
    if dataset is None:
        dataset = "+".join(pairs.sources()) or "similarity"
    return EvalResult(
        task="similarity",
        dataset=dataset,
        metric=pearson(sims, targets),
        coverage=len(sims) / len(pairs),
        n=len(sims),
    )


def candidate_mask(vocab: Vocabulary) -> np.ndarray:
    """Boolean mask over rows eligible as analogy answers."""
    mask = np.ones(len(vocab), dtype=bool)
    for i, tok in enumerate(vocab):
        if tok.startswith("##") or tok.lower() in _SPECIAL_TOKENS or _UNUSED_RE.match(tok):
            mask[i] = False
    return mask


@dataclass
class AnalogyResult:
    per_category: list[EvalResult]
    semantic: EvalResult | None
    syntactic: EvalResult | None
    overall: EvalResult


def eval_analogy(
    matrix: EmbeddingMatrix,
    questions: Sequence[AnalogyQuestion],
    *,
    batch_size: int = 256,
) -> AnalogyResult:
    """Accuracy of picking the expected word as the cosine-nearest candidate
    to v(b) - v(a) + v(c).

    Questions containing any out-of-vocabulary token are skipped and counted
    against coverage; the three query tokens are never candidates.
    """
    if not questions:
        raise ValueError("no analogy questions")
    vocab = matrix.vocab
    vectors = matrix.vectors
    norms = np.linalg.norm(vectors, axis=1)
    cand = candidate_mask(vocab) & (norms > 0)
    unit = np.where(norms[:, None] > 0, vectors / np.where(norms == 0, 1, norms)[:, None], 0.0)

    usable_idx: list[int] = []
    quads = []
    for qi, q in enumerate(questions):
        if all(t in vocab for t in (q.a, q.b, q.c, q.expected)):
            usable_idx.append(qi)
            quads.append([vocab.index(t) for t in (q.a, q.b, q.c, q.expected)])
    if not usable_idx:
        raise ValueError("no usable analogy questions (all contain OOV tokens)")
    quads_arr = np.array(quads, dtype=np.intp)

    correct = np.zeros(len(usable_idx), dtype=bool)
    for start in range(0, len(usable_idx), batch_size):
        block = quads_arr[start : start + batch_size]
        query = vectors[block[:, 1]] - vectors[block[:, 0]] + vectors[block[:, 2]]
        scores = query @ unit.T
        scores[:, ~cand] = -np.inf
        rows = np.arange(len(block))
        for col in range(3):
            scores[rows, block[:, col]] = -np.inf
        correct[start : start + batch_size] = scores.argmax(axis=1) == block[:, 3]

    def aggregate(tag: str, keep: np.ndarray, total: int) -> EvalResult | None:
        if total == 0:
            return None
        hits = correct[keep]
        if len(hits) == 0:
            return EvalResult("analogy", tag, 0.0, 0.0, 0)
        return EvalResult("analogy", tag, float(hits.mean()), len(hits) / total, len(hits))

    usable_qs = [questions[i] for i in usable_idx]
    categories = list(dict.fromkeys(q.category for q in questions))
    per_category = []
    for cat in categories:
        keep = np.array([q.category == cat for q in usable_qs], dtype=bool)
        total = sum(q.category == cat for q in questions)
        res = aggregate(cat, keep, total)
        if res is not None:
            per_category.append(res)
    sem_keep = np.array([q.is_semantic for q in usable_qs], dtype=bool)
    sem_total = sum(q.is_semantic for q in questions)
    syn_total = len(questions) - sem_total
    return AnalogyResult(
        per_category=per_category,
        semantic=aggregate("semantic", sem_keep, sem_total),
        syntactic=aggregate("syntactic", ~sem_keep, syn_total),
        overall=aggregate("all", np.ones(len(usable_qs), dtype=bool), len(questions)),
    )


_PUNCT_TO_SPACE = str.maketrans({c: " " for c in string.punctuation})


def tokenize_simple(text: str) -> list[str]:
    """Lowercase, map punctuation to spaces, split on whitespace."""
    return text.lower().translate(_PUNCT_TO_SPACE).split()


def sentence_embedding(tokens: Sequence[str], matrix: EmbeddingMatrix) -> np.ndarray | None:
    """Mean vector of the in-vocabulary tokens; None when nothing matches."""
    vocab = matrix.vocab
    idx = [vocab.index(t) for t in tokens if t in vocab]
    if not idx:
        return None
    return matrix.vectors[idx].mean(axis=0)


def eval_sts(
    matrix: EmbeddingMatrix, pairs: Sequence[StsPair], mode: str = "simple"
) -> list[EvalResult]:
    """Pearson correlation of mean-vector sentence cosines against targets,
    one result per year tag.

    ``mode='simple'`` applies the built-in tokenizer; ``'pretokenized'``
    treats each sentence as a ready space-separated token sequence.
    """
    if mode not in ("simple", "pretokenized"):
        raise ValueError(f"unknown tokenization mode {mode!r}")
    if not pairs:
        raise ValueError("no sentence pairs")
    by_tag: dict[str, list[StsPair]] = {}
    for p in pairs:
        by_tag.setdefault(p.year_tag, []).append(p)

    results = []
    for tag, tagged in by_tag.items():
        sims, targets = [], []
        for p in tagged:
            if mode == "simple":
                ta, tb = tokenize_simple(p.sentence_a), tokenize_simple(p.sentence_b)
            else:
                ta, tb = p.sentence_a.split(), p.sentence_b.split()
            ea = sentence_embedding(ta, matrix)
            eb = sentence_embedding(tb, matrix)
            if ea is None or eb is None:
                continue
            na, nb = np.linalg.norm(ea), np.linalg.norm(eb)
            if na == 0 or nb == 0:
                continue
            sims.append(float(ea @ eb / (na * nb)))
            targets.append(p.target)
        if len(sims) < 2:
            raise ValueError(
                f"fewer than 2 usable sentence pairs for {tag!r} ({len(sims)} of {len(tagged)})"
            )
        results.append(
            EvalResult("sts", tag, pearson(sims, targets), len(sims) / len(tagged), len(sims))
        )
    return results


class ResultRow(NamedTuple):
    method: str
    d: int
    task: str
    dataset: str
    metric: float
    coverage: float
    n: int


def as_row(method: str, d: int, res: EvalResult) -> ResultRow:
    return ResultRow(method, d, res.task, res.dataset, res.metric, res.coverage, res.n)


def sweep(
    matrix: EmbeddingMatrix,
    d_values: Sequence[int],
    methods: Sequence[str] = ("wr", "abtt"),
    *,
    similarity_train: LabeledPairSet | None = None,
    similarity_test: LabeledPairSet | None = None,
    analogy: Sequence[AnalogyQuestion] | None = None,
    sts: Sequence[StsPair] | None = None,
    train_config: TrainConfig | None = None,
    sts_mode: str = "simple",
    aperture: float = 2.0,
    remove_mean: bool = False,
    center: bool = False,
) -> list[ResultRow]:
    """Fit/apply every requested method at every removal depth and evaluate
    the requested tasks, one row per (method, d, task).

    Similarity rows score the held-out test pairs; analogy rows report
    overall accuracy; sentence rows pool all year tags. The SVD runs once at
    the largest depth and is sliced per d.
    """
    if not d_values:
        raise ValueError("empty d list")
    bad = [m for m in methods if m not in METHODS]
    if bad:
        raise ValueError(f"unknown methods {bad}; expected a subset of {METHODS}")
    if not any((similarity_test is not None, analogy, sts)):
        raise ValueError("no evaluation task inputs supplied")

    d_values = sorted(set(int(d) for d in d_values))
    if d_values[0] < 1:
        raise ValueError(f"d values must be >= 1, got {d_values[0]}")

    directions = None
    if "wr" in methods or "abtt" in methods:
        directions = compute_directions(matrix, d_values[-1], center=center)
    if "wr" in methods:
        if similarity_train is None or len(similarity_train) == 0:
            raise ValueError("the wr method requires training pairs")
        if train_config is None:
            train_config = TrainConfig(d=d_values[-1])

    def evaluate(method: str, d: int, transformed: EmbeddingMatrix) -> list[ResultRow]:
        out = []
        if similarity_test is not None:
            out.append(as_row(method, d, eval_similarity(transformed, similarity_test, dataset="all")))
        if analogy:
            out.append(as_row(method, d, eval_analogy(transformed, analogy).overall))
        if sts:
            out.append(as_row(method, d, _pooled_sts(transformed, sts, sts_mode)))
        return out

    rows: list[ResultRow] = []
    for method in methods:
        if method == "orig":
            rows.extend(evaluate("orig", 0, matrix))
        elif method == "cn":
            rows.extend(evaluate("cn", 0, conceptor_negation(matrix, aperture)))
    for d in d_values:
        for method in methods:
            if method == "wr":
                assert directions is not None and train_config is not None
                result = fit(similarity_train, matrix, directions.top(d), replace(train_config, d=d))
                transformed = weighted_removal(matrix, result.model)
                rows.extend(evaluate("wr", d, transformed))
            elif method == "abtt":
                rows.extend(evaluate("abtt", d, abtt(matrix, d, remove_mean=remove_mean)))
    return rows


def _pooled_sts(matrix: EmbeddingMatrix, sts: Sequence[StsPair], mode: str) -> EvalResult:
    pooled = [StsPair(p.sentence_a, p.sentence_b, p.target, "all") for p in sts]
    return eval_sts(matrix, pooled, mode=mode)[0]


def write_results_csv(
    rows: Sequence[ResultRow], path: str | Path, header_comments: Sequence[str] = ()
) -> None:
    """Write evaluation rows as ``method,d,task,dataset,metric,coverage,n``."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for line in header_comments:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh)
        writer.writerow(["method", "d", "task", "dataset", "metric", "coverage", "n"])
        for r in rows:
            writer.writerow(
                [r.method, r.d, r.task, r.dataset, f"{r.metric:.9g}", f"{r.coverage:.6g}", r.n]
            )
