"""Embedding matrices, vocabularies, and frequency tables in the plain-text
interchange format (header line ``<count> <dim>``, then one token plus
``dim`` floats per line).
"""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Iterator, Mapping, Sequence

import numpy as np

logger = logging.getLogger(__name__)

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_FNV_MASK = 0xFFFFFFFFFFFFFFFF


def fnv1a_64(data: bytes) -> int:
    """64-bit FNV-1a hash of a byte string."""
    h = _FNV_OFFSET
    for byte in data:
        h = ((h ^ byte) * _FNV_PRIME) & _FNV_MASK
    return h


def fingerprint_file(path: str | Path) -> str:
    """Hex FNV-1a fingerprint over a file's raw bytes.

    Pure Python, so roughly 2 s per 25 MB; callers cache the result.
    """
    return f"{fnv1a_64(Path(path).read_bytes()):016x}"


class Vocabulary:
    """Ordered set of unique tokens with O(1) token -> row lookup."""

    def __init__(self, tokens: Sequence[str]):
        tokens = list(tokens)
        if not tokens:
            raise ValueError("vocabulary must contain at least one token")
        index: dict[str, int] = {}
        for i, tok in enumerate(tokens):
            if not tok or any(c.isspace() for c in tok):
                raise ValueError(
                    f"invalid token at row {i}: tokens must be non-empty and "
                    f"whitespace-free, got {tok!r}"
                )
            if tok in index:
                raise ValueError(f"duplicate token {tok!r} at row {i}")
            index[tok] = i
        self._tokens = tuple(tokens)
        self._index = index

    @property
    def tokens(self) -> tuple[str, ...]:
        return self._tokens

    def index(self, token: str) -> int:
        try:
            return self._index[token]
        except KeyError:
            raise KeyError(f"token not in vocabulary: {token!r}") from None

    def token(self, i: int) -> str:
        return self._tokens[i]

    def __contains__(self, token: str) -> bool:
        return token in self._index

    def __len__(self) -> int:
        return len(self._tokens)

    def __iter__(self) -> Iterator[str]:
        return iter(self._tokens)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Vocabulary) and self._tokens == other._tokens


class EmbeddingMatrix:
    """Immutable |V| x dim matrix of token vectors plus its vocabulary.

    Rows are stored as float64 and marked read-only, so a single instance is
    safe to share across parallel workers.
    """

    def __init__(
        self,
        vocab: Vocabulary,
        vectors: np.ndarray,
        source_path: str | Path | None = None,
    ):
        vectors = np.ascontiguousarray(vectors, dtype=np.float64)
        if vectors.ndim != 2:
            raise ValueError(f"expected a 2-D array of rows, got ndim={vectors.ndim}")
        if vectors.shape[0] != len(vocab):
            raise ValueError(
                f"row count {vectors.shape[0]} does not match vocabulary size {len(vocab)}"
            )
        if vectors.shape[1] < 1:
            raise ValueError("embedding dimension must be >= 1")
        if not np.all(np.isfinite(vectors)):
            bad = np.argwhere(~np.isfinite(vectors))[0]
            raise ValueError(f"non-finite value at row {bad[0]}, column {bad[1]}")
        vectors.setflags(write=False)
        self._vocab = vocab
        self._vectors = vectors
        self._source_path = Path(source_path) if source_path is not None else None
        self._fingerprint: str | None = None

    @property
    def vocab(self) -> Vocabulary:
        return self._vocab

    @property
    def vectors(self) -> np.ndarray:
        return self._vectors

    @property
    def dim(self) -> int:
        return self._vectors.shape[1]

    @property
    def source_path(self) -> Path | None:
        return self._source_path

    def __len__(self) -> int:
        return self._vectors.shape[0]

    def vector(self, token: str) -> np.ndarray:
        return self._vectors[self._vocab.index(token)]

    def fingerprint(self) -> str | None:
        """FNV-1a fingerprint of the file this matrix was loaded from.

        None for matrices that were never on disk. Computed on first use and
        memoized (the hash is the only expensive part of model provenance).
        """
        if self._fingerprint is None and self._source_path is not None:
            self._fingerprint = fingerprint_file(self._source_path)
        return self._fingerprint


def load_embeddings(path: str | Path) -> EmbeddingMatrix:
    """Read an embedding matrix from the interchange text format.

    Malformed input raises ValueError naming the offending line (header,
    row length, duplicate token, unparseable or non-finite value).
    """
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        header = fh.readline()
        fields = header.split()
        if len(fields) != 2:
            raise ValueError(f"{path}: malformed header at line 1: {header.rstrip()!r}")
        try:
            count, dim = int(fields[0]), int(fields[1])
        except ValueError:
            raise ValueError(
                f"{path}: malformed header at line 1: {header.rstrip()!r}"
            ) from None
        if count < 1 or dim < 1:
            raise ValueError(f"{path}: header must declare count >= 1 and dim >= 1")

        tokens: list[str] = []
        seen: dict[str, int] = {}
        rows = np.empty((count, dim), dtype=np.float64)
        lineno = 1
        for line in fh:
            lineno += 1
            if not line.strip():
                continue
            i = len(tokens)
            if i >= count:
                raise ValueError(
                    f"{path}: expected {count} rows, found extra data at line {lineno}"
                )
            parts = line.split()
            if len(parts) != dim + 1:
                raise ValueError(f"{path}: row length mismatch at line {lineno}")
            tok = parts[0]
            if tok in seen:
                raise ValueError(
                    f"{path}: duplicate token {tok!r} at line {lineno} "
                    f"(first seen at line {seen[tok]})"
                )
            seen[tok] = lineno
            tokens.append(tok)
            try:
                rows[i] = parts[1:]
            except ValueError:
                raise ValueError(
                    f"{path}: unparseable value at line {lineno}"
                ) from None
        if len(tokens) != count:
            raise ValueError(f"{path}: expected {count} rows, found {len(tokens)}")

    finite = np.isfinite(rows).all(axis=1)
    if not finite.all():
        bad_row = int(np.flatnonzero(~finite)[0])
        raise ValueError(f"{path}: non-finite value at line {bad_row + 2}")
    return EmbeddingMatrix(Vocabulary(tokens), rows, source_path=path)


def save_embeddings(matrix: EmbeddingMatrix, path: str | Path) -> None:
    """Write a matrix in the interchange format (9 fractional digits, LF)."""
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"{len(matrix)} {matrix.dim}\n")
        for tok, row in zip(matrix.vocab, matrix.vectors):
            fh.write(tok)
            fh.write(" ")
            fh.write(" ".join(f"{x:.9f}" for x in row))
            fh.write("\n")


def normalize(v: np.ndarray) -> np.ndarray:
    """Return v scaled to unit norm."""
    v = np.asarray(v, dtype=np.float64)
    n = np.linalg.norm(v)
    if n == 0.0:
        raise ValueError("cannot normalize zero vector")
    return v / n


class FrequencyTable:
    """Token -> positive occurrence count; empty tables are legal."""

    def __init__(self, counts: Mapping[str, int]):
        clean: dict[str, int] = {}
        for tok, c in counts.items():
            if int(c) != c or c < 1:
                raise ValueError(f"count must be >= 1, got {c!r} for token {tok!r}")
            clean[tok] = int(c)
        self._counts = clean

    def __contains__(self, token: str) -> bool:
        return token in self._counts

    def __len__(self) -> int:
        return len(self._counts)

    def __getitem__(self, token: str) -> int:
        return self._counts[token]

    def get(self, token: str, default: int | None = None) -> int | None:
        return self._counts.get(token, default)

    def log_count(self, token: str) -> float:
        """Natural log of the token's count (counts >= 1, so always defined)."""
        return float(np.log(self._counts[token]))

    @property
    def tokens(self) -> tuple[str, ...]:
        return tuple(self._counts)


def load_counts(path: str | Path) -> FrequencyTable:
    """Read a ``<token> <count>`` per line frequency file."""
    path = Path(path)
    counts: dict[str, int] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ValueError(f"{path}: malformed line {lineno}: {line.rstrip()!r}")
            tok, raw = parts
            try:
                c = int(raw)
            except ValueError:
                raise ValueError(
                    f"{path}: malformed count at line {lineno}: {raw!r}"
                ) from None
            if c < 1:
                raise ValueError(f"{path}: count must be >= 1 at line {lineno}")
            if tok in counts:
                raise ValueError(f"{path}: duplicate token {tok!r} at line {lineno}")
            counts[tok] = c
    if not counts:
        logger.warning("%s: empty counts file", path)
    return FrequencyTable(counts)
