"""Parsers for the external evaluation datasets and the manifest that
describes their heterogeneous on-disk layouts.

The manifest is a single JSON document with ``similarity``, ``analogy``, and
``sts`` sections; every entry declares its path (relative to the manifest
file), delimiter, header flag, nominal score range, and column map, so no
dataset layout is hard-coded.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .training import LabeledPair, LabeledPairSet, scale_annotations

logger = logging.getLogger(__name__)

_DELIMITERS = ("tab", "comma", "space")


@dataclass(frozen=True)
class AnalogyQuestion:
    a: str
    b: str
    c: str
    expected: str
    category: str
    is_semantic: bool


@dataclass(frozen=True)
class StsPair:
    sentence_a: str
    sentence_b: str
    target: float
    year_tag: str


def _split_fields(line: str, delimiter: str) -> list[str]:
    if delimiter == "tab":
        return line.rstrip("\n").split("\t")
    if delimiter == "comma":
        return next(csv.reader([line]))
    if delimiter == "space":
        return line.split()
    raise ValueError(f"unknown delimiter tag {delimiter!r} (expected one of {_DELIMITERS})")


def parse_similarity_dataset(
    path: str | Path,
    *,
    name: str,
    scale: tuple[float, float],
    delimiter: str = "tab",
    header: bool = False,
    columns: tuple[int, int, int] = (0, 1, 2),
) -> LabeledPairSet:
    """Parse one word-similarity file into labeled pairs.

    Words are lowercased; scores pass through the [-1, 1] scaling. Rare
    multi-word entries are dropped with a warning (a wordpiece vocabulary
    cannot match a phrase); structurally malformed lines raise with their
    line number.
    """
    path = Path(path)
    col_a, col_b, col_s = columns
    need = max(columns) + 1
    pairs: list[LabeledPair] = []
    dropped_multiword = 0
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if header and lineno == 1:
                continue
            if not line.strip():
                continue
            fields = _split_fields(line, delimiter)
            if len(fields) < need:
                raise ValueError(
                    f"{path}: parse error at line {lineno}: "
                    f"expected at least {need} fields, found {len(fields)}"
                )
            word_a = fields[col_a].strip().lower()
            word_b = fields[col_b].strip().lower()
            if not word_a or not word_b:
                raise ValueError(f"{path}: parse error at line {lineno}: empty word field")
            if any(c.isspace() for c in word_a + word_b):
                dropped_multiword += 1
                continue
            try:
                raw = float(fields[col_s])
            except ValueError:
                raise ValueError(
                    f"{path}: parse error at line {lineno}: "
                    f"unparseable score {fields[col_s]!r}"
                ) from None
            pairs.append(LabeledPair(word_a, word_b, scale_annotations(raw, *scale), name))
    if dropped_multiword:
        logger.warning("%s: dropped %d multi-word entries", path, dropped_multiword)
    if not pairs:
        raise ValueError(f"{path}: empty dataset")
    return LabeledPairSet(pairs)


def parse_analogy_dataset(path: str | Path) -> list[AnalogyQuestion]:
    """Parse a Google-format analogy file (``: category`` section headers,
    four whitespace-separated tokens per question).

    Categories whose name starts with ``gram`` are syntactic; all others are
    semantic.
    """
    path = Path(path)
    questions: list[AnalogyQuestion] = []
    category: str | None = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped:
                continue
            if stripped.startswith(":"):
                category = stripped[1:].strip()
                if not category:
                    raise ValueError(f"{path}: empty category name at line {lineno}")
                continue
            if category is None:
                raise ValueError(f"{path}: data line before any category at line {lineno}")
            tokens = stripped.split()
            if len(tokens) != 4:
                raise ValueError(
                    f"{path}: expected 4 tokens at line {lineno}, found {len(tokens)}"
                )
            a, b, c, expected = (t.lower() for t in tokens)
            questions.append(
                AnalogyQuestion(a, b, c, expected, category, not category.startswith("gram"))
            )
    return questions


def parse_sts_dataset(
    path: str | Path,
    *,
    year_tag: str,
    scale: tuple[float, float] = (0.0, 5.0),
    delimiter: str = "tab",
    header: bool = False,
    columns: tuple[int, int, int] = (0, 1, 2),
) -> list[StsPair]:
    """Parse a sentence-pair similarity file; ``columns`` maps
    (score, sentence1, sentence2) onto the file's layout.
    """
    path = Path(path)
    col_s, col_a, col_b = columns
    need = max(columns) + 1
    out: list[StsPair] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if header and lineno == 1:
                continue
            if not line.strip():
                continue
            fields = _split_fields(line, delimiter)
            if len(fields) < need:
                raise ValueError(
                    f"{path}: parse error at line {lineno}: "
                    f"expected at least {need} fields, found {len(fields)}"
                )
            sent_a = fields[col_a].strip().lower()
            sent_b = fields[col_b].strip().lower()
            if not sent_a or not sent_b:
                raise ValueError(f"{path}: parse error at line {lineno}: empty sentence")
            try:
                raw = float(fields[col_s])
            except ValueError:
                raise ValueError(
                    f"{path}: parse error at line {lineno}: "
                    f"unparseable score {fields[col_s]!r}"
                ) from None
            out.append(StsPair(sent_a, sent_b, scale_annotations(raw, *scale), year_tag))
    return out


def load_pretokenized_sts(
    sentences_a: str | Path,
    sentences_b: str | Path,
    scores: str | Path,
    *,
    year_tag: str,
    scale: tuple[float, float] = (0.0, 5.0),
) -> list[StsPair]:
    """Load pre-tokenized sentence files (one space-joined token sequence per
    line) aligned line-by-line with a scores file.
    """
    lines_a = Path(sentences_a).read_text(encoding="utf-8").splitlines()
    lines_b = Path(sentences_b).read_text(encoding="utf-8").splitlines()
    score_lines = Path(scores).read_text(encoding="utf-8").splitlines()
    if not len(lines_a) == len(lines_b) == len(score_lines):
        raise ValueError(
            f"pre-tokenized files misaligned: {len(lines_a)} / {len(lines_b)} "
            f"sentences vs {len(score_lines)} scores"
        )
    out = []
    for lineno, (sa, sb, raw) in enumerate(zip(lines_a, lines_b, score_lines), start=1):
        if not sa.strip() or not sb.strip():
            raise ValueError(f"empty pre-tokenized sentence at line {lineno}")
        try:
            score = float(raw)
        except ValueError:
            raise ValueError(f"{scores}: unparseable score at line {lineno}: {raw!r}") from None
        out.append(StsPair(sa.strip(), sb.strip(), scale_annotations(score, *scale), year_tag))
    return out


@dataclass(frozen=True)
class SimilarityDatasetSpec:
    name: str
    path: Path
    scale: tuple[float, float]
    delimiter: str = "tab"
    header: bool = False
    columns: tuple[int, int, int] = (0, 1, 2)

    def load(self) -> LabeledPairSet:
        return parse_similarity_dataset(
            self.path,
            name=self.name,
            scale=self.scale,
            delimiter=self.delimiter,
            header=self.header,
            columns=self.columns,
        )


@dataclass(frozen=True)
class AnalogyDatasetSpec:
    name: str
    path: Path

    def load(self) -> list[AnalogyQuestion]:
        return parse_analogy_dataset(self.path)


@dataclass(frozen=True)
class StsDatasetSpec:
    name: str
    scale: tuple[float, float] = (0.0, 5.0)
    path: Path | None = None
    delimiter: str = "tab"
    header: bool = False
    columns: tuple[int, int, int] = (0, 1, 2)
    pretokenized: dict[str, Path] | None = None

    def load(self) -> list[StsPair]:
        if self.pretokenized is not None:
            return load_pretokenized_sts(
                self.pretokenized["sentences_a"],
                self.pretokenized["sentences_b"],
                self.pretokenized["scores"],
                year_tag=self.name,
                scale=self.scale,
            )
        assert self.path is not None
        return parse_sts_dataset(
            self.path,
            year_tag=self.name,
            scale=self.scale,
            delimiter=self.delimiter,
            header=self.header,
            columns=self.columns,
        )


@dataclass
class Manifest:
    similarity: list[SimilarityDatasetSpec] = field(default_factory=list)
    analogy: list[AnalogyDatasetSpec] = field(default_factory=list)
    sts: list[StsDatasetSpec] = field(default_factory=list)

    def load_similarity_pooled(self) -> LabeledPairSet:
        """All similarity datasets parsed and concatenated (source tags kept)."""
        sets = [spec.load() for spec in self.similarity]
        if not sets:
            raise ValueError("manifest declares no similarity datasets")
        return LabeledPairSet.pooled(sets)


def _require(entry: dict, key: str, where: str):
    if key not in entry:
        raise ValueError(f"manifest: missing {key!r} in {where}")
    return entry[key]


def _scale(entry: dict, where: str) -> tuple[float, float]:
    raw = _require(entry, "scale", where)
    if not (isinstance(raw, (list, tuple)) and len(raw) == 2 and raw[0] < raw[1]):
        raise ValueError(f"manifest: invalid scale {raw!r} in {where}")
    return float(raw[0]), float(raw[1])


def _columns(entry: dict, keys: tuple[str, str, str], where: str) -> tuple[int, int, int]:
    raw = entry.get("columns")
    if raw is None:
        return (0, 1, 2)
    if isinstance(raw, dict):
        try:
            return tuple(int(raw[k]) for k in keys)  # type: ignore[return-value]
        except KeyError as e:
            raise ValueError(f"manifest: column map in {where} missing {e}") from None
    if isinstance(raw, (list, tuple)) and len(raw) == 3:
        return tuple(int(c) for c in raw)  # type: ignore[return-value]
    raise ValueError(f"manifest: invalid columns {raw!r} in {where}")


def _delimiter(entry: dict, where: str) -> str:
    delim = entry.get("delimiter", "tab")
    if delim not in _DELIMITERS:
        raise ValueError(f"manifest: invalid delimiter {delim!r} in {where}")
    return delim


def load_manifest(path: str | Path) -> Manifest:
    """Read and validate a dataset manifest; relative paths resolve against
    the manifest's own directory."""
    path = Path(path)
    base = path.parent
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ValueError(f"{path}: not valid JSON: {e}") from None
    if not isinstance(raw, dict):
        raise ValueError(f"{path}: manifest must be a JSON object")

    def resolve(p: str) -> Path:
        q = Path(p)
        return q if q.is_absolute() else base / q

    manifest = Manifest()
    for entry in raw.get("similarity", []):
        name = _require(entry, "name", "similarity entry")
        where = f"similarity dataset {name!r}"
        manifest.similarity.append(
            SimilarityDatasetSpec(
                name=name,
                path=resolve(_require(entry, "path", where)),
                scale=_scale(entry, where),
                delimiter=_delimiter(entry, where),
                header=bool(entry.get("header", False)),
                columns=_columns(entry, ("word1", "word2", "score"), where),
            )
        )
    for entry in raw.get("analogy", []):
        name = _require(entry, "name", "analogy entry")
        manifest.analogy.append(
            AnalogyDatasetSpec(name=name, path=resolve(_require(entry, "path", f"analogy dataset {name!r}")))
        )
    for entry in raw.get("sts", []):
        name = _require(entry, "name", "sts entry")
        where = f"sts dataset {name!r}"
        scale = _scale(entry, where)
        if "pretokenized" in entry:
            pre = entry["pretokenized"]
            keys = ("sentences_a", "sentences_b", "scores")
            missing = [k for k in keys if k not in pre]
            if missing:
                raise ValueError(f"manifest: pretokenized entry in {where} missing {missing}")
            manifest.sts.append(
                StsDatasetSpec(
                    name=name,
                    scale=scale,
                    pretokenized={k: resolve(pre[k]) for k in keys},
                )
            )
        else:
            manifest.sts.append(
                StsDatasetSpec(
                    name=name,
                    scale=scale,
                    path=resolve(_require(entry, "path", where)),
                    delimiter=_delimiter(entry, where),
                    header=bool(entry.get("header", False)),
                    columns=_columns(entry, ("score", "sentence1", "sentence2"), where),
                )
            )
    return manifest
