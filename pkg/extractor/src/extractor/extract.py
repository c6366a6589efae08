"""Dump a pretrained BERT-style checkpoint's input embedding table and
vocabulary, plus optional wordpiece corpus counts and pre-tokenized sentence
pair files, into plain-text interchange formats:

  embedding.txt   header "<count> <dim>", then one "<token> <f1> ... <f_dim>"
                  per vocabulary row, in vocabulary-index order
  vocab.txt       one token per line, same order as the embedding rows
  counts.txt      one "<token> <count>" per line (tokens seen at least once)
  sts_a.txt /     one space-joined wordpiece sequence per sentence, aligned
  sts_b.txt /     line-by-line with the raw annotation scores
  sts_scores.txt

The table is the raw input token-embedding matrix: no position or segment
embeddings and no LayerNorm. All vocabulary rows are dumped, including
special and unused tokens; filtering is left to downstream consumers.

torch and transformers import lazily so --help stays fast.
"""

import argparse
import json
import logging
import sys
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

logger = logging.getLogger("extractor")

DELIMITERS = {"tab": "\t", "comma": ",", "space": None}


@dataclass(frozen=True)
class StsSpec:
    """Location and layout of one sentence-pair file to pre-tokenize."""

    path: Path
    delimiter: str = "tab"
    header: bool = False
    columns: tuple[int, int, int] = (0, 1, 2)

    def __post_init__(self):
        if self.delimiter not in DELIMITERS:
            raise ValueError(
                f"unknown delimiter {self.delimiter!r}; expected one of {sorted(DELIMITERS)}"
            )
        if len(self.columns) != 3 or min(self.columns) < 0:
            raise ValueError(f"columns must be three non-negative indices, got {self.columns}")


@dataclass(frozen=True)
class ExtractionConfig:
    model: str
    output_dir: Path
    corpus: Path | None = None
    sts: StsSpec | None = None


def vocab_in_index_order(tokenizer) -> list[str]:
    """Tokens ordered by vocabulary id, checked contiguous and whitespace-free."""
    vocab = tokenizer.get_vocab()
    tokens: list[str | None] = [None] * len(vocab)
    for token, idx in vocab.items():
        if not 0 <= idx < len(vocab):
            raise ValueError(f"vocabulary id {idx} for {token!r} outside 0..{len(vocab) - 1}")
        if tokens[idx] is not None:
            raise ValueError(f"duplicate vocabulary id {idx} ({tokens[idx]!r} vs {token!r})")
        tokens[idx] = token
    for idx, token in enumerate(tokens):
        if token is None:
            raise ValueError(f"vocabulary has no token for id {idx}")
        if any(ch.isspace() for ch in token):
            raise ValueError(f"token id {idx} contains whitespace: {token!r}")
    return tokens


def write_embeddings(path: Path, tokens: list[str], table) -> None:
    """Write the "<count> <dim>" header plus one token row per line, nine
    significant digits per value."""
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"{len(tokens)} {table.shape[1]}\n")
        for token, row in zip(tokens, table):
            fh.write(token + " " + " ".join(f"{x:.9g}" for x in row) + "\n")


def extract_embeddings(model: str, output_dir: Path) -> tuple[int, int]:
    """Dump the input embedding table and vocabulary listing; returns
    (vocabulary size, embedding dim)."""
    import torch
    from transformers import AutoModel, AutoTokenizer

    tokenizer = AutoTokenizer.from_pretrained(model)
    tokens = vocab_in_index_order(tokenizer)
    with torch.no_grad():
        table = AutoModel.from_pretrained(model).get_input_embeddings().weight.cpu().numpy()
    if table.shape[0] < len(tokens):
        raise ValueError(
            f"embedding table has {table.shape[0]} rows for {len(tokens)} vocabulary entries"
        )
    if table.shape[0] > len(tokens):
        logger.warning(
            "embedding table padded to %d rows; dumping the %d vocabulary rows",
            table.shape[0], len(tokens),
        )
        table = table[: len(tokens)]
    output_dir.mkdir(parents=True, exist_ok=True)
    write_embeddings(output_dir / "embedding.txt", tokens, table)
    (output_dir / "vocab.txt").write_text("\n".join(tokens) + "\n", encoding="utf-8")
    return len(tokens), int(table.shape[1])


def extract_counts(tokenizer, corpus: Path, path: Path) -> Counter:
    """Wordpiece-tokenize the corpus line by line and write per-token counts."""
    counts: Counter = Counter()
    with corpus.open(encoding="utf-8") as fh:
        for line in fh:
            counts.update(tokenizer.tokenize(line))
    if not counts:
        logger.warning("corpus %s produced no tokens; writing an empty counts file", corpus)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        for token, n in sorted(counts.items(), key=lambda kv: (-kv[1], kv[0])):
            fh.write(f"{token} {n}\n")
    return counts


def pretokenize_sts(tokenizer, spec: StsSpec, output_dir: Path) -> int:
    """Write sts_a.txt / sts_b.txt / sts_scores.txt, one tokenized sentence
    (or raw score) per line, aligned across the three files."""
    sep = DELIMITERS[spec.delimiter]
    a_idx, b_idx, s_idx = spec.columns
    need = max(spec.columns) + 1
    lines_a: list[str] = []
    lines_b: list[str] = []
    scores: list[str] = []
    with spec.path.open(encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            if lineno == 1 and spec.header:
                continue
            if not raw.strip():
                continue
            fields = raw.rstrip("\n").split(sep)
            if len(fields) < need:
                raise ValueError(
                    f"{spec.path}: line {lineno}: expected at least {need} fields, got {len(fields)}"
                )
            score = fields[s_idx].strip()
            try:
                float(score)
            except ValueError:
                raise ValueError(
                    f"{spec.path}: line {lineno}: unparseable score {score!r}"
                ) from None
            tokenized = []
            for idx in (a_idx, b_idx):
                pieces = tokenizer.tokenize(fields[idx])
                if not pieces:
                    raise ValueError(
                        f"{spec.path}: line {lineno}: sentence tokenized to nothing: "
                        f"{fields[idx]!r}"
                    )
                tokenized.append(" ".join(pieces))
            lines_a.append(tokenized[0])
            lines_b.append(tokenized[1])
            scores.append(score)
    if not scores:
        raise ValueError(f"{spec.path}: no sentence pairs found")
    for name, lines in (("sts_a.txt", lines_a), ("sts_b.txt", lines_b), ("sts_scores.txt", scores)):
        (output_dir / name).write_text("\n".join(lines) + "\n", encoding="utf-8")
    return len(scores)


def run(config: ExtractionConfig) -> dict:
    """Run all requested extractions; returns the metadata written to
    extraction.json."""
    from transformers import AutoTokenizer

    n, dim = extract_embeddings(config.model, config.output_dir)
    outputs = ["embedding.txt", "vocab.txt"]
    meta: dict = {"model": config.model, "vocab_size": n, "dim": dim}
    if config.corpus is not None:
        tokenizer = AutoTokenizer.from_pretrained(config.model)
        counts = extract_counts(tokenizer, config.corpus, config.output_dir / "counts.txt")
        meta["corpus_tokens"] = int(sum(counts.values()))
        outputs.append("counts.txt")
    if config.sts is not None:
        tokenizer = AutoTokenizer.from_pretrained(config.model)
        meta["sts_pairs"] = pretokenize_sts(tokenizer, config.sts, config.output_dir)
        outputs += ["sts_a.txt", "sts_b.txt", "sts_scores.txt"]
    meta["outputs"] = outputs
    (config.output_dir / "extraction.json").write_text(
        json.dumps(meta, indent=2) + "\n", encoding="utf-8"
    )
    return meta


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="extract-embeddings",
        description="Dump a checkpoint's input embedding table to plain-text interchange files.",
    )
    parser.add_argument("--model", required=True,
                        help="checkpoint name or local directory (e.g. bert-base-uncased)")
    parser.add_argument("--output-dir", required=True, type=Path,
                        help="directory for embedding.txt, vocab.txt, and optional outputs")
    parser.add_argument("--corpus", type=Path, default=None,
                        help="text file to wordpiece-tokenize into counts.txt")
    parser.add_argument("--sts", type=Path, default=None,
                        help="sentence-pair file to pre-tokenize into sts_a/sts_b/sts_scores")
    parser.add_argument("--sts-delimiter", default="tab", choices=sorted(DELIMITERS),
                        help="field separator of the --sts file (default: tab)")
    parser.add_argument("--sts-header", action="store_true",
                        help="skip the first line of the --sts file")
    parser.add_argument("--sts-columns", default="0,1,2",
                        help="comma-separated sentence-a,sentence-b,score column indices (default: 0,1,2)")
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        columns = tuple(int(c) for c in args.sts_columns.split(","))
        sts = None
        if args.sts is not None:
            sts = StsSpec(args.sts, args.sts_delimiter, args.sts_header, columns)
        config = ExtractionConfig(args.model, args.output_dir, args.corpus, sts)
        meta = run(config)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {', '.join(meta['outputs'])} to {config.output_dir} "
          f"({meta['vocab_size']} x {meta['dim']})")
    return 0


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
