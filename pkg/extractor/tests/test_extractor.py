"""Extractor tests against a locally constructed tiny checkpoint, plus a
real-checkpoint contract test that skips when the hub is unreachable."""

import json
from collections import Counter
from pathlib import Path

import numpy as np
import pytest

from extractor import (
    StsSpec,
    extract_counts,
    extract_embeddings,
    main,
    pretokenize_sts,
    vocab_in_index_order,
)

VOCAB = [
    "[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]",
    "the", "cat", "##s", "a", "man", "is", "sing", "##ing", ".",
]


@pytest.fixture(scope="session")
def tiny_checkpoint(tmp_path_factory):
    torch = pytest.importorskip("torch")
    from transformers import BertConfig, BertModel, BertTokenizer

    path = tmp_path_factory.mktemp("tiny-bert")
    (path / "vocab.txt").write_text("\n".join(VOCAB) + "\n", encoding="utf-8")
    torch.manual_seed(0)
    config = BertConfig(
        vocab_size=len(VOCAB),
        hidden_size=8,
        num_hidden_layers=1,
        num_attention_heads=2,
        intermediate_size=16,
        max_position_embeddings=32,
    )
    BertModel(config).save_pretrained(path)
    BertTokenizer(str(path / "vocab.txt")).save_pretrained(path)
    return path


@pytest.fixture(scope="session")
def tokenizer(tiny_checkpoint):
    from transformers import AutoTokenizer

    return AutoTokenizer.from_pretrained(tiny_checkpoint)


def read_dump(path: Path):
    lines = path.read_text(encoding="utf-8").splitlines()
    n, dim = (int(x) for x in lines[0].split())
    tokens, rows = [], []
    for line in lines[1:]:
        parts = line.split(" ")
        tokens.append(parts[0])
        rows.append([float(x) for x in parts[1:]])
    arr = np.array(rows)
    assert arr.shape == (n, dim)
    return tokens, arr


class StubTokenizer:
    def __init__(self, vocab):
        self._vocab = vocab

    def get_vocab(self):
        return dict(self._vocab)


def test_dump_matches_table(tiny_checkpoint, tmp_path):
    from transformers import AutoModel

    n, dim = extract_embeddings(str(tiny_checkpoint), tmp_path)
    assert (n, dim) == (len(VOCAB), 8)
    tokens, arr = read_dump(tmp_path / "embedding.txt")
    assert tokens == VOCAB
    assert tokens[0] == "[PAD]"
    weight = AutoModel.from_pretrained(tiny_checkpoint).get_input_embeddings()
    weight = weight.weight.detach().numpy()
    # Nine significant digits round-trip float32 exactly.
    assert np.array_equal(arr.astype(np.float32), weight)


def test_vocab_listing_matches_dump_order(tiny_checkpoint, tmp_path):
    extract_embeddings(str(tiny_checkpoint), tmp_path)
    listed = (tmp_path / "vocab.txt").read_text(encoding="utf-8").splitlines()
    tokens, _ = read_dump(tmp_path / "embedding.txt")
    assert listed == tokens


def test_vocab_index_order_validation():
    assert vocab_in_index_order(StubTokenizer({"b": 1, "a": 0})) == ["a", "b"]
    with pytest.raises(ValueError, match="contains whitespace"):
        vocab_in_index_order(StubTokenizer({"ok": 0, "a b": 1}))
    with pytest.raises(ValueError, match="duplicate vocabulary id"):
        vocab_in_index_order(StubTokenizer({"a": 0, "b": 0}))
    with pytest.raises(ValueError, match="outside"):
        vocab_in_index_order(StubTokenizer({"a": 0, "b": 5}))


def test_counts_match_retokenization(tokenizer, tmp_path):
    corpus = tmp_path / "corpus.txt"
    corpus.write_text("The the cats\n\nA man is singing.\n", encoding="utf-8")
    counts = extract_counts(tokenizer, corpus, tmp_path / "counts.txt")
    assert counts["the"] == 2
    assert counts["cat"] == 1 and counts["##s"] == 1
    assert counts["sing"] == 1 and counts["##ing"] == 1
    expected = Counter()
    for line in corpus.read_text(encoding="utf-8").splitlines():
        expected.update(tokenizer.tokenize(line))
    assert counts == expected
    reloaded = Counter()
    for line in (tmp_path / "counts.txt").read_text(encoding="utf-8").splitlines():
        token, n = line.split(" ")
        reloaded[token] = int(n)
    assert reloaded == counts
    assert sum(counts.values()) == sum(expected.values())


def test_counts_empty_corpus_warns(tokenizer, tmp_path, caplog):
    corpus = tmp_path / "empty.txt"
    corpus.write_text("", encoding="utf-8")
    with caplog.at_level("WARNING", logger="extractor"):
        counts = extract_counts(tokenizer, corpus, tmp_path / "counts.txt")
    assert counts == Counter()
    assert (tmp_path / "counts.txt").read_text(encoding="utf-8") == ""
    assert any("no tokens" in rec.message for rec in caplog.records)


def test_pretokenize_alignment_and_determinism(tokenizer, tmp_path):
    sts = tmp_path / "sts.tsv"
    sts.write_text(
        "A man is singing.\tThe cats\t3.8\n"
        "\n"
        "the cat\ta man\t1.25\n",
        encoding="utf-8",
    )
    n = pretokenize_sts(tokenizer, StsSpec(sts), tmp_path)
    assert n == 2
    lines_a = (tmp_path / "sts_a.txt").read_text(encoding="utf-8").splitlines()
    lines_b = (tmp_path / "sts_b.txt").read_text(encoding="utf-8").splitlines()
    scores = (tmp_path / "sts_scores.txt").read_text(encoding="utf-8").splitlines()
    assert len(lines_a) == len(lines_b) == len(scores) == 2
    assert lines_a[0] == "a man is sing ##ing ."
    assert lines_b[0] == "the cat ##s"
    assert scores == ["3.8", "1.25"]
    before = [(tmp_path / f).read_bytes() for f in ("sts_a.txt", "sts_b.txt", "sts_scores.txt")]
    pretokenize_sts(tokenizer, StsSpec(sts), tmp_path)
    after = [(tmp_path / f).read_bytes() for f in ("sts_a.txt", "sts_b.txt", "sts_scores.txt")]
    assert before == after


def test_pretokenize_column_map_and_header(tokenizer, tmp_path):
    sts = tmp_path / "sts.csv"
    sts.write_text("score,sa,sb\n4.0,the cat,a man\n", encoding="utf-8")
    n = pretokenize_sts(
        tokenizer, StsSpec(sts, delimiter="comma", header=True, columns=(1, 2, 0)), tmp_path
    )
    assert n == 1
    assert (tmp_path / "sts_a.txt").read_text(encoding="utf-8") == "the cat\n"
    assert (tmp_path / "sts_scores.txt").read_text(encoding="utf-8") == "4.0\n"


def test_pretokenize_errors(tokenizer, tmp_path):
    short = tmp_path / "short.tsv"
    short.write_text("only two\tfields\n", encoding="utf-8")
    with pytest.raises(ValueError, match="line 1: expected at least 3 fields"):
        pretokenize_sts(tokenizer, StsSpec(short), tmp_path)

    bad_score = tmp_path / "badscore.tsv"
    bad_score.write_text("the cat\ta man\thigh\n", encoding="utf-8")
    with pytest.raises(ValueError, match="unparseable score 'high'"):
        pretokenize_sts(tokenizer, StsSpec(bad_score), tmp_path)

    empty_sentence = tmp_path / "emptysent.tsv"
    empty_sentence.write_text("the cat\t\t2.0\n", encoding="utf-8")
    with pytest.raises(ValueError, match="tokenized to nothing"):
        pretokenize_sts(tokenizer, StsSpec(empty_sentence), tmp_path)

    no_rows = tmp_path / "norows.tsv"
    no_rows.write_text("\n", encoding="utf-8")
    with pytest.raises(ValueError, match="no sentence pairs"):
        pretokenize_sts(tokenizer, StsSpec(no_rows), tmp_path)

    with pytest.raises(ValueError, match="unknown delimiter"):
        StsSpec(short, delimiter="pipe")


def test_cli_end_to_end(tiny_checkpoint, tmp_path, capsys):
    corpus = tmp_path / "corpus.txt"
    corpus.write_text("the cat sings\n", encoding="utf-8")
    sts = tmp_path / "sts.tsv"
    sts.write_text("the cat\ta man\t2.5\n", encoding="utf-8")
    out = tmp_path / "dump"
    rc = main([
        "--model", str(tiny_checkpoint),
        "--output-dir", str(out),
        "--corpus", str(corpus),
        "--sts", str(sts),
    ])
    assert rc == 0
    for name in ("embedding.txt", "vocab.txt", "counts.txt",
                 "sts_a.txt", "sts_b.txt", "sts_scores.txt", "extraction.json"):
        assert (out / name).exists()
    meta = json.loads((out / "extraction.json").read_text(encoding="utf-8"))
    assert meta["vocab_size"] == len(VOCAB)
    assert meta["dim"] == 8
    assert meta["sts_pairs"] == 1
    assert meta["corpus_tokens"] >= 3
    assert "embedding.txt" in capsys.readouterr().out


def test_cli_error_exit(tiny_checkpoint, tmp_path, capsys):
    rc = main([
        "--model", str(tiny_checkpoint),
        "--output-dir", str(tmp_path / "dump"),
        "--corpus", str(tmp_path / "missing.txt"),
    ])
    assert rc == 1
    assert "error:" in capsys.readouterr().err


@pytest.mark.parametrize("name,dim", [("bert-base-uncased", 768), ("bert-large-uncased", 1024)])
def test_real_checkpoint_contract(name, dim, tmp_path):
    from transformers import AutoTokenizer

    try:
        AutoTokenizer.from_pretrained(name)
    except Exception as exc:
        pytest.skip(f"{name} not reachable: {type(exc).__name__}")
    n, e = extract_embeddings(name, tmp_path)
    assert (n, e) == (30522, dim)
    with (tmp_path / "embedding.txt").open(encoding="utf-8") as fh:
        assert fh.readline().rstrip("\n") == f"30522 {dim}"
        assert fh.readline().split(" ")[0] == "[PAD]"
