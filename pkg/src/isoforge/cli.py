"""Command line interface: diagnose, fit, apply, eval, and sweep."""

from __future__ import annotations

import argparse
import contextlib
import logging
import os
import sys
from pathlib import Path

from .datasets import Manifest, load_manifest
from .diagnostics import diagnose, write_projection_csv, write_report_json, write_spectrum_csv
from .embeddings import EmbeddingMatrix, load_counts, load_embeddings, save_embeddings
from .evaluation import (
    CANDIDATE_POLICY,
    ResultRow,
    as_row,
    eval_analogy,
    eval_similarity,
    eval_sts,
    sweep,
    write_results_csv,
)
from .spectral import compute_directions
from .training import TrainConfig, fit, loss, split_pairs, write_fit_log
from .transforms import abtt, conceptor_negation, load_model, save_model, weighted_removal

logger = logging.getLogger(__name__)


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--embedding", required=True, help="embedding text file")
    parser.add_argument("--output-dir", default=".", help="directory for output files")
    parser.add_argument("--seed", type=int, default=0, help="random seed")
    parser.add_argument(
        "--threads",
        type=int,
        default=None,
        help="BLAS thread cap (default: ISOFORGE_THREADS env var, else library default)",
    )


def _add_train_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--learning-rate", type=float, default=0.05)
    parser.add_argument("--epochs", type=int, default=500)
    parser.add_argument("--batch", type=int, default=None, help="minibatch size (default: full batch)")
    parser.add_argument("--init-alpha", type=float, default=1.0)
    parser.add_argument("--train-fraction", type=float, default=0.7)
    parser.add_argument("--center", action="store_true", help="subtract the mean before the SVD")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="isoforge",
        description="Measure and remove dominant directions from static embeddings.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("diagnose", help="anisotropy report, 2-D projection, singular spectrum")
    _add_common(p)
    p.add_argument("--counts", default=None, help="token count file for frequency correlations")
    p.add_argument("--center", action="store_true", help="subtract the mean before the SVD")
    p.set_defaults(func=cmd_diagnose)

    p = sub.add_parser("fit", help="train per-direction removal weights on similarity pairs")
    _add_common(p)
    p.add_argument("--manifest", required=True, help="dataset manifest JSON")
    p.add_argument("--d", type=int, required=True, help="number of top directions")
    p.add_argument("--model", default=None, help="model output path (default <output-dir>/model.txt)")
    _add_train_flags(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("apply", help="write a transformed copy of the embedding")
    _add_common(p)
    p.add_argument("--method", choices=("wr", "abtt", "cn"), default="wr")
    p.add_argument("--model", default=None, help="fitted model file (wr)")
    p.add_argument("--d", type=int, default=None, help="directions to remove (abtt)")
    p.add_argument("--remove-mean", action="store_true", help="also subtract the mean (abtt)")
    p.add_argument("--aperture", type=float, default=2.0, help="conceptor aperture (cn)")
    p.add_argument(
        "--ignore-fingerprint",
        action="store_true",
        help="skip the model/embedding fingerprint check",
    )
    p.add_argument("--output-name", default="processed_embedding.txt")
    p.set_defaults(func=cmd_apply)

    p = sub.add_parser("eval", help="score one method on the manifest tasks")
    _add_common(p)
    p.add_argument("--manifest", required=True)
    p.add_argument("--method", choices=("orig", "wr", "abtt", "cn"), default="orig")
    p.add_argument("--model", default=None, help="fitted model file (wr)")
    p.add_argument("--d", type=int, default=None, help="directions to remove (abtt)")
    p.add_argument("--remove-mean", action="store_true")
    p.add_argument("--aperture", type=float, default=2.0)
    p.add_argument("--ignore-fingerprint", action="store_true")
    p.add_argument("--tasks", default=None, help="comma list: similarity,analogy,sts (default: all in manifest)")
    p.add_argument("--tokenization-mode", choices=("simple", "pretokenized"), default="simple")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", help="compare methods across removal depths")
    _add_common(p)
    p.add_argument("--manifest", required=True)
    p.add_argument("--d", required=True, help="comma list of depths, e.g. 1,5,20")
    p.add_argument("--methods", default="wr,abtt", help="comma list from orig,wr,abtt,cn")
    p.add_argument("--tasks", default=None, help="comma list: similarity,analogy,sts (default: all in manifest)")
    p.add_argument("--tokenization-mode", choices=("simple", "pretokenized"), default="simple")
    p.add_argument("--remove-mean", action="store_true")
    p.add_argument("--aperture", type=float, default=2.0)
    _add_train_flags(p)
    p.set_defaults(func=cmd_sweep)

    return parser


def _thread_limit(threads: int | None):
    if threads is None:
        env = os.environ.get("ISOFORGE_THREADS", "").strip()
        if env:
            threads = int(env)
    if threads is None:
        return contextlib.nullcontext()
    if threads < 1:
        raise ValueError(f"thread count must be >= 1, got {threads}")
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=threads)


def _provenance(args: argparse.Namespace, keys: list[str]) -> list[str]:
    parts = [f"{k.replace('_', '-')}={getattr(args, k)}" for k in keys if getattr(args, k) is not None]
    return [f"isoforge {args.command} " + " ".join(parts)]


def _outdir(args: argparse.Namespace) -> Path:
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_diagnose(args: argparse.Namespace) -> int:
    matrix = load_embeddings(args.embedding)
    counts = load_counts(args.counts) if args.counts else None
    report = diagnose(matrix, counts, center=args.center)
    out = _outdir(args)
    comments = _provenance(args, ["embedding", "counts", "center", "seed"])
    write_report_json(report, out / "report.json", meta={"command": comments[0]})
    write_projection_csv(report.projection_2d, out / "projection.csv", comments)
    write_spectrum_csv(report.singular_values, out / "spectrum.csv", comments)
    print(f"mean vector norm {report.mean_vector_norm:.6f}")
    print(f"average norm     {report.average_vector_norm:.6f}")
    print(f"average cosine   {report.average_cosine:.6f}")
    if report.norm_logfreq_pearson is not None:
        print(f"norm/log-count r {report.norm_logfreq_pearson:.6f}")
    if report.pc1_logfreq_pearson is not None:
        print(f"pc1/log-count r  {report.pc1_logfreq_pearson:.6f}")
    print(f"wrote {out / 'report.json'}, {out / 'projection.csv'}, {out / 'spectrum.csv'}")
    return 0


def _load_split(args: argparse.Namespace, matrix: EmbeddingMatrix, manifest: Manifest):
    pool = manifest.load_similarity_pooled()
    working = pool.restrict_to_vocab(matrix.vocab)
    if len(working) == 0:
        raise ValueError("no training pairs overlap the embedding vocabulary")
    return split_pairs(working, args.train_fraction, args.seed)


def cmd_fit(args: argparse.Namespace) -> int:
    matrix = load_embeddings(args.embedding)
    manifest = load_manifest(args.manifest)
    train, test = _load_split(args, matrix, manifest)
    directions = compute_directions(matrix, args.d, center=args.center)
    config = TrainConfig(
        d=args.d,
        learning_rate=args.learning_rate,
        epochs=args.epochs,
        batch=args.batch,
        init_alpha=args.init_alpha,
        seed=args.seed,
    )
    result = fit(train, matrix, directions, config)
    out = _outdir(args)
    model_path = Path(args.model) if args.model else out / "model.txt"
    model_path.parent.mkdir(parents=True, exist_ok=True)
    save_model(result.model, model_path)
    comments = _provenance(
        args,
        ["embedding", "manifest", "d", "learning_rate", "epochs", "batch",
         "init_alpha", "train_fraction", "center", "seed"],
    )
    write_fit_log(result.history, out / "fit_log.csv", comments)
    print(f"train pairs {len(train)}, test pairs {len(test)}")
    print(f"final train loss {result.final_loss:.6g}")
    if len(test) >= 1:
        print(f"held-out loss    {loss(test, matrix, result.model):.6g}")
    print(f"wrote {model_path}, {out / 'fit_log.csv'}")
    return 0


def _transform(args: argparse.Namespace, matrix: EmbeddingMatrix) -> tuple[EmbeddingMatrix, int]:
    """Apply the method named on the command line; returns (matrix, d label)."""
    if args.method == "orig":
        return matrix, 0
    if args.method == "wr":
        if not args.model:
            raise ValueError("--model is required for method wr")
        model = load_model(args.model)
        return weighted_removal(matrix, model, ignore_fingerprint=args.ignore_fingerprint), model.d
    if args.method == "abtt":
        if args.d is None:
            raise ValueError("--d is required for method abtt")
        return abtt(matrix, args.d, remove_mean=args.remove_mean), args.d
    if args.method == "cn":
        return conceptor_negation(matrix, args.aperture), 0
    raise ValueError(f"unknown method {args.method!r}")


def cmd_apply(args: argparse.Namespace) -> int:
    args.method = args.method or "wr"
    matrix = load_embeddings(args.embedding)
    transformed, _ = _transform(args, matrix)
    out = _outdir(args)
    path = out / args.output_name
    save_embeddings(transformed, path)
    print(f"isoforge apply method={args.method} -> {path}")
    return 0


def _tasks(args: argparse.Namespace, manifest: Manifest) -> set[str]:
    if args.tasks:
        tasks = {t.strip() for t in args.tasks.split(",") if t.strip()}
        unknown = tasks - {"similarity", "analogy", "sts"}
        if unknown:
            raise ValueError(f"unknown tasks {sorted(unknown)}")
    else:
        tasks = set()
        if manifest.similarity:
            tasks.add("similarity")
        if manifest.analogy:
            tasks.add("analogy")
        if manifest.sts:
            tasks.add("sts")
    if not tasks:
        raise ValueError("no tasks requested and the manifest defines none")
    return tasks


def cmd_eval(args: argparse.Namespace) -> int:
    matrix = load_embeddings(args.embedding)
    manifest = load_manifest(args.manifest)
    tasks = _tasks(args, manifest)
    transformed, d_label = _transform(args, matrix)

    rows: list[ResultRow] = []
    if "similarity" in tasks:
        for spec in manifest.similarity:
            pairs = spec.load().restrict_to_vocab(matrix.vocab)
            rows.append(as_row(args.method, d_label, eval_similarity(transformed, pairs, dataset=spec.name)))
    if "analogy" in tasks:
        for spec in manifest.analogy:
            result = eval_analogy(transformed, spec.load())
            for res in result.per_category:
                rows.append(as_row(args.method, d_label, res))
            for res in (result.semantic, result.syntactic, result.overall):
                if res is not None:
                    rows.append(as_row(args.method, d_label, res))
    if "sts" in tasks:
        pairs = [p for spec in manifest.sts for p in spec.load()]
        mode = args.tokenization_mode
        if manifest.sts and all(s.pretokenized for s in manifest.sts):
            mode = "pretokenized"
        for res in eval_sts(transformed, pairs, mode=mode):
            rows.append(as_row(args.method, d_label, res))

    out = _outdir(args)
    comments = _provenance(
        args, ["embedding", "manifest", "method", "model", "d", "aperture", "tokenization_mode", "seed"]
    )
    if "analogy" in tasks:
        comments.append(CANDIDATE_POLICY)
    write_results_csv(rows, out / "results.csv", comments)
    for r in rows:
        print(f"{r.method:5s} d={r.d:<4d} {r.task:10s} {r.dataset:28s} {r.metric: .4f} (coverage {r.coverage:.2f}, n={r.n})")
    print(f"wrote {out / 'results.csv'}")
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    matrix = load_embeddings(args.embedding)
    manifest = load_manifest(args.manifest)
    tasks = _tasks(args, manifest)

    d_values = [int(part) for part in args.d.split(",") if part.strip()]
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]

    train = test = None
    if "similarity" in tasks or "wr" in methods:
        train, test = _load_split(args, matrix, manifest)
    analogy_qs = None
    if "analogy" in tasks:
        analogy_qs = [q for spec in manifest.analogy for q in spec.load()]
    sts_pairs = None
    mode = args.tokenization_mode
    if "sts" in tasks:
        sts_pairs = [p for spec in manifest.sts for p in spec.load()]
        if manifest.sts and all(s.pretokenized for s in manifest.sts):
            mode = "pretokenized"

    config = TrainConfig(
        d=max(d_values) if d_values else 1,
        learning_rate=args.learning_rate,
        epochs=args.epochs,
        batch=args.batch,
        init_alpha=args.init_alpha,
        seed=args.seed,
    )
    rows = sweep(
        matrix,
        d_values,
        methods,
        similarity_train=train,
        similarity_test=test if "similarity" in tasks else None,
        analogy=analogy_qs,
        sts=sts_pairs,
        train_config=config,
        sts_mode=mode,
        aperture=args.aperture,
        remove_mean=args.remove_mean,
        center=args.center,
    )
    out = _outdir(args)
    comments = _provenance(
        args,
        ["embedding", "manifest", "d", "methods", "learning_rate", "epochs", "batch",
         "init_alpha", "train_fraction", "aperture", "seed"],
    )
    if "analogy" in tasks:
        comments.append(CANDIDATE_POLICY)
    write_results_csv(rows, out / "sweep.csv", comments)
    print(f"wrote {len(rows)} rows to {out / 'sweep.csv'}")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    try:
        with _thread_limit(args.threads):
            return args.func(args)
    except (ValueError, RuntimeError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
