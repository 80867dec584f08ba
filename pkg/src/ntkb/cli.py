"""Command-line interface: train, evaluate, score, and self-check.

Subcommands:

    train       fit a model on three split files, write a checkpoint
    eval-rank   mean rank and recall@K of a checkpoint on a test split
    eval-class  threshold classification accuracy (dev fit, test eval)
    score       plausibility of one triple, optionally with a verdict
    gradcheck   finite-difference validation of the analytic gradients

Exit codes: 0 success, 1 data or numeric error, 2 usage error.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .checkpoint import (
    load_checkpoint,
    load_thresholds,
    save_checkpoint,
    save_thresholds,
)
from .embeddings import compose_entity_vector, init_entity_embeddings, load_word_vectors
from .errors import ConfigError, NtkbError, VocabularyError
from .evaluation import (
    classify,
    evaluate_ranking,
    fit_thresholds,
    generate_negatives,
)
from .gradcheck import TOLERANCE, run_suite
from .kb import kb_with_vocabulary, load_knowledge_base, load_split
from .models import MODEL_KINDS
from .training import TrainingConfig, train, write_metrics


def _add_train(sub):
    p = sub.add_parser("train", help="fit a model and write a checkpoint")
    p.add_argument("--train", required=True, metavar="PATH")
    p.add_argument("--dev", required=True, metavar="PATH")
    p.add_argument("--test", required=True, metavar="PATH")
    p.add_argument("--model", default="ntn", choices=MODEL_KINDS)
    p.add_argument("--dim", type=int, default=100)
    p.add_argument("--slices", type=int, default=4)
    p.add_argument("--corruptions", type=int, default=10)
    p.add_argument("--epochs", type=int, default=100)
    p.add_argument("--batch", type=int, default=1000)
    p.add_argument("--l2", type=float, default=1e-4)
    p.add_argument("--init", default="random", choices=("random", "word-average"))
    p.add_argument("--vectors", metavar="PATH")
    p.add_argument("--corrupt-side", default="right", choices=("right", "left", "both"))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--optimizer", default="lbfgs", choices=("lbfgs", "sgd"))
    p.add_argument("--sgd-step", type=float, default=0.01)
    p.add_argument("--history", type=int, default=5)
    p.add_argument("--inner-iters", type=int, default=10)
    p.add_argument("--max-step", type=float, default=0.5,
                   help="search-direction norm cap; 0 disables")
    p.add_argument("--share-u", action="store_true")
    p.add_argument("--freeze-corruptions", action="store_true")
    p.add_argument("--out", required=True, metavar="PATH")
    p.add_argument("--metrics-out", metavar="PATH")
    p.set_defaults(func=cmd_train, parser=p)


def cmd_train(args) -> int:
    if args.init == "word-average" and not args.vectors:
        args.parser.error("--init word-average requires --vectors")
    kb = load_knowledge_base(args.train, args.dev, args.test)
    config = TrainingConfig(
        model=args.model,
        dim=args.dim,
        slices=args.slices,
        corruptions=args.corruptions,
        l2=args.l2,
        batch_size=args.batch,
        epochs=args.epochs,
        lbfgs_history=args.history,
        lbfgs_inner_iters=args.inner_iters,
        lbfgs_max_step=args.max_step if args.max_step > 0 else None,
        corrupt_side=args.corrupt_side,
        seed=args.seed,
        optimizer=args.optimizer,
        sgd_step=args.sgd_step,
        share_u=args.share_u,
        freeze_corruptions=args.freeze_corruptions,
    )
    table = load_word_vectors(args.vectors) if args.init == "word-average" else None
    embeddings = init_entity_embeddings(
        kb, mode=args.init, table=table, seed=args.seed, dim=args.dim
    )
    result = train(kb, config, embeddings)
    save_checkpoint(args.out, result.layout, result.x, kb.entity_names, kb.relation_names)
    if args.metrics_out:
        write_metrics(args.metrics_out, result.metrics)
    sys.stdout.write(f"dev_accuracy\t{result.best_dev_accuracy:.6g}\n")
    return 0


def _add_eval_rank(sub):
    p = sub.add_parser("eval-rank", help="ranking metrics of a checkpoint")
    p.add_argument("--checkpoint", required=True, metavar="PATH")
    p.add_argument("--test", required=True, metavar="PATH")
    p.add_argument("--k", default="100", metavar="INT[,INT...]")
    p.set_defaults(func=cmd_eval_rank, parser=p)


def cmd_eval_rank(args) -> int:
    ckpt = load_checkpoint(args.checkpoint)
    kb = kb_with_vocabulary(
        ckpt.entity_names, ckpt.relation_names, test=load_split(args.test)
    )
    try:
        ks = [int(v) for v in args.k.split(",") if v]
    except ValueError:
        args.parser.error(f"bad --k list {args.k!r}")
    if not ks or min(ks) < 1:
        args.parser.error("--k values must be positive integers")
    report = evaluate_ranking(ckpt.params, kb.test, ks)
    sys.stdout.write(report.to_text())
    return 0


def _add_eval_class(sub):
    p = sub.add_parser("eval-class", help="threshold classification accuracy")
    p.add_argument("--checkpoint", required=True, metavar="PATH")
    p.add_argument("--dev", required=True, metavar="PATH")
    p.add_argument("--test", required=True, metavar="PATH")
    p.add_argument("--neg-seed", type=int, default=0)
    p.add_argument("--thresholds-out", metavar="PATH")
    p.set_defaults(func=cmd_eval_class, parser=p)


def cmd_eval_class(args) -> int:
    ckpt = load_checkpoint(args.checkpoint)
    kb = kb_with_vocabulary(
        ckpt.entity_names,
        ckpt.relation_names,
        dev=load_split(args.dev),
        test=load_split(args.test),
    )
    params = ckpt.params
    dev_neg = generate_negatives(kb, kb.dev, seed=[args.neg_seed, 0])
    test_neg = generate_negatives(kb, kb.test, seed=[args.neg_seed, 1])
    table = fit_thresholds(params, kb.dev, dev_neg)
    report = classify(params, table, kb.test, test_neg)
    sys.stdout.write(report.to_text(kb.relation_names))
    if args.thresholds_out:
        save_thresholds(args.thresholds_out, kb.relation_names, table)
    return 0


def _add_score(sub):
    p = sub.add_parser("score", help="plausibility of a single triple")
    p.add_argument("--checkpoint", required=True, metavar="PATH")
    p.add_argument("--left", required=True, metavar="NAME")
    p.add_argument("--relation", required=True, metavar="NAME")
    p.add_argument("--right", required=True, metavar="NAME")
    p.add_argument("--vectors", metavar="PATH", help="compose unknown entities")
    p.add_argument("--thresholds", metavar="PATH", help="sidecar for a verdict")
    p.set_defaults(func=cmd_score, parser=p)


def _entity_vector(ckpt, params, name, vectors_path, slot):
    index = {n: i for i, n in enumerate(ckpt.entity_names)}
    if name in index:
        return params.embeddings[index[name]]
    if vectors_path is None:
        raise VocabularyError(
            f"unknown entity '{name}' (supply --vectors to compose it from words)"
        )
    table = load_word_vectors(vectors_path)
    if table.dimension != ckpt.layout.dim:
        raise ConfigError(
            f"word vectors have dimension {table.dimension}, model needs {ckpt.layout.dim}"
        )
    return compose_entity_vector(name, table, seed=0, slot=slot)


def cmd_score(args) -> int:
    ckpt = load_checkpoint(args.checkpoint)
    params = ckpt.params
    relation_index = {n: i for i, n in enumerate(ckpt.relation_names)}
    if args.relation not in relation_index:
        raise VocabularyError(f"unknown relation '{args.relation}'")
    rel = relation_index[args.relation]
    e1 = _entity_vector(ckpt, params, args.left, args.vectors, slot=0)
    e2 = _entity_vector(ckpt, params, args.right, args.vectors, slot=1)
    p = params.plausibility(rel, e1, e2)
    sys.stdout.write(f"plausibility\t{p:.6g}\n")
    if args.thresholds:
        table = load_thresholds(args.thresholds, ckpt.relation_names)
        verdict = "true" if p >= table.thresholds[rel] else "false"
        sys.stdout.write(f"verdict\t{verdict}\n")
    return 0


def _add_gradcheck(sub):
    p = sub.add_parser("gradcheck", help="finite-difference gradient check")
    p.add_argument("--model", default="ntn", choices=MODEL_KINDS)
    p.add_argument("--dim", type=int, default=None)
    p.add_argument("--slices", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--self-corrupt", action="store_true", help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_gradcheck, parser=p)


def cmd_gradcheck(args) -> int:
    hook = (lambda g: g + 1e-3) if args.self_corrupt else None
    report = run_suite(
        args.model,
        dim=args.dim,
        slices=args.slices,
        trials=args.trials,
        seed=args.seed,
        corrupt_hook=hook,
    )
    sys.stdout.write(f"max_rel_err\t{report.max_rel_error:.6e}\n")
    if not report.passed:
        trial, coordinate, err = report.failures[0]
        sys.stderr.write(
            f"gradient mismatch at {coordinate} (trial {trial}): "
            f"relative error {err:.3e} > {TOLERANCE:.0e}\n"
        )
        return 1
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ntkb", description="knowledge-base completion toolkit"
    )
    sub = parser.add_subparsers(dest="command", required=True)
    _add_train(sub)
    _add_eval_rank(sub)
    _add_eval_class(sub)
    _add_score(sub)
    _add_gradcheck(sub)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except NtkbError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
