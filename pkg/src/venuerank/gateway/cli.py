"""Command-line interface.

Exit codes: 0 success, 1 usage error, 2 runtime error. Machine-readable
output goes to stdout as JSON where applicable.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .. import corpus as corpus_mod
from ..evalharness import ablation_run, emit_report, evaluate_model
from ..recmodel import build_model, default_config, load_model, model_id_for, save_model, train
from ..recmodel.config import MODEL_KINDS, TrainSpec
from ..recmodel.gradsuite import check_variant
from ..recmodel.pipeline import pipeline_for
from ..textprep import CANONICAL_COMBOS, FeatureCombo, build_vocab
from .service import recommend_payload, serve

GRAD_TOLERANCE = 1e-4


class _Parser(argparse.ArgumentParser):
    """argparse that exits 1 (not 2) on usage errors."""

    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(1)


def _ratios(text: str) -> tuple[float, float, float]:
    parts = [float(x) for x in text.split(",")]
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("ratios must be three comma-separated fractions")
    return tuple(parts)  # type: ignore[return-value]


def build_parser() -> _Parser:
    parser = _Parser(prog="venuerank", description="Venue recommendation engine")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("synth-data", help="generate a planted-signal corpus")
    p.add_argument("--venues", type=int, required=True)
    p.add_argument("--docs-per-venue", type=int, required=True)
    p.add_argument("--vocab-size", type=int, default=0)
    p.add_argument("--signal", type=float, default=0.9)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-corpus", required=True)
    p.add_argument("--out-venues", required=True)
    p.set_defaults(fn=_cmd_synth)

    p = sub.add_parser("train", help="train a model and write a checkpoint")
    p.add_argument("--corpus", required=True)
    p.add_argument("--venues", required=True)
    p.add_argument("--variant", required=True, choices=sorted(MODEL_KINDS))
    p.add_argument("--combo", default="TAK", choices=CANONICAL_COMBOS)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--ratios", type=_ratios, default=(0.6, 0.2, 0.2))
    p.add_argument("--stratify", action="store_true")
    p.add_argument("--epochs", type=int, default=30)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--learning-rate", type=float, default=1e-3)
    p.add_argument("--optimizer", choices=("adam", "sgd"), default="adam")
    p.add_argument("--patience", type=int, default=5)
    p.add_argument("--embed-dim", type=int, default=None)
    p.add_argument("--units", type=int, default=None)
    p.add_argument("--filters", type=int, default=None)
    p.add_argument("--min-count", type=int, default=1)
    p.add_argument("--cased", action="store_true",
                   help="marker pipeline keeps letter case")
    p.set_defaults(fn=_cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint on a labeled corpus")
    p.add_argument("--model", required=True)
    p.add_argument("--corpus", required=True)
    p.set_defaults(fn=_cmd_eval)

    p = sub.add_parser("ablate", help="run the feature-combination ablation matrix")
    p.add_argument("--corpus", required=True)
    p.add_argument("--venues", required=True)
    p.add_argument("--kinds", default="baseline,gru,multikernel")
    p.add_argument("--combos", default="all", help="'all' or comma-separated rows")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=("markdown", "csv", "json"), default="markdown")
    p.add_argument("--metric", choices=("hit_rate", "macro"), default="hit_rate")
    p.add_argument("--cache-dir", default=None)
    p.add_argument("--ratios", type=_ratios, default=(0.6, 0.2, 0.2))
    p.add_argument("--stratify", action="store_true")
    p.add_argument("--epochs", type=int, default=10)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--learning-rate", type=float, default=1e-3)
    p.add_argument("--embed-dim", type=int, default=32)
    p.add_argument("--units", type=int, default=32)
    p.add_argument("--filters", type=int, default=64)
    p.set_defaults(fn=_cmd_ablate)

    p = sub.add_parser("recommend", help="rank venues for a manuscript")
    p.add_argument("--model", required=True)
    p.add_argument("--title", default="")
    p.add_argument("--abstract", default="")
    p.add_argument("--keywords", default="", help="semicolon-separated list")
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--json", action="store_true", dest="as_json")
    p.set_defaults(fn=_cmd_recommend)

    p = sub.add_parser("grad-check", help="verify backward passes by finite differences")
    p.add_argument("--variant", required=True, choices=sorted(MODEL_KINDS))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epsilon", type=float, default=1e-5)
    p.set_defaults(fn=_cmd_grad_check)

    p = sub.add_parser("serve", help="run the HTTP recommendation service")
    p.add_argument("--model", default=None, help="checkpoint path (or $VENUERANK_MODEL)")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8765)
    p.set_defaults(fn=_cmd_serve)

    return parser


def _cmd_synth(args) -> int:
    docs, venues = corpus_mod.synth_corpus(
        args.venues, args.docs_per_venue, vocab_size=args.vocab_size,
        signal_strength=args.signal, seed=args.seed)
    corpus_mod.write_corpus(docs, args.out_corpus)
    corpus_mod.write_venues(venues, args.out_venues)
    print(json.dumps({
        "documents": len(docs),
        "venues": len(venues),
        "corpus": str(args.out_corpus),
        "venues_file": str(args.out_venues),
    }))
    return 0


def _load_split(args):
    docs = corpus_mod.load_corpus(args.corpus)
    venues = corpus_mod.load_venues(args.venues)
    corpus_mod.validate_labels(docs, venues)
    split = corpus_mod.split_corpus(docs, args.ratios, seed=args.seed,
                                    stratify=args.stratify)
    return split, venues


def _cmd_train(args) -> int:
    split, venues = _load_split(args)
    config = default_config(
        args.variant, args.combo, len(venues),
        embed_dim=args.embed_dim, units=args.units, filters=args.filters,
        train=TrainSpec(optimizer=args.optimizer, learning_rate=args.learning_rate,
                        batch_size=args.batch_size, epochs=args.epochs,
                        patience=args.patience, seed=args.seed),
        min_count=args.min_count, cased=args.cased)
    pipe = pipeline_for(config)
    vocab = build_vocab((pipe.doc_text(d) for d in split.train), min_count=config.min_count)
    model = build_model(config, vocab, venues, seed=args.seed)
    history = train(model, split)
    save_model(model, args.out)
    print(json.dumps({"checkpoint": str(args.out), "history": history}))
    return 0


def _cmd_eval(args) -> int:
    model = load_model(args.model)
    docs = corpus_mod.load_corpus(args.corpus)
    cell = evaluate_model(model, docs)
    print(json.dumps({
        "model": str(args.model),
        "documents": len(docs),
        "hit_rate": {str(k): v for k, v in cell.hit_rate.items()},
        "macro": {str(k): v for k, v in cell.macro.items()},
    }))
    return 0


def _cmd_ablate(args) -> int:
    split, venues = _load_split(args)
    kinds = [k.strip() for k in args.kinds.split(",") if k.strip()]
    combos = list(CANONICAL_COMBOS) if args.combos == "all" else \
        [c.strip() for c in args.combos.split(",") if c.strip()]
    base = {
        "embed_dim": args.embed_dim,
        "units": args.units,
        "filters": args.filters,
        "train": TrainSpec(learning_rate=args.learning_rate, batch_size=args.batch_size,
                           epochs=args.epochs, seed=args.seed),
    }
    report = ablation_run(split, venues, kinds, combos, base_config=base,
                          seed=args.seed, cache_dir=args.cache_dir)
    emit_report(report, args.out, format=args.format, metric=args.metric)
    failed = [f"{c.kind}/{c.combo}" for c in report.cells if c.error]
    print(json.dumps({"out": str(args.out), "cells": len(report.cells), "failed": failed}))
    return 0


def _cmd_recommend(args) -> int:
    model = load_model(args.model)
    model_id = model_id_for(args.model)
    keywords = [k.strip() for k in args.keywords.split(";") if k.strip()]
    payload = recommend_payload(model, model_id, args.title, args.abstract,
                                keywords, min(args.k, model.config.n_venues))
    if args.as_json:
        print(json.dumps(payload))
    else:
        for rank, entry in enumerate(payload["ranked"], start=1):
            scope = f"\t{entry['scope_score']:+.4f}" if "scope_score" in entry else ""
            print(f"{rank}\t{entry['venue_id']}\t{entry['probability']:.6f}"
                  f"{scope}\t{entry['name']}")
    return 0


def _cmd_grad_check(args) -> int:
    report = check_variant(args.variant, seed=args.seed, epsilon=args.epsilon)
    print(json.dumps({"variant": args.variant, **report.to_dict(),
                      "tolerance": GRAD_TOLERANCE,
                      "passed": report.passes(GRAD_TOLERANCE)}))
    return 0 if report.passes(GRAD_TOLERANCE) else 2


def _cmd_serve(args) -> int:
    serve(args.model, args.host, args.port)
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 1
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.fn(args)
    except KeyboardInterrupt:
        return 130
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
