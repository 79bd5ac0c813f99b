"""Accuracy@K in both readings, ablation matrices, and report emission.

Two metric readings are computed side by side:

* hit rate -- the standard top-K reading: the fraction of samples whose true
  venue appears in their top-K list.
* macro    -- per-class accuracy over (TP+TN)/(TP+TN+FP+FN) where a sample is
  predicted positive for class i iff i is in its top-K, averaged over all N
  classes with the conventional TN (actual negative, predicted negative).
"""

from __future__ import annotations

import datetime
import hashlib
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .corpus import CorpusSplit, VenueProfile
from .recmodel import VenueRankModel, config_hash, default_config, train
from .recmodel.training import encode_dataset
from .textprep import CANONICAL_COMBOS, FeatureCombo, build_vocab

log = logging.getLogger(__name__)

REPORT_SCHEMA_VERSION = 1
TOP_K_VALUES = (1, 3, 5, 10)


def hitrate_at_k(predictions: Sequence[Sequence[str]], labels: Sequence[str], k: int) -> float:
    """Fraction of samples whose label appears in its top-k ranked list."""
    if len(predictions) != len(labels):
        raise ValueError(f"{len(predictions)} prediction lists vs {len(labels)} labels")
    if len(labels) < 1:
        raise ValueError("need at least one sample")
    if k < 1:
        raise ValueError("k must be >= 1")
    for ranked in predictions:
        if len(ranked) < k:
            raise ValueError(f"a ranked list has {len(ranked)} entries, fewer than k={k}")
    hits = sum(1 for ranked, label in zip(predictions, labels) if label in ranked[:k])
    return hits / len(labels)


def macro_accuracy_at_k(predictions: Sequence[Sequence[str]], labels: Sequence[str],
                        k: int, classes: Sequence[str]) -> float:
    """Per-class (TP+TN)/(TP+TN+FP+FN) at top-K, averaged over all classes."""
    if len(predictions) != len(labels):
        raise ValueError(f"{len(predictions)} prediction lists vs {len(labels)} labels")
    if len(labels) < 1 or not classes:
        raise ValueError("need at least one sample and one class")
    n = len(labels)
    topk_sets = [frozenset(ranked[:k]) for ranked in predictions]
    total = 0.0
    for cls in classes:
        correct = 0
        for label, top in zip(labels, topk_sets):
            predicted = cls in top
            actual = label == cls
            if predicted == actual:
                correct += 1  # TP or TN
        total += correct / n
    return total / len(classes)


@dataclass
class EvalCell:
    kind: str
    combo: str
    hit_rate: dict[int, float] = field(default_factory=dict)
    macro: dict[int, float] = field(default_factory=dict)
    error: str | None = None

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "combo": self.combo,
            "hit_rate": {str(k): v for k, v in self.hit_rate.items()},
            "macro": {str(k): v for k, v in self.macro.items()},
            "error": self.error,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EvalCell":
        return cls(
            kind=d["kind"],
            combo=d["combo"],
            hit_rate={int(k): v for k, v in d["hit_rate"].items()},
            macro={int(k): v for k, v in d["macro"].items()},
            error=d.get("error"),
        )


@dataclass
class EvalReport:
    corpus_id: str
    seed: int
    cells: list[EvalCell] = field(default_factory=list)
    created_at: str = ""

    def __post_init__(self) -> None:
        if not self.created_at:
            self.created_at = datetime.datetime.now(datetime.timezone.utc).isoformat()

    def cell(self, kind: str, combo: str) -> EvalCell | None:
        for c in self.cells:
            if c.kind == kind and c.combo == combo:
                return c
        return None

    def to_dict(self) -> dict:
        return {
            "schema_version": REPORT_SCHEMA_VERSION,
            "corpus_id": self.corpus_id,
            "seed": self.seed,
            "created_at": self.created_at,
            "cells": [c.to_dict() for c in self.cells],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EvalReport":
        if d.get("schema_version") != REPORT_SCHEMA_VERSION:
            raise ValueError(f"unsupported report schema {d.get('schema_version')!r}")
        return cls(
            corpus_id=d["corpus_id"],
            seed=d["seed"],
            cells=[EvalCell.from_dict(c) for c in d["cells"]],
            created_at=d["created_at"],
        )


def corpus_fingerprint(split: CorpusSplit, venues: Sequence[VenueProfile]) -> str:
    h = hashlib.sha256()
    for part in split:
        for doc in part:
            h.update(doc.id.encode())
            h.update((doc.venue_id or "").encode())
        h.update(b"|")
    for v in venues:
        h.update(v.venue_id.encode())
    return h.hexdigest()[:16]


def rankings_for(model: VenueRankModel, docs) -> tuple[list[list[str]], list[str]]:
    encoded = encode_dataset(model, docs)
    model._ensure_scope_for_inference()
    preds = [model.rank_all(e) for e in encoded]
    labels = [model.venue_ids[e.label] for e in encoded]
    return preds, labels


def evaluate_model(model: VenueRankModel, docs) -> EvalCell:
    preds, labels = rankings_for(model, docs)
    n = model.config.n_venues
    cell = EvalCell(kind="", combo=model.config.combo.code)
    for k in TOP_K_VALUES:
        kk = min(k, n)
        cell.hit_rate[k] = hitrate_at_k(preds, labels, kk)
        cell.macro[k] = macro_accuracy_at_k(preds, labels, kk, model.venue_ids)
    return cell


def _train_cell(kind: str, combo: FeatureCombo, split: CorpusSplit,
                venues: Sequence[VenueProfile], base_config: dict, seed: int) -> EvalCell:
    cfg = default_config(
        kind, combo, len(venues),
        embed_dim=base_config.get("embed_dim"),
        units=base_config.get("units"),
        filters=base_config.get("filters"),
        train=base_config.get("train"),
        min_count=base_config.get("min_count", 1),
        cased=base_config.get("cased", False),
    )
    from .recmodel import build_model
    from .recmodel.pipeline import pipeline_for

    pipe = pipeline_for(cfg)
    texts = []
    for doc in split.train:
        try:
            texts.append(pipe.doc_text(doc))
        except ValueError:
            continue
    vocab = build_vocab(texts, min_count=cfg.min_count)
    model = build_model(cfg, vocab, venues, seed=seed)
    train(model, split)
    cell = evaluate_model(model, split.test)
    cell.kind = kind
    return cell


def ablation_run(
    split: CorpusSplit,
    venues: Sequence[VenueProfile],
    kinds: Sequence[str],
    combos: Sequence[str],
    base_config: dict | None = None,
    seed: int = 0,
    cache_dir: str | Path | None = None,
) -> EvalReport:
    """Train and evaluate one model per (kind, combo) cell.

    Cells are independent; a failing cell records its error and the run
    continues. With ``cache_dir`` finished cells are persisted keyed by
    (config, corpus, seed) so interrupted matrices resume cheaply.
    """
    for combo in combos:
        if combo not in CANONICAL_COMBOS:
            raise ValueError(f"combo {combo!r} is not one of the 14 canonical rows")
    base_config = base_config or {}
    corpus_id = corpus_fingerprint(split, venues)
    report = EvalReport(corpus_id=corpus_id, seed=seed)
    cache_path = Path(cache_dir) if cache_dir else None
    if cache_path:
        cache_path.mkdir(parents=True, exist_ok=True)

    for kind in kinds:
        for combo in combos:
            cache_file = None
            if cache_path:
                cfg = default_config(kind, combo, len(venues),
                                     embed_dim=base_config.get("embed_dim"),
                                     units=base_config.get("units"),
                                     filters=base_config.get("filters"),
                                     train=base_config.get("train"),
                                     min_count=base_config.get("min_count", 1),
                                     cased=base_config.get("cased", False))
                key = f"{config_hash(cfg)}-{corpus_id}-{seed}"
                cache_file = cache_path / f"cell-{key}.json"
                if cache_file.exists():
                    report.cells.append(EvalCell.from_dict(json.loads(cache_file.read_text())))
                    log.info("cell %s/%s loaded from cache", kind, combo)
                    continue
            try:
                cell = _train_cell(kind, FeatureCombo.parse(combo), split, venues,
                                   base_config, seed)
            except Exception as exc:  # cell failures must not sink the matrix
                log.warning("cell %s/%s failed: %s", kind, combo, exc)
                cell = EvalCell(kind=kind, combo=combo, error=str(exc))
            report.cells.append(cell)
            if cache_file and cell.error is None:
                cache_file.write_text(json.dumps(cell.to_dict()))
    return report


# ---------------------------------------------------------------------------
# report emission
# ---------------------------------------------------------------------------


def _ordered_combos(cells: list[EvalCell]) -> list[str]:
    present = {c.combo for c in cells}
    return [c for c in CANONICAL_COMBOS if c in present]


def _fmt(cell: EvalCell, other: EvalCell | None, metric: str, k: int) -> str:
    values = getattr(cell, metric)
    if cell.error is not None or k not in values:
        return "error"
    text = f"{values[k]:.4f}"
    if other is not None and other.error is None and k in getattr(other, metric):
        if values[k] > getattr(other, metric)[k]:
            return f"**{text}**"
    return text


def render_markdown(report: EvalReport, metric: str = "hit_rate") -> str:
    """Result matrix per model kind, with/without-scope rows adjacent.

    The better member of each with/without-scope pair is bold per column,
    mirroring the usual presentation of such ablations.
    """
    lines = [f"# Ablation report ({metric.replace('_', ' ')})", ""]
    lines.append(f"Corpus `{report.corpus_id}`, seed {report.seed}, generated {report.created_at}.")
    lines.append("")
    if not report.cells:
        lines.append("_No cells._")
        return "\n".join(lines) + "\n"
    kinds = sorted({c.kind for c in report.cells})
    for kind in kinds:
        kind_cells = [c for c in report.cells if c.kind == kind]
        lines.append(f"## {kind}")
        lines.append("")
        lines.append("| Feature | Top1 | Top3 | Top5 | Top10 |")
        lines.append("|---|---|---|---|---|")
        by_combo = {c.combo: c for c in kind_cells}
        for combo in _ordered_combos(kind_cells):
            cell = by_combo[combo]
            # the partner row differs only in the scope flag
            partner_code = combo[:-1] if combo.endswith("S") else combo + "S"
            partner = by_combo.get(partner_code)
            row = [combo] + [_fmt(cell, partner, metric, k) for k in TOP_K_VALUES]
            lines.append("| " + " | ".join(row) + " |")
        lines.append("")
    return "\n".join(lines)


def render_csv(report: EvalReport) -> str:
    header = ["kind", "combo"]
    header += [f"hit_rate@{k}" for k in TOP_K_VALUES]
    header += [f"macro@{k}" for k in TOP_K_VALUES]
    header.append("error")
    rows = [",".join(header)]
    for cell in report.cells:
        row = [cell.kind, cell.combo]
        row += [f"{cell.hit_rate.get(k, float('nan')):.6f}" if cell.error is None else ""
                for k in TOP_K_VALUES]
        row += [f"{cell.macro.get(k, float('nan')):.6f}" if cell.error is None else ""
                for k in TOP_K_VALUES]
        row.append(cell.error or "")
        rows.append(",".join(row))
    return "\n".join(rows) + "\n"


def emit_report(report: EvalReport, path: str | Path, format: str = "markdown",
                metric: str = "hit_rate") -> Path:
    path = Path(path)
    if format == "markdown":
        path.write_text(render_markdown(report, metric), encoding="utf-8")
    elif format == "csv":
        path.write_text(render_csv(report), encoding="utf-8")
    elif format == "json":
        path.write_text(json.dumps(report.to_dict(), indent=2), encoding="utf-8")
    else:
        raise ValueError(f"unknown report format {format!r}")
    return path
