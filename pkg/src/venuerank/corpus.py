"""Corpus ingestion, validation, splitting, and synthetic-data generation.

File formats:

* corpus jsonl -- one object per line with keys ``id``, ``title``,
  ``abstract``, ``keywords`` (list), optional ``venue_id``.
* corpus csv   -- header row required, same columns; ``keywords`` holds a
  delimiter-joined list (default ``;``).
* venues jsonl -- keys ``venue_id``, ``name``, ``aims_scope``.
"""

from __future__ import annotations

import csv
import json
import logging
import string
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .textprep import bert_style_clean

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Document:
    """One manuscript: id, text fields, and an optional true venue label."""

    id: str
    title: str = ""
    abstract: str = ""
    keywords: tuple[str, ...] = ()
    venue_id: str | None = None

    def __post_init__(self) -> None:
        if not self.id:
            raise ValueError("document id must be nonempty")
        object.__setattr__(self, "keywords", tuple(self.keywords))


@dataclass(frozen=True)
class VenueProfile:
    """A journal/conference with its Aims & Scope self-description."""

    venue_id: str
    name: str
    aims_scope: str = ""

    def __post_init__(self) -> None:
        if not self.venue_id:
            raise ValueError("venue_id must be nonempty")


@dataclass(frozen=True)
class CorpusSplit:
    train: tuple[Document, ...]
    validation: tuple[Document, ...]
    test: tuple[Document, ...]
    seed: int

    def __iter__(self):
        return iter((self.train, self.validation, self.test))


def _check_unique_ids(docs: Sequence[Document]) -> None:
    seen: set[str] = set()
    for doc in docs:
        if doc.id in seen:
            raise ValueError(f"duplicate document id {doc.id!r}")
        seen.add(doc.id)


def _doc_from_record(rec: dict, line_no: int, keyword_delim: str, source: str) -> Document:
    for key in ("id", "title", "abstract", "keywords"):
        if key not in rec:
            raise ValueError(f"{source} line {line_no}: missing field {key!r}")
    keywords = rec["keywords"]
    if isinstance(keywords, str):
        keywords = [k.strip() for k in keywords.split(keyword_delim) if k.strip()]
    elif not isinstance(keywords, list):
        raise ValueError(f"{source} line {line_no}: field 'keywords' must be a list or string")
    venue_id = rec.get("venue_id") or None
    try:
        return Document(
            id=str(rec["id"]),
            title=str(rec["title"] or ""),
            abstract=str(rec["abstract"] or ""),
            keywords=tuple(str(k) for k in keywords),
            venue_id=venue_id,
        )
    except ValueError as exc:
        raise ValueError(f"{source} line {line_no}: {exc}") from exc


def load_corpus(
    path: str | Path,
    format: str | None = None,
    keyword_delim: str = ";",
) -> list[Document]:
    """Load documents from jsonl or csv, validating ids and cleanable text.

    Documents whose fields clean to nothing are rejected and reported via a
    warning naming their ids (they cannot feed any model).
    """
    path = Path(path)
    fmt = format or ("csv" if path.suffix.lower() == ".csv" else "jsonl")
    docs: list[Document] = []
    if fmt == "jsonl":
        with open(path, encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    rec = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise ValueError(f"{path} line {line_no}: invalid json ({exc.msg})") from exc
                docs.append(_doc_from_record(rec, line_no, keyword_delim, str(path)))
    elif fmt == "csv":
        with open(path, encoding="utf-8", newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None:
                raise ValueError(f"{path}: empty csv, header row required")
            for line_no, row in enumerate(reader, start=2):
                docs.append(_doc_from_record(row, line_no, keyword_delim, str(path)))
    else:
        raise ValueError(f"unknown corpus format {fmt!r}")

    _check_unique_ids(docs)
    kept: list[Document] = []
    rejected: list[str] = []
    for doc in docs:
        text = " ".join([doc.title, doc.abstract, " ".join(doc.keywords)])
        # validity gate is the lightest cleaner: a document no pipeline can
        # use is rejected here, per-model emptiness surfaces at encode time
        if bert_style_clean(text):
            kept.append(doc)
        else:
            rejected.append(doc.id)
    if rejected:
        log.warning("rejected %d document(s) with empty cleaned text: %s", len(rejected), rejected)
    return kept


def write_corpus(docs: Iterable[Document], path: str | Path, format: str = "jsonl",
                 keyword_delim: str = ";") -> None:
    path = Path(path)
    docs = list(docs)
    if format == "jsonl":
        with open(path, "w", encoding="utf-8") as fh:
            for doc in docs:
                rec = {
                    "id": doc.id,
                    "title": doc.title,
                    "abstract": doc.abstract,
                    "keywords": list(doc.keywords),
                }
                if doc.venue_id is not None:
                    rec["venue_id"] = doc.venue_id
                fh.write(json.dumps(rec, ensure_ascii=False) + "\n")
    elif format == "csv":
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["id", "title", "abstract", "keywords", "venue_id"])
            for doc in docs:
                writer.writerow(
                    [doc.id, doc.title, doc.abstract,
                     keyword_delim.join(doc.keywords), doc.venue_id or ""]
                )
    else:
        raise ValueError(f"unknown corpus format {format!r}")


def load_venues(path: str | Path, require_scope: bool = False) -> list[VenueProfile]:
    """Load venue profiles from jsonl, preserving file order."""
    venues: list[VenueProfile] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            rec = json.loads(line)
            for key in ("venue_id", "name", "aims_scope"):
                if key not in rec:
                    raise ValueError(f"{path} line {line_no}: missing field {key!r}")
            vid = str(rec["venue_id"])
            if vid in seen:
                raise ValueError(f"{path} line {line_no}: duplicate venue_id {vid!r}")
            seen.add(vid)
            scope = str(rec["aims_scope"] or "")
            if require_scope and not scope.strip():
                raise ValueError(f"{path} line {line_no}: empty aims_scope for venue {vid!r}")
            venues.append(VenueProfile(vid, str(rec["name"]), scope))
    if not venues:
        raise ValueError(f"{path}: no venues")
    return venues


def write_venues(venues: Iterable[VenueProfile], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for v in venues:
            fh.write(json.dumps(
                {"venue_id": v.venue_id, "name": v.name, "aims_scope": v.aims_scope},
                ensure_ascii=False) + "\n")


def validate_labels(docs: Sequence[Document], venues: Sequence[VenueProfile]) -> None:
    """Every labeled document must point at a known venue."""
    known = {v.venue_id for v in venues}
    for doc in docs:
        if doc.venue_id is not None and doc.venue_id not in known:
            raise ValueError(f"document {doc.id!r} labels unknown venue {doc.venue_id!r}")


def _split_sizes(n: int, ratios: Sequence[float]) -> tuple[int, int, int]:
    n_train = int(round(n * ratios[0]))
    n_val = int(round(n * ratios[1]))
    n_test = n - n_train - n_val
    return n_train, n_val, n_test


def split_corpus(
    docs: Sequence[Document],
    ratios: tuple[float, float, float] = (0.6, 0.2, 0.2),
    seed: int = 0,
    stratify: bool = False,
) -> CorpusSplit:
    """Deterministic shuffle under ``seed``, then a contiguous three-way cut.

    With ``stratify`` the cut happens per venue so that small corpora keep
    every class represented in each split (the +-1 size guarantee then holds
    per venue rather than globally).
    """
    if len(ratios) != 3 or any(r <= 0 for r in ratios):
        raise ValueError("ratios must be three positive fractions")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError(f"ratios must sum to 1, got {sum(ratios)!r}")
    if len(docs) < 5:
        raise ValueError("corpus too small to split: need at least 5 documents")
    _check_unique_ids(docs)

    rng = np.random.default_rng(seed)

    def cut(group: Sequence[Document]) -> tuple[list, list, list]:
        order = rng.permutation(len(group))
        shuffled = [group[i] for i in order]
        n_train, n_val, n_test = _split_sizes(len(group), ratios)
        return (shuffled[:n_train],
                shuffled[n_train:n_train + n_val],
                shuffled[n_train + n_val:])

    if stratify:
        groups: dict[str | None, list[Document]] = {}
        for doc in docs:
            groups.setdefault(doc.venue_id, []).append(doc)
        train: list[Document] = []
        val: list[Document] = []
        test: list[Document] = []
        for key in sorted(groups, key=lambda k: (k is None, k)):
            tr, va, te = cut(groups[key])
            train.extend(tr)
            val.extend(va)
            test.extend(te)
    else:
        train, val, test = cut(docs)

    if not (train and val and test):
        raise ValueError("corpus too small for three nonempty splits at these ratios")
    return CorpusSplit(tuple(train), tuple(val), tuple(test), seed)


def _alpha_word(index: int, length: int = 3) -> str:
    """Deterministic lowercase word from an index: 0 -> 'aaa', 1 -> 'aab', ..."""
    letters = string.ascii_lowercase
    out = []
    for _ in range(length):
        out.append(letters[index % 26])
        index //= 26
    return "".join(reversed(out))


@dataclass(frozen=True)
class SynthSpec:
    """Shape of a generated corpus; lengths are in tokens."""

    title_len: int = 8
    abstract_len: int = 40
    n_keywords: int = 5
    scope_len: int = 60
    topic_words_per_venue: int = 8


def synth_corpus(
    n_venues: int,
    docs_per_venue: int,
    vocab_size: int = 0,
    signal_strength: float = 0.9,
    seed: int = 0,
    spec: SynthSpec = SynthSpec(),
) -> tuple[list[Document], list[VenueProfile]]:
    """Generate a planted-signal corpus plus matching venue profiles.

    Each venue owns a disjoint topic-word subset. Every document token comes
    from its venue's topic words with probability ``signal_strength`` and from
    the shared background vocabulary otherwise. Aims & Scope texts sample the
    same topic subset, so the scope-similarity feature carries real signal.
    """
    if n_venues < 2:
        raise ValueError("n_venues must be >= 2")
    if docs_per_venue < 1:
        raise ValueError("docs_per_venue must be >= 1")
    if vocab_size == 0:
        vocab_size = 10 * n_venues + 200
    if vocab_size < 10 * n_venues:
        raise ValueError("vocab_size must be >= 10 * n_venues")
    if not 0.0 <= signal_strength <= 1.0:
        raise ValueError("signal_strength must lie in [0, 1]")

    n_topic = n_venues * spec.topic_words_per_venue
    if n_topic >= vocab_size:
        raise ValueError("vocab_size too small for the venue topic subsets")
    # Word index space: [0, n_topic) are venue-owned, the rest are shared.
    words = [f"q{_alpha_word(i, 4)}" for i in range(vocab_size)]
    topic_words = [
        words[v * spec.topic_words_per_venue:(v + 1) * spec.topic_words_per_venue]
        for v in range(n_venues)
    ]
    shared_words = words[n_topic:]

    rng = np.random.default_rng(seed)

    def sample_tokens(venue: int, count: int) -> list[str]:
        from_topic = rng.random(count) < signal_strength
        topic_idx = rng.integers(0, spec.topic_words_per_venue, size=count)
        shared_idx = rng.integers(0, len(shared_words), size=count)
        return [
            topic_words[venue][topic_idx[i]] if from_topic[i] else shared_words[shared_idx[i]]
            for i in range(count)
        ]

    venues: list[VenueProfile] = []
    for v in range(n_venues):
        scope_tokens = [topic_words[v][rng.integers(0, spec.topic_words_per_venue)]
                        for _ in range(spec.scope_len)]
        venues.append(VenueProfile(
            venue_id=f"v{v:03d}",
            name=f"Synthetic Venue {v:03d}",
            aims_scope=" ".join(scope_tokens),
        ))

    docs: list[Document] = []
    for v in range(n_venues):
        for d in range(docs_per_venue):
            docs.append(Document(
                id=f"p{v:03d}-{d:04d}",
                title=" ".join(sample_tokens(v, spec.title_len)),
                abstract=" ".join(sample_tokens(v, spec.abstract_len)),
                keywords=tuple(sample_tokens(v, spec.n_keywords)),
                venue_id=f"v{v:03d}",
            ))
    return docs, venues
