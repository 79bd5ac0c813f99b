"""Text cleaning pipelines, tokenization, vocabulary, and fixed-length encoding.

Three cleaners are provided, one per model family:

* ``baseline_clean``  -- lowercase, strip non-alphabetic characters, drop
  single letters and stopwords.
* ``enhanced_clean``  -- additionally strips crawl mojibake, splits camelCase
  word run-ons, and treats number words (fifteen, six, ...) as stopwords.
* ``bert_style_clean`` -- LaTeX/math removal plus light tokenization that
  optionally preserves case; no stopword filtering.

All cleaners are total, deterministic, and idempotent.
"""

from __future__ import annotations

import json
import re
from collections import Counter
from dataclasses import dataclass
from importlib import resources
from typing import Iterable, Sequence

PAD_ID = 0
UNK_ID = 1
CLS_ID = 2
SEP_ID = 3

PAD_TOKEN = "[PAD]"
UNK_TOKEN = "[UNK]"
CLS_TOKEN = "[CLS]"
SEP_TOKEN = "[SEP]"

RESERVED_TOKENS = (PAD_TOKEN, UNK_TOKEN, CLS_TOKEN, SEP_TOKEN)

#: The 14 canonical feature-combination rows, with/without scope adjacent.
CANONICAL_COMBOS = (
    "T", "TS", "K", "KS", "A", "AS", "TK", "TKS",
    "TA", "TAS", "AK", "AKS", "TAK", "TAKS",
)


class EmptyFeatureTextError(ValueError):
    """Raised when a document's combined feature text is empty."""


def _load_word_list(name: str) -> frozenset[str]:
    text = resources.files("venuerank").joinpath(f"data/{name}").read_text("utf-8")
    return frozenset(line.strip() for line in text.splitlines() if line.strip())


ENGLISH_STOPWORDS = _load_word_list("stopwords_english.txt")
NUMBER_WORDS = _load_word_list("stopwords_numbers.txt")

# Whitespace unification: any unicode whitespace becomes a single ASCII space
# so that later byte-level filters never glue words across line breaks.
_WS = re.compile(r"\s")
# Everything outside printable ASCII. Deleting (not spacing) these is what
# re-joins crawl mojibake like "Lennard<0xe2><0x80><0x93>Jones" into
# "LennardJones" so the camelCase splitter can recover "Lennard Jones".
_NON_PRINTABLE_ASCII = re.compile(r"[^\x20-\x7e]")
_CAMEL_BOUNDARY = re.compile(r"(?<=[a-z])(?=[A-Z])")
_NON_ALPHA = re.compile(r"[^A-Za-z]")
_NON_ALNUM = re.compile(r"[^A-Za-z0-9]")


def _filter_tokens(text: str, stopwords: frozenset[str], extra: Iterable[str] | None) -> str:
    banned = stopwords if extra is None else stopwords | frozenset(extra)
    kept = [tok for tok in text.split() if len(tok) > 1 and tok not in banned]
    return " ".join(kept)


def baseline_clean(text: str, extra_stopwords: Iterable[str] | None = None) -> str:
    """Lowercase, keep only alphabetic runs, drop single letters and stopwords.

    Non-alphabetic characters act as token separators, so hyphenated and
    dash-joined compounds split into their alphabetic parts.
    """
    s = text.lower()
    s = _NON_ALPHA.sub(" ", s)
    return _filter_tokens(s, ENGLISH_STOPWORDS, extra_stopwords)


def enhanced_clean(text: str, extra_stopwords: Iterable[str] | None = None) -> str:
    """Cleaning with mojibake stripping, camelCase splitting, and number words.

    Pipeline order matters: mojibake bytes are deleted before the camelCase
    split so that artifact-joined words ("EinsteinPodolskiyRosen") regain
    their boundaries, and the split happens before lowercasing.
    """
    s = _WS.sub(" ", text)
    s = _NON_PRINTABLE_ASCII.sub("", s)
    s = _CAMEL_BOUNDARY.sub(" ", s)
    s = _NON_ALPHA.sub(" ", s)
    s = s.lower()
    banned = ENGLISH_STOPWORDS | NUMBER_WORDS
    return _filter_tokens(s, banned, extra_stopwords)


def bert_style_clean(text: str, lowercase: bool = True) -> str:
    """Light cleaning for the marker-based pipeline: strip math, keep words.

    Keeps alphanumeric tokens (case preserved unless ``lowercase``); no
    stopword or token-length filtering.
    """
    s = strip_latex(text)
    s = _WS.sub(" ", s)
    s = _NON_PRINTABLE_ASCII.sub("", s)
    s = _NON_ALNUM.sub(" ", s)
    if lowercase:
        s = s.lower()
    return " ".join(s.split())


_MATH_SPANS = (
    (re.compile(r"\$\$.*?\$\$", re.DOTALL), "$$"),
    (re.compile(r"\$.*?\$", re.DOTALL), "$"),
    (re.compile(r"\\\[.*?\\\]", re.DOTALL), r"\["),
    (re.compile(r"\\\(.*?\\\)", re.DOTALL), r"\("),
)
_MATH_OPENERS = (re.compile(r"\$\$|\$"), re.compile(r"\\\["), re.compile(r"\\\("))
_LATEX_COMMAND = re.compile(r"\\[a-zA-Z]+(\s*\{[^{}]*\})*")


def strip_latex_with_warnings(text: str) -> tuple[str, int]:
    """Remove math spans and LaTeX commands; count unbalanced-delimiter repairs.

    Returns the stripped text and the number of unmatched opening delimiters
    that forced removal through end-of-string.
    """
    s = text
    warnings = 0
    for pattern, _ in _MATH_SPANS:
        s = pattern.sub("", s)
    # Leftover openers have no closing mate: drop through end-of-string.
    for opener in _MATH_OPENERS:
        m = opener.search(s)
        if m:
            warnings += 1
            s = s[: m.start()]
    # Commands with brace arguments; iterate so nested groups peel inside-out.
    while True:
        stripped = _LATEX_COMMAND.sub("", s)
        if stripped == s:
            return s, warnings
        s = stripped


def strip_latex(text: str) -> str:
    return strip_latex_with_warnings(text)[0]


@dataclass(frozen=True)
class FeatureCombo:
    """Which manuscript fields feed the model, plus the scope-similarity flag."""

    use_title: bool = False
    use_abstract: bool = False
    use_keywords: bool = False
    use_scope: bool = False

    def __post_init__(self) -> None:
        if not (self.use_title or self.use_abstract or self.use_keywords):
            raise ValueError("feature combo needs at least one of title/abstract/keywords")

    @classmethod
    def parse(cls, code: str) -> "FeatureCombo":
        letters = set(code.upper())
        unknown = letters - set("TAKS")
        if unknown:
            raise ValueError(f"unknown feature letters {sorted(unknown)!r} in {code!r}")
        return cls(
            use_title="T" in letters,
            use_abstract="A" in letters,
            use_keywords="K" in letters,
            use_scope="S" in letters,
        )

    @property
    def code(self) -> str:
        return (
            ("T" if self.use_title else "")
            + ("A" if self.use_abstract else "")
            + ("K" if self.use_keywords else "")
            + ("S" if self.use_scope else "")
        )

    def without_scope(self) -> "FeatureCombo":
        return FeatureCombo(self.use_title, self.use_abstract, self.use_keywords, False)

    def __str__(self) -> str:
        return self.code


_MAX_LEN = {
    (True, False, False): 128,   # T
    (False, True, False): 512,   # A
    (False, False, True): 128,   # K
    (False, True, True): 512,    # A+K
    (True, False, True): 256,    # T+K
    (True, True, False): 512,    # T+A
    (True, True, True): 512,     # T+A+K
}


def max_len_for(combo: FeatureCombo) -> int:
    """Fixed token budget per feature combination (scope flag irrelevant)."""
    return _MAX_LEN[(combo.use_title, combo.use_abstract, combo.use_keywords)]


def combine_features(doc, combo: FeatureCombo) -> str:
    """Concatenate enabled fields in fixed Title, Abstract, Keywords order.

    The scope flag does not alter this text; scope similarity flows through
    its own branch. Raises :class:`EmptyFeatureTextError` when nothing is left.
    """
    parts: list[str] = []
    if combo.use_title and doc.title:
        parts.append(doc.title)
    if combo.use_abstract and doc.abstract:
        parts.append(doc.abstract)
    if combo.use_keywords and doc.keywords:
        joined = " ".join(k for k in doc.keywords if k)
        if joined:
            parts.append(joined)
    text = " ".join(parts).strip()
    if not text:
        raise EmptyFeatureTextError("empty feature text")
    return text


class Vocab:
    """Token<->id bijection with fixed reserved ids PAD=0, UNK=1, CLS=2, SEP=3."""

    def __init__(self, tokens: Sequence[str]):
        """``tokens`` are the non-reserved entries, already in id order."""
        self.id_to_token: list[str] = list(RESERVED_TOKENS) + list(tokens)
        self.token_to_id: dict[str, int] = {t: i for i, t in enumerate(self.id_to_token)}
        if len(self.token_to_id) != len(self.id_to_token):
            raise ValueError("duplicate tokens in vocabulary")

    def __len__(self) -> int:
        return len(self.id_to_token)

    def __contains__(self, token: str) -> bool:
        return token in self.token_to_id

    def id_for(self, token: str) -> int:
        return self.token_to_id.get(token, UNK_ID)

    def token_for(self, idx: int) -> str:
        return self.id_to_token[idx]

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for idx, token in enumerate(self.id_to_token):
                fh.write(json.dumps({"token": token, "id": idx}) + "\n")

    @classmethod
    def load(cls, path) -> "Vocab":
        entries: list[tuple[int, str]] = []
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    rec = json.loads(line)
                    entries.append((rec["id"], rec["token"]))
        entries.sort()
        tokens = [t for i, t in entries]
        if tokens[:4] != list(RESERVED_TOKENS):
            raise ValueError("vocab file missing reserved tokens at ids 0..3")
        if [i for i, _ in entries] != list(range(len(entries))):
            raise ValueError("vocab ids are not contiguous")
        return cls(tokens[4:])


def build_vocab(texts: Iterable[str], min_count: int = 1) -> Vocab:
    """Frequency vocabulary: count >= min_count, ordered by (-count, token)."""
    if min_count < 1:
        raise ValueError("min_count must be >= 1")
    counts: Counter[str] = Counter()
    for text in texts:
        counts.update(t for t in text.split() if t not in RESERVED_TOKENS)
    kept = [(tok, n) for tok, n in counts.items() if n >= min_count]
    if not kept:
        raise ValueError("empty vocabulary: no token reaches min_count")
    kept.sort(key=lambda item: (-item[1], item[0]))
    return Vocab([tok for tok, _ in kept])


@dataclass(frozen=True)
class TokenSequence:
    """Fixed-length id-encoded text: prefix of real tokens, then padding."""

    tokens: tuple[str, ...]
    ids: tuple[int, ...]
    mask: tuple[int, ...]
    max_len: int

    @property
    def n_real(self) -> int:
        return sum(self.mask)


def encode_pad(
    tokens: Sequence[str],
    vocab: Vocab,
    max_len: int,
    add_markers: bool = False,
) -> TokenSequence:
    """Map tokens to ids, truncate from the tail, and pad to ``max_len``.

    With markers on, CLS is prepended and SEP appended; truncation keeps SEP
    as the final real token.
    """
    if add_markers and max_len < 3:
        raise ValueError("max_len must be >= 3 when markers are added")
    if max_len < 1:
        raise ValueError("max_len must be >= 1")
    budget = max_len - 2 if add_markers else max_len
    real = [str(t) for t in tokens[:budget]]
    if add_markers:
        real = [CLS_TOKEN] + real + [SEP_TOKEN]
    ids = [vocab.id_for(t) for t in real]
    n_real = len(ids)
    ids.extend([PAD_ID] * (max_len - n_real))
    mask = [1] * n_real + [0] * (max_len - n_real)
    return TokenSequence(tuple(real), tuple(ids), tuple(mask), max_len)
