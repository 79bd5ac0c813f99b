"""The preprocessing pipeline a model trains and serves with.

The pipeline is part of the model contract: its version is stored in every
checkpoint and enforced at serving time so training/serving skew is
impossible.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..corpus import Document
from ..textprep import (
    EmptyFeatureTextError,
    FeatureCombo,
    TokenSequence,
    Vocab,
    baseline_clean,
    bert_style_clean,
    combine_features,
    encode_pad,
    enhanced_clean,
    max_len_for,
)

PIPELINE_VERSION = 1

_CLEANER_FOR_VARIANT = {
    "baseline": "baseline",
    "recurrent": "enhanced",
    "multikernel": "bert_style",
}


@dataclass(frozen=True)
class Pipeline:
    cleaner: str              # baseline | enhanced | bert_style
    combo: FeatureCombo
    max_len: int
    add_markers: bool
    lowercase: bool = True    # bert_style only; cased models keep case
    version: int = PIPELINE_VERSION

    def clean(self, text: str) -> str:
        if self.cleaner == "baseline":
            return baseline_clean(text)
        if self.cleaner == "enhanced":
            return enhanced_clean(text)
        if self.cleaner == "bert_style":
            return bert_style_clean(text, lowercase=self.lowercase)
        raise ValueError(f"unknown cleaner {self.cleaner!r}")

    def doc_text(self, doc: Document) -> str:
        """Combined feature text after cleaning; raises on an empty result."""
        cleaned = self.clean(combine_features(doc, self.combo))
        if not cleaned:
            raise EmptyFeatureTextError("empty feature text after cleaning")
        return cleaned

    def encode_text(self, cleaned: str, vocab: Vocab) -> TokenSequence:
        return encode_pad(cleaned.split(), vocab, self.max_len, add_markers=self.add_markers)

    def encode_doc(self, doc: Document, vocab: Vocab) -> TokenSequence:
        return self.encode_text(self.doc_text(doc), vocab)


def pipeline_for(config) -> Pipeline:
    """Derive the canonical pipeline from a model configuration."""
    cleaner = _CLEANER_FOR_VARIANT[config.variant]
    return Pipeline(
        cleaner=cleaner,
        combo=config.combo,
        max_len=config.max_len or max_len_for(config.combo),
        add_markers=config.variant == "multikernel",
        lowercase=not config.cased,
    )
