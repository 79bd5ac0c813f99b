"""Model configuration: variant wiring, sizes, and training hyperparameters."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Any

from ..encoders import EncoderSpec
from ..textprep import FeatureCombo

VARIANTS = ("baseline", "recurrent", "multikernel")

#: Model-kind shorthand used by the CLI and the ablation harness.
#: "recurrent" alone is an alias for its best-performing encoder (gru).
MODEL_KINDS = {
    "baseline": ("baseline", "conv1d_single"),
    "lstm": ("recurrent", "lstm"),
    "bilstm": ("recurrent", "bilstm"),
    "gru": ("recurrent", "gru"),
    "bigru": ("recurrent", "bigru"),
    "recurrent": ("recurrent", "gru"),
    "multikernel": ("multikernel", "multikernel_conv"),
}


@dataclass(frozen=True)
class HeadConfig:
    """Dense blocks after the encoder, plus the post-concat stage sizes."""

    widths: tuple[int, ...]
    dropout: float
    concat_width: int = 500       # recurrent variant, after joining similarity flow
    concat_dropout: float = 0.3
    simflow_widths: tuple[int, ...] = (1500, 1000, 500)
    simflow_dropout: float = 0.4

    def __post_init__(self) -> None:
        if not self.widths or any(w < 1 for w in self.widths):
            raise ValueError("head widths must be positive")
        object.__setattr__(self, "widths", tuple(self.widths))
        object.__setattr__(self, "simflow_widths", tuple(self.simflow_widths))


@dataclass(frozen=True)
class EmbedSpec:
    """Token embedding source: a pretrained .vec file or a trainable table."""

    dim: int = 768
    pretrained_path: str | None = None
    trainable: bool = True


@dataclass(frozen=True)
class TrainSpec:
    optimizer: str = "adam"
    learning_rate: float = 1e-3
    batch_size: int = 32
    epochs: int = 30
    patience: int = 5
    seed: int = 0


_HEAD_DEFAULTS = {
    "baseline": HeadConfig(widths=(512, 256, 128), dropout=0.2),
    "recurrent": HeadConfig(widths=(512, 256), dropout=0.2),
    "multikernel": HeadConfig(widths=(500, 400), dropout=0.2),
}


@dataclass(frozen=True)
class ModelConfig:
    variant: str
    combo: FeatureCombo
    n_venues: int
    encoder: EncoderSpec
    head: HeadConfig
    embed: EmbedSpec
    train: TrainSpec = field(default_factory=TrainSpec)
    cased: bool = False           # marker pipeline: keep case when True
    min_count: int = 1            # vocabulary frequency cutoff
    max_len: int | None = None    # overrides the combo's default budget

    def __post_init__(self) -> None:
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")
        if self.n_venues < 2:
            raise ValueError("need at least 2 venues")
        if self.encoder.embed_dim != self.embed.dim:
            raise ValueError("encoder embed_dim must match the embedding dimension")

    @property
    def scope_mode(self) -> str:
        """How scope representations are produced when the scope flag is on."""
        return "siamese" if self.variant == "multikernel" else "frozen"

    def to_dict(self) -> dict[str, Any]:
        return {
            "variant": self.variant,
            "combo": self.combo.code,
            "n_venues": self.n_venues,
            "encoder": {
                "kind": self.encoder.kind,
                "embed_dim": self.encoder.embed_dim,
                "units": self.encoder.units,
                "filters": self.encoder.filters,
                "kernel_sizes": list(self.encoder.kernel_sizes),
            },
            "head": {
                "widths": list(self.head.widths),
                "dropout": self.head.dropout,
                "concat_width": self.head.concat_width,
                "concat_dropout": self.head.concat_dropout,
                "simflow_widths": list(self.head.simflow_widths),
                "simflow_dropout": self.head.simflow_dropout,
            },
            "embed": {
                "dim": self.embed.dim,
                "pretrained_path": self.embed.pretrained_path,
                "trainable": self.embed.trainable,
            },
            "train": {
                "optimizer": self.train.optimizer,
                "learning_rate": self.train.learning_rate,
                "batch_size": self.train.batch_size,
                "epochs": self.train.epochs,
                "patience": self.train.patience,
                "seed": self.train.seed,
            },
            "cased": self.cased,
            "min_count": self.min_count,
            "max_len": self.max_len,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "ModelConfig":
        enc = d["encoder"]
        head = d["head"]
        return cls(
            variant=d["variant"],
            combo=FeatureCombo.parse(d["combo"]),
            n_venues=d["n_venues"],
            encoder=EncoderSpec(
                kind=enc["kind"],
                embed_dim=enc["embed_dim"],
                units=enc["units"],
                filters=enc["filters"],
                kernel_sizes=tuple(enc["kernel_sizes"]),
            ),
            head=HeadConfig(
                widths=tuple(head["widths"]),
                dropout=head["dropout"],
                concat_width=head["concat_width"],
                concat_dropout=head["concat_dropout"],
                simflow_widths=tuple(head["simflow_widths"]),
                simflow_dropout=head["simflow_dropout"],
            ),
            embed=EmbedSpec(
                dim=d["embed"]["dim"],
                pretrained_path=d["embed"]["pretrained_path"],
                trainable=d["embed"]["trainable"],
            ),
            train=TrainSpec(**d["train"]),
            cased=d.get("cased", False),
            min_count=d.get("min_count", 1),
            max_len=d.get("max_len"),
        )


def default_config(
    kind: str,
    combo: FeatureCombo | str,
    n_venues: int,
    embed_dim: int | None = None,
    units: int | None = None,
    filters: int | None = None,
    kernel_sizes: tuple[int, ...] | None = None,
    head: HeadConfig | None = None,
    embed: EmbedSpec | None = None,
    train: TrainSpec | None = None,
    cased: bool = False,
    min_count: int = 1,
    max_len: int | None = None,
) -> ModelConfig:
    """Paper-default configuration for a model kind, with desk-scale overrides."""
    if kind not in MODEL_KINDS:
        raise ValueError(f"unknown model kind {kind!r}; expected one of {sorted(MODEL_KINDS)}")
    variant, encoder_kind = MODEL_KINDS[kind]
    if isinstance(combo, str):
        combo = FeatureCombo.parse(combo)
    if embed is None:
        dim = embed_dim if embed_dim is not None else (768 if variant == "multikernel" else 300)
        embed = EmbedSpec(dim=dim)
    elif embed_dim is not None and embed.dim != embed_dim:
        embed = replace(embed, dim=embed_dim)
    encoder = EncoderSpec(
        kind=encoder_kind,
        embed_dim=embed.dim,
        units=units if units is not None else 100,
        filters=filters if filters is not None else 200,
        kernel_sizes=kernel_sizes if kernel_sizes is not None
        else ((2, 3, 4) if variant == "multikernel" else (3,)),
    )
    return ModelConfig(
        variant=variant,
        combo=combo,
        n_venues=n_venues,
        encoder=encoder,
        head=head or _HEAD_DEFAULTS[variant],
        embed=embed,
        train=train or TrainSpec(),
        cased=cased,
        min_count=min_count,
        max_len=max_len,
    )
