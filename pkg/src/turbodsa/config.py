"""Run configuration: YAML file <-> nested dataclasses.

Defaults are the full-scale settings (Adam, lr 1e-4, Rician
K=3, training SNR 2 dB, batch 128, L=30, widths 128/16/100/5, vocabulary
cap 35632).
"""
from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .channel import FAMILIES, ChannelConfig
from .errors import ConfigurationError

ARCHITECTURES = ("turbo-dsa", "dsa", "deepsc", "cnn-ae")


@dataclass
class ModelSpec:
    architecture: str = "turbo-dsa"
    seq_len: int = 30  # L
    d_model: int = 128  # D1, semantic feature width
    d_channel: int = 16  # D2, width of each of the three transmitted streams
    d_hidden: int = 100  # D3, turbo decoder conv width
    d_extrinsic: int = 5  # D4, prior/extrinsic stream width
    max_vocab: int = 35632  # D5 cap, specials included
    num_layers: int = 3
    num_heads: int = 8
    d_ff: int = 512
    dropout: float = 0.0
    turbo_iterations: int = 6
    conv_channels: int = 100
    conv_layers: int = 2
    kernel_size: int = 5
    tie_interleavers: bool = True
    interleaver_seed: int = 0
    dense_layers: int = 3
    dense_hidden: int = 256
    cnn_ae_layers: int = 4

    def validate(self):
        if self.architecture not in ARCHITECTURES:
            raise ConfigurationError(f"unknown architecture {self.architecture!r}; expected one of {ARCHITECTURES}")
        for name in ("seq_len", "d_model", "d_channel", "d_hidden", "d_extrinsic", "num_layers",
                     "num_heads", "d_ff", "turbo_iterations", "conv_channels", "conv_layers",
                     "dense_layers", "dense_hidden", "cnn_ae_layers"):
            if getattr(self, name) < 1:
                raise ConfigurationError(f"model.{name} must be >= 1")
        if self.seq_len < 3:
            raise ConfigurationError("model.seq_len must be >= 3")
        if self.d_model % self.num_heads:
            raise ConfigurationError("model.num_heads must divide model.d_model")
        if (3 * self.d_channel) % 2:
            raise ConfigurationError("3 * d_channel must be even to form complex symbols")
        if self.kernel_size < 1 or self.kernel_size % 2 == 0:
            raise ConfigurationError("model.kernel_size must be odd")
        if not 0 <= self.dropout < 1:
            raise ConfigurationError("model.dropout must be in [0, 1)")
        if self.max_vocab < 5:
            raise ConfigurationError("model.max_vocab must be >= 5")

    @property
    def channel_width(self) -> int:
        return 3 * self.d_channel


@dataclass
class CorpusConfig:
    path: str | None = None  # None selects the bundled fixture corpus
    min_freq: int = 1
    val_fraction: float = 0.1
    split_seed: int = 0


@dataclass
class TrainConfig:
    optimizer: str = "adam"
    learning_rate: float = 1e-4
    batch_size: int = 128
    epochs: int = 100
    train_snr_db: float = 2.0
    seed: int = 0
    convergence_tol: float = 1e-4
    convergence_window: int = 5
    grad_clip: float | None = None


@dataclass
class ChannelSection:
    family: str = "rician"
    rician_k: float = 3.0
    block_fading: bool = False
    csi: str = "perfect"

    def make(self, snr_db: float, seed: int = 0) -> ChannelConfig:
        return ChannelConfig(self.family, snr_db, self.rician_k, seed, self.csi, self.block_fading)


@dataclass
class EvalConfig:
    snr_grid: str = "-10:8:3"
    metrics: list = field(default_factory=lambda: ["bleu", "ss"])
    seeds: list = field(default_factory=lambda: [0])
    split: str = "val"
    max_ngram: int = 4
    batch_size: int = 256


@dataclass
class OutputConfig:
    dir: str = "runs/default"


@dataclass
class RunConfig:
    corpus: CorpusConfig = field(default_factory=CorpusConfig)
    model: ModelSpec = field(default_factory=ModelSpec)
    training: TrainConfig = field(default_factory=TrainConfig)
    channel: ChannelSection = field(default_factory=ChannelSection)
    evaluation: EvalConfig = field(default_factory=EvalConfig)
    output: OutputConfig = field(default_factory=OutputConfig)

    def validate(self) -> "RunConfig":
        self.model.validate()
        t = self.training
        if t.optimizer.lower() != "adam":
            raise ConfigurationError("only the adam optimizer is supported")
        if not t.learning_rate > 0:
            raise ConfigurationError("training.learning_rate must be > 0")
        if t.epochs < 1:
            raise ConfigurationError("training.epochs must be >= 1")
        if t.batch_size < 1:
            raise ConfigurationError("training.batch_size must be >= 1")
        if t.convergence_window < 1:
            raise ConfigurationError("training.convergence_window must be >= 1")
        if self.channel.family not in FAMILIES:
            raise ConfigurationError(f"unknown channel family {self.channel.family!r}")
        if self.channel.rician_k < 0:
            raise ConfigurationError("channel.rician_k must be >= 0")
        if not 0 <= self.corpus.val_fraction < 1:
            raise ConfigurationError("corpus.val_fraction must be in [0, 1)")
        if self.evaluation.split not in ("train", "val", "all"):
            raise ConfigurationError("evaluation.split must be train, val or all")
        unknown = set(self.evaluation.metrics) - {"bleu", "ss"}
        if unknown:
            raise ConfigurationError(f"unknown metrics {sorted(unknown)}")
        parse_snr_grid(self.evaluation.snr_grid)
        return self

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def dump(self, path) -> None:
        Path(path).write_text(yaml.safe_dump(self.to_dict(), sort_keys=False), encoding="utf-8")

    def fingerprint(self) -> str:
        """Hash of everything that determines parameter shapes and layout."""
        blob = json.dumps(dataclasses.asdict(self.model), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    @classmethod
    def from_dict(cls, data: dict | None) -> "RunConfig":
        data = dict(data or {})
        sections = {f.name: f.type for f in dataclasses.fields(cls)}
        unknown = set(data) - set(sections)
        if unknown:
            raise ConfigurationError(f"unknown config sections {sorted(unknown)}")
        kwargs = {}
        for f in dataclasses.fields(cls):
            sub_cls = f.default_factory  # type: ignore[misc]
            values = data.get(f.name) or {}
            if not isinstance(values, dict):
                raise ConfigurationError(f"section {f.name!r} must be a mapping")
            names = {g.name for g in dataclasses.fields(sub_cls)}
            bad = set(values) - names
            if bad:
                raise ConfigurationError(f"unknown keys in {f.name}: {sorted(bad)}")
            try:
                kwargs[f.name] = sub_cls(**values)
            except TypeError as exc:
                raise ConfigurationError(str(exc)) from exc
        return cls(**kwargs).validate()


def shipped_config(name: str) -> Path:
    """Path of a bundled config ("default" or "smoke")."""
    path = Path(__file__).parent / "configs" / f"{name}.yaml"
    if not path.is_file():
        raise ConfigurationError(f"no bundled config named {name!r}")
    return path


def load_config(path) -> RunConfig:
    try:
        data = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"cannot parse {path}: {exc}") from exc
    if data is not None and not isinstance(data, dict):
        raise ConfigurationError(f"{path}: top level must be a mapping")
    return RunConfig.from_dict(data)


def parse_snr_grid(text) -> list[float]:
    """Parse ``start:stop:step`` (stop included when aligned) or a comma list."""
    if isinstance(text, (int, float)):
        return [float(text)]
    text = str(text).strip()
    try:
        if ":" in text:
            parts = [float(p) for p in text.split(":")]
            if len(parts) != 3:
                raise ValueError
            start, stop, step = parts
            if step == 0 or (stop - start) * step < 0:
                raise ValueError
            n = int((stop - start) / step + 1e-9)
            return [round(start + i * step, 10) for i in range(n + 1)]
        values = [float(p) for p in text.split(",") if p.strip()]
        if not values:
            raise ValueError
        return values
    except ValueError:
        raise ConfigurationError(f"malformed SNR grid {text!r}") from None
