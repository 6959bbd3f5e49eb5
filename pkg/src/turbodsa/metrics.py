"""Training loss, BLEU, sentence similarity and the CSV metric report."""
from __future__ import annotations

import csv
import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np
import torch

from .corpus import PAD, SPECIAL_TOKENS, Vocabulary, split_words
from .errors import ConfigurationError, ContractViolation, EmbedderUnavailable

REPORT_HEADER = ("model", "channel", "snr_db", "metric", "ngram", "value", "seed")


@dataclass
class LossConfig:
    delta: float = 1e-7
    pad_masking: bool = True

    def __post_init__(self):
        if not 0 < self.delta <= 1e-4:
            raise ConfigurationError("delta must be in (0, 1e-4]")


def cross_entropy_loss(p: torch.Tensor, targets: torch.Tensor, cfg: LossConfig | None = None) -> torch.Tensor:
    """Per-sentence length-normalized cross entropy on probabilities.

    ``p`` is [B, L, V] (rows are distributions), ``targets`` is [B, L] ids.
    Each sentence contributes the mean of -log(p_true + delta) over its
    non-PAD target positions; sentences are then averaged.
    """
    cfg = cfg or LossConfig()
    if p.dim() != 3 or p.shape[:2] != targets.shape:
        raise ContractViolation(f"prediction shape {tuple(p.shape)} vs targets {tuple(targets.shape)}")
    true_p = p.gather(-1, targets.unsqueeze(-1)).squeeze(-1)
    nll = -torch.log(true_p + cfg.delta)
    if cfg.pad_masking:
        keep = (targets != PAD).to(p.dtype)
    else:
        keep = torch.ones_like(nll)
    per_sentence = (nll * keep).sum(1) / keep.sum(1).clamp_min(1.0)
    return per_sentence.mean()


@dataclass
class BleuConfig:
    max_n: int = 4
    weights: Sequence[float] | None = None

    def __post_init__(self):
        if self.max_n < 1:
            raise ConfigurationError("max_n must be >= 1")
        if self.weights is None:
            self.weights = [1.0 / self.max_n] * self.max_n
        self.weights = [float(w) for w in self.weights]
        if len(self.weights) != self.max_n or min(self.weights) < 0:
            raise ConfigurationError("need max_n non-negative weights")
        if abs(sum(self.weights) - 1.0) > 1e-9:
            raise ConfigurationError("BLEU weights must sum to 1")

    @classmethod
    def single(cls, n: int, max_n: int = 4) -> "BleuConfig":
        """Weights concentrated on one n-gram order (the per-order BLEU-n)."""
        return cls(max_n, [1.0 if i == n - 1 else 0.0 for i in range(max_n)])


def _ngrams(tokens, n):
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def modified_precision(candidate, reference, n) -> float:
    cand = _ngrams(candidate, n)
    total = sum(cand.values())
    if total == 0:
        return 0.0
    ref = _ngrams(reference, n)
    return sum(min(c, ref[g]) for g, c in cand.items()) / total


def brevity_penalty(cand_len: int, ref_len: int) -> float:
    if cand_len == 0:
        return 0.0
    return 1.0 if cand_len > ref_len else math.exp(1.0 - ref_len / cand_len)


def bleu(candidate: Sequence[str], reference: Sequence[str], cfg: BleuConfig | None = None) -> float:
    """Sentence BLEU with clipped precisions. Orders with zero weight are ignored."""
    cfg = cfg or BleuConfig()
    candidate, reference = list(candidate), list(reference)
    if not candidate:
        return 0.0
    log_sum = 0.0
    for n, w in enumerate(cfg.weights, start=1):
        if w == 0:
            continue
        p = modified_precision(candidate, reference, n)
        if p == 0:
            return 0.0
        log_sum += w * math.log(p)
    return min(1.0, brevity_penalty(len(candidate), len(reference)) * math.exp(log_sum))


def cosine(u, v) -> float:
    u, v = np.asarray(u, dtype=np.float64), np.asarray(v, dtype=np.float64)
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0 or nv == 0:
        return 0.0
    return float(np.clip(u @ v / (nu * nv), -1.0, 1.0))


def sentence_similarity(input_sentence: str, output_sentence: str, embedder: Callable[[str], Sequence[float]]) -> float:
    try:
        a, b = embedder(input_sentence), embedder(output_sentence)
    except EmbedderUnavailable:
        raise
    except Exception as exc:
        raise EmbedderUnavailable(f"embedder unavailable: {exc}") from exc
    return cosine(a, b)


class TableEmbedder:
    """Sentence vector = mean of a word-embedding table's rows over its tokens.

    Used with the trained model's own input embedding so evaluation needs no
    external download. Specials are skipped; an empty sentence maps to zero.
    """

    def __init__(self, vocab: Vocabulary, table):
        self.vocab = vocab
        self.table = np.asarray(torch.as_tensor(table).detach().cpu().double())

    def __call__(self, sentence: str) -> np.ndarray:
        ids = [self.vocab.lookup(t) for t in split_words(sentence) if t not in SPECIAL_TOKENS]
        if not ids:
            return np.zeros(self.table.shape[1])
        return self.table[ids].mean(0)


class SentenceTransformerEmbedder:
    """Optional adapter around a pre-trained ``sentence_transformers`` model."""

    def __init__(self, model_name: str = "bert-base-nli-mean-tokens"):
        try:
            from sentence_transformers import SentenceTransformer
            self.model = SentenceTransformer(model_name)
        except Exception as exc:
            raise EmbedderUnavailable(f"embedder unavailable: {exc}") from exc

    def __call__(self, sentence: str):
        return self.model.encode([sentence])[0]


@dataclass
class MetricRow:
    model: str
    channel: str
    snr_db: float
    metric: str
    ngram: int | None
    value: float
    seed: int


@dataclass
class MetricReport:
    rows: list[MetricRow] = field(default_factory=list)

    def add(self, model, channel, snr_db, metric, ngram, value, seed):
        value = float(value)
        if metric == "bleu" and not 0.0 <= value <= 1.0:
            raise ContractViolation(f"BLEU value {value} outside [0, 1]")
        if metric == "ss" and not -1.0 <= value <= 1.0:
            raise ContractViolation(f"SS value {value} outside [-1, 1]")
        self.rows.append(MetricRow(model, channel, float(snr_db), metric, ngram, value, int(seed)))

    def extend(self, other: "MetricReport"):
        self.rows.extend(other.rows)

    def __len__(self):
        return len(self.rows)

    def select(self, metric=None, ngram=None, model=None) -> list[MetricRow]:
        return [r for r in self.rows
                if (metric is None or r.metric == metric)
                and (ngram is None or r.ngram == ngram)
                and (model is None or r.model == model)]

    def curve(self, metric="bleu", ngram=1, model=None) -> dict[float, float]:
        """Mean value per SNR over seeds."""
        acc: dict[float, list[float]] = {}
        for r in self.select(metric, ngram, model):
            acc.setdefault(r.snr_db, []).append(r.value)
        return {snr: float(np.mean(v)) for snr, v in sorted(acc.items())}

    def to_csv(self, path) -> None:
        with Path(path).open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(REPORT_HEADER)
            for r in self.rows:
                w.writerow([r.model, r.channel, repr(r.snr_db), r.metric,
                            "" if r.ngram is None else r.ngram, repr(r.value), r.seed])

    @classmethod
    def from_csv(cls, path) -> "MetricReport":
        report = cls()
        with Path(path).open(newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or tuple(header) != REPORT_HEADER:
                raise ContractViolation(f"{path}: expected header {','.join(REPORT_HEADER)}")
            for rec in reader:
                if not rec:
                    continue
                model, channel, snr, metric, ngram, value, seed = rec
                report.rows.append(MetricRow(model, channel, float(snr), metric,
                                             int(ngram) if ngram else None, float(value), int(seed)))
        return report


def corpus_bleu_mean(candidates: Iterable[Sequence[str]], references: Iterable[Sequence[str]],
                     cfg: BleuConfig) -> float:
    """Mean of sentence-level BLEU over aligned pairs."""
    scores = [bleu(c, r, cfg) for c, r in zip(candidates, references)]
    return float(np.mean(scores)) if scores else 0.0
