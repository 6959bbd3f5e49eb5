"""End-to-end training, SNR-sweep evaluation and checkpoint I/O.

Checkpoint container layout (little endian)::

    8 bytes   magic  b"TDSACKPT"
    1 byte    format version (currently 1)
    32 bytes  sha256 of the payload
    8 bytes   payload length
    payload   torch.save() of a plain dict (tensors, lists, str, numbers)
"""
from __future__ import annotations

import copy
import csv
import hashlib
import io
import logging
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
import torch

from .channel import make_generator
from .config import ModelSpec, RunConfig, parse_snr_grid
from .corpus import (TokenizedCorpus, Vocabulary, batch_iterator, detokenize, encode_corpus,
                     fixture_corpus_path, read_corpus, split_words, train_val_split,
                     vocabulary_from_sentences)
from .errors import (CheckpointCorrupt, DivergenceError, FingerprintMismatch,
                     UnsupportedCheckpointVersion)
from .metrics import (BleuConfig, MetricReport, TableEmbedder, bleu,
                      cross_entropy_loss, sentence_similarity)
from .system import SemanticSystem, build_model

log = logging.getLogger(__name__)

MAGIC = b"TDSACKPT"
CHECKPOINT_VERSION = 1
_HEADER = struct.Struct("<8sB32sQ")


@dataclass
class Checkpoint:
    config: dict
    fingerprint: str
    vocab: list
    model_state: dict
    optimizer_state: dict | None = None
    epoch: int = 0
    rng_state: dict = field(default_factory=dict)
    loss_log: list = field(default_factory=list)

    def run_config(self) -> RunConfig:
        return RunConfig.from_dict(self.config)

    def vocabulary(self) -> Vocabulary:
        return Vocabulary(list(self.vocab))

    def build_model(self) -> SemanticSystem:
        spec = ModelSpec(**self.config["model"])
        model = build_model(spec, len(self.vocab))
        model.load_state_dict(self.model_state)
        return model

    def parameter_digest(self) -> str:
        h = hashlib.sha256()
        for k in sorted(self.model_state):
            h.update(k.encode())
            h.update(self.model_state[k].detach().cpu().contiguous().numpy().tobytes())
        return h.hexdigest()


@dataclass
class TrainResult:
    checkpoint: Checkpoint
    loss_log: list  # (epoch, split, loss)
    step_losses: list
    model: SemanticSystem

    def epoch_losses(self, split="train") -> list[float]:
        return [v for _, s, v in self.loss_log if s == split]


@dataclass
class PreparedData:
    vocab: Vocabulary
    train: TokenizedCorpus
    val: TokenizedCorpus
    all: TokenizedCorpus

    def split(self, name: str) -> TokenizedCorpus:
        return {"train": self.train, "val": self.val, "all": self.all}[name]


def prepare_data(cfg: RunConfig, vocab: Vocabulary | None = None) -> PreparedData:
    path = cfg.corpus.path or fixture_corpus_path()
    sentences = read_corpus(path)
    if vocab is None:
        vocab = vocabulary_from_sentences(sentences, cfg.corpus.min_freq, cfg.model.max_vocab)
    data = encode_corpus(sentences, vocab, cfg.model.seq_len)
    tr, va = train_val_split(len(data), cfg.corpus.val_fraction, cfg.corpus.split_seed)
    val = data.subset(va) if len(va) else data.subset(tr)
    return PreparedData(vocab, data.subset(tr), val, data)


def _derive_seed(*parts) -> int:
    return int(np.random.SeedSequence([int(p) for p in parts]).generate_state(1)[0])


def _snr_key(snr_db: float) -> int:
    return int(round(snr_db * 1000)) + 1_000_000


@torch.no_grad()
def validation_loss(model: SemanticSystem, data: TokenizedCorpus, cfg: RunConfig, seed: int,
                    snr_db: float | None = None, batch_size: int = 256,
                    iterations: int | None = None) -> float:
    """Mean training loss over ``data`` with a fixed channel draw (no gradient)."""
    snr = cfg.training.train_snr_db if snr_db is None else snr_db
    channel = cfg.channel.make(snr, seed)
    gen = make_generator(_derive_seed(seed, 7, _snr_key(snr)))
    was_training = model.training
    model.eval()
    dec = model.channel_decoder
    saved_T = getattr(dec, "iterations", None)
    if iterations is not None and saved_T is not None:
        dec.iterations = iterations
    try:
        total, n = 0.0, 0
        for start in range(0, len(data), batch_size):
            batch = data.batch(slice(start, start + batch_size))
            p = model(batch.ids, channel, gen)
            total += float(cross_entropy_loss(p, batch.targets)) * len(batch)
            n += len(batch)
    finally:
        if saved_T is not None:
            dec.iterations = saved_T
        model.train(was_training)
    return total / n


def _converged(losses: list[float], tol: float, window: int) -> bool:
    if len(losses) <= window:
        return False
    ref = losses[-1 - window]
    return abs(losses[-1] - ref) / max(abs(ref), 1e-12) < tol


def train(cfg: RunConfig, seed: int | None = None, resume: Checkpoint | None = None,
          out_dir=None, progress: Callable[[int, float, float], None] | None = None) -> TrainResult:
    """Jointly optimize all four parameter groups through the simulated channel.

    Stops at ``training.epochs`` or when the per-epoch training loss changes
    by less than ``convergence_tol`` (relative) over ``convergence_window``
    epochs. Writes ``checkpoint.tdsa`` and ``loss.csv`` when ``out_dir`` is
    given. A non-finite loss raises DivergenceError carrying the last good
    checkpoint.
    """
    cfg = copy.deepcopy(cfg).validate()
    tc = cfg.training
    seed = tc.seed if seed is None else int(seed)
    tc.seed = seed
    data = prepare_data(cfg, resume.vocabulary() if resume is not None else None)

    torch.manual_seed(seed)
    model = build_model(cfg.model, data.vocab.size)
    opt = torch.optim.Adam(model.parameters(), lr=tc.learning_rate)
    gen = make_generator(_derive_seed(seed, 1))
    start_epoch = 0
    loss_log: list = []
    if resume is not None:
        if resume.fingerprint != cfg.fingerprint():
            raise FingerprintMismatch("config fingerprint mismatch")
        model.load_state_dict(resume.model_state)
        if resume.optimizer_state is not None:
            opt.load_state_dict(resume.optimizer_state)
        if "torch" in resume.rng_state:
            torch.set_rng_state(resume.rng_state["torch"])
        if "channel" in resume.rng_state:
            gen.set_state(resume.rng_state["channel"])
        start_epoch = resume.epoch
        loss_log = [tuple(r) for r in resume.loss_log]

    def snapshot(epoch) -> Checkpoint:
        return Checkpoint(cfg.to_dict(), cfg.fingerprint(), list(data.vocab.tokens),
                          copy.deepcopy(model.state_dict()), copy.deepcopy(opt.state_dict()), epoch,
                          {"torch": torch.get_rng_state(), "channel": gen.get_state()},
                          [list(r) for r in loss_log])

    last_good = snapshot(start_epoch) if resume is not None else None
    train_curve = [v for _, s, v in loss_log if s == "train"]
    step_losses: list[float] = []
    channel = cfg.channel.make(tc.train_snr_db, seed)
    epoch = start_epoch
    for epoch in range(start_epoch + 1, start_epoch + tc.epochs + 1):
        model.train()
        batch_losses = []
        for batch in batch_iterator(data.train, tc.batch_size, seed, epoch):
            p = model(batch.ids, channel, gen)
            loss = cross_entropy_loss(p, batch.targets)
            if not torch.isfinite(loss):
                raise DivergenceError(f"divergence: non-finite loss at epoch {epoch}", last_good)
            opt.zero_grad()
            loss.backward()
            if tc.grad_clip:
                torch.nn.utils.clip_grad_norm_(model.parameters(), tc.grad_clip)
            opt.step()
            batch_losses.append(loss.item())
            step_losses.append(loss.item())
        train_loss = float(np.mean(batch_losses))
        val_loss = validation_loss(model, data.val, cfg, seed)
        loss_log += [(epoch, "train", train_loss), (epoch, "val", val_loss)]
        train_curve.append(train_loss)
        log.info("epoch %d train %.5f val %.5f", epoch, train_loss, val_loss)
        if progress is not None:
            progress(epoch, train_loss, val_loss)
        last_good = snapshot(epoch)
        if _converged(train_curve, tc.convergence_tol, tc.convergence_window):
            log.info("converged at epoch %d", epoch)
            break

    ckpt = last_good if last_good is not None else snapshot(epoch)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        save_checkpoint(ckpt, out / "checkpoint.tdsa")
        write_loss_log(loss_log, out / "loss.csv")
    return TrainResult(ckpt, loss_log, step_losses, model)


def write_loss_log(rows, path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["epoch", "split", "loss"])
        for epoch, split, loss in rows:
            w.writerow([epoch, split, repr(float(loss))])


def evaluate(cfg: RunConfig, checkpoint: Checkpoint, snr_list=None, seeds=None, metrics=None,
             embedder=None, split: str | None = None, model_id: str | None = None) -> MetricReport:
    """Sweep test SNRs with greedy decoding; mean BLEU-1..N and SS per (SNR, seed).

    Parameters are never modified. Each (SNR, seed) point uses its own
    channel RNG stream, so results do not depend on sweep order.
    """
    if checkpoint.fingerprint != cfg.fingerprint():
        raise FingerprintMismatch("config fingerprint mismatch")
    ev = cfg.evaluation
    snr_list = parse_snr_grid(ev.snr_grid) if snr_list is None else [float(s) for s in snr_list]
    seeds = list(ev.seeds) if seeds is None else list(seeds)
    metrics = list(ev.metrics) if metrics is None else list(metrics)
    vocab = checkpoint.vocabulary()
    data = prepare_data(cfg, vocab).split(split or ev.split)
    model = checkpoint.build_model().eval()
    if embedder is None and "ss" in metrics:
        embedder = TableEmbedder(vocab, model.embedding_table())
    model_id = model_id or cfg.model.architecture
    references = [detokenize(row, vocab) for row in data.ids]
    bleu_cfgs = [BleuConfig.single(n, ev.max_ngram) for n in range(1, ev.max_ngram + 1)]

    report = MetricReport()
    for seed in seeds:
        for snr in snr_list:
            channel = cfg.channel.make(snr, seed)
            gen = make_generator(_derive_seed(seed, 3, _snr_key(snr)))
            outputs = []
            for start in range(0, len(data), ev.batch_size):
                ids = data.batch(slice(start, start + ev.batch_size)).ids
                outputs += [detokenize(row, vocab) for row in model.generate(ids, channel, gen)]
            if "bleu" in metrics:
                for n, bc in enumerate(bleu_cfgs, start=1):
                    scores = [bleu(split_words(o), split_words(r), bc) for o, r in zip(outputs, references)]
                    report.add(model_id, cfg.channel.family, snr, "bleu", n, np.mean(scores), seed)
            if "ss" in metrics:
                scores = [sentence_similarity(r, o, embedder) for o, r in zip(outputs, references)]
                report.add(model_id, cfg.channel.family, snr, "ss", None, np.mean(scores), seed)
    return report


def save_checkpoint(ckpt: Checkpoint, path) -> None:
    buf = io.BytesIO()
    torch.save({"config": ckpt.config, "fingerprint": ckpt.fingerprint, "vocab": list(ckpt.vocab),
                "model_state": ckpt.model_state, "optimizer_state": ckpt.optimizer_state,
                "epoch": ckpt.epoch, "rng_state": ckpt.rng_state, "loss_log": ckpt.loss_log}, buf)
    payload = buf.getvalue()
    header = _HEADER.pack(MAGIC, CHECKPOINT_VERSION, hashlib.sha256(payload).digest(), len(payload))
    Path(path).write_bytes(header + payload)


def load_checkpoint(path) -> Checkpoint:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise CheckpointCorrupt(f"checkpoint corrupt: {path} is truncated")
    magic, version, digest, length = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise CheckpointCorrupt(f"checkpoint corrupt: bad magic in {path}")
    if version != CHECKPOINT_VERSION:
        raise UnsupportedCheckpointVersion(f"unsupported checkpoint version {version}")
    payload = raw[_HEADER.size:]
    if len(payload) != length or hashlib.sha256(payload).digest() != digest:
        raise CheckpointCorrupt(f"checkpoint corrupt: payload of {path} fails integrity check")
    try:
        d = torch.load(io.BytesIO(payload), map_location="cpu", weights_only=True)
    except Exception as exc:  # pragma: no cover - hash already guards this
        raise CheckpointCorrupt(f"checkpoint corrupt: {exc}") from exc
    return Checkpoint(**d)
