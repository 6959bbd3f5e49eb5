"""Corpus ingestion: vocabularies, tokenization and shuffled batching."""
from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np
import torch

from .errors import ConfigurationError, CorpusError, InvalidTokenError

PAD, START, END, UNK = 0, 1, 2, 3
SPECIAL_TOKENS = ("<pad>", "<start>", "<end>", "<unk>")

_TOKEN_RE = re.compile(r"\w+|[^\w\s]")


def fixture_corpus_path() -> Path:
    """Path of the bundled ~500-sentence maritime-style corpus."""
    return Path(str(resources.files("turbodsa") / "data" / "maritime_fixture.txt"))


def split_words(sentence: str) -> list[str]:
    """Lowercase, detach punctuation, split on whitespace."""
    return _TOKEN_RE.findall(sentence.lower())


def normalize(sentence: str) -> str:
    return " ".join(split_words(sentence))


def read_corpus(path) -> list[str]:
    """One sentence per line; blank lines are skipped."""
    path = Path(path)
    with path.open(encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh]
    sentences = [ln for ln in lines if ln]
    if not sentences:
        raise CorpusError(f"empty corpus: {path}")
    return sentences


@dataclass
class Vocabulary:
    """Token <-> id map. Ids 0-3 are always PAD, START, END, UNK."""

    tokens: list[str]
    token_to_id: dict[str, int] = field(init=False, repr=False)

    def __post_init__(self):
        if tuple(self.tokens[:4]) != SPECIAL_TOKENS:
            raise ConfigurationError("vocabulary must start with the four special tokens")
        self.token_to_id = {t: i for i, t in enumerate(self.tokens)}
        if len(self.token_to_id) != len(self.tokens):
            raise ConfigurationError("duplicate tokens in vocabulary")

    @property
    def id_to_token(self) -> list[str]:
        return self.tokens

    @property
    def size(self) -> int:
        return len(self.tokens)

    def __len__(self):
        return len(self.tokens)

    def lookup(self, token: str) -> int:
        return self.token_to_id.get(token, UNK)

    def save(self, path) -> None:
        Path(path).write_text("\n".join(self.tokens) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path) -> "Vocabulary":
        lines = Path(path).read_text(encoding="utf-8").splitlines()
        return cls([ln for ln in lines if ln != ""])


def vocabulary_from_sentences(sentences: Sequence[str], min_freq: int = 1,
                              max_size: int | None = None) -> Vocabulary:
    counts = Counter(tok for s in sentences for tok in split_words(s))
    # descending frequency, ties alphabetical, so output does not depend on dict order
    kept = sorted((t for t, c in counts.items() if c >= min_freq), key=lambda t: (-counts[t], t))
    if max_size is not None:
        kept = kept[: max(0, max_size - len(SPECIAL_TOKENS))]
    return Vocabulary(list(SPECIAL_TOKENS) + kept)


def build_vocabulary(corpus_path, min_freq: int = 1, max_size: int | None = None) -> Vocabulary:
    """Build a frequency-ordered vocabulary from a one-sentence-per-line file.

    ``max_size`` caps the total size including the four specials.
    """
    if min_freq < 1:
        raise ConfigurationError("min_freq must be >= 1")
    return vocabulary_from_sentences(read_corpus(corpus_path), min_freq, max_size)


def tokenize(sentence: str, vocab: Vocabulary, max_len: int) -> tuple[np.ndarray, int]:
    """Map a sentence to a START/END wrapped, PAD-filled id row of width ``max_len``.

    Returns the row and its length (START and END included). Over-long
    sentences are truncated to ``max_len - 2`` words.
    """
    if max_len < 3:
        raise ConfigurationError("max_len must be >= 3")
    words = split_words(sentence)[: max_len - 2]
    row = np.full(max_len, PAD, dtype=np.int64)
    row[0] = START
    row[1 : 1 + len(words)] = [vocab.lookup(w) for w in words]
    row[1 + len(words)] = END
    return row, len(words) + 2


def detokenize(row, vocab: Vocabulary) -> str:
    words = []
    for i in np.asarray(row).tolist():
        if not 0 <= i < vocab.size:
            raise InvalidTokenError(f"invalid token id {i}")
        if i == END:
            break
        if i in (PAD, START):
            continue
        words.append(vocab.tokens[i])
    return " ".join(words)


@dataclass
class TokenBatch:
    ids: torch.Tensor  # [B, L] int64
    lengths: torch.Tensor  # [B]

    @property
    def pad_mask(self) -> torch.Tensor:
        return self.ids == PAD

    @property
    def targets(self) -> torch.Tensor:
        """Ids shifted one step left (PAD-filled): what the decoder predicts."""
        return torch.cat([self.ids[:, 1:], torch.full_like(self.ids[:, :1], PAD)], dim=1)

    def __len__(self):
        return self.ids.shape[0]

    @classmethod
    def from_ids(cls, ids) -> "TokenBatch":
        ids = torch.as_tensor(ids, dtype=torch.long)
        is_end = ids == END
        lengths = torch.where(is_end.any(1), is_end.int().argmax(1) + 1, (ids != PAD).sum(1))
        return cls(ids, lengths)


@dataclass
class TokenizedCorpus:
    ids: np.ndarray  # [N, L]
    lengths: np.ndarray  # [N]

    def __len__(self):
        return len(self.ids)

    def subset(self, index) -> "TokenizedCorpus":
        return TokenizedCorpus(self.ids[index], self.lengths[index])

    def batch(self, index=None) -> TokenBatch:
        if index is None:
            index = slice(None)
        return TokenBatch(torch.from_numpy(self.ids[index]).clone(),
                          torch.from_numpy(self.lengths[index]).clone())


def encode_corpus(sentences: Sequence[str], vocab: Vocabulary, max_len: int) -> TokenizedCorpus:
    rows, lengths = zip(*(tokenize(s, vocab, max_len) for s in sentences))
    return TokenizedCorpus(np.stack(rows), np.asarray(lengths, dtype=np.int64))


def train_val_split(n: int, val_fraction: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Seeded index split; at least one sample lands on each side when n >= 2."""
    if not 0.0 <= val_fraction < 1.0:
        raise ConfigurationError("val_fraction must be in [0, 1)")
    perm = np.random.default_rng(seed).permutation(n)
    n_val = int(round(n * val_fraction))
    if val_fraction > 0 and n >= 2:
        n_val = min(max(n_val, 1), n - 1)
    return np.sort(perm[n_val:]), np.sort(perm[:n_val])


def batch_iterator(dataset: TokenizedCorpus, batch_size: int = 128, seed: int = 0,
                   epoch: int = 0) -> Iterator[TokenBatch]:
    """One epoch of shuffled batches; the order depends only on (seed, epoch)."""
    if batch_size < 1:
        raise ConfigurationError("batch_size must be >= 1")
    if len(dataset) == 0:
        raise CorpusError("empty dataset")
    order = np.random.default_rng([seed, epoch]).permutation(len(dataset))
    for start in range(0, len(order), batch_size):
        yield dataset.batch(order[start : start + batch_size])
