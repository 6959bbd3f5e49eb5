"""Transformer semantic encoder/decoder.

Post-norm layers (add, then LayerNorm) with fixed sinusoidal positions.
Attention masks use ``True`` for *blocked* positions.
"""
from __future__ import annotations

import math

import torch
import torch.nn as nn
import torch.nn.functional as F

from .corpus import PAD, START, END
from .errors import ContractViolation, InvalidTokenError


def sinusoidal_positions(length: int, d_model: int) -> torch.Tensor:
    pos = torch.arange(length, dtype=torch.float64).unsqueeze(1)
    div = torch.pow(10000.0, torch.arange(0, d_model, 2, dtype=torch.float64) / d_model)
    table = torch.zeros(length, d_model, dtype=torch.float64)
    table[:, 0::2] = torch.sin(pos / div)
    table[:, 1::2] = torch.cos(pos / div)[:, : d_model // 2]
    return table.float()


def causal_mask(length: int, device=None) -> torch.Tensor:
    """[L, L] mask blocking attention to future positions."""
    return torch.triu(torch.ones(length, length, dtype=torch.bool, device=device), diagonal=1)


def scaled_dot_product(q, k, v, mask=None):
    """softmax(q k^T / sqrt(d_k)) v over the last two axes.

    ``mask`` broadcasts against the score tensor [..., Lq, Lk]. Returns the
    attended values and the attention weights.
    """
    scores = q @ k.transpose(-2, -1) / math.sqrt(q.shape[-1])
    if mask is not None:
        scores = scores.masked_fill(mask, float("-inf"))
    weights = torch.softmax(scores, dim=-1)
    return weights @ v, weights


class MultiHeadAttention(nn.Module):
    """Concatenated per-head attention followed by an output projection.

    The per-head projections W^q_i, W^k_i, W^v_i are stored stacked as the
    column blocks of one [D, D] matrix each (head i owns columns
    ``i*d_k:(i+1)*d_k``). No biases.
    """

    def __init__(self, d_model: int, num_heads: int):
        super().__init__()
        if d_model % num_heads:
            raise ContractViolation(f"num_heads={num_heads} does not divide d_model={d_model}")
        self.d_model = d_model
        self.num_heads = num_heads
        self.d_k = d_model // num_heads
        self.w_q = nn.Linear(d_model, d_model, bias=False)
        self.w_k = nn.Linear(d_model, d_model, bias=False)
        self.w_v = nn.Linear(d_model, d_model, bias=False)
        self.w_o = nn.Linear(d_model, d_model, bias=False)
        self.last_weights = None

    def _heads(self, x):
        b, n, _ = x.shape
        return x.view(b, n, self.num_heads, self.d_k).transpose(1, 2)

    def forward(self, query, key=None, value=None, mask=None):
        key = query if key is None else key
        value = key if value is None else value
        if query.shape[-1] != self.d_model or key.shape[-1] != self.d_model:
            raise ContractViolation(f"expected feature width {self.d_model}")
        if mask is not None and mask.dim() == 3:
            mask = mask.unsqueeze(1)  # [B, 1, Lq, Lk] broadcasts over heads
        z, w = scaled_dot_product(self._heads(self.w_q(query)), self._heads(self.w_k(key)),
                                  self._heads(self.w_v(value)), mask)
        self.last_weights = w.detach()
        b, _, n, _ = z.shape
        return self.w_o(z.transpose(1, 2).reshape(b, n, self.d_model))


class FeedForward(nn.Module):
    """Position-wise max(0, x W1 + b1) W2 + b2."""

    def __init__(self, d_model: int, d_ff: int):
        super().__init__()
        self.linear1 = nn.Linear(d_model, d_ff)
        self.linear2 = nn.Linear(d_ff, d_model)

    def forward(self, x):
        return self.linear2(F.relu(self.linear1(x)))


class EncoderLayer(nn.Module):
    def __init__(self, d_model, num_heads, d_ff, dropout=0.0):
        super().__init__()
        self.attn = MultiHeadAttention(d_model, num_heads)
        self.ff = FeedForward(d_model, d_ff)
        self.norm1 = nn.LayerNorm(d_model)
        self.norm2 = nn.LayerNorm(d_model)
        self.drop = nn.Dropout(dropout)

    def forward(self, x, mask=None):
        x = self.norm1(x + self.drop(self.attn(x, mask=mask)))
        return self.norm2(x + self.drop(self.ff(x)))


class DecoderLayer(nn.Module):
    def __init__(self, d_model, num_heads, d_ff, dropout=0.0):
        super().__init__()
        self.self_attn = MultiHeadAttention(d_model, num_heads)
        self.cross_attn = MultiHeadAttention(d_model, num_heads)
        self.ff = FeedForward(d_model, d_ff)
        self.norm1 = nn.LayerNorm(d_model)
        self.norm2 = nn.LayerNorm(d_model)
        self.norm3 = nn.LayerNorm(d_model)
        self.drop = nn.Dropout(dropout)

    def forward(self, x, memory, self_mask=None, memory_mask=None):
        x = self.norm1(x + self.drop(self.self_attn(x, mask=self_mask)))
        x = self.norm2(x + self.drop(self.cross_attn(x, memory, memory, mask=memory_mask)))
        return self.norm3(x + self.drop(self.ff(x)))


class TokenEmbedding(nn.Module):
    """Embedding lookup plus sinusoidal position table."""

    def __init__(self, vocab_size: int, d_model: int, max_len: int):
        super().__init__()
        self.vocab_size = vocab_size
        self.table = nn.Embedding(vocab_size, d_model)
        self.register_buffer("positions", sinusoidal_positions(max_len, d_model), persistent=False)

    def forward(self, ids):
        if ids.numel() and (int(ids.max()) >= self.vocab_size or int(ids.min()) < 0):
            raise InvalidTokenError("invalid token id")
        if ids.shape[1] > self.positions.shape[0]:
            raise ContractViolation(f"sequence length {ids.shape[1]} exceeds {self.positions.shape[0]}")
        return self.table(ids) + self.positions[: ids.shape[1]].to(self.table.weight.dtype)


class SemanticEncoder(nn.Module):
    """Token ids [B, L] -> semantic vectors e [B, L, D1]."""

    def __init__(self, vocab_size, d_model=128, num_layers=3, num_heads=8, d_ff=512,
                 max_len=30, dropout=0.0):
        super().__init__()
        self.embed = TokenEmbedding(vocab_size, d_model, max_len)
        self.layers = nn.ModuleList(
            EncoderLayer(d_model, num_heads, d_ff, dropout) for _ in range(num_layers))

    def forward(self, ids):
        x = self.embed(ids)
        mask = (ids == PAD)[:, None, :]  # block PAD keys
        for layer in self.layers:
            x = layer(x, mask)
        return x


class SemanticDecoder(nn.Module):
    """Recovered features d [B, L, D1] + shifted targets -> logits [B, L, D5]."""

    def __init__(self, vocab_size, d_model=128, num_layers=3, num_heads=8, d_ff=512,
                 max_len=30, dropout=0.0):
        super().__init__()
        self.embed = TokenEmbedding(vocab_size, d_model, max_len)
        self.layers = nn.ModuleList(
            DecoderLayer(d_model, num_heads, d_ff, dropout) for _ in range(num_layers))
        self.out = nn.Linear(d_model, vocab_size)

    def forward(self, d, shifted_ids):
        if not torch.isfinite(d).all():
            raise ContractViolation("non-finite decoder input")
        x = self.embed(shifted_ids)
        mask = causal_mask(shifted_ids.shape[1], shifted_ids.device)
        for layer in self.layers:
            x = layer(x, d, self_mask=mask)
        return self.out(x)

    def probabilities(self, d, shifted_ids):
        return torch.softmax(self(d, shifted_ids), dim=-1)


@torch.no_grad()
def greedy_decode(decoder: SemanticDecoder, d: torch.Tensor, max_len: int) -> torch.Tensor:
    """Autoregressive argmax decoding from START.

    Each row stops at its first END; the remainder is PAD. Ties go to the
    lowest token id.
    """
    b = d.shape[0]
    ids = torch.full((b, max_len), PAD, dtype=torch.long, device=d.device)
    ids[:, 0] = START
    done = torch.zeros(b, dtype=torch.bool, device=d.device)
    for t in range(1, max_len):
        logits = decoder(d, ids[:, :t])[:, -1]
        nxt = logits.argmax(-1)
        if t == max_len - 1:
            nxt = torch.full_like(nxt, END)
        nxt = torch.where(done, torch.full_like(nxt, PAD), nxt)
        ids[:, t] = nxt
        done |= nxt == END
        if done.all():
            break
    return ids
