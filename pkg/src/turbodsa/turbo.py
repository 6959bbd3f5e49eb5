"""Turbo-structured neural channel codec.

Encoder: a systematic branch plus two parity branches fed with interleaved
copies of the semantic vectors, concatenated along the feature axis.
Decoder: forward and backward conv decoders exchanging a narrow extrinsic
stream through interleavers for a fixed number of iterations.

All interleavers permute the sequence axis (dim 1) only.
"""
from __future__ import annotations

import numpy as np
import torch
import torch.nn as nn

from .errors import ConfigurationError, ContractViolation


class Interleaver(nn.Module):
    """Fixed permutation of the sequence axis. ``forward(x, inverse=True)`` undoes it."""

    def __init__(self, permutation):
        super().__init__()
        perm = torch.as_tensor(np.asarray(permutation), dtype=torch.long)
        if sorted(perm.tolist()) != list(range(len(perm))):
            raise ConfigurationError("not a permutation")
        self.register_buffer("perm", perm)
        self.register_buffer("inverse_perm", torch.argsort(perm))

    @property
    def length(self) -> int:
        return len(self.perm)

    def forward(self, x, inverse: bool = False):
        if x.shape[1] != self.length:
            raise ContractViolation(f"sequence length {x.shape[1]} != interleaver length {self.length}")
        return x[:, self.inverse_perm if inverse else self.perm]

    def apply(self, x):
        return self(x)

    def invert(self, x):
        return self(x, inverse=True)


def make_interleaver(length: int, seed: int) -> Interleaver:
    if length < 1:
        raise ConfigurationError("interleaver length must be >= 1")
    return Interleaver(np.random.default_rng(seed).permutation(length))


class Transpose(nn.Module):
    def forward(self, x):
        return x.transpose(1, 2)


def conv_stack(in_dim: int, channels: int, out_dim: int, num_layers: int = 2,
               kernel_size: int = 5) -> nn.Sequential:
    """[B, L, in_dim] -> [B, L, out_dim] through same-padded Conv1d + ELU layers."""
    if num_layers < 1:
        raise ConfigurationError("conv stack needs at least one layer")
    if kernel_size % 2 == 0:
        raise ConfigurationError("kernel_size must be odd for same padding")
    widths = [in_dim] + [channels] * (num_layers - 1) + [out_dim]
    layers: list[nn.Module] = [Transpose()]
    for a, b in zip(widths[:-1], widths[1:]):
        layers += [nn.Conv1d(a, b, kernel_size, padding=kernel_size // 2), nn.ELU()]
    layers.append(Transpose())
    return nn.Sequential(*layers)


class EncoderBranch(nn.Module):
    """Conv stack to D2 followed by a D2 -> D2 linear head."""

    def __init__(self, d_in, d_out, channels=100, num_layers=2, kernel_size=5):
        super().__init__()
        self.convs = conv_stack(d_in, channels, d_out, num_layers, kernel_size)
        self.head = nn.Linear(d_out, d_out)

    def forward(self, x):
        return self.head(self.convs(x))


class TurboEncoder(nn.Module):
    def __init__(self, d_model=128, d_channel=16, channels=100, num_layers=2, kernel_size=5,
                 interleavers=None, seq_len=30, seed=0):
        super().__init__()
        self.d_channel = d_channel
        self.main = EncoderBranch(d_model, d_channel, channels, num_layers, kernel_size)
        self.component1 = EncoderBranch(d_model, d_channel, channels, num_layers, kernel_size)
        self.component2 = EncoderBranch(d_model, d_channel, channels, num_layers, kernel_size)
        if interleavers is None:
            interleavers = (make_interleaver(seq_len, 4 * seed), make_interleaver(seq_len, 4 * seed + 1))
        self.interleaver1, self.interleaver2 = interleavers

    def forward(self, e):
        if not torch.isfinite(e).all():
            raise ContractViolation("non-finite semantic vectors")
        x_sys = self.main(e)
        x_par1 = self.component1(self.interleaver1(e))
        x_par2 = self.component2(self.interleaver2(e))
        return torch.cat([x_sys, x_par1, x_par2], dim=-1)


def split_received(r: torch.Tensor, d_channel: int | None = None):
    """Split [B, L, 3*D2] into (sys, par1, par2), each [B, L, D2]."""
    width = r.shape[-1]
    if width % 3 or (d_channel is not None and width != 3 * d_channel):
        raise ContractViolation(f"received width {width} is not 3*D2")
    return tuple(torch.split(r, width // 3, dim=-1))


class BackwardHead(nn.Module):
    """Backward decoder: shared first conv layers, then a width-selecting last layer.

    Iterating passes end at D3 -> linear -> D4 (extrinsic); the final pass
    ends at D1 -> linear -> D1 (features handed to the semantic decoder).
    """

    def __init__(self, d_in, d_hidden, d_extrinsic, d_model, num_layers=2, kernel_size=5):
        super().__init__()
        k = kernel_size
        trunk = [Transpose()]
        width = d_in
        for _ in range(num_layers - 1):
            trunk += [nn.Conv1d(width, d_hidden, k, padding=k // 2), nn.ELU()]
            width = d_hidden
        self.trunk = nn.Sequential(*trunk)
        self.convs = nn.Sequential(nn.Conv1d(width, d_hidden, k, padding=k // 2), nn.ELU(), Transpose())
        self.convs_final = nn.Sequential(nn.Conv1d(width, d_model, k, padding=k // 2), nn.ELU(), Transpose())
        self.head = nn.Linear(d_hidden, d_extrinsic)
        self.head_final = nn.Linear(d_model, d_model)

    def forward(self, x, final: bool = False):
        h = self.trunk(x)
        if final:
            return self.head_final(self.convs_final(h))
        return self.head(self.convs(h))


class ForwardHead(nn.Module):
    def __init__(self, d_in, d_hidden, d_extrinsic, num_layers=2, kernel_size=5):
        super().__init__()
        self.convs = conv_stack(d_in, d_hidden, d_hidden, num_layers, kernel_size)
        self.head = nn.Linear(d_hidden, d_extrinsic)

    def forward(self, x):
        return self.head(self.convs(x))


class TurboDecoder(nn.Module):
    """Iterative decoder: received block [B, L, 3*D2] -> d [B, L, D1]."""

    def __init__(self, d_model=128, d_channel=16, d_hidden=100, d_extrinsic=5, iterations=6,
                 num_layers=2, kernel_size=5, interleavers=None, seq_len=30, seed=0):
        super().__init__()
        if iterations < 1:
            raise ConfigurationError("turbo iterations must be >= 1")
        self.iterations = iterations
        self.d_channel = d_channel
        self.d_extrinsic = d_extrinsic
        d_in = d_extrinsic + 2 * d_channel
        self.forward_decoder = ForwardHead(d_in, d_hidden, d_extrinsic, num_layers, kernel_size)
        self.backward_decoder = BackwardHead(d_in, d_hidden, d_extrinsic, d_model, num_layers, kernel_size)
        if interleavers is None:
            interleavers = (make_interleaver(seq_len, 4 * seed + 2), make_interleaver(seq_len, 4 * seed + 3))
        self.interleaver3, self.interleaver4 = interleavers

    def decode_forward(self, prior_int1, sys_int1, par1):
        return self.forward_decoder(torch.cat([prior_int1, sys_int1, par1], dim=-1))

    def decode_backward(self, prior_int2, sys_int2, par2, final: bool = False):
        return self.backward_decoder(torch.cat([prior_int2, sys_int2, par2], dim=-1), final=final)

    def forward(self, r, iterations: int | None = None):
        T = self.iterations if iterations is None else iterations
        if T < 1:
            raise ConfigurationError("turbo iterations must be >= 1")
        r_sys, r_par1, r_par2 = split_received(r, self.d_channel)
        il3, il4 = self.interleaver3, self.interleaver4
        sys_int1, sys_int2 = il3(r_sys), il4(r_sys)
        prior = r.new_zeros(r.shape[0], r.shape[1], self.d_extrinsic)
        for t in range(T):
            final = t == T - 1
            de1 = self.decode_forward(il3(prior), sys_int1, r_par1)
            prior_int2 = il4(il3(de1, inverse=True))
            de2 = self.decode_backward(prior_int2, sys_int2, r_par2, final=final)
            out = il4(de2, inverse=True)
            if final:
                return out
            prior = out
