"""End-to-end transmitter/channel/receiver assembly for every architecture."""
from __future__ import annotations

import torch
import torch.nn as nn

from .baselines import build_cnn_ae, build_deepsc_codec, build_dsa_codec
from .channel import ChannelConfig, FadedSignal, normalize_power, transmit
from .config import ModelSpec
from .corpus import END, PAD, START
from .semantic import SemanticDecoder, SemanticEncoder, greedy_decode
from .turbo import Interleaver, TurboDecoder, TurboEncoder, make_interleaver


class SemanticSystem(nn.Module):
    """ids -> e -> x -> channel -> d -> word distributions.

    The four parameter groups are ``semantic_encoder``, ``channel_encoder``,
    ``channel_decoder`` and ``semantic_decoder``.
    """

    def __init__(self, spec: ModelSpec, vocab_size: int, semantic_encoder, channel_encoder,
                 channel_decoder, semantic_decoder, autoregressive: bool = True):
        super().__init__()
        self.spec = spec
        self.vocab_size = vocab_size
        self.semantic_encoder = semantic_encoder
        self.channel_encoder = channel_encoder
        self.channel_decoder = channel_decoder
        self.semantic_decoder = semantic_decoder
        self.autoregressive = autoregressive
        self.last_signal: FadedSignal | None = None

    def parameter_groups(self) -> dict[str, nn.Module]:
        return {"semantic_encoder": self.semantic_encoder, "channel_encoder": self.channel_encoder,
                "channel_decoder": self.channel_decoder, "semantic_decoder": self.semantic_decoder}

    def embedding_table(self) -> torch.Tensor:
        enc = self.semantic_encoder
        table = enc.embed.table if hasattr(enc, "embed") else enc.table
        return table.weight.detach()

    def transmit_block(self, ids: torch.Tensor) -> torch.Tensor:
        """Power-normalized channel input [B, L, 3*D2]."""
        return normalize_power(self.channel_encoder(self.semantic_encoder(ids)))

    def receive(self, ids, channel: ChannelConfig, generator=None) -> torch.Tensor:
        x = self.transmit_block(ids)
        signal = transmit(x, channel, generator, check_power=False)
        self.last_signal = signal
        return self.channel_decoder(signal.equalized)

    def forward(self, ids, channel: ChannelConfig, generator=None) -> torch.Tensor:
        """Teacher-forced word distributions [B, L, V] for the left-shifted targets."""
        d = self.receive(ids, channel, generator)
        return torch.softmax(self.semantic_decoder(d, ids), dim=-1)

    @torch.no_grad()
    def generate(self, ids, channel: ChannelConfig, generator=None) -> torch.Tensor:
        d = self.receive(ids, channel, generator)
        L = ids.shape[1]
        if self.autoregressive:
            return greedy_decode(self.semantic_decoder, d, L)
        pred = self.semantic_decoder(d).argmax(-1)
        out = torch.full_like(ids, PAD)
        out[:, 0] = START
        out[:, 1:] = pred[:, :-1]
        out[:, -1] = END
        seen_end = torch.cumsum((out == END).int(), dim=1)
        after = (seen_end - (out == END).int()) > 0
        return out.masked_fill(after, PAD)


def _transformers(spec: ModelSpec, vocab_size: int):
    kw = dict(d_model=spec.d_model, num_layers=spec.num_layers, num_heads=spec.num_heads,
              d_ff=spec.d_ff, max_len=spec.seq_len, dropout=spec.dropout)
    return SemanticEncoder(vocab_size, **kw), SemanticDecoder(vocab_size, **kw)


def build_turbo_codec(spec: ModelSpec):
    s = spec.interleaver_seed
    il1 = make_interleaver(spec.seq_len, 4 * s)
    il2 = make_interleaver(spec.seq_len, 4 * s + 1)
    if spec.tie_interleavers:
        il3, il4 = Interleaver(il1.perm.clone()), Interleaver(il2.perm.clone())
    else:
        il3 = make_interleaver(spec.seq_len, 4 * s + 2)
        il4 = make_interleaver(spec.seq_len, 4 * s + 3)
    enc = TurboEncoder(spec.d_model, spec.d_channel, spec.conv_channels, spec.conv_layers,
                       spec.kernel_size, interleavers=(il1, il2))
    dec = TurboDecoder(spec.d_model, spec.d_channel, spec.d_hidden, spec.d_extrinsic,
                       spec.turbo_iterations, spec.conv_layers, spec.kernel_size, interleavers=(il3, il4))
    return enc, dec


def build_model(spec: ModelSpec, vocab_size: int, seed: int | None = None) -> SemanticSystem:
    """Instantiate the architecture named by ``spec.architecture``.

    ``seed`` (if given) fixes the weight initialization.
    """
    spec.validate()
    if seed is not None:
        torch.manual_seed(seed)
    arch = spec.architecture
    if arch == "cnn-ae":
        parts = build_cnn_ae(spec, vocab_size)
        return SemanticSystem(spec, vocab_size, *parts, autoregressive=False)
    sem_enc, sem_dec = _transformers(spec, vocab_size)
    if arch == "turbo-dsa":
        chan_enc, chan_dec = build_turbo_codec(spec)
    elif arch == "deepsc":
        chan_enc, chan_dec = build_deepsc_codec(spec)
    else:
        chan_enc, chan_dec = build_dsa_codec(spec)
    return SemanticSystem(spec, vocab_size, sem_enc, chan_enc, chan_dec, sem_dec)
