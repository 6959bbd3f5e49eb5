"""Benchmark codecs sharing the Turbo-DSA channel budget of 3*D2 reals per position.

* DeepSC-style: position-wise dense channel encoder/decoder.
* DSA-style: 1-D convolutional channel encoder/decoder, no iteration.
* CNN-AE: convolutional text encoder/decoder replacing the transformers.
"""
from __future__ import annotations

import torch.nn as nn

from .errors import ConfigurationError
from .turbo import conv_stack


def dense_stack(d_in: int, d_hidden: int, d_out: int, num_layers: int) -> nn.Sequential:
    if num_layers < 1:
        raise ConfigurationError("dense stack needs at least one layer")
    widths = [d_in] + [d_hidden] * (num_layers - 1) + [d_out]
    layers: list[nn.Module] = []
    for i, (a, b) in enumerate(zip(widths[:-1], widths[1:])):
        layers.append(nn.Linear(a, b))
        if i < num_layers - 1:
            layers.append(nn.ReLU())
    return nn.Sequential(*layers)


class ConvCodecHalf(nn.Module):
    """Conv stack followed by a linear head (kernel_size=1 makes it position-wise)."""

    def __init__(self, d_in, d_out, channels, num_layers, kernel_size):
        super().__init__()
        self.convs = conv_stack(d_in, channels, channels, num_layers, kernel_size)
        self.head = nn.Linear(channels, d_out)

    def forward(self, x):
        return self.head(self.convs(x))


def build_deepsc_codec(spec):
    """(channel encoder, channel decoder) made of position-wise dense layers."""
    if spec.d_model < 1 or spec.d_channel < 1:
        raise ConfigurationError("invalid dimensions")
    width = spec.channel_width
    enc = dense_stack(spec.d_model, spec.dense_hidden, width, spec.dense_layers)
    dec = dense_stack(width, spec.dense_hidden, spec.d_model, spec.dense_layers)
    return enc, dec


def build_dsa_codec(spec):
    """(channel encoder, channel decoder) made of 1-D convolutions along the sentence."""
    if spec.d_model < 1 or spec.d_channel < 1:
        raise ConfigurationError("invalid dimensions")
    width = spec.channel_width
    enc = ConvCodecHalf(spec.d_model, width, spec.conv_channels, spec.conv_layers, spec.kernel_size)
    dec = ConvCodecHalf(width, spec.d_model, spec.conv_channels, spec.conv_layers, spec.kernel_size)
    return enc, dec


class CNNTextEncoder(nn.Module):
    def __init__(self, vocab_size, d_model, channels, num_layers, kernel_size):
        super().__init__()
        self.table = nn.Embedding(vocab_size, d_model)
        self.convs = conv_stack(d_model, channels, d_model, num_layers, kernel_size)

    def forward(self, ids):
        return self.convs(self.table(ids))


class CNNTextDecoder(nn.Module):
    """Non-autoregressive: predicts every target position at once from d alone."""

    def __init__(self, vocab_size, d_model, channels, num_layers, kernel_size):
        super().__init__()
        self.convs = conv_stack(d_model, channels, channels, num_layers, kernel_size)
        self.out = nn.Linear(channels, vocab_size)

    def forward(self, d, shifted_ids=None):
        return self.out(self.convs(d))


def build_cnn_ae(spec, vocab_size: int):
    """(text encoder, channel encoder, channel decoder, text decoder) for CNN-AE.

    ``cnn_ae_layers`` conv layers on each side, split evenly between the
    text part and the channel part.
    """
    if spec.cnn_ae_layers < 2:
        raise ConfigurationError("cnn_ae_layers must be >= 2")
    text_layers = spec.cnn_ae_layers // 2
    chan_layers = spec.cnn_ae_layers - text_layers
    k, c = spec.kernel_size, spec.conv_channels
    text_enc = CNNTextEncoder(vocab_size, spec.d_model, c, text_layers, k)
    chan_enc = ConvCodecHalf(spec.d_model, spec.channel_width, c, chan_layers, k)
    chan_dec = ConvCodecHalf(spec.channel_width, spec.d_model, c, chan_layers, k)
    text_dec = CNNTextDecoder(vocab_size, spec.d_model, c, text_layers, k)
    return text_enc, chan_enc, chan_dec, text_dec
