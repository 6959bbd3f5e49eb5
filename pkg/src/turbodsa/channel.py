"""AWGN / Rician / Rayleigh channel for real-valued symbol blocks.

Consecutive real pairs on the last axis form one complex symbol. Signals
are normalized to unit power per complex symbol (0.5 per real dimension),
so the per-symbol noise variance is 10^(-snr_db/10). Fading draws and
noise are constants with respect to autograd; gradients flow through x.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import torch

from .errors import ConfigurationError, ContractViolation, DegenerateSignalError, UnnormalizedSignalWarning

FAMILIES = ("awgn", "rician", "rayleigh")


@dataclass
class ChannelConfig:
    family: str = "rician"
    snr_db: float = 2.0
    rician_k: float = 3.0
    seed: int = 0
    csi: str = "perfect"
    block_fading: bool = False

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigurationError(f"unknown channel family {self.family!r}")
        if not math.isfinite(self.snr_db):
            raise ConfigurationError("snr_db must be finite")
        if self.rician_k < 0:
            raise ConfigurationError("rician_k must be >= 0")
        if self.csi != "perfect":
            raise ConfigurationError("only perfect CSI is supported")

    @property
    def noise_variance(self) -> float:
        return 10.0 ** (-self.snr_db / 10.0)

    def with_snr(self, snr_db: float) -> "ChannelConfig":
        return ChannelConfig(self.family, snr_db, self.rician_k, self.seed, self.csi, self.block_fading)


@dataclass
class FadedSignal:
    received: torch.Tensor  # r = h x + n, real layout
    equalized: torch.Tensor  # r / h (zero-forcing with perfect CSI), real layout
    fading: torch.Tensor  # complex h, broadcastable to the complex block
    noise_variance: float


def normalize_power(x: torch.Tensor, return_scale: bool = False):
    """Scale each sample so its mean square per real dimension is 0.5."""
    flat = x.reshape(x.shape[0], -1)
    power = flat.pow(2).mean(dim=1)
    if not torch.isfinite(flat).all():
        raise ContractViolation("non-finite signal")
    if (power == 0).any():
        raise DegenerateSignalError("degenerate signal: all-zero block")
    scale = torch.sqrt(0.5 / power).view(-1, *([1] * (x.dim() - 1)))
    out = x * scale
    return (out, scale.detach().flatten()) if return_scale else out


def to_complex(x: torch.Tensor) -> torch.Tensor:
    if x.shape[-1] % 2:
        raise ContractViolation(f"last-axis width {x.shape[-1]} is odd")
    return torch.complex(x[..., 0::2], x[..., 1::2])


def to_real(z: torch.Tensor) -> torch.Tensor:
    return torch.stack([z.real, z.imag], dim=-1).flatten(-2)


def _complex_gaussian(shape, generator, dtype, device):
    """Circular complex Gaussian with unit total variance."""
    parts = torch.randn(*shape, 2, generator=generator, dtype=dtype, device=device) * math.sqrt(0.5)
    return torch.complex(parts[..., 0], parts[..., 1])


def draw_fading(shape, cfg: ChannelConfig, generator, dtype=torch.float32, device=None) -> torch.Tensor:
    """Complex fading coefficients with E|h|^2 = 1."""
    if cfg.family == "awgn":
        return torch.ones(shape, dtype=torch.complex64 if dtype == torch.float32 else torch.complex128,
                          device=device)
    scatter = _complex_gaussian(shape, generator, dtype, device)
    if cfg.family == "rayleigh":
        return scatter
    k = cfg.rician_k
    phi = torch.rand(shape, generator=generator, dtype=dtype, device=device) * (2 * math.pi)
    los = torch.polar(torch.full_like(phi, math.sqrt(k / (k + 1))), phi)
    return los + math.sqrt(1 / (k + 1)) * scatter


def make_generator(seed: int) -> torch.Generator:
    g = torch.Generator()
    g.manual_seed(int(seed))
    return g


def transmit(x: torch.Tensor, cfg: ChannelConfig, generator: torch.Generator | None = None,
             check_power: bool = True) -> FadedSignal:
    """Send a power-normalized real block through the configured channel."""
    if generator is None:
        generator = make_generator(cfg.seed)
    if check_power:
        p = float(x.detach().pow(2).mean())
        if not 0.45 <= p <= 0.55:
            warnings.warn(f"unnormalized signal: mean power {p:.4f} per real dimension",
                          UnnormalizedSignalWarning, stacklevel=2)
    z = to_complex(x)
    if cfg.block_fading:
        h_shape = (z.shape[0],) + (1,) * (z.dim() - 1)
    else:
        h_shape = tuple(z.shape)
    h = draw_fading(h_shape, cfg, generator, x.dtype, x.device)
    n = _complex_gaussian(tuple(z.shape), generator, x.dtype, x.device) * math.sqrt(cfg.noise_variance)
    r = h * z + n
    eq = r / h
    return FadedSignal(to_real(r), to_real(eq), h, cfg.noise_variance)


def measure_empirical_snr(x: torch.Tensor, r: torch.Tensor, h: torch.Tensor) -> float:
    """10 log10(E|h x|^2 / E|r - h x|^2), with +inf for a noiseless link."""
    hx = h * to_complex(x)
    noise = float((to_complex(r) - hx).abs().pow(2).mean())
    if noise == 0.0:
        return math.inf
    return 10.0 * math.log10(float(hx.abs().pow(2).mean()) / noise)
