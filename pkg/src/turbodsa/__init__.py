"""Turbo-structured deep semantic autoencoder for text over fading channels."""

from .corpus import PAD, START, END, UNK, Vocabulary, TokenBatch, build_vocabulary, tokenize, detokenize
from .channel import ChannelConfig, transmit, normalize_power
from .config import RunConfig, ModelSpec, load_config
from .metrics import bleu, cross_entropy_loss, sentence_similarity, MetricReport
from .system import SemanticSystem, build_model
from .training import train, evaluate, save_checkpoint, load_checkpoint

__all__ = [
    "PAD", "START", "END", "UNK", "Vocabulary", "TokenBatch", "build_vocabulary", "tokenize", "detokenize",
    "ChannelConfig", "transmit", "normalize_power", "RunConfig", "ModelSpec", "load_config",
    "bleu", "cross_entropy_loss", "sentence_similarity", "MetricReport", "SemanticSystem", "build_model",
    "train", "evaluate", "save_checkpoint", "load_checkpoint",
]
__version__ = "0.1.0"
