"""Shared config builders for tests."""
from pathlib import Path

from turbodsa.config import RunConfig
from turbodsa.corpus import fixture_corpus_path, read_corpus

TINY_SENTENCES = [
    "the ship is in the port", "keep clear of the port", "fog in the north", "wind ten knots",
    "the ship turns north", "port is clear", "ten ships in fog", "north wind is strong",
    "keep the ship clear", "the wind turns", "strong fog ahead", "ships ahead",
]

# desk-scale Turbo-DSA used by convergence checks and the acceptance suite
DESK_MODEL = {"architecture": "turbo-dsa", "d_model": 32, "num_layers": 2, "num_heads": 4, "d_ff": 128,
              "turbo_iterations": 3, "dropout": 0.1}
DESK_TRAINING = {"learning_rate": 1e-3, "batch_size": 32, "epochs": 200, "convergence_tol": 0.0,
                 "grad_clip": 1.0}


def write_corpus(directory, sentences) -> str:
    path = Path(directory) / "corpus.txt"
    path.write_text("\n".join(sentences) + "\n", encoding="utf-8")
    return str(path)


def smoke_corpus(directory, n=50) -> str:
    return write_corpus(directory, read_corpus(fixture_corpus_path())[:n])


def tiny_config(directory, **model) -> RunConfig:
    m = {"d_model": 8, "num_layers": 1, "num_heads": 2, "d_ff": 16, "seq_len": 8, "turbo_iterations": 2,
         "conv_channels": 8, "d_hidden": 8, "dense_hidden": 8}
    m.update(model)
    return RunConfig.from_dict({
        "corpus": {"path": write_corpus(directory, TINY_SENTENCES), "val_fraction": 0.25},
        "model": m,
        "training": {"learning_rate": 1e-3, "batch_size": 4, "epochs": 2},
        "evaluation": {"snr_grid": "0,10", "max_ngram": 2},
        "output": {"dir": str(Path(directory) / "run")},
    })


def desk_config(corpus_path=None, **model) -> RunConfig:
    return RunConfig.from_dict({
        "corpus": {"path": corpus_path},
        "model": {**DESK_MODEL, **model},
        "training": dict(DESK_TRAINING),
    })


# acceptance outcomes, printed by the terminal-summary hook in conftest
ACCEPTANCE_RESULTS: dict[int, tuple[bool, str]] = {}


def record(criterion: int, ok: bool, detail: str) -> None:
    ACCEPTANCE_RESULTS[criterion] = (bool(ok), detail)
    print(f"criterion {criterion}: {'PASS' if ok else 'FAIL'} | {detail}")
    assert ok, detail
