"""Command-line front end.

Exit codes: 0 success, 1 runtime failure (I/O, divergence, checkpoint
problems), 2 usage or configuration error.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from .errors import CheckpointError, ConfigurationError, CorpusError, DivergenceError, TurboDSAError

log = logging.getLogger("turbodsa")

# options whose values may legitimately start with "-" (negative SNRs)
_VALUE_OPTIONS = ("--snr",)


def _join_negative_values(argv):
    out, i = [], 0
    while i < len(argv):
        a = argv[i]
        if a in _VALUE_OPTIONS and i + 1 < len(argv):
            out.append(f"{a}={argv[i + 1]}")
            i += 2
        else:
            out.append(a)
            i += 1
    return out


def _resolve_seed(arg_seed, cfg_seed):
    if arg_seed is not None:
        return arg_seed
    env = os.environ.get("TURBODSA_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise ConfigurationError(f"TURBODSA_SEED={env!r} is not an integer") from None
    return cfg_seed


def _load(config_arg):
    """Load a YAML config; a bare name like "smoke" selects a bundled one."""
    from .config import load_config, shipped_config

    path = Path(config_arg)
    if not path.exists() and path.suffix == "" and "/" not in config_arg:
        path = shipped_config(config_arg)
    return load_config(path)


def cmd_build_vocab(args) -> int:
    from .corpus import build_vocabulary

    vocab = build_vocabulary(args.corpus, args.min_freq, args.max_size)
    vocab.save(args.out)
    print(f"vocabulary size {vocab.size} -> {args.out}")
    return 0


def cmd_train(args) -> int:
    from .training import load_checkpoint, train

    cfg = _load(args.config)
    seed = _resolve_seed(args.seed, cfg.training.seed)
    if args.epochs is not None:
        cfg.training.epochs = args.epochs
    out_dir = Path(args.out or cfg.output.dir)
    resume = load_checkpoint(args.resume) if args.resume else None

    def progress(epoch, tr, va):
        log.info("epoch %4d  train %.5f  val %.5f", epoch, tr, va)

    result = train(cfg, seed=seed, resume=resume, out_dir=out_dir, progress=progress)
    final = result.epoch_losses("train")[-1]
    print(f"epoch {result.checkpoint.epoch} final loss {final:.6f}")
    print(f"checkpoint -> {out_dir / 'checkpoint.tdsa'}")
    print(f"loss log   -> {out_dir / 'loss.csv'}")
    return 0


def cmd_evaluate(args) -> int:
    from .config import parse_snr_grid
    from .training import evaluate, load_checkpoint

    cfg = _load(args.config)
    snrs = parse_snr_grid(args.snr) if args.snr is not None else None
    metrics = [m.strip() for m in args.metrics.split(",") if m.strip()] if args.metrics else None
    if metrics and set(metrics) - {"bleu", "ss"}:
        raise ConfigurationError(f"unknown metrics {metrics}")
    seeds = None
    if args.seeds:
        seeds = [int(s) for s in args.seeds.split(",")]
    elif args.seed is not None or "TURBODSA_SEED" in os.environ:
        seeds = [_resolve_seed(args.seed, 0)]
    ckpt = load_checkpoint(args.checkpoint)
    report = evaluate(cfg, ckpt, snrs, seeds=seeds, metrics=metrics, split=args.split)
    out = Path(args.out or Path(cfg.output.dir) / "report.csv")
    out.parent.mkdir(parents=True, exist_ok=True)
    report.to_csv(out)
    print(f"{'metric':<8}{'snr_db':>8}{'value':>10}")
    keys = sorted({(r.metric, r.ngram) for r in report.rows}, key=lambda k: (k[0], k[1] or 0))
    for metric, ngram in keys:
        name = f"{metric}-{ngram}" if ngram else metric
        for snr, value in report.curve(metric, ngram).items():
            print(f"{name:<8}{snr:>8.1f}{value:>10.4f}")
    print(f"report -> {out}")
    return 0


def cmd_plot(args) -> int:
    from .metrics import MetricReport
    from .plotting import plot_reports

    reports = {}
    for path in args.report:
        rep = MetricReport.from_csv(path)
        if not len(rep):
            print(f"error: empty report {path}", file=sys.stderr)
            return 1
        models = sorted({r.model for r in rep.rows})
        label = models[0] if len(models) == 1 else Path(path).stem
        if label in reports:
            label = Path(path).stem
        reports[label] = rep
    paths = plot_reports(reports, args.out, style=args.style, fmt=args.format)
    for p in paths:
        print(p)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="turbodsa", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    b = sub.add_parser("build-vocab", help="build a vocabulary file from a corpus")
    b.add_argument("--corpus", required=True)
    b.add_argument("--min-freq", type=int, default=1)
    b.add_argument("--max-size", type=int, default=None)
    b.add_argument("--out", required=True)
    b.set_defaults(func=cmd_build_vocab)

    t = sub.add_parser("train", help="train a model (writes checkpoint and loss CSV)")
    t.add_argument("--config", required=True, help="YAML path or bundled name (default, smoke)")
    t.add_argument("--seed", type=int, default=None)
    t.add_argument("--resume", default=None, metavar="CKPT")
    t.add_argument("--epochs", type=int, default=None, help="override training.epochs")
    t.add_argument("--out", default=None, help="output directory (default: output.dir)")
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("evaluate", help="SNR sweep -> metric CSV")
    e.add_argument("--config", required=True, help="YAML path or bundled name (default, smoke)")
    e.add_argument("--checkpoint", required=True)
    e.add_argument("--snr", default=None, help='grid "start:stop:step" or comma list')
    e.add_argument("--metrics", default=None, help="comma list of bleu,ss")
    e.add_argument("--seed", type=int, default=None)
    e.add_argument("--seeds", default=None, help="comma list of channel seeds")
    e.add_argument("--split", choices=("train", "val", "all"), default=None)
    e.add_argument("--out", default=None, help="CSV path (default: output.dir/report.csv)")
    e.set_defaults(func=cmd_evaluate)

    pl = sub.add_parser("plot", help="figures + tidy data from metric CSVs")
    pl.add_argument("--report", nargs="+", required=True)
    pl.add_argument("--out", required=True)
    pl.add_argument("--style", choices=("line", "box"), default="line")
    pl.add_argument("--format", choices=("png", "pdf", "svg"), default="png")
    pl.set_defaults(func=cmd_plot)
    return p


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(_join_negative_values(argv))
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigurationError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (DivergenceError, CheckpointError, CorpusError, OSError, TurboDSAError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
