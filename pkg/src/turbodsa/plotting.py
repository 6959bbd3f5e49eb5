"""Static figures of metric-versus-SNR curves from MetricReport CSVs."""
from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .metrics import MetricReport  # noqa: E402

RC = {
    "figure.figsize": (5.0, 3.6),
    "font.size": 9,
    "axes.grid": True,
    "grid.alpha": 0.4,
    "grid.linestyle": "--",
    "legend.frameon": True,
    "legend.fontsize": 8,
    "lines.linewidth": 1.6,
    "lines.markersize": 5,
}
MARKERS = "osd^v<>p*h"
YLABELS = {"bleu": "BLEU score", "ss": "Sentence similarity"}


def _panels(report: MetricReport):
    return sorted({(r.metric, r.ngram) for r in report.rows}, key=lambda k: (k[0], k[1] or 0))


def _label(metric, ngram):
    return f"{metric}-{ngram}" if ngram is not None else metric


def plot_reports(reports: dict[str, MetricReport], out_dir, style: str = "line",
                 fmt: str = "png") -> list[Path]:
    """Write one figure (plus its tidy CSV) per (metric, n-gram) panel.

    ``reports`` maps a legend label to a report; each label becomes one curve
    (line style) or one box group per SNR (box style, spread over seeds).
    Returns the figure paths.
    """
    if style not in ("line", "box"):
        raise ValueError(f"unknown plot style {style!r}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    merged = MetricReport()
    for rep in reports.values():
        merged.extend(rep)
    written = []
    for metric, ngram in _panels(merged):
        name = _label(metric, ngram)
        tidy = []
        with plt.rc_context(RC):
            fig, ax = plt.subplots()
            labels = list(reports)
            for i, label in enumerate(labels):
                rows = [r for r in reports[label].select(metric, ngram)]
                by_snr: dict[float, list[float]] = {}
                for r in rows:
                    by_snr.setdefault(r.snr_db, []).append(r.value)
                    tidy.append((label, r.snr_db, r.value, r.seed))
                if not by_snr:
                    continue
                snrs = sorted(by_snr)
                if style == "line":
                    ax.plot(snrs, [np.mean(by_snr[s]) for s in snrs], marker=MARKERS[i % len(MARKERS)],
                            label=label)
                else:
                    width = 0.8 / max(len(labels), 1)
                    step = np.min(np.diff(snrs)) if len(snrs) > 1 else 1.0
                    pos = [s + (i - (len(labels) - 1) / 2) * width * step for s in snrs]
                    bp = ax.boxplot([by_snr[s] for s in snrs], positions=pos, widths=width * step * 0.9,
                                    patch_artist=True, manage_ticks=False)
                    color = f"C{i}"
                    for patch in bp["boxes"]:
                        patch.set_facecolor(color)
                        patch.set_alpha(0.5)
                    ax.plot([], [], color=color, lw=6, alpha=0.5, label=label)
            ax.set_xlabel("SNR (dB)")
            ax.set_ylabel(YLABELS.get(metric, metric) + (f" ({ngram}-gram)" if ngram else ""))
            if metric == "bleu":
                ax.set_ylim(-0.02, 1.02)
            ax.legend(loc="lower right")
            fig.tight_layout()
            path = out / f"{name}_{style}.{fmt}"
            fig.savefig(path)
            plt.close(fig)
        with (out / f"{name}_{style}.csv").open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["model", "snr_db", "value", "seed"])
            w.writerows(tidy)
        written.append(path)
    return written
