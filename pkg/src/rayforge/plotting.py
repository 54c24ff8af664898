"""Matplotlib figures for CLI reports (written to files, never shown)."""
from __future__ import annotations

from typing import Optional, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .core import PeriodicPointRecord  # noqa: E402


def _save(fig, path: str) -> None:
    fig.tight_layout()
    fig.savefig(path, dpi=120, metadata={"Software": None} if str(path).endswith(".png") else None)
    plt.close(fig)


def plot_curves(path: str, curves: Sequence, labels: Sequence[str] = (),
                points: Sequence[PeriodicPointRecord] = (), title: str = "",
                clip: Optional[float] = None) -> None:
    """Curves in the plane, optionally clipped to ``|Re z| <= clip``."""
    fig, ax = plt.subplots(figsize=(6, 5))
    for k, c in enumerate(curves):
        z = np.asarray(getattr(c, "z", c), dtype=complex)
        if clip is not None:
            z = z[np.abs(z.real) <= clip]
        label = labels[k] if k < len(labels) else None
        ax.plot(z.real, z.imag, lw=1, label=label)
    for rec in points:
        ax.plot([rec.point.real], [rec.point.imag], "s", ms=5, label=f"{rec.kind.value} p={rec.period}")
    ax.set_xlabel("Re z")
    ax.set_ylabel("Im z")
    if title:
        ax.set_title(title)
    if labels or points:
        ax.legend(fontsize=8)
    _save(fig, path)


def plot_pullback(path: str, head_gaps: Sequence[float], tail_symbols: Sequence, title: str = "") -> None:
    fig, (a1, a2) = plt.subplots(2, 1, figsize=(6, 5), sharex=True)
    it = np.arange(len(head_gaps))
    gaps = np.maximum(np.asarray(head_gaps, dtype=float), 1e-17)
    a1.semilogy(it, gaps, "o-", ms=3)
    a1.set_ylabel("head gap")
    syms = [np.nan if s is None else s for s in tail_symbols]
    a2.plot(it, syms, "o-", ms=3)
    a2.set_ylabel("tail symbol")
    a2.set_xlabel("iteration")
    if title:
        a1.set_title(title)
    _save(fig, path)


def plot_raster(path: str, image: np.ndarray, viewport: Sequence[float], title: str = "") -> None:
    fig, ax = plt.subplots(figsize=(6, 5))
    re0, re1, im0, im1 = viewport
    cmap = None if image.ndim == 3 else "gray"
    ax.imshow(image, extent=(re0, re1, im0, im1), cmap=cmap, origin="upper", interpolation="nearest")
    ax.set_xlabel("Re z")
    ax.set_ylabel("Im z")
    if title:
        ax.set_title(title)
    _save(fig, path)
