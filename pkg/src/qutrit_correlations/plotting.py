"""Figures written straight to files (Agg backend, no display)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .io import atomic_write  # noqa: E402

STYLE = {
    "font.family": "serif",
    "mathtext.fontset": "stix",
    "font.size": 9,
    "axes.labelsize": 10,
    "legend.fontsize": 8,
    "lines.linewidth": 1.2,
    "lines.markersize": 4,
}

ENTANGLEMENT_THRESHOLD = 0.25
LEVEL_LABELS = [f"{i}" for i in range(1, 10)]


def _save(fig, path) -> Path:
    # render to memory first so the target file appears atomically
    import io

    buf = io.BytesIO()
    fig.savefig(buf, format=Path(path).suffix.lstrip(".") or "png", dpi=150)
    plt.close(fig)
    return atomic_write(path, buf.getvalue())


def plot_curves(rows: list[dict], path, points: list[dict] | None = None) -> Path:
    """Negativity and discord against p, with the p = 1/4 separability line.

    ``points`` are optional reconstructed states with keys p, p_sigma,
    negativity, negativity_sigma, discord, discord_sigma.
    """
    p = np.array([r["p"] for r in rows])
    with plt.rc_context(STYLE):
        fig, axes = plt.subplots(1, 2, figsize=(7.0, 2.8), sharex=True)
        for ax, key, label in zip(axes, ("negativity", "discord"), ("Negativity $N$", "Discord $D$")):
            ax.plot(p, [r[key] for r in rows], color="#2b8cbe", label="simulation")
            ax.axvline(ENTANGLEMENT_THRESHOLD, color="0.4", linestyle="--", linewidth=0.8)
            if points:
                ax.errorbar(
                    [q["p"] for q in points], [q[key] for q in points],
                    xerr=[q.get("p_sigma", 0.0) for q in points],
                    yerr=[q.get(f"{key}_sigma", 0.0) for q in points],
                    fmt="o", color="#d95f0e", capsize=2, label="reconstructed",
                )
                ax.legend(loc="upper left")
            ax.set_xlabel("$p$")
            ax.set_ylabel(label)
            ax.set_xlim(0, 1)
        fig.tight_layout()
        return _save(fig, path)


def plot_density_matrix(mean, path, std_real=None, std_imag=None, reference=None,
                        title: str | None = None) -> Path:
    """Real and imaginary parts as 3D bars, reference state as a wireframe."""
    mean = np.asarray(mean, dtype=complex)
    n = mean.shape[0]
    xx, yy = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    x, y = xx.ravel() - 0.35, yy.ravel() - 0.35
    with plt.rc_context(STYLE):
        fig = plt.figure(figsize=(8.0, 3.8))
        for k, (part, err, name) in enumerate(
            ((mean.real, std_real, "Re"), (mean.imag, std_imag, "Im"))
        ):
            ax = fig.add_subplot(1, 2, k + 1, projection="3d")
            z = part.ravel()
            ax.bar3d(x, y, np.minimum(z, 0), 0.7, 0.7, np.abs(z), color="#4eb3d3",
                     alpha=0.8, shade=True)
            if err is not None:
                err = np.asarray(err, dtype=float).ravel()
                for xi, yi, zi, ei in zip(xx.ravel(), yy.ravel(), z, err):
                    if ei > 0:
                        ax.plot([xi, xi], [yi, yi], [zi - ei, zi + ei], color="k", linewidth=0.6)
            if reference is not None:
                ref = np.asarray(reference, dtype=complex)
                ref = ref.real if name == "Re" else ref.imag
                ax.plot_wireframe(xx, yy, ref, color="#d95f0e", linewidth=0.6)
            ax.set_xticks(range(n), LEVEL_LABELS[:n])
            ax.set_yticks(range(n), LEVEL_LABELS[:n])
            ax.set_title(rf"{name}$(\rho)$")
        if title:
            fig.suptitle(title)
        fig.subplots_adjust(left=0.02, right=0.98, bottom=0.05, top=0.88, wspace=0.05)
        return _save(fig, path)
