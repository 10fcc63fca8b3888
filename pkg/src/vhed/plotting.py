"""Matplotlib figures written straight to files (Agg backend)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def _save(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=110, bbox_inches="tight", metadata={"Software": None})
    plt.close(fig)
    return path


def field_figure(field, path, title: str = "", render: str = "real", radius: float = 1.0):
    g = field.grid
    v = getattr(np, render)(field.values) if render != "abs" else np.abs(field.values)
    sel = np.abs(g.axis) <= radius
    fig, ax = plt.subplots(figsize=(4.2, 3.6))
    ext = (g.axis[sel][0], g.axis[sel][-1], g.axis[sel][0], g.axis[sel][-1])
    im = ax.imshow(v[np.ix_(sel, sel)], origin="lower", extent=ext, cmap="gray")
    fig.colorbar(im, ax=ax)
    ax.set_title(title)
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    return _save(fig, path)


def sinogram_figure(sino, path, title: str = "", ladder=None, t_max: float = 2.0):
    """``|sino|`` over ``(phi, t)``, optionally with predicted ``t`` values overlaid."""
    sel = np.abs(sino.t) <= t_max
    fig, ax = plt.subplots(figsize=(5.0, 3.6))
    ext = (sino.phi[0], sino.phi[-1] + (sino.phi[1] - sino.phi[0]), sino.t[sel][0], sino.t[sel][-1])
    im = ax.imshow(np.abs(sino.values[sel]), origin="lower", aspect="auto", extent=ext,
                   cmap="magma")
    fig.colorbar(im, ax=ax)
    if ladder is not None:
        colors = {0: "w", 1: "c", 2: "y", 3: "lime", 4: "orange", 5: "r"}
        for m in ladder.orders:
            xs, ys = [], []
            for j, ph in enumerate(ladder.phi):
                for t in ladder.at(m, j):
                    xs.append(ph)
                    ys.append(t)
            ax.plot(xs, ys, ".", ms=2.5, color=colors.get(m, "w"), label=f"m={m}")
        ax.legend(loc="upper right", fontsize=7)
    ax.set_xlabel("phi")
    ax.set_ylabel("t")
    ax.set_title(title)
    return _save(fig, path)


def column_figure(sinos: dict, phi: float, path, title: str = "", marks=()):
    """Line plot of ``|column|`` at ``phi`` for several labelled sinograms."""
    fig, ax = plt.subplots(figsize=(5.0, 3.2))
    for label, s in sinos.items():
        ax.plot(s.t, np.abs(s.column(phi)), label=label, lw=1)
    for t in marks:
        ax.axvline(t, color="k", ls=":", lw=0.7)
    ax.set_xlabel("t")
    ax.set_xlim(-2, 2)
    ax.legend(fontsize=7)
    ax.set_title(title)
    return _save(fig, path)


def profile_figure(fields: dict, path, title: str = "", marks=()):
    """Values along the positive x axis."""
    fig, ax = plt.subplots(figsize=(5.0, 3.2))
    for label, f in fields.items():
        g = f.grid
        row = g.n // 2
        sel = (g.axis >= 0) & (g.axis <= 1.0)
        ax.plot(g.axis[sel], f.values[row, sel].real, label=label, lw=1)
    for r in marks:
        ax.axvline(r, color="k", ls=":", lw=0.7)
    ax.set_xlabel("x")
    ax.legend(fontsize=7)
    ax.set_title(title)
    return _save(fig, path)
