"""Matplotlib rendering for the report-producing commands.

Every function writes a PNG next to the delimited output and returns the
path.  The Agg backend is forced so rendering works headless.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def render_sweep(report, path):
    rows = report.sorted_rows()
    K = [r.K for r in rows]
    err = [r.recon_error for r in rows]
    bound = [r.theoretical_bound for r in rows]
    fig, ax = plt.subplots(figsize=(5.0, 3.4))
    ax.loglog(K, err, "o-", label="reconstruction error")
    if np.all(np.isfinite(bound)):
        ax.loglog(K, bound, "s--", label="theoretical bound")
    for r in rows:
        if r.crossover:
            ax.axvline(r.K, color="0.6", lw=0.8, ls=":")
    ax.set_xlabel("band limit K")
    ax.set_ylabel("relative L2 error")
    ax.legend(frameon=False, fontsize=8)
    ax.set_title(f"increasing-stability sweep (dim {report.dim})", fontsize=10)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def render_probes(probes, path):
    real = [p for p in probes if abs(p.lam.imag) < 1e-12]
    cplx = [p for p in probes if abs(p.lam.imag) >= 1e-12]
    fig, axes = plt.subplots(1, 2, figsize=(8.0, 3.4))
    if real:
        x = [abs(p.lam) for p in real]
        axes[0].loglog(x, [p.norm for p in real], "o-", label="largest singular value")
        axes[0].loglog(x, [p.hs_norm for p in real], "^--", label="Hilbert-Schmidt")
        ref = real[0].hs_norm * (np.asarray(x) / x[0]) ** -0.5
        axes[0].loglog(x, ref, "k:", lw=0.8, label=r"$|\lambda|^{-1/2}$")
        axes[0].set_xlabel(r"$|\lambda|$")
        axes[0].set_ylabel("norm estimate")
        axes[0].legend(frameon=False, fontsize=7)
    sc = axes[1].scatter([p.lam.real for p in probes], [p.lam.imag for p in probes],
                         c=[np.log10(max(p.norm, 1e-300)) for p in probes], s=18, cmap="viridis")
    fig.colorbar(sc, ax=axes[1], label="log10 norm")
    axes[1].set_xlabel(r"Re $\lambda$")
    axes[1].set_ylabel(r"Im $\lambda$")
    if cplx:
        axes[1].set_title("sector scan", fontsize=9)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def render_continuation(table, path):
    """table rows: (z, mu, bound, max |p| over the test families)."""
    z = [r[0] for r in table]
    fig, axes = plt.subplots(1, 2, figsize=(8.0, 3.4))
    axes[0].semilogy(z, [r[1] for r in table], "o-")
    axes[0].set_xlabel("z")
    axes[0].set_ylabel(r"$\mu(z)$")
    axes[1].semilogy(z, [r[2] for r in table], "s--", label=r"$M\,\epsilon^{\mu(z)}$")
    axes[1].semilogy(z, [r[3] for r in table], "o-", label=r"max $|p(z)|$ over families")
    axes[1].set_xlabel("z")
    axes[1].legend(frameon=False, fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def render_field(fld, path, title=""):
    grid = fld.grid
    vals = fld.values
    if grid.dim == 3:
        vals = vals[:, :, grid.n // 2]
    fig, ax = plt.subplots(figsize=(4.2, 3.6))
    im = ax.imshow(vals.T, origin="lower", cmap="RdBu_r",
                   extent=[-grid.half_width, grid.half_width] * 2)
    fig.colorbar(im, ax=ax)
    circle = plt.Circle((0, 0), fld.support_radius, fill=False, color="k", lw=0.7, ls="--")
    ax.add_patch(circle)
    if title:
        ax.set_title(title, fontsize=9)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
