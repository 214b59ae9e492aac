"""Static SVG figures for reports."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

# fixed ids and no timestamp so repeated runs write identical files
plt.rcParams["svg.hashsalt"] = "nlsmooth"
_META = {"Date": None, "Creator": "nlsmooth"}


def _save(fig, path):
    fig.savefig(path, format="svg", metadata=_META)
    plt.close(fig)


def plot_spectrum(rows, band, path, R=None, ell_line=None):
    """Eigenvalues in the complex plane with the strip boundaries.

    ``rows`` holds ``(lam, proper)`` pairs; ``band = (c1, c2)``.  ``ell_line``
    marks ``Im = 1 - ell`` when it differs from ``c2``.
    """
    fig, ax = plt.subplots(figsize=(6, 4))
    c1, c2 = band
    xs = [complex(l).real for l, _ in rows]
    half = R if R is not None else max([1.0] + [abs(x) * 1.2 for x in xs])
    ax.axhspan(c1, c2, color="0.93", zorder=0)
    ax.axhline(c1, color="tab:red", lw=1, label=f"Im = {c1:g}")
    ax.axhline(c2, color="tab:blue", lw=1, ls="--", label=f"Im = {c2:g}")
    if ell_line is not None and ell_line != c2:
        ax.axhline(ell_line, color="tab:green", lw=1, ls=":", label=f"Im = {ell_line:g}")
    prop = [complex(l) for l, ok in rows if ok]
    impr = [complex(l) for l, ok in rows if not ok]
    if prop:
        ax.plot([z.real for z in prop], [z.imag for z in prop], "o", color="tab:green", label="proper")
    if impr:
        ax.plot([z.real for z in impr], [z.imag for z in impr], "x", color="tab:red", ms=8, label="improper")
    ax.set_xlim(-half, half)
    pad = 0.1 * max(c2 - c1, 1)
    ax.set_ylim(c1 - pad, c2 + pad)
    ax.set_xlabel("Re lambda")
    ax.set_ylabel("Im lambda")
    ax.legend(loc="best", fontsize=8)
    ax.set_title(f"{len(rows)} eigenvalue(s) in the strip")
    fig.tight_layout()
    _save(fig, path)


def plot_certificate(cert, path, n=129):
    """Angular profiles of the certificate and its annulus energies."""
    f = cert.evaluator
    p = f.problem
    fig, (a1, a2) = plt.subplots(1, 2, figsize=(9, 3.6))
    for j in range(p.N):
        om = np.linspace(-p.half_angles[j], p.half_angles[j], n)
        vals = f.angular(om)[j, :, 0]
        a1.plot(om, vals.real, label=f"Re, component {j + 1}")
        a1.plot(om, vals.imag, ls="--", label=f"Im, component {j + 1}")
    a1.set_xlabel("omega")
    a1.set_title("angular profile")
    a1.legend(fontsize=7)
    bp = cert.blowup
    if bp.energies:
        a2.semilogy(bp.n, bp.energies, "o-")
    a2.set_xlabel("annulus n (2^-n-1 < r < 2^-n)")
    a2.set_title(f"order-{p.order} energy, ratio {bp.fitted_ratio:.4g}")
    fig.tight_layout()
    _save(fig, path)


def plot_consistency(r, g, path, title=""):
    """``|g(r)|`` on a log-log scale."""
    fig, ax = plt.subplots(figsize=(5, 3.6))
    ax.loglog(r, np.maximum(np.abs(g), 1e-300))
    ax.set_xlabel("r")
    ax.set_ylabel("|g(r)|")
    ax.set_title(title)
    fig.tight_layout()
    _save(fig, path)
