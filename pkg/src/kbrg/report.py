"""Figure rendering for the report path of the CLI.

Every analysis command writes its delimited tables and, unless --no-plot is
given, a matplotlib figure next to them.  The Agg backend is forced so the
toolkit stays headless.
"""

from __future__ import annotations

import numpy as np

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def _save(fig, path):
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return path


def esd_figure(values, edges, path, title=""):
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    ax.hist(values, bins=edges, density=True, color="#4878b0", alpha=0.85)
    ax.set_xlabel(r"$\lambda$")
    ax.set_ylabel("density")
    if title:
        ax.set_title(title)
    return _save(fig, path)


def compare_figure(values_a, values_b, labels, path, bins=80):
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    lo = min(np.min(values_a), np.min(values_b))
    hi = max(np.max(values_a), np.max(values_b))
    edges = np.linspace(lo, hi, bins + 1)
    ax.hist(values_a, bins=edges, density=True, alpha=0.55, label=labels[0], color="#3b7d3b")
    ax.hist(values_b, bins=edges, density=True, alpha=0.55, label=labels[1], color="#4878b0")
    ax.set_xlabel(r"$\lambda$")
    ax.set_ylabel("density")
    ax.legend()
    return _save(fig, path)


def survival_figure(table, fit, targets, path):
    """Log-log survival plot with the fitted line and the theoretical slope."""
    x = table[:, 0]
    s = table[:, 1]
    keep = s > 0
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    ax.loglog(x[keep], s[keep], "o", ms=3.5, color="#4878b0", label="pooled eigenvalues")
    if fit is not None:
        ax.loglog(x[keep], np.exp(fit.intercept) * x[keep] ** fit.slope, "-",
                  color="#c04848", label=f"fit, slope {fit.slope:.2f}")
    if targets is not None:
        slope_t, intercept_t = targets
        ax.loglog(x[keep], np.exp(intercept_t) * x[keep] ** slope_t, "--",
                  color="#444444", label=f"target, slope {slope_t:.0f}")
    ax.set_xlabel("x")
    ax.set_ylabel("survival S(x)")
    ax.legend()
    return _save(fig, path)


def density_figure(scan_rows, path, title=""):
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    ax.plot(scan_rows[:, 0], scan_rows[:, 1], "-", color="#4878b0")
    ax.set_xlabel("x")
    ax.set_ylabel("density")
    if title:
        ax.set_title(title)
    return _save(fig, path)


def moments_figure(rows, path):
    """rows: (k, moment, method, stderr) tuples."""
    methods = sorted({r[2] for r in rows})
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for method in methods:
        pts = sorted((r[0], r[1], r[3]) for r in rows if r[2] == method)
        ks = [p[0] for p in pts]
        vals = [p[1] for p in pts]
        errs = [p[2] if p[2] is not None else 0.0 for p in pts]
        ax.errorbar(ks, vals, yerr=errs, marker="o", ms=4, capsize=3, label=method)
    ax.set_xlabel("k")
    ax.set_ylabel(r"$M_{2k}$")
    ax.set_yscale("log")
    ax.legend()
    return _save(fig, path)
