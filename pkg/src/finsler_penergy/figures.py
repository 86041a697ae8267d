"""Figure rendering for the report path (opt-in via --figures).

One PNG per command, written next to the delimited output.  Pure
matplotlib/Agg; nothing here feeds back into the numerical results.
"""

from __future__ import annotations

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

DPI = 150


def _save(fig, path: str) -> None:
    fig.tight_layout()
    fig.savefig(path, dpi=DPI)
    plt.close(fig)


def validation_figure(report: dict, path: str) -> None:
    checks = report["checks"]
    names = [c["check"] for c in checks]
    viol = np.array([max(c["max_violation"], 1e-18) for c in checks])
    tols = np.array([max(c["tolerance"], 1e-18) for c in checks])
    fig, ax = plt.subplots(figsize=(7, 3.4))
    xs = np.arange(len(names))
    ax.bar(xs, viol, color=["tab:green" if c["passed"] else "tab:red" for c in checks])
    ax.plot(xs, tols, "k_", markersize=18, label="tolerance")
    ax.set_yscale("log")
    ax.set_xticks(xs)
    ax.set_xticklabels(names, rotation=20, ha="right", fontsize=8)
    ax.set_ylabel("max violation")
    ax.set_title(f"axiom checks: {report['metric']}")
    ax.legend(loc="best", fontsize=8)
    _save(fig, path)


def geodesic_figure(params, nodes, speeds, residual_norm: float, path: str) -> None:
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.4))
    for i in range(nodes.shape[1]):
        ax1.plot(params, nodes[:, i], lw=1.2, label=f"x{i + 1}")
    ax1.set_xlabel("t")
    ax1.set_ylabel("chart coordinates")
    ax1.legend(loc="best", fontsize=8)
    ax2.plot(params, speeds, lw=1.2, color="tab:purple")
    ax2.set_xlabel("t")
    ax2.set_ylabel("speed F(c, c')")
    ax2.set_title(f"residual max {residual_norm:.2e}", fontsize=9)
    _save(fig, path)


def classification_figure(per_p: list, det_params, det_series,
                          conjugate_params, path: str) -> None:
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.4))
    for k, entry in enumerate(per_p):
        for block, marker, color in (("tangential", "o", "tab:blue"),
                                     ("orthogonal", "s", "tab:orange")):
            eig = np.asarray(entry["eigenvalues"][block])
            ax1.scatter(np.full(eig.size, k) + (0.12 if block == "orthogonal" else -0.12),
                        eig, s=10, marker=marker, color=color,
                        label=block if k == 0 else None)
    ax1.axhline(0.0, color="k", lw=0.6)
    ax1.set_yscale("symlog", linthresh=1e-6)
    ax1.set_xticks(range(len(per_p)))
    ax1.set_xticklabels([f"p={e['p']:g}" for e in per_p], fontsize=8)
    ax1.set_ylabel("index-form eigenvalues")
    ax1.legend(loc="best", fontsize=8)
    ax2.plot(det_params, det_series, lw=1.2)
    ax2.axhline(0.0, color="k", lw=0.6)
    for tc in conjugate_params:
        ax2.axvline(tc, color="tab:red", ls="--", lw=0.9)
    ax2.set_xlabel("t")
    ax2.set_ylabel("Jacobi determinant")
    _save(fig, path)


def survey_figure(rows: list, p_list, path: str) -> None:
    ks = [r["wraps"] for r in rows]
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.4))
    ax1.step(ks, [r["m"] for r in rows], where="mid", marker="o")
    ax1.set_xlabel("extra windings")
    ax1.set_ylabel("conjugate count m(c)")
    for p in p_list:
        ax2.semilogy(ks, [r[f"E_p={p:g}"] for r in rows], marker="o",
                     label=f"p={p:g}")
    ax2.set_xlabel("extra windings")
    ax2.set_ylabel("p-energy")
    ax2.legend(loc="best", fontsize=8)
    _save(fig, path)
