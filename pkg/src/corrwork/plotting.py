"""Figure rendering for experiment datasets.

Uses the Agg backend so runs never require a display; each experiment gets a
small purpose-built panel saved as PNG next to the delimited output.
"""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .experiments import CsvDataset, ExperimentConfig

__all__ = ["figure_path", "render_figure"]


def figure_path(cfg: ExperimentConfig) -> str:
    if cfg.out == "-":
        return f"corrwork_{cfg.experiment}.png"
    stem = cfg.out
    if stem.lower().endswith(".csv"):
        stem = stem[: -len(".csv")]
    return stem + ".png"


def _column(dataset: CsvDataset, name: str) -> np.ndarray:
    idx = dataset.header.index(name)
    return np.array([float(row[idx]) for row in dataset.rows])


def _curve_groups(dataset: CsvDataset):
    betas = _column(dataset, "beta_in")
    for b in dict.fromkeys(betas):
        yield b, betas == b


def _plot_curves(ax, dataset: CsvDataset, x_name: str, y_name: str) -> None:
    x = _column(dataset, x_name)
    y = _column(dataset, y_name)
    for b, mask in _curve_groups(dataset):
        ax.plot(x[mask], y[mask], label=f"$\\beta_{{in}} = {b:g}$")
    ax.legend()


def render_figure(dataset: CsvDataset, cfg: ExperimentConfig, path: str) -> None:
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    if cfg.experiment == "fig1":
        _plot_curves(ax, dataset, "work", "mutual_information")
        ax.set_xlabel("work")
        ax.set_ylabel("mutual information")
    elif cfg.experiment == "fig2":
        mask = _column(dataset, "beta_in") == cfg.beta_in[0]
        n = cfg.grid
        delta = _column(dataset, "delta")[mask].reshape(n, n)
        theta = _column(dataset, "theta")[mask].reshape(n, n)
        work = _column(dataset, "work")[mask].reshape(n, n)
        pcm = ax.pcolormesh(delta, theta, work, shading="auto")
        fig.colorbar(pcm, ax=ax, label="work")
        plane = cfg.omega * math.tanh(cfg.beta_in[0] * cfg.omega / 2.0)
        ax.contour(delta, theta, work, levels=[plane], colors="white",
                   linewidths=1.0)
        ax.set_xlabel(r"$\delta$")
        ax.set_ylabel(r"$\theta$")
    elif cfg.experiment == "fig3":
        _plot_curves(ax, dataset, "delta_mi", "sigma_w_over_w")
        ax.set_yscale("log")
        ax.set_xlabel("mutual information created")
        ax.set_ylabel(r"$\sigma_W / W$")
    elif cfg.experiment == "fig4":
        _plot_curves(ax, dataset, "work", "sigma_w")
        ax.set_xlabel("work")
        ax.set_ylabel(r"$\sigma_W$")
    elif cfg.experiment == "fig5":
        _plot_curves(ax, dataset, "delta_mi", "spread_change_over_work")
        ax.set_xlabel("mutual information created")
        ax.set_ylabel(r"$\Delta\sigma_E / W$")
    elif cfg.experiment == "dist":
        work = _column(dataset, "work")
        prob = _column(dataset, "probability")
        ax.stem(work, prob)
        ax.set_xlabel("work")
        ax.set_ylabel("probability")
    elif cfg.experiment == "qudit":
        target = _column(dataset, "beta_out_target")
        achieved = _column(dataset, "beta_out_achieved")
        ok = np.isfinite(achieved)
        span = np.array([target.min(), target.max()])
        ax.plot(span, span, lw=0.8, color="gray")
        ax.plot(target[ok], achieved[ok], "o", label="realized")
        if (~ok).any():
            ax.plot(target[~ok], np.zeros((~ok).sum()), "x", color="red",
                    label="infeasible")
        ax.legend()
        ax.set_xlabel(r"target $\beta_{out}$")
        ax.set_ylabel(r"achieved $\beta_{out}$")
    elif cfg.experiment == "errata":
        printed = _column(dataset, "printed_form")
        measured = _column(dataset, "measured_variance")
        lim = max(printed.max(), measured.max())
        ax.plot([0.0, lim], [0.0, lim], lw=0.8, color="gray")
        ax.plot(measured, printed, "o", ms=3)
        ax.set_xlabel("measured variance")
        ax.set_ylabel("angle-form value")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
