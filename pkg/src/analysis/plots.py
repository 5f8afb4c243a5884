"""Diagnostic plots for solver runs and defect analyses."""

from __future__ import annotations

import logging
from pathlib import Path

import matplotlib.pyplot as plt
import numpy as np
import pandas as pd

from fields.grid import EXTERIOR, QField, beta_field

from .blowup import VanishingOrder
from .rectifiability import CONE_TOL, ConeProfile

logger = logging.getLogger(__name__)

AXIS_NAMES = ("x", "y", "z")


def _finish(save_path: Path | str | None, what: str) -> None:
    plt.tight_layout()
    if save_path:
        save_path = Path(save_path)
        save_path.parent.mkdir(parents=True, exist_ok=True)
        plt.savefig(save_path, dpi=150, bbox_inches="tight")
        logger.info("Saved %s plot to %s", what, save_path)
        plt.close()
    else:
        plt.show()


def plot_energy_trace(
    trace: pd.DataFrame,
    title: str = "Projected Descent",
    save_path: Path | str | None = None,
) -> None:
    """Plot total energy and gradient sup-norm against the iteration.

    Args:
        trace: energy trace with ``iter``, ``total`` and ``grad_norm`` columns
        title: Plot title
        save_path: Path to save figure (if None, displays instead)
    """
    fig, axes = plt.subplots(1, 2, figsize=(14, 5))

    axes[0].plot(trace["iter"], trace["total"], "-", color="darkblue", linewidth=1.5)
    axes[0].set_xlabel("Iteration")
    axes[0].set_ylabel("Energy")
    axes[0].set_title("Total Energy")
    axes[0].grid(True, alpha=0.3)

    axes[1].semilogy(trace["iter"], trace["grad_norm"], "-", color="darkred", linewidth=1.5)
    axes[1].set_xlabel("Iteration")
    axes[1].set_ylabel("Projected gradient (sup-norm)")
    axes[1].set_title("Stationarity")
    axes[1].grid(True, alpha=0.3, which="both")

    plt.suptitle(title, fontsize=14, fontweight="bold")
    _finish(save_path, "energy trace")


def plot_beta_slice(
    field: QField,
    axis: int = 2,
    title: str = "Biaxiality on the Mid-Plane",
    save_path: Path | str | None = None,
) -> None:
    """Plot β on the grid plane through the centre normal to ``axis``.

    Args:
        field: Q-field snapshot
        axis: 0, 1 or 2 for the x, y or z normal
        title: Plot title
        save_path: Path to save figure (if None, displays instead)
    """
    beta = beta_field(field)
    values = np.where(beta.roles == EXTERIOR, np.nan, beta.values)
    plane = np.take(values, field.spec.center, axis=axis)
    shown = [name for i, name in enumerate(AXIS_NAMES) if i != axis]

    fig, ax = plt.subplots(figsize=(7, 6))
    image = ax.imshow(plane.T, origin="lower", extent=(-1, 1, -1, 1), cmap="coolwarm", vmin=-1.0, vmax=1.0)
    fig.colorbar(image, ax=ax, label="beta")
    ax.set_xlabel(shown[0], fontsize=12)
    ax.set_ylabel(shown[1], fontsize=12)
    ax.set_title(title, fontsize=14, fontweight="bold")
    _finish(save_path, "beta slice")


def plot_vanishing_order(
    order: VanishingOrder,
    title: str = "Vanishing Order",
    save_path: Path | str | None = None,
) -> None:
    """Log-log plot of the ball averages of s² and δ with their fitted slopes."""
    fig, ax = plt.subplots(figsize=(8, 6))

    radii = order.radii
    for values, slope, label, color in (
        (order.s2_means, 2.0 * order.k_hat, "mean s^2", "darkblue"),
        (order.delta_means, 2.0 * order.k_hat_delta, "mean delta", "darkorange"),
    ):
        ax.loglog(radii, values, "o", color=color, label=f"{label} (k = {slope / 2.0:.2f})")
        anchor = np.exp(np.mean(np.log(values)) - slope * np.mean(np.log(radii)))
        ax.loglog(radii, anchor * radii**slope, "--", color=color, linewidth=1)

    ax.set_xlabel("r", fontsize=12)
    ax.set_ylabel("ball average", fontsize=12)
    ax.set_title(title, fontsize=14, fontweight="bold")
    ax.legend(loc="best")
    ax.grid(True, alpha=0.3, which="both")
    _finish(save_path, "vanishing order")


def plot_cone_profile(
    profile: ConeProfile,
    title: str = "Cone-Angle Profile",
    save_path: Path | str | None = None,
) -> None:
    fig, ax = plt.subplots(figsize=(8, 5))
    order = np.argsort(profile.radii)
    ax.plot(profile.radii[order], profile.values[order], "o-", color="darkgreen", linewidth=1.5)
    ax.axhline(CONE_TOL, color="red", linestyle="--", linewidth=1, label="flag threshold")
    ax.set_xlabel("r", fontsize=12)
    ax.set_ylabel("max dist(x, line) / |x - x0|", fontsize=12)
    ax.set_title(title, fontsize=14, fontweight="bold")
    ax.legend(loc="best")
    ax.grid(True, alpha=0.3)
    _finish(save_path, "cone profile")
