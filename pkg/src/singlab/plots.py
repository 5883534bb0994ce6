"""Figure rendering for report outputs.

All functions write a PNG next to the delimited data files; the Agg backend
keeps rendering headless and deterministic.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def profile_figure(solution, path) -> None:
    """Angular profile omega(theta) of a separable solution."""
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(solution.theta, solution.omega, lw=1.5)
    ax.set_xlabel(r"$\theta$")
    ax.set_ylabel(r"$\omega(\theta)$")
    ax.set_title(
        f"profile: peak {solution.omega_at_pole:.6g}, "
        f"residual {solution.residual:.2e}"
    )
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def trajectory_figure(traj, path) -> None:
    """Radial trajectory u(r) on log-log axes."""
    fig, ax = plt.subplots(figsize=(6, 4))
    u = np.abs(traj.u)
    ax.loglog(traj.r, np.where(u > 0, u, np.nan), lw=1.5)
    ax.set_xlabel("r")
    ax.set_ylabel("|u(r)|")
    ax.set_title("radial trajectory" + (" (diverged)" if traj.diverged else ""))
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def field_figure(field, path) -> None:
    """Heat map of log10(u) over (theta, log10 r)."""
    grid = field.grid
    with np.errstate(divide="ignore"):
        z = np.log10(np.maximum(field.values, 1e-300))
    fig, ax = plt.subplots(figsize=(6, 4.5))
    mesh = ax.pcolormesh(
        grid.theta, np.log10(grid.r), z, shading="auto", cmap="viridis",
        vmin=max(z.min(), z.max() - 12),
    )
    fig.colorbar(mesh, ax=ax, label=r"$\log_{10} u$")
    ax.set_xlabel(r"$\theta$")
    ax.set_ylabel(r"$\log_{10} r$")
    ax.set_title(f"field, k = {field.k_mass:g}")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def slice_figure(field, path) -> None:
    """Midline slice u(r, pi/2) on log-log axes."""
    grid = field.grid
    j = int(np.argmin(np.abs(grid.theta - np.pi / 2)))
    fig, ax = plt.subplots(figsize=(6, 4))
    u = field.values[:, j]
    ax.loglog(grid.r, np.where(u > 0, u, np.nan), lw=1.5)
    ax.set_xlabel("r")
    ax.set_ylabel(r"$u(r, \pi/2)$")
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
