"""Delimited output and companion figures for the experiment driver.

CSV files are the artifact of record: fixed column order, shortest
round-trip float formatting, rows sorted by (epsilon position, seed
index), so identical runs produce byte-identical files.  Figures are
rendered next to each CSV as PNG and carry no data not already in it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

SWEEP_COLUMNS = (
    "epsilon",
    "seed_index",
    "status",
    "t_w",
    "w_norm_eps_sq",
    "energy",
    "m_eps_estimate",
    "concentration_ratio",
    "profile_error",
    "phi_c2",
    "n_local_maxima",
    "max_value",
    "barycenter_x",
    "barycenter_y",
    "barycenter_z",
    "field_file",
)


def fmt(value) -> str:
    """Shortest round-trip decimal for floats; plain text otherwise."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


@dataclass
class SweepRow:
    epsilon: float
    seed_index: int
    status: str
    t_w: float | None = None
    w_norm_eps_sq: float | None = None
    energy: float | None = None
    m_eps_estimate: float | None = None
    concentration_ratio: float | None = None
    profile_error: float | None = None
    phi_c2: float | None = None
    n_local_maxima: int | None = None
    max_value: float | None = None
    barycenter_x: float | None = None
    barycenter_y: float | None = None
    barycenter_z: float | None = None
    field_file: str | None = None

    def as_csv(self) -> str:
        return ",".join(fmt(getattr(self, col)) for col in SWEEP_COLUMNS)


def write_sweep_csv(path, rows) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(SWEEP_COLUMNS) + "\n")
        for row in rows:
            fh.write(row.as_csv() + "\n")


def _pyplot():
    import matplotlib

    matplotlib.use("Agg", force=True)
    import matplotlib.pyplot as plt

    return plt


def render_sweep_figures(out_dir, rows, m_infinity: float) -> list:
    """Trend panels for the sweep CSV; returns the written paths."""
    plt = _pyplot()
    eps_order: list[float] = []
    for row in rows:
        if row.epsilon not in eps_order:
            eps_order.append(row.epsilon)

    def per_eps(getter):
        out = []
        for eps in eps_order:
            vals = [getter(r) for r in rows
                    if r.epsilon == eps and getter(r) is not None]
            out.append(vals)
        return out

    fig, axes = plt.subplots(2, 2, figsize=(9.5, 7.5))
    ax = axes[0, 0]
    for eps, ts in zip(eps_order, per_eps(lambda r: r.t_w)):
        ax.plot([eps] * len(ts), ts, "o", color="tab:blue", alpha=0.7)
    ax.axhline(1.0, color="k", lw=0.8, ls="--")
    ax.set_xlabel("epsilon")
    ax.set_ylabel("projection scaling t_W")
    ax.invert_xaxis()

    ax = axes[0, 1]
    mins = []
    for vals in per_eps(lambda r: r.energy):
        mins.append(min(vals) if vals else math.nan)
    ax.plot(eps_order, mins, "o-", color="tab:orange", label="min energy")
    ax.axhline(m_infinity, color="k", lw=0.8, ls="--", label="limit level")
    ax.axhline(1.1 * m_infinity, color="k", lw=0.5, ls=":")
    ax.set_xlabel("epsilon")
    ax.set_ylabel("energy")
    ax.invert_xaxis()
    ax.legend(fontsize=8)

    ax = axes[1, 0]
    for eps, vals in zip(eps_order, per_eps(lambda r: r.profile_error)):
        ax.plot([eps] * len(vals), vals, "s", color="tab:green", alpha=0.7)
    ax.set_xlabel("epsilon")
    ax.set_ylabel("sup profile error")
    ax.invert_xaxis()

    ax = axes[1, 1]
    phi_means = []
    for vals in per_eps(lambda r: r.phi_c2):
        phi_means.append(np.mean(vals) if vals else math.nan)
    ax.loglog(eps_order, phi_means, "d-", color="tab:red")
    good = [(e, v) for e, v in zip(eps_order, phi_means) if v and not math.isnan(v)]
    if len(good) >= 2:
        le = np.log([g[0] for g in good])
        lv = np.log([g[1] for g in good])
        slope = float(np.polyfit(le, lv, 1)[0])
        ax.set_title(f"potential C2 surrogate, slope {slope:.2f}", fontsize=9)
    ax.set_xlabel("epsilon")
    ax.set_ylabel("phi C2 surrogate")

    fig.tight_layout()
    path = str(out_dir / "sweep_overview.png")
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return [path]


def render_ground_state_figure(out_dir, profile) -> list:
    plt = _pyplot()
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.6))
    r, u = profile.r_nodes, profile.u_values
    ax1.plot(r, u, lw=1.2)
    ax1.set_xlabel("r")
    ax1.set_ylabel("U(r)")
    ax1.set_title(f"radial ground state, p = {profile.p:g}", fontsize=9)
    ax2.semilogy(r[1:], u[1:], lw=1.2)
    tail_r = np.linspace(r[-1], r[-1] + 5.0, 50)
    ax2.semilogy(tail_r, profile.tail_amplitude * np.exp(-profile.decay_rate * tail_r) / tail_r,
                 "--", lw=1.0, label="analytic tail")
    ax2.set_xlabel("r")
    ax2.set_ylabel("U(r)")
    ax2.legend(fontsize=8)
    fig.tight_layout()
    path = str(out_dir / f"ground_state_p{profile.p:g}.png")
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return [path]


def render_constant_branch_figure(out_dir, p: float, c_star: float,
                                  eps_list, energies) -> list:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(4.8, 3.6))
    ax.loglog(eps_list, energies, "o-", label="constant-branch energy")
    ref = [energies[0] * (eps_list[0] / e) ** 3 for e in eps_list]
    ax.loglog(eps_list, ref, "k--", lw=0.8, label="eps^-3 scaling")
    ax.set_xlabel("epsilon")
    ax.set_ylabel("energy")
    ax.set_title(f"constant branch, p = {p:g}, c = {c_star:.4f}", fontsize=9)
    ax.legend(fontsize=8)
    fig.tight_layout()
    path = str(out_dir / "constant_branch.png")
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return [path]


def render_field_slice(out_dir, field, name: str, center=None) -> list:
    """Midplane slice through the field maximum (or a given center)."""
    plt = _pyplot()
    vals = field.values
    if center is None:
        iz = int(np.unravel_index(np.argmax(vals), vals.shape)[2])
    else:
        iz = int(round(center[2] / field.grid.spacing)) % field.grid.n_per_axis
    fig, ax = plt.subplots(figsize=(4.6, 3.8))
    L = field.grid.period_length
    im = ax.imshow(vals[:, :, iz].T, origin="lower", extent=(0, L, 0, L),
                   cmap="viridis")
    fig.colorbar(im, ax=ax, shrink=0.85)
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    ax.set_title(f"{name}, z-slice {iz}", fontsize=9)
    fig.tight_layout()
    path = str(out_dir / f"{name}.png")
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return [path]
