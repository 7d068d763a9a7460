import math

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

# fixed metadata keeps SVG output byte-stable between runs
_SVG_META = {"Date": None, "Creator": "ticksim"}


def _save(fig, path):
    plt.rcParams["svg.hashsalt"] = "ticksim"
    fig.savefig(path, format="svg", metadata=_SVG_META, bbox_inches="tight")
    plt.close(fig)


def share_evolution(path, share, title=None, initial=None):
    fig, ax = plt.subplots(figsize=(6, 3.5))
    days = np.arange(1, len(share) + 1)
    ax.plot(days, share, lw=1.2)
    if initial is not None:
        ax.axhline(initial, color="grey", ls=":", lw=0.8)
    ax.set_xlabel("day")
    ax.set_ylabel("W_A")
    ax.set_ylim(0, 1)
    if title:
        ax.set_title(title)
    _save(fig, path)


def _fmt(v):
    return f"{v:g}%"


def grid_heatmap(path, report):
    dp_a = sorted({c.dp_a for c in report.cells})
    dp_b = sorted({c.dp_b for c in report.cells})
    z = np.full((len(dp_a), len(dp_b)), np.nan)
    for c in report.cells:
        z[dp_a.index(c.dp_a), dp_b.index(c.dp_b)] = c.w_a_mean
    fig, ax = plt.subplots(figsize=(6.5, 5.5))
    im = ax.imshow(z, origin="lower", cmap="viridis", vmin=0, vmax=1, aspect="auto")
    for i in range(len(dp_a)):
        for j in range(len(dp_b)):
            if not math.isnan(z[i, j]):
                ax.text(j, i, f"{z[i, j]:.2f}", ha="center", va="center", fontsize=6,
                        color="white" if z[i, j] < 0.5 else "black")
    ax.set_xticks(range(len(dp_b)), [_fmt(v) for v in dp_b], rotation=60, fontsize=7)
    ax.set_yticks(range(len(dp_a)), [_fmt(v) for v in dp_a], fontsize=7)
    ax.set_xlabel("tick size of B (dP_B, % of P_f)")
    ax.set_ylabel("tick size of A (dP_A, % of P_f)")
    # borderlines drawn in log-index coordinates
    lb, la = np.log10(dp_b), np.log10(dp_a)
    xs = np.linspace(-0.5, len(dp_b) - 0.5, 200)
    ys = np.interp(np.interp(xs, range(len(dp_b)), lb), la, range(len(dp_a)), left=np.nan, right=np.nan)
    ax.plot(xs, ys, "w--", lw=1.2, label="dP_A = dP_B")
    y_sigma = np.interp(math.log10(report.sigma_bar), la, range(len(dp_a)))
    ax.axhline(y_sigma, color="w", lw=1.2, label=f"dP_A = sigma_bar ({report.sigma_bar:.3f}%)")
    ax.legend(loc="upper left", fontsize=7, framealpha=0.6)
    fig.colorbar(im, ax=ax, label="W_A at measurement day")
    _save(fig, path)


def vol_curve(path, sigma_bar, points):
    x = [p.dp_a for p in points]
    fig, ax = plt.subplots(figsize=(6.5, 4))
    ax.plot(x, [p.sigma_t for p in points], "o-", label="sigma_t (A alone)")
    ax.plot(x, [p.sigma_t_dual for p in points], "s--", ms=4, label="sigma_t (A in two-market run)")
    ax.axhline(sigma_bar, color="grey", ls=":", label="sigma_bar")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("dP_A (% of P_f)")
    ax.set_ylabel("one-tick volatility (%)")
    ax2 = ax.twinx()
    ax2.plot(x, [p.w_a for p in points], "^-", color="tab:red", label="W_A")
    ax2.set_ylim(0, 1)
    ax2.set_ylabel("W_A at measurement day")
    h1, l1 = ax.get_legend_handles_labels()
    h2, l2 = ax2.get_legend_handles_labels()
    ax.legend(h1 + h2, l1 + l2, fontsize=7, loc="center left")
    _save(fig, path)
