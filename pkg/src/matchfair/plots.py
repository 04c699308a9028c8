"""SVG plot emission for experiment summaries. Requires matplotlib."""

from __future__ import annotations

from collections import defaultdict
from pathlib import Path

from .experiments import Statistic, SummaryStat


def write_plots(summaries: list[SummaryStat], out_dir) -> list[str]:
    """One SVG per (column, n): a heatmap over the phi grid when both axes
    vary, otherwise a line with the interquartile band. Returns filenames."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    import numpy as np

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    center_stat = {s.statistic: s for s in summaries if s.statistic in
                   (Statistic.MEDIAN, Statistic.MEAN)}
    center = Statistic.MEAN if Statistic.MEAN in center_stat else Statistic.MEDIAN

    by_plot: dict[tuple[str, int], list[SummaryStat]] = defaultdict(list)
    for s in summaries:
        if s.cell is not None and s.column is not None:
            by_plot[(s.column, s.cell[0])].append(s)

    written = []
    for (column, n), stats in sorted(by_plot.items()):
        centers = {s.cell[1:]: s.value for s in stats if s.statistic is center}
        if not centers:
            continue
        phis_m = sorted({pm for pm, _ in centers})
        phis_w = sorted({pw for _, pw in centers})
        fig, ax = plt.subplots(figsize=(6, 4.5))
        if len(phis_m) > 1 and len(phis_w) > 1:
            grid = np.full((len(phis_m), len(phis_w)), np.nan)
            for (pm, pw), v in centers.items():
                grid[phis_m.index(pm), phis_w.index(pw)] = v
            im = ax.imshow(grid, origin="lower", aspect="auto", cmap="viridis")
            ax.set_xticks(range(len(phis_w)), [f"{p:g}" for p in phis_w])
            ax.set_yticks(range(len(phis_m)), [f"{p:g}" for p in phis_m])
            ax.set_xlabel("phi_w")
            ax.set_ylabel("phi_m")
            fig.colorbar(im, ax=ax, label=f"{center.value} {column}")
        else:
            xs = phis_w if len(phis_w) > 1 else phis_m
            xlabel = "phi_w" if len(phis_w) > 1 else "phi_m"
            key = (lambda pm, pw: pw) if len(phis_w) > 1 else (lambda pm, pw: pm)
            ys = [v for _, v in sorted(centers.items(), key=lambda kv: key(*kv[0]))]
            ax.plot(xs, ys, marker="o", label=center.value)
            q1 = {s.cell[1:]: s.value for s in stats if s.statistic is Statistic.Q1}
            q3 = {s.cell[1:]: s.value for s in stats if s.statistic is Statistic.Q3}
            if q1 and q3:
                lo = [v for _, v in sorted(q1.items(), key=lambda kv: key(*kv[0]))]
                hi = [v for _, v in sorted(q3.items(), key=lambda kv: key(*kv[0]))]
                ax.fill_between(xs, lo, hi, alpha=0.25, label="Q1-Q3")
            ax.set_xlabel(xlabel)
            ax.set_ylabel(column)
            ax.legend()
        ax.set_title(f"{column}, n={n}")
        fname = f"{column}_n{n}.svg"
        fig.savefig(out_dir / fname, format="svg", bbox_inches="tight")
        plt.close(fig)
        written.append(fname)
    return written
