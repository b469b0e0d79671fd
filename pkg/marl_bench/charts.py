"""
Learning-curve charts and the Markdown sweep report.

Charts are SVG line plots of mean test MSE against n for SARL and MARL with
+/- one standard deviation bands. The SVG writer is pinned (hash salt, no date)
so the same data always produces the same file.
"""

import logging
import os
from typing import Dict, List, Optional, Sequence, Tuple

import matplotlib

matplotlib.use("Agg")  # Use non-interactive backend

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

logger = logging.getLogger(__name__)

LEARNER_COLORS = {"SARL": "#1f77b4", "MARL": "#d62728"}

Curve = Sequence[Tuple[int, float, float]]


def curve_filename(mode: str, K: int, lam: float) -> str:
    return f"curve_{mode}_K{K}_lam{lam:g}.svg"


def write_curve_svg(
    path: str,
    curves: Dict[str, Curve],
    title: str,
    threshold_mse: Optional[float] = None,
    noise_floor: Optional[float] = None,
) -> str:
    """Plot one (n, mean, std) curve per learner and save it as SVG."""
    with matplotlib.rc_context({"svg.hashsalt": "marl-bench", "svg.fonttype": "path"}):
        fig, ax = plt.subplots(figsize=(7, 4.5))
        try:
            for learner in sorted(curves):
                points = [(n, m, s) for n, m, s in curves[learner] if np.isfinite(m)]
                if not points:
                    continue
                n = np.array([pt[0] for pt in points], dtype=float)
                mean = np.array([pt[1] for pt in points])
                std = np.array([pt[2] for pt in points])
                color = LEARNER_COLORS.get(learner)
                ax.plot(n, mean, marker="o", label=learner, color=color)
                ax.fill_between(n, mean - std, mean + std, alpha=0.2, color=color)
            if threshold_mse is not None and np.isfinite(threshold_mse):
                ax.axhline(threshold_mse, linestyle="--", color="gray", label="threshold")
            if noise_floor is not None:
                ax.axhline(noise_floor, linestyle=":", color="black", label="noise floor")
            ax.set_xscale("log", base=2)
            ax.set_xlabel("training samples n")
            ax.set_ylabel("mean test MSE")
            ax.set_title(title)
            ax.grid(True, alpha=0.3)
            ax.legend()
            fig.tight_layout()
            fig.savefig(path, format="svg", metadata={"Date": None})
        finally:
            plt.close(fig)
    logger.info(f"wrote chart {path}")
    return path


def _fmt(value: Optional[float]) -> str:
    if value is None:
        return "-"
    if not np.isfinite(value):
        return "nan"
    return f"{value:.4f}"


def generate_markdown_page(result, title: str, relative_to: Optional[str] = None) -> str:
    """Render a sweep result: n_star table, per-point curves and charts."""
    lines: List[str] = [f"# {title}", ""]
    lines += [
        "## Samples to threshold",
        "",
        "| Mode | K | lambda | SARL n_star | MARL n_star |",
        "|------|---|--------|-------------|-------------|",
    ]
    table = {}
    for row in result.n_star_table:
        table.setdefault((row.mode, row.K, row.lam), {})[row.learner] = row.n_star
    for (mode, K, lam), by_learner in sorted(table.items()):
        sarl = by_learner.get("SARL")
        marl = by_learner.get("MARL")
        lines.append(
            f"| {mode} | {K} | {lam:g} | {sarl if sarl is not None else 'none'} "
            f"| {marl if marl is not None else 'none'} |"
        )
    lines.append("")

    summaries = {}
    for row in result.summaries:
        summaries.setdefault((row.mode, row.K, row.lam), []).append(row)
    for key in sorted(summaries):
        mode, K, lam = key
        lines += [f"## {mode}, K={K}, lambda={lam:g}", ""]
        chart = result.charts.get(key)
        if chart:
            target = os.path.relpath(chart, relative_to) if relative_to else chart
            lines += [f"![Learning curves]({target})", ""]
        lines += [
            "| Learner | n | Mean test MSE | Std |",
            "|---------|---|---------------|-----|",
        ]
        for row in sorted(summaries[key], key=lambda r: (r.learner, r.n)):
            lines.append(f"| {row.learner} | {row.n} | {_fmt(row.mean_mse)} | {_fmt(row.std_mse)} |")
        lines.append("")
    return "\n".join(lines)


def write_markdown_report(results, path: str, title: str = "MARL vs SARL sample efficiency") -> str:
    """Write one or more sweep results (a result or a {section: result} dict) to Markdown."""
    if not isinstance(results, dict):
        results = {title: results}
    directory = os.path.dirname(os.path.abspath(path))
    pages = [f"# {title}", ""] if len(results) > 1 else []
    for section, result in results.items():
        page = generate_markdown_page(result, section, relative_to=directory)
        if len(results) > 1:
            page = page.replace("# ", "## ", 1).replace("\n## ", "\n### ")
        pages.append(page)
    with open(path, "w") as fp:
        fp.write("\n".join(pages) + "\n")
    logger.info(f"wrote report {path}")
    return path
