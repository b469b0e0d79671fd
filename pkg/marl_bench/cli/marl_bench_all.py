#!/usr/bin/env python3
"""
Run the full set of SARL vs MARL learning-curve sweeps and write one report.

The suite covers independent subtasks, dependent subtasks at weak and strong
dependence, and an agent-count sweep at fixed total feature width.

Usage:
    marl-bench-all --output results
    marl-bench-all --output results --sweeps independent dependent --trials 3 --open
"""

import argparse
import os
import subprocess
import sys

from ..config import SweepConfig, default_workers
from ..errors import MarlBenchError, ValidationError
from ..sweep import run_sweep
from ..charts import write_markdown_report

N_GRID = (32, 64, 128, 256, 512, 1024)

# name -> (description, SweepConfig fields)
SUITE = {
    "independent": (
        "Independent subtasks (K=4)",
        dict(mode="independent", K_list=(4,), lambda_list=(0.0,), p=8, threshold_mse=1.2),
    ),
    "dependent": (
        "Dependent subtasks, weak and strong dependence (K=4)",
        dict(mode="dependent", K_list=(4,), lambda_list=(0.1, 1.0), p=8, threshold_mse=2.2),
    ),
    "capacity": (
        "Agent count at fixed total feature width 32",
        dict(mode="independent", K_list=(1, 2, 4, 8), lambda_list=(0.0,), total_feature_dim=32, threshold_mse=1.2),
    ),
}


def run_suite_sweep(name, output_dir, trials, seed, workers, charts_enabled=True):
    """Run one named sweep of the suite into output_dir/name."""
    description, fields = SUITE[name]
    print(f"\n🚀 Running sweep: {description}")
    print("=" * 60)
    cfg = SweepConfig(
        n_grid=N_GRID,
        trials=trials,
        base_seed=seed,
        output_dir=os.path.join(output_dir, name),
        workers=workers,
        **fields,
    )
    try:
        result = run_sweep(cfg, charts_enabled=charts_enabled)
    except MarlBenchError as e:
        print(f"❌ Sweep {name} failed: {e}")
        return None
    for row in result.n_star_table:
        n_star = "none" if row.n_star is None else row.n_star
        print(f"📊 K={row.K} lambda={row.lam:g} {row.learner}: n_star={n_star}")
    print(f"✅ Sweep {name} completed")
    return result


def open_report(path):
    """Open the report with the default viewer."""
    try:
        subprocess.Popen(["xdg-open", path])
        return True
    except OSError as e:
        print(f"❌ Error opening {path}: {e}")
        return False


def main(argv=None):
    parser = argparse.ArgumentParser(
        description="Run every SARL vs MARL sweep and write a combined report",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  marl-bench-all --output results
  marl-bench-all --output results --sweeps independent --trials 3
  marl-bench-all --output /tmp/results --workers 4 --open
        """,
    )
    parser.add_argument(
        "--output",
        "-o",
        default=os.getcwd(),
        help="Output directory for sweep results (default: current directory)",
    )
    parser.add_argument(
        "--sweeps",
        nargs="+",
        choices=sorted(SUITE),
        default=list(SUITE),
        help="Sweeps to run (default: all)",
    )
    parser.add_argument("--trials", type=int, default=5, help="Trials per cell (default: 5)")
    parser.add_argument("--seed", type=int, default=0, help="Base seed (default: 0)")
    parser.add_argument(
        "--workers", type=int, help="Concurrent cells (default: $MARL_BENCH_WORKERS or 1)"
    )
    parser.add_argument(
        "--skip-charts",
        action="store_true",
        help="Skip SVG charts and the combined report",
    )
    parser.add_argument(
        "--open",
        action="store_true",
        help="Open the combined report after generation",
    )
    args = parser.parse_args(argv)

    try:
        workers = args.workers if args.workers is not None else default_workers()
    except ValidationError as e:
        print(f"❌ {e}")
        return 2
    os.makedirs(args.output, exist_ok=True)

    print("🎯 Starting MARL vs SARL sweeps")
    print(f"📁 Output directory: {args.output}")
    print(f"🔢 Sweeps to run: {', '.join(args.sweeps)}")
    print("=" * 60)

    results = {}
    try:
        for name in args.sweeps:
            result = run_suite_sweep(
                name, args.output, args.trials, args.seed, workers, not args.skip_charts
            )
            if result is None:
                print(f"⚠️  Skipping sweep {name} in the report")
                continue
            results[SUITE[name][0]] = result
    except KeyboardInterrupt:
        print("\n⏹️  Sweeps interrupted by user")
        return 1

    if not results:
        print("\n❌ No sweep completed")
        return 1

    if not args.skip_charts:
        report = write_markdown_report(results, os.path.join(args.output, "report.md"))
        print(f"\n📝 Combined report: {report}")
        if args.open:
            open_report(report)

    print("\n✅ All sweeps completed successfully!")
    print(f"📁 Results saved in: {args.output}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
