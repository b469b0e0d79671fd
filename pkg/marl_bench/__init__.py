"""
MARL Sample-Efficiency Benchmarking Tools

This package provides closed-form sample-complexity calculators for single-agent
and multi-agent learners, and experiments that train both on synthetic
decomposable tasks.
"""

__version__ = "1.0.0"
__author__ = "marl-bench developers"
__email__ = "marl-bench@users.noreply.github.com"

from .bounds import (
    marl_bound_dependent,
    marl_bound_independent,
    marl_bound_misaligned,
    misalignment_condition,
    ratio_dependent,
    ratio_independent,
    sarl_bound,
)
from .cli.marl_bench import main
from .sweep import run_sweep

__all__ = [
    "main",
    "run_sweep",
    "sarl_bound",
    "marl_bound_dependent",
    "marl_bound_independent",
    "marl_bound_misaligned",
    "ratio_independent",
    "ratio_dependent",
    "misalignment_condition",
]
