"""
Pytest configuration and hooks for the marl-bench test suite.

Set MARL_BENCH_TIMING_FILE to have the session write per-test durations as JSON.
"""
import json
import os
from datetime import datetime

_timing_data = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: learning-curve sweeps that take tens of seconds")


def pytest_runtest_logreport(report):
    if report.when == "call":
        _timing_data[report.nodeid] = {
            "time_seconds": report.duration,
            "outcome": report.outcome,
        }


def pytest_sessionfinish(session, exitstatus):
    """Save timing data to JSON file after all tests complete."""
    output_file = os.environ.get("MARL_BENCH_TIMING_FILE")
    if not output_file or not _timing_data:
        return

    times = [info["time_seconds"] for info in _timing_data.values()]
    output_data = {
        "test_suite": "marl-bench",
        "timestamp": datetime.now().isoformat(),
        "total_tests": len(_timing_data),
        "tests": _timing_data,
        "summary": {
            "total_time_seconds": sum(times),
            "average_time_seconds": sum(times) / len(times),
            "min_time_seconds": min(times),
            "max_time_seconds": max(times),
        },
    }

    with open(output_file, "w") as f:
        json.dump(output_data, f, indent=2)

    print(f"\nTiming data saved to: {output_file}")
