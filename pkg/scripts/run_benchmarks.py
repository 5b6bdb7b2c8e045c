#!/usr/bin/env python3
"""Reproduce the benchmark tables for all presets.

Runs each preset uniformly and (where a predefined trace exists)
hierarchically, writing one output directory per run under the given root.

Usage: python3 scripts/run_benchmarks.py [OUTROOT]
"""

import sys
from pathlib import Path

from hibox.cli import main

RUNS = [
    ("hexagon", 4, "uniform"),
    ("hexagon", 4, "predefined"),
    ("quarter_circle", 4, "uniform"),
    ("quarter_circle", 4, "predefined"),
    ("zshape", 4, "uniform"),
    ("zshape", 4, "predefined"),
    ("triangle_hole", 4, "uniform"),
    ("triangle_hole", 4, "predefined"),
    ("unit_square_advection", 4, "adaptive"),
]


def run(outroot: Path) -> int:
    for preset, levels, mode in RUNS:
        out = outroot / f"{preset}_{mode}"
        print(f"== {preset} ({mode}, {levels} levels) -> {out}")
        strip = "removal" if mode == "predefined" else "thbox"
        code = main(
            [
                "run",
                "--preset", preset,
                "--levels", str(levels),
                "--mode", mode,
                "--strip", strip,
                "--output", str(out),
                "--svg",
            ]
        )
        if code != 0:
            return code
    return 0


if __name__ == "__main__":
    root = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("benchmark_out")
    sys.exit(run(root))
