#!/usr/bin/env python3
"""Precompute the fine-mesh reference solutions used by the benchmark tables.

The Z-shape and triangle-with-hole presets have no analytic solution; their
errors are measured against a uniform solve at 6 levels, cached on disk.
This script populates the cache (HIBOX_CACHE_DIR, or ~/.cache/hibox).
Expect a few minutes per preset.

Usage: python3 scripts/build_references.py [LEVELS]
"""

import sys
import time

from hibox.cache import reference_values
from hibox.presets import preset_by_name


def build(levels: int) -> None:
    for name in ("zshape", "triangle_hole"):
        t0 = time.time()
        values = reference_values(preset_by_name(name), levels)
        print(
            f"{name}: cached {values.size} sample values at {levels} levels "
            f"({time.time() - t0:.0f}s)"
        )


if __name__ == "__main__":
    build(int(sys.argv[1]) if len(sys.argv) > 1 else 6)
