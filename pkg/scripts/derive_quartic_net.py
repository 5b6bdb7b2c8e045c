#!/usr/bin/env python3
"""Derive the quartic generator's Bernstein-Bezier table from the
convolution oracle and freeze it into src/hibox/_quartic_net.py.

Run from the repo root:  python3 scripts/derive_quartic_net.py
"""

import pathlib
import sys

import numpy as np

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from hibox.boxspline import MI4, QUARTIC, evaluate_oracle_many  # noqa: E402
from hibox.lattice import LOWER, cell_centroid, cell_vertices, cells_in_box  # noqa: E402


def hexagon_contains(px, py):
    # support hexagon (0,0),(2,0),(4,2),(4,4),(2,4),(0,2)
    return (
        0 <= px <= 4
        and 0 <= py <= 4
        and py >= px - 2
        and py <= px + 2
    )


def main():
    support_cells = []
    for c in cells_in_box(0, 0, 4, 4):
        cx, cy = cell_centroid(c)
        if hexagon_contains(cx, cy):
            support_cells.append(c)
    assert len(support_cells) == 24, len(support_cells)

    table = {}
    max_resid = 0.0
    for cell in sorted(support_cells):
        verts = np.array(cell_vertices(cell), float)
        # degree-4 domain points and the Bernstein collocation matrix
        lam = np.array(MI4, float) / 4.0
        pts = lam @ verts
        vals = evaluate_oracle_many(QUARTIC, pts)
        B = np.zeros((15, 15))
        for r in range(15):
            u, v, w = lam[r]
            for k, (a, b, c) in enumerate(MI4):
                mult = __import__("math").factorial(4) / (
                    __import__("math").factorial(a) * __import__("math").factorial(b) * __import__("math").factorial(c)
                )
                B[r, k] = mult * u**a * v**b * w**c
        coef = np.linalg.solve(B, vals)
        scaled = coef * 24
        ints = np.rint(scaled).astype(int)
        resid = np.max(np.abs(scaled - ints))
        max_resid = max(max_resid, resid)
        table[cell] = tuple(int(x) for x in ints)

    print(f"max rounding residual x24: {max_resid:.3e}")
    assert max_resid < 1e-6

    out = pathlib.Path(__file__).resolve().parents[1] / "src" / "hibox" / "_quartic_net.py"
    lines = [
        '"""Bernstein coefficients (x24) of the C^2 quartic generator on its',
        '24 support triangles.  Generated by scripts/derive_quartic_net.py;',
        'coefficient order follows hibox.boxspline.MI4."""',
        "",
        "QUARTIC_NET_X24 = {",
    ]
    for cell in sorted(table):
        lines.append(f"    {cell}: {table[cell]},")
    lines.append("}")
    out.write_text("\n".join(lines) + "\n")
    print(f"wrote {out}")

    lo = sum(1 for c in table if c[2] == LOWER)
    print(f"{len(table)} cells ({lo} lower), central value x24 at (2,2): ")


if __name__ == "__main__":
    main()
