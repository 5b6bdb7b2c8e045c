"""Deterministic SVG rendering of hierarchical meshes and boundary strips.

Cells are drawn as polygons colored by level; basis anchors are drawn with a
level-dependent marker shape (circle, square, diamond, triangle, ...).
Output bytes are a pure function of the input: iteration is sorted and
coordinates use a fixed decimal format.
"""

from __future__ import annotations

from .hierarchy import HierarchicalBasis, HierarchicalMesh
from .lattice import cell_vertices, refine_cells
from .strip import BoundaryStrip

# fill colors per level (cycled when deeper)
_LEVEL_FILLS = ("#f4f4f4", "#cfe3f7", "#f7ddc9", "#d9f0d3", "#ecd9f0", "#f7f3c9")
_STRIP_FILL = "#f2b6b6"
_SCALE = 60.0  # SVG units per parametric unit
_PAD = 10.0


def _fmt(x: float) -> str:
    return f"{x:.3f}".rstrip("0").rstrip(".")


def _poly(points, style: str) -> str:
    pts = " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in points)
    return f'<polygon points="{pts}" {style}/>'


class _Canvas:
    def __init__(self):
        self.elements: list[str] = []
        self.xmax = 1.0
        self.ymax = 1.0

    def track(self, pts):
        for x, y in pts:
            self.xmax = max(self.xmax, x)
            self.ymax = max(self.ymax, y)

    def to_svg(self) -> str:
        w = _fmt(self.xmax * _SCALE + 2 * _PAD)
        h = _fmt(self.ymax * _SCALE + 2 * _PAD)
        head = (
            '<?xml version="1.0" encoding="UTF-8"?>\n'
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" '
            f'height="{h}" viewBox="0 0 {w} {h}">\n'
        )
        body = "\n".join(self.elements)
        return head + body + ("\n" if body else "") + "</svg>\n"

    def xy(self, px: float, py: float):
        # flip y so the parametric origin sits at the bottom left
        return (
            px * _SCALE + _PAD,
            (self.ymax - py) * _SCALE + _PAD,
        )


def _collect_cells(mesh: HierarchicalMesh):
    out = []
    for lev, c in mesh.all_active():
        h = float(mesh.h(lev))
        verts = [(vx * h, vy * h) for vx, vy in cell_vertices(c)]
        out.append((lev, c, verts))
    return out


def _path(points, style: str) -> str:
    # markers are drawn as paths so that cell polygons stay countable
    head = f"M {_fmt(points[0][0])} {_fmt(points[0][1])}"
    rest = " ".join(f"L {_fmt(x)} {_fmt(y)}" for x, y in points[1:])
    return f'<path d="{head} {rest} Z" {style}/>'


def _marker(canvas: _Canvas, x: float, y: float, level: int) -> str:
    cx, cy = canvas.xy(x, y)
    r = 3.0
    style = 'fill="#333333" stroke="none"'
    shape = level % 4
    if shape == 0:
        return f'<circle cx="{_fmt(cx)}" cy="{_fmt(cy)}" r="{_fmt(r)}" {style}/>'
    if shape == 1:
        return (
            f'<rect x="{_fmt(cx - r)}" y="{_fmt(cy - r)}" '
            f'width="{_fmt(2 * r)}" height="{_fmt(2 * r)}" {style}/>'
        )
    if shape == 2:  # diamond
        pts = [(cx, cy - r), (cx + r, cy), (cx, cy + r), (cx - r, cy)]
        return _path(pts, style)
    pts = [(cx, cy - r), (cx + r, cy + r), (cx - r, cy + r)]  # triangle
    return _path(pts, style)


def render_mesh_svg(
    mesh: HierarchicalMesh | None, basis: HierarchicalBasis | None = None
) -> str:
    """One polygon per active cell, filled by level, plus optional anchor
    markers (one per basis function, shaped by level)."""
    canvas = _Canvas()
    if mesh is None:
        return canvas.to_svg()
    cells = _collect_cells(mesh)
    for _, _, verts in cells:
        canvas.track(verts)
    for lev, _, verts in cells:
        fill = _LEVEL_FILLS[lev % len(_LEVEL_FILLS)]
        style = f'fill="{fill}" stroke="#555555" stroke-width="0.6"'
        canvas.elements.append(
            _poly([canvas.xy(x, y) for x, y in verts], style)
        )
    if basis is not None:
        h0 = basis.h0
        for f in sorted(basis.functions, key=lambda f: (f.level, f.shift)):
            ax, ay = f.anchor(h0)
            canvas.elements.append(_marker(canvas, float(ax), float(ay), f.level))
    return canvas.to_svg()


def render_strip_svg(strip: BoundaryStrip) -> str:
    """Mesh outline with strip cells filled in a distinct style."""
    canvas = _Canvas()
    mesh = strip.mesh
    cells = _collect_cells(mesh)
    for _, _, verts in cells:
        canvas.track(verts)
    finest = mesh.nlevels - 1
    strip_fine = strip.fine_cells
    for lev, c, verts in cells:
        fine = refine_cells({c}, finest - lev)
        if fine <= strip_fine:
            style = (
                f'fill="{_STRIP_FILL}" stroke="#555555" '
                'stroke-width="0.6" class="strip"'
            )
        else:
            style = 'fill="none" stroke="#555555" stroke-width="0.6"'
        canvas.elements.append(
            _poly([canvas.xy(x, y) for x, y in verts], style)
        )
    return canvas.to_svg()
