"""File exports: legacy VTK for tooling, SVG flow nets for people.

VTK output is ASCII with 17 significant digits so a write/parse round trip
reproduces every double bit for bit.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from .errors import PostprocError
from .fem import SolveResult
from .postproc import phreatic_line, velocity_field

_F = "%.17g"


def _fmt_row(values) -> str:
    return " ".join(_F % v for v in values)


def write_vtk(solution: SolveResult, path) -> Path:
    """Legacy ASCII VTK unstructured grid with point and cell fields."""
    mesh = solution.mesh
    vel = velocity_field(solution)
    n, m = mesh.node_count, mesh.element_count
    lines = [
        "# vtk DataFile Version 3.0",
        "seepage solution",
        "ASCII",
        "DATASET UNSTRUCTURED_GRID",
        f"POINTS {n} double",
    ]
    for x, y in mesh.nodes:
        lines.append(_fmt_row((x, y, 0.0)))
    lines.append(f"CELLS {m} {4 * m}")
    for tri in mesh.elements:
        lines.append(f"3 {tri[0]} {tri[1]} {tri[2]}")
    lines.append(f"CELL_TYPES {m}")
    lines.extend(["5"] * m)

    lines.append(f"POINT_DATA {n}")
    for name, field in (("head", solution.head), ("pressure", solution.pressure)):
        lines.append(f"SCALARS {name} double 1")
        lines.append("LOOKUP_TABLE default")
        lines.extend(_F % v for v in field)

    lines.append(f"CELL_DATA {m}")
    lines.append("VECTORS velocity double")
    for vx, vy in vel:
        lines.append(_fmt_row((vx, vy, 0.0)))
    lines.append("SCALARS kr double 1")
    lines.append("LOOKUP_TABLE default")
    lines.extend(_F % v for v in solution.kr)

    out = Path(path)
    out.write_text("\n".join(lines) + "\n")
    return out


def read_vtk(path) -> dict:
    """Parse a file written by write_vtk (not a general VTK reader)."""
    tokens = Path(path).read_text().split("\n")
    it = iter(range(len(tokens)))
    if tokens[0] != "# vtk DataFile Version 3.0":
        raise PostprocError(f"{path}: not a legacy VTK 3.0 file")
    i = 4
    if tokens[3] != "DATASET UNSTRUCTURED_GRID":
        raise PostprocError(f"{path}: unexpected dataset type {tokens[3]!r}")

    out: dict = {}

    def expect(prefix):
        nonlocal i
        if not tokens[i].startswith(prefix):
            raise PostprocError(f"{path}: expected {prefix!r} at line {i + 1}")
        parts = tokens[i].split()
        i += 1
        return parts

    parts = expect("POINTS")
    n = int(parts[1])
    pts = np.array([[float(v) for v in tokens[i + k].split()] for k in range(n)])
    i += n
    out["points"] = pts[:, :2]

    parts = expect("CELLS")
    m = int(parts[1])
    cells = np.array(
        [[int(v) for v in tokens[i + k].split()[1:]] for k in range(m)], dtype=np.int64
    )
    i += m
    out["cells"] = cells
    expect("CELL_TYPES")
    i += m

    def read_scalars(count):
        nonlocal i
        name = tokens[i].split()[1]
        i += 2  # SCALARS line + LOOKUP_TABLE line
        vals = np.array([float(tokens[i + k]) for k in range(count)])
        i += count
        return name, vals

    expect("POINT_DATA")
    while i < len(tokens) and tokens[i].startswith("SCALARS"):
        name, vals = read_scalars(n)
        out[name] = vals

    expect("CELL_DATA")
    expect("VECTORS")
    out["velocity"] = np.array(
        [[float(v) for v in tokens[i + k].split()[:2]] for k in range(m)]
    )
    i += m
    while i < len(tokens) and tokens[i].startswith("SCALARS"):
        name, vals = read_scalars(m)
        out[name] = vals
    return out


# --- SVG flow net -----------------------------------------------------------

_PALETTE = (
    "#c8b27a", "#8a9a5b", "#b0785a", "#7a9ec8", "#c8c87a",
    "#9a7ab0", "#6aa3a3", "#c89a7a", "#7ab07a", "#a3a36a",
    "#b07a9a", "#7a7ac8", "#c87a7a", "#7ac8c8", "#9ab07a",
    "#a37aa3", "#8a8a8a",
)


def _level_set_segments(mesh, field, level, tol=1e-12):
    """Line segments of {field == level} cut element by element."""
    segs = []
    for tri in mesh.elements:
        pts = []
        for k in range(3):
            a, b = tri[k], tri[(k + 1) % 3]
            fa, fb = field[a] - level, field[b] - level
            if fa > tol and fb > tol or fa < -tol and fb < -tol:
                continue
            if abs(fa - fb) < tol:
                continue
            t = fa / (fa - fb)
            if -tol <= t <= 1 + tol:
                pts.append(mesh.nodes[a] + t * (mesh.nodes[b] - mesh.nodes[a]))
        if len(pts) == 2 and not np.allclose(pts[0], pts[1]):
            segs.append((pts[0], pts[1]))
    return segs


def write_svg(
    solution: SolveResult,
    path,
    equipotentials: int = 15,
    width_px: float = 900.0,
    glyphs: int = 150,
) -> Path:
    """Flow-net picture: zone fills, head contours, phreatic line, velocity
    glyphs. equipotentials=0 drops the contours (and glyphs stay)."""
    mesh = solution.mesh
    x0, y0 = mesh.nodes.min(axis=0)
    x1, y1 = mesh.nodes.max(axis=0)
    pad = 0.03 * max(x1 - x0, y1 - y0)
    scale = width_px / (x1 - x0 + 2 * pad)
    height_px = (y1 - y0 + 2 * pad) * scale

    def tx(p):
        return (
            (p[0] - x0 + pad) * scale,
            height_px - (p[1] - y0 + pad) * scale,
        )

    def poly_path(coords):
        return "M" + "L".join(f"{x:.2f},{y:.2f}" for x, y in map(tx, coords)) + "Z"

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{width_px:.0f}" height="{height_px:.0f}" '
        f'viewBox="0 0 {width_px:.0f} {height_px:.0f}">',
        f'<rect width="{width_px:.0f}" height="{height_px:.0f}" fill="#fcfbf7"/>',
    ]

    parts.append('<g stroke="#555" stroke-width="0.6">')
    for zi, zone in enumerate(mesh.zones):
        color = _PALETTE[zi % len(_PALETTE)]
        parts.append(
            f'<path d="{poly_path(zone.vertices)}" fill="{color}" '
            f'fill-opacity="0.55"><title>{zone.name}</title></path>'
        )
    parts.append("</g>")

    if equipotentials > 0:
        hmin, hmax = float(solution.head.min()), float(solution.head.max())
        levels = np.linspace(hmin, hmax, equipotentials + 2)[1:-1]
        parts.append('<g stroke="#1a4f8a" stroke-width="0.8" fill="none">')
        for lev in levels:
            for a, b in _level_set_segments(mesh, solution.head, lev):
                (ax, ay), (bx, by) = tx(a), tx(b)
                parts.append(f'<path d="M{ax:.2f},{ay:.2f}L{bx:.2f},{by:.2f}"/>')
        parts.append("</g>")

    line = phreatic_line(solution)
    if line.points.size:
        d = "M" + "L".join(f"{x:.2f},{y:.2f}" for x, y in map(tx, line.points))
        parts.append(
            f'<path d="{d}" fill="none" stroke="#0b7285" '
            f'stroke-width="2.0" stroke-dasharray="7,4" class="phreatic"/>'
        )

    vel = velocity_field(solution)
    speed = np.hypot(vel[:, 0], vel[:, 1])
    if glyphs > 0 and speed.max() > 0:
        order = np.argsort(speed)[::-1]
        pick = order[: max(1, min(glyphs, len(order)))]
        vmax = speed[pick[0]]
        cent = mesh.nodes[mesh.elements].mean(axis=1)
        parts.append('<g stroke="#8a1a1a" stroke-width="0.9">')
        for e in pick:
            if speed[e] < 1e-3 * vmax:
                continue
            L = 14.0 * math.sqrt(speed[e] / vmax)
            ux, uy = vel[e] / speed[e]
            ax, ay = tx(cent[e])
            bx, by = ax + L * ux, ay - L * uy
            parts.append(f'<line x1="{ax:.2f}" y1="{ay:.2f}" x2="{bx:.2f}" y2="{by:.2f}"/>')
            # arrowhead
            hx, hy = bx - ax, by - ay
            parts.append(
                f'<line x1="{bx:.2f}" y1="{by:.2f}" '
                f'x2="{bx - 0.35 * hx + 0.2 * hy:.2f}" y2="{by - 0.35 * hy - 0.2 * hx:.2f}"/>'
            )
        parts.append("</g>")

    parts.append("</svg>")
    out = Path(path)
    out.write_text("\n".join(parts) + "\n")
    return out


def export_flow_net(solution: SolveResult, directory, stem: str, **svg_kwargs):
    """Write `<stem>.vtk` and `<stem>.svg` into `directory`."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    vtk = write_vtk(solution, directory / f"{stem}.vtk")
    svg = write_svg(solution, directory / f"{stem}.svg", **svg_kwargs)
    return vtk, svg
