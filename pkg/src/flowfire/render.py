"""Deterministic text and SVG pictures of configurations.

Grid configurations are drawn inside an explicit window of face
coordinates (x0, y0, x1, y1), inclusive; the infinite grid has no natural
crop, so the caller must pick one.  Planar configurations are finite and
render as sorted value tables.  Output is built with plain string
formatting only, so the same configuration always yields the same bytes.
"""

from __future__ import annotations

from .complexes import format_edge, format_face


def render(state, fmt="ascii", window=None, hole=None):
    cx = state.complex
    if cx.kind == "grid":
        if window is None:
            raise ValueError("rendering the infinite grid needs an explicit window")
        if fmt == "ascii":
            if state.rep == "face":
                return _grid_faces_ascii(state, window, hole)
            return _grid_edges_ascii(state, window, hole)
        if fmt == "svg":
            return _grid_svg(state, window, hole)
        raise ValueError(f"unknown format {fmt!r}")
    if cx.kind == "planar":
        if fmt == "ascii":
            return _planar_ascii(state, hole)
        raise ValueError("planar complexes render as text tables only")
    raise ValueError("rendering supports grid and planar complexes; export JSON for the ndgrid")


def _hole_face(state, hole):
    if hole is not None:
        return hole
    return state.complex.distinguished


def _grid_faces_ascii(state, window, hole):
    x0, y0, x1, y1 = window
    hole = _hole_face(state, hole)
    cells = {}
    width = 1
    for y in range(y0, y1 + 1):
        for x in range(x0, x1 + 1):
            text = str(state.values.get((x, y), 0))
            if (x, y) == hole:
                text = f"({text})"
            cells[(x, y)] = text
            width = max(width, len(text))
    lines = []
    for y in range(y1, y0 - 1, -1):
        lines.append(" ".join(cells[(x, y)].rjust(width) for x in range(x0, x1 + 1)))
    return "\n".join(lines) + "\n"


def _grid_edges_ascii(state, window, hole):
    """Lattice picture: '+' corners, flows as counts with direction marks.

    Horizontal edges read left to right as '-N>-' (eastward) or '-<N-';
    vertical edges show '^' or 'v' with the count beside.  Zero edges are
    left blank so the flow stands out.
    """
    x0, y0, x1, y1 = window
    hole = _hole_face(state, hole)
    get = state.values.get
    counts = [abs(v) for v in state.values.values()]
    digits = max((len(str(c)) for c in counts), default=1)
    cell = digits + 4

    def h_label(x, y):
        v = get(("H", x, y), 0)
        if v == 0:
            return " " * cell
        if v > 0:
            return f"{v}>".center(cell, "-")
        return f"<{-v}".center(cell, "-")

    def v_label(x, y):
        v = get(("V", x, y), 0)
        if v == 0:
            return " ".ljust(digits + 1)
        if v > 0:
            return f"^{v}".ljust(digits + 1)
        return f"v{-v}".ljust(digits + 1)

    lines = []
    for y in range(y1 + 1, y0 - 1, -1):
        row = []
        for x in range(x0, x1 + 1):
            row.append("+")
            row.append(h_label(x, y))
        row.append("+")
        lines.append("".join(row))
        if y > y0:
            row = []
            for x in range(x0, x1 + 2):
                row.append(v_label(x, y - 1))
                if x <= x1:
                    row.append(" " * (cell - digits))
            lines.append("".join(row).rstrip())
    return "\n".join(line.rstrip() for line in lines) + "\n"


def _planar_ascii(state, hole):
    cx = state.complex
    hole = _hole_face(state, hole)
    lines = []
    if state.rep == "face":
        for face in range(len(cx.faces)):
            v = state.values.get(face, 0)
            mark = ""
            if face == hole:
                mark = "  (hole)"
            elif face == cx.external:
                mark = "  (external)"
            lines.append(f"{format_face(cx, face)} = {v}{mark}")
    else:
        for edge in range(len(cx.edges)):
            v = state.values.get(edge, 0)
            tail, head = cx.edge_endpoints(edge)
            lines.append(f"{format_edge(cx, edge)} [{tail}->{head}] = {v}")
    return "\n".join(lines) + "\n"


_SVG_CELL = 48


def _grid_svg(state, window, hole):
    x0, y0, x1, y1 = window
    hole = _hole_face(state, hole)
    s = _SVG_CELL
    w = (x1 - x0 + 1) * s
    h = (y1 - y0 + 1) * s

    def fx(x):
        return (x - x0) * s

    def fy(y):
        # SVG y grows downward; face (x, y1) sits at the top.
        return (y1 - y) * s

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" '
        f'viewBox="0 0 {w} {h}" font-family="monospace" font-size="14">',
        f'<rect width="{w}" height="{h}" fill="white"/>',
    ]
    if state.rep == "face":
        for y in range(y1, y0 - 1, -1):
            for x in range(x0, x1 + 1):
                v = state.values.get((x, y), 0)
                fill = "#ffffff" if v == 0 else ("#cfe8ff" if v > 0 else "#ffd6d6")
                extra = ""
                if (x, y) == hole:
                    extra = ' stroke="#d97706" stroke-width="3"'
                    if v == 0:
                        fill = "#fff7e6"
                parts.append(
                    f'<rect x="{fx(x)}" y="{fy(y)}" width="{s}" height="{s}" '
                    f'fill="{fill}" stroke="#888"{extra}/>'
                )
                if v != 0 or (x, y) == hole:
                    parts.append(
                        f'<text x="{fx(x) + s // 2}" y="{fy(y) + s // 2 + 5}" '
                        f'text-anchor="middle">{v}</text>'
                    )
    else:
        for y in range(y0, y1 + 2):
            parts.append(
                f'<line x1="0" y1="{fy(y) + s}" x2="{w}" y2="{fy(y) + s}" stroke="#ddd"/>'
            )
        for x in range(x0, x1 + 2):
            parts.append(
                f'<line x1="{fx(x)}" y1="0" x2="{fx(x)}" y2="{h}" stroke="#ddd"/>'
            )
        for edge in sorted(state.values):
            v = state.values[edge]
            kind, x, y = edge
            if kind == "H":
                xa, ya, xb, yb = fx(x), fy(y) + s, fx(x + 1), fy(y) + s
            else:
                xa, ya, xb, yb = fx(x), fy(y) + s, fx(x), fy(y)
            if v < 0:
                xa, ya, xb, yb = xb, yb, xa, ya
            parts.append(
                f'<line x1="{xa}" y1="{ya}" x2="{xb}" y2="{yb}" stroke="#1d4ed8" '
                f'stroke-width="2" marker-end="url(#arrow)"/>'
            )
            parts.append(
                f'<text x="{(xa + xb) // 2 + 4}" y="{(ya + yb) // 2 - 4}" '
                f'fill="#1d4ed8">{abs(v)}</text>'
            )
        parts.insert(
            2,
            '<defs><marker id="arrow" viewBox="0 0 10 10" refX="9" refY="5" '
            'markerWidth="6" markerHeight="6" orient="auto-start-reverse">'
            '<path d="M 0 0 L 10 5 L 0 10 z" fill="#1d4ed8"/></marker></defs>',
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
