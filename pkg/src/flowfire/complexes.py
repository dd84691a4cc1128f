"""Cell complexes the firing dynamics run on.

Three kinds are supported:

* ``GridComplex``: the infinite unit-square grid on Z^2.  Cells are never
  materialized; every incidence question is answered by coordinate
  arithmetic.
* ``PlanarComplex``: a finite planar complex given by explicit signed face
  lists.  The external face is part of the face list, so every edge lies in
  exactly two faces.
* ``NdGridComplex``: the grid of unit n-cubes in Z^n for n >= 2.  Only the
  top two levels are modelled: facets (n-cells) and ridges ((n-1)-cells).

Grid conventions.  The vertical edge V(x,y) runs from vertex (x,y) to
(x,y+1), oriented south to north; the horizontal edge H(x,y) runs from
(x,y) to (x+1,y), oriented west to east.  Face (x,y) is the unit square
with lower-left corner (x,y).  One unit of clockwise circulation around
face (x,y) contributes +1 to its top edge H(x,y+1) and its left edge
V(x,y), and -1 to its bottom edge H(x,y) and its right edge V(x+1,y),
relative to the orientations above.

Cell identifier syntax used in JSON files:

    grid     edges "H:x,y" and "V:x,y", faces "F:x,y"
    planar   edges "E:i", faces "F:i"
    ndgrid   facets "C:x1,...,xn", ridges "R:x1,...,xn;axis"

In-memory ids are plain tuples and ints: grid edges ("H", x, y) or
("V", x, y), grid faces (x, y), planar edges and faces ints, ndgrid
facets coordinate tuples, ndgrid ridges (facet, axis) with the
convention that ridge (c, i) separates facet c from facet c + e_i.
"""

from __future__ import annotations

from collections import deque

from .errors import InvalidComplex, Unreachable, UnknownEdge, UnknownFace


class GridComplex:
    """The infinite unit-square grid."""

    kind = "grid"

    def __init__(self, distinguished=None):
        self.distinguished = tuple(distinguished) if distinguished is not None else None

    def __eq__(self, other):
        return isinstance(other, GridComplex) and self.distinguished == other.distinguished

    def __hash__(self):
        return hash(("grid", self.distinguished))

    def __repr__(self):
        return f"GridComplex(distinguished={self.distinguished!r})"

    # -- structure queries ------------------------------------------------

    def is_edge(self, cell):
        return (
            isinstance(cell, tuple)
            and len(cell) == 3
            and cell[0] in ("H", "V")
            and isinstance(cell[1], int)
            and isinstance(cell[2], int)
        )

    def is_face(self, cell):
        return (
            isinstance(cell, tuple)
            and len(cell) == 2
            and isinstance(cell[0], int)
            and isinstance(cell[1], int)
        )

    def edge_endpoints(self, edge):
        """Tail and head vertex of an edge, in orientation order."""
        if not self.is_edge(edge):
            raise UnknownEdge(repr(edge))
        kind, x, y = edge
        if kind == "V":
            return (x, y), (x, y + 1)
        return (x, y), (x + 1, y)

    def incident_faces(self, edge):
        """The two faces containing ``edge`` with their traversal signs.

        Returned sorted by face id.  The sign is the coefficient the face's
        clockwise boundary puts on the edge.
        """
        if not self.is_edge(edge):
            raise UnknownEdge(repr(edge))
        kind, x, y = edge
        if kind == "V":
            return [((x - 1, y), -1), ((x, y), 1)]
        return [((x, y - 1), 1), ((x, y), -1)]

    def boundary(self, face):
        """Signed edges of one clockwise circulation around ``face``.

        Emitted in closed-walk order starting at the top-left corner.
        """
        if not self.is_face(face):
            raise UnknownFace(repr(face))
        x, y = face
        return [
            (("H", x, y + 1), 1),
            (("V", x + 1, y), -1),
            (("H", x, y), -1),
            (("V", x, y), 1),
        ]

    def face_neighbors(self, face):
        x, y = face
        return [(x - 1, y), (x, y - 1), (x, y + 1), (x + 1, y)]

    def shared_edges(self, a, b):
        """Edges between two faces (exactly one on the grid, or none)."""
        ax, ay = a
        bx, by = b
        dx, dy = bx - ax, by - ay
        if (dx, dy) == (1, 0):
            return [("V", bx, ay)]
        if (dx, dy) == (-1, 0):
            return [("V", ax, ay)]
        if (dx, dy) == (0, 1):
            return [("H", ax, by)]
        if (dx, dy) == (0, -1):
            return [("H", ax, ay)]
        return []

    def dual_distance(self, a, b):
        """Dual-graph distance between faces; on the grid this is Manhattan."""
        return abs(a[0] - b[0]) + abs(a[1] - b[1])

    def faces_within(self, center, radius):
        """All faces at dual distance <= radius from ``center``, sorted."""
        cx, cy = center
        out = []
        for dx in range(-radius, radius + 1):
            rest = radius - abs(dx)
            for dy in range(-rest, rest + 1):
                out.append((cx + dx, cy + dy))
        out.sort()
        return out

    def vertex_star(self, vertex):
        """Incident edges with +1 when the vertex is the head, -1 the tail."""
        x, y = vertex
        return [
            (("H", x - 1, y), 1),
            (("H", x, y), -1),
            (("V", x, y - 1), 1),
            (("V", x, y), -1),
        ]

    def degree(self, vertex):
        return 4

    def validate(self):
        if self.distinguished is not None and not self.is_face(self.distinguished):
            return [f"distinguished cell {self.distinguished!r} is not a face"]
        return []


class PlanarComplex:
    """A finite planar complex given by explicit signed face lists.

    ``edges`` is a list of (tail, head) vertex pairs; vertices are ints.
    ``faces`` is a list of boundary walks, each a list of (edge index,
    sign) pairs where sign +1 traverses tail to head.  The external face,
    when named, is an ordinary face used as the zero reference when a flow
    is integrated into face values.
    """

    kind = "planar"

    def __init__(self, edges, faces, external=None, distinguished=None):
        self.edges = [tuple(e) for e in edges]
        self.faces = [[(int(e), int(s)) for e, s in walk] for walk in faces]
        self.external = external
        self.distinguished = distinguished
        self._edge_faces = [[] for _ in self.edges]
        for fi, walk in enumerate(self.faces):
            for ei, sign in walk:
                if 0 <= ei < len(self.edges):
                    self._edge_faces[ei].append((fi, sign))
        self._neighbors = [set() for _ in self.faces]
        for ei, inc in enumerate(self._edge_faces):
            if len(inc) == 2 and inc[0][0] != inc[1][0]:
                self._neighbors[inc[0][0]].add(inc[1][0])
                self._neighbors[inc[1][0]].add(inc[0][0])
        self._vertex_star = {}
        for ei, (tail, head) in enumerate(self.edges):
            self._vertex_star.setdefault(tail, []).append((ei, -1))
            self._vertex_star.setdefault(head, []).append((ei, 1))

    def __eq__(self, other):
        return (
            isinstance(other, PlanarComplex)
            and self.edges == other.edges
            and self.faces == other.faces
            and self.external == other.external
            and self.distinguished == other.distinguished
        )

    def __hash__(self):
        return hash(("planar", len(self.edges), len(self.faces), self.external, self.distinguished))

    def __repr__(self):
        return f"PlanarComplex({len(self.edges)} edges, {len(self.faces)} faces)"

    def is_edge(self, cell):
        return isinstance(cell, int) and 0 <= cell < len(self.edges)

    def is_face(self, cell):
        return isinstance(cell, int) and 0 <= cell < len(self.faces)

    def edge_endpoints(self, edge):
        if not self.is_edge(edge):
            raise UnknownEdge(repr(edge))
        return self.edges[edge]

    def incident_faces(self, edge):
        if not self.is_edge(edge):
            raise UnknownEdge(repr(edge))
        return sorted(self._edge_faces[edge])

    def boundary(self, face):
        if not self.is_face(face):
            raise UnknownFace(repr(face))
        return [(ei, s) for ei, s in self.faces[face]]

    def face_neighbors(self, face):
        if not self.is_face(face):
            raise UnknownFace(repr(face))
        return sorted(self._neighbors[face])

    def shared_edges(self, a, b):
        out = []
        for ei, inc in enumerate(self._edge_faces):
            if len(inc) == 2:
                fs = {inc[0][0], inc[1][0]}
                if fs == {a, b}:
                    out.append(ei)
        return out

    def dual_distance(self, a, b):
        if not self.is_face(a):
            raise UnknownFace(repr(a))
        if not self.is_face(b):
            raise UnknownFace(repr(b))
        if a == b:
            return 0
        dist = {a: 0}
        queue = deque([a])
        while queue:
            cur = queue.popleft()
            for nxt in self._neighbors[cur]:
                if nxt not in dist:
                    dist[nxt] = dist[cur] + 1
                    if nxt == b:
                        return dist[nxt]
                    queue.append(nxt)
        raise Unreachable(f"face {b} is not reachable from face {a} in the dual graph")

    def faces_within(self, center, radius):
        dist = {center: 0}
        queue = deque([center])
        while queue:
            cur = queue.popleft()
            if dist[cur] == radius:
                continue
            for nxt in self._neighbors[cur]:
                if nxt not in dist:
                    dist[nxt] = dist[cur] + 1
                    queue.append(nxt)
        return sorted(dist)

    def vertex_star(self, vertex):
        return list(self._vertex_star.get(vertex, []))

    def degree(self, vertex):
        return len(self._vertex_star.get(vertex, []))

    def validate(self):
        """Return a list of invariant violations; empty means valid."""
        bad = []
        for fi, walk in enumerate(self.faces):
            if not walk:
                bad.append(f"face {fi} has an empty boundary")
                continue
            for ei, sign in walk:
                if not 0 <= ei < len(self.edges):
                    bad.append(f"face {fi} references unknown edge {ei}")
                elif sign not in (-1, 1):
                    bad.append(f"face {fi} uses sign {sign} on edge {ei}")
        if bad:
            return bad
        for fi, walk in enumerate(self.faces):
            start = None
            cur = None
            ok = True
            for ei, sign in walk:
                tail, head = self.edges[ei]
                src, dst = (tail, head) if sign == 1 else (head, tail)
                if start is None:
                    start, cur = src, dst
                elif src != cur:
                    ok = False
                    break
                else:
                    cur = dst
            if not ok or cur != start:
                bad.append(f"face {fi} boundary is not a closed walk")
        for ei, inc in enumerate(self._edge_faces):
            if len(inc) != 2:
                bad.append(f"edge {ei} appears in {len(inc)} face boundaries, expected 2")
                continue
            (fa, sa), (fb, sb) = inc
            if sa + sb != 0:
                bad.append(f"edge {ei} is traversed with equal signs by faces {fa} and {fb}")
        if self.external is not None and not self.is_face(self.external):
            bad.append(f"external face {self.external!r} does not exist")
        if self.distinguished is not None and not self.is_face(self.distinguished):
            bad.append(f"distinguished face {self.distinguished!r} does not exist")
        return bad


class NdGridComplex:
    """The grid of unit n-cubes in Z^n, modelled at the facet/ridge level.

    Ridge (c, i) is the shared wall between facet c and facet c + e_i; its
    incidence signs are fixed as +1 on c and -1 on c + e_i.
    """

    kind = "ndgrid"

    def __init__(self, n, distinguished=None):
        if not isinstance(n, int) or n < 2:
            raise InvalidComplex([f"ndgrid dimension must be an int >= 2, got {n!r}"])
        self.n = n
        self.distinguished = tuple(distinguished) if distinguished is not None else None

    def __eq__(self, other):
        return (
            isinstance(other, NdGridComplex)
            and self.n == other.n
            and self.distinguished == other.distinguished
        )

    def __hash__(self):
        return hash(("ndgrid", self.n, self.distinguished))

    def __repr__(self):
        return f"NdGridComplex(n={self.n}, distinguished={self.distinguished!r})"

    def is_face(self, cell):
        return (
            isinstance(cell, tuple)
            and len(cell) == self.n
            and all(isinstance(c, int) for c in cell)
        )

    def is_edge(self, cell):
        return (
            isinstance(cell, tuple)
            and len(cell) == 2
            and self.is_face(cell[0])
            and isinstance(cell[1], int)
            and 0 <= cell[1] < self.n
        )

    def incident_faces(self, ridge):
        if not self.is_edge(ridge):
            raise UnknownEdge(repr(ridge))
        c, axis = ridge
        upper = c[:axis] + (c[axis] + 1,) + c[axis + 1 :]
        return [(c, 1), (upper, -1)]

    def boundary(self, facet):
        if not self.is_face(facet):
            raise UnknownFace(repr(facet))
        out = []
        for axis in range(self.n):
            lower = facet[:axis] + (facet[axis] - 1,) + facet[axis + 1 :]
            out.append(((lower, axis), -1))
            out.append(((facet, axis), 1))
        return out

    def face_neighbors(self, facet):
        out = []
        for axis in range(self.n):
            for d in (-1, 1):
                out.append(facet[:axis] + (facet[axis] + d,) + facet[axis + 1 :])
        out.sort()
        return out

    def shared_edges(self, a, b):
        diff = [(i, b[i] - a[i]) for i in range(self.n) if a[i] != b[i]]
        if len(diff) != 1 or abs(diff[0][1]) != 1:
            return []
        axis, d = diff[0]
        lower = a if d == 1 else b
        return [(lower, axis)]

    def dual_distance(self, a, b):
        return sum(abs(a[i] - b[i]) for i in range(self.n))

    def faces_within(self, center, radius):
        out = []

        def fill(prefix, axis, budget):
            if axis == self.n - 1:
                for d in range(-budget, budget + 1):
                    out.append(prefix + (center[axis] + d,))
                return
            for d in range(-budget, budget + 1):
                fill(prefix + (center[axis] + d,), axis + 1, budget - abs(d))

        fill((), 0, radius)
        out.sort()
        return out

    def validate(self):
        if self.distinguished is not None and not self.is_face(self.distinguished):
            return [f"distinguished cell {self.distinguished!r} is not a facet"]
        return []


# -- cell identifier syntax ----------------------------------------------


def format_cell(cx, cell):
    """Render a cell id in the JSON identifier syntax."""
    if cx.kind == "grid":
        if cx.is_edge(cell):
            return f"{cell[0]}:{cell[1]},{cell[2]}"
        if cx.is_face(cell):
            return f"F:{cell[0]},{cell[1]}"
    elif cx.kind == "planar":
        if isinstance(cell, int):
            raise ValueError("planar cells are ambiguous without a level; use format_edge/format_face")
    elif cx.kind == "ndgrid":
        if cx.is_face(cell):
            return "C:" + ",".join(str(c) for c in cell)
        if cx.is_edge(cell):
            return "R:" + ",".join(str(c) for c in cell[0]) + f";{cell[1]}"
    raise ValueError(f"cannot format cell {cell!r} for a {cx.kind} complex")


def format_edge(cx, edge):
    if cx.kind == "planar":
        return f"E:{edge}"
    return format_cell(cx, edge)


def format_face(cx, face):
    if cx.kind == "planar":
        return f"F:{face}"
    return format_cell(cx, face)


def parse_cell(cx, text):
    """Parse a JSON cell identifier; returns (level, cell) with level "edge" or "face"."""
    if not isinstance(text, str) or ":" not in text:
        raise ValueError(f"malformed cell id {text!r}")
    prefix, _, rest = text.partition(":")
    try:
        if cx.kind == "grid":
            if prefix in ("H", "V"):
                x, y = (int(p) for p in rest.split(","))
                return "edge", (prefix, x, y)
            if prefix == "F":
                x, y = (int(p) for p in rest.split(","))
                return "face", (x, y)
        elif cx.kind == "planar":
            if prefix == "E":
                edge = int(rest)
                if not cx.is_edge(edge):
                    raise UnknownEdge(text)
                return "edge", edge
            if prefix == "F":
                face = int(rest)
                if not cx.is_face(face):
                    raise UnknownFace(text)
                return "face", face
        elif cx.kind == "ndgrid":
            if prefix == "C":
                coords = tuple(int(p) for p in rest.split(","))
                if len(coords) != cx.n:
                    raise UnknownFace(text)
                return "face", coords
            if prefix == "R":
                coord_part, _, axis_part = rest.partition(";")
                coords = tuple(int(p) for p in coord_part.split(","))
                axis = int(axis_part)
                ridge = (coords, axis)
                if not cx.is_edge(ridge):
                    raise UnknownEdge(text)
                return "edge", ridge
    except ValueError as exc:
        raise ValueError(f"malformed cell id {text!r}") from exc
    raise ValueError(f"cell id {text!r} does not name a {cx.kind} cell")


def parse_face(cx, text):
    level, cell = parse_cell(cx, text)
    if level != "face":
        raise UnknownFace(f"{text!r} is not a face id")
    return cell


def parse_edge(cx, text):
    level, cell = parse_cell(cx, text)
    if level != "edge":
        raise UnknownEdge(f"{text!r} is not an edge id")
    return cell


# -- JSON files ------------------------------------------------------------


def load_complex(obj):
    """Build a complex from its JSON object form; raises InvalidComplex."""
    if not isinstance(obj, dict) or "kind" not in obj:
        raise InvalidComplex(["complex object must carry a 'kind' field"])
    kind = obj["kind"]
    if kind == "grid":
        cx = GridComplex()
        if obj.get("distinguished") is not None:
            cx = GridComplex(parse_face(cx, obj["distinguished"]))
    elif kind == "ndgrid":
        if "n" not in obj:
            raise InvalidComplex(["ndgrid complex needs a dimension field 'n'"])
        cx = NdGridComplex(obj["n"])
        if obj.get("distinguished") is not None:
            cx = NdGridComplex(cx.n, parse_face(cx, obj["distinguished"]))
    elif kind == "planar":
        try:
            edges = [(int(t), int(h)) for t, h in obj.get("edges", [])]
            faces = [[(int(e), int(s)) for e, s in walk] for walk in obj.get("faces", [])]
        except (TypeError, ValueError) as exc:
            raise InvalidComplex([f"malformed planar complex data: {exc}"]) from exc
        external = obj.get("external")
        distinguished = obj.get("distinguished")
        if isinstance(distinguished, str):
            distinguished = int(distinguished.partition(":")[2])
        cx = PlanarComplex(edges, faces, external=external, distinguished=distinguished)
    else:
        raise InvalidComplex([f"unknown complex kind {kind!r}"])
    violations = cx.validate()
    if violations:
        raise InvalidComplex(violations)
    return cx


def dump_complex(cx):
    if cx.kind == "grid":
        out = {"kind": "grid"}
        if cx.distinguished is not None:
            out["distinguished"] = format_face(cx, cx.distinguished)
        return out
    if cx.kind == "ndgrid":
        out = {"kind": "ndgrid", "n": cx.n}
        if cx.distinguished is not None:
            out["distinguished"] = format_face(cx, cx.distinguished)
        return out
    out = {
        "kind": "planar",
        "edges": [list(e) for e in cx.edges],
        "faces": [[list(p) for p in walk] for walk in cx.faces],
    }
    if cx.external is not None:
        out["external"] = cx.external
    if cx.distinguished is not None:
        out["distinguished"] = cx.distinguished
    return out


def with_distinguished(cx, face):
    """A copy of ``cx`` with the distinguished face replaced."""
    if not cx.is_face(face):
        raise UnknownFace(f"{face!r} is not a face of this {cx.kind} complex")
    if cx.kind == "grid":
        return GridComplex(face)
    if cx.kind == "ndgrid":
        return NdGridComplex(cx.n, face)
    return PlanarComplex(cx.edges, cx.faces, external=cx.external, distinguished=face)


# -- hand-specifiable example complexes ------------------------------------


def finite_grid_patch(width, height, external_name=True, distinguished=None):
    """A width x height patch of the square grid as a finite planar complex.

    Faces 0..width*height-1 are the squares in row-major order (y major),
    the last face is the external one.  The boundary walks of the inner
    faces follow the grid's clockwise convention; the external face
    traverses the outer cycle in the opposite direction.
    """

    def vid(x, y):
        return y * (width + 1) + x

    edges = []
    h_index = {}
    v_index = {}
    for y in range(height + 1):
        for x in range(width):
            h_index[(x, y)] = len(edges)
            edges.append((vid(x, y), vid(x + 1, y)))
    for y in range(height):
        for x in range(width + 1):
            v_index[(x, y)] = len(edges)
            edges.append((vid(x, y), vid(x, y + 1)))

    faces = []
    face_index = {}
    for y in range(height):
        for x in range(width):
            face_index[(x, y)] = len(faces)
            faces.append(
                [
                    (h_index[(x, y + 1)], 1),
                    (v_index[(x + 1, y)], -1),
                    (h_index[(x, y)], -1),
                    (v_index[(x, y)], 1),
                ]
            )

    # The outer cycle, counterclockwise as seen from inside the patch,
    # which is the reverse of how the inner squares traverse it.
    outer = []
    for x in range(width):
        outer.append((h_index[(x, 0)], 1))
    for y in range(height):
        outer.append((v_index[(width, y)], 1))
    for x in reversed(range(width)):
        outer.append((h_index[(x, height)], -1))
    for y in reversed(range(height)):
        outer.append((v_index[(0, y)], -1))
    external = len(faces)
    faces.append(outer)

    dist = face_index[distinguished] if distinguished is not None else None
    cx = PlanarComplex(edges, faces, external=external if external_name else None, distinguished=dist)
    cx.face_index = dict(face_index)
    return cx


def theta_complex(distinguished=None):
    """Two vertices joined by three parallel edges; three faces.

    Faces 0 and 2 are the outer pair (2 is external), face 1 sits between
    them.  The dual graph is a triangle.  Good for small hand enumerations:
    every face is a neighbor of every other.
    """
    edges = [(0, 1), (0, 1), (0, 1)]
    faces = [
        [(0, 1), (1, -1)],
        [(1, 1), (2, -1)],
        [(2, 1), (0, -1)],
    ]
    return PlanarComplex(edges, faces, external=2, distinguished=distinguished)
