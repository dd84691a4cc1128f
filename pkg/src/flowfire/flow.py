"""Flow representations and the conversions between them.

An ``EdgeFlow`` assigns an integer to finitely many edges; positive values
run along the edge orientation.  A ``FaceRep`` assigns an integer to
finitely many faces; positive values are clockwise circulations.  A face
assignment induces the edge flow

    f(e) = sum over faces containing e of sign(e, face) * value(face)

and a conservative edge flow integrates back to a unique finite-support
face assignment (on a finite planar complex: unique once the external
face is pinned to zero).

Values are kept within signed 64-bit range so serialized configurations
mean the same thing everywhere; crossing the bound raises ValueOverflow
instead of wrapping.
"""

from __future__ import annotations

from collections import deque

from .complexes import format_edge, format_face, parse_cell
from .errors import (
    InconsistentIntegration,
    NotConservative,
    RepresentationMismatch,
    SupportOutsideWindow,
    UnknownEdge,
    UnknownFace,
    ValueOverflow,
)

INT64_MIN = -(2**63)
INT64_MAX = 2**63 - 1


def check_value(value):
    if not isinstance(value, int) or isinstance(value, bool):
        raise ValueOverflow(f"cell values must be ints, got {value!r}")
    if value < INT64_MIN or value > INT64_MAX:
        raise ValueOverflow(f"cell value {value} leaves the signed 64-bit range")
    return value


class _SparseState:
    """Shared machinery: a sparse integer assignment with value semantics."""

    rep = None

    def __init__(self, cx, entries=None, _raw=None):
        self.complex = cx
        if _raw is not None:
            self.values = _raw
            return
        values = {}
        items = entries.items() if hasattr(entries, "items") else (entries or ())
        for cell, value in items:
            check_value(value)
            self._check_cell(cx, cell)
            if value != 0:
                values[cell] = values.get(cell, 0) + value
        self.values = {c: v for c, v in values.items() if v != 0}

    def _check_cell(self, cx, cell):
        raise NotImplementedError

    def get(self, cell):
        return self.values.get(cell, 0)

    def items(self):
        return self.values.items()

    def support(self):
        return set(self.values)

    def canonical(self):
        return tuple(sorted(self.values.items()))

    def copy(self):
        return type(self)(self.complex, _raw=dict(self.values))

    def __bool__(self):
        return bool(self.values)

    def __len__(self):
        return len(self.values)

    def __eq__(self, other):
        return (
            type(other) is type(self)
            and self.complex == other.complex
            and self.values == other.values
        )

    def __hash__(self):
        return hash((self.rep, self.canonical()))

    def __repr__(self):
        body = ", ".join(f"{c}: {v}" for c, v in sorted(self.values.items()))
        return f"{type(self).__name__}({{{body}}})"


class EdgeFlow(_SparseState):
    rep = "edge"

    def _check_cell(self, cx, cell):
        if not cx.is_edge(cell):
            raise UnknownEdge(f"{cell!r} is not an edge of this {cx.kind} complex")

    def to_json(self):
        entries = sorted(self.values.items())
        return {
            "representation": "edge",
            "entries": [[format_edge(self.complex, c), v] for c, v in entries],
        }


class FaceRep(_SparseState):
    rep = "face"

    def _check_cell(self, cx, cell):
        if not cx.is_face(cell):
            raise UnknownFace(f"{cell!r} is not a face of this {cx.kind} complex")

    def to_json(self):
        entries = sorted(self.values.items())
        return {
            "representation": "face",
            "entries": [[format_face(self.complex, c), v] for c, v in entries],
        }


def load_config(cx, obj):
    """Parse the JSON configuration form into an EdgeFlow or FaceRep."""
    if not isinstance(obj, dict):
        raise ValueError("configuration must be a JSON object")
    rep = obj.get("representation")
    if rep not in ("edge", "face"):
        raise ValueError(f"configuration representation must be 'edge' or 'face', got {rep!r}")
    entries = obj.get("entries", [])
    pairs = []
    for item in entries:
        if not isinstance(item, (list, tuple)) or len(item) != 2:
            raise ValueError(f"malformed entry {item!r}")
        cell_text, value = item
        check_value(value)
        if value == 0:
            raise ValueError(f"entry {cell_text!r} carries value 0; drop zero entries")
        level, cell = parse_cell(cx, cell_text)
        want = "edge" if rep == "edge" else "face"
        if level != want:
            raise ValueError(f"entry {cell_text!r} is a {level} id in a {rep} configuration")
        pairs.append((cell, value))
    cls = EdgeFlow if rep == "edge" else FaceRep
    return cls(cx, pairs)


# -- vertex bookkeeping (2-dimensional kinds) -------------------------------


def imbalance(flow, vertex):
    """Net inflow minus outflow at a vertex."""
    if flow.rep != "edge":
        raise RepresentationMismatch("imbalance is defined on edge flows")
    total = 0
    for edge, sign in flow.complex.vertex_star(vertex):
        total += sign * flow.values.get(edge, 0)
    return total


def imbalances(flow):
    """All nonzero vertex imbalances, as a dict."""
    if flow.rep != "edge":
        raise RepresentationMismatch("imbalance is defined on edge flows")
    cx = flow.complex
    if cx.kind == "ndgrid":
        raise RepresentationMismatch("the ndgrid complex has no vertex bookkeeping")
    out = {}
    touched = set()
    for edge in flow.values:
        tail, head = cx.edge_endpoints(edge)
        touched.add(tail)
        touched.add(head)
    for v in touched:
        b = imbalance(flow, v)
        if b != 0:
            out[v] = b
    return out


def conservation_witness(flow):
    """A (vertex, imbalance) pair proving non-conservativity, or None."""
    bad = imbalances(flow)
    if not bad:
        return None
    v = min(bad)
    return v, bad[v]


def is_conservative(flow):
    return conservation_witness(flow) is None


# -- conversions -------------------------------------------------------------


def faces_to_edges(faces):
    """The edge flow induced by a face assignment."""
    if faces.rep != "face":
        raise RepresentationMismatch("faces_to_edges expects a face representation")
    cx = faces.complex
    out = {}
    for face, value in faces.values.items():
        for edge, sign in cx.boundary(face):
            nv = out.get(edge, 0) + sign * value
            if nv == 0:
                out.pop(edge, None)
            else:
                out[edge] = check_value(nv)
    return EdgeFlow(cx, _raw=out)


def _integration_region(cx, flow_values):
    """Faces to integrate over plus a zero root, for unbounded complexes."""
    if cx.kind == "grid":
        faces = set()
        for edge in flow_values:
            for face, _ in cx.incident_faces(edge):
                faces.add(face)
        xs = [f[0] for f in faces]
        ys = [f[1] for f in faces]
        lo_x, hi_x = min(xs) - 1, max(xs) + 1
        lo_y, hi_y = min(ys) - 1, max(ys) + 1
        region = {
            (x, y) for x in range(lo_x, hi_x + 1) for y in range(lo_y, hi_y + 1)
        }
        root = (lo_x, lo_y)
        return region, root
    # ndgrid: box around the facets touching the support, expanded by one
    faces = set()
    for ridge in flow_values:
        for facet, _ in cx.incident_faces(ridge):
            faces.add(facet)
    lo = [min(f[i] for f in faces) - 1 for i in range(cx.n)]
    hi = [max(f[i] for f in faces) + 1 for i in range(cx.n)]
    region = set()

    def fill(prefix, axis):
        if axis == cx.n:
            region.add(prefix)
            return
        for c in range(lo[axis], hi[axis] + 1):
            fill(prefix + (c,), axis + 1)

    fill((), 0)
    root = tuple(lo)
    return region, root


def edges_to_faces(flow):
    """Integrate a conservative edge flow into its face representation.

    The result is the finite-support representative: far faces carry zero
    on unbounded complexes, and the external face (or face 0 when none is
    named) carries zero on finite planar complexes.
    """
    if flow.rep != "edge":
        raise RepresentationMismatch("edges_to_faces expects an edge flow")
    cx = flow.complex
    if cx.kind in ("grid", "planar"):
        witness = conservation_witness(flow)
        if witness is not None:
            raise NotConservative(witness[0], witness[1])
    if not flow.values:
        return FaceRep(cx, {})

    if cx.kind == "planar":
        root = cx.external if cx.external is not None else 0
        region = set(range(len(cx.faces)))
    else:
        region, root = _integration_region(cx, flow.values)

    values = {root: 0}
    queue = deque([root])
    while queue:
        face = queue.popleft()
        fa = values[face]
        for edge, sign in cx.boundary(face):
            for other, osign in cx.incident_faces(edge):
                if other == face and osign == sign:
                    continue
                if other not in region or other in values:
                    continue
                # f(e) = sign*F(face) + osign*F(other); osign is +-1
                values[other] = osign * (flow.values.get(edge, 0) - sign * fa)
                check_value(values[other])
                queue.append(other)

    # Verify every edge seen from the integrated region, treating faces
    # outside it as zero.  Mismatches past the conservativity check mean
    # the complex itself is inconsistent (or, on the ndgrid where there is
    # no vertex bookkeeping, that the ridge flow is not a facet boundary).
    def verify(edge):
        (fa, sa), (fb, sb) = cx.incident_faces(edge)
        got = sa * values.get(fa, 0) + sb * values.get(fb, 0)
        want = flow.values.get(edge, 0)
        if got != want:
            if cx.kind == "ndgrid":
                raise NotConservative(edge)
            raise InconsistentIntegration(
                f"edge {edge!r}: face values imply {got}, flow carries {want}"
            )

    for edge in flow.values:
        verify(edge)
    for face, value in values.items():
        if value != 0:
            for edge, _ in cx.boundary(face):
                verify(edge)

    return FaceRep(cx, _raw={f: v for f, v in values.items() if v != 0})


def as_face_rep(state):
    return state if state.rep == "face" else edges_to_faces(state)


def as_edge_flow(state):
    return state if state.rep == "edge" else faces_to_edges(state)


# -- potentials ---------------------------------------------------------------


def phi(faces):
    """Sum of squared face values; strictly drops under hole-free firing."""
    if faces.rep != "face":
        raise RepresentationMismatch("phi is defined on face representations")
    total = 0
    for value in faces.values.values():
        total += value * value
    return check_value(total)


def psi(faces, k, sigma=None):
    """Sum of squared deficits (k - value) over the window of faces at dual
    distance at most k+1 from the distinguished face.

    Defined for configurations supported inside that window; drops by at
    least 1 under every legal hole move of a height-k pulse.
    """
    if faces.rep != "face":
        raise RepresentationMismatch("psi is defined on face representations")
    cx = faces.complex
    if sigma is None:
        sigma = cx.distinguished
    if sigma is None:
        raise UnknownFace("psi needs a distinguished face")
    window = cx.faces_within(sigma, k + 1)
    window_set = set(window)
    for face in faces.values:
        if face not in window_set:
            raise SupportOutsideWindow(
                f"face {face!r} lies outside dual distance {k + 1} of {sigma!r}"
            )
    total = 0
    for face in window:
        d = k - faces.values.get(face, 0)
        total += d * d
    return check_value(total)
