"""The firing dynamics: legal moves, single steps, and full runs.

Moves are small tagged tuples so they sort, hash, and serialize cheaply:

    ("edgefire", e)        reroute one unit around each face containing e;
                           needs at least 2 units of flow on e
    ("edgefire1", e)       e lies on the hole boundary: reroute one unit
                           around the unique non-hole face; needs 1 unit
    ("transfer", a, b)     face representation: move a chip from face a to
                           neighboring face b; needs value(a) >= value(b)+2
    ("create", a)          hole neighbor a below the hole's value gains a chip
    ("delete", a)          hole neighbor a above the hole's value loses one

The face moves are the face-representation pictures of the edge moves:
firing an edge moves a chip from its higher face to its lower face, and
firing a hole-boundary edge creates or deletes a chip on the non-hole
side.  The hole's own value never changes; it acts as a boundary
condition.

Strategies must be deterministic given (state, seed, history).  The
seeded-random strategy draws from splitmix64 (state advances by
0x9E3779B97F4A7C15; output is mixed by the 0xBF58476D1CE4E5B9 and
0x94D049BB133111EB rounds) and picks ``next() % len(moves)`` over the
sorted move list, so runs reproduce across implementations.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Optional

from .complexes import format_edge, format_face, parse_edge, parse_face
from .errors import (
    IllegalMove,
    RepresentationMismatch,
    SupportOutsideWindow,
    UnknownFace,
    ValueOverflow,
)
from .flow import (
    INT64_MAX,
    INT64_MIN,
    EdgeFlow,
    FaceRep,
    edges_to_faces,
    imbalances,
)

EDGE_FIRE = "edgefire"
EDGE_FIRE_ONE_SIDED = "edgefire1"
TRANSFER = "transfer"
CREATE = "create"
DELETE = "delete"

_MOVE_RANK = {EDGE_FIRE: 0, EDGE_FIRE_ONE_SIDED: 1, TRANSFER: 2, CREATE: 3, DELETE: 4}

STRATEGY_NAMES = ("seeded-random", "lexicographic-first", "max-difference", "fifo-queue")
MONITOR_NAMES = ("phi", "psi", "max", "min", "chips", "imbalance")

STOP_TERMINAL = "terminal"
STOP_STEP_CAP = "step-cap"
STOP_REVISIT = "revisit"


def move_key(move):
    return (_MOVE_RANK[move[0]], move[1:])


@dataclass(frozen=True)
class Rules:
    """What counts as a legal move on a given complex."""

    complex: object
    representation: str
    hole: object = None
    transfer_threshold: int = 2

    def __post_init__(self):
        if self.representation not in ("edge", "face"):
            raise RepresentationMismatch(
                f"representation must be 'edge' or 'face', got {self.representation!r}"
            )
        if self.complex.kind == "ndgrid" and self.representation == "edge":
            raise RepresentationMismatch(
                "ridge-level dynamics are not modelled on the ndgrid; use the face representation"
            )
        if self.hole is not None and not self.complex.is_face(self.hole):
            raise UnknownFace(f"hole {self.hole!r} is not a face of the complex")

    @cached_property
    def hole_edges(self):
        if self.hole is None:
            return frozenset()
        return frozenset(e for e, _ in self.complex.boundary(self.hole))

    @cached_property
    def inert_edges(self):
        """Edges whose two sides lie on one face; firing them cancels exactly,
        so they are never offered as moves.  Only explicit planar face lists
        can contain such edges."""
        if self.complex.kind != "planar":
            return frozenset()
        out = set()
        for edge in range(len(self.complex.edges)):
            inc = self.complex.incident_faces(edge)
            if len(inc) == 2 and inc[0][0] == inc[1][0]:
                out.add(edge)
        return frozenset(out)


@dataclass(frozen=True)
class Strategy:
    name: str
    seed: int = 0

    def __post_init__(self):
        if self.name not in STRATEGY_NAMES:
            raise ValueError(f"unknown strategy {self.name!r}; pick one of {STRATEGY_NAMES}")


class SplitMix64:
    """The splitmix64 generator, kept bit-exact for cross-implementation replay."""

    MASK = (1 << 64) - 1

    def __init__(self, seed):
        self.state = seed & self.MASK

    def next(self):
        self.state = (self.state + 0x9E3779B97F4A7C15) & self.MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & self.MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & self.MASK
        return z ^ (z >> 31)


# -- legal moves -------------------------------------------------------------


def _legal_moves_face(values, rules):
    """Legal face moves over the active window (support plus its neighbors).

    With the default threshold of 2 the window is exhaustive: a legal
    transfer needs a face pair differing by 2, so at least one endpoint
    carries a nonzero value.  Thresholds below 1 (the inverted variant)
    admit transfers between far-away zero faces, which no finite
    enumeration can list; only moves touching the window are reported.
    """
    cx = rules.complex
    sigma = rules.hole
    thr = rules.transfer_threshold
    active = set(values)
    if sigma is not None:
        active.add(sigma)
    for face in list(active):
        active.update(cx.face_neighbors(face))
    moves = []
    for a in active:
        if a == sigma:
            continue
        va = values.get(a, 0)
        for b in cx.face_neighbors(a):
            if b == sigma:
                continue
            if va - values.get(b, 0) >= thr:
                moves.append((TRANSFER, a, b))
    if sigma is not None:
        vs = values.get(sigma, 0)
        for a in cx.face_neighbors(sigma):
            va = values.get(a, 0)
            if vs > va:
                moves.append((CREATE, a))
            elif vs < va:
                moves.append((DELETE, a))
    moves.sort(key=move_key)
    return moves


def _legal_moves_edge(values, rules):
    hole_edges = rules.hole_edges
    inert = rules.inert_edges
    moves = []
    for edge, v in values.items():
        if edge in inert:
            continue
        if edge in hole_edges:
            if v != 0:
                moves.append((EDGE_FIRE_ONE_SIDED, edge))
        elif v >= 2 or v <= -2:
            moves.append((EDGE_FIRE, edge))
    moves.sort(key=move_key)
    return moves


def _legal_moves_raw(values, rules):
    if rules.representation == "face":
        return _legal_moves_face(values, rules)
    return _legal_moves_edge(values, rules)


def legal_moves(state, rules):
    """All legal moves from ``state``, sorted by move kind and cell order."""
    if state.rep != rules.representation:
        raise RepresentationMismatch(
            f"state is {state.rep}-represented but rules expect {rules.representation}"
        )
    return _legal_moves_raw(state.values, rules)


# -- applying moves ----------------------------------------------------------


def _bump(values, cell, delta):
    nv = values.get(cell, 0) + delta
    if nv < INT64_MIN or nv > INT64_MAX:
        raise ValueOverflow(f"value on {cell!r} leaves the signed 64-bit range")
    if nv == 0:
        values.pop(cell, None)
    else:
        values[cell] = nv


def _check_move(values, move, rules):
    """Return None if the move is legal, else the failed precondition."""
    cx = rules.complex
    sigma = rules.hole
    kind = move[0]
    if rules.representation == "face":
        if kind == TRANSFER:
            _, a, b = move
            if a == sigma or b == sigma:
                return "transfers may not touch the hole"
            if b not in cx.face_neighbors(a):
                return f"faces {a!r} and {b!r} are not neighbors"
            if values.get(a, 0) - values.get(b, 0) < rules.transfer_threshold:
                return (
                    f"needs value({a!r}) - value({b!r}) >= {rules.transfer_threshold}, "
                    f"have {values.get(a, 0)} - {values.get(b, 0)}"
                )
            return None
        if kind in (CREATE, DELETE):
            if sigma is None:
                return "create/delete need a hole"
            a = move[1]
            if a not in cx.face_neighbors(sigma):
                return f"face {a!r} is not a neighbor of the hole"
            vs, va = values.get(sigma, 0), values.get(a, 0)
            if kind == CREATE and not vs > va:
                return f"create needs hole value {vs} > neighbor value {va}"
            if kind == DELETE and not vs < va:
                return f"delete needs hole value {vs} < neighbor value {va}"
            return None
        return f"move kind {kind!r} is not a face move"
    if kind == EDGE_FIRE:
        edge = move[1]
        if edge in rules.inert_edges:
            return "both sides of this edge lie on one face; firing it cancels exactly"
        if edge in rules.hole_edges:
            return "hole-boundary edges fire one-sided"
        if abs(values.get(edge, 0)) < 2:
            return f"needs 2 units of flow, edge carries {values.get(edge, 0)}"
        return None
    if kind == EDGE_FIRE_ONE_SIDED:
        edge = move[1]
        if edge not in rules.hole_edges:
            return "edge is not on the hole boundary"
        if values.get(edge, 0) == 0:
            return "needs 1 unit of flow, edge carries none"
        return None
    return f"move kind {kind!r} is not an edge move"


def _apply_raw(values, move, rules):
    """Apply a move to a raw value dict in place.  Legality is the caller's
    job; run loops own their dict and use this single-owner fast path."""
    cx = rules.complex
    kind = move[0]
    if kind == TRANSFER:
        _, a, b = move
        _bump(values, a, -1)
        _bump(values, b, 1)
        return (a, b)
    if kind == CREATE:
        a = move[1]
        _bump(values, a, 1)
        return (a,)
    if kind == DELETE:
        a = move[1]
        _bump(values, a, -1)
        return (a,)
    edge = move[1]
    direction = 1 if values.get(edge, 0) > 0 else -1
    if kind == EDGE_FIRE:
        reroute_faces = cx.incident_faces(edge)
    else:
        reroute_faces = [(f, s) for f, s in cx.incident_faces(edge) if f != rules.hole]
    touched = []
    for face, fsign in reroute_faces:
        for e2, s2 in cx.boundary(face):
            _bump(values, e2, -direction * fsign * s2)
            touched.append(e2)
    return tuple(touched)


def apply_move(state, move, rules):
    """Apply one legal move, returning a fresh state snapshot."""
    if state.rep != rules.representation:
        raise RepresentationMismatch(
            f"state is {state.rep}-represented but rules expect {rules.representation}"
        )
    problem = _check_move(state.values, move, rules)
    if problem is not None:
        raise IllegalMove(move, problem)
    values = dict(state.values)
    _apply_raw(values, move, rules)
    cls = FaceRep if rules.representation == "face" else EdgeFlow
    return cls(state.complex, _raw=values)


# -- correspondence between the two representations --------------------------


def face_move_for_edge_move(edge_state, move, rules):
    """The face-representation picture of an edge move.

    Firing an edge moves a chip from its higher face to its lower one;
    firing a hole-boundary edge creates or deletes on the non-hole side.
    """
    cx = rules.complex
    edge = move[1]
    direction = 1 if edge_state.values.get(edge, 0) > 0 else -1
    (fa, sa), (fb, sb) = cx.incident_faces(edge)
    if move[0] == EDGE_FIRE:
        donor = fa if sa * direction > 0 else fb
        other = fb if donor is fa else fa
        return (TRANSFER, donor, other)
    non_hole, nh_sign = (fa, sa) if fb == rules.hole else (fb, sb)
    if nh_sign * direction > 0:
        return (DELETE, non_hole)
    return (CREATE, non_hole)


def edge_moves_for_face_move(move, rules):
    """The edge moves that realize a face move (one per shared edge)."""
    cx = rules.complex
    if move[0] == TRANSFER:
        _, a, b = move
        return [(EDGE_FIRE, e) for e in cx.shared_edges(a, b)]
    a = move[1]
    return [(EDGE_FIRE_ONE_SIDED, e) for e in cx.shared_edges(rules.hole, a)]


def to_face_rules_equivalence(edge_state, face_state):
    """True when the edge flow integrates to exactly the face assignment."""
    return edges_to_faces(edge_state) == face_state


# -- monitors ----------------------------------------------------------------


def _ambient_zero(cx, values):
    if cx.kind == "planar":
        return len(values) < len(cx.faces)
    return True


def _make_samplers(monitors, rules, pulse_k):
    cx = rules.complex
    rep = rules.representation
    samplers = {}
    window = None
    if "psi" in monitors:
        if rules.hole is None or pulse_k is None:
            raise ValueError("the psi monitor needs a hole and a pulse height")
        window = cx.faces_within(rules.hole, pulse_k + 1)
        window_set = set(window)
    for name in monitors:
        if name == "phi":
            if rep == "face":
                samplers[name] = lambda vals: sum(v * v for v in vals.values())
            else:
                def _phi_edge(vals, _cx=cx):
                    faces = edges_to_faces(EdgeFlow(_cx, _raw=dict(vals)))
                    return sum(v * v for v in faces.values.values())

                samplers[name] = _phi_edge
        elif name == "psi":
            if rep != "face":
                raise RepresentationMismatch("the psi monitor runs on face representations")

            def _psi(vals, _k=pulse_k, _window=window, _wset=window_set):
                for face in vals:
                    if face not in _wset:
                        raise SupportOutsideWindow(
                            f"face {face!r} escaped the psi window of radius {_k + 1}"
                        )
                return sum((_k - vals.get(f, 0)) ** 2 for f in _window)

            samplers[name] = _psi
        elif name == "max":
            if rep != "face":
                raise RepresentationMismatch("max/min monitors run on face representations")
            samplers[name] = lambda vals: max(
                max(vals.values(), default=0), 0 if _ambient_zero(cx, vals) else min(vals.values())
            )
        elif name == "min":
            if rep != "face":
                raise RepresentationMismatch("max/min monitors run on face representations")
            samplers[name] = lambda vals: min(
                min(vals.values(), default=0), 0 if _ambient_zero(cx, vals) else max(vals.values())
            )
        elif name == "chips":
            if rep != "face":
                raise RepresentationMismatch("the chips monitor runs on face representations")
            samplers[name] = lambda vals: sum(vals.values())
        elif name == "imbalance":
            if rep != "edge":
                raise RepresentationMismatch("the imbalance monitor runs on edge flows")

            def _imb(vals, _cx=cx):
                flow = EdgeFlow(_cx, _raw=dict(vals))
                return sorted(imbalances(flow).items())

            samplers[name] = _imb
        else:
            raise ValueError(f"unknown monitor {name!r}")
    return samplers


# -- strategies ---------------------------------------------------------------


def _move_score(move, values, rules):
    kind = move[0]
    if kind == TRANSFER:
        return values.get(move[1], 0) - values.get(move[2], 0)
    if kind in (CREATE, DELETE):
        return abs(values.get(rules.hole, 0) - values.get(move[1], 0))
    return abs(values.get(move[1], 0))


def _make_chooser(strategy, rules):
    if strategy.name == "lexicographic-first":
        return lambda moves_sorted, values: moves_sorted[0]
    if strategy.name == "seeded-random":
        rng = SplitMix64(strategy.seed)
        return lambda moves_sorted, values: moves_sorted[rng.next() % len(moves_sorted)]
    if strategy.name == "max-difference":
        def _max_diff(moves_sorted, values):
            best = None
            best_score = None
            for move in moves_sorted:
                score = _move_score(move, values, rules)
                if best_score is None or score > best_score:
                    best, best_score = move, score
            return best

        return _max_diff
    # fifo-queue: moves enter a queue in sorted order the first step they
    # become legal and fire in arrival order, re-entering after they fall
    # out of the legal set.
    queue = []
    queued = set()
    head = 0

    def _fifo(moves_sorted, values):
        nonlocal head
        current = set(moves_sorted)
        for move in moves_sorted:
            if move not in queued:
                queued.add(move)
                queue.append(move)
        while True:
            move = queue[head]
            head += 1
            queued.discard(move)
            if move in current:
                if head > 4096 and head * 2 > len(queue):
                    del queue[:head]
                    head = 0
                return move

    return _fifo


# -- runs ---------------------------------------------------------------------


@dataclass
class RunReport:
    rules: Rules
    strategy: Strategy
    initial: object
    final: object
    moves: list
    steps: int
    terminal: bool
    stop_reason: str
    monitors: dict
    pulse_k: Optional[int] = None
    revisit_enabled: bool = False
    revisit_exhausted_at: Optional[int] = None
    step_cap: int = 0

    def to_json(self):
        from .complexes import dump_complex

        return {
            "complex": dump_complex(self.rules.complex),
            "rules": {
                "representation": self.rules.representation,
                "hole": format_face(self.rules.complex, self.rules.hole)
                if self.rules.hole is not None
                else None,
                "transfer_threshold": self.rules.transfer_threshold,
            },
            "strategy": {"name": self.strategy.name, "seed": self.strategy.seed},
            "pulse_k": self.pulse_k,
            "step_cap": self.step_cap,
            "initial": self.initial.to_json(),
            "final": self.final.to_json(),
            "moves": [move_to_json(self.rules.complex, m) for m in self.moves],
            "steps": self.steps,
            "terminal": self.terminal,
            "stop_reason": self.stop_reason,
            "monitors": {name: _stream_to_json(self.rules.complex, name, stream)
                         for name, stream in self.monitors.items()},
            "revisit": {
                "enabled": self.revisit_enabled,
                "exhausted_at": self.revisit_exhausted_at,
            },
        }


def move_to_json(cx, move):
    kind = move[0]
    if kind in (EDGE_FIRE, EDGE_FIRE_ONE_SIDED):
        return [kind, format_edge(cx, move[1])]
    return [kind] + [format_face(cx, c) for c in move[1:]]


def move_from_json(cx, obj):
    kind = obj[0]
    if kind in (EDGE_FIRE, EDGE_FIRE_ONE_SIDED):
        return (kind, parse_edge(cx, obj[1]))
    if kind not in _MOVE_RANK:
        raise ValueError(f"unknown move kind {kind!r}")
    return tuple([kind] + [parse_face(cx, c) for c in obj[1:]])


def _vertex_to_json(v):
    return list(v) if isinstance(v, tuple) else v


def _stream_to_json(cx, name, stream):
    if name == "imbalance":
        return [[[_vertex_to_json(v), b] for v, b in sample] for sample in stream]
    return list(stream)


def run(
    state,
    rules,
    strategy,
    step_cap,
    monitors=(),
    *,
    pulse_k=None,
    detect_revisit=None,
    revisit_cap=1_000_000,
):
    """Drive a configuration with a strategy until it stops.

    Monitors are sampled before the first move and after every move, so
    each stream has ``steps + 1`` entries.  Revisit detection (exact state
    seen twice) defaults to on for edge flows, whose dynamics may cycle,
    and off for face representations; it stores canonical encodings and
    shuts itself off past ``revisit_cap`` states, which the report flags.
    """
    if state.rep != rules.representation:
        raise RepresentationMismatch(
            f"state is {state.rep}-represented but rules expect {rules.representation}"
        )
    if detect_revisit is None:
        detect_revisit = rules.representation == "edge"

    cx = rules.complex
    values = dict(state.values)
    samplers = _make_samplers(tuple(monitors), rules, pulse_k)
    streams = {name: [] for name in samplers}
    chooser = _make_chooser(strategy, rules)

    def sample():
        for name, fn in samplers.items():
            streams[name].append(fn(values))

    move_set = set(_legal_moves_raw(values, rules))
    seen = None
    exhausted_at = None
    if detect_revisit:
        seen = {tuple(sorted(values.items()))}

    moves_taken = []
    sample()
    stop = None
    hole_edges = rules.hole_edges
    sigma = rules.hole

    def refresh_face(faces_changed):
        for a in faces_changed:
            va = values.get(a, 0)
            if sigma is not None and a != sigma:
                if a in sigma_neighbors:
                    vs = values.get(sigma, 0)
                    move_set.discard((CREATE, a))
                    move_set.discard((DELETE, a))
                    if vs > va:
                        move_set.add((CREATE, a))
                    elif vs < va:
                        move_set.add((DELETE, a))
            for b in cx.face_neighbors(a):
                vb = values.get(b, 0)
                if a != sigma and b != sigma:
                    if va - vb >= rules.transfer_threshold:
                        move_set.add((TRANSFER, a, b))
                    else:
                        move_set.discard((TRANSFER, a, b))
                    if vb - va >= rules.transfer_threshold:
                        move_set.add((TRANSFER, b, a))
                    else:
                        move_set.discard((TRANSFER, b, a))

    inert = rules.inert_edges

    def refresh_edge(edges_changed):
        for e in edges_changed:
            v = values.get(e, 0)
            if e in inert:
                continue
            if e in hole_edges:
                if v != 0:
                    move_set.add((EDGE_FIRE_ONE_SIDED, e))
                else:
                    move_set.discard((EDGE_FIRE_ONE_SIDED, e))
            else:
                if v >= 2 or v <= -2:
                    move_set.add((EDGE_FIRE, e))
                else:
                    move_set.discard((EDGE_FIRE, e))

    if rules.representation == "face":
        sigma_neighbors = set(cx.face_neighbors(sigma)) if sigma is not None else set()

    while True:
        if not move_set:
            stop = STOP_TERMINAL
            break
        if len(moves_taken) >= step_cap:
            stop = STOP_STEP_CAP
            break
        moves_sorted = sorted(move_set, key=move_key)
        move = chooser(moves_sorted, values)
        touched = _apply_raw(values, move, rules)
        moves_taken.append(move)
        if rules.representation == "face":
            refresh_face(touched)
        else:
            refresh_edge(touched)
        sample()
        if seen is not None:
            encoded = tuple(sorted(values.items()))
            if encoded in seen:
                stop = STOP_REVISIT
                break
            if len(seen) >= revisit_cap:
                exhausted_at = len(moves_taken)
                seen = None
            else:
                seen.add(encoded)

    cls = FaceRep if rules.representation == "face" else EdgeFlow
    final = cls(cx, _raw=values)
    return RunReport(
        rules=rules,
        strategy=strategy,
        initial=state.copy(),
        final=final,
        moves=moves_taken,
        steps=len(moves_taken),
        terminal=stop == STOP_TERMINAL,
        stop_reason=stop,
        monitors=streams,
        pulse_k=pulse_k,
        revisit_enabled=detect_revisit,
        revisit_exhausted_at=exhausted_at,
        step_cap=step_cap,
    )
