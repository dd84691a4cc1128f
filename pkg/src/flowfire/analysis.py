"""Verification tools layered on the engine.

Everything here treats the engine as a black box driven through
``legal_moves`` and ``apply_move`` semantics, so these functions double as
oracles for it: closed-form terminal prediction for hole pulses, explicit
reachable-state enumeration, the one-step diamond check, the imbalance
test for guaranteed non-termination, and a replay audit for finished runs.
"""

from __future__ import annotations

import itertools
import threading
from collections import deque
from dataclasses import dataclass
from typing import Optional

from .engine import (
    RunReport,
    _apply_raw,
    _check_move,
    _legal_moves_raw,
    _make_samplers,
    move_to_json,
)
from .errors import MissingMonitor, RepresentationMismatch, UnknownFace
from .flow import EdgeFlow, FaceRep, imbalances


def _ball_distances(cx, center, radius):
    """Dual-graph distances from ``center`` out to ``radius``, by search."""
    dist = {center: 0}
    queue = deque([center])
    while queue:
        face = queue.popleft()
        d = dist[face]
        if d == radius:
            continue
        for nxt in cx.face_neighbors(face):
            if nxt not in dist:
                dist[nxt] = d + 1
                queue.append(nxt)
    return dist


def predict_pyramid(k, sigma, cx):
    """The unique terminal configuration of a height-k pulse at ``sigma``.

    The hole keeps its k chips; a face at dual distance d ends with
    max(0, k - d + 1) chips, a pyramid that steps down by one per ring.
    """
    if not cx.is_face(sigma):
        raise UnknownFace(f"{sigma!r} is not a face of the complex")
    if k < 0:
        raise ValueError("pulse height must be >= 0")
    values = {}
    for face, d in _ball_distances(cx, sigma, k).items():
        value = k if face == sigma else k - d + 1
        if value > 0:
            values[face] = value
    return FaceRep(cx, values)


@dataclass
class TerminalSet:
    terminals: list
    reachable_count: int
    truncated: bool

    def to_json(self):
        return {
            "terminals": [t.to_json() for t in self.terminals],
            "reachable_count": self.reachable_count,
            "truncated": self.truncated,
        }


def _state_class(rules):
    return FaceRep if rules.representation == "face" else EdgeFlow


def enumerate_terminals(initial, rules, max_states=1_000_000, max_depth=None, order="dfs", workers=1):
    """Walk the reachable state graph and collect the terminal states.

    Uses an explicit stack (or queue, ``order="bfs"``) with memoization on
    canonical encodings; the reachable set is finite exactly when the
    dynamics terminate from this start.  Hitting either cap flags the
    result as truncated rather than failing.  ``workers`` > 1 fans the
    expansion out across threads; the resulting sets are identical to the
    sequential walk whenever the result is not truncated.
    """
    if initial.rep != rules.representation:
        raise RepresentationMismatch(
            f"initial state is {initial.rep}-represented but rules expect {rules.representation}"
        )
    if order not in ("dfs", "bfs"):
        raise ValueError(f"order must be 'dfs' or 'bfs', got {order!r}")
    start = initial.canonical()
    if workers > 1:
        return _enumerate_parallel(start, rules, max_states, max_depth, workers)

    visited = {start}
    terminals = set()
    truncated = False
    pending = deque([(start, 0)])
    pop = pending.pop if order == "dfs" else pending.popleft
    while pending:
        encoded, depth = pop()
        values = dict(encoded)
        moves = _legal_moves_raw(values, rules)
        if not moves:
            terminals.add(encoded)
            continue
        if max_depth is not None and depth >= max_depth:
            truncated = True
            continue
        for move in moves:
            child = dict(values)
            _apply_raw(child, move, rules)
            enc = tuple(sorted(child.items()))
            if enc in visited:
                continue
            if len(visited) >= max_states:
                truncated = True
                continue
            visited.add(enc)
            pending.append((enc, depth + 1))

    cls = _state_class(rules)
    states = [cls(rules.complex, _raw=dict(enc)) for enc in sorted(terminals)]
    return TerminalSet(states, len(visited), truncated)


def _enumerate_parallel(start, rules, max_states, max_depth, workers):
    visited = {start}
    terminals = set()
    pending = deque([(start, 0)])
    lock = threading.Lock()
    state = {"active": 0, "truncated": False}
    done = threading.Condition(lock)

    def worker():
        while True:
            with done:
                while not pending and state["active"] > 0:
                    done.wait()
                if not pending:
                    done.notify_all()
                    return
                encoded, depth = pending.popleft()
                state["active"] += 1
            values = dict(encoded)
            moves = _legal_moves_raw(values, rules)
            new = []
            if not moves:
                with lock:
                    terminals.add(encoded)
            elif max_depth is not None and depth >= max_depth:
                with lock:
                    state["truncated"] = True
            else:
                for move in moves:
                    child = dict(values)
                    _apply_raw(child, move, rules)
                    new.append(tuple(sorted(child.items())))
            with done:
                for enc in new:
                    if enc in visited:
                        continue
                    if len(visited) >= max_states:
                        state["truncated"] = True
                        continue
                    visited.add(enc)
                    pending.append((enc, depth + 1))
                state["active"] -= 1
                done.notify_all()

    threads = [threading.Thread(target=worker) for _ in range(workers)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    cls = _state_class(rules)
    states = [cls(rules.complex, _raw=dict(enc)) for enc in sorted(terminals)]
    return TerminalSet(states, len(visited), state["truncated"])


@dataclass
class DiamondViolation:
    """Two moves from one state whose results cannot be rejoined in one step."""

    state: object
    move_a: tuple
    move_b: tuple
    result_a: object
    result_b: object
    successors_a: int
    successors_b: int

    def to_json(self):
        cx = self.state.complex
        return {
            "state": self.state.to_json(),
            "move_a": move_to_json(cx, self.move_a),
            "move_b": move_to_json(cx, self.move_b),
            "result_a": self.result_a.to_json(),
            "result_b": self.result_b.to_json(),
            "successors_a": self.successors_a,
            "successors_b": self.successors_b,
        }


def check_diamond(state, rules):
    """Test every pair of distinct legal moves for one-step joinability.

    A pair joins when the two results coincide or share a state reachable
    from both by a single further move.  Violating pairs are returned with
    the evidence; an empty list means the diamond property holds here.
    """
    if state.rep != rules.representation:
        raise RepresentationMismatch(
            f"state is {state.rep}-represented but rules expect {rules.representation}"
        )
    moves = _legal_moves_raw(state.values, rules)
    results = []
    for move in moves:
        child = dict(state.values)
        _apply_raw(child, move, rules)
        results.append(tuple(sorted(child.items())))

    successor_cache = {}

    def successors(encoded):
        if encoded not in successor_cache:
            values = dict(encoded)
            out = set()
            for move in _legal_moves_raw(values, rules):
                child = dict(values)
                _apply_raw(child, move, rules)
                out.add(tuple(sorted(child.items())))
            successor_cache[encoded] = out
        return successor_cache[encoded]

    cls = _state_class(rules)
    violations = []
    for i, j in itertools.combinations(range(len(moves)), 2):
        if results[i] == results[j]:
            continue
        succ_i = successors(results[i])
        succ_j = successors(results[j])
        if succ_i & succ_j:
            continue
        violations.append(
            DiamondViolation(
                state=state.copy(),
                move_a=moves[i],
                move_b=moves[j],
                result_a=cls(rules.complex, _raw=dict(results[i])),
                result_b=cls(rules.complex, _raw=dict(results[j])),
                successors_a=len(succ_i),
                successors_b=len(succ_j),
            )
        )
    return violations


@dataclass
class CriterionResult:
    verdict: str  # "non-terminating" | "unknown"
    witness_vertex: object = None
    witness_imbalance: Optional[int] = None
    degree: Optional[int] = None

    def to_json(self):
        return {
            "verdict": self.verdict,
            "witness_vertex": list(self.witness_vertex)
            if isinstance(self.witness_vertex, tuple)
            else self.witness_vertex,
            "witness_imbalance": self.witness_imbalance,
            "degree": self.degree,
        }


def nontermination_criterion(flow):
    """Pigeonhole test: a vertex whose net in/outflow exceeds its degree can
    never be balanced by rerouting, so the process cannot terminate.

    Edges glued to one face on both sides never fire, so their values are
    held fixed: they are subtracted from the imbalance and do not count
    toward the degree.  Says "unknown" otherwise; passing the test proves
    nothing.
    """
    if flow.rep != "edge":
        raise RepresentationMismatch("the criterion reads vertex imbalances of an edge flow")
    cx = flow.complex
    inert = frozenset()
    if cx.kind == "planar":
        inert = frozenset(
            e
            for e in range(len(cx.edges))
            if (inc := cx.incident_faces(e)) and len(inc) == 2 and inc[0][0] == inc[1][0]
        )
    for vertex, b in sorted(imbalances(flow).items()):
        star = cx.vertex_star(vertex)
        fixed = sum(s * flow.get(e) for e, s in star if e in inert)
        active = sum(1 for e, _ in star if e not in inert)
        if abs(b - fixed) > active:
            return CriterionResult(
                "non-terminating",
                witness_vertex=vertex,
                witness_imbalance=b,
                degree=active,
            )
    return CriterionResult("unknown")


@dataclass
class AuditResult:
    clean: bool
    violation: Optional[str] = None
    step: Optional[int] = None
    checks: int = 0

    def to_json(self):
        return {
            "clean": self.clean,
            "violation": self.violation,
            "step": self.step,
            "checks": self.checks,
        }


def _is_pulse(report):
    if report.pulse_k is None or report.rules.hole is None:
        return False
    if report.initial.rep != "face":
        return False
    return report.initial.values == {report.rules.hole: report.pulse_k}


def audit_trajectory(report: RunReport):
    """Replay a finished run and re-validate everything that should hold.

    Checks move legality step by step, every monitor sample against a
    recomputation, and the invariants the rules promise: constant vertex
    imbalances for edge flows, the strict potential drop for hole-free face
    runs, and for hole pulses the hole's constancy, monotone max/min, the
    per-ring value bound, bounded non-decreasing chip count, and the
    potential drop of at least 1 per move.  Returns the first violation
    found or a clean bill.
    """
    rules = report.rules
    rep = rules.representation
    pulse = _is_pulse(report)

    required = set()
    if rep == "edge":
        required.add("imbalance")
    elif pulse:
        required.add("psi")
    elif rules.hole is None:
        required.add("phi")
    missing = required - set(report.monitors)
    if missing:
        raise MissingMonitor(f"audit needs monitor streams {sorted(missing)}")

    checks = 0

    def fail(message, step):
        return AuditResult(False, message, step, checks)

    if len(report.moves) != report.steps:
        return fail(f"report says {report.steps} steps but carries {len(report.moves)} moves", None)
    for name, stream in report.monitors.items():
        if len(stream) != report.steps + 1:
            return fail(
                f"monitor {name!r} has {len(stream)} samples, expected steps+1 = {report.steps + 1}",
                None,
            )

    samplers = _make_samplers(tuple(report.monitors), rules, report.pulse_k)
    values = dict(report.initial.values)

    expected_imbalances = None
    if rep == "edge":
        expected_imbalances = sorted(
            imbalances(EdgeFlow(rules.complex, _raw=dict(values))).items()
        )

    bounds = None
    pyramid_total = None
    pulse_window = None
    if pulse:
        pyramid = predict_pyramid(report.pulse_k, rules.hole, rules.complex)
        pyramid_total = sum(pyramid.values.values())
        bounds = dict(pyramid.values)
        pulse_window = rules.complex.faces_within(rules.hole, report.pulse_k + 1)

    def semantic_check(step, prev_vals_snapshot):
        nonlocal checks
        cx = rules.complex
        if rep == "edge":
            checks += 1
            now = sorted(imbalances(EdgeFlow(cx, _raw=dict(values))).items())
            if now != expected_imbalances:
                return f"vertex imbalances changed at step {step}"
        if rep == "face" and rules.hole is not None:
            checks += 1
            if prev_vals_snapshot is not None:
                if values.get(rules.hole, 0) != prev_vals_snapshot.get(rules.hole, 0):
                    return f"the hole's value changed at step {step}"
                prev_max = max(max(prev_vals_snapshot.values(), default=0), 0)
                prev_min = min(min(prev_vals_snapshot.values(), default=0), 0)
                cur_max = max(max(values.values(), default=0), 0)
                cur_min = min(min(values.values(), default=0), 0)
                if cur_max > prev_max:
                    return f"maximum face value rose at step {step}"
                if cur_min < prev_min:
                    return f"minimum face value fell at step {step}"
        if pulse:
            checks += 1
            for face, v in values.items():
                if v < 0:
                    return f"face {face!r} went negative at step {step}"
                if v > bounds.get(face, 0):
                    return (
                        f"face {face!r} holds {v} chips at step {step}, above its "
                        f"pyramid bound {bounds.get(face, 0)}"
                    )
            total = sum(values.values())
            if total > pyramid_total:
                return f"chip count {total} exceeds the pyramid total {pyramid_total} at step {step}"
            if prev_vals_snapshot is not None:
                if total < sum(prev_vals_snapshot.values()):
                    return f"chip count dropped at step {step}"
        return None

    def monitor_check(step):
        nonlocal checks
        for name, sampler in samplers.items():
            checks += 1
            want = sampler(values)
            got = report.monitors[name][step]
            if name == "imbalance":
                got = [(tuple(v) if isinstance(v, list) else v, b) for v, b in got]
            if got != want:
                return f"monitor {name!r} sample {step} is {got!r}, recomputation gives {want!r}"
        return None

    problem = monitor_check(0) or semantic_check(0, None)
    if problem:
        return fail(problem, 0)

    for step, move in enumerate(report.moves, start=1):
        why = _check_move(values, move, rules)
        checks += 1
        if why is not None:
            return fail(f"move {move!r} at step {step} is illegal: {why}", step)
        prev_snapshot = dict(values)
        _apply_raw(values, move, rules)
        problem = monitor_check(step) or semantic_check(step, prev_snapshot)
        if problem:
            return fail(problem, step)
        if rep == "face" and rules.hole is None:
            checks += 1
            drop = sum(v * v for v in prev_snapshot.values()) - sum(
                v * v for v in values.values()
            )
            if drop < 2:
                return fail(f"potential dropped by {drop} < 2 at step {step}", step)
        if pulse:
            checks += 1
            prev_psi = sum((report.pulse_k - prev_snapshot.get(f, 0)) ** 2 for f in pulse_window)
            cur_psi = sum((report.pulse_k - values.get(f, 0)) ** 2 for f in pulse_window)
            if prev_psi - cur_psi < 1:
                return fail(
                    f"pulse potential dropped by {prev_psi - cur_psi} < 1 at step {step}", step
                )

    checks += 1
    if values != report.final.values:
        return fail("replayed final state does not match the report's final state", report.steps)
    if report.stop_reason == "terminal":
        checks += 1
        if _legal_moves_raw(values, rules):
            return fail("report claims a terminal stop but legal moves remain", report.steps)
    return AuditResult(True, None, None, checks)
