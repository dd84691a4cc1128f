"""Terminal-state enumeration, predictions, local confluence, and auditing."""

import copy

import pytest

from flowfire.analysis import (
    audit_trajectory,
    check_diamond,
    enumerate_terminals,
    nontermination_criterion,
    predict_pyramid,
)
from flowfire.complexes import GridComplex, NdGridComplex, theta_complex
from flowfire.engine import Rules, Strategy, run
from flowfire.errors import MissingMonitor, RepresentationMismatch, UnknownFace
from flowfire.flow import EdgeFlow, FaceRep, faces_to_edges

GRID = GridComplex()
HOLE_GRID = GridComplex(distinguished=(0, 0))
FACE_RULES = Rules(GRID, representation="face")
EDGE_RULES = Rules(GRID, representation="edge")
HOLE_RULES = Rules(HOLE_GRID, representation="face", hole=(0, 0))


# -- the pyramid prediction ---------------------------------------------------


def test_predict_pyramid_small():
    assert predict_pyramid(0, (0, 0), HOLE_GRID).values == {}
    k1 = predict_pyramid(1, (0, 0), HOLE_GRID)
    assert k1.values == {
        (0, 0): 1,
        (-1, 0): 1,
        (0, -1): 1,
        (0, 1): 1,
        (1, 0): 1,
    }


def test_predict_pyramid_values_by_distance():
    k = 3
    pyramid = predict_pyramid(k, (2, -1), GridComplex(distinguished=(2, -1)))
    for face, v in pyramid.values.items():
        d = abs(face[0] - 2) + abs(face[1] + 1)
        assert v == (k if d == 0 else k - d + 1)
        assert v > 0
    # support is exactly the ball of radius k in the dual
    assert set(pyramid.values) == set(
        GridComplex().faces_within((2, -1), k)
    )


def test_predict_pyramid_total_chips():
    # ring r carries 4r faces holding k-r+1 chips each
    totals = {k: sum(predict_pyramid(k, (0, 0), HOLE_GRID).values.values()) for k in range(1, 6)}
    assert totals[4] == 84
    for k, total in totals.items():
        assert total == k + sum(4 * r * (k - r + 1) for r in range(1, k + 1))


def test_predict_pyramid_edge_form():
    # one unit on every edge of the ball's faces except the hole's own edges
    k = 3
    pyramid = predict_pyramid(k, (0, 0), HOLE_GRID)
    flow = faces_to_edges(pyramid)
    assert set(flow.values.values()) <= {1, -1}
    hole_edges = {e for e, _ in HOLE_GRID.boundary((0, 0))}
    expected = set()
    for face in HOLE_GRID.faces_within((0, 0), k):
        expected.update(e for e, _ in HOLE_GRID.boundary(face))
    expected -= hole_edges
    assert set(flow.values) == expected


def test_predict_pyramid_ndgrid():
    nd = NdGridComplex(3, distinguished=(0, 0, 0))
    pyramid = predict_pyramid(2, (0, 0, 0), nd)
    for cell, v in pyramid.values.items():
        d = sum(abs(c) for c in cell)
        assert v == (2 if d == 0 else 2 - d + 1)
    # support is the L1 ball of radius k: 1 + 6 + 18 cells for k=2
    assert len(pyramid.values) == 25


def test_predict_pyramid_validation():
    with pytest.raises(UnknownFace):
        predict_pyramid(1, ("H", 0, 0), GRID)
    with pytest.raises(ValueError):
        predict_pyramid(-1, (0, 0), GRID)


# -- enumeration --------------------------------------------------------------


def test_enumerate_two_chips():
    ts = enumerate_terminals(FaceRep(GRID, {(0, 0): 2}), FACE_RULES)
    assert len(ts.terminals) == 4
    assert ts.reachable_count == 5
    assert not ts.truncated
    for t in ts.terminals:
        assert sorted(t.values.values()) == [1, 1]


def test_enumerate_theta_row():
    theta = theta_complex()
    rules = Rules(theta, representation="face")
    ts = enumerate_terminals(FaceRep(theta, {0: 2, 2: 2}), rules)
    outcomes = sorted(tuple(t.get(f) for f in range(3)) for t in ts.terminals)
    assert outcomes == [(1, 1, 2), (2, 1, 1)]
    assert ts.reachable_count == 3


def test_enumerate_pulse_unique_terminal():
    ts = enumerate_terminals(FaceRep(HOLE_GRID, {(0, 0): 1}), HOLE_RULES)
    assert len(ts.terminals) == 1
    assert ts.reachable_count == 16
    assert ts.terminals[0] == predict_pyramid(1, (0, 0), HOLE_GRID)


def test_enumerate_orders_and_workers_agree():
    initial = FaceRep(HOLE_GRID, {(0, 0): 2})
    dfs = enumerate_terminals(initial, HOLE_RULES, order="dfs")
    bfs = enumerate_terminals(initial, HOLE_RULES, order="bfs")
    par = enumerate_terminals(initial, HOLE_RULES, workers=4)
    assert dfs.terminals == bfs.terminals == par.terminals
    assert dfs.reachable_count == bfs.reachable_count == par.reachable_count
    assert len(dfs.terminals) == 1


def test_enumerate_edge_representation():
    flow = faces_to_edges(FaceRep(GRID, {(0, 0): 2}))
    ts = enumerate_terminals(flow, EDGE_RULES)
    # the four face terminals correspond to four boundary flows
    assert len(ts.terminals) == 4


def test_enumerate_caps_truncate():
    ts = enumerate_terminals(FaceRep(GRID, {(0, 0): 4}), FACE_RULES, max_states=3)
    assert ts.truncated
    assert ts.reachable_count <= 3
    ts2 = enumerate_terminals(FaceRep(GRID, {(0, 0): 4}), FACE_RULES, max_depth=1)
    assert ts2.truncated
    with pytest.raises(ValueError):
        enumerate_terminals(FaceRep(GRID, {}), FACE_RULES, order="middle")
    with pytest.raises(RepresentationMismatch):
        enumerate_terminals(EdgeFlow(GRID, {}), FACE_RULES)


# -- local confluence ---------------------------------------------------------


def test_diamond_violation_on_theta():
    theta = theta_complex()
    rules = Rules(theta, representation="face")
    violations = check_diamond(FaceRep(theta, {0: 2, 2: 2}), rules)
    assert violations
    # the two transfers into the middle face land on distinct terminals
    v = violations[0]
    assert v.successors_a == 0
    assert v.successors_b == 0
    assert v.result_a != v.result_b
    assert v.to_json()["successors_a"] == 0


def test_diamond_violation_on_two_chips():
    assert check_diamond(FaceRep(GRID, {(0, 0): 2}), FACE_RULES)


def test_creates_commute():
    # the four creates of a fresh pulse pairwise rejoin in one step
    assert check_diamond(FaceRep(HOLE_GRID, {(0, 0): 1}), HOLE_RULES) == []


def test_no_moves_no_violation():
    assert check_diamond(FaceRep(GRID, {}), FACE_RULES) == []


# -- the pigeonhole criterion -------------------------------------------------


def test_criterion_five_units():
    crit = nontermination_criterion(EdgeFlow(GRID, {("V", 0, 0): 5}))
    assert crit.verdict == "non-terminating"
    assert abs(crit.witness_imbalance) == 5
    assert crit.degree == 4
    assert crit.to_json()["verdict"] == "non-terminating"


def test_criterion_bounded_imbalance_is_unknown():
    assert nontermination_criterion(EdgeFlow(GRID, {("V", 0, 0): 2})).verdict == "unknown"
    assert nontermination_criterion(EdgeFlow(GRID, {("V", 0, 0): 4})).verdict == "unknown"
    conservative = faces_to_edges(FaceRep(GRID, {(0, 0): 9}))
    assert nontermination_criterion(conservative).verdict == "unknown"


def test_criterion_needs_edge_rep():
    with pytest.raises(RepresentationMismatch):
        nontermination_criterion(FaceRep(GRID, {(0, 0): 5}))


# -- trajectory audit ---------------------------------------------------------


def pulse_report(k=2, seed=1):
    pulse = FaceRep(HOLE_GRID, {(0, 0): k})
    return run(
        pulse,
        HOLE_RULES,
        Strategy("seeded-random", seed),
        step_cap=100_000,
        monitors=("psi", "chips", "max", "min"),
        pulse_k=k,
    )


def test_audit_clean_pulse():
    result = audit_trajectory(pulse_report())
    assert result.clean
    assert result.violation is None
    assert result.checks > 0


def test_audit_clean_edge_run():
    flow = faces_to_edges(FaceRep(GRID, {(0, 0): 4, (2, 2): -3}))
    report = run(
        flow, EDGE_RULES, Strategy("seeded-random", 7), step_cap=100_000,
        monitors=("imbalance",),
    )
    assert report.terminal
    assert audit_trajectory(report).clean


def test_audit_clean_phi_run():
    state = FaceRep(GRID, {(0, 0): 3, (1, 1): -2})
    report = run(
        state, FACE_RULES, Strategy("seeded-random", 3), step_cap=100_000,
        monitors=("phi",),
    )
    assert audit_trajectory(report).clean


def test_audit_requires_monitors():
    pulse = FaceRep(HOLE_GRID, {(0, 0): 1})
    bare = run(pulse, HOLE_RULES, Strategy("seeded-random", 1), step_cap=1_000, pulse_k=1)
    with pytest.raises(MissingMonitor):
        audit_trajectory(bare)
    flow = EdgeFlow(GRID, {("V", 0, 0): 2})
    bare_edge = run(flow, EDGE_RULES, Strategy("seeded-random", 1), step_cap=1_000)
    with pytest.raises(MissingMonitor):
        audit_trajectory(bare_edge)


def test_audit_catches_corrupted_sample():
    report = pulse_report()
    report.monitors["psi"][len(report.monitors["psi"]) // 2] += 1
    result = audit_trajectory(report)
    assert not result.clean
    assert "psi" in result.violation
    assert result.step is not None


def test_audit_catches_dropped_move():
    report = pulse_report()
    report.moves.pop(3)
    result = audit_trajectory(report)
    assert not result.clean


def test_audit_catches_wrong_final():
    report = pulse_report()
    # rebuilding the same content passes; changing one face does not
    report.final = FaceRep(HOLE_GRID, dict(report.final.values))
    assert audit_trajectory(report).clean
    report.final = FaceRep(HOLE_GRID, {(0, 0): 2})
    result = audit_trajectory(report)
    assert not result.clean
    assert "final" in result.violation


def test_audit_catches_false_terminal_claim():
    report = pulse_report()
    report.moves = report.moves[:-1]
    report.steps -= 1
    for stream in report.monitors.values():
        stream.pop()
    report.final = None
    # rebuild final to match the shortened replay so only the claim is wrong
    values = dict(FaceRep(HOLE_GRID, {(0, 0): 2}).values)
    from flowfire.engine import _apply_raw

    for move in report.moves:
        _apply_raw(values, move, HOLE_RULES)
    report.final = FaceRep(HOLE_GRID, values)
    result = audit_trajectory(report)
    assert not result.clean
    assert "terminal" in result.violation


def test_audit_catches_illegal_move_insertion():
    report = pulse_report()
    report.moves[0] = ("transfer", (0, 0), (1, 0))  # transfers never touch the hole
    result = audit_trajectory(report)
    assert not result.clean
    assert "illegal" in result.violation


def test_audit_catches_corrupted_imbalance_sample():
    flow = EdgeFlow(GRID, {("V", 0, 0): 5})
    report = run(
        flow, EDGE_RULES, Strategy("seeded-random", 2), step_cap=30,
        monitors=("imbalance",), detect_revisit=False,
    )
    sample = list(report.monitors["imbalance"][2])
    vertex, b = sample[0]
    sample[0] = (vertex, b + 1)
    report.monitors["imbalance"][2] = sample
    result = audit_trajectory(report)
    assert not result.clean
    assert "imbalance" in result.violation
