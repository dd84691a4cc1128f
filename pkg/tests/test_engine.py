"""Moves, rules, strategies, and the run loop."""

import random

import pytest

from flowfire.complexes import GridComplex, NdGridComplex, PlanarComplex, theta_complex
from flowfire.engine import (
    CREATE,
    DELETE,
    EDGE_FIRE,
    EDGE_FIRE_ONE_SIDED,
    STOP_REVISIT,
    STOP_STEP_CAP,
    STOP_TERMINAL,
    TRANSFER,
    Rules,
    RunReport,
    SplitMix64,
    Strategy,
    apply_move,
    edge_moves_for_face_move,
    face_move_for_edge_move,
    legal_moves,
    move_from_json,
    move_key,
    move_to_json,
    run,
)
from flowfire.errors import (
    IllegalMove,
    RepresentationMismatch,
    UnknownFace,
    ValueOverflow,
)
from flowfire.flow import (
    INT64_MAX,
    EdgeFlow,
    FaceRep,
    edges_to_faces,
    faces_to_edges,
    imbalances,
)

GRID = GridComplex()
HOLE_GRID = GridComplex(distinguished=(0, 0))
FACE_RULES = Rules(GRID, representation="face")
EDGE_RULES = Rules(GRID, representation="edge")
HOLE_RULES = Rules(HOLE_GRID, representation="face", hole=(0, 0))
HOLE_EDGE_RULES = Rules(HOLE_GRID, representation="edge", hole=(0, 0))


def naive_run(state, rules, strategy, step_cap):
    """Independent run loop: recompute the full legal move set every step.

    Supports the two strategies whose choice is a pure function of the
    sorted move list, which is what the incremental engine must match.
    """
    rng = SplitMix64(strategy.seed)
    values = dict(state.values)
    moves_taken = []
    from flowfire.engine import _apply_raw, _legal_moves_raw

    while len(moves_taken) < step_cap:
        moves = _legal_moves_raw(values, rules)
        if not moves:
            break
        if strategy.name == "lexicographic-first":
            move = moves[0]
        elif strategy.name == "seeded-random":
            move = moves[rng.next() % len(moves)]
        else:
            raise ValueError(strategy.name)
        _apply_raw(values, move, rules)
        moves_taken.append(move)
    return moves_taken, values


# -- rules --------------------------------------------------------------------


def test_rules_validation():
    with pytest.raises(RepresentationMismatch):
        Rules(GRID, representation="dual")
    with pytest.raises(RepresentationMismatch):
        Rules(NdGridComplex(3), representation="edge")
    with pytest.raises(UnknownFace):
        Rules(GRID, representation="face", hole=("H", 0, 0))
    assert HOLE_RULES.hole_edges == {("H", 0, 1), ("V", 1, 0), ("H", 0, 0), ("V", 0, 0)}
    assert FACE_RULES.hole_edges == frozenset()


def test_inert_edges_never_fire():
    loop = PlanarComplex([(0, 1), (1, 1)], [[(0, 1), (1, 1), (1, -1), (0, -1)]])
    rules = Rules(loop, representation="edge")
    assert rules.inert_edges == {0, 1}
    state = EdgeFlow(loop, {0: 5})
    assert legal_moves(state, rules) == []
    with pytest.raises(IllegalMove):
        apply_move(state, (EDGE_FIRE, 0), rules)


# -- legal moves --------------------------------------------------------------


def test_pulse_offers_creates_at_all_neighbors():
    pulse = FaceRep(HOLE_GRID, {(0, 0): 2})
    moves = legal_moves(pulse, HOLE_RULES)
    assert moves == [
        (CREATE, (-1, 0)),
        (CREATE, (0, -1)),
        (CREATE, (0, 1)),
        (CREATE, (1, 0)),
    ]


def test_two_chips_offer_transfers():
    state = FaceRep(GRID, {(0, 0): 2})
    moves = legal_moves(state, FACE_RULES)
    assert moves == [
        (TRANSFER, (0, 0), (-1, 0)),
        (TRANSFER, (0, 0), (0, -1)),
        (TRANSFER, (0, 0), (0, 1)),
        (TRANSFER, (0, 0), (1, 0)),
    ]


def test_hole_mixed_moves():
    state = FaceRep(HOLE_GRID, {(0, 0): 1, (1, 0): 3})
    moves = legal_moves(state, HOLE_RULES)
    transfers = [m for m in moves if m[0] == TRANSFER]
    creates = [m for m in moves if m[0] == CREATE]
    deletes = [m for m in moves if m[0] == DELETE]
    # (1,0) may shed to its non-hole neighbors; never into the hole
    assert transfers == [
        (TRANSFER, (1, 0), (1, -1)),
        (TRANSFER, (1, 0), (1, 1)),
        (TRANSFER, (1, 0), (2, 0)),
    ]
    assert creates == [(CREATE, (-1, 0)), (CREATE, (0, -1)), (CREATE, (0, 1))]
    assert deletes == [(DELETE, (1, 0))]


def test_hole_value_is_pinned():
    state = FaceRep(HOLE_GRID, {(0, 0): 1, (1, 0): 3})
    for move in legal_moves(state, HOLE_RULES):
        after = apply_move(state, move, HOLE_RULES)
        assert after.get((0, 0)) == 1


def test_edge_moves_thresholds():
    assert legal_moves(EdgeFlow(GRID, {("V", 5, 5): 1}), EDGE_RULES) == []
    assert legal_moves(EdgeFlow(GRID, {("V", 5, 5): -2}), EDGE_RULES) == [
        (EDGE_FIRE, ("V", 5, 5))
    ]
    # a single unit on a hole-boundary edge fires one-sided
    one = EdgeFlow(HOLE_GRID, {("V", 0, 0): 1})
    assert legal_moves(one, HOLE_EDGE_RULES) == [(EDGE_FIRE_ONE_SIDED, ("V", 0, 0))]
    # two units on a non-boundary edge still fire normally under hole rules
    two = EdgeFlow(HOLE_GRID, {("V", 5, 5): 2})
    assert legal_moves(two, HOLE_EDGE_RULES) == [(EDGE_FIRE, ("V", 5, 5))]


def test_literal_threshold_mode():
    # with the printed threshold of -2 even flat neighbors may transfer
    rules = Rules(GRID, representation="face", transfer_threshold=-2)
    state = FaceRep(GRID, {(0, 0): 1, (1, 0): 1})
    moves = legal_moves(state, rules)
    assert (TRANSFER, (0, 0), (1, 0)) in moves
    assert (TRANSFER, (1, 0), (0, 0)) in moves
    after = apply_move(state, (TRANSFER, (0, 0), (1, 0)), rules)
    assert after.values == {(1, 0): 2}


# -- applying moves -----------------------------------------------------------


def test_two_unit_edge_fire_picture():
    state = EdgeFlow(GRID, {("V", 0, 0): 2})
    report = run(state, EDGE_RULES, Strategy("lexicographic-first"), step_cap=10)
    assert report.steps == 1
    assert report.terminal
    assert report.final.values == {
        ("H", -1, 0): -1,
        ("H", -1, 1): 1,
        ("H", 0, 0): 1,
        ("H", 0, 1): -1,
        ("V", -1, 0): 1,
        ("V", 1, 0): 1,
    }
    # the fired edge dropped from 2 to 0 and both circulations are terminal
    assert report.final.get(("V", 0, 0)) == 0


def test_edge_fire_drops_magnitude_by_two():
    for v in (2, 3, -2, 5):
        state = EdgeFlow(GRID, {("H", 2, 2): v})
        after = apply_move(state, (EDGE_FIRE, ("H", 2, 2)), EDGE_RULES)
        assert abs(after.get(("H", 2, 2))) == abs(v) - 2
        assert imbalances(after) == imbalances(state)


def test_one_sided_fire_reroutes_away_from_hole():
    # V:0,0 borders the hole (0,0) and the outside face (-1,0); firing it
    # one-sided must only touch the outside face's other three edges
    state = EdgeFlow(HOLE_GRID, {("V", 0, 0): 1})
    after = apply_move(state, (EDGE_FIRE_ONE_SIDED, ("V", 0, 0)), HOLE_EDGE_RULES)
    assert after.get(("V", 0, 0)) == 0
    assert set(after.values) == {("H", -1, 1), ("V", -1, 0), ("H", -1, 0)}
    assert imbalances(after) == imbalances(state)


def test_illegal_moves_rejected():
    state = FaceRep(HOLE_GRID, {(0, 0): 2})
    with pytest.raises(IllegalMove):
        apply_move(state, (TRANSFER, (0, 0), (1, 0)), HOLE_RULES)  # hole moves
    with pytest.raises(IllegalMove):
        apply_move(state, (DELETE, (1, 0)), HOLE_RULES)  # hole not lower
    with pytest.raises(IllegalMove):
        apply_move(state, (TRANSFER, (3, 3), (4, 4)), FACE_RULES)  # not adjacent
    with pytest.raises(IllegalMove):
        apply_move(
            EdgeFlow(GRID, {("V", 0, 0): 1}), (EDGE_FIRE, ("V", 0, 0)), EDGE_RULES
        )
    with pytest.raises(RepresentationMismatch):
        apply_move(state, (CREATE, (1, 0)), EDGE_RULES)


def test_apply_move_is_pure():
    state = FaceRep(GRID, {(0, 0): 2})
    after = apply_move(state, (TRANSFER, (0, 0), (1, 0)), FACE_RULES)
    assert state.values == {(0, 0): 2}
    assert after.values == {(0, 0): 1, (1, 0): 1}


def test_overflow_guard():
    state = EdgeFlow(GRID, {("V", 0, 0): 2, ("H", 0, 0): INT64_MAX})
    with pytest.raises(ValueOverflow):
        apply_move(state, (EDGE_FIRE, ("V", 0, 0)), EDGE_RULES)


def test_move_json_round_trip():
    moves = [
        (EDGE_FIRE, ("V", -1, 2)),
        (EDGE_FIRE_ONE_SIDED, ("H", 0, 0)),
        (TRANSFER, (0, 0), (1, 0)),
        (CREATE, (-1, 0)),
        (DELETE, (3, -3)),
    ]
    for move in moves:
        blob = move_to_json(GRID, move)
        assert move_from_json(GRID, blob) == move
    with pytest.raises(ValueError):
        move_from_json(GRID, ["warp", "F:0,0"])


# -- representation correspondence --------------------------------------------


def test_transfer_equals_shared_edge_fire():
    rng = random.Random(23)
    for _ in range(100):
        values = {}
        for _ in range(rng.randrange(1, 6)):
            face = (rng.randrange(-2, 3), rng.randrange(-2, 3))
            v = rng.randrange(-3, 4)
            if v:
                values[face] = v
        faces = FaceRep(GRID, values)
        flow = faces_to_edges(faces)
        face_moves = legal_moves(faces, FACE_RULES)
        edge_moves = legal_moves(flow, EDGE_RULES)
        # the two move sets correspond one-to-one through the shared edge
        mapped = sorted(face_move_for_edge_move(flow, m, EDGE_RULES) for m in edge_moves)
        assert mapped == sorted(face_moves)
        for fm in face_moves:
            ems = edge_moves_for_face_move(fm, FACE_RULES)
            assert len(ems) == 1
            assert ems[0] in edge_moves


def test_bisimulation_200_steps():
    rng = random.Random(29)
    faces = FaceRep(GRID, {(0, 0): 6, (2, 1): -5, (-1, -1): 4})
    flow = faces_to_edges(faces)
    for step in range(200):
        edge_moves = legal_moves(flow, EDGE_RULES)
        face_moves = legal_moves(faces, FACE_RULES)
        assert bool(edge_moves) == bool(face_moves)
        if not edge_moves:
            break
        em = edge_moves[rng.randrange(len(edge_moves))]
        fm = face_move_for_edge_move(flow, em, EDGE_RULES)
        assert fm in face_moves
        flow = apply_move(flow, em, EDGE_RULES)
        faces = apply_move(faces, fm, FACE_RULES)
        assert edges_to_faces(flow) == faces
    else:
        pytest.fail("did not reach a terminal state in 200 steps")


def test_hole_bisimulation():
    # the edge flow stays the exact boundary of the face picture, hole
    # value included, through mixed one-sided and two-sided firings
    pulse = FaceRep(HOLE_GRID, {(0, 0): 2})
    flow = faces_to_edges(pulse)
    rng = random.Random(31)
    for _ in range(200):
        edge_moves = legal_moves(flow, HOLE_EDGE_RULES)
        face_moves = legal_moves(pulse, HOLE_RULES)
        assert bool(edge_moves) == bool(face_moves)
        if not edge_moves:
            break
        em = edge_moves[rng.randrange(len(edge_moves))]
        fm = face_move_for_edge_move(flow, em, HOLE_EDGE_RULES)
        assert fm in face_moves
        flow = apply_move(flow, em, HOLE_EDGE_RULES)
        pulse = apply_move(pulse, fm, HOLE_RULES)
        assert edges_to_faces(flow) == pulse
    else:
        pytest.fail("did not reach a terminal state in 200 steps")
    assert pulse.get((0, 0)) == 2


# -- strategies ---------------------------------------------------------------


def test_splitmix64_reference_vectors():
    gen = SplitMix64(0)
    assert [gen.next() for _ in range(3)] == [
        0xE220A8397B1DCDAF,
        0x6E789E6AA1B965F4,
        0x06C45D188009454F,
    ]
    gen = SplitMix64(1)
    assert gen.next() == 0x910A2DEC89025CC1


def test_strategy_validation():
    with pytest.raises(ValueError):
        Strategy("zigzag")
    assert Strategy("fifo-queue", 3).seed == 3


def test_same_seed_same_trajectory():
    pulse = FaceRep(HOLE_GRID, {(0, 0): 3})
    a = run(pulse, HOLE_RULES, Strategy("seeded-random", 42), step_cap=10_000)
    b = run(pulse, HOLE_RULES, Strategy("seeded-random", 42), step_cap=10_000)
    assert a.moves == b.moves
    assert a.final == b.final


def test_all_strategies_reach_the_pyramid():
    from flowfire.analysis import predict_pyramid

    expected = predict_pyramid(2, (0, 0), HOLE_GRID)
    for name in ("seeded-random", "lexicographic-first", "max-difference", "fifo-queue"):
        pulse = FaceRep(HOLE_GRID, {(0, 0): 2})
        report = run(pulse, HOLE_RULES, Strategy(name, 9), step_cap=10_000)
        assert report.terminal, name
        assert report.final == expected, name


def test_incremental_move_set_matches_naive_lexicographic():
    cases = [
        (FaceRep(HOLE_GRID, {(0, 0): 3}), HOLE_RULES),
        (FaceRep(GRID, {(0, 0): 5, (1, 1): -4}), FACE_RULES),
        (faces_to_edges(FaceRep(GRID, {(0, 0): 3, (2, 0): 2})), EDGE_RULES),
    ]
    for state, rules in cases:
        report = run(
            state, rules, Strategy("lexicographic-first"), step_cap=5_000,
            detect_revisit=False,
        )
        expected_moves, expected_values = naive_run(
            state, rules, Strategy("lexicographic-first"), step_cap=5_000
        )
        assert report.moves == expected_moves
        assert report.final.values == expected_values


def test_incremental_move_set_matches_naive_seeded():
    rng = random.Random(37)
    for trial in range(15):
        values = {}
        for _ in range(rng.randrange(1, 6)):
            face = (rng.randrange(-2, 3), rng.randrange(-2, 3))
            v = rng.randrange(-3, 4)
            if v:
                values[face] = v
        state = FaceRep(HOLE_GRID, values)
        strategy = Strategy("seeded-random", trial)
        report = run(state, HOLE_RULES, strategy, step_cap=5_000)
        expected_moves, expected_values = naive_run(state, HOLE_RULES, strategy, 5_000)
        assert report.moves == expected_moves, trial
        assert report.final.values == expected_values, trial


def test_nonconservative_matches_naive_under_cap():
    state = EdgeFlow(GRID, {("V", 0, 0): 5})
    strategy = Strategy("seeded-random", 3)
    report = run(state, EDGE_RULES, strategy, step_cap=50, detect_revisit=False)
    assert report.stop_reason == STOP_STEP_CAP
    expected_moves, expected_values = naive_run(state, EDGE_RULES, strategy, 50)
    assert report.moves == expected_moves
    assert report.final.values == expected_values


def test_fifo_queue_order():
    # fifo fires moves in the order they first became legal
    state = FaceRep(GRID, {(0, 0): 4})
    report = run(state, FACE_RULES, Strategy("fifo-queue"), step_cap=100)
    first_wave = [m[1] for m in report.moves[:4]]
    assert first_wave[0] == (0, 0)
    assert report.terminal


def test_max_difference_prefers_steepest():
    state = FaceRep(GRID, {(0, 0): 9, (3, 3): 2})
    report = run(state, FACE_RULES, Strategy("max-difference"), step_cap=1)
    # (0,0) towers 9 over its neighbors; (3,3) only 2
    assert report.moves[0][1] == (0, 0)


# -- run loop ------------------------------------------------------------------


def test_monitor_streams_cover_every_step():
    pulse = FaceRep(HOLE_GRID, {(0, 0): 2})
    report = run(
        pulse,
        HOLE_RULES,
        Strategy("seeded-random", 1),
        step_cap=10_000,
        monitors=("psi", "chips", "max", "min"),
        pulse_k=2,
    )
    assert report.terminal
    for stream in report.monitors.values():
        assert len(stream) == report.steps + 1
    psi = report.monitors["psi"]
    assert psi[0] == 96
    assert all(a - b >= 1 for a, b in zip(psi, psi[1:]))
    chips = report.monitors["chips"]
    assert all(b >= a for a, b in zip(chips, chips[1:]))
    assert max(report.monitors["max"]) <= 2
    assert min(report.monitors["min"]) >= 0


def test_phi_monitor_drops_by_two():
    state = FaceRep(GRID, {(0, 0): 5, (2, 2): -3})
    report = run(
        state, FACE_RULES, Strategy("seeded-random", 4), step_cap=10_000,
        monitors=("phi",),
    )
    assert report.terminal
    phi = report.monitors["phi"]
    assert all(a - b >= 2 for a, b in zip(phi, phi[1:]))


def test_imbalance_monitor_is_constant():
    state = EdgeFlow(GRID, {("V", 0, 0): 5})
    report = run(
        state, EDGE_RULES, Strategy("seeded-random", 5), step_cap=200,
        monitors=("imbalance",), detect_revisit=False,
    )
    streams = report.monitors["imbalance"]
    assert all(s == streams[0] for s in streams)


def test_revisit_detection_on_cycling_flow():
    state = EdgeFlow(GRID, {("V", 0, 0): 5})
    report = run(state, EDGE_RULES, Strategy("lexicographic-first"), step_cap=10_000)
    assert report.stop_reason == STOP_REVISIT
    assert report.steps == 5
    assert report.revisit_enabled


def test_revisit_cap_exhaustion_reported():
    state = EdgeFlow(GRID, {("V", 0, 0): 5})
    report = run(
        state, EDGE_RULES, Strategy("seeded-random", 11), step_cap=100,
        detect_revisit=True, revisit_cap=3,
    )
    assert report.revisit_exhausted_at == 3
    assert report.stop_reason in (STOP_STEP_CAP, STOP_REVISIT)


def test_step_cap_stop():
    state = FaceRep(HOLE_GRID, {(0, 0): 5})
    report = run(state, HOLE_RULES, Strategy("seeded-random", 0), step_cap=3)
    assert report.stop_reason == STOP_STEP_CAP
    assert report.steps == 3
    assert len(report.moves) == 3


def test_report_json_round_trip_moves():
    pulse = FaceRep(HOLE_GRID, {(0, 0): 1})
    report = run(pulse, HOLE_RULES, Strategy("seeded-random", 2), step_cap=1_000,
                 monitors=("psi",), pulse_k=1)
    blob = report.to_json()
    assert blob["steps"] == report.steps
    assert blob["terminal"] is True
    assert blob["monitors"]["psi"][0] == 12  # 12 empty faces in the radius-2 ball
    assert [move_from_json(HOLE_GRID, m) for m in blob["moves"]] == report.moves
