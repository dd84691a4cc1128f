"""Command-line front end.

Exit codes: 0 success (for ``run``: reached a terminal state), 3 step cap
hit, 4 exact state revisit detected, 5 a verification verdict of FAIL,
1 parse or validation errors in the inputs, 2 an illegal configuration
for the requested operation (for example converting a non-conservative
flow to face values, or hole rules on a complex with no distinguished
face).

The default seed comes from the FLOWFIRE_SEED environment variable when
--seed is not given.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import analysis, engine, render
from .complexes import load_complex
from .errors import (
    FlowFireError,
    IllegalMove,
    InvalidComplex,
    NotConservative,
    RepresentationMismatch,
    SupportOutsideWindow,
    UnknownEdge,
    UnknownFace,
    ValueOverflow,
)
from .flow import (
    as_edge_flow,
    as_face_rep,
    conservation_witness,
    edges_to_faces,
    faces_to_edges,
    load_config,
)

EXIT_OK = 0
EXIT_PARSE = 1
EXIT_ILLEGAL = 2
EXIT_STEP_CAP = 3
EXIT_REVISIT = 4
EXIT_FAIL = 5

_PARSE_ERRORS = (InvalidComplex, UnknownEdge, UnknownFace, ValueError, ValueOverflow, KeyError)
_ILLEGAL_ERRORS = (NotConservative, RepresentationMismatch, IllegalMove, SupportOutsideWindow)


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors; this tool reserves 2 for illegal
    # configurations, so command-line problems report as parse errors.
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_PARSE, f"{self.prog}: error: {message}\n")


def _read_json(path):
    with open(path) as fh:
        return json.load(fh)


def _load_inputs(args, need_config=True):
    complex_obj = _read_json(args.complex)
    cx = load_complex(complex_obj)
    state = None
    if need_config:
        state = load_config(cx, _read_json(args.config))
    return cx, state


def _emit(args, payload):
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if getattr(args, "out", None):
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _rules_for(args, cx, representation):
    hole = None
    if args.rules == "hole":
        if cx.distinguished is None:
            raise RepresentationMismatch(
                "hole rules need a complex with a distinguished face"
            )
        hole = cx.distinguished
    threshold = getattr(args, "transfer_threshold", 2)
    return engine.Rules(
        cx, representation=representation, hole=hole, transfer_threshold=threshold
    )


def _detect_pulse(state, rules):
    if rules.hole is None or state.rep != "face":
        return None
    k = state.values.get(rules.hole, 0)
    if k > 0 and state.values == {rules.hole: k}:
        return k
    return None


def _default_monitors(state, rules, pulse_k):
    if rules.representation == "edge":
        return ("imbalance",)
    if rules.hole is None:
        return ("phi", "max", "min", "chips")
    if pulse_k is not None:
        return ("psi", "max", "min", "chips")
    return ("max", "min", "chips")


def cmd_run(args):
    cx, state = _load_inputs(args)
    rules = _rules_for(args, cx, state.rep)
    strategy = engine.Strategy(args.strategy, args.seed)
    pulse_k = args.pulse_k if args.pulse_k is not None else _detect_pulse(state, rules)
    if args.monitors == "auto":
        monitors = _default_monitors(state, rules, pulse_k)
    elif args.monitors == "none":
        monitors = ()
    else:
        monitors = tuple(m for m in args.monitors.split(",") if m)
    detect = None
    if args.revisit == "on":
        detect = True
    elif args.revisit == "off":
        detect = False
    report = engine.run(
        state,
        rules,
        strategy,
        step_cap=args.step_cap,
        monitors=monitors,
        pulse_k=pulse_k,
        detect_revisit=detect,
    )
    _emit(args, report.to_json())
    if report.stop_reason == engine.STOP_STEP_CAP:
        return EXIT_STEP_CAP
    if report.stop_reason == engine.STOP_REVISIT:
        return EXIT_REVISIT
    return EXIT_OK


def cmd_enumerate(args):
    cx, state = _load_inputs(args)
    rules = _rules_for(args, cx, state.rep)
    result = analysis.enumerate_terminals(
        state,
        rules,
        max_states=args.max_states,
        max_depth=args.max_depth,
        order=args.order,
        workers=args.workers,
    )
    _emit(args, result.to_json())
    return EXIT_OK


def cmd_verify_pyramid(args):
    cx = load_complex(_read_json(args.complex))
    if cx.distinguished is None:
        raise RepresentationMismatch("pyramid verification needs a distinguished face")
    sigma = cx.distinguished
    k = args.k
    from .flow import FaceRep

    rules = engine.Rules(cx, representation="face", hole=sigma)
    predicted = analysis.predict_pyramid(k, sigma, cx)
    pulse = FaceRep(cx, {sigma: k})
    step_cap = args.step_cap

    failures = []
    for trial in range(args.trials):
        seed = args.seed + trial
        strategy = engine.Strategy("seeded-random", seed)
        report = engine.run(pulse, rules, strategy, step_cap=step_cap,
                            monitors=("psi",), pulse_k=k)
        if not report.terminal or report.final != predicted:
            failures.append((seed, report))
    exhaustive = None
    if k <= args.exhaustive_max_k:
        result = analysis.enumerate_terminals(pulse, rules, max_states=args.max_states)
        exhaustive = {
            "reachable": result.reachable_count,
            "terminal_count": len(result.terminals),
            "truncated": result.truncated,
        }
        if result.truncated or len(result.terminals) != 1 or result.terminals[0] != predicted:
            failures.append(("exhaustive", None))

    verdict = "PASS" if not failures else "FAIL"
    payload = {
        "verdict": verdict,
        "k": k,
        "trials": args.trials,
        "predicted": predicted.to_json(),
        "exhaustive": exhaustive,
        "failures": [seed for seed, _ in failures],
    }
    for seed, report in failures:
        if report is not None:
            payload["first_failure"] = report.to_json()
            break
    _emit(args, payload)
    print(f"verify-pyramid k={k}: {verdict}", file=sys.stderr)
    return EXIT_OK if verdict == "PASS" else EXIT_FAIL


def cmd_convert(args):
    cx, state = _load_inputs(args)
    if args.to == state.rep:
        converted = state
    elif args.to == "face":
        converted = edges_to_faces(state)
    else:
        converted = faces_to_edges(state)
    _emit(args, converted.to_json())
    return EXIT_OK


def cmd_check(args):
    cx = load_complex(_read_json(args.complex))
    payload = {"complex": {"kind": cx.kind, "valid": True}}
    if args.config:
        state = load_config(cx, _read_json(args.config))
        info = {"representation": state.rep, "support": len(state.values)}
        if state.rep == "edge":
            witness = conservation_witness(state)
            info["conservative"] = witness is None
            if witness is not None:
                vertex, imbalance = witness
                info["witness_vertex"] = list(vertex) if isinstance(vertex, tuple) else vertex
                info["witness_imbalance"] = imbalance
            if cx.kind != "ndgrid":
                info["nontermination"] = analysis.nontermination_criterion(state).to_json()
        else:
            info["conservative"] = True
        payload["config"] = info
    _emit(args, payload)
    return EXIT_OK


def cmd_render(args):
    cx, state = _load_inputs(args)
    window = None
    if args.window:
        try:
            window = tuple(int(p) for p in args.window.split(","))
        except ValueError:
            raise ValueError(f"window must be x0,y0,x1,y1, got {args.window!r}") from None
        if len(window) != 4 or window[0] > window[2] or window[1] > window[3]:
            raise ValueError(f"window must be x0,y0,x1,y1 with x0<=x1 and y0<=y1")
    text = render.render(state, fmt=args.format, window=window)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_serve(args):
    import uvicorn

    from .server import create_app

    app = create_app(persist_dir=args.persist_dir, web_dir=args.web_dir)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return EXIT_OK


def build_parser():
    seed_default = int(os.environ.get("FLOWFIRE_SEED", "0"))
    parser = _Parser(prog="flowfire", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config=True):
        p.add_argument("complex", help="complex JSON file")
        if config:
            p.add_argument("config", help="configuration JSON file")
        p.add_argument("--rules", choices=("nohole", "hole"), default="nohole")
        p.add_argument("--out", help="write JSON output here instead of stdout")

    p = sub.add_parser("run", help="drive a configuration with a strategy")
    common(p)
    p.add_argument("--strategy", choices=engine.STRATEGY_NAMES, default="seeded-random")
    p.add_argument("--seed", type=int, default=seed_default)
    p.add_argument("--step-cap", type=int, default=100_000)
    p.add_argument("--monitors", default="auto",
                   help="comma list of phi,psi,max,min,chips,imbalance; or auto/none")
    p.add_argument("--pulse-k", type=int, default=None,
                   help="pulse height for the psi monitor (detected for pure pulses)")
    p.add_argument("--revisit", choices=("auto", "on", "off"), default="auto")
    p.add_argument("--transfer-threshold", type=int, default=2,
                   help="face transfer needs value(a)-value(b) >= this; "
                        "-2 switches to the inverted variant for comparison")
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("enumerate", help="enumerate reachable terminal states")
    common(p)
    p.add_argument("--max-states", type=int, default=1_000_000)
    p.add_argument("--max-depth", type=int, default=None)
    p.add_argument("--order", choices=("dfs", "bfs"), default="dfs")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--transfer-threshold", type=int, default=2)
    p.set_defaults(fn=cmd_enumerate)

    p = sub.add_parser("verify-pyramid", help="check hole pulses settle to the pyramid")
    p.add_argument("complex", help="complex JSON file with a distinguished face")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=seed_default)
    p.add_argument("--step-cap", type=int, default=100_000)
    p.add_argument("--exhaustive-max-k", type=int, default=2)
    p.add_argument("--max-states", type=int, default=1_000_000)
    p.add_argument("--out", help="write JSON output here instead of stdout")
    p.set_defaults(fn=cmd_verify_pyramid)

    p = sub.add_parser("convert", help="convert between edge and face representations")
    p.add_argument("complex")
    p.add_argument("config")
    p.add_argument("--to", choices=("edge", "face"), required=True)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_convert)

    p = sub.add_parser("check", help="validate inputs and report conservativity")
    p.add_argument("complex")
    p.add_argument("config", nargs="?", default=None)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_check)

    p = sub.add_parser("render", help="draw a configuration")
    p.add_argument("complex")
    p.add_argument("config")
    p.add_argument("--format", choices=("ascii", "svg"), default="ascii")
    p.add_argument("--window",
                   help="face window x0,y0,x1,y1 (required for the grid); "
                        "use --window=-2,-2,2,2 for negative coordinates")
    p.add_argument("--out")
    p.set_defaults(fn=cmd_render)

    p = sub.add_parser("serve", help="start the HTTP session service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--persist-dir", default=None,
                   help="append session events here and replay them on startup")
    p.add_argument("--web-dir", default=None, help="serve this directory at /")
    p.set_defaults(fn=cmd_serve)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except json.JSONDecodeError as exc:
        print(f"flowfire: malformed JSON: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except OSError as exc:
        print(f"flowfire: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except _ILLEGAL_ERRORS as exc:
        print(f"flowfire: {exc}", file=sys.stderr)
        return EXIT_ILLEGAL
    except _PARSE_ERRORS as exc:
        print(f"flowfire: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except FlowFireError as exc:
        print(f"flowfire: {exc}", file=sys.stderr)
        return EXIT_ILLEGAL


if __name__ == "__main__":
    sys.exit(main())
