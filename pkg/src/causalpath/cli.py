"""Command-line front end: reproducible simulation, estimation, bound reports,
graph analysis, and the stock-index pipeline.

Every run writes a metadata.json next to its outputs echoing the full
configuration, seeds, and library versions, so any result can be reproduced
from the metadata alone. Exit codes: 0 success, 2 input error, 3 numerical
failure (non-ergodic model or an absolute-continuity violation).
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .core import AbsoluteContinuityError, Alphabet, SymbolSeq
from .ctw import ContextSchema, regret_bound_plain, regret_bound_side_info
from .graphs import build_unrolled_network, classify_markovicity
from .ingest import (
    QuantizerSpec,
    align_calendars,
    load_price_csv,
    pct_change_quantize,
    read_symbol_csv,
    shift_for_market_order,
    write_symbol_csv,
)
from .markov import JointMarkovModel, NonErgodicError, simulate
from .measure import (
    CausalTrace,
    EstimatorConfig,
    causality_regret_bound,
    estimate_causal_trace,
    estimate_partial_trace,
    plug_in_di_rate,
)
from .scenarios import SCENARIO_NAMES, scenario_model

OUT_ENV_VAR = "CAUSALPATH_OUT"


def _outdir(args) -> Path:
    out = args.out or os.environ.get(OUT_ENV_VAR)
    if not out:
        raise ValueError(f"no output directory: pass --out or set {OUT_ENV_VAR}")
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _write_metadata(outdir: Path, command: str, payload: dict) -> None:
    record = {
        "command": command,
        "causalpath_version": __version__,
        "numpy_version": np.__version__,
        **payload,
    }
    with open(outdir / "metadata.json", "w") as fp:
        json.dump(record, fp, indent=1, sort_keys=True)
        fp.write("\n")


def _load_model(args) -> JointMarkovModel:
    if getattr(args, "model", None):
        return JointMarkovModel.load(args.model)
    if getattr(args, "scenario", None):
        params = {}
        for key in ("epsilon", "p1", "p2"):
            v = getattr(args, key, None)
            if v is not None:
                params[key] = v
        return scenario_model(args.scenario, **params)
    raise ValueError("need --model or --scenario")


def _write_symbols(outdir: Path, name: str, seq: SymbolSeq, fmt: str, dates=None) -> None:
    if fmt == "csv":
        with open(outdir / f"{name}.csv", "w") as fp:
            write_symbol_csv(fp, seq, dates)
    else:
        with open(outdir / f"{name}.jsonl", "w") as fp:
            for i, sym in enumerate(seq.data, start=1):
                rec = {"i": i, "symbol": int(sym)}
                if dates is not None:
                    rec["date"] = dates[i - 1].isoformat()
                fp.write(json.dumps(rec) + "\n")


def _write_trace(outdir: Path, name: str, trace: CausalTrace, fmt: str) -> Path:
    if fmt == "csv":
        path = outdir / f"{name}.csv"
        with open(path, "w") as fp:
            trace.write_csv(fp)
    else:
        path = outdir / f"{name}.jsonl"
        with open(path, "w") as fp:
            trace.write_records(fp)
    return path


# -- subcommands -------------------------------------------------------------------


def cmd_simulate(args) -> int:
    outdir = _outdir(args)
    model = _load_model(args)
    x, y = simulate(model, args.n, args.seed)
    _write_symbols(outdir, "x", x, args.format)
    _write_symbols(outdir, "y", y, args.format)
    _write_metadata(
        outdir,
        "simulate",
        {
            "scenario": args.scenario,
            "model": args.model,
            "n": args.n,
            "seed": args.seed,
            "format": args.format,
            "alphabet_x": model.mx,
            "alphabet_y": model.my,
            "order": model.order,
            "stationary_start": not model.has_custom_initial,
        },
    )
    print(f"wrote x/y symbol files ({args.n} steps) to {outdir}")
    return 0


def _direction_runs(args, x: SymbolSeq, y: SymbolSeq, model):
    """(label, target, side, truth_model) per requested direction."""
    runs = []
    if args.direction in ("yx", "both"):
        runs.append(("y_to_x", x, y, model))
    if args.direction in ("xy", "both"):
        runs.append(("x_to_y", y, x, model.swapped() if model is not None else None))
    return runs


def cmd_estimate(args) -> int:
    outdir = _outdir(args)
    ax = Alphabet(args.alphabet_x) if args.alphabet_x else None
    ay = Alphabet(args.alphabet_y) if args.alphabet_y else None
    x = read_symbol_csv(args.x, ax)
    y = read_symbol_csv(args.y, ay)
    model = JointMarkovModel.load(args.model) if args.model else None
    written = []
    for label, target, side, truth in _direction_runs(args, x, y, model):
        config = EstimatorConfig(
            target.alphabet, side.alphabet, depth=args.d, staleness=args.k, direction=label
        )
        if args.k is not None:
            trace = estimate_partial_trace(target, side, config, truth_model=truth)
        else:
            trace = estimate_causal_trace(target, side, config, truth_model=truth)
        path = _write_trace(outdir, f"trace_{label}", trace, args.format)
        written.append(str(path))
        print(
            f"{label}: n={len(trace)} plug-in rate={plug_in_di_rate(trace):.6f} bits/step"
            f" (L={trace.metadata['reference_leaves']}, S={trace.metadata['reference_nodes']}"
            f" reference; L={trace.metadata['complete_leaves']},"
            f" S={trace.metadata['complete_nodes']} complete)"
        )
    _write_metadata(
        outdir,
        "estimate",
        {
            "x": args.x,
            "y": args.y,
            "model": args.model,
            "d": args.d,
            "k": args.k,
            "direction": args.direction,
            "format": args.format,
            "traces": written,
            "truth_columns": model is not None,
        },
    )
    return 0


def cmd_bounds(args) -> int:
    m = args.m
    side_m = args.side_m or m
    restricted = ContextSchema(Alphabet(m), None, args.d, 0)
    complete = ContextSchema(Alphabet(m), Alphabet(side_m), args.d, 0)
    report: dict = {
        "m": m,
        "side_m": side_m,
        "d": args.d,
        "n": args.n,
        "restricted": {
            "L": restricted.leaf_count(),
            "bound_bits": regret_bound_plain(m, restricted.leaf_count(), args.n),
        },
        "complete": {
            "L": complete.leaf_count(),
            "S": complete.node_count(),
            "bound_bits": regret_bound_side_info(
                m, complete.leaf_count(), complete.node_count(), args.n
            ),
        },
    }
    if args.k is not None:
        stale = ContextSchema(Alphabet(m), Alphabet(side_m), args.d, args.k)
        report["stale"] = {
            "k": args.k,
            "L": stale.leaf_count(),
            "S": stale.node_count(),
            "bound_bits": regret_bound_side_info(
                m, stale.leaf_count(), stale.node_count(), args.n
            ),
        }
    print(f"restricted predictor: L={report['restricted']['L']}"
          f" bound={report['restricted']['bound_bits']:.2f} bits")
    print(f"complete predictor:   L={report['complete']['L']} S={report['complete']['S']}"
          f" bound={report['complete']['bound_bits']:.2f} bits")
    if "stale" in report:
        print(f"stale predictor:      L={report['stale']['L']} S={report['stale']['S']}"
              f" bound={report['stale']['bound_bits']:.2f} bits")
    if args.trace:
        curve = _bound_curve_from_trace(args.trace, report)
        report["trace"] = args.trace
        if args.out:
            outdir = _outdir(args)
            with open(outdir / "bound_curve.csv", "w") as fp:
                fp.write("i,m_complete,m_reference,bound_bits\n")
                for row in curve:
                    fp.write(",".join("" if v is None else f"{v:.12g}" for v in row) + "\n")
            print(f"wrote bound curve ({len(curve)} rows) to {outdir / 'bound_curve.csv'}")
    if args.out:
        outdir = _outdir(args)
        _write_metadata(outdir, "bounds", report)
    return 0


def _bound_curve_from_trace(trace_path: str, report: dict) -> list[tuple]:
    with open(trace_path, newline="") as fp:
        rows = list(csv.DictReader(fp))
    if not rows or "c_i" not in rows[0]:
        raise ValueError(f"{trace_path}: not a trace export with a c_i column")
    c = np.array([float(r["c_i"]) for r in rows])
    m = report["m"]
    lc, sc = report["complete"]["L"], report["complete"]["S"]
    if "stale" in report:
        lr, sr = report["stale"]["L"], report["stale"]["S"]
    else:
        lr, sr = report["restricted"]["L"], None
    csq = np.cumsum(c**2)
    curve = []
    for i in range(1, c.size + 1):
        if i < max(lc, lr):
            curve.append((i, None, None, None))
            continue
        mc = regret_bound_side_info(m, lc, sc, i)
        mr = (
            regret_bound_plain(m, lr, i)
            if sr is None
            else regret_bound_side_info(m, lr, sr, i)
        )
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            bound = causality_regret_bound(mc, mr, math.sqrt(csq[i - 1]))
        curve.append((i, mc, mr, bound))
    return curve


def cmd_dsep(args) -> int:
    outdir = _outdir(args)
    model = _load_model(args)
    horizon = args.horizon or (2 * model.order + 3)
    dag = build_unrolled_network(model, horizon)
    report = classify_markovicity(model)
    with open(outdir / "edges.txt", "w") as fp:
        fp.write(dag.to_edge_list())
    _write_metadata(
        outdir,
        "dsep",
        {
            "scenario": args.scenario,
            "model": args.model,
            "horizon": horizon,
            "edge_count": len(dag.edges),
            "classification": report.branch,
            "cross_mi_bits": {str(k): v for k, v in report.cross_mi.items()},
            "side_pair_mi_max_bits": report.side_pair_mi_max,
            "faithfulness_caveat": report.caveat,
        },
    )
    print(f"classification: {report.branch}")
    print(f"edges ({len(dag.edges)}) written to {outdir / 'edges.txt'}")
    print(f"caveat: {report.caveat}")
    return 0


def cmd_stocks(args) -> int:
    outdir = _outdir(args)
    series_a = load_price_csv(args.prices_a)
    series_b = load_price_csv(args.prices_b)
    aligned_a, aligned_b, align_meta = align_calendars(series_a, series_b)
    spec = QuantizerSpec(args.threshold)
    sym_a = pct_change_quantize(aligned_a, spec)
    sym_b = pct_change_quantize(aligned_b, spec)
    dates = aligned_a.dates[1:]
    _write_symbols(outdir, f"symbols_{args.label_a}", sym_a, args.format, dates)
    _write_symbols(outdir, f"symbols_{args.label_b}", sym_b, args.format, dates)

    summaries = {}
    # a -> b: market b's move conditioned on market a's strictly prior close
    runs = [
        (f"{args.label_a}_to_{args.label_b}", sym_b, sym_a),
        # b -> a: market b closes earlier the same day, so lag it one extra step
        (f"{args.label_b}_to_{args.label_a}",) + shift_for_market_order(sym_a, sym_b),
    ]
    for label, target, side in runs:
        config = EstimatorConfig(
            target.alphabet, side.alphabet, depth=args.d, direction=label
        )
        trace = estimate_causal_trace(target, side, config)
        _write_trace(outdir, f"trace_{label}", trace, args.format)
        summary = _state_summary(trace, target, side, args.d)
        summaries[label] = summary
        with open(outdir / f"summary_{label}.csv", "w") as fp:
            fp.write(
                "target_prev,side_prev,count,occupancy_pct,"
                "mean_bits,median_bits,q25_bits,q75_bits\n"
            )
            for row in summary["states"]:
                fp.write(
                    f"{row['target_prev']},{row['side_prev']},{row['count']},"
                    f"{row['occupancy_pct']:.4f},{row['mean_bits']:.12g},"
                    f"{row['median_bits']:.12g},{row['q25_bits']:.12g},"
                    f"{row['q75_bits']:.12g}\n"
                )
            fp.write(f"plug_in_di_bits,,,,{summary['plug_in_di_bits']:.12g},,,\n")
        print(f"{label}: plug-in rate = {summary['plug_in_di_bits']:.6f} bits/step")
    _write_metadata(
        outdir,
        "stocks",
        {
            "prices_a": args.prices_a,
            "prices_b": args.prices_b,
            "label_a": args.label_a,
            "label_b": args.label_b,
            "threshold": args.threshold,
            "tie_rule": "exact threshold moves map to symbol 1",
            "d": args.d,
            "format": args.format,
            "alignment": align_meta,
            "plug_in_di_bits": {k: v["plug_in_di_bits"] for k, v in summaries.items()},
        },
    )
    return 0


def _state_summary(trace: CausalTrace, target: SymbolSeq, side: SymbolSeq, d: int) -> dict:
    est = trace.estimate_bits
    n = est.size
    groups: dict[tuple[int, int], list[float]] = {}
    usable = 0
    for i in range(1, n):
        state = (int(target.data[i - 1]), int(side.data[i - 1]))
        groups.setdefault(state, []).append(float(est[i]))
        usable += 1
    rows = []
    for state in sorted(groups):
        vals = np.array(groups[state])
        rows.append(
            {
                "target_prev": state[0],
                "side_prev": state[1],
                "count": int(vals.size),
                "occupancy_pct": 100.0 * vals.size / usable,
                "mean_bits": float(vals.mean()),
                "median_bits": float(np.median(vals)),
                "q25_bits": float(np.quantile(vals, 0.25)),
                "q75_bits": float(np.quantile(vals, 0.75)),
            }
        )
    return {"states": rows, "plug_in_di_bits": plug_in_di_rate(trace)}


# -- argument parsing -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="causalpath",
        description=(
            "Sample-path causal influence between discrete time series via "
            "sequential prediction, with exact Markov oracles and regret bounds."
        ),
        epilog=f"Default output directory comes from ${OUT_ENV_VAR} when --out is omitted.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_out(p):
        p.add_argument("--out", help=f"output directory (default ${OUT_ENV_VAR})")
        p.add_argument(
            "--format", choices=("csv", "records"), default="csv",
            help="tabular exports as CSV or JSON-lines records",
        )

    def add_model_source(p):
        p.add_argument("--model", help="model description JSON file")
        p.add_argument(
            "--scenario", choices=SCENARIO_NAMES, help="built-in pinned scenario"
        )
        p.add_argument("--epsilon", type=float, help="cross-copy / iid-influence noise")
        p.add_argument("--p1", type=float, help="iid-influence law when side = 1")
        p.add_argument("--p2", type=float, help="iid-influence law when side = 0")

    p = sub.add_parser("simulate", help="sample symbol streams from a model")
    add_model_source(p)
    p.add_argument("--n", type=int, required=True, help="stream length")
    p.add_argument("--seed", type=int, required=True, help="random seed")
    add_out(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("estimate", help="estimate causal influence from symbol files")
    p.add_argument("--x", required=True, help="target symbol CSV")
    p.add_argument("--y", required=True, help="side symbol CSV")
    p.add_argument("--model", help="model JSON for oracle truth columns")
    p.add_argument("--d", type=int, default=1, help="context depth")
    p.add_argument("--k", type=int, help="staleness; selects the partial estimator")
    p.add_argument(
        "--direction", choices=("yx", "xy", "both"), default="both",
        help="yx estimates the influence of y on x",
    )
    p.add_argument("--alphabet-x", type=int, help="override inferred target alphabet")
    p.add_argument("--alphabet-y", type=int, help="override inferred side alphabet")
    add_out(p)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("bounds", help="worst-case regret and deviation bounds")
    p.add_argument("--m", type=int, required=True, help="target alphabet size")
    p.add_argument("--side-m", type=int, help="side alphabet size (default m)")
    p.add_argument("--d", type=int, default=1, help="context depth")
    p.add_argument("--k", type=int, help="staleness for the stale-tree bound")
    p.add_argument("--n", type=int, required=True, help="horizon")
    p.add_argument("--trace", help="trace CSV; adds the full per-prefix bound curve")
    add_out(p)
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("dsep", help="unrolled network edges and Markovicity class")
    add_model_source(p)
    p.add_argument("--horizon", type=int, help="unrolling horizon (default 2d+3)")
    add_out(p)
    p.set_defaults(func=cmd_dsep)

    p = sub.add_parser("stocks", help="price CSVs to per-state causal summaries")
    p.add_argument("--prices-a", required=True, help="market A price CSV (closes later in the day)")
    p.add_argument("--prices-b", required=True, help="market B price CSV (closes earlier in the day)")
    p.add_argument("--label-a", default="a", help="output label for market A")
    p.add_argument("--label-b", default="b", help="output label for market B")
    p.add_argument("--threshold", type=float, default=0.008, help="quantizer threshold")
    p.add_argument("--d", type=int, default=1, help="context depth")
    add_out(p)
    p.set_defaults(func=cmd_stocks)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (NonErgodicError, AbsoluteContinuityError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except (ValueError, OSError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
