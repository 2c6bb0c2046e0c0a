"""Sample-path causal influence estimation from dual sequential predictors.

Two context-tree predictors run in lockstep over the target stream: a
"complete" one whose contexts couple target and side symbols, and a reference
one that either ignores the side process entirely (restricted) or sees it
with a staleness of k steps (partial). The per-step estimate is the KL
divergence in bits from the reference to the complete predictive distribution,
taken before the step's symbol is revealed.

A CausalTrace collects the per-step estimates, the per-step sum of absolute
predictor log-ratios (the quantity entering the finite-sample deviation
bound), optional exact oracle values, running totals, and the running
deviation bound. Exports use fixed columns
(i, estimate_bits, truth_bits?, c_i, cum_abs_err?, cum_bound); both the
cumulative error and the bound are normalized by n downstream, never by the
bound horizon.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from typing import IO, Optional

import numpy as np

from .core import Alphabet, SymbolSeq
from .ctw import (
    ContextSchema,
    ContextTree,
    regret_bound_plain,
    regret_bound_side_info,
)
from .markov import (
    JointMarkovModel,
    causal_measure_path,
    partial_measure_path,
)


@dataclass(frozen=True)
class EstimatorConfig:
    """Predictor shape for one estimation direction.

    depth is the context depth d of the complete predictor; staleness (when
    set) selects the partial reference predictor that is denied the most
    recent k side samples. direction is a label carried into outputs.
    """

    alphabet_x: Alphabet
    alphabet_y: Alphabet
    depth: int = 1
    staleness: Optional[int] = None
    direction: str = "y_to_x"

    def __post_init__(self) -> None:
        if self.depth < 1:
            raise ValueError("depth must be >= 1")
        if self.staleness is not None and self.staleness < 1:
            raise ValueError("staleness must be >= 1 when given")


@dataclass
class CausalTrace:
    """Per-step record of a dual-predictor run."""

    estimate_bits: np.ndarray
    c: np.ndarray
    cum_estimate: np.ndarray
    cum_bound: np.ndarray
    logloss_complete: np.ndarray
    logloss_reference: np.ndarray
    truth_bits: Optional[np.ndarray] = None
    cum_abs_err: Optional[np.ndarray] = None
    snapshots: Optional[tuple[np.ndarray, np.ndarray]] = None
    metadata: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return int(self.estimate_bits.size)

    def write_csv(self, fp: IO[str]) -> None:
        cols = ["i", "estimate_bits"]
        if self.truth_bits is not None:
            cols.append("truth_bits")
        cols.append("c_i")
        if self.cum_abs_err is not None:
            cols.append("cum_abs_err")
        cols.append("cum_bound")
        fp.write(",".join(cols) + "\n")
        for i in range(len(self)):
            row = [str(i + 1), f"{self.estimate_bits[i]:.12g}"]
            if self.truth_bits is not None:
                row.append(f"{self.truth_bits[i]:.12g}")
            row.append(f"{self.c[i]:.12g}")
            if self.cum_abs_err is not None:
                row.append(f"{self.cum_abs_err[i]:.12g}")
            b = self.cum_bound[i]
            row.append("" if math.isnan(b) else f"{b:.12g}")
            fp.write(",".join(row) + "\n")

    def to_records(self) -> list[dict]:
        out = []
        for i in range(len(self)):
            rec: dict = {"i": i + 1, "estimate_bits": float(self.estimate_bits[i])}
            if self.truth_bits is not None:
                rec["truth_bits"] = float(self.truth_bits[i])
            rec["c_i"] = float(self.c[i])
            if self.cum_abs_err is not None:
                rec["cum_abs_err"] = float(self.cum_abs_err[i])
            b = float(self.cum_bound[i])
            rec["cum_bound"] = None if math.isnan(b) else b
            out.append(rec)
        return out

    def write_records(self, fp: IO[str]) -> None:
        fp.write(json.dumps({"type": "metadata", **self.metadata}) + "\n")
        for rec in self.to_records():
            fp.write(json.dumps({"type": "step", **rec}) + "\n")


def abs_log_ratio_sum(p: np.ndarray, q: np.ndarray) -> float:
    """Sum over symbols of |log2 p(x)/q(x)|; the per-step coefficient entering
    the deviation bound. Both inputs must be strictly positive."""
    return float(np.abs(np.log2(np.asarray(p)) - np.log2(np.asarray(q))).sum())


def causality_regret_bound(mc: float, mr: float, c_norm: float) -> float:
    """Finite-sample bound (bits) on cumulative absolute estimation error:
    mc + mr + (c_norm / sqrt(2)) * sqrt(mc).

    Warns when mc < 1, where the bound's derivation premise is weakened.
    """
    if mc < 0 or mr < 0 or c_norm < 0:
        raise ValueError("bound inputs must be nonnegative")
    if mc < 1.0:
        warnings.warn(
            "complete-predictor regret budget below 1 bit; bound premise weakened",
            RuntimeWarning,
            stacklevel=2,
        )
    return mc + mr + (c_norm / math.sqrt(2.0)) * math.sqrt(mc)


def _dual_run(
    xs: np.ndarray,
    ys: np.ndarray,
    schema_c: ContextSchema,
    schema_r: ContextSchema,
    keep_snapshots: bool,
):
    n = xs.size
    mx = schema_c.target_alphabet.size
    tree_c, tree_r = ContextTree(schema_c), ContextTree(schema_r)
    est = np.empty(n)
    cvec = np.empty(n)
    llc = np.empty(n)
    llr = np.empty(n)
    snaps = (np.empty((n, mx)), np.empty((n, mx))) if keep_snapshots else None
    for i in range(n):
        ctx_c = schema_c.context_at(xs, i, ys)
        ctx_r = schema_r.context_at(xs, i, ys)
        pc = tree_c.predict(ctx_c).probs
        pr = tree_r.predict(ctx_r).probs
        ratios = np.log2(pc) - np.log2(pr)
        est[i] = max(float(pc @ ratios), 0.0)
        cvec[i] = float(np.abs(ratios).sum())
        if snaps is not None:
            snaps[0][i] = pc
            snaps[1][i] = pr
        sym = int(xs[i])
        llc[i] = -math.log2(pc[sym])
        llr[i] = -math.log2(pr[sym])
        tree_c.observe(ctx_c, sym)
        tree_r.observe(ctx_r, sym)
    return est, cvec, llc, llr, snaps


def _bound_curve(
    n: int,
    mx: int,
    complete_lc: int,
    complete_sc: int,
    ref_leaves: int,
    ref_nodes: Optional[int],
    cvec: np.ndarray,
) -> np.ndarray:
    """Running deviation bound; NaN before both bound formulas are defined."""
    out = np.full(n, np.nan)
    start = max(complete_lc, ref_leaves)
    c_sq = np.cumsum(cvec**2)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        for i in range(start - 1, n):
            ncur = i + 1
            mc = regret_bound_side_info(mx, complete_lc, complete_sc, ncur)
            if ref_nodes is None:
                mr = regret_bound_plain(mx, ref_leaves, ncur)
            else:
                mr = regret_bound_side_info(mx, ref_leaves, ref_nodes, ncur)
            out[i] = causality_regret_bound(mc, mr, math.sqrt(c_sq[i]))
    return out


def _finish_trace(
    est, cvec, llc, llr, snaps, truth, config, schema_c, schema_r, ref_kind
) -> CausalTrace:
    n = est.size
    mx = config.alphabet_x.size
    lc, sc = schema_c.leaf_count(), schema_c.node_count()
    lr = schema_r.leaf_count()
    sr = None if schema_r.side_alphabet is None else schema_r.node_count()
    cum_bound = _bound_curve(n, mx, lc, sc, lr, sr, cvec)
    trace = CausalTrace(
        estimate_bits=est,
        c=cvec,
        cum_estimate=np.cumsum(est),
        cum_bound=cum_bound,
        logloss_complete=llc,
        logloss_reference=llr,
        snapshots=snaps,
        metadata={
            "direction": config.direction,
            "depth": config.depth,
            "staleness": config.staleness,
            "n": int(n),
            "alphabet_x": mx,
            "alphabet_y": config.alphabet_y.size,
            "reference": ref_kind,
            "complete_leaves": lc,
            "complete_nodes": sc,
            "reference_leaves": lr,
            "reference_nodes": sr,
            "warmup": max(schema_c.total_depth, schema_r.total_depth),
            "units": "bits",
            "normalization": "cum_abs_err and cum_bound are divided by n when normalized",
        },
    )
    if truth is not None:
        trace.truth_bits = truth
        trace.cum_abs_err = np.cumsum(np.abs(est - truth))
    return trace


def estimate_causal_trace(
    x: SymbolSeq,
    y: SymbolSeq,
    config: EstimatorConfig,
    truth_model: Optional[JointMarkovModel] = None,
    keep_snapshots: bool = False,
) -> CausalTrace:
    """Per-step causal influence of the side stream y on the target stream x:
    complete (coupled-context) predictor against the restricted
    (target-only) predictor. Deterministic in its inputs."""
    xs, ys = _check_streams(x, y, config)
    schema_c = ContextSchema(config.alphabet_x, config.alphabet_y, config.depth, 0)
    schema_r = ContextSchema(config.alphabet_x, None, config.depth, 0)
    est, cvec, llc, llr, snaps = _dual_run(xs, ys, schema_c, schema_r, keep_snapshots)
    truth = None
    if truth_model is not None:
        _check_model(truth_model, config)
        truth = causal_measure_path(truth_model, xs, ys)
    return _finish_trace(
        est, cvec, llc, llr, snaps, truth, config, schema_c, schema_r, "restricted"
    )


def estimate_partial_trace(
    x: SymbolSeq,
    y: SymbolSeq,
    config: EstimatorConfig,
    truth_model: Optional[JointMarkovModel] = None,
    keep_snapshots: bool = False,
) -> CausalTrace:
    """Partial causal influence: complete predictor against a stale-context
    predictor denied the newest `staleness` side samples.

    A staleness of at least the stream length never exposes any side symbol,
    so the reference collapses to the plain restricted predictor.
    """
    if config.staleness is None:
        raise ValueError("partial trace requires a staleness in the config")
    xs, ys = _check_streams(x, y, config)
    k = config.staleness
    schema_c = ContextSchema(config.alphabet_x, config.alphabet_y, config.depth, 0)
    if k >= xs.size:
        schema_r = ContextSchema(config.alphabet_x, None, config.depth, 0)
        ref_kind = "restricted"
    else:
        schema_r = ContextSchema(config.alphabet_x, config.alphabet_y, config.depth, k)
        ref_kind = "stale"
    est, cvec, llc, llr, snaps = _dual_run(xs, ys, schema_c, schema_r, keep_snapshots)
    truth = None
    if truth_model is not None:
        _check_model(truth_model, config)
        truth = partial_measure_path(truth_model, xs, ys, k)
    return _finish_trace(
        est, cvec, llc, llr, snaps, truth, config, schema_c, schema_r, ref_kind
    )


def _check_streams(x: SymbolSeq, y: SymbolSeq, config: EstimatorConfig):
    if len(x) != len(y):
        raise ValueError("target and side streams must have equal length")
    if x.alphabet != config.alphabet_x or y.alphabet != config.alphabet_y:
        raise ValueError("stream alphabets do not match the config")
    return x.data, y.data


def _check_model(model: JointMarkovModel, config: EstimatorConfig) -> None:
    if model.alphabet_x != config.alphabet_x or model.alphabet_y != config.alphabet_y:
        raise ValueError("oracle model alphabets do not match the config")


def c_vector(trace: CausalTrace) -> tuple[np.ndarray, float]:
    """Per-step sums of absolute predictor log-ratios and their l2 norm."""
    if trace.c is None:
        raise ValueError("trace carries no predictor log-ratio record")
    return trace.c, float(np.sqrt(np.sum(trace.c**2)))


def realized_causality_regret(trace: CausalTrace) -> np.ndarray:
    """Running cumulative absolute deviation between estimate and truth."""
    if trace.truth_bits is None:
        raise ValueError("trace carries no truth column")
    return np.cumsum(np.abs(trace.estimate_bits - trace.truth_bits))


def plug_in_di_rate(trace: CausalTrace) -> float:
    """Time-averaged estimate: the plug-in directed-information rate."""
    if len(trace) == 0:
        raise ValueError("empty trace")
    return float(trace.estimate_bits.mean())
