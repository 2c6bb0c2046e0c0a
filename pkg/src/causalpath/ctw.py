"""Krichevsky-Trofimov estimators and context-tree-weighting sequential predictors.

A ContextTree assigns sequential probabilities to a target symbol stream given
per-step contexts drawn from a ContextSchema. Three schema shapes are
supported:

- plain: depth-d tree over the target's own past symbols;
- coupled: depth-d tree where every level branches on the (target, side) pair;
- stale: depth-(d+k) tree whose k most recent levels branch on the target
  symbol alone and whose deeper d levels branch on the pair, so the newest k
  side-information samples are withheld from the predictor.

Counts are stored exactly as integers; block probabilities are kept in the
log2 domain. Pre-start context positions (time indices before the first
sample) are represented as a dedicated absent branch per level, so predictions
are defined from the very first symbol and the telescoping identity
  prod_i p_hat_i(x_i) = root weighted block probability
holds exactly over the whole stream.

The worst-case regret bounds for these predictors against depth-d Markov
reference classes are provided as closed-form functions of (alphabet size,
leaf count, node count, horizon).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import IO, Optional, Sequence

import numpy as np

from .core import Alphabet, ProbDist

_LOG2_HALF = -1.0


def kt_predict(counts: Sequence[int], m: int) -> ProbDist:
    """One-step KT (add-1/2) estimate from per-symbol counts.

    Symbol a gets probability (counts[a] + 1/2) / (N + m/2); every entry is
    strictly positive.
    """
    if m < 2:
        raise ValueError("alphabet size must be >= 2")
    if len(counts) != m:
        raise ValueError("need one count per symbol")
    arr = np.asarray(counts, dtype=np.float64)
    if np.any(arr < 0):
        raise ValueError("counts must be nonnegative")
    total = float(arr.sum())
    return ProbDist(Alphabet(m), (arr + 0.5) / (total + 0.5 * m))


def _kt_row(counts: list, total: int, m: int) -> np.ndarray:
    denom = total + 0.5 * m
    return (np.asarray(counts, dtype=np.float64) + 0.5) / denom


def _kt_log2_block(counts: Sequence[int], m: int) -> float:
    """log2 KT block probability from final counts (KT is exchangeable)."""
    out = 0.0
    total = 0
    for c in counts:
        for j in range(c):
            out += math.log2(j + 0.5)
        total += c
    for t in range(total):
        out -= math.log2(t + 0.5 * m)
    return out


def _log2_add(a: float, b: float) -> float:
    """log2(2**a + 2**b), stable."""
    if a < b:
        a, b = b, a
    return a + math.log2(1.0 + 2.0 ** (b - a))


@dataclass(frozen=True)
class ContextSchema:
    """Shape of the context tree: target/side alphabets, depth, staleness.

    depth is the number of coupled history levels d; staleness is the number
    k of most recent levels restricted to the target symbol alone (only
    meaningful with side information; k = 0 gives the fully coupled tree).
    Without side information the schema is a plain depth-d tree and staleness
    must be 0.
    """

    target_alphabet: Alphabet
    side_alphabet: Optional[Alphabet] = None
    depth: int = 1
    staleness: int = 0

    def __post_init__(self) -> None:
        if self.depth < 0:
            raise ValueError("depth must be >= 0")
        if self.staleness < 0:
            raise ValueError("staleness must be >= 0")
        if self.side_alphabet is None and self.staleness != 0:
            raise ValueError("staleness requires side information")

    @property
    def total_depth(self) -> int:
        return self.depth + self.staleness

    def level_sizes(self) -> list[int]:
        """Branching factor per history level, most recent first."""
        mx = self.target_alphabet.size
        if self.side_alphabet is None:
            return [mx] * self.depth
        pair = mx * self.side_alphabet.size
        return [mx] * self.staleness + [pair] * self.depth

    def leaf_count(self) -> int:
        out = 1
        for b in self.level_sizes():
            out *= b
        return out

    def node_count(self) -> int:
        out = 1
        layer = 1
        for b in self.level_sizes():
            layer *= b
            out += layer
        return out

    def context_at(self, x: np.ndarray, i: int, y: Optional[np.ndarray] = None) -> tuple:
        """Context for predicting position i (0-based) of the target stream.

        History positions before the start of the stream map to None (the
        absent branch). Pair levels pack the side symbol as x + m_x * y.
        """
        mx = self.target_alphabet.size
        sizes = self.level_sizes()
        ctx = []
        for j in range(1, self.total_depth + 1):
            t = i - j
            if t < 0:
                ctx.append(None)
            elif self.side_alphabet is None or j <= self.staleness:
                ctx.append(int(x[t]))
            else:
                ctx.append(int(x[t]) + mx * int(y[t]))
        if any(
            c is not None and not (0 <= c < sizes[j]) for j, c in enumerate(ctx)
        ):
            raise ValueError("context symbol out of range")
        return tuple(ctx)


class _Node:
    __slots__ = ("counts", "total", "log_pe", "log_pw", "children", "children_lpw_sum")

    def __init__(self, m: int):
        self.counts = [0] * m
        self.total = 0
        self.log_pe = 0.0
        self.log_pw = 0.0
        self.children: dict = {}
        self.children_lpw_sum = 0.0


class ContextTree:
    """CTW predictor state over a ContextSchema.

    Single-writer value: observe() mutates in place; predict() is read-only.
    """

    def __init__(self, schema: ContextSchema):
        self.schema = schema
        self._m = schema.target_alphabet.size
        self._depth = schema.total_depth
        self._sizes = schema.level_sizes()
        self.root = _Node(self._m)

    def _check_context(self, context) -> tuple:
        ctx = tuple(context)
        if len(ctx) != self._depth:
            raise ValueError(
                f"context length {len(ctx)} does not match schema depth {self._depth}"
            )
        seen_none = False
        for j, c in enumerate(ctx):
            if c is None:
                seen_none = True
                continue
            if seen_none:
                # absent positions are always the oldest part of the history
                raise ValueError("absent context below a present one")
            if not (0 <= int(c) < self._sizes[j]):
                raise ValueError(f"context symbol {c} out of range at level {j + 1}")
        return ctx

    def predict(self, context) -> ProbDist:
        """One-step predictive distribution implied by the weighted tree.

        Equals the ratio of root weighted block probabilities after
        hypothetically appending each candidate symbol; entries are strictly
        positive.
        """
        ctx = self._check_context(context)
        m = self._m
        path: list[Optional[_Node]] = [self.root]
        node: Optional[_Node] = self.root
        for c in ctx:
            node = None if node is None else node.children.get(c)
            path.append(node)
        # leaf-to-root mixture of KT rows
        deepest = path[self._depth]
        pred = (
            _kt_row(deepest.counts, deepest.total, m)
            if deepest is not None
            else np.full(m, 1.0 / m)
        )
        for level in range(self._depth - 1, -1, -1):
            node = path[level]
            if node is None:
                # empty subtree: both mixture components are uniform
                continue
            alpha = 2.0 ** (_LOG2_HALF + node.log_pe - node.log_pw)
            alpha = min(max(alpha, 0.0), 1.0)
            pred = alpha * _kt_row(node.counts, node.total, m) + (1.0 - alpha) * pred
        pred = pred / pred.sum()
        return ProbDist(self.schema.target_alphabet, pred)

    def observe(self, context, symbol: int) -> None:
        """Record symbol under context, updating counts and log-probabilities
        along the context path only."""
        ctx = self._check_context(context)
        sym = int(symbol)
        if not (0 <= sym < self._m):
            raise ValueError(f"symbol {sym} out of target alphabet")
        path = [self.root]
        node = self.root
        for c in ctx:
            child = node.children.get(c)
            if child is None:
                child = _Node(self._m)
                node.children[c] = child
            path.append(child)
            node = child
        half_m = 0.5 * self._m
        delta = 0.0
        for level in range(self._depth, -1, -1):
            node = path[level]
            if level < self._depth:
                node.children_lpw_sum += delta
            node.log_pe += math.log2(
                (node.counts[sym] + 0.5) / (node.total + half_m)
            )
            node.counts[sym] += 1
            node.total += 1
            old_lpw = node.log_pw
            if level == self._depth:
                node.log_pw = node.log_pe
            else:
                node.log_pw = _log2_add(
                    _LOG2_HALF + node.log_pe, _LOG2_HALF + node.children_lpw_sum
                )
            delta = node.log_pw - old_lpw

    @property
    def log2_block_probability(self) -> float:
        """log2 of the root weighted probability of everything observed."""
        return self.root.log_pw

    def nodes(self):
        """Yield (path, node) pairs in deterministic depth-first order."""
        stack = [((), self.root)]
        while stack:
            path, node = stack.pop()
            yield path, node
            for c in sorted(node.children, key=lambda v: (v is None, v)):
                stack.append((path + (c,), node.children[c]))

    def validate(self) -> None:
        """Check structural invariants; raises AssertionError on violation."""
        for path, node in self.nodes():
            assert len(path) <= self._depth, "node below schema depth"
            if len(path) == self._depth:
                assert not node.children, "leaf with children"
                assert abs(node.log_pw - node.log_pe) < 1e-12
            elif node.children:
                child_total = sum(ch.total for ch in node.children.values())
                assert node.total == child_total, "count mismatch with children"

    def dump(self, fp: IO[str]) -> None:
        """Write a versioned textual snapshot (one record per node)."""
        s = self.schema
        side = s.side_alphabet.size if s.side_alphabet is not None else "-"
        fp.write(f"causalpath-ctw 1 {s.target_alphabet.size} {side} {s.depth} {s.staleness}\n")
        for path, node in self.nodes():
            toks = ["~" if c is None else str(c) for c in path]
            counts = ",".join(str(c) for c in node.counts)
            fp.write(f"{'.'.join(toks) if toks else ''}|{counts}\n")

    @classmethod
    def load(cls, fp: IO[str]) -> "ContextTree":
        header = fp.readline().split()
        if len(header) != 6 or header[0] != "causalpath-ctw" or header[1] != "1":
            raise ValueError("unrecognized tree dump header")
        target = Alphabet(int(header[2]))
        side = None if header[3] == "-" else Alphabet(int(header[3]))
        schema = ContextSchema(target, side, int(header[4]), int(header[5]))
        tree = cls(schema)
        m = target.size
        for line in fp:
            line = line.strip()
            if not line:
                continue
            path_s, counts_s = line.split("|")
            counts = [int(v) for v in counts_s.split(",")]
            if len(counts) != m:
                raise ValueError("count record length mismatch")
            node = tree.root
            if path_s:
                for tok in path_s.split("."):
                    c = None if tok == "~" else int(tok)
                    child = node.children.get(c)
                    if child is None:
                        child = _Node(m)
                        node.children[c] = child
                    node = child
            node.counts = counts
            node.total = sum(counts)
        tree._recompute_logs(tree.root, 0)
        return tree

    def _recompute_logs(self, node: _Node, level: int) -> None:
        for child in node.children.values():
            self._recompute_logs(child, level + 1)
        node.log_pe = _kt_log2_block(node.counts, self._m)
        node.children_lpw_sum = sum(ch.log_pw for ch in node.children.values())
        if level == self._depth:
            node.log_pw = node.log_pe
        else:
            node.log_pw = _log2_add(
                _LOG2_HALF + node.log_pe, _LOG2_HALF + node.children_lpw_sum
            )


def regret_bound_plain(m: int, L: int, n: int) -> float:
    """Worst-case log-loss regret bound (bits) of a plain depth-limited CTW
    against Markov sources with L states over an m-ary alphabet."""
    if m < 2 or L < 1:
        raise ValueError("need m >= 2 and L >= 1")
    if n < L:
        raise ValueError(f"horizon n={n} below leaf count L={L}")
    return (
        0.5 * (m - 1) * L * math.log2(n / L)
        + L * (m / (m - 1) + math.log2(m))
        - 1.0 / (m - 1)
    )


def regret_bound_side_info(m: int, L: int, S: int, n: int) -> float:
    """Worst-case regret bound (bits) of a CTW with a side-information context
    tree of L leaves and S total nodes."""
    if m < 2 or L < 1:
        raise ValueError("need m >= 2 and L >= 1")
    if S < L:
        raise ValueError("node count S must be >= leaf count L")
    if n < L:
        raise ValueError(f"horizon n={n} below leaf count L={L}")
    return 0.5 * (m - 1) * L * math.log2(n / L) + L * (m - 1) + S


@dataclass(frozen=True)
class RegretBudget:
    """A regret bound evaluated at one horizon."""

    alphabet_size: int
    leaves: int
    nodes: Optional[int]
    horizon: int
    bound_bits: float

    @classmethod
    def plain(cls, m: int, L: int, n: int) -> "RegretBudget":
        return cls(m, L, None, n, regret_bound_plain(m, L, n))

    @classmethod
    def with_side_info(cls, m: int, L: int, S: int, n: int) -> "RegretBudget":
        return cls(m, L, S, n, regret_bound_side_info(m, L, S, n))
