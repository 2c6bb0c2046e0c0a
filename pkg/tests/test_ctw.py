import io
import math
from collections import Counter

import numpy as np
import pytest

from causalpath.core import Alphabet
from causalpath.ctw import (
    ContextSchema,
    ContextTree,
    RegretBudget,
    kt_predict,
    regret_bound_plain,
    regret_bound_side_info,
)
from causalpath.markov import random_model, simulate

B2 = Alphabet(2)
B3 = Alphabet(3)


class TestKT:
    def test_fresh_binary(self):
        assert np.allclose(kt_predict([0, 0], 2).probs, [0.5, 0.5])

    def test_counts_3_1(self):
        assert np.allclose(kt_predict([3, 1], 2).probs, [0.7, 0.3])

    def test_fresh_ternary(self):
        assert np.allclose(kt_predict([0, 0, 0], 3).probs, [1 / 3] * 3)

    def test_strictly_positive(self):
        p = kt_predict([1000, 0, 0], 3)
        assert np.all(p.probs > 0.0)


def reference_log2_block(observations, depth, m):
    """Weighted block probability straight from the recursive definition:
    half the node's exchangeable add-half block plus half the product over
    child subtrees, leaves taking the block alone."""

    def kt_block(symbols):
        counts = Counter(symbols)
        out = 0.0
        for c in counts.values():
            for j in range(c):
                out += math.log2(j + 0.5)
        for t in range(len(symbols)):
            out -= math.log2(t + 0.5 * m)
        return out

    def node(path):
        here = [sym for ctx, sym in observations if tuple(ctx[: len(path)]) == path]
        pe = kt_block(here)
        if len(path) == depth:
            return pe
        kids = sorted(
            {ctx[len(path)] for ctx, _ in observations if tuple(ctx[: len(path)]) == path},
            key=lambda v: (v is None, v),
        )
        child_sum = sum(node(path + (c,)) for c in kids)
        hi, lo = max(pe, child_sum), min(pe, child_sum)
        return -1.0 + hi + math.log2(1.0 + 2.0 ** (lo - hi))

    return node(())


def reference_predictive(observations, depth, m, context, symbol):
    before = reference_log2_block(observations, depth, m)
    after = reference_log2_block(observations + [(context, symbol)], depth, m)
    return 2.0 ** (after - before)


class TestPredict:
    def test_fresh_tree_uniform(self):
        tree = ContextTree(ContextSchema(B3, None, depth=2))
        assert np.allclose(tree.predict((1, 2)).probs, [1 / 3] * 3)

    def test_depth1_after_eight_observations(self):
        # context 0 always precedes symbol 1, eight times
        tree = ContextTree(ContextSchema(B2, None, depth=1))
        obs = [((0,), 1)] * 8
        for ctx, sym in obs:
            tree.observe(ctx, sym)
        got = tree.predict((0,)).probs[1]
        # the leaf's add-half estimate
        assert got == pytest.approx(8.5 / 9.0, abs=1e-12)
        # and the full root mixture from an independent recursion
        ref = reference_predictive(obs, 1, 2, (0,), 1)
        assert got == pytest.approx(ref, rel=1e-10)

    def test_mixture_matches_reference_on_mixed_stream(self):
        rng = np.random.default_rng(8)
        tree = ContextTree(ContextSchema(B2, None, depth=2))
        obs = []
        x = rng.integers(0, 2, 10)
        sch = tree.schema
        for i in range(10):
            ctx = sch.context_at(x, i)
            tree.observe(ctx, int(x[i]))
            obs.append((ctx, int(x[i])))
        ctx = sch.context_at(x, 10)
        for a in range(2):
            ref = reference_predictive(obs, 2, 2, ctx, a)
            assert tree.predict(ctx).probs[a] == pytest.approx(ref, rel=1e-10)

    def test_single_node_tree_degenerates_to_kt(self):
        tree = ContextTree(ContextSchema(B3, None, depth=0))
        stream = [0, 0, 1, 2, 0, 1]
        for sym in stream:
            tree.observe((), sym)
        counts = [stream.count(a) for a in range(3)]
        assert np.allclose(tree.predict(()).probs, kt_predict(counts, 3).probs)

    def test_positivity(self):
        rng = np.random.default_rng(9)
        sch = ContextSchema(B3, B3, depth=1, staleness=1)
        tree = ContextTree(sch)
        x = rng.integers(0, 3, 300)
        y = rng.integers(0, 3, 300)
        for i in range(300):
            ctx = sch.context_at(x, i, y)
            assert np.all(tree.predict(ctx).probs > 0.0)
            tree.observe(ctx, int(x[i]))

    def test_malformed_context(self):
        tree = ContextTree(ContextSchema(B2, None, depth=2))
        with pytest.raises(ValueError):
            tree.predict((0,))
        with pytest.raises(ValueError):
            tree.predict((5, 0))
        with pytest.raises(ValueError):
            tree.predict((None, 0))  # absent level above a present one


class TestObserve:
    def test_telescoping_identity(self):
        rng = np.random.default_rng(4)
        sch = ContextSchema(B2, B2, depth=1, staleness=1)
        tree = ContextTree(sch)
        x = rng.integers(0, 2, 500)
        y = rng.integers(0, 2, 500)
        total = 0.0
        for i in range(500):
            ctx = sch.context_at(x, i, y)
            total += math.log2(tree.predict(ctx).prob(int(x[i])))
            tree.observe(ctx, int(x[i]))
        assert total == pytest.approx(tree.log2_block_probability, abs=1e-9)
        tree.validate()

    def test_identical_streams_identical_trees(self):
        rng = np.random.default_rng(5)
        x = rng.integers(0, 3, 200)
        dumps = []
        for _ in range(2):
            sch = ContextSchema(B3, None, depth=2)
            tree = ContextTree(sch)
            for i in range(200):
                tree.observe(sch.context_at(x, i), int(x[i]))
            buf = io.StringIO()
            tree.dump(buf)
            dumps.append(buf.getvalue())
        assert dumps[0] == dumps[1]

    def test_iid_uniform_logloss_near_one_bit(self):
        rng = np.random.default_rng(6)
        sch = ContextSchema(B2, None, depth=1)
        tree = ContextTree(sch)
        x = rng.integers(0, 2, 4096)
        loss = 0.0
        for i in range(4096):
            ctx = sch.context_at(x, i)
            loss -= math.log2(tree.predict(ctx).prob(int(x[i])))
            tree.observe(ctx, int(x[i]))
        assert loss / 4096 == pytest.approx(1.0, abs=0.05)


class TestSchema:
    def test_stale_leaf_and_node_counts(self):
        sch = ContextSchema(B3, B3, depth=1, staleness=1)
        assert sch.leaf_count() == 27
        assert sch.node_count() == 31

    def test_pair_tree_counts(self):
        sch = ContextSchema(B3, B3, depth=1, staleness=0)
        assert sch.leaf_count() == 9
        assert sch.node_count() == 10

    def test_plain_counts(self):
        sch = ContextSchema(B3, None, depth=1)
        assert sch.leaf_count() == 3
        assert sch.node_count() == 4

    def test_staleness_requires_side_info(self):
        with pytest.raises(ValueError):
            ContextSchema(B3, None, depth=1, staleness=1)

    def test_context_at_start_of_sequence(self):
        sch = ContextSchema(B2, B2, depth=1, staleness=1)
        x = np.array([1, 0, 1])
        y = np.array([0, 1, 1])
        assert sch.context_at(x, 0, y) == (None, None)
        assert sch.context_at(x, 1, y) == (1, None)
        assert sch.context_at(x, 2, y) == (0, 1 + 2 * 0)


class TestRegretBounds:
    def test_plain_values(self):
        assert regret_bound_plain(3, 3, 10000) == pytest.approx(43.86, abs=0.01)
        assert regret_bound_plain(2, 1, 1) == pytest.approx(2.0, abs=1e-12)

    def test_plain_monotone_in_n(self):
        assert regret_bound_plain(3, 3, 20000) > regret_bound_plain(3, 3, 10000)

    def test_side_info_values(self):
        assert regret_bound_side_info(3, 9, 10, 10000) == pytest.approx(119.06, abs=0.01)
        # direct plug-in at the stale-tree geometry
        expected = 0.5 * 2 * 27 * math.log2(50000 / 27) + 27 * 2 + 31
        assert regret_bound_side_info(3, 27, 31, 50000) == pytest.approx(expected, abs=1e-9)

    def test_side_info_minus_plain_constant_in_n(self):
        diffs = {
            n: regret_bound_side_info(3, 9, 9, n) - regret_bound_plain(3, 9, n)
            for n in (100, 1000, 10000)
        }
        vals = list(diffs.values())
        assert vals[0] == pytest.approx(vals[1], abs=1e-9)
        assert vals[1] == pytest.approx(vals[2], abs=1e-9)

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            regret_bound_plain(3, 9, 5)
        with pytest.raises(ValueError):
            regret_bound_side_info(3, 9, 5, 100)

    def test_budget_nondecreasing(self):
        budgets = [RegretBudget.plain(3, 3, n).bound_bits for n in (10, 100, 1000)]
        assert budgets == sorted(budgets)


class TestRegretContainment:
    """Realized regret against the in-class source never exceeds the bound."""

    def test_coupled_tree_on_twenty_seeded_models(self):
        rng = np.random.default_rng(77)
        for trial in range(20):
            model = random_model(1, 2, 2, rng)
            n = 2000
            x, y = simulate(model, n, seed=trial)
            sch_c = ContextSchema(B2, B2, depth=1, staleness=0)
            tree_c = ContextTree(sch_c)
            # realized regret sums start after the warm-up step
            reg_c = 0.0
            for i in range(n):
                ctx_c = sch_c.context_at(x.data, i, y.data)
                pc = tree_c.predict(ctx_c).prob(int(x.data[i]))
                if i >= 1:
                    widx = model.window_index(x.data[i - 1 : i], y.data[i - 1 : i])
                    reg_c += math.log2(model.kernel_x[widx, x.data[i]] / pc)
                    assert reg_c <= regret_bound_side_info(2, 4, 5, max(i, 4))
                tree_c.observe(ctx_c, int(x.data[i]))

    def test_plain_tree_on_marginally_markov_sources(self):
        # with an i.i.d. side process the target stays marginally first order,
        # so the plain depth-1 tree's reference class contains the true law
        from causalpath.markov import JointMarkovModel

        rng = np.random.default_rng(88)
        for trial in range(20):
            kx = rng.dirichlet(np.ones(2), size=4) * 0.9 + 0.05
            ymarg = rng.dirichlet(np.ones(2))
            ky = np.tile(ymarg, (4, 1))
            model = JointMarkovModel(1, B2, B2, kx, ky)
            n = 2000
            x, _ = simulate(model, n, seed=1000 + trial)
            sch = ContextSchema(B2, None, depth=1)
            tree = ContextTree(sch)
            reg = 0.0
            for i in range(n):
                ctx = sch.context_at(x.data, i)
                p = tree.predict(ctx).prob(int(x.data[i]))
                if i >= 1:
                    xm = int(x.data[i - 1])
                    true_p = sum(
                        ymarg[yv] * kx[xm + 2 * yv, x.data[i]] for yv in range(2)
                    )
                    reg += math.log2(true_p / p)
                    assert reg <= regret_bound_plain(2, 2, max(i, 2))
                tree.observe(ctx, int(x.data[i]))


class TestSerialization:
    def test_round_trip(self):
        rng = np.random.default_rng(3)
        sch = ContextSchema(B3, B3, depth=1, staleness=1)
        tree = ContextTree(sch)
        x = rng.integers(0, 3, 400)
        y = rng.integers(0, 3, 400)
        for i in range(400):
            tree.observe(sch.context_at(x, i, y), int(x[i]))
        buf = io.StringIO()
        tree.dump(buf)
        buf.seek(0)
        loaded = ContextTree.load(buf)
        assert loaded.schema == tree.schema
        assert loaded.log2_block_probability == pytest.approx(
            tree.log2_block_probability, abs=1e-9
        )
        ctx = sch.context_at(x, 400, y)
        assert np.allclose(loaded.predict(ctx).probs, tree.predict(ctx).probs, atol=1e-12)
        buf2 = io.StringIO()
        loaded.dump(buf2)
        assert buf2.getvalue() == buf.getvalue()

    def test_bad_header(self):
        with pytest.raises(ValueError):
            ContextTree.load(io.StringIO("nonsense 9\n"))
