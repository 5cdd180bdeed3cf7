import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from fdrboot.factor_model import AlphaEstimates, NullSampleSet
from fdrboot.resampling import (
    CQ_EPS,
    DdbootConfig,
    FdrCurve,
    SampledParameter,
    bisect_sup,
    ddboot,
    ddboot_slopes,
    dueling_count,
    estimate_fdr,
    find_cq,
    sample_alpha_v,
    yb,
)
from fdrboot.simulation import sample_mvt
from fdrboot.testing_core import TestDecision, p_value, p_values, sup_threshold


def loop_fdr(alpha_v, nulls, inner, c, df, sidedness="two-sided"):
    """Reference estimate: run the step-up rule on each inner draw."""
    null_set = set(nulls.tolist())
    total = 0.0
    for u in inner:
        dec = sup_threshold(p_value(alpha_v + u, df, sidedness), c)
        r = dec.n_rejected
        n10 = sum(1 for i in dec.rejected.tolist() if i in null_set)
        total += n10 / max(1, r)
    return total / len(inner)


@pytest.fixture(scope="module")
def pool():
    return NullSampleSet(sample_mvt(15, 0.5, 30, np.random.default_rng(0), size=800), 30)


class TestDueling:
    def test_hand_example(self):
        u1, u2 = [1.0, 2.0], [0.0, 3.0]
        assert dueling_count(u1, u2, [0, 1], "one-sided") == 1
        assert dueling_count(u2, u1, [0, 1], "one-sided") == 1

    def test_reflexive(self):
        u = [0.3, -1.0, 2.0]
        for side in ("one-sided", "two-sided"):
            assert dueling_count(u, u, [0, 1, 2], side) == 3

    def test_empty_nulls(self):
        assert dueling_count([1.0], [2.0], [], "one-sided") == 0

    def test_two_sided_uses_magnitudes(self):
        assert dueling_count([-3.0], [2.0], [0], "two-sided") == 1
        assert dueling_count([-3.0], [2.0], [0], "one-sided") == 0

    @settings(max_examples=300, deadline=None)
    @given(
        arrays(np.float64, 12, elements=st.floats(-5, 5)),
        arrays(np.float64, 12, elements=st.floats(-5, 5)),
        st.lists(st.integers(0, 11), unique=True),
        st.sampled_from(["one-sided", "two-sided"]),
    )
    def test_duel_completeness(self, u1, u2, nulls, side):
        n0 = len(nulls)
        total = dueling_count(u1, u2, nulls, side) + dueling_count(u2, u1, nulls, side)
        assert total >= n0
        assert max(dueling_count(u1, u2, nulls, side), dueling_count(u2, u1, nulls, side)) >= n0 / 2


class TestSampleAlphaV:
    def test_hand_example(self):
        p = sample_alpha_v([1.0, -0.5, 0.3], [0.2, -1.0, 0.3], "two-sided")
        assert p.alpha_v.tolist() == pytest.approx([0.8, 0.0, 0.0])
        assert p.alpha_v[1] == 0.0 and p.alpha_v[2] == 0.0
        assert p.implied_nulls.tolist() == [1, 2]

    def test_zero_draw_is_identity(self):
        a = np.array([1.0, -2.0, 0.5])
        p = sample_alpha_v(a, np.zeros(3), "two-sided")
        assert np.array_equal(p.alpha_v, a)
        assert p.implied_nulls.size == 0

    def test_one_sided_no_zeroing(self):
        p = sample_alpha_v([0.1], [0.5], "one-sided")
        assert p.alpha_v.tolist() == pytest.approx([-0.4])
        assert p.implied_nulls.tolist() == [0]

    def test_accepts_alpha_estimates(self):
        p = sample_alpha_v(AlphaEstimates([2.0, 0.1], 10), [0.5, 0.5])
        assert p.implied_nulls.tolist() == [1]

    @settings(max_examples=300, deadline=None)
    @given(
        arrays(np.float64, 10, elements=st.floats(-4, 4)),
        arrays(np.float64, 10, elements=st.floats(-4, 4)),
        arrays(np.float64, 10, elements=st.floats(-4, 4)),
        arrays(np.bool_, 10),
    )
    def test_zeroing_guarantee(self, alpha, u, u_v, is_null):
        alpha = np.where(is_null, 0.0, alpha)
        true_nulls = np.flatnonzero(alpha == 0)
        param = sample_alpha_v(alpha + u, u_v, "two-sided")
        kept = np.count_nonzero(param.alpha_v[true_nulls] == 0)
        assert kept >= dueling_count(u_v, u, true_nulls, "two-sided")


class TestEstimateFdr:
    def test_no_implied_nulls(self, pool):
        param = SampledParameter(np.full(15, 3.0), np.empty(0, dtype=np.intp))
        for c in (0.01, 0.5, 0.99):
            assert estimate_fdr(param, pool, c, 50, pool.df, rng=1) == 0.0

    def test_single_draw_enumeration(self):
        param = SampledParameter(np.array([0.0, 10.0]), np.array([0]))
        u = np.array([[2.5, 0.1]])
        draws = NullSampleSet(u, 20)
        # p-values of (2.5, 10.1) at 20 df, step-up at slope 0.05
        p = p_value(np.array([2.5, 10.1]), 20)
        r = 2 if p.max() <= 0.05 else (1 if p.min() <= 0.025 else 0)
        n10 = 1 if (r == 2 or (r == 1 and p[0] < p[1])) else 0
        expected = n10 / max(1, r)
        assert estimate_fdr(param, draws, 0.05, 1, 20, rng=0) == pytest.approx(expected)
        assert expected == 0.5

    def test_curve_matches_loop(self, pool):
        rng = np.random.default_rng(3)
        alpha = np.where(rng.random(15) < 0.5, 0.0, rng.uniform(0, 3, 15))
        param = sample_alpha_v(alpha + pool.draws[0], pool.draws[1])
        inner = pool.draws[2:202]
        curve = FdrCurve(param, inner, pool.df)
        for c in (0.001, 0.01, 0.05, 0.1, 0.3, 0.8):
            assert curve(c) == pytest.approx(loop_fdr(param.alpha_v, param.implied_nulls, inner, c, pool.df), abs=1e-12)

    def test_curve_matches_loop_one_sided(self, pool):
        rng = np.random.default_rng(4)
        param = sample_alpha_v(rng.normal(0.5, 1.5, 15), pool.draws[5], "one-sided")
        inner = pool.draws[10:110]
        curve = FdrCurve(param, inner, pool.df, "one-sided")
        for c in (0.02, 0.2, 0.7):
            assert curve(c) == pytest.approx(
                loop_fdr(param.alpha_v, param.implied_nulls, inner, c, pool.df, "one-sided"), abs=1e-12)

    def test_in_unit_interval(self, pool):
        param = sample_alpha_v(pool.draws[0], pool.draws[1])
        est = estimate_fdr(param, pool, 0.3, 100, pool.df, rng=2)
        assert 0 <= est <= 1

    def test_empty_pool(self):
        param = SampledParameter(np.zeros(2), np.array([0, 1]))
        with pytest.raises(ValueError):
            estimate_fdr(param, np.empty((0, 2)), 0.05, 10, 10)

    def test_hoeffding_spread(self, pool):
        param = sample_alpha_v(pool.draws[0] + 1.0, pool.draws[1])
        ests = np.array([estimate_fdr(param, pool, 0.2, 500, pool.df, rng=k) for k in range(300)])
        bound = np.sqrt(np.log(100) / (2 * 500))
        assert np.mean(np.abs(ests - ests.mean()) > bound) <= 0.02


class TestBisection:
    @pytest.mark.parametrize("c_star", [0.0137, 0.25, 0.5, 0.91])
    @pytest.mark.parametrize("S", [5, 12, 20])
    def test_known_crossing(self, c_star, S):
        fn = lambda c: 0.0 if c <= c_star else 1.0
        got = bisect_sup(fn, 0.5, S)
        assert got <= c_star
        assert c_star - got <= 2.0 ** -S

    def test_everywhere_feasible(self):
        assert bisect_sup(lambda c: 0.0, 0.025, 20) == 1 - CQ_EPS

    def test_nowhere_feasible(self):
        assert bisect_sup(lambda c: 1.0, 0.025, 20) == CQ_EPS

    def test_single_step(self):
        assert bisect_sup(lambda c: 0.0 if c <= 0.6 else 1.0, 0.5, 1) == pytest.approx(0.5)
        assert bisect_sup(lambda c: 0.0 if c <= 0.4 else 1.0, 0.5, 1) == CQ_EPS

    def test_find_cq_complete_alternative(self, pool):
        param = SampledParameter(np.full(15, 5.0), np.empty(0, dtype=np.intp))
        assert find_cq(param, pool, 0.025, 100, 20, pool.df, rng=0) == 1 - CQ_EPS

    def test_find_cq_feasible_point(self, pool):
        param = sample_alpha_v(pool.draws[0], pool.draws[1])
        rows = np.arange(10, 310)
        c = find_cq(param, pool, 0.025, 300, 20, pool.df, inner_rows=rows)
        curve = FdrCurve(param, pool.draws[rows], pool.df)
        assert curve(c) <= 0.025
        assert c == CQ_EPS or curve(min(c + 2.0 ** -19, 1 - CQ_EPS)) > 0.025 or c >= 1 - 2 * 2.0 ** -20


class TestDdboot:
    def test_config(self):
        assert DdbootConfig().target == 0.025
        assert DdbootConfig(aggressive=True).target == 0.05
        with pytest.raises(ValueError):
            DdbootConfig(V=0)

    def test_complete_alternative_rejects_all(self, pool):
        alpha = AlphaEstimates(np.full(15, 60.0), pool.df)
        dec = ddboot(alpha, pool, DdbootConfig(V=5, W=100), rng=0)
        assert dec.extra["c_q"] == 1 - CQ_EPS
        assert dec.n_rejected == 15

    def test_pool_too_small(self, pool):
        with pytest.raises(ValueError):
            ddboot(AlphaEstimates(np.zeros(15), pool.df), pool, DdbootConfig(V=20, W=800), rng=0)

    def test_column_mismatch(self, pool):
        with pytest.raises(ValueError):
            ddboot(AlphaEstimates(np.zeros(3), pool.df), pool, DdbootConfig(V=2, W=10), rng=0)

    def test_deterministic(self, pool):
        alpha = AlphaEstimates(pool.draws[0] + np.linspace(0, 4, 15), pool.df)
        cfg = DdbootConfig(V=6, W=150)
        a = ddboot(alpha, pool, cfg, rng=5)
        b = ddboot(alpha, pool, cfg, rng=5)
        assert np.array_equal(a.rejected, b.rejected) and a.extra == b.extra

    def test_aggressive_nests(self, pool):
        rng = np.random.default_rng(9)
        for k in range(10):
            alpha = AlphaEstimates(pool.draws[rng.integers(800)] + rng.uniform(0, 3, 15) * (rng.random(15) < 0.5), pool.df)
            ddb = ddboot(alpha, pool, DdbootConfig(V=5, W=100), rng=k)
            ddba = ddboot(alpha, pool, DdbootConfig(V=5, W=100, aggressive=True), rng=k)
            assert ddba.extra["c_q"] >= ddb.extra["c_q"]
            assert set(ddb.rejected.tolist()) <= set(ddba.rejected.tolist())

    def test_slopes_share_randomness_across_targets(self, pool):
        alpha = AlphaEstimates(pool.draws[3] + 1.0, pool.df)
        cfg = DdbootConfig(V=4, W=100)
        both = ddboot_slopes(alpha, pool, cfg, rng=1, targets=(0.025, 0.05))
        single = ddboot_slopes(alpha, pool, cfg, rng=1)
        assert np.array_equal(both[:, 0], single[:, 0])
        assert np.all(both[:, 1] >= both[:, 0])

    @pytest.mark.slow
    def test_complete_null_fdr(self):
        rng = np.random.default_rng(31)
        reps, n, q = 2000, 10, 0.05
        cfg = DdbootConfig(q=q, V=20, W=200)
        false = 0
        for k in range(reps):
            draws = sample_mvt(n, 0.5, 100, rng, size=600)
            pool = NullSampleSet(draws[1:], 100)
            dec = ddboot(AlphaEstimates(draws[0], 100), pool, cfg, rng=k)
            false += dec.n_rejected > 0  # every rejection is false under the complete null
        assert false / reps <= q


class TestYB:
    def test_complete_separation(self):
        rng = np.random.default_rng(0)
        pool = NullSampleSet(rng.normal(scale=0.01, size=(600, 10)), 50)
        pv = p_values(np.full(10, 30.0), 50)
        dec = yb(pv, pool, 0.05, rng=1)
        assert dec.n_rejected == 10

    def test_no_signal_fdr(self):
        rng = np.random.default_rng(32)
        reps, n, q = 2000, 20, 0.05
        false = 0
        for k in range(reps):
            draws = sample_mvt(n, 0.5, 100, rng, size=501)
            dec = yb(p_values(draws[0], 100), NullSampleSet(draws[1:], 100), q, rng=k)
            false += dec.n_rejected > 0
        assert false / reps <= q

    def test_returns_decision(self):
        rng = np.random.default_rng(1)
        pool = NullSampleSet(rng.standard_t(30, size=(700, 12)), 30)
        dec = yb(p_values(rng.standard_t(30, 12) + 2.0, 30), pool, 0.05, rng=2)
        assert isinstance(dec, TestDecision)
        if dec.n_rejected:
            assert dec.threshold_p <= 1
