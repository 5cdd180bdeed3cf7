"""Resampling-based FDR procedures that consume a pool of correlated null draws.

``ddboot`` implements the dueling double bootstrap: sample candidate true
parameters by subtracting null draws from the observed statistics, estimate the
FDR of a step-up threshold for each candidate with a second layer of null draws,
and keep the most conservative slope across candidates. ``yb`` is the
resampling-based local FDR estimator (YB).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from fdrboot.factor_model import AlphaEstimates, NullSampleSet
from fdrboot.testing_core import (
    PValueVector,
    TestDecision,
    _values,
    check_sidedness,
    p_value,
    sup_threshold,
)

CQ_EPS = 1e-6


@dataclass(frozen=True)
class DdbootConfig:
    q: float = 0.05
    V: int = 20
    W: int = 500
    S: int = 20
    sidedness: str = "two-sided"
    aggressive: bool = False

    def __post_init__(self):
        if not 0 < self.q < 1:
            raise ValueError("q must lie in (0, 1)")
        if min(self.V, self.W, self.S) < 1:
            raise ValueError("V, W and S must be >= 1")
        check_sidedness(self.sidedness)

    @property
    def target(self) -> float:
        return self.q if self.aggressive else self.q / 2


@dataclass(frozen=True)
class SampledParameter:
    alpha_v: np.ndarray
    implied_nulls: np.ndarray

    @property
    def null_mask(self) -> np.ndarray:
        mask = np.zeros(self.alpha_v.size, dtype=bool)
        mask[self.implied_nulls] = True
        return mask


def _alpha(alpha_hat) -> np.ndarray:
    if isinstance(alpha_hat, AlphaEstimates):
        return alpha_hat.alpha_hat
    return np.asarray(alpha_hat, dtype=float)


def _pool(null_pool) -> np.ndarray:
    draws = null_pool.draws if isinstance(null_pool, NullSampleSet) else np.asarray(null_pool, dtype=float)
    if draws.ndim != 2 or draws.shape[0] == 0:
        raise ValueError("null pool is empty")
    return draws


def dueling_count(u1, u2, null_idx, sidedness: str = "two-sided") -> int:
    """Number of null coordinates where ``u1`` beats or ties ``u2``.

    One-sided compares raw values, two-sided compares magnitudes.
    """
    idx = np.asarray(null_idx, dtype=np.intp)
    if idx.size == 0:
        return 0
    a = np.asarray(u1, dtype=float)[idx]
    b = np.asarray(u2, dtype=float)[idx]
    if check_sidedness(sidedness) == "two-sided":
        a, b = np.abs(a), np.abs(b)
    return int(np.count_nonzero(a >= b))


def sample_alpha_v(alpha_hat, u_v, sidedness: str = "two-sided") -> SampledParameter:
    """Candidate true parameter ``alpha_hat - u_v``.

    In two-sided mode every coordinate with ``|alpha_hat_i| <= |u_v_i|`` is set
    to exactly zero, so the candidate keeps a null wherever the draw outduels
    the observation.
    """
    a = _alpha(alpha_hat)
    u = np.asarray(u_v, dtype=float)
    if a.shape != u.shape:
        raise ValueError("alpha_hat and u_v differ in length")
    alpha_v = a - u
    if check_sidedness(sidedness) == "two-sided":
        alpha_v[np.abs(a) <= np.abs(u)] = 0.0
        nulls = np.flatnonzero(alpha_v == 0)
    else:
        nulls = np.flatnonzero(alpha_v <= 0)
    return SampledParameter(alpha_v, nulls)


class FdrCurve:
    """Estimated FDR of the step-up rule as an exact function of its slope ``c``.

    Built from one candidate parameter and a fixed block of W inner null draws.
    Per draw, p-values are sorted once; the step-up rejection count at slope
    ``c`` is the number of suffix minima of ``p_(i) * N / i`` at or below ``c``.
    Evaluating the curve is then a vectorized comparison, and it agrees with
    running the step-up rule on every draw separately.
    """

    def __init__(self, param: SampledParameter, inner_draws, df, sidedness="two-sided"):
        inner = np.atleast_2d(np.asarray(inner_draws, dtype=float))
        n = param.alpha_v.size
        if inner.shape[1] != n:
            raise ValueError("inner draws and parameter differ in N")
        pv = p_value(param.alpha_v + inner, df, sidedness)
        pv = np.atleast_2d(pv)
        order = np.argsort(pv, axis=1, kind="stable")
        sp = np.take_along_axis(pv, order, axis=1)
        ratio = sp * n / np.arange(1, n + 1)
        self.suffix_min = np.minimum.accumulate(ratio[:, ::-1], axis=1)[:, ::-1]
        null_sorted = param.null_mask[order]
        cum_nulls = np.concatenate(
            [np.zeros((inner.shape[0], 1)), np.cumsum(null_sorted, axis=1)], axis=1
        )
        self.fdp_table = cum_nulls / np.maximum(np.arange(n + 1), 1)
        self._rows = np.arange(inner.shape[0])

    def rejections(self, c: float) -> np.ndarray:
        return np.count_nonzero(self.suffix_min <= c, axis=1)

    def fdp(self, c: float) -> np.ndarray:
        return self.fdp_table[self._rows, self.rejections(c)]

    def __call__(self, c: float) -> float:
        return float(self.fdp(c).mean())


def estimate_fdr(param: SampledParameter, null_pool, c_q: float, W: int, df,
                 sidedness: str = "two-sided", rng=None) -> float:
    """Average FDP of the step-up rule at slope ``c_q`` over W inner null draws,
    counting false positives against the candidate's implied nulls."""
    if not 0 < c_q < 1:
        raise ValueError("c_q must lie in (0, 1)")
    if W < 1:
        raise ValueError("W must be >= 1")
    draws = _pool(null_pool)
    rng = np.random.default_rng(rng)
    rows = rng.integers(0, draws.shape[0], size=W)
    return FdrCurve(param, draws[rows], df, sidedness)(c_q)


def bisect_sup(fn, level: float, S: int, eps: float = CQ_EPS) -> float:
    """Largest ``c`` in ``[eps, 1 - eps]`` with ``fn(c) <= level``, by S bisection steps.

    Returns ``1 - eps`` when the upper end is feasible and ``eps`` when even the
    lower end is not. Otherwise keeps ``lo`` feasible and ``hi`` infeasible and
    returns ``lo`` after S halvings.
    """
    if S < 1:
        raise ValueError("S must be >= 1")
    lo, hi = eps, 1.0 - eps
    if fn(hi) <= level:
        return hi
    if fn(lo) > level:
        return lo
    for _ in range(S):
        mid = 0.5 * (lo + hi)
        if fn(mid) <= level:
            lo = mid
        else:
            hi = mid
    return lo


def find_cq(param: SampledParameter, null_pool, target_level: float, W: int, S: int,
            df, sidedness: str = "two-sided", rng=None, inner_rows=None) -> float:
    """Binary search for the largest slope whose estimated FDR stays within target.

    One block of W inner draws is drawn up front and reused by every bisection
    step, so the searched function is fixed. ``inner_rows`` overrides the draw.
    """
    if not 0 < target_level < 1:
        raise ValueError("target_level must lie in (0, 1)")
    draws = _pool(null_pool)
    if inner_rows is None:
        rng = np.random.default_rng(rng)
        inner_rows = rng.integers(0, draws.shape[0], size=W)
    curve = FdrCurve(param, draws[inner_rows], df, sidedness)
    return bisect_sup(curve, target_level, S)


def ddboot_slopes(alpha_hat, null_pool, config: DdbootConfig, rng=None, targets=None) -> np.ndarray:
    """Per-candidate slopes ``c_q^(v)``, shape (V, len(targets)).

    Outer draws are V distinct pool rows; each candidate's W inner draws come
    from the remaining rows (without replacement). Each candidate gets its own
    spawned generator, so the result does not depend on evaluation order.
    Several targets can share the same randomness.
    """
    a = _alpha(alpha_hat)
    pool = null_pool if isinstance(null_pool, NullSampleSet) else NullSampleSet(_pool(null_pool), df=0)
    draws = pool.draws
    df = alpha_hat.df if isinstance(alpha_hat, AlphaEstimates) else pool.df
    if df < 1:
        raise ValueError("degrees of freedom unknown; pass AlphaEstimates or a NullSampleSet with df")
    if draws.shape[1] != a.size:
        raise ValueError(f"null pool has {draws.shape[1]} columns, alpha_hat has {a.size}")
    B = draws.shape[0]
    if B < config.V + config.W:
        raise ValueError(f"null pool needs at least V + W = {config.V + config.W} rows, has {B}")
    if targets is None:
        targets = (config.target,)
    rng = np.random.default_rng(rng)
    outer = rng.choice(B, size=config.V, replace=False)
    remaining = np.setdiff1d(np.arange(B), outer)
    slopes = np.empty((config.V, len(targets)))
    for v, child in enumerate(rng.spawn(config.V)):
        param = sample_alpha_v(a, draws[outer[v]], config.sidedness)
        inner = child.choice(remaining, size=config.W, replace=False)
        curve = FdrCurve(param, draws[inner], df, config.sidedness)
        for j, level in enumerate(targets):
            slopes[v, j] = bisect_sup(curve, level, config.S)
    return slopes


def ddboot(alpha_hat, null_pool, config: DdbootConfig | None = None, rng=None) -> TestDecision:
    """Dueling double bootstrap; ``config.aggressive`` selects the DDBA variant."""
    config = config or DdbootConfig()
    slopes = ddboot_slopes(alpha_hat, null_pool, config, rng)[:, 0]
    return ddboot_decision(alpha_hat, null_pool, slopes, config.sidedness)


def ddboot_decision(alpha_hat, null_pool, slopes, sidedness="two-sided") -> TestDecision:
    a = _alpha(alpha_hat)
    df = alpha_hat.df if isinstance(alpha_hat, AlphaEstimates) else null_pool.df
    c_q = float(np.min(slopes))
    dec = sup_threshold(p_value(np.atleast_1d(a), df, sidedness), c_q)
    return TestDecision(dec.rejected, dec.threshold_p, {"c_q": c_q})


def yb(pvals, null_samples, q: float, boot_count: int = 500, rng=None,
       sidedness: str | None = None) -> TestDecision:
    """Resampling-based local FDR estimator (YB).

    The null rejection count ``R*(p)`` at each observed p-value comes from
    ``boot_count`` null draws; its upper ``1 - q/2`` quantile bounds the false
    rejections, giving an estimate ``s(p)`` of true rejections. The local
    estimate ``mean(R* / (R* + s))`` must stay within ``q/2``, so with the
    quantile level the total error budget is ``q/2 + q/2``.
    """
    if not 0 < q < 1:
        raise ValueError("q must lie in (0, 1)")
    if sidedness is None:
        sidedness = pvals.sidedness if isinstance(pvals, PValueVector) else "two-sided"
    obs = _values(pvals)
    n = obs.size
    draws = _pool(null_samples)
    if draws.shape[1] != n:
        raise ValueError("null samples and p-values differ in N")
    df = null_samples.df if isinstance(null_samples, NullSampleSet) else None
    if df is None or df < 1:
        raise ValueError("null samples must carry degrees of freedom")
    if draws.shape[0] > boot_count:
        rng = np.random.default_rng(rng)
        draws = draws[np.sort(rng.choice(draws.shape[0], size=boot_count, replace=False))]
    null_p = np.sort(np.atleast_2d(p_value(draws, df, sidedness)), axis=1)

    cand = np.sort(obs)
    r_obs = np.searchsorted(cand, cand, side="right")
    r_null = np.stack([np.searchsorted(row, cand, side="right") for row in null_p])
    beta = q / 2
    r_beta = np.quantile(r_null, 1 - beta, axis=0, method="higher")
    s_hat = r_obs - r_beta
    s_hat = np.where(s_hat >= cand * n, s_hat, 0)
    denom = r_null + s_hat
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(denom > 0, r_null / denom, 0.0)
    local = ratio.mean(axis=0)
    ok = np.flatnonzero(local <= q / 2)
    if ok.size == 0:
        return TestDecision(np.empty(0, dtype=np.intp), None)
    return TestDecision.from_threshold(obs, cand[ok[-1]])
