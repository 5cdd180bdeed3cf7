"""Baseline FDR procedures: fixed threshold, BH, BY, BKY, Storey and adaptive Storey."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from fdrboot.testing_core import TestDecision, _values, ecdf_at, sup_threshold

STOREY_GRID = np.round(np.arange(0.05, 0.951, 0.05), 2)


@dataclass(frozen=True)
class ProcedureConfig:
    q: float = 0.05
    p0: float = 0.5
    boot_count: int = 500

    def __post_init__(self):
        if not 0 < self.q < 1:
            raise ValueError("q must lie in (0, 1)")
        if not 0 < self.p0 < 1:
            raise ValueError("p0 must lie in (0, 1)")
        if self.boot_count < 1:
            raise ValueError("boot_count must be >= 1")


def _check_q(q):
    if not 0 < q < 1:
        raise ValueError("q must lie in (0, 1)")


def single(pvals, p_fixed: float = 0.05) -> TestDecision:
    """Reject every p-value at or below a fixed cutoff, ignoring multiplicity."""
    if not 0 < p_fixed < 1:
        raise ValueError("p_fixed must lie in (0, 1)")
    return TestDecision.from_threshold(pvals, p_fixed)


def bh(pvals, q: float) -> TestDecision:
    """Benjamini-Hochberg linear step-up at level ``q``."""
    _check_q(q)
    return sup_threshold(pvals, q)


def by_level(n: int, q: float) -> float:
    """Effective BH level under arbitrary dependence: ``q / (ln n + 1/2)``."""
    return q / (np.log(n) + 0.5)


def by(pvals, q: float) -> TestDecision:
    _check_q(q)
    n = _values(pvals).size
    if n == 0:
        return sup_threshold(pvals, q)
    return sup_threshold(pvals, by_level(n, q))


def bky(pvals, q: float) -> TestDecision:
    """Two-stage adaptive step-up (BKY).

    Stage one runs BH at ``q / (1 + q)``; the number of non-rejections
    estimates the null count, which rescales the stage-two level.
    """
    _check_q(q)
    vals = _values(pvals)
    n = vals.size
    q1 = q / (1 + q)
    first = sup_threshold(vals, q1)
    n0_hat = n - first.n_rejected
    if n0_hat == 0:
        return TestDecision.from_threshold(vals, 1.0, stage1=first.n_rejected)
    if first.n_rejected == 0:
        return TestDecision(first.rejected, first.threshold_p, {"stage1": 0})
    second = sup_threshold(vals, q1 * n / n0_hat)
    return TestDecision(second.rejected, second.threshold_p, {"stage1": first.n_rejected})


def storey_pi1(pvals, p0: float = 0.5) -> float:
    """Plug-in alternative fraction ``max(0, (F(p0) - p0) / (1 - p0))``."""
    if not 0 < p0 < 1:
        raise ValueError("p0 must lie in (0, 1)")
    return max(0.0, (ecdf_at(pvals, p0) - p0) / (1 - p0))


def storey(pvals, q: float, p0: float = 0.5) -> TestDecision:
    """Step-up with slope ``q / (1 - pi1)``; rejects everything when ``pi1 == 1``."""
    _check_q(q)
    pi1 = storey_pi1(pvals, p0)
    if pi1 >= 1.0:
        return TestDecision.from_threshold(pvals, 1.0, pi1=pi1, p0=p0)
    dec = sup_threshold(pvals, q / (1 - pi1))
    return TestDecision(dec.rejected, dec.threshold_p, {"pi1": pi1, "p0": p0})


def _pi0_curve(sorted_p, grid):
    # fraction of p-values above each lambda, scaled by the null mass 1 - lambda
    n = sorted_p.shape[-1]
    above = n - np.stack([np.searchsorted(row, grid, side="right") for row in np.atleast_2d(sorted_p)])
    return above / (n * (1 - grid))


def choose_p0(pvals, boot_count: int = 500, rng=None, grid=STOREY_GRID) -> float:
    """Pick the reference point by bootstrap MSE over a fixed grid.

    For each grid value the bootstrap estimates of the null fraction are compared
    with the smallest plug-in estimate on the observed data; the grid value with
    the least mean squared error wins, ties going to the smaller value.
    """
    vals = _values(pvals)
    n = vals.size
    if n < 2:
        return 0.5
    rng = np.random.default_rng(rng)
    grid = np.asarray(grid, dtype=float)
    observed = _pi0_curve(np.sort(vals), grid)[0]
    target = observed.min()
    resampled = np.sort(vals[rng.integers(0, n, size=(boot_count, n))], axis=1)
    boot = _pi0_curve(resampled, grid)
    mse = ((boot - target) ** 2).mean(axis=0)
    return float(grid[int(np.argmin(mse))])


def storey_adaptive(pvals, q: float, boot_count: int = 500, rng=None) -> TestDecision:
    _check_q(q)
    p0 = choose_p0(pvals, boot_count, rng)
    return storey(pvals, q, p0)
