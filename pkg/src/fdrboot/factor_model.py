"""Factor-model alphas and the cross-sectional residual bootstrap.

Each portfolio's returns are regressed on an intercept plus demeaned factor
returns. The intercept, studentized by the residual standard error, is the
test statistic. Null draws come from resampling time steps of the residual
matrix jointly across portfolios, which keeps their cross-sectional correlation.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

RANK_TOL = 1e-12


class RankDeficientError(np.linalg.LinAlgError):
    """Design matrix does not have full column rank."""


class DegeneratePortfolioError(ValueError):
    """A portfolio's residual variance is zero, so its alpha cannot be studentized."""

    def __init__(self, index):
        self.index = index
        super().__init__(f"residual variance is zero for hypothesis {index}")


@dataclass(frozen=True)
class FactorPanel:
    """T x K design: a column of ones followed by demeaned factor returns."""

    values: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.values, dtype=float)
        if x.ndim != 2 or x.shape[1] < 1:
            raise ValueError("factor panel must be a 2-d matrix")
        if not np.all(np.isfinite(x)):
            raise ValueError("factor panel has non-finite entries")
        if not np.all(x[:, 0] == 1.0):
            raise ValueError("first column must be the intercept (all ones)")
        object.__setattr__(self, "values", x)

    @property
    def T(self) -> int:
        return self.values.shape[0]

    @property
    def K(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class OlsFit:
    beta: np.ndarray
    residuals: np.ndarray
    sigma2: float

    @property
    def intercept(self) -> float:
        return float(self.beta[0])


@dataclass(frozen=True)
class AlphaEstimates:
    alpha_hat: np.ndarray
    df: int

    def __post_init__(self):
        a = np.atleast_1d(np.asarray(self.alpha_hat, dtype=float))
        if a.ndim != 1 or a.size == 0:
            raise ValueError("alpha_hat must be a non-empty vector")
        if not np.all(np.isfinite(a)):
            raise ValueError("alpha_hat has non-finite entries")
        if self.df < 1:
            raise ValueError("df must be >= 1")
        object.__setattr__(self, "alpha_hat", a)

    @property
    def n(self) -> int:
        return self.alpha_hat.size


@dataclass(frozen=True)
class NullSampleSet:
    """B joint draws from the correlated null, one row per draw.

    ``means`` optionally carries the resampled residual means behind each row,
    and ``redraws`` the number of zero-variance resamples that were replaced.
    """

    draws: np.ndarray
    df: int
    means: np.ndarray | None = None
    redraws: int = 0

    def __post_init__(self):
        d = np.asarray(self.draws, dtype=float)
        if d.ndim != 2 or d.shape[0] < 1:
            raise ValueError("null draws must be a B x N matrix with B >= 1")
        object.__setattr__(self, "draws", d)

    @property
    def B(self) -> int:
        return self.draws.shape[0]

    @property
    def n(self) -> int:
        return self.draws.shape[1]


def demean_factors(raw) -> FactorPanel:
    """Subtract column means from raw factor returns and prepend an intercept."""
    raw = np.asarray(raw, dtype=float)
    if raw.ndim == 1:
        raw = raw[:, None]
    if raw.ndim != 2:
        raise ValueError("factor matrix must be 2-d (T x factors)")
    if not np.all(np.isfinite(raw)):
        raise ValueError("factor matrix has non-finite entries")
    T = raw.shape[0]
    if T <= raw.shape[1] + 1:
        raise ValueError(f"need T > {raw.shape[1] + 1} time steps, got {T}")
    centered = raw - raw.mean(axis=0)
    return FactorPanel(np.column_stack([np.ones(T), centered]))


def _design(panel) -> np.ndarray:
    return panel.values if isinstance(panel, FactorPanel) else np.asarray(panel, dtype=float)


def ols_fit(panel, returns) -> OlsFit:
    """Least squares fit of one return series on the panel's columns."""
    x = _design(panel)
    r = np.asarray(returns, dtype=float)
    T, K = x.shape
    if r.shape != (T,):
        raise ValueError(f"returns must have length {T}")
    if T <= K:
        raise ValueError("need more time steps than regressors")
    xtx = x.T @ x
    s = np.linalg.svd(xtx, compute_uv=False)
    if s[-1] <= RANK_TOL * s[0]:
        raise RankDeficientError("design matrix is rank deficient")
    beta = np.linalg.solve(xtx, x.T @ r)
    resid = r - x @ beta
    return OlsFit(beta, resid, float(resid @ resid) / (T - K))


def _fit_all(panel, returns):
    x = _design(panel)
    r = np.asarray(returns, dtype=float)
    if r.ndim == 1:
        r = r[None, :]
    T, K = x.shape
    if r.shape[1] != T:
        raise ValueError(f"returns have {r.shape[1]} time steps, factors have {T}")
    if not np.all(np.isfinite(r)):
        raise ValueError("returns have non-finite entries")
    if T <= K:
        raise ValueError("need more time steps than regressors")
    xtx = x.T @ x
    s = np.linalg.svd(xtx, compute_uv=False)
    if s[-1] <= RANK_TOL * s[0]:
        raise RankDeficientError("design matrix is rank deficient")
    beta = np.linalg.solve(xtx, x.T @ r.T).T  # N x K
    resid = r - beta @ x.T
    sigma2 = np.einsum("ij,ij->i", resid, resid) / (T - K)
    return beta, resid, sigma2


def estimate_alphas(panel, returns) -> AlphaEstimates:
    """Studentized intercepts ``sqrt(T) * a_i / sigma_i`` for every portfolio.

    ``returns`` is N x T (one row per portfolio).
    """
    beta, _, sigma2 = _fit_all(panel, returns)
    T, K = _design(panel).shape
    sigma = np.sqrt(sigma2)
    scale = np.maximum(np.abs(beta).max(axis=1), 1.0)
    bad = np.flatnonzero(sigma <= 1e-14 * scale)
    if bad.size:
        raise DegeneratePortfolioError(int(bad[0]))
    return AlphaEstimates(np.sqrt(T) * beta[:, 0] / sigma, T - K)


def residual_matrix(panel, returns):
    """Residuals (N x T) and their standard errors (N,) from the factor regression."""
    _, resid, sigma2 = _fit_all(panel, returns)
    return resid, np.sqrt(sigma2)


def exact_resample_indices(T: int) -> np.ndarray:
    """All ``T**T`` ordered resamples of ``T`` time steps (small T only)."""
    if T > 6:
        raise ValueError("exact enumeration is limited to T <= 6")
    return np.array(list(itertools.product(range(T), repeat=T)), dtype=np.intp)


def residual_bootstrap(residuals, sigma_hats=None, B: int = 1000, rng=None,
                       df: int | None = None, exact: bool = False) -> NullSampleSet:
    """Draw null statistics by resampling time steps jointly across portfolios.

    For each draw one index sequence of length T is sampled with replacement;
    every portfolio uses the same sequence. Returns ``sqrt(T) * mean / sd`` of
    the resampled residuals, with ``sd`` taken over the resample (divisor T-1).
    A draw where any portfolio's resample has zero variance is redrawn.

    ``sigma_hats`` is accepted for symmetry with the fitted standard errors but
    the studentization uses the resampled spread. With ``exact=True`` every one
    of the ``T**T`` resamples is returned once (``B`` is ignored) and rows with
    zero spread are left as NaN; use it for moment identities only.
    """
    eps = np.asarray(residuals, dtype=float)
    if eps.ndim == 1:
        eps = eps[None, :]
    N, T = eps.shape
    if T < 2:
        raise ValueError("need at least two time steps")
    if sigma_hats is not None and np.shape(sigma_hats) != (N,):
        raise ValueError("sigma_hats must have one entry per portfolio")
    if df is None:
        df = max(T - 4, 1)

    if exact:
        idx = exact_resample_indices(T)
        means, sds = _resample_stats(eps, idx)
        with np.errstate(divide="ignore", invalid="ignore"):
            draws = np.where(sds > 0, np.sqrt(T) * means / sds, np.nan)
        return NullSampleSet(draws, df, means=means)

    if B < 1:
        raise ValueError("B must be >= 1")
    rng = np.random.default_rng(rng)
    means = np.empty((B, N))
    sds = np.empty((B, N))
    filled = 0
    redraws = 0
    while filled < B:
        need = B - filled
        idx = rng.integers(0, T, size=(need, T))
        m, s = _resample_stats(eps, idx)
        good = np.all(s > 0, axis=1)
        k = int(good.sum())
        means[filled:filled + k] = m[good]
        sds[filled:filled + k] = s[good]
        filled += k
        redraws += need - k
        if redraws > 1000 * B:
            raise ValueError("residuals are too degenerate to resample")
    return NullSampleSet(np.sqrt(T) * means / sds, df, means=means, redraws=redraws)


def _resample_stats(eps, idx):
    # eps: N x T, idx: B x T -> (B x N) means and sds
    sample = eps[:, idx]  # N x B x T
    means = sample.mean(axis=2)
    sds = sample.std(axis=2, ddof=1)
    tol = 1e-12 * np.maximum(np.abs(eps).max(axis=1), 1e-300)
    sds = np.where(sds <= tol[:, None], 0.0, sds)
    return means.T, sds.T


def bootstrap_moment_check(residuals, sample: NullSampleSet) -> dict:
    """Compare bootstrap moments of resampled means with their closed forms.

    The bootstrap mean of each resampled residual mean is zero, and
    ``T * E_boot[e_i e_j]`` equals ``(1/T) sum_t eps_it eps_jt``.
    Returns absolute deviations plus Monte Carlo standard errors.
    """
    eps = np.asarray(residuals, dtype=float)
    if eps.ndim == 1:
        eps = eps[None, :]
    N, T = eps.shape
    if sample.means is None:
        raise ValueError("sample carries no resampled means")
    means = sample.means
    if means.shape[1] != N:
        raise ValueError("sample and residuals disagree on N")
    B = means.shape[0]
    target = eps @ eps.T / T
    prods = T * means[:, :, None] * means[:, None, :]  # B x N x N
    cov_boot = prods.mean(axis=0)
    mean_boot = means.mean(axis=0)
    if B > 1:
        mean_se = means.std(axis=0, ddof=1) / np.sqrt(B)
        cov_se = prods.std(axis=0, ddof=1) / np.sqrt(B)
    else:
        mean_se = np.full(N, np.nan)
        cov_se = np.full((N, N), np.nan)
    return {
        "mean_deviation": np.abs(mean_boot),
        "mean_se": mean_se,
        "cov_boot": cov_boot,
        "cov_target": target,
        "cov_deviation": np.abs(cov_boot - target),
        "cov_se": cov_se,
        "B": B,
    }


def autocorrelation(series, max_lag: int) -> np.ndarray:
    """Pearson correlation between ``x_t`` and ``x_{t+l}`` for ``l = 1..max_lag``."""
    x = np.asarray(series, dtype=float)
    if x.ndim != 1:
        raise ValueError("series must be 1-d")
    if max_lag < 1 or x.size <= max_lag + 1:
        raise ValueError("need len(series) > max_lag + 1 and max_lag >= 1")
    if np.ptp(x) == 0:
        raise ValueError("series is constant")
    out = np.empty(max_lag)
    for lag in range(1, max_lag + 1):
        a, b = x[:-lag], x[lag:]
        if np.ptp(a) == 0 or np.ptp(b) == 0:
            raise ValueError(f"zero variance at lag {lag}")
        out[lag - 1] = np.corrcoef(a, b)[0, 1]
    return out
