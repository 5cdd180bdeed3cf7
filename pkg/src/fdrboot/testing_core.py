"""p-values from the t law, empirical CDFs, the step-up threshold and FDR bookkeeping."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import special

SIDEDNESS = ("one-sided", "two-sided")


def check_sidedness(sidedness: str) -> str:
    if sidedness not in SIDEDNESS:
        raise ValueError(f"sidedness must be one of {SIDEDNESS}, got {sidedness!r}")
    return sidedness


@dataclass(frozen=True)
class PValueVector:
    values: np.ndarray
    sidedness: str = "two-sided"

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 1:
            raise ValueError("p-values must be a 1-d vector")
        if np.any(~np.isfinite(vals)) or np.any((vals < 0) | (vals > 1)):
            raise ValueError("p-values must lie in [0, 1]")
        object.__setattr__(self, "values", vals)
        check_sidedness(self.sidedness)

    def __len__(self):
        return len(self.values)


@dataclass(frozen=True)
class HypothesisLabels:
    """Partition of hypothesis indices ``0..n-1`` into nulls and alternatives."""

    null_set: np.ndarray
    n: int

    def __post_init__(self):
        nulls = np.unique(np.asarray(self.null_set, dtype=np.intp))
        if nulls.size and (nulls[0] < 0 or nulls[-1] >= self.n):
            raise ValueError("null indices out of range")
        object.__setattr__(self, "null_set", nulls)

    @property
    def alt_set(self) -> np.ndarray:
        return np.setdiff1d(np.arange(self.n), self.null_set)

    @property
    def null_mask(self) -> np.ndarray:
        mask = np.zeros(self.n, dtype=bool)
        mask[self.null_set] = True
        return mask

    @property
    def pi0(self) -> float:
        return len(self.null_set) / self.n if self.n else 0.0

    @classmethod
    def from_alpha(cls, alpha, sidedness: str = "two-sided") -> "HypothesisLabels":
        """Nulls are ``alpha <= 0`` (one-sided) or ``alpha == 0`` (two-sided)."""
        alpha = np.asarray(alpha, dtype=float)
        if check_sidedness(sidedness) == "one-sided":
            nulls = np.flatnonzero(alpha <= 0)
        else:
            nulls = np.flatnonzero(alpha == 0)
        return cls(nulls, len(alpha))


@dataclass(frozen=True)
class ContingencyCounts:
    n_10: int
    n_11: int
    n_01: int
    n_00: int

    @property
    def r(self) -> int:
        return self.n_10 + self.n_11

    @property
    def n(self) -> int:
        return self.n_10 + self.n_11 + self.n_01 + self.n_00


@dataclass(frozen=True)
class TestDecision:
    """Rejected hypothesis indices plus the largest rejected p-value (None if empty)."""

    __test__ = False  # keep pytest from collecting this class

    rejected: np.ndarray
    threshold_p: float | None
    extra: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "rejected", np.sort(np.asarray(self.rejected, dtype=np.intp)))

    @property
    def n_rejected(self) -> int:
        return len(self.rejected)

    @classmethod
    def from_threshold(cls, pvals, threshold: float | None, **extra) -> "TestDecision":
        """Reject every p-value at or below ``threshold``; report the largest one rejected."""
        pvals = _values(pvals)
        if threshold is None:
            return cls(np.empty(0, dtype=np.intp), None, extra)
        rejected = np.flatnonzero(pvals <= threshold)
        thr = float(pvals[rejected].max()) if rejected.size else None
        return cls(rejected, thr, extra)


def _values(pvals) -> np.ndarray:
    if isinstance(pvals, PValueVector):
        return pvals.values
    return np.asarray(pvals, dtype=float)


def p_value(u, df: float, sidedness: str = "two-sided"):
    """Tail area of Student's t with ``df`` degrees of freedom.

    Uses the regularized incomplete beta function, ``P(|T| > |u|) = I_x(df/2, 1/2)``
    with ``x = df / (df + u^2)``, which stays accurate deep in the tails.
    """
    if df < 1:
        raise ValueError("df must be >= 1")
    check_sidedness(sidedness)
    u = np.asarray(u, dtype=float)
    if np.any(~np.isfinite(u)):
        raise ValueError("statistic must be finite")
    two_tail = special.betainc(0.5 * df, 0.5, df / (df + u * u))
    if sidedness == "two-sided":
        out = two_tail
    else:
        upper = 0.5 * two_tail
        out = np.where(u >= 0, upper, 1.0 - upper)
    out = np.clip(out, 0.0, 1.0)
    return float(out) if out.ndim == 0 else out


def p_values(alpha_hat, df: float, sidedness: str = "two-sided") -> PValueVector:
    return PValueVector(np.atleast_1d(p_value(alpha_hat, df, sidedness)), sidedness)


def ecdf_at(pvals, x: float) -> float:
    """Fraction of p-values at or below ``x`` (right-continuous)."""
    vals = _values(pvals)
    if vals.size == 0:
        return 0.0
    return float(np.count_nonzero(vals <= x)) / vals.size


def sup_threshold(pvals, c: float) -> TestDecision:
    """Evaluate ``sup{p : F(p) >= p / c}`` for the empirical CDF ``F`` of ``pvals``.

    The empirical CDF only jumps at observed p-values, so the supremum is reached
    at the largest order statistic with ``p_(i) <= c * i / N``.
    """
    if not c > 0:
        raise ValueError("c must be positive")
    vals = _values(pvals)
    n = vals.size
    if n == 0:
        return TestDecision(np.empty(0, dtype=np.intp), None)
    order = np.sort(vals)
    ok = np.flatnonzero(order <= c * np.arange(1, n + 1) / n)
    if ok.size == 0:
        return TestDecision(np.empty(0, dtype=np.intp), None)
    return TestDecision.from_threshold(vals, order[ok[-1]])


def contingency(decision: TestDecision, labels: HypothesisLabels) -> ContingencyCounts:
    rejected = np.zeros(labels.n, dtype=bool)
    rejected[decision.rejected] = True
    nulls = labels.null_mask
    return ContingencyCounts(
        n_10=int(np.count_nonzero(rejected & nulls)),
        n_11=int(np.count_nonzero(rejected & ~nulls)),
        n_01=int(np.count_nonzero(~rejected & ~nulls)),
        n_00=int(np.count_nonzero(~rejected & nulls)),
    )


def fdp(counts: ContingencyCounts) -> float:
    """False discovery proportion ``n_10 / max(r, 1)``."""
    return counts.n_10 / max(counts.r, 1)
