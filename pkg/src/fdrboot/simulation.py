"""Synthetic benchmark: equicorrelated multivariate-t statistics and a Monte Carlo harness."""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from fdrboot import classical
from fdrboot.factor_model import AlphaEstimates, NullSampleSet
from fdrboot.resampling import DdbootConfig, ddboot_decision, ddboot_slopes, yb
from fdrboot.testing_core import HypothesisLabels, contingency, fdp, p_values

METHODS = ("bh", "bky", "by", "storey", "storey_a", "yb", "ddb", "ddba", "single")
DISPLAY_NAMES = {
    "bh": "BH",
    "bky": "BKY",
    "by": "BY",
    "storey": "Storey",
    "storey_a": "Storey-A",
    "yb": "YB",
    "ddb": "DDB",
    "ddba": "DDBA",
    "single": "Single",
}
# spawn-key slot of each method's generator; DDB and DDBA share one so they see the same draws
_RNG_SLOT = {"storey_a": 1, "yb": 2, "ddb": 3, "ddba": 3}


@dataclass(frozen=True)
class ScenarioSpec:
    n_hyp: int = 50
    df: int = 100
    rho: float = 0.0
    pi0: float = 0.5
    signal_scale: float = 2.0
    pool_size: int = 2000
    scenario_id: int | None = None

    def __post_init__(self):
        if self.n_hyp < 1:
            raise ValueError("n_hyp must be >= 1")
        if not 0 <= self.rho < 1:
            raise ValueError("rho must lie in [0, 1)")
        if not 0 <= self.pi0 <= 1:
            raise ValueError("pi0 must lie in [0, 1]")
        if self.df < 3:
            raise ValueError("df must be >= 3")
        if self.pool_size < 1:
            raise ValueError("pool_size must be >= 1")

    @property
    def n_null(self) -> int:
        # round half up
        return int(math.floor(self.pi0 * self.n_hyp + 0.5))


@dataclass(frozen=True)
class SimInstance:
    mu: np.ndarray
    alpha_hat: AlphaEstimates
    labels: HypothesisLabels
    null_pool: NullSampleSet


@dataclass
class MethodSummary:
    method: str
    thr_p: float
    rejections: float
    fdr: float
    fdr_half_width: float | None


@dataclass
class MonteCarloReport:
    scenario: ScenarioSpec
    runs: int
    q: float
    methods: list[MethodSummary] = field(default_factory=list)

    def __getitem__(self, method: str) -> MethodSummary:
        for m in self.methods:
            if m.method == method:
                return m
        raise KeyError(method)

    def to_dict(self) -> dict:
        return {
            "scenario": asdict(self.scenario),
            "runs": self.runs,
            "q": self.q,
            "methods": [asdict(m) for m in self.methods],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["scenario", "rho", "pi0", "runs", "method", "thr_p", "rejections", "fdr", "fdr_half_width"])
        s = self.scenario
        for m in self.methods:
            writer.writerow([
                "" if s.scenario_id is None else s.scenario_id, s.rho, s.pi0, self.runs,
                DISPLAY_NAMES.get(m.method, m.method), repr(m.thr_p), repr(m.rejections),
                repr(m.fdr), "" if m.fdr_half_width is None else repr(m.fdr_half_width),
            ])
        return buf.getvalue()

    def to_text(self) -> str:
        s = self.scenario
        label = f"Scenario {s.scenario_id}: " if s.scenario_id is not None else ""
        names = [DISPLAY_NAMES.get(m.method, m.method) for m in self.methods]
        width = max(9, *(len(n) + 2 for n in names))

        def row(title, cells):
            return f"{title:<10}" + "".join(f"{c:>{width}}" for c in cells)

        lines = [
            f"{label}sigma_ij={s.rho:.1f}, pi0={s.pi0:.2f}  (runs={self.runs}, q={self.q})",
            row("", names),
            row("Thr-p", [f"{m.thr_p:.4f}" for m in self.methods]),
            row("# of Rej", [f"{m.rejections:.2f}" for m in self.methods]),
            row("FDR", [f"{m.fdr:.4f}" for m in self.methods]),
            row("", ["n/a" if m.fdr_half_width is None else f"±{m.fdr_half_width:.4f}" for m in self.methods]),
        ]
        return "\n".join(lines) + "\n"


def sample_mvt(n: int, rho: float, df: float, rng=None, size: int | None = None) -> np.ndarray:
    """Equicorrelated multivariate t: ``z / sqrt(w / df)`` with one chi-square ``w`` per draw.

    ``z`` has unit variances and pairwise correlation ``rho``, built from a
    shared normal factor. Returns shape (n,) or (size, n).
    """
    if not 0 <= rho < 1:
        raise ValueError("rho must lie in [0, 1)")
    if df < 3:
        raise ValueError("df must be >= 3")
    rng = np.random.default_rng(rng)
    m = 1 if size is None else size
    common = rng.standard_normal((m, 1))
    idio = rng.standard_normal((m, n))
    z = np.sqrt(1 - rho) * idio + np.sqrt(rho) * common
    w = rng.chisquare(df, size=(m, 1))
    out = z / np.sqrt(w / df)
    return out[0] if size is None else out


def make_instance(spec: ScenarioSpec, rng=None) -> SimInstance:
    rng = np.random.default_rng(rng)
    n = spec.n_hyp
    nulls = np.sort(rng.choice(n, size=spec.n_null, replace=False))
    mu = spec.signal_scale * (1.0 - rng.random(n))  # in (0, scale]
    mu[nulls] = 0.0
    alpha_hat = mu + sample_mvt(n, spec.rho, spec.df, rng)
    pool = sample_mvt(n, spec.rho, spec.df, rng, size=spec.pool_size)
    return SimInstance(
        mu=mu,
        alpha_hat=AlphaEstimates(alpha_hat, spec.df),
        labels=HypothesisLabels(nulls, n),
        null_pool=NullSampleSet(pool, spec.df),
    )


def scenario_grid() -> list[ScenarioSpec]:
    """The nine benchmark scenarios, numbered 1-9: pi0 = 0.5, 1.0, 0.25 by rho = 0, 0.5, 0.9."""
    specs = []
    sid = 1
    for pi0 in (0.5, 1.0, 0.25):
        for rho in (0.0, 0.5, 0.9):
            specs.append(ScenarioSpec(rho=rho, pi0=pi0, scenario_id=sid))
            sid += 1
    return specs


def get_scenario(scenario_id: int, **overrides) -> ScenarioSpec:
    if not 1 <= scenario_id <= 9:
        raise ValueError("scenario id must be in 1..9")
    spec = scenario_grid()[scenario_id - 1]
    if overrides:
        spec = ScenarioSpec(**{**asdict(spec), **overrides})
    return spec


def apply_methods(alpha_hat: AlphaEstimates, null_pool: NullSampleSet, methods, q: float,
                  seed_seq: np.random.SeedSequence, ddboot_config: DdbootConfig | None = None,
                  boot_count: int = 500) -> dict:
    """Run every requested method on one observed vector; returns {method: TestDecision}.

    Each randomized method draws from a generator keyed by its own slot under
    ``seed_seq``, so results do not depend on which other methods are requested.
    """
    cfg = ddboot_config or DdbootConfig(q=q)
    pv = p_values(alpha_hat.alpha_hat, alpha_hat.df, cfg.sidedness)

    def gen(method):
        slot = _RNG_SLOT[method]
        return np.random.default_rng(
            np.random.SeedSequence(seed_seq.entropy, spawn_key=(*seed_seq.spawn_key, slot))
        )

    out = {}
    slopes = None
    for method in methods:
        if method == "single":
            out[method] = classical.single(pv)
        elif method == "bh":
            out[method] = classical.bh(pv, q)
        elif method == "by":
            out[method] = classical.by(pv, q)
        elif method == "bky":
            out[method] = classical.bky(pv, q)
        elif method == "storey":
            out[method] = classical.storey(pv, q, 0.5)
        elif method == "storey_a":
            out[method] = classical.storey_adaptive(pv, q, boot_count, gen(method))
        elif method == "yb":
            out[method] = yb(pv, null_pool, q, boot_count, gen(method))
        elif method in ("ddb", "ddba"):
            if slopes is None:
                base = DdbootConfig(q=q, V=cfg.V, W=cfg.W, S=cfg.S, sidedness=cfg.sidedness)
                slopes = ddboot_slopes(alpha_hat, null_pool, base, gen(method),
                                       targets=(q / 2, q))
            col = 0 if method == "ddb" else 1
            out[method] = ddboot_decision(alpha_hat, null_pool, slopes[:, col], cfg.sidedness)
        else:
            raise ValueError(f"unknown method {method!r}")
    return out


def _one_run(args):
    spec, methods, q, master_seed, run_index, ddboot_config, boot_count = args
    base = np.random.SeedSequence(master_seed, spawn_key=(run_index,))
    inst_rng = np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=(run_index, 0)))
    instance = make_instance(spec, inst_rng)
    decisions = apply_methods(instance.alpha_hat, instance.null_pool, methods, q, base, ddboot_config, boot_count)
    row = []
    for method in methods:
        dec = decisions[method]
        counts = contingency(dec, instance.labels)
        thr = 0.0 if dec.threshold_p is None else dec.threshold_p
        row.append((thr, counts.r, fdp(counts)))
    return row


def run_monte_carlo(spec: ScenarioSpec, methods=METHODS, runs: int = 2000, q: float = 0.05,
                    master_seed: int = 0, workers: int = 1,
                    ddboot_config: DdbootConfig | None = None, boot_count: int = 500,
                    progress=None) -> MonteCarloReport:
    """Paired Monte Carlo comparison: every method sees the same instance in each run.

    Run ``k`` draws all of its randomness from seeds derived from
    ``(master_seed, k)``, so the report is identical for any worker count.
    Runs without rejections contribute a threshold of 0 to the Thr-p mean.
    """
    if runs < 1:
        raise ValueError("runs must be >= 1")
    methods = list(methods)
    for m in methods:
        if m not in DISPLAY_NAMES:
            raise ValueError(f"unknown method {m!r}")
    jobs = [(spec, methods, q, master_seed, k, ddboot_config, boot_count) for k in range(runs)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_one_run, jobs, chunksize=max(1, runs // (4 * workers))))
    else:
        rows = []
        for job in jobs:
            rows.append(_one_run(job))
            if progress is not None:
                progress(len(rows), runs)
    data = np.array(rows, dtype=float)  # runs x methods x 3
    report = MonteCarloReport(spec, runs, q)
    for j, method in enumerate(methods):
        thr, rej, fd = data[:, j, 0], data[:, j, 1], data[:, j, 2]
        hw = None if runs < 2 else float(2 * fd.std(ddof=1) / np.sqrt(runs))
        report.methods.append(MethodSummary(method, float(thr.mean()), float(rej.mean()), float(fd.mean()), hw))
    return report
