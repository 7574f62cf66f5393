"""Monte Carlo harness and diagnostics for the depth asymptotics.

Replication r of a run with seed s draws from a dedicated counter-based
stream keyed by (s, r), so the sample array is a pure function of the run
spec regardless of how replications are scheduled across worker threads.
The diagnostics (law of large numbers, CLT shape, coupling gap, chi-square)
are plain single-threaded folds over the sample arrays.
"""

from __future__ import annotations

import math
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.special import erf, gammaincc

from . import _kernels
from .blocks import BlockFamily

SAMPLERS = ("direct", "bucket", "independent", "coupled")

# fixed scheduling grain; results are rep-keyed so this only affects timing
CHUNK = 256


@dataclass(frozen=True)
class McRunSpec:
    """What to sample: family, horizon, replication count, stream seed."""

    family: BlockFamily
    n: int
    reps: int
    seed: int
    sampler: str = "direct"
    workers: int = 1

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"n must be at least 1, got {self.n}")
        if self.reps < 1:
            raise ValueError(f"reps must be at least 1, got {self.reps}")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in 64 bits")
        if self.sampler not in SAMPLERS:
            raise ValueError(
                f"sampler must be one of {', '.join(SAMPLERS)}, got {self.sampler!r}"
            )
        if self.workers < 1:
            raise ValueError(f"workers must be at least 1, got {self.workers}")


@dataclass(frozen=True)
class SummaryStats:
    count: int
    mean: float
    variance: float
    min: float
    max: float
    se: float

    def __post_init__(self):
        if self.variance < 0:
            raise ValueError("variance must be nonnegative")

    @staticmethod
    def from_sample(x: np.ndarray) -> "SummaryStats":
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 1 or x.size == 0:
            raise ValueError("need a nonempty 1-d sample")
        count = int(x.size)
        var = float(np.var(x, ddof=1)) if count > 1 else 0.0
        var = max(var, 0.0)
        return SummaryStats(
            count=count,
            mean=float(np.mean(x)),
            variance=var,
            min=float(np.min(x)),
            max=float(np.max(x)),
            se=math.sqrt(var / count),
        )


@dataclass(frozen=True)
class LlnReport:
    mu_hat: float
    abs_err: float
    rel_err: float


@dataclass(frozen=True)
class CltReport:
    """Moments per log n plus the KS distance of the standardized sample
    (x - mu_theory ln n)/sqrt(sigma2_theory ln n) from the standard normal."""

    mu_hat: float
    sigma2_hat: float
    mu_theory: float
    sigma2_theory: float
    ks_statistic: float
    count: int
    degenerate: bool = False

    def __post_init__(self):
        if not 0.0 <= self.ks_statistic <= 1.0:
            raise ValueError("ks_statistic must lie in [0, 1]")


@dataclass(frozen=True)
class GapRow:
    n: int
    exceedance: float
    se: float
    reps: int


def _chunk_ranges(reps: int) -> list:
    return [(lo, min(lo + CHUNK, reps)) for lo in range(0, reps, CHUNK)]


def monte_carlo(spec: McRunSpec) -> np.ndarray:
    """Sample array for the spec: shape (reps,) of depths, or (reps, 2) of
    (bucket, independent) pairs for the coupled sampler.

    Deterministic given (family, n, reps, seed, sampler); the workers field
    is a scheduling hint only.
    """
    cf = spec.family.compiled
    n = spec.n
    seed = np.uint64(spec.seed)
    reps = spec.reps

    if spec.sampler == "coupled":
        y = np.empty(reps, dtype=np.float64)
        x = np.empty(reps, dtype=np.float64)

        def work(lo, hi):
            _kernels.mc_coupled(cf, n, seed, lo, hi, y, x)

    elif spec.sampler == "bucket":
        out = np.empty(reps, dtype=np.float64)

        def work(lo, hi):
            _kernels.mc_bucket(cf, n, seed, lo, hi, out)

    elif spec.sampler == "independent":
        out = np.empty(reps, dtype=np.float64)

        def work(lo, hi):
            _kernels.mc_independent(cf, n, seed, lo, hi, out)

    else:
        out = np.empty(reps, dtype=np.float64)
        cap = _kernels.fenwick_capacity(n + 1)
        scratch = threading.local()

        def work(lo, hi):
            s = getattr(scratch, "arrs", None)
            if s is None:
                s = (
                    np.empty(n + 1, dtype=np.float64),
                    np.empty(n + 1, dtype=np.float64),
                    np.empty(n + 1, dtype=np.int64),
                    np.empty(cap + 1, dtype=np.float64),
                )
                scratch.arrs = s
            _kernels.mc_direct(cf, n, seed, lo, hi, out, s[0], s[1], s[2], s[3], cap)

    ranges = _chunk_ranges(reps)
    if spec.workers == 1 or len(ranges) == 1:
        for lo, hi in ranges:
            work(lo, hi)
    else:
        with ThreadPoolExecutor(max_workers=spec.workers) as pool:
            futures = [pool.submit(work, lo, hi) for lo, hi in ranges]
            for f in futures:
                f.result()

    if spec.sampler == "coupled":
        return np.stack([y, x], axis=1)
    return out


def lln_report(samples: np.ndarray, n: int, mu_theory: float) -> LlnReport:
    """Empirical depth/log n against its limit.  Needs n >= 2 (log 1 = 0)."""
    if n < 2:
        raise ValueError(f"n must be at least 2 for a log-scale report, got {n}")
    mu_hat = float(np.mean(samples)) / math.log(n)
    abs_err = abs(mu_hat - mu_theory)
    rel = abs_err / abs(mu_theory) if mu_theory != 0 else math.inf
    return LlnReport(mu_hat=mu_hat, abs_err=abs_err, rel_err=rel)


def standard_normal_cdf(x: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + erf(np.asarray(x, dtype=np.float64) / math.sqrt(2.0)))


def ks_one_sample_normal(z: np.ndarray) -> float:
    """One-sample Kolmogorov-Smirnov distance of z from the standard normal."""
    z = np.sort(np.asarray(z, dtype=np.float64))
    m = z.size
    if m == 0:
        raise ValueError("need a nonempty sample")
    cdf = standard_normal_cdf(z)
    i = np.arange(1, m + 1, dtype=np.float64)
    d_plus = np.max(i / m - cdf)
    d_minus = np.max(cdf - (i - 1.0) / m)
    return float(max(d_plus, d_minus, 0.0))


def ks_two_sample(a: np.ndarray, b: np.ndarray) -> float:
    a = np.sort(np.asarray(a, dtype=np.float64))
    b = np.sort(np.asarray(b, dtype=np.float64))
    if a.size == 0 or b.size == 0:
        raise ValueError("need two nonempty samples")
    grid = np.concatenate([a, b])
    fa = np.searchsorted(a, grid, side="right") / a.size
    fb = np.searchsorted(b, grid, side="right") / b.size
    return float(np.max(np.abs(fa - fb)))


def _kolmogorov_sf(x: float) -> float:
    # Q(x) = 2 sum_{j>=1} (-1)^{j-1} exp(-2 j^2 x^2)
    if x <= 0:
        return 1.0
    total = 0.0
    for j in range(1, 101):
        term = math.exp(-2.0 * j * j * x * x)
        total += -term if j % 2 == 0 else term
        if term < 1e-18:
            break
    return min(1.0, max(0.0, 2.0 * total))


def ks_critical(alpha: float, count: int) -> float:
    """Asymptotic critical KS distance at level alpha for a sample of size
    count (about 1.63/sqrt(count) at alpha = 0.01)."""
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    if count < 1:
        raise ValueError("count must be positive")
    lo, hi = 1e-9, 5.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if _kolmogorov_sf(mid) > alpha:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi) / math.sqrt(count)


def clt_report(
    samples: np.ndarray, n: int, mu_theory: float, sigma2_theory: float
) -> CltReport:
    """KS shape test of the standardized depths against the standard normal.

    Standardization uses the theoretical constants, not empirical moments,
    so the report tests the stated limit rather than generic normality.
    """
    samples = np.asarray(samples, dtype=np.float64)
    if samples.size < 100:
        raise ValueError(f"need at least 100 replications, got {samples.size}")
    if n < 2:
        raise ValueError(f"n must be at least 2 for a log-scale report, got {n}")
    if not sigma2_theory > 0:
        raise ValueError("sigma2_theory must be positive")
    logn = math.log(n)
    z = (samples - mu_theory * logn) / math.sqrt(sigma2_theory * logn)
    ks = ks_one_sample_normal(z)
    var = float(np.var(samples, ddof=1))
    return CltReport(
        mu_hat=float(np.mean(samples)) / logn,
        sigma2_hat=var / logn,
        mu_theory=float(mu_theory),
        sigma2_theory=float(sigma2_theory),
        ks_statistic=ks,
        count=int(samples.size),
        degenerate=var == 0.0,
    )


def gap_report(
    pairs_by_n: Sequence[tuple], epsilon: float
) -> list:
    """Exceedance of |Y - X|/sqrt(log n) over epsilon for each grid point.

    pairs_by_n holds (n, pairs) entries with pairs shaped (reps, 2); the grid
    must be ascending and each n needs at least 500 replications.  Standard
    errors are binomial.
    """
    if epsilon <= 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    ns = [n for n, _ in pairs_by_n]
    if ns != sorted(ns) or len(set(ns)) != len(ns):
        raise ValueError("grid must be strictly ascending")
    rows = []
    for n, pairs in pairs_by_n:
        pairs = np.asarray(pairs, dtype=np.float64)
        if pairs.ndim != 2 or pairs.shape[1] != 2:
            raise ValueError("coupled pairs must have shape (reps, 2)")
        reps = pairs.shape[0]
        if reps < 500:
            raise ValueError(f"need at least 500 replications per n, got {reps}")
        if n < 2:
            raise ValueError(f"grid entries must be at least 2, got {n}")
        gap = np.abs(pairs[:, 0] - pairs[:, 1]) / math.sqrt(math.log(n))
        p = float(np.mean(gap > epsilon))
        se = math.sqrt(p * (1.0 - p) / reps)
        rows.append(GapRow(n=int(n), exceedance=p, se=se, reps=int(reps)))
    return rows


def exceedance_nonincreasing(rows: Sequence[GapRow], band: float = 2.0) -> bool:
    """True when each consecutive exceedance rise stays within `band` joint
    standard errors (sampling noise, not a real increase)."""
    for prev, cur in zip(rows, rows[1:]):
        slack = band * math.hypot(prev.se, cur.se)
        if cur.exceedance > prev.exceedance + slack:
            return False
    return True


@dataclass(frozen=True)
class ChiSquareReport:
    statistic: float
    dof: int
    p_value: float


def pool_low_expected(
    observed: np.ndarray, expected: np.ndarray, min_expected: float = 5.0
) -> tuple[np.ndarray, np.ndarray]:
    """Merge low-expectation cells (ascending) until every pooled cell has
    expected count >= min_expected; preserves totals."""
    order = np.argsort(expected, kind="stable")
    obs = observed[order].astype(np.float64)
    exp = expected[order].astype(np.float64)
    while exp.size > 1 and exp[0] < min_expected:
        obs[1] += obs[0]
        exp[1] += exp[0]
        obs, exp = obs[1:], exp[1:]
        order2 = np.argsort(exp, kind="stable")
        obs, exp = obs[order2], exp[order2]
    return obs, exp


def chi_square_gof(observed, expected_probs) -> ChiSquareReport:
    """Chi-square goodness of fit with upper-tail p-value via the
    regularized incomplete gamma function."""
    obs = np.asarray(observed, dtype=np.float64)
    probs = np.asarray(expected_probs, dtype=np.float64)
    if obs.shape != probs.shape or obs.ndim != 1 or obs.size < 2:
        raise ValueError("observed and expected_probs must be 1-d, same length >= 2")
    if np.any(obs < 0):
        raise ValueError("observed counts must be nonnegative")
    if np.any(probs < 0) or abs(probs.sum() - 1.0) > 1e-9:
        raise ValueError("expected probs must be nonnegative and sum to 1")
    zero = probs == 0.0
    if np.any(zero):
        if np.any(obs[zero] > 0):
            raise ValueError("nonzero observation in a zero-probability cell")
        obs, probs = obs[~zero], probs[~zero]
    total = obs.sum()
    if total <= 0:
        raise ValueError("observed counts are all zero")
    expected = probs * total
    obs, expected = pool_low_expected(obs, expected)
    if np.any(expected < 5.0):
        raise ValueError("expected counts below 5 even after pooling")
    if expected.size < 2:
        raise ValueError("fewer than 2 cells remain after pooling")
    stat = float(np.sum((obs - expected) ** 2 / expected))
    dof = int(expected.size - 1)
    p = float(gammaincc(dof / 2.0, stat / 2.0))
    return ChiSquareReport(statistic=stat, dof=dof, p_value=p)
