"""Verification primitives for simulated samples."""
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import stats

from rrt_lab.conditional_laws import Pmf
from rrt_lab.errors import DomainError


@dataclass(frozen=True, eq=False)
class EmpiricalDist:
    sorted_samples: np.ndarray

    @classmethod
    def from_samples(cls, samples) -> "EmpiricalDist":
        return cls(np.sort(np.asarray(samples, dtype=np.float64)))

    @property
    def size(self) -> int:
        return self.sorted_samples.size

    def cdf(self, x):
        return np.searchsorted(self.sorted_samples, x, side="right") / self.size

    def quantile(self, q):
        return np.quantile(self.sorted_samples, q)


@dataclass(frozen=True)
class FitReport:
    slope: float
    intercept: float
    stderr: float


def ks_distance(emp: EmpiricalDist, cdf: Callable) -> float:
    """sup |F_hat - F| over sample points, using both one-sided jumps.

    ``cdf`` must accept an array.
    """
    m = emp.size
    if m == 0:
        raise DomainError("KS distance needs at least one sample")
    f = np.asarray(cdf(emp.sorted_samples), dtype=np.float64)
    i = np.arange(1, m + 1)
    d_plus = np.max(i / m - f)
    d_minus = np.max(f - (i - 1) / m)
    return float(np.clip(max(d_plus, d_minus), 0.0, 1.0))


def ks_distance_discrete(emp: EmpiricalDist, pmf: Pmf) -> float:
    """sup_x |F_hat(x) - F(x)| for a lattice law, both CDFs right-continuous."""
    if emp.size == 0:
        raise DomainError("KS distance needs at least one sample")
    points = np.union1d(pmf.support, emp.sorted_samples)
    return float(np.max(np.abs(emp.cdf(points) - pmf.cdf(points))))


def ks_two_sample(a, b) -> float:
    if len(a) == 0 or len(b) == 0:
        raise DomainError("Two-sample KS needs nonempty samples")
    return float(stats.ks_2samp(a, b).statistic)


def ks_critical_value(m: int, level: float = 0.99) -> float:
    """Quantile of the one-sample Kolmogorov statistic for m samples."""
    return float(stats.kstwo.ppf(level, m))


def tv_distance(p: Pmf, q: Pmf) -> float:
    support = np.union1d(p.support, q.support)
    p_mass = np.zeros(support.size)
    q_mass = np.zeros(support.size)
    p_mass[np.searchsorted(support, p.support)] = p.mass
    q_mass[np.searchsorted(support, q.support)] = q.mass
    return float(min(1.0, 0.5 * np.abs(p_mass - q_mass).sum()))


def loglog_slope(xs: Sequence[float], ys: Sequence[float]) -> FitReport:
    """Least-squares fit of log y on log x."""
    x = np.asarray(xs, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)
    if x.shape != y.shape or x.size < 2:
        raise DomainError("loglog_slope needs at least 2 paired points")
    if np.any(x <= 0) or np.any(y <= 0):
        raise DomainError("loglog_slope needs positive inputs")
    if np.all(x == x[0]):
        raise DomainError("loglog_slope needs at least two distinct x values")
    fit = stats.linregress(np.log(x), np.log(y))
    stderr = float(fit.stderr) if np.isfinite(fit.stderr) else 0.0
    return FitReport(slope=float(fit.slope), intercept=float(fit.intercept), stderr=stderr)


def mean_with_ci(samples, level: float = 0.95) -> tuple[float, float]:
    """Mean and normal-approximation half width."""
    x = np.asarray(samples, dtype=np.float64)
    if x.size < 2:
        raise DomainError("mean_with_ci needs at least 2 samples")
    z = stats.norm.ppf(0.5 + level / 2.0)
    return float(x.mean()), float(z * x.std(ddof=1) / np.sqrt(x.size))


def chi_square_goodness(counts, probs) -> float:
    """p-value of Pearson's chi-square test against cell probabilities."""
    observed = np.asarray(counts, dtype=np.float64)
    p = np.asarray(probs, dtype=np.float64)
    if observed.size < 2 or observed.shape != p.shape:
        raise DomainError("chi-square needs at least 2 cells with matching probabilities")
    expected = observed.sum() * p / p.sum()
    if np.any(expected < 5.0):
        raise DomainError(f"chi-square cells need expected counts >= 5, smallest is {expected.min():.3g}")
    return float(stats.chisquare(observed, expected).pvalue)


def chi_square_uniformity(counts) -> float:
    counts = np.asarray(counts, dtype=np.float64)
    return chi_square_goodness(counts, np.ones(counts.size))


def bootstrap_ci(
    samples,
    statistic: Callable = np.median,
    level: float = 0.95,
    n_resamples: int = 999,
    stream: Optional[np.random.Generator] = None,
) -> tuple[float, float]:
    """Percentile bootstrap interval for a one-sample statistic."""
    x = np.asarray(samples, dtype=np.float64)
    if x.size < 2:
        raise DomainError("bootstrap needs at least 2 samples")
    if np.all(x == x[0]):
        value = float(statistic(x))
        return value, value
    result = stats.bootstrap(
        (x,),
        statistic,
        confidence_level=level,
        n_resamples=n_resamples,
        method="percentile",
        vectorized=False,
        random_state=stream,
    )
    return float(result.confidence_interval.low), float(result.confidence_interval.high)
