"""Quenched laws: exact distributions given the environment.

Given the weights, D_n and N_n(j) are sums of independent indicators, so
their laws are Poisson-binomial and their characteristic functions are
finite products. Everything here is exact up to floating point.
"""
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Union

import numpy as np
import pandas as pd
from scipy.special import logsumexp

from rrt_lab.env import Environment, self_prob_seq
from rrt_lab.errors import DomainError, OutputError, ResourceError
from rrt_lab.sampler import log_cumsum_exp
from rrt_lab.treegrow import EdgeLenSpec
from rrt_lab.walk import WalkPath

logger = logging.getLogger(__name__)

DEFAULT_DP_CAP = 20_000

EdgeCharFn = Union[EdgeLenSpec, Callable[[int, float], complex]]


@dataclass(frozen=True, eq=False)
class Pmf:
    support: np.ndarray
    mass: np.ndarray

    def __post_init__(self):
        support = np.asarray(self.support, dtype=np.float64)
        mass = np.asarray(self.mass, dtype=np.float64)
        if support.shape != mass.shape or support.ndim != 1:
            raise DomainError("Pmf support and mass must be 1-d arrays of equal length")
        if np.any(np.diff(support) <= 0):
            raise DomainError("Pmf support must be strictly increasing")
        if np.any(mass < 0) or abs(mass.sum() - 1.0) > 1e-10:
            raise DomainError(f"Pmf masses must be >= 0 and sum to 1, got sum {mass.sum()!r}")
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "mass", mass)

    @classmethod
    def point(cls, x: float) -> "Pmf":
        return cls(np.array([x]), np.array([1.0]))

    def mean(self) -> float:
        return float(np.dot(self.support, self.mass))

    def cdf(self, x):
        """Right-continuous CDF, vectorized over x."""
        cum = np.cumsum(self.mass)
        idx = np.searchsorted(self.support, x, side="right")
        return np.where(idx > 0, cum[np.maximum(idx - 1, 0)], 0.0)

    def characteristic(self, t: float) -> complex:
        return complex(np.sum(self.mass * np.exp(1j * t * self.support)))

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"value": self.support, "mass": self.mass})

    def save_csv(self, output_file: Union[str, Path]) -> Path:
        output_path = Path(output_file)
        try:
            self.to_frame().to_csv(output_path, index=False, float_format="%.17g", lineterminator="\n")
        except OSError as e:
            raise OutputError(f"Failed to write PMF CSV {output_path}: {e}") from e
        return output_path


@dataclass(frozen=True)
class CondOutdegReport:
    j: int
    n: int
    mean: float
    pmf: Pmf


def poisson_binomial_pmf(probs: np.ndarray, cap: int = DEFAULT_DP_CAP) -> np.ndarray:
    """Law of a sum of independent Bernoulli(probs) on {0, ..., len(probs)}.

    O(m^2) convolution DP accumulated in extended precision.
    """
    m = len(probs)
    if m > cap:
        raise ResourceError(f"Poisson-binomial DP over {m} indicators exceeds the cap of {cap}")
    pmf = np.zeros(m + 1, dtype=np.longdouble)
    pmf[0] = 1.0
    for i, p in enumerate(np.asarray(probs, dtype=np.longdouble)):
        head = pmf[: i + 1] * p
        pmf[: i + 1] *= 1.0 - p
        pmf[1 : i + 2] += head
    return pmf.astype(np.float64)


def _normalized(mass: np.ndarray) -> np.ndarray:
    # DP roundoff stays far below the 1e-10 Pmf tolerance; fold it back in
    return mass / mass.sum()


# ============================
# 📌 Depth D_n
# ============================
def char_fn(env: Environment, edge_cfs: EdgeCharFn, n: int, t: float) -> complex:
    """phi_n(t) = f_n(t) prod_{j=1}^{n-1} [1 + (f_j(t) - 1) p_j(j)]."""
    env.require(n)
    if n == 0:
        return 1.0 + 0.0j
    if isinstance(edge_cfs, EdgeLenSpec):
        f = np.full(n, edge_cfs.characteristic(t), dtype=np.complex128)
    else:
        f = np.array([edge_cfs(j, t) for j in range(1, n + 1)], dtype=np.complex128)
    p = self_prob_seq(env, n - 1)
    return complex(f[-1] * np.prod(1.0 + (f[:-1] - 1.0) * p))


def exact_depth_pmf(env: Environment, n: int, cap: int = DEFAULT_DP_CAP) -> Pmf:
    """Law of D_n for unit edge lengths: 1 + PoissonBinomial(p_1(1), ..., p_{n-1}(n-1))."""
    env.require(n)
    if n == 0:
        return Pmf.point(0.0)
    mass = poisson_binomial_pmf(self_prob_seq(env, n - 1), cap)
    return Pmf(np.arange(1, n + 1, dtype=np.float64), _normalized(mass))


# ============================
# 📌 Outdegrees N_n(j)
# ============================
class OutdegreeMeanTable:
    """E_w N_n(j) = exp(logw[j]) sum_{k=j}^{n-1} W_k^{-1} for every j <= n.

    The suffix sums of W_k^{-1} are built once in log-space; each lookup is
    then O(1).
    """

    def __init__(self, env: Environment, n: int):
        env.require(n)
        self.env = env
        self.n = n
        # log sum_{k=j}^{n-1} exp(-log W_k), j = 0..n-1
        suffix = log_cumsum_exp(np.ascontiguousarray(-env.log_prefix_mass[:n][::-1]))[::-1]
        self.log_suffix = np.append(suffix, -np.inf)
        log_means = env.logw[: n + 1] + self.log_suffix
        self.means = np.exp(log_means)
        # means below the smallest double are dropped to 0; keep count
        self.underflows = int(np.count_nonzero((self.means == 0.0) & np.isfinite(log_means)))
        if self.underflows:
            logger.debug(f"{self.underflows} conditional mean outdegrees underflowed to 0")

    def __getitem__(self, j: int) -> float:
        if not 0 <= j <= self.n:
            raise DomainError(f"outdegree needs 0 <= j <= n, got j={j}, n={self.n}")
        return float(self.means[j])

    def window_mean(self, j: int, half_width: int) -> float:
        """Average of E_w N_n(i) over i in [j - half_width, j + half_width], clipped to [0, n]."""
        if not 0 <= j <= self.n:
            raise DomainError(f"outdegree needs 0 <= j <= n, got j={j}, n={self.n}")
        if half_width < 0:
            raise DomainError(f"half_width must be >= 0, got {half_width}")
        return float(self.means[max(0, j - half_width) : min(self.n, j + half_width) + 1].mean())

    def profile(self) -> np.ndarray:
        return self.means.copy()


def cond_mean_outdegree(env: Environment, n: int, j: int) -> float:
    if j > n or j < 0:
        raise DomainError(f"outdegree needs 0 <= j <= n, got j={j}, n={n}")
    return OutdegreeMeanTable(env, n)[j]


def outdeg_probs(env: Environment, n: int, j: int) -> np.ndarray:
    """p_{k-1}(j) for k = j+1..n."""
    return np.exp(env.logw[j] - env.log_prefix_mass[j:n])


def exact_outdeg_pmf(env: Environment, n: int, j: int, cap: int = DEFAULT_DP_CAP) -> Pmf:
    if not 0 <= j <= n:
        raise DomainError(f"outdegree needs 0 <= j <= n, got j={j}, n={n}")
    env.require(n)
    if j == n:
        return Pmf.point(0.0)
    mass = poisson_binomial_pmf(outdeg_probs(env, n, j), cap)
    return Pmf(np.arange(n - j + 1, dtype=np.float64), _normalized(mass))


def cond_outdeg_report(env: Environment, n: int, j: int, cap: int = DEFAULT_DP_CAP) -> CondOutdegReport:
    return CondOutdegReport(j=j, n=n, mean=cond_mean_outdegree(env, n, j), pmf=exact_outdeg_pmf(env, n, j, cap))


# ============================
# 📌 Outdegree statistic near tau(n)
# ============================
def _require_product_form(env: Environment) -> None:
    if env.kind != "product_form":
        raise DomainError(f"This statistic needs a product-form environment, got {env.kind}")


def texpect_statistic(env: Environment, n: int, j: int) -> float:
    """exp(S_j - S_tau(n)) / (n - j) * E_w N_n(j)."""
    _require_product_form(env)
    if not 0 <= j < n:
        raise DomainError(f"texpect_statistic needs 0 <= j < n, got j={j}, n={n}")
    table = OutdegreeMeanTable(env, n)
    # S_j - S_tau = max(logw[0..n]) - logw[j]; the logw[j] cancels against E_w N_n(j)
    log_value = np.max(env.logw[: n + 1]) + table.log_suffix[j] - np.log(n - j)
    return float(np.exp(log_value))


def eta_sum_statistic(path: WalkPath, n: int) -> float:
    """1 / sum_{k=0}^n exp(S_tau(n) - S_k)."""
    if n > path.n or n < 0:
        raise DomainError(f"Walk path has {path.n} steps, asked for n = {n}")
    s = path.s[: n + 1]
    return float(np.exp(-logsumexp(s.min() - s)))


def texpect_bounds(env: Environment, n: int) -> tuple[float, float]:
    """Bounds on texpect_statistic(env, n, j) valid for tau(n) <= j < n.

    Lower: eta_sum_statistic. Upper: 1 / sum_{k=0}^{tau(n)} exp(S_tau - S_k).
    """
    _require_product_form(env)
    s = -env.logw[: n + 1]
    tau = int(np.argmin(s))
    lower = np.exp(-logsumexp(s[tau] - s))
    upper = np.exp(-logsumexp(s[tau] - s[: tau + 1]))
    return float(lower), float(upper)

