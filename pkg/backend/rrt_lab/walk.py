"""Random-walk environments and their fluctuation functionals.

A walk S_0 = 0, S_j = theta_1 + ... + theta_j drives the product-form weights
w(j) = exp(-S_j). This module samples such walks and computes the running
extremes, the leftmost argmin tau(n), ladder epochs, and Monte Carlo
estimates of the positivity parameter rho and of the lattice series phi.
"""
import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Literal, Optional

import numpy as np
from pydantic import BaseModel, ValidationError, model_validator
from scipy import stats

from rrt_lab.errors import ConfigurationError, DomainError

logger = logging.getLogger(__name__)

# Rows of increments drawn per batch by the replicate estimators.
_BATCH_CELLS = 2_000_000

IncrementKind = Literal["gaussian", "rademacher", "lattice_with_atom", "stable", "custom_table"]


# ============================
# 📌 Increment specification
# ============================
class IncrementSpec(BaseModel):
    """Law of the i.i.d. walk increment theta."""

    kind: IncrementKind = "gaussian"
    sigma: float = 1.0
    p0: float = 0.0
    alpha: Optional[float] = None
    beta: float = 0.0
    values: Optional[list[float]] = None
    probs: Optional[list[float]] = None
    # custom tables are lattice only when declared so
    lattice: bool = False

    @model_validator(mode="after")
    def _check_ranges(self):
        if self.kind == "gaussian" and not self.sigma > 0:
            raise ValueError(f"gaussian sigma must be > 0, got {self.sigma}")
        if self.kind == "lattice_with_atom" and not 0.0 <= self.p0 <= 1.0:
            raise ValueError(f"lattice_with_atom p0 must lie in [0, 1], got {self.p0}")
        if self.kind == "stable":
            if self.alpha is None or not 0.0 < self.alpha < 2.0:
                raise ValueError(f"stable alpha must lie in (0, 2), got {self.alpha}")
            if not -1.0 <= self.beta <= 1.0:
                raise ValueError(f"stable beta must lie in [-1, 1], got {self.beta}")
        if self.kind == "custom_table":
            if not self.values or not self.probs or len(self.values) != len(self.probs):
                raise ValueError("custom_table needs values and probs of equal, nonzero length")
            if any(p < 0 for p in self.probs):
                raise ValueError("custom_table probs must be nonnegative")
            if abs(sum(self.probs) - 1.0) > 1e-12:
                raise ValueError(f"custom_table probs sum to {sum(self.probs)!r}, not 1")
        return self

    @classmethod
    def parse(cls, data: dict) -> "IncrementSpec":
        """Validate raw config data, raising ConfigurationError on failure."""
        try:
            return cls.model_validate(data)
        except ValidationError as e:
            raise ConfigurationError(f"Invalid increment spec: {e}") from e

    @property
    def is_lattice(self) -> bool:
        if self.kind in ("rademacher", "lattice_with_atom"):
            return True
        return self.kind == "custom_table" and self.lattice

    @property
    def is_symmetric(self) -> bool:
        """True when theta and -theta have the same law (so rho = 1/2)."""
        if self.kind in ("gaussian", "rademacher", "lattice_with_atom"):
            return True
        if self.kind == "stable":
            return self.beta == 0.0
        if self.kind == "custom_table":
            table = dict(zip(self.values, self.probs))
            return all(abs(table.get(-v, 0.0) - p) <= 1e-12 for v, p in table.items())
        return False

    @property
    def is_degenerate_at_zero(self) -> bool:
        if self.kind == "lattice_with_atom":
            return self.p0 == 1.0
        if self.kind == "custom_table":
            return all(v == 0.0 or p == 0.0 for v, p in zip(self.values, self.probs))
        return False

    def sample(self, size, stream: np.random.Generator) -> np.ndarray:
        """Draw i.i.d. increments of the given shape."""
        if self.kind == "gaussian":
            return stream.normal(0.0, self.sigma, size=size)
        if self.kind == "rademacher":
            return stream.integers(0, 2, size=size).astype(np.float64) * 2.0 - 1.0
        if self.kind == "lattice_with_atom":
            u = stream.random(size=size)
            half = (1.0 - self.p0) / 2.0
            return np.where(u < half, -1.0, np.where(u < 2.0 * half, 1.0, 0.0))
        if self.kind == "stable":
            return _chambers_mallows_stuck(self.alpha, self.beta, size, stream)
        return stream.choice(np.asarray(self.values, dtype=np.float64), size=size, p=self.probs)


def _chambers_mallows_stuck(alpha: float, beta: float, size, stream: np.random.Generator) -> np.ndarray:
    """Standard stable variates, unit scale, zero location (S1 parametrization)."""
    u = np.pi * (stream.random(size=size) - 0.5)
    w = stream.exponential(1.0, size=size)
    if alpha == 1.0:
        half_pi = np.pi / 2.0
        t1 = (half_pi + beta * u) * np.tan(u)
        t2 = beta * np.log((half_pi * w * np.cos(u)) / (half_pi + beta * u))
        return (t1 - t2) / half_pi
    zeta = beta * np.tan(np.pi * alpha / 2.0)
    theta0 = np.arctan(zeta) / alpha
    t1 = np.sin(alpha * (u + theta0)) / (np.cos(alpha * theta0) * np.cos(u)) ** (1.0 / alpha)
    t2 = (np.cos(alpha * theta0 + (alpha - 1.0) * u) / w) ** ((1.0 - alpha) / alpha)
    return t1 * t2


# ============================
# 📌 Paths and functionals
# ============================
@dataclass(frozen=True, eq=False)
class WalkPath:
    """A trajectory S_0 = 0, ..., S_n with lazily cached functionals."""

    s: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.s, dtype=np.float64)
        if s.ndim != 1 or s.size == 0:
            raise DomainError("A walk path needs at least S_0")
        if s[0] != 0.0:
            raise DomainError(f"A walk path must start at 0, got S_0={s[0]}")
        s.setflags(write=False)
        object.__setattr__(self, "s", s)

    @property
    def n(self) -> int:
        return self.s.size - 1

    @cached_property
    def running_min(self) -> np.ndarray:
        return np.minimum.accumulate(self.s)

    @cached_property
    def running_max(self) -> np.ndarray:
        return np.maximum.accumulate(self.s)

    @cached_property
    def tau(self) -> int:
        # np.argmin returns the first occurrence, i.e. the leftmost minimum
        return int(np.argmin(self.s))

    @property
    def minimum(self) -> float:
        """L_n."""
        return float(self.running_min[-1])


@dataclass(frozen=True)
class LadderReport:
    descending_epochs: np.ndarray
    ascending_epochs: np.ndarray
    descending_heights: np.ndarray
    ascending_heights: np.ndarray


@dataclass(frozen=True)
class ProportionEstimate:
    """A Monte Carlo proportion with its binomial confidence interval."""

    value: float
    lower: float
    upper: float
    successes: int
    trials: int

    def covers(self, x: float) -> bool:
        return self.lower <= x <= self.upper


@dataclass(frozen=True)
class PhiEstimate:
    value: float
    exact: bool
    diverges: bool = False


def sample_path(spec: IncrementSpec, n: int, stream: np.random.Generator) -> WalkPath:
    """Run n steps of the walk from S_0 = 0."""
    if n < 0:
        raise DomainError(f"Walk length must be >= 0, got {n}")
    s = np.empty(n + 1, dtype=np.float64)
    s[0] = 0.0
    if n:
        np.cumsum(spec.sample(n, stream), out=s[1:])
    return WalkPath(s)


def running_min(path: WalkPath) -> np.ndarray:
    return path.running_min


def running_max_variants(path: WalkPath) -> tuple[np.ndarray, np.ndarray]:
    """Return (M, M_tilde): maxima over [0, k] and over [1, k].

    M_tilde[k - 1] is the max over S_1..S_k, so it has n entries.
    """
    if path.n == 0:
        raise DomainError("M_tilde is undefined for an empty walk (n = 0)")
    return path.running_max, np.maximum.accumulate(path.s[1:])


def argmin_leftmost(path: WalkPath) -> int:
    return path.tau


def ladder_epochs(path: WalkPath) -> LadderReport:
    """Strict descending and strict ascending ladder epochs, both starting at 0."""
    s = path.s
    low = path.running_min
    high = path.running_max
    descending = np.concatenate(([0], np.flatnonzero(s[1:] < low[:-1]) + 1))
    ascending = np.concatenate(([0], np.flatnonzero(s[1:] > high[:-1]) + 1))
    return LadderReport(
        descending_epochs=descending,
        ascending_epochs=ascending,
        descending_heights=s[descending],
        ascending_heights=s[ascending],
    )


# ============================
# 📌 Monte Carlo estimators
# ============================
def _row_batches(reps: int, n: int):
    rows = max(1, _BATCH_CELLS // max(n, 1))
    start = 0
    while start < reps:
        stop = min(reps, start + rows)
        yield stop - start
        start = stop


def _proportion(successes: int, trials: int, level: float) -> ProportionEstimate:
    ci = stats.binomtest(successes, trials).proportion_ci(confidence_level=level, method="wilson")
    return ProportionEstimate(
        value=successes / trials,
        lower=float(ci.low),
        upper=float(ci.high),
        successes=successes,
        trials=trials,
    )


def estimate_rho(
    spec: IncrementSpec, n: int, reps: int, stream: np.random.Generator, level: float = 0.99
) -> ProportionEstimate:
    """Fraction of replicates with S_n > 0 (ties at 0 count as failures)."""
    if n < 1 or reps < 1:
        raise DomainError(f"estimate_rho needs n, reps >= 1, got n={n}, reps={reps}")
    positive = 0
    for rows in _row_batches(reps, n):
        endpoints = spec.sample((rows, n), stream).sum(axis=1)
        positive += int(np.count_nonzero(endpoints > 0.0))
    estimate = _proportion(positive, reps, level)
    logger.info(f"✅ rho estimate {estimate.value:.4f} [{estimate.lower:.4f}, {estimate.upper:.4f}] from {reps} paths")
    return estimate


def spitzer_average(
    spec: IncrementSpec, n: int, reps: int, stream: np.random.Generator, level: float = 0.99
) -> ProportionEstimate:
    """Estimate the Cesaro mean (1/n) sum_{k<=n} P(S_k > 0).

    The CI treats the per-path fractions as i.i.d. and uses a normal
    approximation; successes/trials count path-steps.
    """
    if n < 1 or reps < 1:
        raise DomainError(f"spitzer_average needs n, reps >= 1, got n={n}, reps={reps}")
    fractions = []
    for rows in _row_batches(reps, n):
        paths = np.cumsum(spec.sample((rows, n), stream), axis=1)
        fractions.append(np.count_nonzero(paths > 0.0, axis=1) / n)
    per_path = np.concatenate(fractions)
    mean = float(per_path.mean())
    if reps > 1:
        half = float(stats.norm.ppf(0.5 + level / 2.0) * per_path.std(ddof=1) / np.sqrt(reps))
    else:
        half = 0.0
    return ProportionEstimate(
        value=mean,
        lower=max(0.0, mean - half),
        upper=min(1.0, mean + half),
        successes=int(round(per_path.sum() * n)),
        trials=reps * n,
    )


def estimate_phi(
    spec: IncrementSpec, jmax: int, reps: int = 0, stream: Optional[np.random.Generator] = None
) -> PhiEstimate:
    """Partial sum of phi = sum_j (1/j) P(S_j = 0) up to jmax.

    Non-lattice walks give 0 by definition. Rademacher walks use the exact
    binomial return probabilities; other lattice walks use ``reps`` Monte
    Carlo paths.
    """
    if jmax < 1:
        raise DomainError("estimate_phi needs jmax >= 1")
    if not spec.is_lattice:
        return PhiEstimate(value=0.0, exact=True)
    if spec.is_degenerate_at_zero:
        logger.warning("⚠️ Walk is identically 0: the phi series is harmonic and diverges")
        return PhiEstimate(value=float("inf"), exact=True, diverges=True)

    j = np.arange(1, jmax + 1)
    if spec.kind == "rademacher":
        returns = np.where(j % 2 == 0, stats.binom.pmf(j // 2, j, 0.5), 0.0)
        return PhiEstimate(value=float(np.sum(returns / j)), exact=True)

    if reps < 1 or stream is None:
        raise DomainError("Monte Carlo phi estimation needs reps >= 1 and a stream")
    zeros = np.zeros(jmax, dtype=np.int64)
    for rows in _row_batches(reps, jmax):
        paths = np.cumsum(spec.sample((rows, jmax), stream), axis=1)
        zeros += np.count_nonzero(paths == 0.0, axis=0)
    return PhiEstimate(value=float(np.sum(zeros / reps / j)), exact=False)
