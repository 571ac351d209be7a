"""Closed-form limit laws and the empirical estimate of sigma_m.

- max of Brownian motion on [0, 1]: P(max > x) = 2(1 - Phi(x)), x >= 0;
- generalized arcsine law of tau(n)/n with density
  (sin(pi rho)/pi) t^(rho-1) (1-t)^(-rho);
- outdegree profiles t -> (sin(pi rho)/(pi rho)) ((1-t)/t)^rho and -ln t.
"""
import logging
from dataclasses import dataclass
from typing import Callable, Literal, Optional

import numpy as np
from scipy import integrate, special, stats

from rrt_lab.env import environment_from_path, self_prob_seq
from rrt_lab.errors import DomainError
from rrt_lab.rng import PHASE_CALIBRATION, replicate_stream
from rrt_lab.stats import bootstrap_ci
from rrt_lab.walk import IncrementSpec, sample_path

logger = logging.getLogger(__name__)

MIN_SIGMA_REPS = 100
QUAD_EPSABS = 1e-13


def _check_rho(rho: float) -> None:
    if not 0.0 < rho < 1.0:
        raise DomainError(f"rho must lie in (0, 1), got {rho}")


# ============================
# 📌 Maximum of Brownian motion
# ============================
def max_bm_tail(x: float) -> float:
    """2(1 - Phi(x)) for x >= 0, 1 for x < 0."""
    if x < 0:
        return 1.0
    return float(special.erfc(x / np.sqrt(2.0)))


def max_bm_cdf(x):
    """CDF of max_{0<=u<=1} B(u), vectorized."""
    x = np.asarray(x, dtype=np.float64)
    return np.where(x < 0, 0.0, special.erf(np.maximum(x, 0.0) / np.sqrt(2.0)))


def max_bm_quantile(q: float) -> float:
    if not 0.0 <= q < 1.0:
        raise DomainError(f"quantile level must lie in [0, 1), got {q}")
    return float(stats.norm.ppf(0.5 + q / 2.0))


MAX_BM_MEDIAN = max_bm_quantile(0.5)


# ============================
# 📌 Generalized arcsine law
# ============================
def arcsine_density(t: float, rho: float) -> float:
    _check_rho(rho)
    if not 0.0 < t < 1.0:
        raise DomainError(f"arcsine density is defined on (0, 1), got {t}")
    return float(np.sin(np.pi * rho) / np.pi * t ** (rho - 1.0) * (1.0 - t) ** (-rho))


def arcsine_cdf(x: float, rho: float) -> float:
    """(sin(pi rho)/pi) int_0^x t^(rho-1) (1-t)^(-rho) dt by quadrature.

    Below the split point t = rho the t^(rho-1) singularity is integrated
    with an algebraic weight; above it the complement over [x, 1] is, after
    t -> 1 - t, handled the same way.
    """
    _check_rho(rho)
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"arcsine_cdf needs x in [0, 1], got {x}")
    norm = np.sin(np.pi * rho) / np.pi
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    if x <= rho:
        head, _ = integrate.quad(lambda t: (1.0 - t) ** (-rho), 0.0, x, weight="alg", wvar=(rho - 1.0, 0.0), epsabs=QUAD_EPSABS)
        value = norm * head
    else:
        tail, _ = integrate.quad(lambda u: (1.0 - u) ** (rho - 1.0), 0.0, 1.0 - x, weight="alg", wvar=(-rho, 0.0), epsabs=QUAD_EPSABS)
        value = 1.0 - norm * tail
    return float(np.clip(value, 0.0, 1.0))


# ============================
# 📌 Outdegree profiles
# ============================
def outdeg_profile(t: float, rho: float) -> float:
    _check_rho(rho)
    if not 0.0 < t < 1.0:
        raise DomainError(f"outdegree profile is defined on (0, 1), got {t}")
    return float(np.sin(np.pi * rho) / (np.pi * rho) * ((1.0 - t) / t) ** rho)


def constant_weight_profile(t: float) -> float:
    if not 0.0 < t < 1.0:
        raise DomainError(f"outdegree profile is defined on (0, 1), got {t}")
    return float(-np.log(t))


def profile_mass(rho: float) -> float:
    """Quadrature of outdeg_profile over (0, 1); equals 1."""
    _check_rho(rho)
    value, _ = integrate.quad(lambda t: 1.0, 0.0, 1.0, weight="alg", wvar=(-rho, rho), epsabs=QUAD_EPSABS)
    return float(np.sin(np.pi * rho) / (np.pi * rho) * value)


def outdeg_asymptote(n: int, j: int) -> float:
    """(2/pi) sqrt((n - j)/j): finite-variance asymptote of E N_n(j)."""
    if not 0 < j < n:
        raise DomainError(f"outdeg_asymptote needs 0 < j < n, got j={j}, n={n}")
    return float(2.0 / np.pi * np.sqrt((n - j) / j))


@dataclass(frozen=True)
class LimitLaw:
    kind: Literal["max_bm_tail", "arcsine", "outdeg_profile", "constant_weight_profile"]
    rho: Optional[float] = None

    def __post_init__(self):
        if self.kind in ("arcsine", "outdeg_profile"):
            _check_rho(self.rho)

    def cdf(self, x):
        """Vectorized CDF for the distributional laws."""
        if self.kind == "max_bm_tail":
            return max_bm_cdf(x)
        if self.kind == "arcsine":
            return np.vectorize(lambda v: arcsine_cdf(float(np.clip(v, 0.0, 1.0)), self.rho))(x)
        raise DomainError(f"{self.kind} is a density profile, not a distribution")

    def profile(self, t: float) -> float:
        if self.kind == "outdeg_profile":
            return outdeg_profile(t, self.rho)
        if self.kind == "constant_weight_profile":
            return constant_weight_profile(t)
        raise DomainError(f"{self.kind} has no outdegree profile")


# ============================
# 📌 sigma_m estimation
# ============================
@dataclass(frozen=True)
class SigmaEstimate:
    value: float
    lower: float
    upper: float
    lower_quartile_value: float
    upper_quartile_value: float
    reps: int


def zeta_n_sample(spec: IncrementSpec, n: int, stream: np.random.Generator) -> float:
    """(1/sqrt n) sum_{j<=n} p_j(j) in a fresh product-form environment."""
    env = environment_from_path(sample_path(spec, n, stream))
    return float(self_prob_seq(env, n).sum() / np.sqrt(n))


def sigma_from_zeta_samples(samples, stream: Optional[np.random.Generator] = None, level: float = 0.95) -> SigmaEstimate:
    """Median-match zeta_n samples against the max-of-BM law."""
    z = np.asarray(samples, dtype=np.float64)
    if z.size < MIN_SIGMA_REPS:
        raise DomainError(f"sigma_m estimation needs >= {MIN_SIGMA_REPS} samples, got {z.size}")
    low, high = bootstrap_ci(z, np.median, level=level, stream=stream)
    return SigmaEstimate(
        value=float(np.median(z) / MAX_BM_MEDIAN),
        lower=low / MAX_BM_MEDIAN,
        upper=high / MAX_BM_MEDIAN,
        lower_quartile_value=float(np.quantile(z, 0.25) / max_bm_quantile(0.25)),
        upper_quartile_value=float(np.quantile(z, 0.75) / max_bm_quantile(0.75)),
        reps=int(z.size),
    )


def estimate_sigma_m(
    spec: IncrementSpec, n: int, reps: int, seed: int, map_fn: Callable = map
) -> SigmaEstimate:
    """Estimate sigma_m from ``reps`` independent walks of length n.

    Assumes a zero-mean, finite-variance increment law; that is the caller's
    responsibility. Replicate r draws from the calibration stream of
    ``(seed, r)``; ``map_fn(task, range(reps))`` may run them in parallel.
    """
    if reps < MIN_SIGMA_REPS:
        raise DomainError(f"sigma_m estimation needs reps >= {MIN_SIGMA_REPS}, got {reps}")
    if n < 1:
        raise DomainError("sigma_m estimation needs n >= 1")
    logger.info(f"🔍 Estimating sigma_m from {reps} walks of length {n}")
    samples = list(map_fn(lambda r: zeta_n_sample(spec, n, replicate_stream(seed, r, PHASE_CALIBRATION)), range(reps)))
    estimate = sigma_from_zeta_samples(samples, stream=replicate_stream(seed, reps, PHASE_CALIBRATION))
    logger.info(f"✅ sigma_m ~ {estimate.value:.4f} [{estimate.lower:.4f}, {estimate.upper:.4f}]")
    return estimate
