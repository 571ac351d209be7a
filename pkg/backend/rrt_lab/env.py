"""Weight environments {w(j)} kept in log-space.

An Environment stores log w(j) and the log prefix masses log W_r, with
w(0) = 1. Attachment probabilities p_r(j) = w(j) / W_r are always formed as
exp(logw[j] - log W_r), so product-form weights exp(-S_j) never overflow.
"""
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Literal, Optional, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, ValidationError, model_validator

from rrt_lab.errors import ConfigurationError, DomainError, OutputError
from rrt_lab.sampler import log_cumsum_exp
from rrt_lab.walk import WalkPath

logger = logging.getLogger(__name__)

EnvKind = Literal["constant", "power", "stretched_exp", "product_form", "iid_weights", "geometric", "explicit"]


class WeightDistSpec(BaseModel):
    """Law of i.i.d. weights w(1), w(2), ... for the iid_weights model."""

    kind: Literal["constant", "uniform", "exponential", "gamma", "lognormal"] = "constant"
    value: float = 1.0
    low: float = 0.0
    high: float = 2.0
    mean: float = 1.0
    shape: float = 1.0
    sigma: float = 1.0

    @property
    def expectation(self) -> float:
        if self.kind == "constant":
            return self.value
        if self.kind == "uniform":
            return (self.low + self.high) / 2.0
        if self.kind in ("exponential", "gamma"):
            return self.mean
        return float(np.exp(self.sigma**2 / 2.0))

    def sample(self, size: int, stream: np.random.Generator) -> np.ndarray:
        if self.kind == "constant":
            return np.full(size, self.value, dtype=np.float64)
        if self.kind == "uniform":
            return stream.uniform(self.low, self.high, size=size)
        if self.kind == "exponential":
            return stream.exponential(self.mean, size=size)
        if self.kind == "gamma":
            return stream.gamma(self.shape, self.mean / self.shape, size=size)
        return stream.lognormal(0.0, self.sigma, size=size)


class EnvModel(BaseModel):
    """Which weight sequence to build.

    ``path`` drives product_form weights, ``logw`` is taken as-is by the
    explicit model (its first entry must be 0).
    """

    model_config = ConfigDict(arbitrary_types_allowed=True)

    kind: EnvKind = "constant"
    alpha: Optional[float] = None
    a: Optional[float] = None
    path: Optional[WalkPath] = None
    weights: WeightDistSpec = WeightDistSpec()
    logw: Optional[list[float]] = None

    @model_validator(mode="after")
    def _check_params(self):
        if self.kind in ("power", "stretched_exp") and self.alpha is None:
            raise ValueError(f"{self.kind} weights need alpha")
        if self.kind == "stretched_exp" and not 0.0 < self.alpha <= 1.0:
            raise ValueError(f"stretched_exp alpha must lie in (0, 1], got {self.alpha}")
        if self.kind == "geometric" and (self.a is None or not self.a > 0):
            raise ValueError(f"geometric weights need a > 0, got {self.a}")
        if self.kind == "explicit" and (not self.logw or self.logw[0] != 0.0):
            raise ValueError("explicit weights need logw with logw[0] = 0")
        if self.kind == "iid_weights":
            w = self.weights
            bad = (
                (w.kind == "constant" and not w.value > 0)
                or (w.kind == "uniform" and not 0.0 <= w.low < w.high)
                or (w.kind in ("exponential", "gamma") and not (w.mean > 0 and w.shape > 0))
            )
            if bad:
                raise ValueError(f"iid weight law {w.kind} can produce nonpositive weights")
        return self

    @classmethod
    def parse(cls, data: dict) -> "EnvModel":
        try:
            return cls.model_validate(data)
        except ValidationError as e:
            raise ConfigurationError(f"Invalid environment model: {e}") from e


@dataclass(frozen=True, eq=False)
class Environment:
    logw: np.ndarray
    log_prefix_mass: np.ndarray
    kind: str = "explicit"
    path: Optional[WalkPath] = None

    @property
    def n(self) -> int:
        return self.logw.size - 1

    def covers(self, n: int) -> bool:
        return 0 <= n <= self.n

    def require(self, n: int) -> None:
        if not self.covers(n):
            raise DomainError(f"Environment covers n <= {self.n}, asked for n = {n}")


# ============================
# 📌 Construction
# ============================
def _log_weights(model: EnvModel, n: int, stream: Optional[np.random.Generator]) -> np.ndarray:
    j = np.arange(n + 1, dtype=np.float64)
    logw = np.zeros(n + 1)
    if model.kind == "constant":
        return logw
    if model.kind == "power":
        # slowly varying factor fixed to 1
        logw[1:] = model.alpha * np.log(j[1:])
        return logw
    if model.kind == "stretched_exp":
        alpha = model.alpha
        logw[1:] = np.log(alpha) + (alpha - 1.0) * np.log(j[1:]) + j[1:] ** alpha
        return logw
    if model.kind == "geometric":
        return j * np.log(model.a)
    if model.kind == "product_form":
        if model.path is None:
            raise ConfigurationError("product_form weights need a walk path")
        if model.path.n < n:
            raise DomainError(f"Walk path has {model.path.n} steps, environment needs {n}")
        return -model.path.s[: n + 1].copy()
    if model.kind == "explicit":
        if len(model.logw) < n + 1:
            raise DomainError(f"Explicit weights cover n <= {len(model.logw) - 1}, asked for {n}")
        return np.asarray(model.logw[: n + 1], dtype=np.float64)

    if stream is None:
        raise ConfigurationError("iid_weights environments need a random stream")
    w = model.weights.sample(n, stream)
    if np.any(w <= 0.0):
        raise ConfigurationError(f"iid weight law {model.weights.kind} produced a nonpositive weight")
    logw[1:] = np.log(w)
    return logw


def build_environment(model: EnvModel, n: int, stream: Optional[np.random.Generator] = None) -> Environment:
    """Compute log w(0..n) and the streaming log prefix masses in one pass."""
    if n < 0:
        raise DomainError(f"Environment size must be >= 0, got {n}")
    logw = _log_weights(model, n, stream)
    logw.setflags(write=False)
    prefix = log_cumsum_exp(logw)
    prefix.setflags(write=False)
    return Environment(logw=logw, log_prefix_mass=prefix, kind=model.kind, path=model.path)


def environment_from_path(path: WalkPath, n: Optional[int] = None) -> Environment:
    """Product-form environment w(j) = exp(-S_j)."""
    return build_environment(EnvModel(kind="product_form", path=path), path.n if n is None else n)


# ============================
# 📌 Attachment probabilities
# ============================
def attach_prob(env: Environment, r: int, j: int) -> float:
    """p_r(j) = w(j) / W_r."""
    if j > r:
        raise DomainError(f"p_r(j) needs j <= r, got j={j}, r={r}")
    if j < 0:
        raise DomainError(f"Vertex index must be >= 0, got {j}")
    env.require(r)
    return float(np.exp(env.logw[j] - env.log_prefix_mass[r]))


def attach_probs(env: Environment, r: int) -> np.ndarray:
    """The whole distribution p_r(0..r)."""
    env.require(r)
    return np.exp(env.logw[: r + 1] - env.log_prefix_mass[r])


def self_prob_seq(env: Environment, n: int) -> np.ndarray:
    """p_j(j) for j = 1..n."""
    env.require(n)
    return np.exp(env.logw[1 : n + 1] - env.log_prefix_mass[1 : n + 1])


def zeta(env: Environment, n: int, h_n: float, edge_means: Union[float, np.ndarray] = 1.0) -> float:
    """(1/h_n) sum_{j=1}^n p_j(j) E Y(j)."""
    if not h_n > 0:
        raise DomainError(f"h_n must be > 0, got {h_n}")
    means = np.asarray(edge_means, dtype=np.float64)
    if means.ndim and means.shape != (n,):
        raise DomainError(f"edge_means has {means.size} entries, expected {n}")
    return float(np.sum(self_prob_seq(env, n) * means) / h_n)


def iid_weight_sanity(model: EnvModel, n: int, stream: np.random.Generator) -> float:
    """(1/n) sum_{j=1}^n w(j) for an iid_weights model."""
    if model.kind != "iid_weights":
        raise DomainError(f"iid_weight_sanity needs an iid_weights model, got {model.kind}")
    if n < 1:
        raise DomainError("iid_weight_sanity needs n >= 1")
    env = build_environment(model, n, stream)
    return float(np.mean(np.exp(env.logw[1:])))


# ============================
# 📌 Serialization
# ============================
def environment_to_frame(env: Environment) -> pd.DataFrame:
    return pd.DataFrame(
        {"j": np.arange(env.n + 1), "logw": env.logw, "log_prefix_mass": env.log_prefix_mass}
    )


def save_environment_csv(env: Environment, output_file: Union[str, Path]) -> Path:
    output_path = Path(output_file)
    try:
        environment_to_frame(env).to_csv(output_path, index=False, float_format="%.17g", lineterminator="\n")
    except OSError as e:
        raise OutputError(f"Failed to write environment CSV {output_path}: {e}") from e
    logger.info(f"💾 Environment saved to {output_path}")
    return output_path
