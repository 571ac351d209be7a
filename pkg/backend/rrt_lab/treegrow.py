"""Growing recursive trees in a fixed environment.

Trees are flat parent arrays: vertex k attaches to parent[k] < k, with edge
length edge_len[k]. ``grow`` realizes the tree itself; the ``*_fast`` samplers
draw D_n or N_n(j) directly from their independent-indicator representations.
"""
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Literal, Optional, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, ValidationError, model_validator

from rrt_lab.env import Environment, self_prob_seq
from rrt_lab.errors import ConfigurationError, DomainError, OutputError
from rrt_lab.sampler import depths_from_parents, grow_parents

logger = logging.getLogger(__name__)


class EdgeLenSpec(BaseModel):
    """Law of the i.i.d. edge lengths Y(j) >= 0.

    A custom law supplies ``sampler(stream, size)`` and its declared ``mean``;
    ``char_fn(t)`` is optional and only needed for exact characteristic
    functions.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True)

    kind: Literal["unit", "deterministic", "exponential", "custom"] = "unit"
    c: float = 1.0
    mean: Optional[float] = None
    sampler: Optional[Callable[[np.random.Generator, int], np.ndarray]] = None
    char_fn: Optional[Callable[[float], complex]] = None

    @model_validator(mode="after")
    def _check_params(self):
        if self.kind == "deterministic" and not (self.c >= 0 and np.isfinite(self.c)):
            raise ValueError(f"deterministic length must be finite and >= 0, got {self.c}")
        if self.kind == "exponential" and not (self.mean is not None and 0 < self.mean < np.inf):
            raise ValueError(f"exponential lengths need a finite mean > 0, got {self.mean}")
        if self.kind == "custom":
            if self.sampler is None:
                raise ValueError("custom lengths need a sampler")
            if self.mean is None or not 0 <= self.mean < np.inf:
                raise ValueError("custom lengths need a declared finite mean")
        return self

    @classmethod
    def parse(cls, data: dict) -> "EdgeLenSpec":
        try:
            return cls.model_validate(data)
        except ValidationError as e:
            raise ConfigurationError(f"Invalid edge-length spec: {e}") from e

    @property
    def is_unit(self) -> bool:
        return self.kind == "unit" or (self.kind == "deterministic" and self.c == 1.0)

    @property
    def expectation(self) -> float:
        if self.kind == "unit":
            return 1.0
        if self.kind == "deterministic":
            return self.c
        return float(self.mean)

    def sample(self, size: int, stream: np.random.Generator) -> np.ndarray:
        if self.kind == "unit":
            return np.ones(size)
        if self.kind == "deterministic":
            return np.full(size, self.c)
        if self.kind == "exponential":
            return stream.exponential(self.mean, size=size)
        y = np.asarray(self.sampler(stream, size), dtype=np.float64)
        if np.any(y < 0):
            raise DomainError("custom edge-length sampler produced a negative length")
        return y

    def characteristic(self, t: float) -> complex:
        """E exp(itY)."""
        if self.kind == "unit":
            return complex(np.exp(1j * t))
        if self.kind == "deterministic":
            return complex(np.exp(1j * t * self.c))
        if self.kind == "exponential":
            return 1.0 / (1.0 - 1j * t * self.mean)
        if self.char_fn is None:
            raise DomainError("custom edge lengths have no characteristic function")
        return complex(self.char_fn(t))


UNIT_LENGTHS = EdgeLenSpec(kind="unit")


@dataclass(frozen=True, eq=False)
class RecursiveTree:
    parent: np.ndarray
    edge_len: np.ndarray
    rebuilds: int = 0

    @property
    def n(self) -> int:
        return self.parent.size - 1

    def is_recursive(self) -> bool:
        """parent[k] < k for every non-root vertex."""
        k = np.arange(1, self.n + 1)
        return bool(np.all((self.parent[1:] >= 0) & (self.parent[1:] < k)))


@dataclass(frozen=True)
class TreeStats:
    depths: np.ndarray
    outdegrees: np.ndarray


# ============================
# 📌 Tree engine
# ============================
def grow(env: Environment, lens: EdgeLenSpec, n: int, stream: np.random.Generator) -> RecursiveTree:
    """Grow T_0, ..., T_n; vertex k picks parent j with probability p_{k-1}(j)."""
    if n < 0:
        raise DomainError(f"Tree size must be >= 0, got {n}")
    if env.n < n:
        raise DomainError(f"Environment covers n <= {env.n}, cannot grow {n} vertices")
    uniforms = stream.random(n)
    parent, rebuilds = grow_parents(env.logw, uniforms, max(n, 1))
    edge_len = np.zeros(n + 1)
    edge_len[1:] = lens.sample(n, stream)
    if rebuilds:
        logger.debug(f"⚠️ sampler rebuilt {rebuilds} times while growing {n} vertices")
    return RecursiveTree(parent=parent, edge_len=edge_len, rebuilds=int(rebuilds))


def tree_stats(tree: RecursiveTree) -> TreeStats:
    depths = depths_from_parents(tree.parent, tree.edge_len)
    outdegrees = np.bincount(tree.parent[1:], minlength=tree.n + 1)
    return TreeStats(depths=depths, outdegrees=outdegrees)


# ============================
# 📌 Indicator representations
# ============================
def depth_sample_fast(env: Environment, lens: EdgeLenSpec, n: int, stream: np.random.Generator) -> float:
    """One draw of D_n = sum_{j<n} I_j Y(j) + Y(n), P(I_j = 1) = p_j(j)."""
    return float(depth_samples_fast(env, lens, n, 1, stream)[0])


def depth_samples_fast(
    env: Environment, lens: EdgeLenSpec, n: int, reps: int, stream: np.random.Generator
) -> np.ndarray:
    """``reps`` independent D_n draws in the same environment."""
    env.require(n)
    if n == 0:
        return np.zeros(reps)
    p = self_prob_seq(env, n - 1)
    out = np.empty(reps)
    rows = max(1, 1_000_000 // n)
    for start in range(0, reps, rows):
        m = min(rows, reps - start)
        hits = stream.random((m, n - 1)) < p
        if lens.is_unit:
            out[start : start + m] = hits.sum(axis=1) + 1.0
        else:
            y = lens.sample(m * n, stream).reshape(m, n)
            out[start : start + m] = (hits * y[:, :-1]).sum(axis=1) + y[:, -1]
    return out


def outdeg_sample_fast(env: Environment, n: int, j: int, stream: np.random.Generator) -> int:
    """One draw of N_n(j) as a sum of Bernoulli(p_{k-1}(j)), k = j+1..n."""
    return int(outdeg_samples_fast(env, n, j, 1, stream)[0])


def outdeg_samples_fast(env: Environment, n: int, j: int, reps: int, stream: np.random.Generator) -> np.ndarray:
    if not 0 <= j <= n:
        raise DomainError(f"outdegree needs 0 <= j <= n, got j={j}, n={n}")
    env.require(n)
    if j == n:
        return np.zeros(reps, dtype=np.int64)
    p = np.exp(env.logw[j] - env.log_prefix_mass[j:n])
    out = np.empty(reps, dtype=np.int64)
    rows = max(1, 1_000_000 // (n - j))
    for start in range(0, reps, rows):
        m = min(rows, reps - start)
        out[start : start + m] = np.count_nonzero(stream.random((m, n - j)) < p, axis=1)
    return out


# ============================
# 📌 Serialization
# ============================
def tree_to_frame(tree: RecursiveTree, stats: Optional[TreeStats] = None) -> pd.DataFrame:
    stats = stats or tree_stats(tree)
    return pd.DataFrame(
        {
            "k": np.arange(tree.n + 1),
            "parent": tree.parent,
            "edge_len": tree.edge_len,
            "depth": stats.depths,
        }
    )


def save_tree_csv(tree: RecursiveTree, output_file: Union[str, Path]) -> Path:
    output_path = Path(output_file)
    try:
        tree_to_frame(tree).to_csv(output_path, index=False, float_format="%.17g", lineterminator="\n")
    except OSError as e:
        raise OutputError(f"Failed to write tree CSV {output_path}: {e}") from e
    logger.info(f"💾 Tree with {tree.n} vertices saved to {output_path}")
    return output_path
