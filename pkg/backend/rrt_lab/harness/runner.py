"""Replicate-parallel execution.

Replicates are independent tasks indexed 0..count-1. Results always come
back in index order, so what a run emits never depends on the worker count.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterable, TypeVar

from tqdm import tqdm

logger = logging.getLogger(__name__)

T = TypeVar("T")


@dataclass(frozen=True)
class ReplicateRunner:
    threads: int = 1
    quiet: bool = False

    def map(self, task: Callable[[int], T], count: int, desc: str = "Replicates") -> list[T]:
        """Run task(i) for i in range(count) and return the results in order."""
        if count <= 0:
            return []
        with tqdm(total=count, desc=desc, disable=self.quiet, leave=False) as progress:
            if self.threads == 1:
                results = []
                for i in range(count):
                    results.append(task(i))
                    progress.update()
                return results

            def tracked(i: int) -> T:
                result = task(i)
                progress.update()
                return result

            with ThreadPoolExecutor(max_workers=self.threads) as pool:
                return list(pool.map(tracked, range(count)))

    def mapper(self, desc: str) -> Callable[[Callable[[int], T], Iterable[int]], list[T]]:
        """Adapter with the builtin ``map`` signature over range(count)."""

        def _map(task: Callable[[int], T], indices: Iterable[int]) -> list[T]:
            return self.map(task, len(indices), desc=desc)

        return _map
