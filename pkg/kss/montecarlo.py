"""Counter-based seeding, associative moment accumulation and task fan-out."""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
import logging
from typing import Callable, Iterable, TypeVar

import numpy as np

from kss.models.reports import MonteCarloEstimate

logger = logging.getLogger(__name__)

T = TypeVar("T")


def task_seed(root_seed: int, task_id: int) -> np.random.SeedSequence:
    """Sub-seed for one task; depends only on (root_seed, task_id)."""
    return np.random.SeedSequence(int(root_seed), spawn_key=(int(task_id),))


def task_rng(root_seed: int, task_id: int) -> np.random.Generator:
    """Generator for one task; independent of the order tasks run in."""
    return np.random.default_rng(task_seed(root_seed, task_id))


def task_int_seed(root_seed: int, task_id: int) -> int:
    """Integer sub-seed, for APIs that take a plain seed."""
    return int(task_seed(root_seed, task_id).generate_state(1, dtype=np.uint64)[0])


@dataclass
class MomentAccumulator:
    """
    Running count, mean and centred sum of squares.

    merge() uses the pairwise update of Chan et al., so combining partial
    accumulators in any grouping gives the same result up to rounding.
    """

    count: int = 0
    mean: float = 0.0
    m2: float = 0.0

    def add(self, values) -> "MomentAccumulator":
        """Fold a batch of samples into the accumulator."""
        values = np.asarray(values, dtype=float).ravel()
        if values.size == 0:
            return self
        batch_mean = float(values.mean())
        batch = MomentAccumulator(
            count=int(values.size),
            mean=batch_mean,
            m2=float(((values - batch_mean) ** 2).sum()),
        )
        return self.merge(batch)

    def merge(self, other: "MomentAccumulator") -> "MomentAccumulator":
        """Combine with another accumulator in place and return self."""
        if other.count == 0:
            return self
        if self.count == 0:
            self.count, self.mean, self.m2 = other.count, other.mean, other.m2
            return self
        total = self.count + other.count
        delta = other.mean - self.mean
        self.mean += delta * other.count / total
        self.m2 += other.m2 + delta**2 * self.count * other.count / total
        self.count = total
        return self

    @property
    def variance(self) -> float:
        """Unbiased sample variance."""
        return self.m2 / (self.count - 1) if self.count > 1 else 0.0

    @property
    def std_error(self) -> float:
        return float(np.sqrt(self.variance / self.count)) if self.count else float("nan")

    def estimate(self) -> MonteCarloEstimate:
        return MonteCarloEstimate(self.mean, self.std_error, self.count)


def mean_estimate(values) -> MonteCarloEstimate:
    """Sample mean and standard error of a 1-D sample."""
    return MomentAccumulator().add(values).estimate()


def map_tasks(fn: Callable[[int], T], task_ids: Iterable[int], threads: int = 1) -> list[T]:
    """
    Apply fn to each task id and return results in task order.

    Each task must derive its randomness from its own id, so the output does
    not depend on the number of threads.
    """
    task_ids = list(task_ids)
    if threads <= 1 or len(task_ids) <= 1:
        return [fn(task_id) for task_id in task_ids]

    logger.debug(f"Running {len(task_ids)} tasks on {threads} threads")
    with ThreadPoolExecutor(max_workers=threads) as executor:
        return list(executor.map(fn, task_ids))


def split_samples(n_samples: int, chunk: int) -> list[int]:
    """Chunk sizes covering n_samples, each at most chunk."""
    sizes = [chunk] * (n_samples // chunk)
    if n_samples % chunk:
        sizes.append(n_samples % chunk)
    return sizes
