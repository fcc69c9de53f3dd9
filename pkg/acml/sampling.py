"""Seeded point samples, chunked sweeps and residual statistics."""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel, Field, field_validator

logger = logging.getLogger(__name__)

DEFAULT_CHUNK = 64


class SampleSpec(BaseModel):
    """Where and how densely residuals are sampled."""
    box: List[Tuple[float, float]] = Field(description='Per-coordinate closed interval [low, high].')
    count: int = Field(200, ge=1, description='Number of sample points.')
    seed: int = Field(42, description='Seed of the point generator.')
    tolerance: float = Field(1e-8, gt=0, description='Residual tolerance for verdicts.')

    @field_validator('box')
    @classmethod
    def _intervals_nonempty(cls, box):
        if not box:
            raise ValueError('box needs at least one interval')
        for low, high in box:
            if not low <= high:
                raise ValueError(f'empty interval [{low}, {high}]')
        return box

    @property
    def dim(self) -> int:
        return len(self.box)

    @classmethod
    def cube(cls, dim: int, half_width: float = 1.0, **kwargs) -> 'SampleSpec':
        return cls(box=[(-half_width, half_width)] * dim, **kwargs)


def sample_points(spec: SampleSpec) -> np.ndarray:
    """``spec.count`` points uniform in ``spec.box``; identical seeds give identical sequences."""
    rng = np.random.default_rng(spec.seed)
    low = np.array([b[0] for b in spec.box])
    high = np.array([b[1] for b in spec.box])
    return rng.uniform(low, high, size=(spec.count, spec.dim))


def random_vectors(spec: SampleSpec, count: int, size: int, stream: int = 1) -> np.ndarray:
    """Seeded test-vector components in ``[-1, 1]``, independent of the point stream."""
    rng = np.random.default_rng([spec.seed, stream])
    return rng.uniform(-1.0, 1.0, size=(count, size))


def sweep(fn: Callable[[np.ndarray], np.ndarray], points: np.ndarray, workers: int = 1,
          chunk: int = DEFAULT_CHUNK) -> np.ndarray:
    """``fn`` over fixed-size chunks of ``points``, concatenated in order.

    The first chunk runs on the calling thread so that lazily compiled fields are
    built before fan-out; chunking does not depend on ``workers``.
    """
    points = np.atleast_2d(points)
    chunks = [points[i:i + chunk] for i in range(0, len(points), chunk)]
    if not chunks:
        return np.empty((0,))
    first = fn(chunks[0])
    if len(chunks) == 1:
        return first
    if workers <= 1:
        rest = [fn(c) for c in chunks[1:]]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rest = list(pool.map(fn, chunks[1:]))
    return np.concatenate([first] + rest, axis=0)


@dataclass(frozen=True)
class SweepOptions:
    workers: int = 1
    chunk: int = DEFAULT_CHUNK

    def map(self, fn: Callable[[np.ndarray], np.ndarray], points: np.ndarray) -> np.ndarray:
        return sweep(fn, points, self.workers, self.chunk)


class ResidualStats(BaseModel):
    """Max and mean of per-point residuals with the worst point."""
    max_residual: float
    mean_residual: float
    witness: Optional[List[float]] = None
    component: Optional[List[int]] = None

    def passes(self, tolerance: float) -> bool:
        return self.max_residual <= tolerance


def residual_stats(values: np.ndarray, points: np.ndarray) -> ResidualStats:
    """Statistics of ``|values|`` where ``values[p, ...]`` belongs to ``points[p]``."""
    values = np.abs(np.asarray(values, dtype=float))
    if values.size == 0:
        return ResidualStats(max_residual=0.0, mean_residual=0.0)
    if values.ndim == 1:
        values = values[:, None]
    flat = values.reshape(values.shape[0], -1)
    frame = pd.DataFrame({'residual': flat.max(axis=1), 'component': flat.argmax(axis=1)})
    row = int(frame['residual'].idxmax())
    component = np.unravel_index(int(frame.loc[row, 'component']), values.shape[1:])
    return ResidualStats(
        max_residual=float(frame['residual'].max()),
        mean_residual=float(frame['residual'].mean()),
        witness=[float(v) for v in points[row]],
        component=[int(c) for c in component],
    )


def merge_stats(stats: Sequence[ResidualStats]) -> ResidualStats:
    """The stats with the largest max; means averaged."""
    if not stats:
        return ResidualStats(max_residual=0.0, mean_residual=0.0)
    worst = max(stats, key=lambda s: s.max_residual)
    return worst.model_copy(update={'mean_residual': float(np.mean([s.mean_residual for s in stats]))})
