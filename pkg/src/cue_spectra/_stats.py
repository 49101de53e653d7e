"""Small estimators shared by the Monte Carlo campaigns."""

from __future__ import annotations

import numpy as np

DEFAULT_BATCHES = 50


def batch_means(values, n_batches: int = DEFAULT_BATCHES) -> tuple[float, float]:
    """Mean and batch-means standard error of a 1-d sample.

    The sample is cut into ``n_batches`` contiguous batches (fewer when the
    sample is shorter); the standard error is the spread of the batch
    averages divided by ``sqrt(n_batches)``. A sample of length one has
    standard error 0.
    """
    x = np.asarray(values, dtype=float).ravel()
    if x.size == 0:
        raise ValueError("batch_means needs at least one value")
    mean = float(np.mean(x))
    b = min(n_batches, x.size)
    if b < 2:
        return mean, 0.0
    batch_avg = np.array([np.mean(chunk) for chunk in np.array_split(x, b)])
    return mean, float(np.std(batch_avg, ddof=1) / np.sqrt(b))


def batch_estimate(values, estimator, n_batches: int = DEFAULT_BATCHES,
                   min_batch: int = 2) -> tuple[float, float]:
    """Apply ``estimator`` to the full sample and to contiguous batches.

    Returns the full-sample estimate and ``std(batch estimates)/sqrt(b)``.
    """
    x = np.asarray(values, dtype=float).ravel()
    full = float(estimator(x))
    b = min(n_batches, x.size // min_batch)
    if b < 2:
        return full, 0.0
    per_batch = np.array([estimator(chunk) for chunk in np.array_split(x, b)])
    return full, float(np.std(per_batch, ddof=1) / np.sqrt(b))


def heavy_tail_share(values, top_fraction: float = 0.01) -> float:
    """Share of the total contributed by the largest ``top_fraction`` of values."""
    x = np.sort(np.abs(np.asarray(values, dtype=float).ravel()))
    total = x.sum()
    if total == 0.0:
        return 0.0
    k = max(1, int(np.ceil(top_fraction * x.size)))
    return float(x[-k:].sum() / total)
