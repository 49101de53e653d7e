"""Haar-random unitary matrices and their eigenangle spectra.

Randomness is keyed by ``(master_seed, stream_index)`` through numpy's
``SeedSequence`` feeding a counter-based Philox generator. Batches of
spectra are cut into fixed-size blocks, block ``b`` always drawing from
stream ``b``, so the output does not depend on how many worker processes
produced it.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

SAMPLES_PER_STREAM = 64
UNITARY_ATOL = 1e-12
SPOT_CHECK_EVERY = 100

_MAX_SEED = 2**64 - 1


class EigensolverError(RuntimeError):
    """Raised when the dense eigensolver fails on a sampled matrix."""

    def __init__(self, sample_index: int, message: str = "eigensolver did not converge"):
        super().__init__(f"sample {sample_index}: {message}")
        self.sample_index = sample_index


@dataclass
class RngStream:
    """One reproducible substream of a seeded campaign.

    The stream is stateful: consecutive draws advance it. Two instances built
    from the same ``(master_seed, stream_index)`` produce identical sequences.
    """

    master_seed: int
    stream_index: int = 0
    _generator: np.random.Generator | None = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        if not 0 <= int(self.master_seed) <= _MAX_SEED:
            raise ValueError(f"master_seed must be a 64-bit unsigned integer, got {self.master_seed}")
        if int(self.stream_index) < 0:
            raise ValueError(f"stream_index must be non-negative, got {self.stream_index}")

    @property
    def generator(self) -> np.random.Generator:
        if self._generator is None:
            seq = np.random.SeedSequence(int(self.master_seed), spawn_key=(int(self.stream_index),))
            self._generator = np.random.Generator(np.random.Philox(seq))
        return self._generator


def _as_generator(rng) -> np.random.Generator:
    if isinstance(rng, RngStream):
        return rng.generator
    if isinstance(rng, np.random.Generator):
        return rng
    if rng is None or isinstance(rng, (int, np.integer)):
        return np.random.default_rng(rng)
    raise TypeError(f"cannot use {type(rng).__name__} as a random source")


def _check_n(n) -> int:
    if int(n) != n or n < 1:
        raise ValueError(f"matrix size must be a positive integer, got {n}")
    return int(n)


def _ginibre(n: int, gen: np.random.Generator, size: int | None) -> np.ndarray:
    # one (2, n, n) draw per matrix keeps prefixes of a stream stable
    count = 1 if size is None else size
    z = np.empty((count, n, n), dtype=complex)
    for i in range(count):
        g = gen.standard_normal((2, n, n))
        z[i] = (g[0] + 1j * g[1]) / np.sqrt(2.0)
    return z[0] if size is None else z


def haar_from_ginibre(z: np.ndarray) -> np.ndarray:
    """Map complex Ginibre matrices (stacked on the leading axes) to Haar unitaries.

    Q from the QR factorisation is right-multiplied by the phases of diag(R);
    without this correction the distribution of Q is not Haar.
    """
    q, r = np.linalg.qr(z)
    d = np.diagonal(r, axis1=-2, axis2=-1)
    phases = d / np.abs(d)
    return q * phases[..., None, :]


def sample_haar_unitary(n: int, rng=None, size: int | None = None) -> np.ndarray:
    """Draw one Haar unitary of size ``n`` (or a stack of ``size`` of them).

    ``rng`` may be an :class:`RngStream`, a numpy ``Generator`` or a seed.
    """
    n = _check_n(n)
    gen = _as_generator(rng)
    return haar_from_ginibre(_ginibre(n, gen, size))


def is_unitary(u: np.ndarray, atol: float = UNITARY_ATOL) -> bool:
    u = np.asarray(u)
    n = u.shape[-1]
    gram = u @ np.conj(np.swapaxes(u, -1, -2))
    return bool(np.max(np.abs(gram - np.eye(n))) <= atol)


def eigenangles(u: np.ndarray) -> np.ndarray:
    """Sorted eigenangles in (-pi, pi] of a unitary matrix or a stack of them.

    Eigenvalues come from the dense Schur-based solver. Their small radial
    drift is irrelevant because only the argument is kept; an argument of
    exactly -pi is mapped to +pi.
    """
    u = np.asarray(u, dtype=complex)
    if u.ndim < 2 or u.shape[-1] != u.shape[-2]:
        raise ValueError(f"expected square matrices, got shape {u.shape}")
    try:
        lam = np.linalg.eigvals(u)
    except np.linalg.LinAlgError:
        stack = u.reshape(-1, u.shape[-1], u.shape[-1])
        for i, m in enumerate(stack):
            try:
                np.linalg.eigvals(m)
            except np.linalg.LinAlgError as exc:
                raise EigensolverError(i) from exc
        raise
    theta = np.angle(lam / np.abs(lam))
    theta[theta <= -np.pi] = np.pi
    return np.sort(theta, axis=-1)


def check_angles(angles: np.ndarray) -> None:
    """Raise ``ValueError`` unless every spectrum lies in (-pi, pi] and is sorted."""
    a = np.asarray(angles, dtype=float)
    if np.any(a <= -np.pi) or np.any(a > np.pi):
        raise ValueError("eigenangles must lie in (-pi, pi]")
    if a.shape[-1] > 1 and np.any(np.diff(a, axis=-1) < 0):
        raise ValueError("eigenangles must be sorted ascending")


def _block(n: int, seed: int, block_index: int, count: int) -> np.ndarray:
    stream = RngStream(seed, block_index)
    u = sample_haar_unitary(n, stream, size=count)
    offset = block_index * SAMPLES_PER_STREAM
    for i in range(0, count):
        if (offset + i) % SPOT_CHECK_EVERY == 0 and not is_unitary(u[i], max(UNITARY_ATOL, 1e-15 * n)):
            raise RuntimeError(f"sample {offset + i}: sampled matrix is not unitary")
    try:
        return eigenangles(u)
    except EigensolverError as exc:
        raise EigensolverError(offset + exc.sample_index) from exc


def _block_task(args):
    return _block(*args)


def _block_plan(count: int):
    blocks = []
    start = 0
    index = 0
    while start < count:
        size = min(SAMPLES_PER_STREAM, count - start)
        blocks.append((index, size))
        start += size
        index += 1
    return blocks


def iter_cue_angles(n: int, seed: int, count: int, workers: int = 1) -> Iterator[np.ndarray]:
    """Yield ``count`` independent CUE spectra in deterministic order."""
    n = _check_n(n)
    if int(count) != count or count < 1:
        raise ValueError(f"count must be a positive integer, got {count}")
    if workers < 1:
        raise ValueError(f"workers must be at least 1, got {workers}")
    tasks = [(n, int(seed), b, size) for b, size in _block_plan(int(count))]
    if workers == 1 or len(tasks) == 1:
        results = map(_block_task, tasks)
        for block in results:
            yield from block
        return
    with ProcessPoolExecutor(max_workers=workers) as pool:
        # map preserves task order, so merging is a plain concatenation
        for block in pool.map(_block_task, tasks):
            yield from block


def sample_cue_angles(n: int, seed: int, count: int, workers: int = 1) -> np.ndarray:
    """Array of shape ``(count, n)`` holding sorted CUE eigenangle spectra."""
    return np.array(list(iter_cue_angles(n, seed, count, workers)), dtype=float).reshape(int(count), int(n))


def nearest_spacing_fraction(angles: np.ndarray, threshold: float) -> float:
    """Fraction of nearest-neighbour gaps (on the circle) below ``threshold``."""
    a = np.atleast_2d(np.asarray(angles, dtype=float))
    gaps = np.diff(a, axis=-1)
    wrap = 2 * np.pi - (a[:, -1] - a[:, 0])
    all_gaps = np.concatenate([gaps, wrap[:, None]], axis=-1)
    return float(np.mean(all_gaps < threshold))
