"""Local-zero approximation of P'/P near z = 1 and the quantities that control its error.

With z0 = 1 - 1/N and z0 <= z <= 1,

    P'/P(z) = sum_{|theta_j| < c/N} 1/(z - z_j) + X1 + X2 - X3,

where X1 = P'/P(z0), X2 collects the differences 1/(z - z_j) - 1/(z0 - z_j)
over the zeros outside the window and X3 is the local sum evaluated at z0.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from ._stats import batch_means, heavy_tail_share
from .logderiv import _check_poles, log_deriv, q_log_deriv_direct
from .sampler import iter_cue_angles

GRID_POINTS = 1024
GRID_SLACK = 1e-3
TIE_TOL = 1e-15


def z0_for(n: int) -> float:
    return 1.0 - 1.0 / n


def _window(theta: np.ndarray, c: float) -> np.ndarray:
    if not 0 < c <= 1:
        raise ValueError(f"c must lie in (0, 1], got {c}")
    return np.abs(theta) < c / theta.shape[-1]


def _inverse_terms(theta: np.ndarray, z: complex) -> np.ndarray:
    diff = np.asarray(z, dtype=complex) - np.exp(1j * theta)
    _check_poles(diff)
    return 1.0 / diff


def _scalar(x):
    return complex(x) if np.ndim(x) == 0 else x


def local_sum(angles, z, c: float):
    """Sum of 1/(z - z_j) over the eigenangles with |theta_j| < c/N."""
    theta = np.asarray(angles, dtype=float)
    terms = _inverse_terms(theta, z)
    return _scalar(np.sum(np.where(_window(theta, c), terms, 0.0), axis=-1))


@dataclass
class SelbergDecomposition:
    """Pieces of P'/P(z); each field is a scalar or one value per spectrum."""

    local_sum: np.ndarray
    error: np.ndarray
    x1: np.ndarray
    x2: np.ndarray
    x3: np.ndarray
    full: np.ndarray

    @staticmethod
    def _relative(a, b):
        scale = np.maximum(np.abs(a), 1.0)
        return np.abs(a - b) / scale

    def residuals(self) -> tuple[float, float]:
        """Worst relative residuals of full = local + error and error = x1 + x2 - x3.

        Residuals are absolute when the reference value is smaller than one.
        """
        r1 = self._relative(self.full, self.local_sum + self.error)
        r2 = self._relative(self.error, self.x1 + self.x2 - self.x3)
        return float(np.max(r1)), float(np.max(r2))


def decompose(angles, z, c: float) -> SelbergDecomposition:
    """Split P'/P(z) into the local sum and X1 + X2 - X3.

    ``z`` may be complex; the moment bounds concern real z in [1 - 1/N, 1].
    """
    theta = np.asarray(angles, dtype=float)
    z0 = z0_for(theta.shape[-1])
    inside = _window(theta, c)
    at_z = _inverse_terms(theta, z)
    at_z0 = _inverse_terms(theta, z0)
    full = np.sum(at_z, axis=-1)
    local = np.sum(np.where(inside, at_z, 0.0), axis=-1)
    x1 = np.sum(at_z0, axis=-1)
    x2 = np.sum(np.where(inside, 0.0, at_z - at_z0), axis=-1)
    x3 = np.sum(np.where(inside, at_z0, 0.0), axis=-1)
    return SelbergDecomposition(
        local_sum=_scalar(local), error=_scalar(x1 + x2 - x3),
        x1=_scalar(x1), x2=_scalar(x2), x3=_scalar(x3), full=_scalar(full),
    )


def x2_comparison_constant(angles, z, c: float):
    """max over zeros outside the window of c |z0 - z_j| / |z - z_j|.

    The X2 estimate needs this to stay bounded by an absolute constant.
    Returns 0 for spectra with no zero outside the window.
    """
    theta = np.asarray(angles, dtype=float)
    z0 = z0_for(theta.shape[-1])
    zj = np.exp(1j * theta)
    ratio = c * np.abs(z0 - zj) / np.abs(complex(z) - zj)
    ratio = np.where(_window(theta, c), 0.0, ratio)
    out = np.max(ratio, axis=-1)
    return float(out) if np.ndim(out) == 0 else out


def inverse_square_sum(angles, z0=None):
    theta = np.asarray(angles, dtype=float)
    if z0 is None:
        z0 = z0_for(theta.shape[-1])
    terms = _inverse_terms(theta, z0)
    out = np.sum(np.abs(terms) ** 2, axis=-1)
    return float(out) if np.ndim(out) == 0 else out


def claim_ratio(angles):
    """sum_j |z0 - z_j|^-2 / (N (N + |X1|)), bounded if the inverse-square claim holds."""
    theta = np.asarray(angles, dtype=float)
    n = theta.shape[-1]
    z0 = z0_for(n)
    x1 = np.abs(log_deriv(theta, z0))
    return inverse_square_sum(theta, z0) / (n * (n + x1))


def positivity_gap(angles):
    """N/2 - Re Q'/Q(s0) at s0 = log(1 - 1/N); a sum of positive terms."""
    theta = np.atleast_2d(np.asarray(angles, dtype=float))
    n = theta.shape[-1]
    s0 = np.log(z0_for(n))
    out = np.array([n / 2.0 - q_log_deriv_direct(th, s0).real for th in theta])
    return float(out[0]) if np.ndim(angles) == 1 else out


@dataclass
class CircleStep:
    center: complex
    radius: float
    point: complex
    center_value: float
    grid_max: float
    grid_mean: float
    slack: float
    tie_indices: list[int] = field(default_factory=list)

    @property
    def certified(self) -> bool:
        # |F(center)| <= mean over the circle (mean-value inequality) <= max on the grid
        return self.center_value <= self.grid_mean + self.slack and self.grid_mean <= self.grid_max * (1 + GRID_SLACK)


@dataclass
class WkChainReport:
    points: list[complex]
    steps: list[CircleStep]
    base_radius: float

    @property
    def values(self) -> list[float]:
        return [s.grid_max for s in self.steps]

    @property
    def log_lhs(self) -> float:
        """log |P'/P(z0)|^{2K}."""
        return 2 * len(self.steps) * np.log(self.steps[0].center_value)

    @property
    def log_rhs(self) -> float:
        """log prod_k |P'/P(w_k)|^2."""
        return float(sum(2 * np.log(v) for v in self.values))

    @property
    def chain_holds(self) -> bool:
        return self.log_lhs <= self.log_rhs

    @property
    def certified(self) -> bool:
        return all(s.certified for s in self.steps)

    @property
    def min_spacing(self) -> float:
        """Smallest pairwise distance between the w_k, in units of r = 1/(2N)."""
        pts = np.asarray(self.points)
        if pts.size < 2:
            return np.inf
        d = np.abs(pts[:, None] - pts[None, :])
        return float(d[np.triu_indices(pts.size, 1)].min() / self.base_radius)


def wk_chain(angles, k_moment: int, m: int = GRID_POINTS) -> WkChainReport:
    """Greedy chain of circle maxima of |P'/P| starting from z0.

    w_0 = z0 and w_k maximises |P'/P| over ``m`` equispaced points of the
    circle centred at w_{k-1} with radius r/2^k, r = 1/(2N). Each step records
    the trapezoid mean over the circle; ties for the maximum (within 1e-15
    relative) are resolved towards the smallest grid index and recorded.
    """
    if k_moment < 1:
        raise ValueError(f"k_moment must be positive, got {k_moment}")
    theta = np.asarray(angles, dtype=float)
    n = theta.shape[-1]
    r = 1.0 / (2 * n)
    phase = np.exp(2j * np.pi * np.arange(m) / m)
    center = complex(z0_for(n))
    points, steps = [], []
    for k in range(1, k_moment + 1):
        radius = r / 2**k
        grid = center + radius * phase
        vals = np.abs(_inverse_terms(theta, grid[:, None]).sum(axis=-1))
        best = int(np.argmax(vals))
        top = vals[best]
        ties = [int(i) for i in np.flatnonzero(top - vals <= TIE_TOL * top) if i != best]
        step = CircleStep(
            center=center, radius=radius, point=complex(grid[best]),
            center_value=float(abs(log_deriv(theta, center))),
            grid_max=float(top), grid_mean=float(vals.mean()),
            slack=GRID_SLACK * float(vals.max() - vals.min()), tie_indices=ties,
        )
        steps.append(step)
        points.append(step.point)
        center = step.point
    return WkChainReport(points=points, steps=steps, base_radius=r)


@dataclass
class MomentEstimate:
    """Monte Carlo estimate of E|E|^{2K} and its (c/N)^{2K}-normalised version."""

    n: int
    c: float
    k_moment: int
    z: float
    mean: float
    std_error: float
    normalized: float
    normalized_se: float
    samples: int
    heavy_tail: bool


def moment_from_values(abs_sq, k_moment: int = 1, n: int = 1, c: float = 1.0,
                       z: float = 1.0) -> MomentEstimate:
    """Moment estimate from precomputed |E|^2 values.

    Flags a heavy tail (and warns) when the top 1% of samples carry more than
    half of the sum.
    """
    vals = np.asarray(abs_sq, dtype=float) ** k_moment
    mean, se = batch_means(vals)
    heavy = vals.size >= 100 and heavy_tail_share(vals) > 0.5
    if heavy:
        warnings.warn(f"heavy tail: top 1% of samples dominate E|E|^{2 * k_moment}", RuntimeWarning, stacklevel=2)
    norm = (c / n) ** (2 * k_moment)
    return MomentEstimate(n=n, c=c, k_moment=k_moment, z=z, mean=mean, std_error=se,
                          normalized=mean * norm, normalized_se=se * norm,
                          samples=int(vals.size), heavy_tail=bool(heavy))


def error_moment_from_angles(angles, c: float, k_moment: int = 1, z: float = 1.0) -> MomentEstimate:
    theta = np.atleast_2d(np.asarray(angles, dtype=float))
    n = theta.shape[-1]
    err = decompose(theta, z, c).error
    return moment_from_values(np.abs(err) ** 2, k_moment, n, c, z)


def error_moment_estimate(n: int, c: float, k_moment: int, samples: int, seed: int,
                          z: float = 1.0, workers: int = 1) -> MomentEstimate:
    """Sample CUE spectra and estimate E|E|^{2K} at ``z`` (default 1)."""
    if samples < 100:
        raise ValueError(f"need at least 100 samples, got {samples}")
    z0 = z0_for(n)
    if not z0 <= z <= 1:
        raise ValueError(f"z must lie in [{z0}, 1], got {z}")
    angles = np.array(list(iter_cue_angles(n, seed, samples, workers)))
    return error_moment_from_angles(angles, c, k_moment, z)
