"""Logarithmic derivative of the characteristic polynomial and its rescalings.

All functions take eigenangles as an array whose last axis runs over the
spectrum, so a stack of spectra of shape ``(samples, N)`` is evaluated in one
call and yields one value per sample.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

POLE_TOL = 1e-14
DEFAULT_NMAX = 100_000


class PoleProximityError(ValueError):
    """The evaluation point sits on (or within tolerance of) an eigenvalue."""

    def __init__(self, index, distance: float):
        super().__init__(f"evaluation point within {distance:.3g} of eigenvalue {index}")
        self.index = index
        self.distance = distance


@dataclass(frozen=True)
class MesoscopicSpec:
    """Matrix size ``n``, mesoscopic scale ``l`` (0 < l < n) and projection (u, v)."""

    n: int
    l: float
    u: float = 1.0
    v: float = 0.0

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n}")
        if not 0 < self.l < self.n:
            raise ValueError(f"need 0 < l < n, got l={self.l}, n={self.n}")

    @property
    def ratio(self) -> float:
        """L/N."""
        return self.l / self.n

    @property
    def radius(self) -> float:
        """1 - L/N, the evaluation point of P'/P."""
        return 1.0 - self.l / self.n

    def with_uv(self, u: float, v: float) -> "MesoscopicSpec":
        return MesoscopicSpec(self.n, self.l, u, v)


def _check_poles(diff: np.ndarray, tol: float = POLE_TOL) -> None:
    dist = np.abs(diff)
    if dist.size and dist.min() <= tol:
        index = np.unravel_index(np.argmin(dist), dist.shape)
        index = index[-1] if len(index) == 1 else index
        raise PoleProximityError(index, float(dist.min()))


def log_deriv(angles, z) -> np.ndarray | complex:
    """P'/P(z) = sum_j 1/(z - exp(i theta_j)).

    ``angles`` is ``(N,)`` or ``(..., N)``; ``z`` is a complex scalar.
    """
    theta = np.asarray(angles, dtype=float)
    diff = complex(z) - np.exp(1j * theta)
    _check_poles(diff)
    out = np.sum(1.0 / diff, axis=-1)
    return complex(out) if np.ndim(out) == 0 else out


def f_value(theta, spec: MesoscopicSpec):
    """f(theta) = (L/N) / ((1 - L/N) - exp(i theta))."""
    return spec.ratio / (spec.radius - np.exp(1j * np.asarray(theta, dtype=float)))


def g_value(theta, spec: MesoscopicSpec):
    return np.real(f_value(theta, spec))


def h_value(theta, spec: MesoscopicSpec):
    return np.imag(f_value(theta, spec))


_WHICH = {"f": f_value, "g": g_value, "h": h_value}


def s_n(angles, spec: MesoscopicSpec, which: str = "f"):
    """Linear statistic sum_j w(theta_j) for w one of f, g, h."""
    try:
        fn = _WHICH[which]
    except KeyError:
        raise ValueError(f"which must be one of 'f', 'g', 'h', got {which!r}") from None
    out = np.sum(fn(angles, spec), axis=-1)
    return out.item() if np.ndim(out) == 0 else out


def q_log_deriv_direct(angles, s):
    """Q'/Q(s) for Q(s) = P(exp(s)), i.e. exp(s) * P'/P(exp(s))."""
    z = np.exp(complex(s))
    return z * log_deriv(angles, z)


def q_log_deriv_lattice(angles, s, n_max: int = DEFAULT_NMAX, tail_correction: bool = False):
    """Truncated lattice expansion of Q'/Q(s).

    Evaluates N/2 + sum_j sum_{|n|<=n_max} 1/(s - i(theta_j + 2 pi n)), adding
    the n and -n terms together as 2w/(w^2 + 4 pi^2 n^2) with w = s - i theta_j.
    The paired tail decays like 1/n^2, so the truncation error is O(N/n_max);
    to leading order it equals sum_j w_j / (2 pi^2 n_max).

    With ``tail_correction`` the omitted tail is added back from the
    Euler-Maclaurin expansion w/(2 pi^2) (1/M - 1/(2M^2) + 1/(6M^3)), M = n_max,
    leaving an O(N/n_max^3) error. The default returns the plain truncated sum.
    """
    if int(n_max) != n_max or n_max < 1:
        raise ValueError(f"n_max must be a positive integer, got {n_max}")
    theta = np.atleast_2d(np.asarray(angles, dtype=float))
    s = complex(s)
    n = np.arange(int(n_max), 0, -1, dtype=float)  # smallest terms first
    four_pi2_n2 = 4.0 * np.pi**2 * n * n
    out = np.empty(theta.shape[0], dtype=complex)
    for row, th in enumerate(theta):
        w = s - 1j * th
        # distance to the nearest lattice pole i(theta_j + 2 pi n)
        _check_poles(w - 2j * np.pi * np.round(w.imag / (2 * np.pi)))
        total = 0.0 + 0.0j
        for wj in w:
            total += np.sum(2.0 * wj / (wj * wj + four_pi2_n2)) + 1.0 / wj
        if tail_correction:
            m = float(n_max)
            total += np.sum(w) / (2 * np.pi**2) * (1 / m - 1 / (2 * m * m) + 1 / (6 * m**3))
        out[row] = th.size / 2.0 + total
    return complex(out[0]) if np.ndim(angles) == 1 else out
