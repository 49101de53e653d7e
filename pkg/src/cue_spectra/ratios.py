"""Averages of products of logarithmic derivatives over U(N).

For shift sets A, B with positive real parts,

    J(A; B) = E prod_{a in A} (-e^{-a}) P'/P(e^{-a}) prod_{b in B} (-e^{-b}) P*'/P*(e^{-b}),

with P* the characteristic polynomial of U^*. :func:`j_star` evaluates the
exact combinatorial (ratios-formula) expression, :func:`j_weyl` integrates
over eigenangles with the Weyl density, and :func:`j_monte_carlo` averages
over Haar samples.
"""

from __future__ import annotations

import cmath
import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ._stats import batch_means
from .logderiv import log_deriv
from .sampler import iter_cue_angles

MAX_SHIFTS = 3
POLE_TOL = 1e-8
ZERO_ARG_TOL = 1e-12
MIN_SHIFT_SEPARATION = 1e-6
WEYL_POINTS = 400


class RatioPoleError(ValueError):
    def __init__(self, x: complex, where: str = ""):
        msg = f"argument {x} is within {POLE_TOL} of a pole of z"
        super().__init__(f"{msg} ({where})" if where else msg)
        self.x = x


def _check_arg(x: complex) -> complex:
    x = complex(x)
    nearest = 2j * math.pi * round(x.imag / (2 * math.pi))
    if abs(x - nearest) < POLE_TOL:
        raise RatioPoleError(x)
    return x


def z_fn(x) -> complex:
    """z(x) = (1 - e^{-x})^{-1}."""
    x = _check_arg(x)
    return 1.0 / (1.0 - cmath.exp(-x))


def z_logd(x) -> complex:
    """z'/z(x) = -1/(e^x - 1)."""
    x = _check_arg(x)
    return -1.0 / complex(np.expm1(x))


def z_logd_prime(x) -> complex:
    """(z'/z)'(x) = e^x/(e^x - 1)^2."""
    x = _check_arg(x)
    return cmath.exp(x) / complex(np.expm1(x)) ** 2


@dataclass(frozen=True)
class RatioSpec:
    """Shift sets A (``shifts_a``) and B (``shifts_b``) and the matrix size ``n``."""

    shifts_a: tuple[complex, ...]
    shifts_b: tuple[complex, ...]
    n: int

    def __init__(self, shifts_a: Sequence[complex], shifts_b: Sequence[complex], n: int):
        object.__setattr__(self, "shifts_a", tuple(complex(a) for a in shifts_a))
        object.__setattr__(self, "shifts_b", tuple(complex(b) for b in shifts_b))
        object.__setattr__(self, "n", n)
        if int(n) != n or n < 1:
            raise ValueError(f"n must be a positive integer, got {n}")
        for name, shifts in (("A", self.shifts_a), ("B", self.shifts_b)):
            if any(s.real <= 0 for s in shifts):
                raise ValueError(f"every shift in {name} needs a positive real part")
            for s, t in itertools.combinations(shifts, 2):
                if abs(s - t) < MIN_SHIFT_SEPARATION:
                    raise ValueError(f"shifts in {name} must be separated by at least {MIN_SHIFT_SEPARATION}")

    @property
    def k_moment(self) -> int:
        return max(len(self.shifts_a), len(self.shifts_b))

    def conjugate_swap(self) -> "RatioSpec":
        """Spec with A and B exchanged and every shift conjugated."""
        return RatioSpec([b.conjugate() for b in self.shifts_b], [a.conjugate() for a in self.shifts_a], self.n)


@dataclass
class JStarTerm:
    """One (S, T, matching) contribution to J*; indices refer to A and B."""

    subset_s: tuple[int, ...]
    subset_t: tuple[int, ...]
    matching: tuple[tuple[int, int], ...]
    singletons_a: tuple[int, ...]
    singletons_b: tuple[int, ...]
    value: complex


def _partial_matchings(rest_a, rest_b):
    """All ways to pair some of ``rest_a`` with distinct members of ``rest_b``."""
    for p in range(min(len(rest_a), len(rest_b)) + 1):
        for chosen_a in itertools.combinations(rest_a, p):
            for chosen_b in itertools.permutations(rest_b, p):
                yield tuple(zip(chosen_a, chosen_b))


def _z_product(left, right, skip_zero=False):
    out = 1.0 + 0.0j
    for x in left:
        for y in right:
            arg = x + y
            if skip_zero and abs(arg) < ZERO_ARG_TOL:
                continue
            out *= z_fn(arg)
    return out


def _fsum_complex(values) -> complex:
    values = list(values)
    return complex(math.fsum(v.real for v in values), math.fsum(v.imag for v in values))


def enumerate_j_star(spec: RatioSpec) -> list[JStarTerm]:
    """Every (S, T, matching) term of J* with its value.

    Same-side blocks contribute zero and are never generated.
    """
    a, b = spec.shifts_a, spec.shifts_b
    if len(a) > MAX_SHIFTS or len(b) > MAX_SHIFTS:
        raise ValueError(f"at most {MAX_SHIFTS} shifts per side are supported")
    n = spec.n
    terms = []
    for size in range(min(len(a), len(b)) + 1):
        for s_idx in itertools.combinations(range(len(a)), size):
            for t_idx in itertools.combinations(range(len(b)), size):
                s_vals = [a[i] for i in s_idx]
                t_vals = [b[j] for j in t_idx]
                where = f"S={s_idx}, T={t_idx}"
                try:
                    prefactor = cmath.exp(-n * (sum(s_vals) + sum(t_vals)))
                    prefactor *= _z_product(s_vals, t_vals) * _z_product([-x for x in s_vals], [-y for y in t_vals])
                    prefactor /= _z_product(s_vals, [-x for x in s_vals], skip_zero=True)
                    prefactor /= _z_product(t_vals, [-y for y in t_vals], skip_zero=True)
                except RatioPoleError as exc:
                    raise RatioPoleError(exc.x, where) from None
                rest_a = [i for i in range(len(a)) if i not in s_idx]
                rest_b = [j for j in range(len(b)) if j not in t_idx]
                for matching in _partial_matchings(rest_a, rest_b):
                    paired_a = {i for i, _ in matching}
                    paired_b = {j for _, j in matching}
                    lone_a = tuple(i for i in rest_a if i not in paired_a)
                    lone_b = tuple(j for j in rest_b if j not in paired_b)
                    try:
                        value = prefactor
                        for i, j in matching:
                            value *= z_logd_prime(a[i] + b[j])
                        for i in lone_a:
                            value *= (sum(z_logd(a[i] - x) for x in s_vals)
                                      - sum(z_logd(a[i] + y) for y in t_vals))
                        for j in lone_b:
                            value *= (sum(z_logd(b[j] - y) for y in t_vals)
                                      - sum(z_logd(b[j] + x) for x in s_vals))
                    except RatioPoleError as exc:
                        raise RatioPoleError(exc.x, f"{where}, matching={matching}") from None
                    terms.append(JStarTerm(s_idx, t_idx, matching, lone_a, lone_b, complex(value)))
    return terms


def j_star(spec: RatioSpec, trace: bool = False):
    """Exact ratios-formula value of J(A; B).

    With ``trace=True`` returns ``(value, terms)`` where ``terms`` lists every
    enumerated :class:`JStarTerm`.
    """
    terms = enumerate_j_star(spec)
    value = _fsum_complex(t.value for t in terms)
    return (value, terms) if trace else value


def j_integrand(angles, spec: RatioSpec) -> np.ndarray:
    """Per-spectrum integrand of J(A; B); U^* has eigenangles -theta_j."""
    theta = np.atleast_2d(np.asarray(angles, dtype=float))
    out = np.ones(theta.shape[0], dtype=complex)
    for alpha in spec.shifts_a:
        w = cmath.exp(-alpha)
        out *= -w * log_deriv(theta, w)
    for beta in spec.shifts_b:
        w = cmath.exp(-beta)
        out *= -w * log_deriv(-theta, w)
    return out


@dataclass
class MonteCarloEstimate:
    """Sample mean with batch-means standard errors of its real and imaginary parts."""

    value: complex
    std_error: complex
    samples: int

    def agrees_with(self, target: complex, n_se: float = 3.0) -> bool:
        re_ok = abs(self.value.real - target.real) <= n_se * self.std_error.real
        im_ok = abs(self.value.imag - target.imag) <= n_se * self.std_error.imag
        return bool(re_ok and im_ok)


def j_monte_carlo_from_angles(spec: RatioSpec, angles) -> MonteCarloEstimate:
    vals = j_integrand(angles, spec)
    re, re_se = batch_means(vals.real)
    im, im_se = batch_means(vals.imag)
    return MonteCarloEstimate(complex(re, im), complex(re_se, im_se), int(vals.size))


def j_monte_carlo(spec: RatioSpec, samples: int, seed: int, workers: int = 1) -> MonteCarloEstimate:
    if not spec.shifts_a and not spec.shifts_b:
        return MonteCarloEstimate(1.0 + 0.0j, 0.0j, int(samples))
    if samples < 1000:
        raise ValueError(f"need at least 1000 samples, got {samples}")
    angles = np.array(list(iter_cue_angles(spec.n, seed, samples, workers)))
    return j_monte_carlo_from_angles(spec, angles)


def _weyl_sum(spec: RatioSpec, points: int, integrand_factors=True) -> complex:
    n = spec.n
    theta = 2 * np.pi * np.arange(points) / points
    e = np.exp(1j * theta)
    # one-angle contributions to each log-derivative factor
    fa = [-cmath.exp(-a) / (cmath.exp(-a) - e) for a in spec.shifts_a]
    fb = [-cmath.exp(-b) / (cmath.exp(-b) - np.conj(e)) for b in spec.shifts_b]
    norm = 1.0 / (math.factorial(n) * points**n)
    if n == 1:
        val = np.ones(points, dtype=complex)
        if integrand_factors:
            for f in fa + fb:
                val = val * f
        return complex(np.sum(val) * norm)
    if n == 2:
        vand = np.abs(e[:, None] - e[None, :]) ** 2
        val = vand.astype(complex)
        if integrand_factors:
            for f in fa + fb:
                val = val * (f[:, None] + f[None, :])
        return complex(np.sum(val) * norm)
    total = 0.0 + 0.0j
    pair = np.abs(e[:, None] - e[None, :]) ** 2
    for i in range(points):
        d1 = np.abs(e[i] - e) ** 2
        val = (pair * d1[:, None] * d1[None, :]).astype(complex)
        if integrand_factors:
            for f in fa + fb:
                val *= f[i] + f[:, None] + f[None, :]
        total += np.sum(val)
    return complex(total * norm)


def j_weyl(spec: RatioSpec, points: int = WEYL_POINTS) -> complex:
    """J(A; B) by tensor trapezoid quadrature against the Weyl density.

    The density (1/N!) prod_{j<k} |e^{i theta_j} - e^{i theta_k}|^2 is applied
    on a ``points``^N grid over [0, 2 pi)^N. Only N <= 3 is supported.
    """
    if spec.n > 3:
        raise ValueError(f"Weyl quadrature supports N <= 3, got {spec.n}")
    return _weyl_sum(spec, points)


def weyl_normalization(n: int, points: int = WEYL_POINTS) -> float:
    """Integral of the Weyl density on the grid (exactly 1 for points > N)."""
    return _weyl_sum(RatioSpec([], [], n), points, integrand_factors=False).real


def j_weyl_convergence(spec: RatioSpec, points: int = WEYL_POINTS) -> float:
    """|J(points) - J(2 points)|, the self-consistency of the quadrature."""
    return abs(j_weyl(spec, points) - j_weyl(spec, 2 * points))


def expected_trace_moment(n: int, k: int = 1) -> float:
    """E|Tr U^k|^2 = min(k, n) for Haar U in U(n)."""
    return float(min(k, n))


def trace_sq_weyl(n: int, points: int = 64) -> float:
    """E|Tr U|^2 by Weyl quadrature, an independent check on the sampler."""
    theta = 2 * np.pi * np.arange(points) / points
    grids = np.meshgrid(*([theta] * n), indexing="ij")
    e = [np.exp(1j * g) for g in grids]
    vand = np.ones_like(grids[0])
    for j in range(n):
        for k in range(j + 1, n):
            vand = vand * np.abs(e[j] - e[k]) ** 2
    tr = sum(e)
    return float(np.sum(vand * np.abs(tr) ** 2) / (math.factorial(n) * points**n))
