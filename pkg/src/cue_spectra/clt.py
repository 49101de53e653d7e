"""Mesoscopic central limit theorem for P'/P(1 - L/N).

The test function is F = u g + v h with g, h the real and imaginary parts of
f(theta) = (L/N) / ((1 - L/N) - exp(i theta)). Its Fourier coefficients are
geometric, which makes the cumulant sums of the Soshnikov expansion available
in closed form; the Monte Carlo side estimates the same cumulants from CUE
samples.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from ._stats import batch_estimate, batch_means
from .logderiv import MesoscopicSpec, g_value, h_value, s_n
from .sampler import iter_cue_angles

ECF_GRID = (-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0)
MAX_CUMULANT_ORDER = 6
LIMIT_VARIANCE = 0.125


# -- Fourier coefficients ----------------------------------------------------

def _decay(k, spec: MesoscopicSpec):
    k = np.asarray(k)
    return spec.ratio * spec.radius ** (np.abs(k) - 1.0)


def fhat_f(k, spec: MesoscopicSpec):
    """Fourier coefficients of f: -(L/N)(1-L/N)^(-k-1) for k < 0, zero otherwise."""
    k = np.asarray(k)
    out = np.where(k < 0, -_decay(np.where(k < 0, k, -1), spec), 0.0)
    return out.item() if out.ndim == 0 else out


def fhat_g(k, spec: MesoscopicSpec):
    k = np.asarray(k)
    out = np.where(k != 0, -0.5 * _decay(np.where(k != 0, k, 1), spec), 0.0)
    return out.item() if out.ndim == 0 else out


def fhat_h(k, spec: MesoscopicSpec):
    k = np.asarray(k)
    mag = 0.5 * _decay(np.where(k != 0, k, 1), spec)
    out = np.where(k < 0, 1j * mag, np.where(k > 0, -1j * mag, 0.0))
    return out.item() if out.ndim == 0 else out


def fhat_closed(k, spec: MesoscopicSpec):
    """Closed-form Fourier coefficients of F = u g + v h.

    F^(0) = 0, F^(k) = -(L/2N)(1-L/N)^(|k|-1)(u - iv) for k < 0 and
    -(L/2N)(1-L/N)^(|k|-1)(u + iv) for k > 0, so F^(-k) = conj F^(k).
    """
    k = np.asarray(k)
    mag = -0.5 * _decay(np.where(k != 0, k, 1), spec)
    uv = complex(spec.u, spec.v)
    out = np.where(k < 0, mag * uv.conjugate(), np.where(k > 0, mag * uv, 0.0)).astype(complex)
    return complex(out) if out.ndim == 0 else out


def _f_on_grid(spec: MesoscopicSpec, grid_points: int):
    theta = 2 * np.pi * np.arange(grid_points) / grid_points
    return theta, spec.u * g_value(theta, spec) + spec.v * h_value(theta, spec)


def fhat_numeric(k, spec: MesoscopicSpec, grid_points: int = 2**14):
    """Trapezoid quadrature of (1/2pi) int_0^2pi F(theta) exp(-ik theta) dtheta."""
    if grid_points < 2**10:
        raise ValueError(f"grid_points must be at least 1024, got {grid_points}")
    theta, values = _f_on_grid(spec, grid_points)
    k = np.asarray(k)
    kernel = np.exp(-1j * np.multiply.outer(k.ravel(), theta))
    out = (kernel @ values) / grid_points
    return complex(out[0]) if k.ndim == 0 else out.reshape(k.shape)


def mean_square_numeric(spec: MesoscopicSpec, grid_points: int = 2**14) -> float:
    """(1/2pi) int |F|^2 by the trapezoid rule, for Parseval checks."""
    _, values = _f_on_grid(spec, grid_points)
    return float(np.mean(values**2))


# -- second cumulant ----------------------------------------------------------

def _geom_a(x, one_minus_sq=None):
    """sum_{k>=1} k x^(2k) = x^2 (1 - x^2)^-2 for 0 < x < 1.

    ``one_minus_sq`` may supply 1 - x^2 computed without cancellation.
    """
    d = 1.0 - x * x if one_minus_sq is None else one_minus_sq
    return x * x / (d * d)


def _check_ratio(spec: MesoscopicSpec, upper: float = 1.0) -> float:
    x = spec.ratio
    if not 0 < x < upper:
        raise ValueError(f"L/N must lie in (0, {upper}), got {x}")
    return x


def exact_c2_sum(spec: MesoscopicSpec) -> float:
    """sum_k |k| |F^(k)|^2 = (u^2 + v^2)/2 (2 - L/N)^-2."""
    x = _check_ratio(spec)
    a = 1.0 - x
    # 1 - a^2 = x (2 - x), written to avoid cancellation as L/N -> 0
    return (spec.u**2 + spec.v**2) / 2.0 * x * x / (a * a) * _geom_a(a, x * (2.0 - x))


def c2_limit(u: float = 1.0, v: float = 0.0) -> float:
    """L/N -> 0 limit of :func:`exact_c2_sum`."""
    return (u * u + v * v) / 8.0


def tail_sum(spec: MesoscopicSpec) -> float:
    """sum_{|k| > N/2} |k| |F^(k)|^2 in closed form, for L/N < 1/2.

    With y = (1 - L/N)^2 and M the least integer above N/2 this is
    (u^2+v^2)/2 (L/N)^2 y^-1 y^M (M + (1 - M) y) / ((L/N)^2 (2 - L/N)^2).
    """
    x = _check_ratio(spec, 0.5)
    a = 1.0 - x
    y = a * a
    m = spec.n // 2 + 1
    return ((spec.u**2 + spec.v**2) / 2.0 * x * x / y
            * y**m / (x * x * (2.0 - x) ** 2) * (m + (1 - m) * y))


def tail_constant(spec: MesoscopicSpec) -> float:
    """tail_sum / (exp(-L) L); bounded in N and L."""
    return tail_sum(spec) / (math.exp(-spec.l) * spec.l)


def soshnikov_c1(spec: MesoscopicSpec) -> float:
    """First cumulant F^(0) N of the linear statistic; zero for this F."""
    return float(np.real(fhat_closed(0, spec))) * spec.n


def _truncation(spec: MesoscopicSpec, rel_tol: float) -> int:
    return max(spec.n, int(math.ceil(math.log(rel_tol) / math.log(spec.radius))))


def _index_table(weights, ks, cap):
    """Histogram over (sum k, min(sum |k|, cap)) of products of per-index weights."""
    span = len(weights) * int(ks[-1])
    size = (2 * span + 1) * (cap + 1)
    if len(weights) == 1:
        flat = (ks + span) * (cap + 1) + np.minimum(np.abs(ks), cap)
        return np.bincount(flat, weights=weights[0], minlength=size).reshape(2 * span + 1, cap + 1), span
    table = np.zeros(size)
    rows = 256
    for start in range(0, ks.size, rows):
        k1 = ks[start:start + rows, None]
        s = k1 + ks[None, :]
        t = np.minimum(np.abs(k1) + np.abs(ks)[None, :], cap)
        w = weights[0][start:start + rows, None] * weights[1][None, :]
        table += np.bincount(((s + span) * (cap + 1) + t).ravel(), weights=w.ravel(), minlength=size)
    return table.reshape(2 * span + 1, cap + 1), span


def soshnikov_bound_sum(spec: MesoscopicSpec, ell: int, rel_tol: float = 1e-12) -> float:
    """sum over k_1+...+k_ell = 0 with sum |k_i| > N of |k_1| |F^(k_1) ... F^(k_ell)|.

    This is the quantity bounding the ell-th cumulant for ell = 3, 4. Indices
    are truncated where (1 - L/N)^|k| drops below ``rel_tol``; the sum is
    split into two halves whose (sum k, sum |k|) histograms are matched.
    """
    if ell not in (3, 4):
        raise ValueError(f"ell must be 3 or 4, got {ell}")
    kmax = _truncation(spec, rel_tol)
    ks = np.arange(-kmax, kmax + 1)
    g = np.abs(fhat_closed(ks, spec))
    cap = spec.n + 1
    left, lspan = _index_table([np.abs(ks) * g, g], ks, cap)
    right, rspan = _index_table([g] * (ell - 2), ks, cap)
    # tail[s, t] = sum_{t' >= t} right[s, t']
    tail = np.cumsum(right[:, ::-1], axis=1)[:, ::-1]
    total = 0.0
    need = np.clip(cap - np.arange(cap + 1), 0, cap)  # t + t' > N  <=>  t' >= N + 1 - t
    for si in range(left.shape[0]):
        s = si - lspan
        ri = -s + rspan
        if not 0 <= ri < right.shape[0]:
            continue
        total += float(np.dot(left[si], tail[ri, need]))
    return total


def cumulant_decay_envelope(spec: MesoscopicSpec, ell: int) -> float:
    """(1 - L/N)^(2N/ell) L^(ell-1), the decay rate of the ell >= 3 bound."""
    return spec.radius ** (2.0 * spec.n / ell) * spec.l ** (ell - 1)


# -- empirical cumulants ------------------------------------------------------

@dataclass
class CumulantEstimate:
    order: int
    value: float
    std_error: float
    sample_count: int


def _cumulant(x: np.ndarray, order: int) -> float:
    if order <= 4:
        return float(stats.kstat(x, order))
    mu = [float(np.mean((x - x.mean()) ** p)) for p in range(order + 1)]
    if order == 5:
        return mu[5] - 10 * mu[3] * mu[2]
    return mu[6] - 15 * mu[4] * mu[2] - 10 * mu[3] ** 2 + 30 * mu[2] ** 3


def empirical_cumulants(values, max_order: int = 4) -> list[CumulantEstimate]:
    """Cumulants 1..max_order with batch-means standard errors.

    Orders up to 4 use unbiased k-statistics, orders 5 and 6 the central
    moment polynomials.
    """
    x = np.asarray(values, dtype=float).ravel()
    if not 1 <= max_order <= MAX_CUMULANT_ORDER:
        raise ValueError(f"max_order must lie in 1..{MAX_CUMULANT_ORDER}, got {max_order}")
    if x.size < 10 * max_order:
        raise ValueError(f"need at least {10 * max_order} samples for order {max_order}, got {x.size}")
    out = []
    for order in range(1, max_order + 1):
        value, se = batch_estimate(x, lambda v, o=order: _cumulant(v, o), min_batch=2 * max_order)
        out.append(CumulantEstimate(order, value, se, int(x.size)))
    return out


def _covariance(x, y):
    return float(np.mean((x - x.mean()) * (y - y.mean())) * x.size / (x.size - 1))


def _batch_covariance(x, y, n_batches=50):
    full = _covariance(x, y)
    b = min(n_batches, x.size // 4)
    if b < 2:
        return full, 0.0
    per = [_covariance(xi, yi) for xi, yi in zip(np.array_split(x, b), np.array_split(y, b))]
    return full, float(np.std(per, ddof=1) / np.sqrt(b))


# -- Monte Carlo report ----------------------------------------------------------

def default_l(n: int) -> int:
    return int(math.ceil(math.sqrt(n)))


@dataclass
class CltReport:
    n: int
    l: float
    samples: int
    mean_g: tuple[float, float]
    mean_h: tuple[float, float]
    var_g: tuple[float, float]
    var_h: tuple[float, float]
    cov: tuple[float, float]
    c2_target: float
    tail: float
    ks: dict[str, tuple[float, float]]
    cumulants: dict[tuple[float, float], list[CumulantEstimate]]
    ecf: dict[tuple[float, float], tuple[complex, float, float]] = field(default_factory=dict)

    @property
    def max_ecf_deviation(self) -> float:
        return max(dev for _, _, dev in self.ecf.values())


def clt_report_from_samples(sg, sh, spec: MesoscopicSpec, grid=ECF_GRID) -> CltReport:
    """Reduce per-sample (S_N(g), S_N(h)) values to the CLT report.

    KS tests compare each marginal scaled by the exact C2 sum (and, for
    reference, the studentised marginal) to the standard normal.
    """
    sg = np.asarray(sg, dtype=float)
    sh = np.asarray(sh, dtype=float)
    base = spec.with_uv(1.0, 0.0)
    target = exact_c2_sum(base)
    sd = math.sqrt(target)
    ks = {}
    for name, x in (("g", sg), ("h", sh)):
        res = stats.kstest(x / sd, "norm", method="asymp")
        ks[name] = (float(res.statistic), float(res.pvalue))
        res = stats.kstest((x - x.mean()) / x.std(ddof=1), "norm", method="asymp")
        ks[name + "_studentized"] = (float(res.statistic), float(res.pvalue))

    cumulants = {}
    ecf = {}
    for u in grid:
        for v in grid:
            proj = u * sg + v * sh
            if u or v:
                cumulants[(u, v)] = empirical_cumulants(proj, 4)
            phi = complex(np.mean(np.exp(1j * proj)))
            expected = math.exp(-(u * u + v * v) / 16.0)
            ecf[(u, v)] = (phi, expected, abs(phi - expected))

    var_g = batch_estimate(sg, lambda x: _cumulant(x, 2), min_batch=4)
    var_h = batch_estimate(sh, lambda x: _cumulant(x, 2), min_batch=4)
    return CltReport(
        n=spec.n, l=spec.l, samples=int(sg.size),
        mean_g=batch_means(sg), mean_h=batch_means(sh),
        var_g=var_g, var_h=var_h, cov=_batch_covariance(sg, sh),
        c2_target=target, tail=tail_sum(base), ks=ks, cumulants=cumulants, ecf=ecf,
    )


def linear_statistics(angles, spec: MesoscopicSpec) -> tuple[np.ndarray, np.ndarray]:
    """Per-sample (S_N(g), S_N(h))."""
    sf = np.atleast_1d(s_n(np.atleast_2d(angles), spec, "f"))
    return sf.real.copy(), sf.imag.copy()


def clt_report(n: int, samples: int, seed: int, l: float | None = None,
               grid=ECF_GRID, workers: int = 1) -> CltReport:
    """Sample CUE spectra at size ``n`` and build the CLT report.

    ``l`` defaults to ceil(sqrt(n)) and must satisfy 1 < l < n/2.
    """
    if l is None:
        l = default_l(n)
    if not 1 < l < n / 2:
        raise ValueError(f"need 1 < L < N/2, got L={l}, N={n}")
    if samples < 100:
        raise ValueError(f"need at least 100 samples, got {samples}")
    spec = MesoscopicSpec(n, l)
    angles = np.array(list(iter_cue_angles(n, seed, samples, workers)))
    sg, sh = linear_statistics(angles, spec)
    return clt_report_from_samples(sg, sh, spec, grid)
