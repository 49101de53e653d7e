"""Campaign bodies: each maps a validated config to a list of result rows."""

from __future__ import annotations

import math

import numpy as np
from scipy import stats

from .. import clt, logderiv, ratios, selberg
from .._stats import batch_means
from ..sampler import nearest_spacing_fraction, sample_cue_angles
from .config import ExperimentConfig
from .records import Row

N_SE = 3.0
IDENTITY_TOL = 1e-12
DECOMPOSITION_TOL = 1e-9
LATTICE_TOL = 1e-6
FOURIER_TOL = 1e-10
X2_CONSTANT = 10.0
SCALING_FACTOR = 2.0
GRID_SPREAD = 50.0
KS_MIN_P = 1e-3


def close_row(name, value, target, tolerance, std_error=None) -> Row:
    return Row(name, float(value), std_error, float(target), float(tolerance),
               bool(abs(value - target) <= tolerance))


def se_row(name, value, std_error, target, n_se=N_SE) -> Row:
    """|value - target| within ``n_se`` standard errors."""
    return close_row(name, value, target, n_se * std_error, std_error)


def below_row(name, value, bound) -> Row:
    return Row(name, float(value), None, None, float(bound), bool(value <= bound))


def above_row(name, value, bound) -> Row:
    return Row(name, float(value), None, None, float(bound), bool(value > bound))


def info_row(name, value, std_error=None) -> Row:
    return Row(name, float(value), None if std_error is None else float(std_error))


def _angles(config: ExperimentConfig, n: int, count: int | None = None) -> np.ndarray:
    return sample_cue_angles(n, config.seed, count or config.samples, config.workers)


# -- sample -------------------------------------------------------------------

def run_sample(config: ExperimentConfig) -> list[Row]:
    rows = []
    for n in config.n:
        tag = f"sample[n={n}]"
        angles = _angles(config, n)
        trace_sq = np.abs(np.exp(1j * angles).sum(axis=1)) ** 2
        mean, se = batch_means(trace_sq)
        rows.append(se_row(f"{tag}:trace_sq_mean", mean, se, 1.0))
        ks = stats.kstest(angles.ravel(), "uniform", args=(-np.pi, 2 * np.pi), method="asymp")
        rows.append(above_row(f"{tag}:ks_uniform_pvalue", ks.pvalue, KS_MIN_P))
        if n >= 2:
            frac = nearest_spacing_fraction(angles, 0.1 * 2 * np.pi / n)
            iid = 1.0 - (1.0 - 0.1 / n) ** (n - 1)
            rows.append(below_row(f"{tag}:small_spacing_fraction", frac, 0.5 * iid))
    if 2 in config.n:
        rows.append(close_row("sample[n=2]:trace_sq_weyl", ratios.trace_sq_weyl(2), 1.0, 1e-12))
    return rows


# -- thm1 -------------------------------------------------------------------------

def run_thm1(config: ExperimentConfig) -> list[Row]:
    rows = []
    normalized = {}
    claim_max = {}
    for n in config.n:
        tag = f"thm1[n={n}]"
        angles = _angles(config, n)
        z0 = 1.0 - 1.0 / n
        for c in config.c:
            for zname, z in (("z0", z0), ("mid", (z0 + 1.0) / 2), ("one", 1.0)):
                dec = selberg.decompose(angles, z, c)
                rows.append(below_row(f"{tag}[c={c},z={zname}]:decomposition_residual",
                                      max(dec.residuals()), DECOMPOSITION_TOL))
                rows.append(below_row(f"{tag}[c={c},z={zname}]:x2_comparison_max",
                                      np.max(selberg.x2_comparison_constant(angles, z, c)), X2_CONSTANT))
            for k in config.k_moment:
                est = selberg.error_moment_from_angles(angles, c, k, config.z)
                normalized[(n, c, k)] = est.normalized
                rows.append(info_row(f"{tag}[c={c},K={k}]:normalized_moment", est.normalized, est.normalized_se))
                rows.append(info_row(f"{tag}[c={c},K={k}]:heavy_tail", float(est.heavy_tail)))
        claim_max[n] = float(np.max(selberg.claim_ratio(angles)))
        rows.append(info_row(f"{tag}:claim_ratio_max", claim_max[n]))
        rows.append(above_row(f"{tag}:positivity_gap_min", np.min(selberg.positivity_gap(angles)), 0.0))
        chains = [selberg.wk_chain(a, 3) for a in angles[:100]]
        rows.append(close_row(f"{tag}:wk_chain_fraction",
                              np.mean([ch.chain_holds and ch.certified for ch in chains]), 1.0, 0.0))
        rows.append(info_row(f"{tag}:wk_min_spacing_over_r", min(ch.min_spacing for ch in chains)))

    ns = list(config.n)
    for k in config.k_moment:
        for c in config.c:
            for a, b in zip(ns, ns[1:]):
                ratio = normalized[(b, c, k)] / normalized[(a, c, k)]
                rows.append(Row(f"thm1[c={c},K={k}]:moment_ratio_n{a}_to_n{b}", ratio, None, 1.0,
                                SCALING_FACTOR, bool(1 / SCALING_FACTOR <= ratio <= SCALING_FACTOR)))
        vals = [normalized[(n, c, k)] for n in ns for c in config.c]
        if len(vals) > 1:
            rows.append(Row(f"thm1[K={k}]:moment_grid_spread", max(vals) / min(vals), None, None,
                            GRID_SPREAD, bool(max(vals) / min(vals) < GRID_SPREAD)))
            rows.append(info_row(f"thm1[K={k}]:moment_constant", max(vals)))
    for a, b in zip(ns, ns[1:]):
        rows.append(below_row(f"thm1:claim_max_growth_n{a}_to_n{b}", claim_max[b] / claim_max[a], SCALING_FACTOR))
    return rows


# -- clt --------------------------------------------------------------------------

def clt_rows(report: clt.CltReport, tag: str) -> list[Row]:
    rows = [
        se_row(f"{tag}:mean_g", *report.mean_g, 0.0),
        se_row(f"{tag}:mean_h", *report.mean_h, 0.0),
        se_row(f"{tag}:var_g", *report.var_g, report.c2_target),
        se_row(f"{tag}:var_h", *report.var_h, report.c2_target),
        se_row(f"{tag}:cov_gh", *report.cov, 0.0),
    ]
    for name, (u, v) in (("g", (1.0, 0.0)), ("h", (0.0, 1.0))):
        cum = report.cumulants[(u, v)]
        for est in cum[2:4]:
            rows.append(se_row(f"{tag}:c{est.order}_{name}", est.value, est.std_error, 0.0))
        c2 = cum[1]
        rows.append(close_row(f"{tag}:c2_sandwich_{name}", c2.value, report.c2_target,
                              N_SE * c2.std_error + report.tail, c2.std_error))
    for name in ("g", "h"):
        rows.append(above_row(f"{tag}:ks_pvalue_{name}", report.ks[name][1], KS_MIN_P))
        rows.append(info_row(f"{tag}:ks_pvalue_{name}_studentized", report.ks[name + "_studentized"][1]))
    rows.append(info_row(f"{tag}:ecf_max_deviation", report.max_ecf_deviation))
    rows.append(info_row(f"{tag}:exact_c2_sum", report.c2_target))
    rows.append(info_row(f"{tag}:tail_sum", report.tail))
    return rows


def run_clt(config: ExperimentConfig) -> list[Row]:
    rows = []
    ecf = []
    for n in config.n:
        l = config.l_for(n)
        spec = logderiv.MesoscopicSpec(n, l)
        angles = _angles(config, n)
        sg, sh = clt.linear_statistics(angles, spec)
        report = clt.clt_report_from_samples(sg, sh, spec)
        rows.extend(clt_rows(report, f"clt[n={n},l={l:g}]"))
        ecf.append((n, report.max_ecf_deviation))
    for (a, da), (b, db) in zip(ecf, ecf[1:]):
        rows.append(below_row(f"clt:ecf_deviation_n{a}_to_n{b}", db, da))
    return rows


# -- ratios ---------------------------------------------------------------------

RATIO_SHIFTS = (
    ((0.3,), (0.4,)),
    ((0.3, 0.5), (0.4, 0.6)),
)
WEYL_REL_TOL = 1e-6


def run_ratios(config: ExperimentConfig) -> list[Row]:
    rows = []
    for n in config.n:
        angles = _angles(config, n)
        for a, b in RATIO_SHIFTS:
            spec = ratios.RatioSpec(a, b, n)
            tag = f"ratios[n={n},A={list(a)},B={list(b)}]"
            exact = ratios.j_star(spec)
            mc = ratios.j_monte_carlo_from_angles(spec, angles)
            rows.append(se_row(f"{tag}:mc_real", mc.value.real, mc.std_error.real, exact.real))
            rows.append(se_row(f"{tag}:mc_imag", mc.value.imag, mc.std_error.imag, exact.imag))
            if n <= 3:
                weyl = ratios.j_weyl(spec)
                rows.append(below_row(f"{tag}:weyl_rel_error", abs(weyl - exact) / abs(exact), WEYL_REL_TOL))
        # spacing study for the moment bound; recorded, not asserted
        for k in (1, 2):
            for mult in (1, 2, 4):
                delta = mult / n
                shifts = [delta * (j + 1) for j in range(k)]
                value = ratios.j_star(ratios.RatioSpec(shifts, shifts, n))
                rows.append(info_row(f"ratios[n={n},K={k},delta={mult}/N]:jstar_scaled", abs(value) * n ** (-2 * k)))
    return rows


# -- identities ---------------------------------------------------------------------

def run_identities(config: ExperimentConfig) -> list[Row]:
    rows = []
    for n in config.n:
        tag = f"identities[n={n}]"
        angles = _angles(config, n)
        l = config.l if config.l is not None else max(1, math.ceil(math.sqrt(n)))
        if l < n:
            spec = logderiv.MesoscopicSpec(n, l)
            sf = logderiv.s_n(angles, spec, "f")
            via = spec.ratio * logderiv.log_deriv(angles, spec.radius)
            rows.append(below_row(f"{tag}:sn_f_identity", np.max(np.abs(sf - via) / np.abs(via)), IDENTITY_TOL))

        subset = angles[:100]
        s0 = math.log(1.0 - 1.0 / n)
        worst = worst_corrected = 0.0
        for s in (s0, -0.1 + 0.3j):
            direct = np.array([logderiv.q_log_deriv_direct(a, s) for a in subset])
            lattice = logderiv.q_log_deriv_lattice(subset, s)
            corrected = logderiv.q_log_deriv_lattice(subset, s, tail_correction=True)
            worst = max(worst, float(np.max(np.abs(lattice - direct) / np.abs(direct))))
            worst_corrected = max(worst_corrected, float(np.max(np.abs(corrected - direct) / np.abs(direct))))
        rows.append(below_row(f"{tag}:lattice_rel_error", worst, LATTICE_TOL))
        rows.append(info_row(f"{tag}:lattice_tail_corrected_rel_error", worst_corrected))

        chains = [selberg.wk_chain(a, 3) for a in subset]
        rows.append(close_row(f"{tag}:wk_chain_fraction",
                              np.mean([ch.chain_holds and ch.certified for ch in chains]), 1.0, 0.0))
        if n >= 2:
            rows.append(above_row(f"{tag}:wk_min_spacing_over_r",
                                  min(ch.min_spacing for ch in chains), (1 - 1e-9) / 8))

        if 2 * l < n:
            ks = np.arange(-64, 65)
            worst_f = 0.0
            for u, v in ((1.0, 0.0), (0.0, 1.0), (1.0, 1.0)):
                sp = logderiv.MesoscopicSpec(n, l, u, v)
                worst_f = max(worst_f, float(np.max(np.abs(clt.fhat_closed(ks, sp) - clt.fhat_numeric(ks, sp)))))
            rows.append(below_row(f"{tag}:fhat_max_abs_error", worst_f, FOURIER_TOL))
            sp = logderiv.MesoscopicSpec(n, l, 1.0, 1.0)
            rows.append(close_row(f"{tag}:c2_closed_vs_direct", clt.exact_c2_sum(sp),
                                  direct_c2_sum(sp), 1e-9 * clt.exact_c2_sum(sp)))
            rows.append(close_row(f"{tag}:tail_closed_vs_direct", clt.tail_sum(sp),
                                  direct_tail_sum(sp), 1e-10 * clt.tail_sum(sp)))
    return rows


def direct_c2_sum(spec, kmax: int = 100_000) -> float:
    k = np.arange(1, kmax + 1)
    return float(2 * np.sum(k * np.abs(clt.fhat_closed(k, spec)) ** 2))


def direct_tail_sum(spec, extra: int = 10_000) -> float:
    k = np.arange(spec.n // 2 + 1, spec.n // 2 + extra + 1)
    return float(2 * np.sum(k * np.abs(clt.fhat_closed(k, spec)) ** 2))


RUNNERS = {
    "sample": run_sample,
    "thm1": run_thm1,
    "clt": run_clt,
    "ratios": run_ratios,
    "identities": run_identities,
}
