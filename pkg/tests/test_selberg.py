import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cue_spectra.logderiv import PoleProximityError, log_deriv
from cue_spectra.sampler import sample_cue_angles
from cue_spectra.selberg import (
    claim_ratio,
    decompose,
    error_moment_estimate,
    error_moment_from_angles,
    local_sum,
    moment_from_values,
    positivity_gap,
    wk_chain,
    x2_comparison_constant,
    z0_for,
)


def test_local_sum_empty_window():
    assert local_sum([np.pi], 1.0, 1.0) == 0


def test_local_sum_all_inside():
    assert local_sum([0.0, 0.0], 0.5, 1.0) == pytest.approx(-4.0)


def test_window_is_strict():
    # theta exactly at c/N is outside the window
    assert local_sum([0.5, 3.0], 0.2, 1.0) == 0


def test_local_plus_complement_is_full():
    theta = sample_cue_angles(64, 1, 1)[0]
    z0 = z0_for(64)
    parts = decompose(theta, z0, 0.5)
    assert parts.local_sum + (parts.full - parts.local_sum) == pytest.approx(log_deriv(theta, z0))


def test_single_zero_bookkeeping():
    parts = decompose([np.pi], 1.0, 1.0)
    z0 = 0.0
    assert parts.local_sum == 0
    assert parts.x1 == pytest.approx(1 / (z0 + 1))
    assert parts.x2 == pytest.approx(0.5 - 1 / (z0 + 1))
    assert parts.x3 == 0
    assert parts.error == pytest.approx(0.5)
    assert parts.full == pytest.approx(0.5)


def test_x2_vanishes_at_z0():
    theta = sample_cue_angles(32, 2, 4)
    z0 = z0_for(32)
    parts = decompose(theta, z0, 0.5)
    assert np.all(parts.x2 == 0)
    outside = np.abs(theta) >= 0.5 / 32
    direct = np.sum(np.where(outside, 1 / (z0 - np.exp(1j * theta)), 0), axis=-1)
    assert np.allclose(parts.error, direct, rtol=1e-12)


@given(seed=st.integers(0, 10**6), n=st.sampled_from([8, 64, 256]),
       c=st.sampled_from([0.25, 0.5, 1.0]), t=st.floats(0, 1))
@settings(max_examples=25, deadline=None)
def test_decomposition_invariants(seed, n, c, t):
    theta = sample_cue_angles(n, seed, 2)
    z0 = z0_for(n)
    parts = decompose(theta, z0 + t * (1 - z0), c)
    r1, r2 = parts.residuals()
    assert r1 <= 1e-9 and r2 <= 1e-9


def test_decomposition_at_n128_quarter_window():
    theta = sample_cue_angles(128, 0, 5)
    assert max(decompose(theta, 1.0, 0.25).residuals()) <= 1e-9


def test_complex_z_accepted():
    theta = sample_cue_angles(16, 0, 1)[0]
    parts = decompose(theta, 0.97 + 0.01j, 1.0)
    assert max(parts.residuals()) <= 1e-9


def test_bad_window_rejected():
    with pytest.raises(ValueError):
        decompose([0.1, 1.0], 1.0, 1.5)


def test_pole_at_z_rejected():
    with pytest.raises(PoleProximityError):
        decompose([0.0, 1.0], 1.0, 0.5)


@given(seed=st.integers(0, 10**6), n=st.sampled_from([8, 64]), c=st.sampled_from([0.25, 0.5, 1.0]),
       t=st.floats(0, 1))
@settings(max_examples=25, deadline=None)
def test_x2_comparison_bounded(seed, n, c, t):
    theta = sample_cue_angles(n, seed, 3)
    z0 = z0_for(n)
    assert np.all(x2_comparison_constant(theta, z0 + t * (1 - z0), c) <= 10)


def test_claim_ratio_examples():
    assert claim_ratio(np.zeros(4)) == pytest.approx(0.8)
    assert claim_ratio([np.pi]) == pytest.approx(0.5)


@given(seed=st.integers(0, 10**6), n=st.sampled_from([4, 16, 64]))
@settings(max_examples=20, deadline=None)
def test_positivity_gap(seed, n):
    assert np.all(positivity_gap(sample_cue_angles(n, seed, 3)) > 0)


def test_wk_chain_degenerate_spectrum():
    rep = wk_chain(np.zeros(4), 1)
    assert rep.points[0] == pytest.approx(1 - 1 / 4 + 1 / 16)
    assert rep.values[0] == pytest.approx(64 / 3)
    assert rep.chain_holds and rep.certified


def test_wk_chain_symmetric_ties_recorded():
    # a spectrum symmetric under conjugation has mirror-image maxima off the real axis
    rep = wk_chain(np.array([-2.0, 2.0]), 1)
    step = rep.steps[0]
    assert step.point.imag > 0
    # the mirror grid point m - best carries the same value and is recorded, not raised
    best = int(round(np.angle((step.point - step.center) / step.radius) / (2 * np.pi) * 1024)) % 1024
    assert step.tie_indices == [1024 - best]
    assert rep.chain_holds


@given(seed=st.integers(0, 10**6))
@settings(max_examples=20, deadline=None)
def test_wk_chain_first_step_dominates_center(seed):
    rep = wk_chain(sample_cue_angles(32, seed, 1)[0], 1)
    assert rep.steps[0].center_value <= rep.values[0]


def test_wk_chain_spacing_and_certificate():
    theta = sample_cue_angles(64, 3, 10)
    for th in theta:
        rep = wk_chain(th, 3)
        assert rep.chain_holds and rep.certified
        assert rep.min_spacing >= (1 - 1e-9) / 8
        radii = [s.radius for s in rep.steps]
        assert radii == pytest.approx([1 / 256, 1 / 512, 1 / 1024])


def test_wk_chain_rejects_k0():
    with pytest.raises(ValueError):
        wk_chain([0.1], 0)


def test_moment_plumbing():
    est = moment_from_values([4.0])
    assert est.mean == 4.0 and est.std_error == 0.0


def test_moment_normalisation():
    est = moment_from_values(np.full(200, 9.0), k_moment=2, n=10, c=0.5)
    assert est.mean == pytest.approx(81.0)
    assert est.normalized == pytest.approx(81.0 * (0.05) ** 4)


def test_heavy_tail_warning():
    vals = np.ones(1000)
    vals[:5] = 1e6
    with pytest.warns(RuntimeWarning, match="heavy tail"):
        est = moment_from_values(vals)
    assert est.heavy_tail


def test_moment_at_z0_uses_x1_minus_x3():
    theta = sample_cue_angles(16, 0, 200)
    z0 = z0_for(16)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        est = error_moment_from_angles(theta, 0.5, 1, z0)
    parts = decompose(theta, z0, 0.5)
    assert est.mean == pytest.approx(np.mean(np.abs(parts.x1 - parts.x3) ** 2))


def test_moment_estimate_checks_inputs():
    with pytest.raises(ValueError):
        error_moment_estimate(8, 1.0, 1, 50, 0)
    with pytest.raises(ValueError):
        error_moment_estimate(8, 1.0, 1, 100, 0, z=0.5)


def test_moment_estimate_small_run():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        est = error_moment_estimate(16, 1.0, 1, 200, 0)
    assert est.samples == 200 and est.std_error > 0
    assert math.isfinite(est.normalized)
