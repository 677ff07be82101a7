import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gzk.calculus import l2_norm
from gzk.grid import Field, GridSpec
from gzk.linear_group import (
    DecayProbeConfig,
    ValidityError,
    decay_probe,
    dilated_family,
    gaussian,
    maximal_probe,
    modulated_family,
    propagate,
    random_bandlimited_family,
    smoothing_probe,
    strichartz_exponents,
    strichartz_probe,
    validity_horizon,
)
from conftest import random_field


def test_propagate_identity_at_zero(rng):
    f = random_field(GridSpec(32, 4.0), rng)
    assert propagate(f, 0.0) is f


def test_propagate_unitary(rng):
    f = random_field(GridSpec(64, 4.0), rng, smooth=False)
    assert l2_norm(propagate(f, 7.3)) == pytest.approx(l2_norm(f), rel=1e-12)


def test_single_mode_phase():
    spec = GridSpec(32, 5.0)
    xi, eta = math.pi / spec.L, 2 * math.pi / spec.L
    t = 1.7
    f = Field.from_function(spec, lambda x, y: np.cos(xi * x + eta * y))
    phase = t * (xi**3 + xi * eta**2)
    X, Y = spec.mesh
    expected = np.cos(xi * X + eta * Y + phase)
    assert np.max(np.abs(propagate(f, t).samples - expected)) < 1e-13


@settings(max_examples=20, deadline=None)
@given(t1=st.floats(-5, 5), t2=st.floats(-5, 5))
def test_group_property(t1, t2):
    spec = GridSpec(32, 4.0)
    f = gaussian(spec, 1.0, 1.0)
    a = propagate(propagate(f, t1), t2).samples
    b = propagate(f, t1 + t2).samples
    assert np.max(np.abs(a - b)) < 1e-12


def test_decay_probe_p2_is_flat():
    spec = GridSpec(256, 40.0)
    f = gaussian(spec, 1.0, 1.0)
    res = decay_probe(f, DecayProbeConfig(0.0, 0.0, 1.0, 8.0, 8))
    assert abs(res.slope) <= 1e-3


def test_decay_probe_homogeneous():
    spec = GridSpec(256, 40.0)
    f = gaussian(spec, 1.0, 0.7)
    cfg = DecayProbeConfig(1.0, 0.0, 1.0, 8.0, 8)
    a, b = decay_probe(f, cfg), decay_probe(f * 10.0, cfg)
    assert b.constant == pytest.approx(a.constant, rel=1e-12)
    assert b.slope == pytest.approx(a.slope, abs=1e-12)


@pytest.mark.slow
def test_decay_probe_two_thirds():
    spec = GridSpec(1024, 80 * math.pi)
    res = decay_probe(gaussian(spec, 1.0, 0.5), DecayProbeConfig(1.0, 0.0, 5.0, 40.0, 16))
    # the fast Gaussian tail reaches the edge strip, and the flag must say so
    assert res.contaminated and res.max_boundary_fraction > 1e-8
    assert res.slope == pytest.approx(-2 / 3, abs=0.05)


def test_decay_probe_clean_when_compact():
    spec = GridSpec(256, 40.0)
    res = decay_probe(gaussian(spec, 1.0, 2.0), DecayProbeConfig(1.0, 0.0, 0.5, 2.0, 8))
    assert not res.contaminated


def test_decay_config_validation():
    with pytest.raises(ValueError):
        DecayProbeConfig(1.5)
    with pytest.raises(ValueError):
        DecayProbeConfig(1.0, 0.0, 2.0, 1.0)
    cfg = DecayProbeConfig(0.4)
    assert 1 / cfg.p + 1 / cfg.p_conj == pytest.approx(1.0)


def test_decay_probe_refuses_beyond_horizon():
    spec = GridSpec(64, 4.0)
    with pytest.raises(ValidityError):
        decay_probe(gaussian(spec, 1.0, 0.3), DecayProbeConfig(1.0, 0.0, 1.0, 100.0, 8))


def test_smoothing_single_field():
    spec = GridSpec(128, 32.0)
    fam = modulated_family(spec, [4 * math.pi / spec.L], 1.0)
    assert smoothing_probe(fam, 1.0, 64).spread == pytest.approx(1.0)


@pytest.fixture(scope="module")
def smoothing_family():
    spec = GridSpec(256, 32.0)
    lams = [c * math.pi / spec.L for c in (4, 8, 16, 32)]
    return modulated_family(spec, lams, 1.0), lams


def test_smoothing_bounded(smoothing_family):
    fam, lams = smoothing_family
    stats = smoothing_probe(fam, 1.0, 200, 1, lams)
    assert stats.spread <= 4


def test_smoothing_control_grows(smoothing_family):
    fam, lams = smoothing_family
    stats = smoothing_probe(fam, 1.0, 200, 2, lams)
    assert np.all(np.diff(stats.ratios[1:]) > 0)
    assert stats.growth_exponent > 0.5
    assert stats.spread > smoothing_probe(fam, 1.0, 200, 1, lams).spread


def test_maximal_detector_discriminates():
    spec = GridSpec(256, 8.0)
    scales = [1, 2, 4, 8]
    fam = dilated_family(spec, scales, 2.0)
    hi = maximal_probe(fam, 0.8, 1.0, 128, scales, clip_to_horizon=True)
    lo = maximal_probe(fam, 0.5, 1.0, 128, scales, clip_to_horizon=True)
    assert hi.spread <= 2 and hi.growth_exponent <= 0.1
    assert lo.growth_exponent >= 0.15
    assert all(w <= 1.0 for w in hi.extra["windows"])


def test_maximal_probe_refuses_without_clipping():
    spec = GridSpec(64, 8.0)
    fam = dilated_family(spec, [8], 2.0)
    with pytest.raises(ValidityError):
        maximal_probe(fam, 0.8, 1.0, 16)


def test_strichartz_theta_zero_is_unitary():
    spec = GridSpec(64, 16.0)
    fam = random_bandlimited_family(spec, 3, 1.0, 3.0, seed=5)
    stats = strichartz_probe(fam, 0.0, 0.0, 1.0, 16)
    assert np.all(np.abs(stats.ratios - 1.0) < 1e-12)


def test_strichartz_exponents():
    assert strichartz_exponents(1.0, 0.0) == (3.0, math.inf)
    assert strichartz_exponents(0.0, 0.0) == (math.inf, 2.0)


def test_strichartz_bounded():
    spec = GridSpec(256, 32.0)
    fam = random_bandlimited_family(spec, 10, 2.0, 4.0, seed=1)
    assert strichartz_probe(fam, 1.0, 0.0, 1.0, 256).spread <= 5


def test_validity_horizon_zero_field():
    assert validity_horizon(Field.zeros(GridSpec(16, 1.0))) == math.inf
