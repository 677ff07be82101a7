import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gzk.grid import (
    Field,
    GridSpec,
    Spectrum,
    dealias,
    dealias_mask,
    forward_transform,
    inverse_transform,
    ipow,
    pad_size,
    padded_power,
    rfft,
)


def direct_dft(f: Field) -> np.ndarray:
    """O(n^4) unitary transform on the same layout as forward_transform."""
    s = f.spec
    x = s.x
    xi = s.freqs
    ex = np.exp(-1j * np.outer(xi, x))  # [freq, sample]
    # samples are indexed [y, x], so the result is [eta, xi]
    return (s.dx**2 / (2 * math.pi)) * ex @ f.samples @ ex.T


def test_gridspec_validates():
    with pytest.raises(ValueError):
        GridSpec(7, 1.0)
    with pytest.raises(ValueError):
        GridSpec(16, -1.0)


def test_constant_field_single_mode():
    spec = GridSpec(64, 3.0)
    s = forward_transform(Field(spec, np.ones((64, 64))))
    c = np.abs(s.coeffs)
    assert c[0, 0] > 0
    c[0, 0] = 0
    assert c.max() < 1e-14 * abs(s.coeff(0, 0))


def test_cosine_two_conjugate_modes():
    spec = GridSpec(32, 2.0)
    f = Field.from_function(spec, lambda x, y: np.cos(math.pi * x / spec.L))
    s = forward_transform(f)
    big = np.argwhere(np.abs(s.coeffs) > 1e-12 * np.abs(s.coeffs).max())
    assert {tuple(i) for i in big} == {(0, 1), (0, spec.n - 1)}
    assert abs(s.coeff(1, 0)) == pytest.approx(abs(s.coeff(-1, 0)), rel=1e-14)


def test_parseval_against_direct_dft(rng):
    spec = GridSpec(16, 1.7)
    f = Field(spec, rng.standard_normal((16, 16)))
    direct = direct_dft(f)
    s = forward_transform(f)
    assert np.max(np.abs(s.coeffs - direct)) <= 1e-12 * np.abs(direct).max()
    ratio = s.parseval() / (np.sum(f.samples**2) * spec.dx**2)
    assert abs(ratio - 1) <= 1e-12


def test_round_trip(rng):
    spec = GridSpec(32, 5.0)
    f = Field(spec, rng.standard_normal((32, 32)))
    back = inverse_transform(forward_transform(f))
    assert np.max(np.abs(back.samples - f.samples)) <= 1e-12


def test_zero_spectrum_gives_zero_field():
    spec = GridSpec(16, 1.0)
    assert not inverse_transform(Spectrum(spec, np.zeros((16, 16)))).samples.any()


def test_half_amplitude_modes_give_cosine():
    spec = GridSpec(32, 4.0)
    amps = np.zeros((32, 32), complex)
    amps[0, 1] = amps[0, -1] = 0.5
    f = inverse_transform(Spectrum.from_series(spec, amps))
    X, _ = spec.mesh
    assert np.max(np.abs(f.samples - np.cos(math.pi * X / spec.L))) < 1e-13


def test_inverse_rejects_non_real_spectrum():
    spec = GridSpec(16, 1.0)
    c = np.zeros((16, 16), complex)
    c[0, 1] = 1.0
    with pytest.raises(ValueError, match="conjugate"):
        inverse_transform(Spectrum(spec, c))


def test_dealias_identity_at_ratio_one(rng):
    spec = GridSpec(32, 1.0)
    s = forward_transform(Field(spec, rng.standard_normal((32, 32))))
    assert np.array_equal(dealias(s, 1).coeffs, s.coeffs)


def test_dealias_three_halves_count():
    spec = GridSpec(64, 1.0)
    mask = dealias_mask(spec, Fraction(3, 2))
    # |j| <= 21 on each axis: 43 surviving indices per axis
    assert mask.sum() == 43**2
    assert not mask[0, 22] and mask[0, 21]


def test_padded_power_matches_fine_grid():
    spec = GridSpec(32, math.pi)
    X, Y = spec.mesh
    u = np.cos(X) + 0.5 * np.sin(2 * Y) + 0.3 * np.cos(3 * X + Y)
    got = padded_power(rfft(u), spec.n, 4, 3)
    fine = GridSpec(128, math.pi)
    Xf, Yf = fine.mesh
    uf = np.cos(Xf) + 0.5 * np.sin(2 * Yf) + 0.3 * np.cos(3 * Xf + Yf)
    ref = rfft(uf**4)
    # project the fine spectrum onto the coarse modes (scale by point count)
    n, m = spec.n, fine.n
    idx = np.r_[0 : n // 2, m - n // 2 : m]
    ref_c = ref[idx][:, : n // 2 + 1] * (n / m) ** 2
    ref_c[n // 2, :] = 0
    ref_c[:, n // 2] = 0
    assert np.max(np.abs(got - ref_c)) <= 1e-10 * np.abs(ref_c).max()


def test_pad_size_even():
    assert pad_size(64, Fraction(3, 2)) == 96
    assert pad_size(10, Fraction(5, 4)) % 2 == 0


@settings(max_examples=30, deadline=None)
@given(p=st.integers(1, 9), seed=st.integers(0, 2**16))
def test_ipow_matches_power(p, seed):
    a = np.random.default_rng(seed).standard_normal(50)
    assert np.allclose(ipow(a, p), a**p, rtol=1e-13, atol=0)


def test_ipow_rejects_bad_power():
    with pytest.raises(ValueError):
        ipow(np.ones(3), 0)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**16), n=st.sampled_from([8, 16, 24]))
def test_spectrum_conjugate_symmetric(seed, n):
    spec = GridSpec(n, 2.0)
    f = Field(spec, np.random.default_rng(seed).standard_normal((n, n)))
    assert forward_transform(f).symmetry_defect() == 0.0


def test_field_is_immutable():
    f = Field.zeros(GridSpec(8, 1.0))
    with pytest.raises(ValueError):
        f.samples[0, 0] = 1.0


def test_field_rejects_nonfinite():
    a = np.zeros((8, 8))
    a[1, 1] = np.nan
    with pytest.raises(ValueError):
        Field(GridSpec(8, 1.0), a)
