"""Property-based checks of the numerical building blocks."""

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from wavetrace.beam_model import PhysicalScales, from_dimensionless, to_dimensionless
from wavetrace.integrator import lowpass
from wavetrace.launch_profiles import algebraic, gaussian, sample_fan, symmetric_labels
from wavetrace.oracles import histogram_edges, interval_density, match_peaks
from wavetrace.wave_potential import augment, lagrange_d2, potential_kernel

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)
eps_st = st.floats(0.05, 1.0)


@given(arrays(float, st.integers(4, 30), elements=finite))
def test_augment_mirror(v):
    w = np.concatenate([-v[::-1], v])
    a = augment(w)
    assert np.all(a == -a[::-1])


@given(arrays(float, st.integers(10, 40), elements=finite), st.floats(0, 1))
def test_lowpass_mirror(v, alpha):
    w = np.concatenate([v[::-1], v])
    out = lowpass(w, alpha)
    assert np.all(out == out[::-1])


@given(st.floats(-5, 5), st.floats(-5, 5), st.floats(-5, 5), st.integers(0, 2**16))
def test_lagrange_d2_exact_on_quadratics(a, b, c, seed):
    x = np.cumsum(np.random.default_rng(seed).uniform(0.1, 1.0, 10))
    y = a * x**2 + b * x + c
    np.testing.assert_allclose(lagrange_d2(np.diff(x), y), 2 * a, atol=1e-9 * (1 + abs(a) + abs(b) + abs(c)) * 100)


@given(eps_st, st.integers(1, 3), st.floats(0.01, 100.0))
def test_potential_independent_of_normalisation(eps, N, scale):
    fan = sample_fan(algebraic(eps, N), 41, -3 / eps, 3 / eps)
    lo, hi = fan.ghost_amplitude
    G1, d1 = potential_kernel(fan.xi, fan.zeta, None, None, fan.launch_label, fan.relative_amplitude, (lo, hi))
    G2, d2 = potential_kernel(fan.xi, fan.zeta, None, None, fan.launch_label,
                              scale * fan.relative_amplitude, (scale * lo, scale * hi))
    np.testing.assert_allclose(G2, G1, rtol=0, atol=1e-12 * np.max(np.abs(G1)))
    np.testing.assert_allclose(d2, d1, rtol=0, atol=1e-12 * np.max(np.abs(d1)))


@given(st.integers(5, 500), st.floats(0.1, 100))
def test_symmetric_labels(n, half):
    a = symmetric_labels(n, -half, half)
    assert np.all(a == -a[::-1])
    assert np.all(np.diff(a) > 0)


@given(eps_st)
def test_gaussian_launch_G_on_axis(eps):
    assert abs(gaussian(eps).launch_G(0.0) + 2 * eps**2) < 1e-14


@given(arrays(float, st.integers(2, 60), elements=st.floats(-20, 20)), st.floats(0.05, 2.0))
def test_interval_density_conserves_intervals(pos, bw):
    pos = np.sort(pos)
    edges = histogram_edges(bw, 25.0)
    total = interval_density(pos, edges).sum()
    assert abs(total - (pos.size - 1)) < 1e-9 * pos.size


@given(st.lists(st.floats(-50, 50), max_size=6), st.floats(0.01, 2))
def test_match_peaks_self(peaks, tol):
    assert match_peaks(peaks, peaks, tol).ok


@settings(max_examples=50)
@given(st.floats(1e-7, 1e-5), st.floats(1e-6, 1e-4), st.floats(-1e-5, 1e-5), st.floats(0, 1e-5),
       st.floats(-1e-3, 1e-3), st.floats(0.5, 1.0))
def test_dimensionless_round_trip(lam, w0, x, z, px, pz):
    w0 = max(w0, lam)
    s = PhysicalScales.optical(lam, w0)
    state = to_dimensionless(s, [x, z], [px * s.wavenumber_k0, pz * s.wavenumber_k0], 1e-12)
    pos, mom, t = from_dimensionless(s, state)
    np.testing.assert_allclose(pos, [x, z], rtol=1e-12, atol=1e-24)
    np.testing.assert_allclose(mom / s.wavenumber_k0, [px, pz], rtol=1e-12, atol=1e-18)
