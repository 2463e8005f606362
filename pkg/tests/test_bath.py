import math
import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import quad

from qubitpair.bath import (BathSpec, SpectralDensity, correlation, gamma_at,
                            lamb_shift_at)
from qubitpair.errors import ConfigError

OHMIC = SpectralDensity("ohmic", 20.0)


def cauchy_lamb_shift(sd, beta, omega, half_width=50.0):
    """Second quadrature scheme: Cauchy-weighted QUADPACK near the pole, plain tails."""
    g = lambda v: gamma_at(sd, beta, v)
    a, b = omega - half_width, omega + half_width
    core, _ = quad(g, a, b, weight="cauchy", wvar=omega, limit=500, epsabs=1e-12)
    right, _ = quad(lambda v: g(v) / (omega - v), b, np.inf, limit=500, epsabs=1e-12)
    left, _ = quad(lambda v: g(v) / (omega - v), -np.inf, a, limit=500, epsabs=1e-12)
    return (right + left - core) / (2 * math.pi)


def test_gamma_value():
    # pi J(w) (coth(beta w / 2) + 1), written differently from the library
    w = 1.0
    expected = math.pi * (w * 400 / 401) * (1 / math.tanh(0.5) + 1)
    assert gamma_at(OHMIC, 1.0, w) == pytest.approx(expected, rel=1e-14)
    assert gamma_at(OHMIC, 1.0, w) == pytest.approx(9.915065138056558, rel=1e-12)


def test_gamma_zero_frequency_limit():
    assert gamma_at(OHMIC, 1.0, 0.0) == pytest.approx(2 * math.pi, rel=1e-15)
    assert gamma_at(OHMIC, 1.0, 1e-7) == pytest.approx(2 * math.pi, rel=1e-6)
    for beta in (0.1, 1.0, 5.0):
        small = [gamma_at(OHMIC, beta, w) - 2 * math.pi / beta for w in (1e-2, 1e-4, 1e-6)]
        assert abs(small[2]) < abs(small[1]) < abs(small[0])


def test_gamma_detailed_balance_example():
    assert gamma_at(OHMIC, 1.0, -1.0) == pytest.approx(math.exp(-1) * gamma_at(OHMIC, 1.0, 1.0),
                                                       rel=1e-14)


@pytest.mark.parametrize("beta", [0.1, 1.0, 10.0])
@pytest.mark.parametrize("w", [0.01, 0.1, 0.5, 1.0, 2.0])
def test_kms(beta, w):
    lhs = gamma_at(OHMIC, beta, -w) * math.exp(beta * w)
    assert lhs == pytest.approx(gamma_at(OHMIC, beta, w), rel=1e-12)


def test_gamma_nonnegative_on_grid():
    w = np.linspace(-50, 50, 20001)
    assert np.all(gamma_at(OHMIC, 1.0, w) >= 0)
    assert np.all(gamma_at(OHMIC, 0.05, w) >= 0)


def test_gamma_vectorized_matches_scalar():
    w = np.array([-2.0, 0.0, 0.3, 4.0])
    np.testing.assert_array_equal(gamma_at(OHMIC, 2.0, w), [gamma_at(OHMIC, 2.0, x) for x in w])


def test_zero_spectral_density_switches_bath_off():
    sd = SpectralDensity("zero")
    assert gamma_at(sd, 1.0, 1.0) == 0.0
    assert gamma_at(sd, 1.0, 0.0) == 0.0
    assert lamb_shift_at(sd, 1.0, 1.0) == 0.0


@pytest.mark.parametrize("omega,beta,frozen", [
    (1.0, 1.0, -33.03047512245272),
    (-1.0, 1.0, -29.644690036445898),
    (0.5, 1.0, -32.25544344040157),
    (1.0, 0.1, -30.197925336025854),
    (1.0, 50.0, -34.32452616298196),
    (0.01, 1.0, -31.433187886149422),
])
def test_lamb_shift_two_schemes(omega, beta, frozen):
    value = lamb_shift_at(OHMIC, beta, omega)
    assert value == pytest.approx(cauchy_lamb_shift(OHMIC, beta, omega), rel=1e-6)
    assert value == pytest.approx(frozen, rel=1e-9)


def test_lamb_shift_zero_frequency():
    assert lamb_shift_at(OHMIC, 1.0, 0.0) == pytest.approx(-10 * math.pi, rel=1e-9)


def test_lamb_shift_has_no_parity():
    assert abs(lamb_shift_at(OHMIC, 1.0, 1.0) - lamb_shift_at(OHMIC, 1.0, -1.0)) > 1.0


def test_lamb_shift_tail_matters():
    # the tail beyond the split point contributes well above the tolerance
    tail, _ = quad(lambda v: gamma_at(OHMIC, 1.0, v) / (1.0 - v), 1001.0, np.inf, limit=200)
    assert abs(tail) / (2 * math.pi) > 1e-3


@pytest.mark.parametrize("lamb", [True, False])
def test_gamma_split(lamb):
    c = correlation(BathSpec("common", 1.0, gx=(1, 1)), lamb_shift=lamb)
    for w in (-1.0, 0.0, 0.7):
        G = c.Gamma(w)
        assert (G + G.conjugate()).real == pytest.approx(c.gamma(w), rel=1e-15)
        assert ((G - G.conjugate()) / 2j).real == pytest.approx(c.lamb(w), rel=1e-15)
        if not lamb:
            assert G.imag == 0.0


def test_correlation_memoizes():
    c = correlation(BathSpec("common", 1.0, gx=(1, 1)))
    first = c.lamb(0.37)
    assert c.lamb(0.37) is first


def test_markov_warning():
    hot = BathSpec("common", 1.0, gx=(1, 1))
    cold = BathSpec("common", 1e3, gx=(1, 1), mu=0.1)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        correlation(hot)
    with pytest.warns(UserWarning, match="Markov"):
        correlation(cold)
    tau_b, tau_r = cold.markov_times()
    assert tau_b == pytest.approx(1e3 / (2 * math.pi))
    assert tau_r == pytest.approx(100.0)


def test_markov_time_uses_cutoff_when_hot():
    b = BathSpec("common", 0.01, gx=(1, 1))
    assert b.markov_times()[0] == pytest.approx(1 / 20)


@pytest.mark.parametrize("kwargs", [
    dict(attachment="left", beta=1.0),
    dict(attachment="common", beta=0.0),
    dict(attachment="common", beta=float("inf")),
    dict(attachment="common", beta=1.0, mu=-1.0),
    dict(attachment="local1", beta=1.0, gx=(1, 1)),
    dict(attachment="local2", beta=1.0, gz=(1, 0)),
    dict(attachment="common", beta=1.0, gx=(1, 2, 3)),
])
def test_bathspec_validation(kwargs):
    with pytest.raises(ConfigError):
        BathSpec(**kwargs)


def test_spectral_validation():
    with pytest.raises(ConfigError):
        SpectralDensity("lorentz")
    with pytest.raises(ConfigError):
        SpectralDensity("ohmic", cutoff=0.0)


def test_couplings_scale_with_mu():
    b = BathSpec("common", 1.0, gx=(1.0, 0.5), gz=(0.2, 0.0), mu=0.01)
    assert b.couplings() == pytest.approx({"X1": 0.01, "X2": 0.005, "Z1": 0.002, "Z2": 0.0})
    assert b.has_xz_correlations
    assert not BathSpec("common", 1.0, gx=(1, 1), gz=(1, 1), split_channels=True).has_xz_correlations


@given(st.floats(0.05, 20.0), st.floats(0.001, 30.0))
def test_kms_property(beta, w):
    lhs = gamma_at(OHMIC, beta, -w) * math.exp(beta * w)
    assert lhs == pytest.approx(gamma_at(OHMIC, beta, w), rel=1e-12)
