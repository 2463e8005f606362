import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qubitpair.bath import BathSpec, correlation
from qubitpair.dynamics import (beat_spectrum, fidelity, gibbs_state, heat_currents,
                                negativity, overlapped_state, partial_transpose,
                                propagate, steady_state, synchronization_measure,
                                trace_distance)
from qubitpair.errors import NoConvergence
from qubitpair.liouvillian import build_variant, coefficients, commutator_superop
from qubitpair.system import IsingXX, QubitPairSpec, build_hamiltonian, ket

COMMON = [BathSpec("common", 1.0, gx=(1, 1))]
SEPARATE = [BathSpec("local1", 1.0, gx=(1, 0)), BathSpec("local2", 0.1, gx=(0, 1))]


def pure(v):
    v = np.asarray(v, dtype=complex)
    return np.outer(v, v.conj())


def random_state(rng, rank=4):
    a = rng.normal(size=(4, rank)) + 1j * rng.normal(size=(4, rank))
    rho = a @ a.conj().T
    return rho / np.trace(rho)


def test_zero_generator_keeps_state():
    rho = overlapped_state()
    tr = propagate(np.zeros((16, 16)), rho, np.linspace(0, 10, 11))
    assert np.max(np.abs(tr.states - rho)) == 0


def test_commutator_only_keeps_populations():
    spec = QubitPairSpec(0.7)
    L = commutator_superop(build_hamiltonian(spec))
    tr = propagate(L, overlapped_state(), np.linspace(0, 50, 101))
    np.testing.assert_allclose(tr.observable("sz1"), 0.0, atol=1e-14)
    np.testing.assert_allclose(tr.observable("sz2"), 0.0, atol=1e-14)
    assert np.ptp(tr.observable("sx1")) > 1.0


def test_amplitude_damping_of_one_qubit():
    bath = [BathSpec("local1", 50.0, gx=(1, 0))]
    spec = QubitPairSpec(0.5)
    L = build_variant("GF", spec, bath)
    g11 = coefficients(bath, [correlation(b) for b in bath], "uncoupled",
                       {"1": 1.0, "2": 0.5}).gamma[0, 0].real
    # three decades of decay
    times = np.linspace(0, 3 * math.log(10) / g11, 301)
    tr = propagate(L, pure(ket("11")), times)
    excited = 0.5 * (1 + tr.observable("sz1"))
    np.testing.assert_allclose(excited, np.exp(-g11 * times), rtol=1e-6)


def test_expm_and_adaptive_agree():
    L = build_variant("GP", QubitPairSpec(0.99), COMMON)
    times = np.arange(0, 2e4 + 1, 10.0)
    a = propagate(L, overlapped_state(), times)
    b = propagate(L, overlapped_state(), times, method="adaptive")
    assert max(trace_distance(x, y) for x, y in zip(a.states, b.states)) <= 1e-8


def test_nonuniform_grid_matches_uniform():
    L = build_variant("GP", QubitPairSpec(0.9, IsingXX(0.01)), COMMON)
    uniform = propagate(L, overlapped_state(), np.arange(0, 101, 1.0))
    picked = propagate(L, overlapped_state(), np.array([0, 3, 10, 55, 100.0]))
    np.testing.assert_allclose(picked.states, uniform.states[[0, 3, 10, 55, 100]], atol=1e-12)


def test_trajectory_invariants():
    L = build_variant("GP", QubitPairSpec(0.99, IsingXX(1e-4)), COMMON)
    tr = propagate(L, overlapped_state(), np.arange(0, 3e4 + 1, 5.0))
    assert tr.trace_residual <= 1e-10 and tr.hermiticity_residual <= 1e-10
    assert np.min(tr.min_eigenvalues) >= -1e-6
    gf = propagate(build_variant("GF", QubitPairSpec(0.99, IsingXX(1e-4)), COMMON),
                   overlapped_state(), np.arange(0, 3e4 + 1, 50.0))
    assert np.min(gf.min_eigenvalues) >= -1e-12


@pytest.mark.parametrize("times", [np.array([]), np.array([0.0, 2.0, 1.0])])
def test_propagate_rejects_bad_times(times):
    with pytest.raises(ValueError):
        propagate(np.zeros((16, 16)), overlapped_state(), times)


def test_propagate_rejects_bad_state():
    with pytest.raises(ValueError, match="trace"):
        propagate(np.zeros((16, 16)), 2 * overlapped_state(), [0.0, 1.0])


def test_gibbs_fixed_point():
    spec = QubitPairSpec(0.5, IsingXX(0.5))
    ss = steady_state(build_variant("GF", spec, COMMON))
    assert ss.nullity == 1
    assert trace_distance(ss.rho, gibbs_state(build_hamiltonian(spec), 1.0)) <= 1e-8


def test_commutator_only_steady_state_needs_initial_state():
    L = commutator_superop(build_hamiltonian(QubitPairSpec(0.7, IsingXX(0.1))))
    with pytest.raises(ValueError, match="rho0"):
        steady_state(L)


def test_degenerate_steady_state_depends_on_initial_state():
    # pure dephasing keeps populations; unequal weights leave no
    # decoherence-free coherence behind
    bath = [BathSpec("common", 1.0, gz=(1, 0.5))]
    L = build_variant("GF", QubitPairSpec(0.7), bath)
    a = steady_state(L, pure(ket("11")))
    b = steady_state(L, overlapped_state())
    assert a.nullity > 1
    assert trace_distance(a.rho, pure(ket("11"))) <= 1e-8
    np.testing.assert_allclose(np.diag(b.rho).real, 0.25, atol=1e-8)


def test_degenerate_steady_state_reports_no_convergence():
    L = commutator_superop(build_hamiltonian(QubitPairSpec(0.7, IsingXX(0.1))))
    with pytest.raises(NoConvergence):
        steady_state(L, overlapped_state(), horizon=1e3)


@pytest.mark.filterwarnings("ignore:local jump operators")
@pytest.mark.filterwarnings("ignore:trajectory drifts")  # one exp(L 1e7) step
@pytest.mark.parametrize("variant", ["GP", "GF", "LP", "LF"])
def test_steady_state_residual_and_long_time_limit(variant):
    L = build_variant(variant, QubitPairSpec(0.5, IsingXX(0.1)), SEPARATE)
    ss = steady_state(L)
    assert ss.residual <= 1e-9
    late = propagate(L, overlapped_state(), np.array([0.0, 1e7])).states[-1]
    assert trace_distance(ss.rho, late) <= 1e-8


def test_fidelity_examples():
    rho = overlapped_state()
    assert fidelity(rho, rho) == pytest.approx(1.0, abs=1e-12)
    assert fidelity(pure(ket("00")), pure(ket("11"))) == pytest.approx(0.0, abs=1e-12)
    assert fidelity(pure(ket("10")), np.eye(4) / 4) == pytest.approx(0.25, abs=1e-12)


def test_fidelity_rejects_non_positive():
    bad = np.diag([1.1, -0.1, 0, 0]).astype(complex)
    with pytest.raises(ValueError):
        fidelity(bad, np.eye(4) / 4)


def test_negativity_examples():
    bell = pure((ket("00") + ket("11")) / math.sqrt(2))
    assert negativity(bell) == pytest.approx(0.5, abs=1e-12)
    assert negativity(overlapped_state()) == pytest.approx(0.0, abs=1e-15)
    assert negativity(pure(ket("10"))) == pytest.approx(0.0, abs=1e-15)


@settings(max_examples=100)
@given(st.integers(0, 2 ** 32 - 1))
def test_fidelity_symmetric_and_bounded(seed):
    rng = np.random.default_rng(seed)
    a, b = random_state(rng), random_state(rng, rank=int(rng.integers(1, 5)))
    f = fidelity(a, b)
    assert 0.0 <= f <= 1.0
    assert abs(f - fidelity(b, a)) <= 1e-12


@settings(max_examples=100)
@given(st.integers(0, 2 ** 32 - 1))
def test_negativity_side_independent(seed):
    rng = np.random.default_rng(seed)
    rho = random_state(rng, rank=int(rng.integers(1, 5)))
    r = rho.reshape(2, 2, 2, 2)
    pt1 = r.transpose(2, 1, 0, 3).reshape(4, 4)
    ev = np.linalg.eigvalsh(pt1)
    assert negativity(rho) == pytest.approx(-np.sum(ev[ev < 0]), abs=1e-12)
    assert np.allclose(np.linalg.eigvalsh(partial_transpose(rho)).sum(), 1.0)


@settings(max_examples=50)
@given(st.integers(0, 2 ** 32 - 1))
def test_product_states_have_zero_negativity(seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    b = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    ra, rb = a @ a.conj().T, b @ b.conj().T
    rho = np.kron(ra / np.trace(ra), rb / np.trace(rb))
    assert negativity(rho) <= 1e-12


@pytest.mark.parametrize("baths", [
    [BathSpec("local1", 1.0, gx=(1, 0)), BathSpec("local2", 1.0, gx=(0, 1))],
    [BathSpec("common", 1.0, gx=(1, 1), gz=(0.3, 0.2)), BathSpec("local1", 1.0, gx=(1, 0))],
], ids=["separate", "common+local"])
def test_equal_temperature_currents_vanish(baths):
    L = build_variant("GF", QubitPairSpec(0.8, IsingXX(0.05)), baths)
    J = heat_currents(L, steady_state(L).rho)
    assert np.max(np.abs(J)) <= 1e-10


def test_local_equation_carries_equilibrium_current():
    # the local dissipators do not see the coupling, so equal temperatures
    # still drive a current of second order in the coupling
    baths = [BathSpec("local1", 1.0, gx=(1, 0)), BathSpec("local2", 1.0, gx=(0, 1))]
    J = [heat_currents(L, steady_state(L).rho)[1]
         for L in (build_variant("LF", QubitPairSpec(0.8, IsingXX(lam)), baths)
                   for lam in (0.01, 0.02))]
    assert abs(J[0]) > 1e-8
    assert J[1] / J[0] == pytest.approx(4.0, rel=0.05)


def test_currents_balance_in_steady_state():
    for variant in ("GP", "GF", "LF"):
        L = build_variant(variant, QubitPairSpec(0.999, IsingXX(1e-3)), SEPARATE)
        J = heat_currents(L, steady_state(L).rho)
        assert abs(J.sum()) <= 1e-12 * max(1.0, np.max(np.abs(J))) + 1e-15
        # the hot bath (beta = 0.1) feeds the qubits
        assert J[1] > 0 > J[0]


def test_beat_of_pure_tone():
    times = np.arange(4096) * 10.0
    peak = beat_spectrum(times, np.cos(0.01 * times))
    bin_width = 2 * math.pi / (4096 * 10.0)
    assert abs(peak.frequency - 0.01) <= bin_width
    assert peak.amplitude == pytest.approx(1.0, rel=0.1)


def test_beat_of_constant_series():
    times = np.arange(256) * 1.0
    peak = beat_spectrum(times, np.full(256, 0.3))
    assert peak.peak is None and peak.frequency is None and peak.amplitude == 0.0


def test_beat_needs_uniform_grid():
    with pytest.raises(ValueError):
        beat_spectrum(np.array([0, 1, 3, 4, 5.0]), np.zeros(5))


def test_sync_of_identical_and_opposite_series():
    t = np.arange(2000) * 0.5
    a = np.sin(0.3 * t) + 0.1 * np.cos(1.7 * t)
    same = synchronization_measure(t, a, a, window=50.0)
    opp = synchronization_measure(t, a, -a, window=50.0)
    np.testing.assert_allclose(same.values, 1.0, atol=1e-12)
    np.testing.assert_allclose(opp.values, -1.0, atol=1e-12)
    assert same.sustained_after(0.9) == pytest.approx(same.times[0])


def test_sync_masks_flat_windows():
    t = np.arange(100) * 1.0
    s = synchronization_measure(t, np.ones(100), np.sin(t), window=20.0)
    assert np.all(np.ma.getmaskarray(s.values))
    assert s.sustained_after() is None


def test_sync_onset_after_dephasing():
    t = np.arange(4000) * 1.0
    rng = np.random.default_rng(1)
    noise = rng.normal(size=4000) * np.exp(-t / 500)
    a = np.sin(0.2 * t)
    s = synchronization_measure(t, a, a + 3 * noise, window=100.0)
    onset = s.sustained_after(0.9)
    assert onset is not None and 200 < onset < 3000


@pytest.mark.parametrize("window", [5.0, 1e6])
def test_sync_rejects_bad_window(window):
    t = np.arange(100) * 1.0
    with pytest.raises(ValueError):
        synchronization_measure(t, np.sin(t), np.cos(t), window=window)


def test_overlapped_state():
    rho = overlapped_state()
    np.testing.assert_allclose(rho, np.full((4, 4), 0.25), atol=1e-15)


def test_unknown_observable():
    tr = propagate(np.zeros((16, 16)), overlapped_state(), [0.0, 1.0])
    with pytest.raises(KeyError):
        tr.observable("sy1")
    with pytest.raises(ValueError):
        tr.observable("fidelity")
