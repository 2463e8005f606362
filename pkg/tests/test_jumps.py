import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qubitpair.jumps import (CHANNELS, bin_frequencies, brute_force_jump_oracle,
                             channel_operator, global_jumps, local_jumps, product_jumps)
from qubitpair.system import (RWA, SM, SP, SX, Heisenberg, IsingXX, QubitPairSpec,
                              build_hamiltonian, diagonalize, jump_frequencies, on_qubit)

from oracles import eigen_projection, ising_eigen


def table_for(spec):
    return global_jumps(diagonalize(build_hamiltonian(spec)))


def as_dict(table, channel):
    return {e.frequency: e.matrix for e in table.for_channel(channel)}


def assert_tables_match(table, reference, tol=1e-12):
    """``reference`` is ``{channel: [(w, matrix), ...]}``; missing entries count as zero."""
    for channel in CHANNELS:
        ref = list(reference[channel])
        for w, m in ref:
            assert np.max(np.abs(table.get(channel, w) - m)) <= tol, (channel, w)
        for e in table.for_channel(channel):
            match = [m for w, m in ref if abs(w - e.frequency) <= 1e-9]
            assert match, (channel, e.frequency)


def test_uncoupled_x_components_are_ladder_operators():
    t = table_for(QubitPairSpec(0.5))
    f = jump_frequencies(diagonalize(build_hamiltonian(QubitPairSpec(0.5))))
    total = t.get("X1", f.I) + t.get("X1", f.II)
    np.testing.assert_allclose(total, on_qubit(SM, 1), atol=1e-15)


def test_z_component_at_outer_frequency():
    spec = QubitPairSpec(0.5, IsingXX(0.5))
    es = diagonalize(build_hamiltonian(spec))
    s2t = 0.5 / 0.9013878188659973
    assert math.sin(2 * es.theta) == pytest.approx(s2t, rel=1e-12)
    assert s2t == pytest.approx(0.5547001962252291, rel=1e-12)
    np.testing.assert_allclose(table_for(spec).get("Z1", es.jump_freqs.III), -s2t * es.dyad(0, 3),
                               atol=1e-12)


@pytest.mark.parametrize("spec", [QubitPairSpec(0.5, IsingXX(0.5)),
                                  QubitPairSpec(0.8, Heisenberg(0.1, -0.05, 0.2)),
                                  QubitPairSpec(0.9, RWA(0.05))])
def test_negative_frequency_is_adjoint(spec):
    t = table_for(spec)
    for e in t.entries:
        np.testing.assert_array_equal(t.get(e.channel, -e.frequency), e.matrix.conj().T)


def test_local_table_is_uncoupled_table():
    a = local_jumps(QubitPairSpec(0.99, IsingXX(1e-4)))
    b = table_for(QubitPairSpec(0.99))
    assert [(e.channel, e.frequency) for e in a.entries] == [(e.channel, e.frequency) for e in b.entries]
    for x, y in zip(a.entries, b.entries):
        np.testing.assert_array_equal(x.matrix, y.matrix)


def test_local_table_at_resonance():
    with pytest.warns(UserWarning):
        t = local_jumps(QubitPairSpec(1.0, IsingXX(0.1)))
    np.testing.assert_array_equal(t.get("X1", 1.0), on_qubit(SM, 1))
    np.testing.assert_array_equal(t.get("X2", -1.0), on_qubit(SP, 2))


def test_local_table_warns_at_strong_coupling():
    with pytest.warns(UserWarning, match="weak"):
        local_jumps(QubitPairSpec(0.5, IsingXX(0.2)))


def test_completeness():
    spec = QubitPairSpec(0.7, IsingXX(0.3))
    for t in (local_jumps(QubitPairSpec(0.7, IsingXX(0.01))), table_for(spec),
              product_jumps(QubitPairSpec(0.7))):
        for c in CHANNELS:
            np.testing.assert_allclose(t.channel_sum(c), channel_operator(c), atol=1e-14)


def test_oracle_diagonal_operator():
    H = np.diag([2.0, 0.5, -0.5, -2.0])
    out = brute_force_jump_oracle(H, on_qubit(np.diag([1, -1]), 1))
    assert list(out) == [0.0]


def test_oracle_identity():
    H = build_hamiltonian(QubitPairSpec(0.5, IsingXX(0.5)))
    out = brute_force_jump_oracle(H, np.eye(4))
    assert list(out) == [0.0]
    np.testing.assert_allclose(out[0.0], np.eye(4), atol=1e-14)


def test_oracle_x_frequencies():
    spec = QubitPairSpec(0.5, IsingXX(0.5))
    f = jump_frequencies(diagonalize(build_hamiltonian(spec)))
    out = brute_force_jump_oracle(build_hamiltonian(spec), on_qubit(SX, 1))
    np.testing.assert_allclose(sorted(out), sorted([f.I, f.II, -f.I, -f.II]), atol=1e-12)


def test_ising_table_frequencies():
    spec = QubitPairSpec(0.5, IsingXX(0.5))
    f = jump_frequencies(diagonalize(build_hamiltonian(spec)))
    t = table_for(spec)
    for c in ("X1", "X2"):
        np.testing.assert_allclose(sorted(as_dict(t, c)), [-f.I, -f.II, f.II, f.I], atol=1e-15)
    for c in ("Z1", "Z2"):
        np.testing.assert_allclose(sorted(as_dict(t, c)), [-f.III, -f.IV, 0, f.IV, f.III],
                                   atol=1e-15)


def test_closed_form_ising_components():
    spec = QubitPairSpec(0.7, IsingXX(0.2))
    _, _, f, x, z = ising_eigen(spec)
    t = table_for(spec)
    for m in (1, 2):
        for j in ("I", "II"):
            np.testing.assert_allclose(t.get(f"X{m}", f[j]), x[m][j], atol=1e-14)
        np.testing.assert_allclose(t.get(f"Z{m}", 0.0), z[m]["0"], atol=1e-14)
        for j in ("III", "IV"):
            np.testing.assert_allclose(t.get(f"Z{m}", f[j]), z[m][j], atol=1e-14)


def test_zero_frequency_z_is_diagonal_in_eigenbasis():
    es = diagonalize(build_hamiltonian(QubitPairSpec(0.6, Heisenberg(0.2, 0.1, 0.05))))
    t = global_jumps(es)
    for c in ("Z1", "Z2"):
        m = es.basis.conj().T @ t.get(c, 0.0) @ es.basis
        assert np.max(np.abs(m - np.diag(np.diag(m)))) <= 1e-14


def test_rwa_has_no_outer_z_component():
    # the exchange coupling leaves |11> and |00> unmixed
    t = table_for(QubitPairSpec(0.9, RWA(0.1)))
    f = jump_frequencies(diagonalize(build_hamiltonian(QubitPairSpec(0.9, RWA(0.1)))))
    assert not np.any(t.get("Z1", f.III))
    assert f.III == pytest.approx(1.9, abs=1e-15)


def test_binning_merges_close_values():
    with pytest.warns(UserWarning, match="merging"):
        rep = bin_frequencies([1.0, 1.0 + 5e-10, -1.0])
    assert rep[1.0] == rep[1.0 + 5e-10] == -rep[-1.0]
    with pytest.warns(UserWarning, match="merging"):
        assert bin_frequencies([1e-10, 0.0])[1e-10] == 0.0


def test_binning_keeps_distinct_values():
    rep = bin_frequencies([1.0, 1.0 + 1e-6])
    assert rep[1.0] != rep[1.0 + 1e-6]


def spec_strategy():
    kinds = st.sampled_from(["ising", "heisenberg", "rwa"])

    @st.composite
    def build(draw):
        kind = draw(kinds)
        w2 = draw(st.floats(0.05, 1.0))
        lam = draw(st.floats(0.0, 1.5))
        if kind == "ising":
            return QubitPairSpec(w2, IsingXX(lam))
        if kind == "rwa":
            return QubitPairSpec(w2, RWA(lam))
        fy, fz = draw(st.floats(-1, 1)), draw(st.floats(-1, 1))
        return QubitPairSpec(w2, Heisenberg(lam, fy * lam, fz * lam))
    return build()


@settings(max_examples=500)
@given(spec_strategy())
def test_global_jumps_match_eigen_projection(spec):
    H = build_hamiltonian(spec)
    ev = np.linalg.eigvalsh(H)
    gaps = sorted({abs(a - b) for a in ev for b in ev})
    # skip draws with two distinct Bohr frequencies inside the bin tolerance region
    if any(1e-9 < b - a < 1e-6 for a, b in zip(gaps, gaps[1:])):
        return
    if any(1e-9 < abs(a - b) < 1e-6 for a in ev for b in ev):
        return
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        table = table_for(spec)
        ref = {c: list(brute_force_jump_oracle(H, channel_operator(c)).items()) for c in CHANNELS}
    assert_tables_match(table, ref)
    ref2 = {c: eigen_projection(H, channel_operator(c)) for c in CHANNELS}
    assert_tables_match(table, ref2)


@settings(max_examples=200)
@given(spec_strategy())
def test_frequency_parity(spec):
    # near-degenerate draws merge bins; parity must survive the merge
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        t = table_for(spec)
    for e in t.entries:
        partner = [x for x in t.for_channel(e.channel) if x.frequency == -e.frequency]
        assert len(partner) == 1
