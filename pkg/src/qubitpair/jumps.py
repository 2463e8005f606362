"""Frequency-resolved jump operators of the four interaction channels.

A channel operator ``A`` (``sx1``, ``sx2``, ``sz1`` or ``sz2``) is split into
components ``A(w)`` that lower the system energy by ``w``:
``A = sum_w A(w)`` and ``A(-w) = A(w)^dagger``.  In an eigenbasis ``{|e_n>}``
the dyad ``|e_a><e_b|`` carries frequency ``E_b - E_a``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .system import SX, SZ, SM, SP, on_qubit, diagonalize, build_hamiltonian

__all__ = [
    "CHANNELS", "channel_operator", "JumpOperator", "JumpTable",
    "global_jumps", "product_jumps", "local_jumps",
    "brute_force_jump_oracle", "bin_frequencies",
]

CHANNELS = ("X1", "X2", "Z1", "Z2")
BIN_TOL = 1e-9
_DROP_TOL = 1e-14
_LOCAL_WARN = 0.1


def channel_operator(channel):
    """Full 4x4 operator of a channel name."""
    kind, qubit = channel[0], int(channel[1])
    if kind == "X":
        return on_qubit(SX, qubit)
    if kind == "Z":
        return on_qubit(SZ, qubit)
    raise ValueError(f"unknown channel {channel!r}")


@dataclass(frozen=True)
class JumpOperator:
    """One component ``A_channel(frequency)``."""

    channel: str
    frequency: float
    matrix: np.ndarray


@dataclass(frozen=True)
class JumpTable:
    """All jump operators of one construction.

    Attributes
    ----------
    entries : tuple of JumpOperator
    construction : {"global_coupled", "global_uncoupled", "local"}
    """

    entries: tuple
    construction: str

    @property
    def frequencies(self):
        """Distinct ``|w|`` values, ascending."""
        return sorted({abs(e.frequency) for e in self.entries})

    def for_channel(self, channel):
        return [e for e in self.entries if e.channel == channel]

    def get(self, channel, frequency, tol=BIN_TOL):
        """Matrix of ``A_channel(frequency)``, zero if there is no such entry."""
        for e in self.entries:
            if e.channel == channel and abs(e.frequency - frequency) <= tol:
                return e.matrix
        return np.zeros((4, 4), dtype=complex)

    def channel_sum(self, channel):
        out = np.zeros((4, 4), dtype=complex)
        for e in self.for_channel(channel):
            out = out + e.matrix
        return out


def bin_frequencies(values, tol=BIN_TOL):
    """Map each frequency to a canonical representative.

    Magnitudes closer than ``tol`` (chained) share one bin.  The bin
    representative is 0 if the bin contains 0, else the bin mean; signs are
    reapplied afterwards so ``w`` and ``-w`` stay exact negatives.  Warns
    when a bin spans more than 1e-12.

    Returns
    -------
    dict
        ``{value: representative}`` for every input value.
    """
    mags = sorted({abs(float(v)) for v in values})
    rep = {}
    group = []

    def flush():
        if not group:
            return
        if group[-1] - group[0] > 1e-12:
            warnings.warn(
                f"merging distinct jump frequencies {group[0]!r} .. {group[-1]!r} "
                f"(spread {group[-1] - group[0]:.2e} <= bin tolerance {tol:.0e})",
                stacklevel=3)
        r = 0.0 if group[0] == 0.0 else math.fsum(group) / len(group)
        for g in group:
            rep[g] = r

    for m in mags:
        if group and m - group[-1] > tol:
            flush()
            group = []
        group.append(m)
    flush()
    out = {}
    for v in values:
        v = float(v)
        r = rep[abs(v)]
        out[v] = r if v >= 0 else -r
    return out


def _assemble(items, construction, tol=BIN_TOL):
    """Bin ``(channel, frequency, matrix)`` triples into a JumpTable."""
    rep = bin_frequencies([f for _, f, _ in items], tol)
    acc = {}
    for channel, f, m in items:
        key = (channel, rep[float(f)])
        acc[key] = acc.get(key, 0) + m
    entries = []
    for (channel, f), m in sorted(acc.items(), key=lambda kv: (CHANNELS.index(kv[0][0]), kv[0][1])):
        if np.max(np.abs(m)) > _DROP_TOL:
            entries.append(JumpOperator(channel, f, np.asarray(m, dtype=complex)))
    return JumpTable(tuple(entries), construction)


def _dyad_coefficients(theta, phi):
    """Nonzero matrix elements ``<e_a| A |e_b>`` with ``a < b`` or ``a == b``.

    Derived from the eigenvector form ``e0 = (-s_t, 0, 0, c_t)``,
    ``e1 = (0, -s_p, c_p, 0)``, ``e2 = (0, c_p, s_p, 0)``,
    ``e3 = (c_t, 0, 0, s_t)``.  All elements are real, so the element with
    ``a > b`` is the same number.
    """
    sp_, sm_ = math.sin(theta + phi), math.sin(theta - phi)
    cp_, cm_ = math.cos(theta + phi), math.cos(theta - phi)
    c2t, s2t = math.cos(2 * theta), math.sin(2 * theta)
    c2p, s2p = math.cos(2 * phi), math.sin(2 * phi)
    return {
        "X1": {(0, 2): cp_, (1, 3): cp_, (0, 1): -sp_, (2, 3): sp_},
        "X2": {(0, 2): -sm_, (1, 3): sm_, (0, 1): cm_, (2, 3): cm_},
        "Z1": {(0, 0): -c2t, (3, 3): c2t, (1, 1): -c2p, (2, 2): c2p,
               (0, 3): -s2t, (1, 2): -s2p},
        "Z2": {(0, 0): -c2t, (3, 3): c2t, (1, 1): c2p, (2, 2): -c2p,
               (0, 3): -s2t, (1, 2): s2p},
    }


def global_jumps(es):
    """Jump operators in the eigenbasis of the coupled Hamiltonian.

    Each channel operator is written as a sum of eigenbasis dyads with the
    closed-form coefficients of the two mixing angles; a dyad ``|e_a><e_b|``
    and its adjoint carry frequencies ``E_b - E_a`` and ``E_a - E_b``.
    Coinciding frequencies (across all channels) are merged by
    :func:`bin_frequencies`.

    For the Ising coupling the X channels end up at ``+-w_I, +-w_II`` and the
    Z channels at ``0, +-w_III, +-w_IV``.

    Parameters
    ----------
    es : EigenStructure

    Returns
    -------
    JumpTable
    """
    coeffs = _dyad_coefficients(es.theta, es.phi)
    E = es.energies
    items = []
    for channel in CHANNELS:
        for (a, b), c in coeffs[channel].items():
            if c == 0.0:
                continue
            m = c * es.dyad(a, b)
            items.append((channel, E[b] - E[a], m))
            if a != b:
                items.append((channel, E[a] - E[b], m.conj().T))
    return _assemble(items, "global_coupled")


def product_jumps(spec, construction="global_uncoupled"):
    """Jump operators of the uncoupled qubits.

    ``sx_j(w_j) = sm_j``, ``sx_j(-w_j) = sp_j`` and ``sz_j(0) = sz_j`` with
    ``w_1 = 1`` and ``w_2 = spec.omega2``; the coupling is ignored.
    """
    w = {1: 1.0, 2: float(spec.omega2)}
    items = []
    for q in (1, 2):
        items.append((f"X{q}", w[q], on_qubit(SM, q)))
        items.append((f"X{q}", -w[q], on_qubit(SP, q)))
        items.append((f"Z{q}", 0.0, on_qubit(SZ, q)))
    return _assemble(items, construction)


def local_jumps(spec):
    """Jump operators of the local construction.

    These are the uncoupled-qubit operators whatever the coupling, which is
    the zeroth order of a perturbative expansion in the coupling.  Warns when
    the coupling is not small (``>= 0.1``).
    """
    if spec.lam >= _LOCAL_WARN:
        warnings.warn(
            f"local jump operators assume weak qubit-qubit coupling; "
            f"lambda={spec.lam!r} is not small", stacklevel=2)
    return product_jumps(spec, construction="local")


def brute_force_jump_oracle(H, A, tol=BIN_TOL):
    """Decompose ``A`` by projecting onto eigenspaces of ``H`` numerically.

    ``A(w) = sum P_E A P_E'`` over eigenvalue pairs with ``E' - E = w``,
    with eigenvalues within ``tol`` treated as one eigenspace and gaps binned
    with the same tolerance.

    Parameters
    ----------
    H, A : array_like, shape (n, n)
        ``H`` must be Hermitian.

    Returns
    -------
    dict
        ``{frequency: matrix}``; entries with all elements below 1e-14 are
        omitted.
    """
    H = np.asarray(H, dtype=complex)
    A = np.asarray(A, dtype=complex)
    evals, evecs = np.linalg.eigh(H)
    levels = []
    for k, e in enumerate(evals):
        if levels and e - levels[-1][0][-1] <= tol:
            levels[-1][0].append(e)
            levels[-1][1].append(k)
        else:
            levels.append(([e], [k]))
    projs = []
    for energies, idx in levels:
        v = evecs[:, idx]
        projs.append((float(np.mean(energies)), v @ v.conj().T))
    gaps = [eb - ea for ea, _ in projs for eb, _ in projs]
    rep = bin_frequencies(gaps, tol)
    out = {}
    for ea, pa in projs:
        for eb, pb in projs:
            w = rep[float(eb - ea)]
            out[w] = out.get(w, 0) + pa @ A @ pb
    return {w: m for w, m in sorted(out.items()) if np.max(np.abs(m)) > _DROP_TOL}
