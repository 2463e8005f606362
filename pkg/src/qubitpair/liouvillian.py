"""Master-equation generators for the two-qubit system.

Vectorization is column stacking: ``vec(rho) = rho.reshape(-1, order="F")``
and ``rho -> A rho B`` becomes ``kron(B.T, A)``.

The generator is built from the Redfield form

    d rho/dt = -i[H, rho] + sum_a sum_(e1, e2) g1 g2 Gamma_a(w1)
               (A1 rho A2^dag - A2^dag A1 rho) + h.c.

where ``e1 = (channel1, w1, A1)`` and ``e2`` run over the jump table entries
coupled to bath ``a`` with couplings ``g1``, ``g2``.  A secular rule decides
which pairs ``(e1, e2)`` survive.  Every rule keeps a pair together with its
swap, which lets the surviving terms be split exactly into a Hermitian
Lamb-shift Hamiltonian and a dissipator with rates
``g1 g2 (Gamma(w1) + conj Gamma(w2))``.
"""
from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .bath import BathSpec, DEFAULT_MU, correlation
from .errors import ConfigError, CrossingSingularity
from .jumps import BIN_TOL, global_jumps, local_jumps, product_jumps
from .system import (QubitPairSpec, build_hamiltonian,
                     detect_frequency_crossing, diagonalize)

__all__ = [
    "SecularPolicy", "FrequencyPair", "secular_filter", "Liouvillian",
    "assemble", "build_variant", "gksl_diagnostics", "GKSLReport",
    "coefficients", "CoefficientTable", "brute_force_superoperator",
    "vec", "unvec", "commutator_superop", "VARIANTS", "CONSTRUCTIONS",
    "liouvillian_to_json", "liouvillian_from_json",
]

VARIANTS = ("GP", "GF", "LP", "LF")
CONSTRUCTIONS = ("global_coupled", "global_uncoupled", "local")
EQUAL_TOL = 1e-12
LOCAL_GUARD = 0.5
_I4 = np.eye(4, dtype=complex)


def vec(rho):
    return np.asarray(rho, dtype=complex).reshape(-1, order="F")


def unvec(v):
    return np.asarray(v).reshape(4, 4, order="F")


def commutator_superop(H):
    """Superoperator of ``rho -> -i [H, rho]``."""
    H = np.asarray(H, dtype=complex)
    return -1j * (np.kron(_I4, H) - np.kron(H.T, _I4))


@dataclass(frozen=True)
class SecularPolicy:
    """Which pairs of Bohr frequencies survive the secular approximation.

    Parameters
    ----------
    mode : {"partial", "full"}
        ``full`` keeps a pair only if the two frequencies are equal.
    rule : {"paper", "threshold"}
        Partial-mode rule.  ``paper`` keeps x-x pairs of equal sign, z-z pairs
        whose frequencies both lie in the slow set (0 and, for the coupled
        construction, ``+-w_IV``) or are equal, and no x-z pairs.
        ``threshold`` keeps any pair with ``|w - w'| <= epsilon`` except
        opposite-sign (squeezing-like) ones.
    epsilon : float, optional
        Threshold; defaults to ``10 mu**2``.
    mu : float
        Qubit-bath coupling scale; also sets the crossing tolerance ``mu**2``.
    tau_B : float, optional
        Bath correlation time, recorded for reference.
    """

    mode: str = "partial"
    rule: str = "paper"
    epsilon: Optional[float] = None
    mu: float = DEFAULT_MU
    tau_B: Optional[float] = None

    def __post_init__(self):
        if self.mode not in ("partial", "full"):
            raise ConfigError(f"secular mode must be 'partial' or 'full', got {self.mode!r}")
        if self.rule not in ("paper", "threshold"):
            raise ConfigError(f"secular rule must be 'paper' or 'threshold', got {self.rule!r}")
        if self.epsilon is not None and not self.epsilon >= 0:
            raise ConfigError(f"threshold must be nonnegative, got {self.epsilon!r}")

    @property
    def tau_R(self):
        return self.mu ** -2

    @property
    def threshold(self):
        return 10.0 * self.mu ** 2 if self.epsilon is None else self.epsilon

    def keeps(self, omega, omega_p, kind, slow=(0.0,)):
        """Whether the pair ``(omega, omega_p)`` of channel kinds ``kind`` survives.

        ``kind`` is one of ``"xx", "zz", "xz", "zx"``.  The first frequency
        belongs to the operator left of ``rho``, the second to the adjoint
        operator on its right.
        """
        if self.mode == "full":
            return abs(omega - omega_p) <= EQUAL_TOL
        if self.rule == "threshold":
            return abs(omega - omega_p) <= self.threshold and omega * omega_p >= 0
        if kind in ("xz", "zx"):
            return False
        if kind == "xx":
            return omega * omega_p >= 0
        if abs(omega - omega_p) <= EQUAL_TOL:
            return True
        return (any(abs(omega - s) <= BIN_TOL for s in slow)
                and any(abs(omega_p - s) <= BIN_TOL for s in slow))


@dataclass(frozen=True)
class FrequencyPair:
    omega: float
    omega_p: float
    kind: str = "xx"


def secular_filter(pairs, policy, slow=(0.0,)):
    """Subset of ``pairs`` kept by ``policy``, in input order.

    Parameters
    ----------
    pairs : iterable of FrequencyPair
    policy : SecularPolicy
    slow : sequence of float
        Slow z frequencies for the paper rule, including their signs.
    """
    return [p for p in pairs if policy.keeps(p.omega, p.omega_p, p.kind, slow)]


@dataclass(frozen=True, eq=False)
class Liouvillian:
    """Assembled 16x16 generator and its parts.

    Attributes
    ----------
    matrix : ndarray
        ``hamiltonian_part + lamb_shift_part + dissipator_part``.
    hamiltonian : ndarray, shape (4, 4)
        Hamiltonian in the commutator (without the Lamb shift).
    lamb_hamiltonian : ndarray, shape (4, 4)
    bath_parts : tuple of (ndarray, ndarray)
        Per-bath Lamb-shift and dissipator superoperators.
    rates : tuple of dict
        Per bath, ``{(i, j): rate}`` over pairs of jump-table entry indices.
    variant : str or None
        ``GP``, ``GF``, ``LP`` or ``LF``.
    """

    matrix: np.ndarray
    hamiltonian_part: np.ndarray
    lamb_shift_part: np.ndarray
    dissipator_part: np.ndarray
    hamiltonian: np.ndarray
    lamb_hamiltonian: np.ndarray
    bath_parts: tuple
    rates: tuple
    jump_table: object
    variant: Optional[str]
    construction: str
    spec: QubitPairSpec
    baths: tuple
    policy: SecularPolicy
    lamb_shift: bool = True
    metadata: dict = field(default_factory=dict)

    def apply(self, rho):
        return unvec(self.matrix @ vec(rho))

    def bath_generator(self, k):
        """Superoperator of everything sourced by bath ``k``."""
        lamb, diss = self.bath_parts[k]
        return lamb + diss


def _variant_tag(construction, policy):
    head = "L" if construction == "local" else "G"
    return head + ("F" if policy.mode == "full" else "P")


def _channel_kind(c1, c2):
    return (c1[0] + c2[0]).lower()


def assemble(spec, baths, construction="global_coupled", policy=None,
             lamb_shift=True, strict_local=False, override_validity_guard=False,
             corrs=None):
    """Build the generator for one construction and secular policy.

    Parameters
    ----------
    spec : QubitPairSpec
    baths : sequence of BathSpec
    construction : {"global_coupled", "global_uncoupled", "local"}
        Which jump operators to use.  ``local`` uses the uncoupled-qubit jump
        operators but keeps the full Hamiltonian in the commutator (unless
        ``strict_local``).  ``global_uncoupled`` requires zero coupling.
    policy : SecularPolicy, optional
        Defaults to the partial paper rule.
    lamb_shift : bool
        Include the Lamb-shift Hamiltonian.
    strict_local : bool
        Drop the qubit-qubit coupling from the local commutator.
    override_validity_guard : bool
        Allow local builds with coupling ``>= 0.5`` (with a warning).
    corrs : sequence of BathCorrelation, optional
        Reuse precomputed (memoized) correlations, one per bath.

    Returns
    -------
    Liouvillian

    Raises
    ------
    ConfigError
        Local build at strong coupling without override, uncoupled build
        with nonzero coupling, or an unknown construction.
    CrossingSingularity
        Coupled build whose secular rule drops x-z pairs while a bath
        correlates x and z channels and an X frequency meets a Z frequency.
    """
    policy = policy or SecularPolicy()
    baths = tuple(baths)
    if construction not in CONSTRUCTIONS:
        raise ConfigError(f"construction must be one of {CONSTRUCTIONS}, got {construction!r}")
    for b in baths:
        if not isinstance(b, BathSpec):
            raise ConfigError(f"expected BathSpec, got {type(b).__name__}")

    H_S = build_hamiltonian(spec)
    slow = (0.0,)
    if construction == "global_uncoupled":
        if spec.lam != 0.0:
            raise ConfigError("global_uncoupled construction requires zero coupling; "
                              "use global_coupled or local")
        table = product_jumps(spec)
        H = H_S
    elif construction == "local":
        if spec.lam >= LOCAL_GUARD:
            if not override_validity_guard:
                raise ConfigError(
                    f"local master equation is not valid for coupling {spec.lam!r} "
                    f">= {LOCAL_GUARD}; set override_validity_guard to build it anyway")
            warnings.warn(f"building a local master equation at coupling {spec.lam!r}",
                          stacklevel=2)
        table = local_jumps(spec)
        H = build_hamiltonian(spec.uncoupled()) if strict_local else H_S
    else:
        drops_xz = policy.mode == "full" or policy.rule == "paper"
        if drops_xz and any(b.has_xz_correlations for b in baths):
            check = detect_frequency_crossing(spec, tol=policy.mu ** 2)
            if check.crossing:
                raise CrossingSingularity(spec.lam, spec.omega_plus, spec.omega_minus,
                                          check.residual)
        es = diagonalize(H_S)
        table = global_jumps(es)
        w4 = es.energies[2] - es.energies[1]
        slow = (0.0, w4, -w4)
        H = H_S

    if corrs is None:
        corrs = [correlation(b, lamb_shift=lamb_shift) for b in baths]
    entries = table.entries
    bath_parts = []
    rates = []
    lamb_total = np.zeros((16, 16), dtype=complex)
    diss_total = np.zeros((16, 16), dtype=complex)
    H_LS = np.zeros((4, 4), dtype=complex)
    for b, corr in zip(baths, corrs):
        g = b.couplings()
        active = [(i, e) for i, e in enumerate(entries) if g[e.channel] != 0.0]
        cross = np.zeros((16, 16), dtype=complex)
        K = np.zeros((4, 4), dtype=complex)
        h_b = np.zeros((4, 4), dtype=complex)
        bath_rates = {}
        for i, e1 in active:
            for j, e2 in active:
                kind = _channel_kind(e1.channel, e2.channel)
                if b.split_channels and kind in ("xz", "zx"):
                    continue
                if not policy.keeps(e1.frequency, e2.frequency, kind, slow):
                    continue
                gg = g[e1.channel] * g[e2.channel]
                G1 = corr.Gamma(e1.frequency)
                G2 = corr.Gamma(e2.frequency)
                rate = gg * (G1 + G2.conjugate())
                X = e2.matrix.conj().T @ e1.matrix
                cross += rate * np.kron(e2.matrix.conj(), e1.matrix)
                K += rate * X
                if lamb_shift:
                    h_b += gg * (G1 - G2.conjugate()) / 2j * X
                bath_rates[(i, j)] = rate
        diss = cross - 0.5 * (np.kron(_I4, K) + np.kron(K.T, _I4))
        h_b = 0.5 * (h_b + h_b.conj().T)
        lamb = commutator_superop(h_b)
        bath_parts.append((lamb, diss))
        rates.append(bath_rates)
        lamb_total = lamb_total + lamb
        diss_total = diss_total + diss
        H_LS = H_LS + h_b

    ham = commutator_superop(H)
    matrix = ham + lamb_total + diss_total
    variant = _variant_tag(construction, policy)
    return Liouvillian(
        matrix=matrix, hamiltonian_part=ham, lamb_shift_part=lamb_total,
        dissipator_part=diss_total, hamiltonian=H, lamb_hamiltonian=H_LS,
        bath_parts=tuple(bath_parts), rates=tuple(rates), jump_table=table,
        variant=variant, construction=construction, spec=spec, baths=baths,
        policy=policy, lamb_shift=bool(lamb_shift),
        metadata={"strict_local": bool(strict_local),
                  "override_validity_guard": bool(override_validity_guard)})


def build_variant(variant, spec, baths, rule="paper", epsilon=None, mu=None, **kwargs):
    """Assemble one of ``GP``, ``GF``, ``LP``, ``LF``.

    ``rule`` and ``epsilon`` only matter for the partial variants.  ``mu``
    defaults to the largest bath coupling scale.  Remaining keyword
    arguments go to :func:`assemble`.
    """
    if variant not in VARIANTS:
        raise ConfigError(f"unknown variant {variant!r}; expected one of {VARIANTS}")
    if mu is None:
        mu = max((b.mu for b in baths), default=DEFAULT_MU)
    mode = "full" if variant[1] == "F" else "partial"
    policy = SecularPolicy(mode=mode, rule=rule, epsilon=epsilon, mu=mu)
    construction = "local" if variant[0] == "L" else "global_coupled"
    return assemble(spec, baths, construction, policy, **kwargs)


@dataclass(frozen=True)
class GKSLReport:
    """Advisory diagnostics of an assembled generator.

    ``group_min_eigenvalues`` lists, per connected group of jump entries
    (entries linked by a kept pair), the smallest eigenvalue of the rate
    matrix restricted to that group.  Nonnegative everywhere means the
    dissipator has GKLS form.
    """

    min_rate_eigenvalue: float
    group_min_eigenvalues: tuple
    trace_residual: float
    hermiticity_residual: float
    spectral_abscissa: float

    @property
    def is_gksl(self):
        return self.min_rate_eigenvalue >= -1e-12


def _hermitian_basis():
    out = []
    for a in range(4):
        for b in range(a, 4):
            m = np.zeros((4, 4), dtype=complex)
            m[a, b] = m[b, a] = 1.0
            out.append(m)
            if a != b:
                m = np.zeros((4, 4), dtype=complex)
                m[a, b], m[b, a] = 1j, -1j
                out.append(m)
    return out


def gksl_diagnostics(L):
    """Rate-matrix positivity, trace and hermiticity residuals, stability."""
    n = len(L.jump_table.entries)
    K = np.zeros((n, n), dtype=complex)
    linked = np.eye(n, dtype=bool)
    for bath_rates in L.rates:
        for (i, j), r in bath_rates.items():
            K[i, j] += r
            linked[i, j] = linked[j, i] = True
    seen = set()
    group_mins = []
    for start in range(n):
        if start in seen or not np.any(K[start]):
            continue
        group, stack = [], [start]
        while stack:
            i = stack.pop()
            if i in seen:
                continue
            seen.add(i)
            group.append(i)
            stack.extend(int(j) for j in np.flatnonzero(linked[i]) if j not in seen)
        sub = K[np.ix_(sorted(group), sorted(group))]
        group_mins.append(float(np.linalg.eigvalsh(0.5 * (sub + sub.conj().T))[0]))
    trace_row = vec(_I4).conj()
    trace_res = float(np.max(np.abs(trace_row @ L.matrix)))
    herm_res = 0.0
    for m in _hermitian_basis():
        out = L.apply(m)
        herm_res = max(herm_res, float(np.max(np.abs(out - out.conj().T))))
    abscissa = float(np.max(np.linalg.eigvals(L.matrix).real))
    return GKSLReport(min(group_mins, default=0.0), tuple(group_mins), trace_res,
                      herm_res, abscissa)


def brute_force_superoperator(apply):
    """Matrix of a linear map on 4x4 matrices, built column by column.

    Column ``k`` is ``vec(apply(E_k))`` where ``E_k`` is the ``k``-th
    column-stacked unit matrix.
    """
    out = np.zeros((16, 16), dtype=complex)
    for k in range(16):
        e = np.zeros(16, dtype=complex)
        e[k] = 1.0
        out[:, k] = vec(apply(unvec(e)))
    return out


X_LABELS = ("I", "II")
Z_LABELS = ("0", "+IV", "-IV")
ZD_LABELS = ("+III", "-III")


@dataclass(frozen=True)
class CoefficientTable:
    """Coefficients of the two-qubit master equation in tabulated form.

    For ``kind="uncoupled"`` arrays are indexed ``[j, k]`` by qubit and there
    is a scalar ``s0``.  For ``kind="coupled"`` arrays are indexed
    ``[m, n, j, k]`` with qubits ``m, n`` and frequency labels from
    ``X_LABELS`` (``gamma``, ``gamma_t``, ``s``, ``s_t``) or ``Z_LABELS``
    (``eta``, ``r``), while ``zeta`` and ``u`` are ``[m, n, j]`` over
    ``ZD_LABELS``.  ``freqs`` maps each label to its signed frequency.
    """

    kind: str
    freqs: dict
    gamma: np.ndarray
    gamma_t: np.ndarray
    eta: np.ndarray
    s: np.ndarray
    s_t: np.ndarray
    s0: complex = 0.0
    zeta: Optional[np.ndarray] = None
    r: Optional[np.ndarray] = None
    u: Optional[np.ndarray] = None

    @property
    def s1(self):
        return self.s[0, 0] - self.s_t[0, 0]

    @property
    def s2(self):
        return self.s[1, 1] - self.s_t[1, 1]

    @property
    def s_plus(self):
        return self.s[0, 1] + self.s_t[1, 0]

    @property
    def s_minus(self):
        return self.s[1, 0] + self.s_t[0, 1]


def _pair_sum(baths, corrs, weight, m, n, w1, w2, sign):
    """``sum_a g_m g_n [Gamma_a(w1) + sign * conj Gamma_a(w2)]`` over eligible baths.

    Cross terms (``m != n``) take only common baths; diagonal terms take the
    common baths and the local bath of qubit ``m``.
    """
    total = 0j
    for b, c in zip(baths, corrs):
        if m != n and b.attachment != "common":
            continue
        if m == n and b.attachment not in ("common", f"local{m + 1}"):
            continue
        gm = getattr(b, weight)[m] * b.mu
        gn = getattr(b, weight)[n] * b.mu
        if gm == 0 or gn == 0:
            continue
        val = c.Gamma(w1) + sign * np.conj(c.Gamma(w2))
        total += gm * gn * (val if sign > 0 else val / 2j)
    return total


def coefficients(baths, corrs, table_kind, freqs):
    """Tabulate the master-equation coefficients bath by bath.

    Parameters
    ----------
    baths : sequence of BathSpec
    corrs : sequence of BathCorrelation
        One per bath, in the same order.
    table_kind : {"uncoupled", "coupled"}
    freqs : dict
        Uncoupled: ``{"1": w1, "2": w2}``.  Coupled: signed frequencies for
        the labels ``I, II, III, IV``.

    Returns
    -------
    CoefficientTable
    """
    P = lambda w, m, n, a, b, sgn: _pair_sum(baths, corrs, w, m, n, a, b, sgn)
    if table_kind == "uncoupled":
        w = (freqs["1"], freqs["2"])
        shape = (2, 2)
        gamma, gamma_t, eta, s, s_t = (np.zeros(shape, dtype=complex) for _ in range(5))
        for j in range(2):
            for k in range(2):
                gamma[j, k] = P("gx", j, k, w[j], w[k], +1)
                gamma_t[j, k] = P("gx", j, k, -w[j], -w[k], +1)
                eta[j, k] = P("gz", j, k, 0.0, 0.0, +1)
                s[j, k] = P("gx", j, k, w[j], w[k], -1)
                s_t[j, k] = P("gx", j, k, -w[j], -w[k], -1)
        s0 = P("gz", 0, 1, 0.0, 0.0, -1)
        return CoefficientTable("uncoupled", dict(freqs), gamma, gamma_t, eta, s, s_t, s0)
    if table_kind != "coupled":
        raise ValueError(f"table_kind must be 'uncoupled' or 'coupled', got {table_kind!r}")
    fx = [freqs["I"], freqs["II"]]
    fz = [0.0, freqs["IV"], -freqs["IV"]]
    fd = [freqs["III"], -freqs["III"]]
    gamma, gamma_t, s, s_t = (np.zeros((2, 2, 2, 2), dtype=complex) for _ in range(4))
    eta, r = (np.zeros((2, 2, 3, 3), dtype=complex) for _ in range(2))
    zeta, u = (np.zeros((2, 2, 2), dtype=complex) for _ in range(2))
    for m in range(2):
        for n in range(2):
            for j in range(2):
                for k in range(2):
                    gamma[m, n, j, k] = P("gx", m, n, fx[j], fx[k], +1)
                    gamma_t[m, n, j, k] = P("gx", m, n, -fx[j], -fx[k], +1)
                    s[m, n, j, k] = P("gx", m, n, fx[j], fx[k], -1)
                    s_t[m, n, j, k] = P("gx", m, n, -fx[j], -fx[k], -1)
            for j in range(3):
                for k in range(3):
                    eta[m, n, j, k] = P("gz", m, n, fz[j], fz[k], +1)
                    r[m, n, j, k] = P("gz", m, n, fz[j], fz[k], -1)
            for j in range(2):
                zeta[m, n, j] = P("gz", m, n, fd[j], fd[j], +1)
                u[m, n, j] = P("gz", m, n, fd[j], fd[j], -1)
    return CoefficientTable("coupled", dict(freqs), gamma, gamma_t, eta, s, s_t,
                            0.0, zeta, r, u)


def _c(z):
    z = complex(z)
    return [z.real, z.imag]


def _cmat(m):
    return [[_c(x) for x in row] for row in np.asarray(m)]


def liouvillian_to_json(L):
    """Serialize a generator and its settings; complex numbers as ``[re, im]``."""
    c = L.spec.coupling
    doc = {
        "variant": L.variant,
        "construction": L.construction,
        "spec": {"omega2": L.spec.omega2, "coupling": type(c).__name__,
                 "params": list(c.components()) if type(c).__name__ == "Heisenberg"
                 else [c.lam]},
        "baths": [{"attachment": b.attachment, "beta": b.beta, "gx": list(b.gx),
                   "gz": list(b.gz), "mu": b.mu, "cutoff": b.spectral.cutoff,
                   "spectral": b.spectral.kind, "split_channels": b.split_channels}
                  for b in L.baths],
        "policy": {"mode": L.policy.mode, "rule": L.policy.rule,
                   "epsilon": L.policy.epsilon, "mu": L.policy.mu},
        "lamb_shift": L.lamb_shift,
        "metadata": L.metadata,
        "matrix": _cmat(L.matrix),
        "hamiltonian_part": _cmat(L.hamiltonian_part),
        "lamb_shift_part": _cmat(L.lamb_shift_part),
        "dissipator_part": _cmat(L.dissipator_part),
    }
    return json.dumps(doc, sort_keys=True)


def liouvillian_from_json(text):
    """Inverse of :func:`liouvillian_to_json` for the stored matrices.

    Returns a dict with the settings and the four matrices as ndarrays.
    """
    doc = json.loads(text)
    for key in ("matrix", "hamiltonian_part", "lamb_shift_part", "dissipator_part"):
        a = np.asarray(doc[key], dtype=float)
        doc[key] = a[..., 0] + 1j * a[..., 1]
    return doc
