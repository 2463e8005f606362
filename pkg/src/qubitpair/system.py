"""Two-qubit system Hamiltonian, its eigenstructure and jump frequencies.

Frequencies are measured in units of the first qubit frequency, so
``omega1 = 1`` and ``0 < omega2 <= 1``.  Every 4x4 matrix in the package is
written in the product basis ordered ``|11>, |10>, |01>, |00>`` with qubit 1
as the left tensor factor and ``sigma_z |1> = +|1>``.

The Hamiltonian only couples ``|11>`` with ``|00>`` and ``|10>`` with ``|01>``
for every supported coupling, so it splits into two 2x2 blocks that are each
diagonalized by a single rotation angle (``theta`` for the outer block,
``phi`` for the inner one).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Union

import numpy as np

__all__ = [
    "IsingXX", "Heisenberg", "RWA", "CouplingKind", "QubitPairSpec",
    "EigenStructure", "JumpFrequencies", "CrossingCheck",
    "build_hamiltonian", "diagonalize", "jump_frequencies",
    "detect_frequency_crossing", "SX", "SY", "SZ", "SM", "SP", "I2",
    "on_qubit", "ket",
]

# single-qubit operators in the (|1>, |0>) ordering
I2 = np.eye(2, dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, 1j], [-1j, 0]], dtype=complex)
SM = np.array([[0, 0], [1, 0]], dtype=complex)  # |0><1|
SP = SM.T.copy()

_BLOCK_TOL = 1e-12


def on_qubit(op, which):
    """Embed a 2x2 operator acting on qubit ``which`` (1 or 2) into 4x4."""
    if which == 1:
        return np.kron(op, I2)
    if which == 2:
        return np.kron(I2, op)
    raise ValueError(f"qubit index must be 1 or 2, got {which!r}")


def ket(label):
    """Product-basis ket for a label such as ``"10"`` (qubit 1 first)."""
    index = {"11": 0, "10": 1, "01": 2, "00": 3}[label]
    v = np.zeros(4, dtype=complex)
    v[index] = 1.0
    return v


def _check_finite(*values):
    for v in values:
        if not math.isfinite(v):
            raise ValueError(f"non-finite parameter {v!r}")


@dataclass(frozen=True)
class IsingXX:
    """Coupling ``lam * sx1 sx2``."""

    lam: float = 0.0

    def components(self):
        return (float(self.lam), 0.0, 0.0)

    @property
    def strength(self):
        return abs(self.lam)


@dataclass(frozen=True)
class Heisenberg:
    """Coupling ``lx sx1 sx2 + ly sy1 sy2 + lz sz1 sz2``."""

    lx: float = 0.0
    ly: float = 0.0
    lz: float = 0.0

    def components(self):
        return (float(self.lx), float(self.ly), float(self.lz))

    @property
    def strength(self):
        return max(abs(self.lx), abs(self.ly), abs(self.lz))


@dataclass(frozen=True)
class RWA:
    """Excitation-exchange coupling ``lam (sp1 sm2 + sm1 sp2)``.

    This is the Heisenberg coupling with ``lx = ly = lam/2`` and ``lz = 0``.
    """

    lam: float = 0.0

    def components(self):
        return (0.5 * self.lam, 0.5 * self.lam, 0.0)

    @property
    def strength(self):
        return abs(self.lam)


CouplingKind = Union[IsingXX, Heisenberg, RWA]


@dataclass(frozen=True)
class QubitPairSpec:
    """Parameters of the two-qubit Hamiltonian.

    Parameters
    ----------
    omega2 : float
        Frequency of the second qubit in units of the first, ``0 < omega2 <= 1``.
    coupling : IsingXX, Heisenberg or RWA
        Direct qubit-qubit coupling.
    """

    omega2: float
    coupling: CouplingKind = IsingXX(0.0)

    def __post_init__(self):
        _check_finite(self.omega2, *self.coupling.components())
        if not (0.0 < self.omega2 <= 1.0):
            raise ValueError(
                f"omega2 must satisfy 0 < omega2 <= 1 (omega1 = 1), got {self.omega2!r}")

    @property
    def omega1(self):
        return 1.0

    @property
    def omega_plus(self):
        return 1.0 + self.omega2

    @property
    def omega_minus(self):
        return 1.0 - self.omega2

    @property
    def lam(self):
        """Largest coupling magnitude; the scalar used by validity guards."""
        return self.coupling.strength

    def uncoupled(self):
        """Same qubits with the direct coupling removed."""
        return QubitPairSpec(self.omega2, IsingXX(0.0))


def build_hamiltonian(spec):
    """System Hamiltonian in the canonical product basis.

    Parameters
    ----------
    spec : QubitPairSpec

    Returns
    -------
    ndarray, shape (4, 4), complex
    """
    lx, ly, lz = spec.coupling.components()
    _check_finite(spec.omega2, lx, ly, lz)
    h = 0.5 * on_qubit(SZ, 1) + 0.5 * spec.omega2 * on_qubit(SZ, 2)
    h = h + lx * np.kron(SX, SX) + ly * np.kron(SY, SY) + lz * np.kron(SZ, SZ)
    return 0.5 * (h + h.conj().T)


class JumpFrequencies(NamedTuple):
    """The four Bohr frequencies that label the jump operators."""

    I: float
    II: float
    III: float
    IV: float


@dataclass(frozen=True)
class EigenStructure:
    """Eigen-decomposition of the system Hamiltonian.

    Attributes
    ----------
    energies : ndarray, shape (4,)
        ``E0, E1, E2, E3``.  ``E0``/``E3`` belong to the ``{|11>, |00>}`` block
        and ``E1``/``E2`` to the ``{|10>, |01>}`` block; for the Ising coupling
        this is ascending order.
    basis : ndarray, shape (4, 4)
        Column ``n`` is the eigenvector for ``energies[n]``.
    theta, phi : float
        Mixing angles of the outer and inner blocks.
    """

    energies: np.ndarray
    basis: np.ndarray
    theta: float
    phi: float

    @property
    def jump_freqs(self):
        return jump_frequencies(self)

    def dyad(self, a, b):
        """``|e_a><e_b|`` as a 4x4 matrix."""
        return np.outer(self.basis[:, a], self.basis[:, b].conj())


def _block_angle(top, bottom, offdiag):
    d = 0.5 * (top - bottom)
    center = 0.5 * (top + bottom)
    radius = math.hypot(offdiag, d)
    # atan2(0, 0) = 0 keeps the product basis at exact degeneracy
    angle = 0.5 * math.atan2(offdiag, d)
    return center, radius, angle


def diagonalize(H):
    """Closed-form diagonalization of a parity-block two-qubit Hamiltonian.

    Parameters
    ----------
    H : array_like, shape (4, 4)
        Hermitian matrix whose only nonzero off-diagonal entries are real and
        sit at ``(|11>, |00>)`` and ``(|10>, |01>)``.

    Returns
    -------
    EigenStructure

    Raises
    ------
    ValueError
        If ``H`` is not Hermitian, mixes the two parity blocks, or has complex
        off-diagonal entries.
    """
    H = np.asarray(H, dtype=complex)
    if H.shape != (4, 4):
        raise ValueError(f"expected a 4x4 matrix, got shape {H.shape}")
    if not np.all(np.isfinite(H)):
        raise ValueError("matrix has non-finite entries")
    if np.max(np.abs(H - H.conj().T)) > _BLOCK_TOL:
        raise ValueError("matrix is not Hermitian")
    mask = np.ones((4, 4), dtype=bool)
    for i, j in [(0, 0), (3, 3), (0, 3), (3, 0), (1, 1), (2, 2), (1, 2), (2, 1)]:
        mask[i, j] = False
    if np.max(np.abs(H[mask])) > _BLOCK_TOL:
        raise ValueError("matrix couples the {|11>,|00>} and {|10>,|01>} blocks")
    if abs(H[0, 3].imag) > _BLOCK_TOL or abs(H[1, 2].imag) > _BLOCK_TOL:
        raise ValueError("block off-diagonal entries must be real")

    c_out, r_out, theta = _block_angle(H[0, 0].real, H[3, 3].real, H[0, 3].real)
    c_in, r_in, phi = _block_angle(H[1, 1].real, H[2, 2].real, H[1, 2].real)
    energies = np.array([c_out - r_out, c_in - r_in, c_in + r_in, c_out + r_out])

    ct, st = math.cos(theta), math.sin(theta)
    cp, sp = math.cos(phi), math.sin(phi)
    basis = np.zeros((4, 4), dtype=complex)
    basis[:, 0] = [-st, 0, 0, ct]
    basis[:, 1] = [0, -sp, cp, 0]
    basis[:, 2] = [0, cp, sp, 0]
    basis[:, 3] = [ct, 0, 0, st]
    return EigenStructure(energies=energies, basis=basis, theta=theta, phi=phi)


def jump_frequencies(es):
    """Bohr frequencies ``(I, II, III, IV)`` of an eigenstructure.

    ``I = E3 - E1``, ``II = E3 - E2``, ``III = E3 - E0`` and ``IV = E2 - E1``,
    returned as magnitudes.  When both blocks share the same center (no zz
    coupling) also ``I = E2 - E0`` and ``II = E1 - E0``.
    """
    e0, e1, e2, e3 = es.energies
    return JumpFrequencies(abs(e3 - e1), abs(e3 - e2), abs(e3 - e0), abs(e2 - e1))


class CrossingCheck(NamedTuple):
    """Outcome of :func:`detect_frequency_crossing`.

    ``residual`` is ``(36 b^2 - 4 a^2) - (omega_plus^2 - 9 omega_minus^2)``
    where ``a`` and ``b`` are the outer and inner block couplings (for the
    Ising coupling this is ``32 lam^2 - (omega_plus^2 - 9 omega_minus^2)``).
    It vanishes when ``omega_II = omega_IV`` provided the coupling has no zz
    part; with a zz part only ``gap`` decides.  ``gap`` is the smallest
    distance between an X-channel frequency and a Z-channel frequency.
    """

    crossing: bool
    residual: float
    gap: float


def detect_frequency_crossing(spec, tol=1e-4):
    """Check whether an X jump frequency collides with a Z jump frequency.

    Parameters
    ----------
    spec : QubitPairSpec
    tol : float
        Tolerance on both the residual and the frequency gap.  The library
        passes ``mu**2``; the default matches ``mu = 1e-2``.

    Returns
    -------
    CrossingCheck
    """
    lx, ly, lz = spec.coupling.components()
    a = lx - ly
    b = lx + ly
    wp, wm = spec.omega_plus, spec.omega_minus
    residual = (36.0 * b * b - 4.0 * a * a) - (wp * wp - 9.0 * wm * wm)
    es = diagonalize(build_hamiltonian(spec))
    e0, e1, e2, e3 = es.energies
    x_freqs = [abs(e3 - e1), abs(e2 - e0), abs(e3 - e2), abs(e1 - e0)]
    z_freqs = [0.0, abs(e3 - e0), abs(e2 - e1)]
    gap = min(abs(x - z) for x in x_freqs for z in z_freqs)
    if lz == 0.0:
        crossing = abs(residual) <= tol or gap <= tol
    else:
        # unequal block centers: the residual no longer tracks the crossing
        crossing = gap <= tol
    return CrossingCheck(bool(crossing), float(residual), float(gap))
