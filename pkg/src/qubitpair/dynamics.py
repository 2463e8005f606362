"""Time evolution, steady states and observables.

All functions take a :class:`~qubitpair.liouvillian.Liouvillian` (or its
16x16 matrix) and 4x4 density matrices in the canonical product basis.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import expm

from . import kernels
from .errors import NoConvergence, StepFailure
from .liouvillian import unvec, vec
from .system import SX, SZ, on_qubit

__all__ = [
    "overlapped_state", "Trajectory", "propagate", "steady_state",
    "SteadyState", "fidelity", "negativity", "heat_currents",
    "beat_spectrum", "BeatPeak", "synchronization_measure", "SyncSeries",
    "OBSERVABLES", "trace_distance", "gibbs_state",
]

OBSERVABLES = {
    "sz1": on_qubit(SZ, 1),
    "sz2": on_qubit(SZ, 2),
    "sx1": on_qubit(SX, 1),
    "sx2": on_qubit(SX, 2),
}
_POS_TOL = 1e-6
_INVARIANT_TOL = 1e-10


def overlapped_state():
    """``|+><+|`` on both qubits."""
    plus = np.array([1.0, 1.0]) / np.sqrt(2.0)
    single = np.outer(plus, plus).astype(complex)
    return np.kron(single, single)


def gibbs_state(H, beta):
    """``exp(-beta H) / Z`` for a Hermitian ``H``."""
    evals, evecs = np.linalg.eigh(H)
    w = np.exp(-beta * (evals - evals.min()))
    rho = (evecs * (w / w.sum())) @ evecs.conj().T
    return 0.5 * (rho + rho.conj().T)


def _matrix(L):
    return np.asarray(getattr(L, "matrix", L), dtype=complex)


def _check_state(rho, name="rho"):
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (4, 4):
        raise ValueError(f"{name} must be 4x4, got shape {rho.shape}")
    if np.max(np.abs(rho - rho.conj().T)) > _INVARIANT_TOL:
        raise ValueError(f"{name} is not Hermitian")
    if abs(np.trace(rho) - 1.0) > _INVARIANT_TOL:
        raise ValueError(f"{name} does not have unit trace")
    return rho


@dataclass
class Trajectory:
    """Sampled solution of the master equation.

    Attributes
    ----------
    times : ndarray, shape (n,)
    states : ndarray, shape (n, 4, 4)
    min_eigenvalues : ndarray, shape (n,)
        Smallest eigenvalue of each state; Redfield generators can dip below
        zero slightly.
    trace_residual, hermiticity_residual : float
        Largest deviations along the trajectory.
    """

    times: np.ndarray
    states: np.ndarray
    variant: Optional[str] = None
    observables: dict = field(default_factory=dict)
    min_eigenvalues: Optional[np.ndarray] = None
    trace_residual: float = 0.0
    hermiticity_residual: float = 0.0

    def __post_init__(self):
        herm = 0.5 * (self.states + np.conj(np.swapaxes(self.states, 1, 2)))
        self.min_eigenvalues = np.linalg.eigvalsh(herm)[:, 0]
        self.trace_residual = float(np.max(np.abs(np.trace(self.states, axis1=1, axis2=2) - 1.0)))
        self.hermiticity_residual = float(
            np.max(np.abs(self.states - np.conj(np.swapaxes(self.states, 1, 2)))))
        if self.trace_residual > _INVARIANT_TOL or self.hermiticity_residual > _INVARIANT_TOL:
            warnings.warn(
                f"trajectory drifts: trace residual {self.trace_residual:.2e}, "
                f"hermiticity residual {self.hermiticity_residual:.2e}", stacklevel=3)

    def expect(self, op):
        """``Tr(op rho(t))`` for each sample (real part)."""
        op = np.asarray(op, dtype=complex)
        return np.einsum("ij,tji->t", op, self.states).real

    def observable(self, name, reference=None):
        """Named series: ``sz1, sz2, sx1, sx2, negativity`` or ``fidelity``.

        ``fidelity`` compares against ``reference``, a trajectory on the same
        grid.  Results are cached in :attr:`observables`.
        """
        if name in self.observables:
            return self.observables[name]
        if name in OBSERVABLES:
            out = self.expect(OBSERVABLES[name])
        elif name == "negativity":
            out = np.array([negativity(r) for r in self.states])
        elif name == "fidelity":
            if reference is None:
                raise ValueError("fidelity needs a reference trajectory")
            if len(reference.times) != len(self.times) or not np.allclose(
                    reference.times, self.times, rtol=0, atol=1e-9):
                raise ValueError("reference trajectory uses a different time grid")
            out = np.array([fidelity(a, b) for a, b in zip(self.states, reference.states)])
            return out
        else:
            raise KeyError(f"unknown observable {name!r}")
        self.observables[name] = out
        return out


def _uniform_step(times):
    if len(times) < 3:
        return None
    d = np.diff(times)
    if np.max(np.abs(d - d[0])) <= 1e-9 * max(1.0, abs(d[0])):
        return float(d[0])
    return None


def propagate(L, rho0, times, method="expm", rtol=1e-12, atol=1e-14):
    """Evolve ``rho0`` and sample it at ``times``.

    Parameters
    ----------
    L : Liouvillian or ndarray
    rho0 : array_like, shape (4, 4)
    times : array_like
        Increasing sample times; ``rho(times[0])`` is ``exp(L t0) rho0``.
    method : {"expm", "adaptive"}
        ``expm`` reuses one matrix exponential per distinct step size;
        ``adaptive`` integrates with an 8th-order Runge-Kutta scheme.

    Returns
    -------
    Trajectory

    Raises
    ------
    StepFailure
        If the adaptive integrator fails.
    """
    M = _matrix(L)
    rho0 = _check_state(rho0, "rho0")
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or len(times) == 0:
        raise ValueError("times must be a non-empty 1-d array")
    if np.any(np.diff(times) <= 0):
        raise ValueError("times must be strictly increasing")
    v0 = vec(rho0)
    if times[0] != 0.0:
        v0 = expm(M * times[0]) @ v0
    if method == "expm":
        step = _uniform_step(times)
        if step is not None:
            P = np.ascontiguousarray(expm(M * step))
            vs = kernels.propagate_uniform(P, np.ascontiguousarray(v0), len(times) - 1)
        else:
            cache = {}
            vs = np.empty((len(times), 16), dtype=complex)
            vs[0] = v0
            for k in range(1, len(times)):
                dt = times[k] - times[k - 1]
                key = round(dt, 12)
                if key not in cache:
                    cache[key] = expm(M * dt)
                vs[k] = cache[key] @ vs[k - 1]
    elif method == "adaptive":
        if len(times) == 1:
            vs = v0[None, :]
        else:
            sol = solve_ivp(lambda t, y: M @ y, (times[0], times[-1]), v0,
                            method="DOP853", t_eval=times, rtol=rtol, atol=atol)
            if not sol.success:
                raise StepFailure(f"adaptive integration failed: {sol.message}")
            vs = sol.y.T
    else:
        raise ValueError(f"method must be 'expm' or 'adaptive', got {method!r}")
    states = np.asarray(vs).reshape(len(times), 4, 4).transpose(0, 2, 1)
    return Trajectory(times=times, states=np.ascontiguousarray(states),
                      variant=getattr(L, "variant", None))


@dataclass(frozen=True)
class SteadyState:
    """Stationary state and the dimension of the generator's null space."""

    rho: np.ndarray
    nullity: int
    residual: float


def _trace_norm(a):
    return float(np.sum(np.abs(np.linalg.eigvalsh(0.5 * (a + a.conj().T)))))


def trace_distance(a, b):
    return 0.5 * _trace_norm(np.asarray(a) - np.asarray(b))


def steady_state(L, rho0=None, null_tol=1e-10, conv_tol=1e-10, horizon=1e8, t0=100.0):
    """Stationary state of a generator.

    With a one-dimensional null space the state is the normalized null
    vector.  Otherwise the stationary state depends on where one starts, and
    ``rho0`` is propagated with doubling time steps until two successive
    states differ by less than ``conv_tol`` in trace norm.

    Parameters
    ----------
    L : Liouvillian or ndarray
    rho0 : array_like, optional
        Required when the null space is degenerate.
    null_tol : float
        Singular values below ``null_tol * s_max`` count as zero.
    horizon : float
        Largest propagation time tried.

    Returns
    -------
    SteadyState

    Raises
    ------
    ValueError
        Degenerate null space and no ``rho0``.
    NoConvergence
        The doubling sequence passes ``horizon`` without settling.
    """
    M = _matrix(L)
    _, s, vh = np.linalg.svd(M)
    nullity = int(np.sum(s <= null_tol * s[0])) if s[0] > 0 else 16
    if nullity == 1:
        rho = unvec(vh[-1].conj())
        rho = rho / np.trace(rho)
        rho = 0.5 * (rho + rho.conj().T)
    else:
        if rho0 is None:
            raise ValueError(
                f"generator has a {nullity}-dimensional null space; the stationary "
                "state depends on the initial state, pass rho0")
        v = vec(_check_state(rho0, "rho0"))
        t = t0
        P = expm(M * t)
        prev = unvec(P @ v)
        while True:
            P = P @ P
            t *= 2.0
            cur = unvec(P @ v)
            if _trace_norm(cur - prev) < conv_tol:
                rho = 0.5 * (cur + cur.conj().T)
                break
            if t >= horizon:
                raise NoConvergence(
                    f"state still moving at t={t:.3g} (horizon {horizon:.3g})")
            prev = cur
    residual = float(np.max(np.abs(M @ vec(rho))))
    return SteadyState(rho=rho, nullity=nullity, residual=residual)


def _psd_sqrt(rho, name):
    evals, evecs = np.linalg.eigh(0.5 * (rho + rho.conj().T))
    if evals[0] < -_POS_TOL:
        raise ValueError(f"{name} has eigenvalue {evals[0]:.3e} below -{_POS_TOL:g}")
    return (evecs * np.sqrt(np.clip(evals, 0.0, None))) @ evecs.conj().T


def fidelity(rho, sigma):
    """Uhlmann fidelity ``(Tr sqrt(sqrt(rho) sigma sqrt(rho)))**2`` in [0, 1].

    Evaluated as the squared trace norm of ``sqrt(rho) sqrt(sigma)``, which
    is symmetric in its arguments and avoids square roots of near-zero
    eigenvalues.  Small negative eigenvalues (down to -1e-6, as produced by
    Redfield dynamics) are clipped first.
    """
    r = _psd_sqrt(np.asarray(rho, dtype=complex), "rho")
    s = _psd_sqrt(np.asarray(sigma, dtype=complex), "sigma")
    f = float(np.sum(np.linalg.svd(r @ s, compute_uv=False)) ** 2)
    return min(max(f, 0.0), 1.0)


def partial_transpose(rho):
    """Partial transpose over qubit 2."""
    r = np.asarray(rho).reshape(2, 2, 2, 2)
    return r.transpose(0, 3, 2, 1).reshape(4, 4)


def negativity(rho):
    """Sum of the magnitudes of the negative eigenvalues of the partial transpose."""
    pt = partial_transpose(rho)
    ev = np.linalg.eigvalsh(0.5 * (pt + pt.conj().T))
    return float(-np.sum(ev[ev < 0]))


def heat_currents(L, rho_inf, H=None):
    """Stationary heat current from each bath, ``J_k = Tr(H D_k[rho_inf])``.

    ``D_k`` collects the Lamb-shift commutator and the dissipator sourced by
    bath ``k``.  ``H`` defaults to the full system Hamiltonian.  Positive
    ``J_k`` means energy flows from bath ``k`` into the qubits.

    Returns
    -------
    ndarray, shape (n_baths,)
    """
    if H is None:
        from .system import build_hamiltonian
        H = build_hamiltonian(L.spec)
    v = vec(rho_inf)
    J = np.array([np.trace(H @ unvec(L.bath_generator(k) @ v)).real
                  for k in range(len(L.bath_parts))])
    scale = np.max(np.abs(J)) if len(J) else 0.0
    if len(J) and abs(J.sum()) > 1e-10 * scale and abs(J.sum()) > 1e-15:
        warnings.warn(f"heat currents do not balance: sum {J.sum():.3e}, "
                      f"largest {scale:.3e}", stacklevel=2)
    return J


@dataclass(frozen=True)
class BeatPeak:
    """Dominant oscillation of a series.

    ``frequency`` is angular (radians per time unit).  ``amplitude`` is the
    sinusoid amplitude estimated from the windowed spectrum.  ``peak`` is
    None when nothing rises above the numerical floor.
    """

    frequencies: np.ndarray
    amplitudes: np.ndarray
    peak: Optional[int]

    @property
    def frequency(self):
        return None if self.peak is None else float(self.frequencies[self.peak])

    @property
    def amplitude(self):
        return 0.0 if self.peak is None else float(self.amplitudes[self.peak])

    def amplitude_at(self, omega):
        """Spectrum amplitude at the bin nearest to angular frequency ``omega``."""
        return float(self.amplitudes[int(np.argmin(np.abs(self.frequencies - omega)))])


def beat_spectrum(times, series, window="hann", floor=1e-12):
    """Spectrum of a linearly detrended series and its largest nonzero-frequency peak.

    A peak is a local maximum of the amplitude spectrum strictly above its
    lower neighbour, searched from the second nonzero bin on.

    Parameters
    ----------
    times : array_like
        Uniform grid.
    series : array_like
    window : {"hann", None}
    floor : float
        Peaks with amplitude below ``floor * max(1, max|series|)`` are ignored.

    Returns
    -------
    BeatPeak
    """
    t = np.asarray(times, dtype=float)
    y = np.asarray(series, dtype=float)
    if len(t) != len(y) or len(t) < 4:
        raise ValueError("need matching times and series with at least 4 samples")
    dt = _uniform_step(t)
    if dt is None:
        raise ValueError("beat spectrum needs a uniform time grid")
    n = len(y)
    x = t - t[0]
    slope, intercept = np.polyfit(x, y, 1)
    y = y - (slope * x + intercept)
    w = np.hanning(n) if window == "hann" else np.ones(n)
    spec = np.abs(np.fft.rfft(y * w)) * 2.0 / np.sum(w)
    freqs = 2.0 * np.pi * np.fft.rfftfreq(n, d=dt)
    thresh = floor * max(1.0, float(np.max(np.abs(series))))
    best = None
    # bin 1 has no meaningful left neighbour once the mean is removed, so a
    # peak must rise above the bin on each side
    for k in range(2, len(spec) - 1):
        if spec[k] > spec[k - 1] and spec[k] >= spec[k + 1] and spec[k] > thresh:
            if best is None or spec[k] > spec[best]:
                best = k
    return BeatPeak(freqs, spec, best)


@dataclass(frozen=True)
class SyncSeries:
    """Sliding-window correlation; masked where a window has no variance."""

    times: np.ndarray
    values: np.ma.MaskedArray

    def sustained_after(self, level=0.9):
        """Earliest time after which ``|C| >= level`` at every defined sample.

        Masked samples (windows without variance) are skipped.  Returns None
        if the last defined sample is below ``level`` or nothing is defined.
        """
        defined = ~np.ma.getmaskarray(self.values)
        if not np.any(defined):
            return None
        t = self.times[defined]
        ok = np.abs(np.ma.getdata(self.values)[defined]) >= level
        if not ok[-1]:
            return None
        bad = np.flatnonzero(~ok)
        return float(t[0] if len(bad) == 0 else t[bad[-1] + 1])


def synchronization_measure(times, a, b, window, floor=1e-12):
    """Pearson correlation of ``a`` and ``b`` over a sliding time window.

    Parameters
    ----------
    times : array_like
        Uniform grid.
    a, b : array_like
        Observable series on that grid.
    window : float
        Window length in time units; must cover at least 10 samples.

    Returns
    -------
    SyncSeries
        One value per window position, stamped with the window's center time.
    """
    t = np.asarray(times, dtype=float)
    dt = _uniform_step(t)
    if dt is None:
        raise ValueError("synchronization measure needs a uniform time grid")
    nwin = int(round(window / dt))
    if nwin < 10:
        raise ValueError(f"window {window!r} covers {nwin} samples; need at least 10")
    if nwin > len(t):
        raise ValueError("window is longer than the series")
    a = np.ascontiguousarray(a, dtype=float)
    b = np.ascontiguousarray(b, dtype=float)
    c = kernels.sliding_pearson(a, b, nwin, floor)
    centers = t[: len(c)] + 0.5 * (nwin - 1) * dt
    return SyncSeries(centers, np.ma.masked_invalid(np.clip(c, -1.0, 1.0)))
