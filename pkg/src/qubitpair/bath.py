"""Thermal bosonic baths and the transforms of their correlation functions.

For a bath with spectral density ``J`` at inverse temperature ``beta`` the
one-sided Fourier transform of the correlation function is written
``Gamma(w) = gamma(w)/2 + i S(w)``.  ``gamma`` is the emission/absorption
rate and ``S`` the Lamb shift, obtained from ``gamma`` by a principal-value
(Hilbert) integral.
"""
from __future__ import annotations

import ctypes
import math
import threading
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import LowLevelCallable
from scipy.integrate import quad

from . import kernels
from .errors import ConfigError, QuadratureError

__all__ = [
    "SpectralDensity", "BathSpec", "BathCorrelation", "gamma_at",
    "lamb_shift_at", "correlation", "ATTACHMENTS", "DEFAULT_MU",
    "DEFAULT_CUTOFF",
]

DEFAULT_MU = 1e-2
DEFAULT_CUTOFF = 20.0
ATTACHMENTS = ("common", "local1", "local2")
_SPECTRAL_KINDS = ("ohmic", "zero")


@dataclass(frozen=True)
class SpectralDensity:
    """Bath spectral density.

    ``kind="ohmic"`` gives ``J(w) = w cutoff**2 / (cutoff**2 + w**2)``;
    ``kind="zero"`` switches the bath off.  Each kind carries the slope
    ``J'(0)``, which fixes the zero-frequency rate ``2 pi J'(0) / beta``.
    """

    kind: str = "ohmic"
    cutoff: float = DEFAULT_CUTOFF

    def __post_init__(self):
        if self.kind not in _SPECTRAL_KINDS:
            raise ConfigError(f"unknown spectral density {self.kind!r}; "
                              f"expected one of {_SPECTRAL_KINDS}")
        if not (self.cutoff > 0 and math.isfinite(self.cutoff)):
            raise ConfigError(f"cutoff must be positive and finite, got {self.cutoff!r}")

    def __call__(self, w):
        w = np.asarray(w, dtype=float)
        if self.kind == "zero":
            return np.zeros_like(w)
        c2 = self.cutoff * self.cutoff
        return np.where(w >= 0, w * c2 / (c2 + w * w), 0.0)

    @property
    def zero_slope(self):
        return 0.0 if self.kind == "zero" else 1.0

    @property
    def correlation_time(self):
        return 0.0 if self.kind == "zero" else 1.0 / self.cutoff


def _check_beta(beta):
    if not (beta > 0 and math.isfinite(beta)):
        raise ConfigError(f"beta must be positive and finite, got {beta!r}")


def gamma_at(sd, beta, omega):
    """Rate ``gamma(omega)`` of a thermal bath.

    ``2 pi J(w) (N(w) + 1)`` for ``w > 0``, ``2 pi J(|w|) N(|w|)`` for
    ``w < 0`` and ``2 pi J'(0) / beta`` at ``w = 0``, with ``N`` the Bose
    occupation.  Negative frequencies are computed as the positive-frequency
    value times ``exp(-beta |w|)`` so detailed balance holds to rounding.

    Parameters
    ----------
    sd : SpectralDensity
    beta : float
        Inverse temperature, must be positive.
    omega : float or array_like

    Returns
    -------
    float or ndarray
    """
    _check_beta(beta)
    w = np.asarray(omega, dtype=float)
    x = np.abs(w)
    with np.errstate(divide="ignore", invalid="ignore"):
        base = 2.0 * np.pi * sd(x) / (-np.expm1(-beta * x))
    out = np.where(w > 0, base, base * np.exp(-beta * x))
    out = np.where(x == 0, 2.0 * np.pi * sd.zero_slope / beta, out)
    if out.ndim == 0:
        return float(out)
    return out


_SPLIT = 50.0  # finite piece of the PV integral ends at _SPLIT * cutoff


def _pv_integrand(omega, beta, cutoff):
    func, takes_args = kernels.ohmic_pv_integrand()
    if takes_args:
        return func, (omega, beta, cutoff), None
    params = (ctypes.c_double * 3)(omega, beta, cutoff)
    llc = LowLevelCallable(func, ctypes.cast(params, ctypes.c_void_p))
    # params must outlive the quad call
    return llc, (), params


def lamb_shift_at(sd, beta, omega, atol=1e-8):
    """Lamb shift ``S(omega) = (1/2pi) PV int gamma(v) / (omega - v) dv``.

    The principal value is taken by pairing the points ``omega -/+ u`` around
    the pole, which leaves the regular integrand
    ``(gamma(omega - u) - gamma(omega + u)) / u`` on ``u > 0``.  The integral
    is split at ``50 * cutoff``; the tail decays like ``u**-2`` and is
    integrated to infinity rather than dropped.

    Parameters
    ----------
    sd : SpectralDensity
    beta : float
    omega : float
    atol : float
        Absolute tolerance on the quadrature error estimate.

    Returns
    -------
    float

    Raises
    ------
    QuadratureError
        If the error estimate exceeds ``atol``.
    """
    _check_beta(beta)
    if sd.kind == "zero":
        return 0.0
    omega = float(omega)
    func, args, _keep = _pv_integrand(omega, beta, sd.cutoff)
    split = _SPLIT * sd.cutoff + abs(omega)
    # near-pole structure lives within a few thermal widths and the cutoff
    points = sorted({p for p in (abs(omega), sd.cutoff, 1.0 / beta) if 0 < p < split})
    head, err_head = quad(func, 0.0, split, args=args, points=points or None,
                          limit=400, epsabs=0.1 * atol, epsrel=1e-13)
    tail, err_tail = quad(func, split, np.inf, args=args, limit=400,
                          epsabs=0.1 * atol, epsrel=1e-13)
    err = (err_head + err_tail) / (2.0 * np.pi)
    if not err <= atol:
        raise QuadratureError(
            f"Lamb shift quadrature at omega={omega!r}, beta={beta!r} has error "
            f"estimate {err:.2e} > {atol:.2e}")
    return (head + tail) / (2.0 * np.pi)


@dataclass(frozen=True)
class BathSpec:
    """One thermal bath and how it couples to the qubits.

    Parameters
    ----------
    attachment : {"common", "local1", "local2"}
        ``local1``/``local2`` baths act on one qubit only.
    beta : float
        Inverse temperature.
    gx, gz : tuple of two floats
        Dimensionless weights of the ``sigma_x`` (dissipative) and ``sigma_z``
        (dephasing) coupling to qubits 1 and 2.  The coupling constant is
        ``weight * mu``.
    mu : float
        Overall qubit-bath coupling scale.
    spectral : SpectralDensity
    split_channels : bool
        Treat the x and z couplings as independent baths with identical
        statistics, so x-z correlations vanish.
    """

    attachment: str
    beta: float
    gx: tuple = (0.0, 0.0)
    gz: tuple = (0.0, 0.0)
    mu: float = DEFAULT_MU
    spectral: SpectralDensity = field(default_factory=SpectralDensity)
    split_channels: bool = False

    def __post_init__(self):
        if self.attachment not in ATTACHMENTS:
            raise ConfigError(f"attachment must be one of {ATTACHMENTS}, "
                              f"got {self.attachment!r}")
        _check_beta(self.beta)
        if not (self.mu > 0 and math.isfinite(self.mu)):
            raise ConfigError(f"mu must be positive and finite, got {self.mu!r}")
        object.__setattr__(self, "gx", tuple(float(g) for g in self.gx))
        object.__setattr__(self, "gz", tuple(float(g) for g in self.gz))
        if len(self.gx) != 2 or len(self.gz) != 2:
            raise ConfigError("gx and gz need one weight per qubit")
        if not all(math.isfinite(g) for g in self.gx + self.gz):
            raise ConfigError("coupling weights must be finite")
        other = {"local1": 1, "local2": 0}.get(self.attachment)
        if other is not None and (self.gx[other] != 0 or self.gz[other] != 0):
            raise ConfigError(
                f"{self.attachment} bath must have zero weight on qubit {other + 1}")

    def couplings(self):
        """Effective couplings keyed by channel name ``X1, X2, Z1, Z2``."""
        return {"X1": self.gx[0] * self.mu, "X2": self.gx[1] * self.mu,
                "Z1": self.gz[0] * self.mu, "Z2": self.gz[1] * self.mu}

    @property
    def has_xz_correlations(self):
        return (not self.split_channels and any(self.gx) and any(self.gz))

    def markov_times(self):
        """Bath correlation time and relaxation time ``(tau_B, tau_R)``."""
        tau_b = max(self.spectral.correlation_time, self.beta / (2.0 * np.pi))
        return tau_b, self.mu ** -2


class BathCorrelation:
    """Memoized ``gamma``, ``S`` and ``Gamma`` for one bath.

    Parameters
    ----------
    spec : BathSpec
    lamb_shift : bool
        When False, ``S`` is identically zero and ``Gamma`` is real.

    Notes
    -----
    Values are cached per frequency (rounded to 1e-12) behind a lock, so one
    instance can be shared between threads.
    """

    def __init__(self, spec, lamb_shift=True, atol=1e-8):
        self.spec = spec
        self.lamb_shift = bool(lamb_shift)
        self.atol = atol
        self._cache = {}
        self._lock = threading.Lock()

    @staticmethod
    def _key(omega):
        return round(float(omega) * 1e12)

    def gamma(self, omega):
        return gamma_at(self.spec.spectral, self.spec.beta, omega)

    def lamb(self, omega):
        if not self.lamb_shift:
            return 0.0
        key = self._key(omega)
        with self._lock:
            hit = self._cache.get(key)
        if hit is not None:
            return hit
        value = lamb_shift_at(self.spec.spectral, self.spec.beta, omega, self.atol)
        with self._lock:
            self._cache.setdefault(key, value)
        return value

    def Gamma(self, omega):
        g = self.gamma(omega)
        if not self.lamb_shift:
            return complex(0.5 * g, 0.0)
        return complex(0.5 * g, self.lamb(omega))


def correlation(spec, lamb_shift=True, atol=1e-8):
    """Build the correlation transforms of a bath, warning if Markov looks shaky.

    Emits a ``UserWarning`` when the bath correlation time ``tau_B`` is not
    at least a hundred times shorter than the relaxation time ``mu**-2``.
    """
    tau_b, tau_r = spec.markov_times()
    if tau_b >= 0.01 * tau_r:
        warnings.warn(
            f"bath correlation time {tau_b:.3g} is not small against the "
            f"relaxation time {tau_r:.3g}; the Markov approximation is doubtful",
            stacklevel=2)
    return BathCorrelation(spec, lamb_shift=lamb_shift, atol=atol)
