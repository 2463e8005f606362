"""Backend selection for the hot loops.

The compiled extension is used when it was built; otherwise the pure-Python
module is used.  Setting ``QUBITPAIR_PURE_PYTHON=1`` forces the fallback.

``BACKEND`` is ``"cython"`` or ``"python"``.
"""
import os

if os.environ.get("QUBITPAIR_PURE_PYTHON", "") not in ("", "0"):
    from . import _kernels_py as _impl
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl
        BACKEND = "cython"
    except ImportError:
        from . import _kernels_py as _impl
        BACKEND = "python"

ohmic_gamma = _impl.ohmic_gamma
propagate_uniform = _impl.propagate_uniform
sliding_pearson = _impl.sliding_pearson


def ohmic_pv_integrand():
    """Return the paired principal-value integrand in a form ``quad`` accepts.

    Returns
    -------
    func, takes_args : tuple
        ``func`` is either a ``scipy.LowLevelCallable`` (compiled backend,
        parameters passed through ``user_data``) or a Python function taking
        ``(u, omega, beta, cutoff)``.  ``takes_args`` tells the caller which.
    """
    capsule = _impl.ohmic_pv_capsule()
    if capsule is None:
        from ._kernels_py import ohmic_pv_integrand as f
        return f, True
    return capsule, False
