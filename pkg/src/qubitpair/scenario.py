"""Run a :class:`~qubitpair.config.ScenarioConfig` and collect its results.

:func:`run_scenario` returns a :class:`Bundle` of named tables, plot
descriptions, trajectories and a summary; :func:`write_bundle` turns it into
CSV, JSON and SVG files.  Sweep points are independent and are spread over
a process pool when ``QUBITPAIR_WORKERS`` is larger than one.
"""
from __future__ import annotations

import math
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .bath import correlation
from .dynamics import (beat_spectrum, fidelity, heat_currents, negativity,
                       overlapped_state, propagate, steady_state,
                       synchronization_measure, OBSERVABLES)
from .errors import ConfigError
from .io import Table, dump_archive, trajectory_to_dict, write_csv
from .liouvillian import SecularPolicy, assemble, gksl_diagnostics
from .plotting import PlotSpec, render_svg
from .system import QubitPairSpec

__all__ = ["Bundle", "run_scenario", "write_bundle", "build_generator",
           "worker_count", "config_to_dict", "MAIN"]

WORKERS_ENV = "QUBITPAIR_WORKERS"
# key of the primary table of every bundle
MAIN = "main"
_NEG_EIG_TOL = 1e-6


@dataclass
class Bundle:
    """Everything a scenario produced.

    ``tables`` maps a suffix (``MAIN`` for the main table) to a Table;
    ``plots`` maps the same suffixes to PlotSpecs.
    """

    name: str
    tables: dict = field(default_factory=dict)
    plots: dict = field(default_factory=dict)
    trajectories: dict = field(default_factory=dict)
    summary: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)


def worker_count():
    """Worker processes for sweeps, from ``QUBITPAIR_WORKERS`` (default 1)."""
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None
    if n < 1:
        raise ConfigError(f"{WORKERS_ENV} must be at least 1, got {n}")
    return n


def _policy(cfg, variant):
    full = variant[1] == "F" or cfg.model.secular == "full"
    rule = "threshold" if cfg.model.secular == "threshold" else "paper"
    mu = max(b.mu for b in cfg.baths)
    return SecularPolicy(mode="full" if full else "partial", rule=rule,
                         epsilon=cfg.model.epsilon, mu=mu)


def build_generator(cfg, variant, spec=None, corrs=None):
    """Assemble ``variant`` for the scenario, optionally at another ``spec``."""
    construction = "local" if variant[0] == "L" else "global_coupled"
    L = assemble(spec or cfg.spec, cfg.baths, construction, _policy(cfg, variant),
                 lamb_shift=cfg.model.lamb_shift, strict_local=cfg.model.strict_local,
                 override_validity_guard=cfg.model.override_validity_guard, corrs=corrs)
    # keep the requested tag even when --secular full turns P into F
    return replace(L, variant=variant)


def _correlations(cfg):
    return [correlation(b, lamb_shift=cfg.model.lamb_shift) for b in cfg.baths]


def _rho0(cfg):
    return overlapped_state() if cfg.rho0 is None else cfg.rho0


def _with_parameter(spec, parameter, value):
    c = spec.coupling
    if parameter == "lam":
        kind = type(c).__name__
        if kind == "Heisenberg":
            raise ConfigError("lam sweeps need an ising or rwa coupling")
        return QubitPairSpec(spec.omega2, type(c)(value))
    omega2 = value if parameter == "omega2" else 1.0 - value
    try:
        return QubitPairSpec(omega2, c)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def config_to_dict(cfg):
    """Plain-data description of a scenario, for archives."""
    c = cfg.spec.coupling
    return {
        "name": cfg.name,
        "description": cfg.description,
        "system": {"omega2": cfg.spec.omega2, "coupling": type(c).__name__,
                   "components": list(c.components())},
        "baths": [{"attachment": b.attachment, "beta": b.beta, "gx": list(b.gx),
                   "gz": list(b.gz), "mu": b.mu, "spectral": b.spectral.kind,
                   "cutoff": b.spectral.cutoff, "split_channels": b.split_channels}
                  for b in cfg.baths],
        "model": {"variants": list(cfg.model.variants), "secular": cfg.model.secular,
                  "epsilon": cfg.model.epsilon, "lamb_shift": cfg.model.lamb_shift,
                  "strict_local": cfg.model.strict_local,
                  "override_validity_guard": cfg.model.override_validity_guard},
        "run": {"kind": cfg.run.kind, "t_max": cfg.run.t_max, "dt": cfg.run.dt,
                "parameter": cfg.run.parameter, "grid": list(cfg.run.grid),
                "omega_minus_grid": list(cfg.run.omega_minus_grid)},
        "analysis": {"observables": list(cfg.analysis.observables),
                     "reference": cfg.analysis.reference,
                     "beats": list(cfg.analysis.beats),
                     "sync": list(cfg.analysis.sync) if cfg.analysis.sync else None,
                     "sync_window": cfg.analysis.sync_window},
        "initial_state": None if cfg.rho0 is None else
        np.stack([cfg.rho0.real, cfg.rho0.imag], axis=-1).tolist(),
    }


def _diagnostics(L):
    rep = gksl_diagnostics(L)
    return {"min_rate_eigenvalue": rep.min_rate_eigenvalue,
            "spectral_abscissa": rep.spectral_abscissa,
            "trace_residual": rep.trace_residual,
            "hermiticity_residual": rep.hermiticity_residual}


def _time_grid(run):
    n = int(round(run.t_max / run.dt))
    return np.arange(n + 1, dtype=float) * run.dt


def _run_trajectory(cfg, bundle):
    times = _time_grid(cfg.run)
    corrs = _correlations(cfg)
    rho0 = _rho0(cfg)
    trs = {}
    for v in cfg.model.variants:
        L = build_generator(cfg, v, corrs=corrs)
        tr = propagate(L, rho0, times)
        trs[v] = tr
        diag = _diagnostics(L)
        diag["min_state_eigenvalue"] = float(tr.min_eigenvalues.min())
        diag["trace_drift"] = tr.trace_residual
        if diag["min_state_eigenvalue"] < -_NEG_EIG_TOL:
            warnings.warn(f"{v} state eigenvalue reaches {diag['min_state_eigenvalue']:.2e}",
                          stacklevel=2)
        bundle.summary.setdefault("diagnostics", {})[v] = diag
    ref = cfg.analysis.reference
    cols, data = ["time"], [times]
    ys = []
    for obs in cfg.analysis.observables:
        if obs == "fidelity":
            for v in cfg.model.variants:
                if v == ref:
                    continue
                cols.append(f"fidelity_{ref}_{v}")
                data.append(trs[ref].observable("fidelity", trs[v]))
                ys.append(cols[-1])
            continue
        for v in cfg.model.variants:
            cols.append(f"{obs}_{v}")
            data.append(trs[v].observable(obs))
            ys.append(cols[-1])
    bundle.tables[MAIN] = Table(cols, np.column_stack(data))
    bundle.plots[MAIN] = PlotSpec("time", tuple(ys), xlabel="t", title=cfg.name)
    bundle.trajectories = trs

    wm = cfg.spec.omega_minus
    for obs in cfg.analysis.beats:
        peaks = {}
        cols, data = ["omega"], []
        for v in cfg.model.variants:
            pk = beat_spectrum(times, trs[v].observable(obs))
            if not data:
                data.append(pk.frequencies)
            cols.append(f"{obs}_{v}")
            data.append(pk.amplitudes)
            peaks[v] = {"frequency": pk.frequency, "amplitude": pk.amplitude,
                        "amplitude_at_omega_minus": pk.amplitude_at(wm) if wm > 0 else None}
        bundle.summary.setdefault("beats", {})[obs] = peaks
        bundle.tables[f"spectrum_{obs}"] = Table(cols, np.column_stack(data))
        bundle.plots[f"spectrum_{obs}"] = PlotSpec("omega", tuple(cols[1:]),
                                                   xlabel="angular frequency",
                                                   ylabel="amplitude", logy=True)
    if cfg.analysis.sync:
        a, b = cfg.analysis.sync
        window = cfg.analysis.sync_window
        if window is None:
            if wm <= 0:
                raise ConfigError("sync analysis at zero detuning needs analysis.sync_window")
            window = 5 * 2 * math.pi / wm
        onsets = {}
        cols, data = ["time"], []
        for v in cfg.model.variants:
            s = synchronization_measure(times, trs[v].observable(a), trs[v].observable(b), window)
            if not data:
                data.append(s.times)
            cols.append(f"sync_{v}")
            data.append(np.ma.filled(s.values, np.nan))
            onsets[v] = s.sustained_after(0.9)
        bundle.summary["sync"] = {"observables": [a, b], "window": window,
                                  "onset_abs_ge_0.9": onsets}
        bundle.tables["sync"] = Table(cols, np.column_stack(data))
        bundle.plots["sync"] = PlotSpec("time", tuple(cols[1:]), xlabel="window center",
                                        ylabel="correlation")


def _steady_point(cfg, spec):
    """Steady states and per-bath currents of every variant at one point."""
    corrs = _correlations(cfg)
    rho0 = _rho0(cfg)
    out = {}
    for v in cfg.model.variants:
        L = build_generator(cfg, v, spec=spec, corrs=corrs)
        ss = steady_state(L, rho0=rho0)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            J = heat_currents(L, ss.rho)
        out[v] = {"rho": ss.rho, "nullity": ss.nullity, "residual": ss.residual,
                  "currents": J}
    return out


def _sweep_job(args):
    cfg, spec = args
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        res = _steady_point(cfg, spec)
    return res, [str(w.message) for w in caught]


def _map_points(cfg, specs):
    jobs = [(cfg, s) for s in specs]
    n = worker_count()
    if n > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(n, len(jobs))) as pool:
            results = list(pool.map(_sweep_job, jobs))
    else:
        results = [_sweep_job(j) for j in jobs]
    seen = set()
    for _, messages in results:
        for m in messages:
            if m not in seen:
                seen.add(m)
                warnings.warn(m, stacklevel=3)
    return [r for r, _ in results]


def _steady_columns(cfg, res):
    """Column names and values of one sweep point."""
    ref = cfg.analysis.reference
    cols, vals = [], []
    for obs in cfg.analysis.observables:
        for v in cfg.model.variants:
            r = res[v]
            if obs == "fidelity":
                if v == ref:
                    continue
                cols.append(f"fidelity_{ref}_{v}")
                vals.append(fidelity(res[ref]["rho"], r["rho"]))
            elif obs == "negativity":
                cols.append(f"negativity_{v}")
                vals.append(negativity(r["rho"]))
            elif obs == "nullity":
                cols.append(f"nullity_{v}")
                vals.append(float(r["nullity"]))
            else:
                cols.append(f"{obs}_{v}")
                vals.append(float(np.trace(OBSERVABLES[obs] @ r["rho"]).real))
    return cols, vals


def _run_steady_sweep(cfg, bundle):
    p = cfg.run.parameter
    specs = [_with_parameter(cfg.spec, p, x) for x in cfg.run.grid]
    results = _map_points(cfg, specs)
    rows, cols = [], None
    for x, res in zip(cfg.run.grid, results):
        c, vals = _steady_columns(cfg, res)
        cols = [p] + c
        rows.append([x] + vals)
    bundle.tables[MAIN] = Table(cols, rows)
    ys = tuple(c for c in cols[1:] if not c.startswith("nullity"))
    bundle.plots[MAIN] = PlotSpec(p, ys, logx=True, title=cfg.name)
    bundle.summary["max_steady_residual"] = max(
        r[v]["residual"] for r in results for v in cfg.model.variants)


def _run_heat_sweep(cfg, bundle):
    specs = [_with_parameter(cfg.spec, "lam", x) for x in cfg.run.grid]
    results = _map_points(cfg, specs)
    nb = len(cfg.baths)
    cols = ["lam"]
    for v in cfg.model.variants:
        cols += [f"J{k + 1}_{v}" for k in range(nb)] + [f"Jsum_{v}"]
    rows = []
    for x, res in zip(cfg.run.grid, results):
        row = [x]
        for v in cfg.model.variants:
            J = res[v]["currents"]
            row += list(J) + [float(np.sum(J))]
        rows.append(row)
    bundle.tables[MAIN] = Table(cols, rows)
    # the hot bath is the one with the smallest beta
    hot = int(np.argmin([b.beta for b in cfg.baths]))
    bundle.plots[MAIN] = PlotSpec("lam", tuple(f"J{hot + 1}_{v}" for v in cfg.model.variants),
                                ylabel=f"heat current from bath {hot + 1}",
                                logx=True, logy=True, title=cfg.name)
    bundle.summary["hot_bath"] = hot + 1
    bundle.summary["max_current_imbalance"] = max(
        abs(float(np.sum(r[v]["currents"]))) for r in results for v in cfg.model.variants)


def _run_validity_scan(cfg, bundle):
    specs, keys = [], []
    for wm in cfg.run.omega_minus_grid:
        for lam in cfg.run.grid:
            spec = _with_parameter(_with_parameter(cfg.spec, "omega_minus", wm), "lam", lam)
            specs.append(spec)
            keys.append((wm, lam))
    results = _map_points(cfg, specs)
    ref = cfg.analysis.reference
    others = [v for v in cfg.model.variants if v != ref]
    cols = ["omega_minus", "lam"] + [f"fidelity_{ref}_{v}" for v in others]
    rows = []
    for (wm, lam), res in zip(keys, results):
        rows.append([wm, lam] + [fidelity(res[ref]["rho"], res[v]["rho"]) for v in others])
    table = Table(cols, rows)
    bundle.tables[MAIN] = table
    verdict = {}
    for v in others:
        col = table.column(f"fidelity_{ref}_{v}")
        verdict[v] = {f"{wm!r}": [float(lam) for (w, lam), f in zip(keys, col)
                                  if w == wm and f >= 0.999]
                      for wm in cfg.run.omega_minus_grid}
    bundle.summary["agrees_with_reference_at_0.999"] = verdict


_RUNNERS = {
    "trajectory": _run_trajectory,
    "steady_sweep": _run_steady_sweep,
    "heat_sweep": _run_heat_sweep,
    "validity_scan": _run_validity_scan,
}


def run_scenario(cfg):
    """Compute a scenario.

    Returns
    -------
    Bundle

    Raises
    ------
    ConfigError, CrossingSingularity, NoConvergence
        Passed through from validation, assembly and steady-state search.
    """
    bundle = Bundle(name=cfg.name, config=config_to_dict(cfg))
    _RUNNERS[cfg.run.kind](cfg, bundle)
    return bundle


def _filename(name, suffix, ext):
    # the main table is written without a suffix
    return f"{name}_{suffix}.{ext}" if suffix and suffix != MAIN else f"{name}.{ext}"


def write_bundle(bundle, directory, formats=("csv",)):
    """Write the bundle's files and return their paths.

    CSV holds every table; JSON holds the configuration, all tables, the
    summary and (for trajectory runs) every state; SVG draws each table that
    has a plot, from the same arrays that went into the CSV.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    if "csv" in formats:
        for suffix, table in bundle.tables.items():
            written.append(write_csv(directory / _filename(bundle.name, suffix, "csv"), table))
    if "json" in formats:
        doc = {"scenario": bundle.config, "summary": bundle.summary,
               "tables": {k: t.to_dict() for k, t in bundle.tables.items()},
               "trajectories": {k: trajectory_to_dict(t)
                                for k, t in bundle.trajectories.items()}}
        path = directory / _filename(bundle.name, "", "json")
        path.write_text(dump_archive(_clean(doc)))
        written.append(path)
    if "svg" in formats:
        for suffix, plot in bundle.plots.items():
            path = directory / _filename(bundle.name, suffix, "svg")
            render_svg(bundle.tables[suffix], plot, path)
            written.append(path)
    return written


def _clean(obj):
    """Replace NaN with None so the archive is strict JSON."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (float, np.floating)):
        return None if math.isnan(obj) else float(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    return obj
