"""Scenario files: parsing, validation and the built-in presets.

A scenario is a TOML document.  The sections are ``[system]``,
``[bath_defaults]``, ``[[baths]]``, ``[model]``, ``[initial_state]``,
``[run]``, ``[analysis]`` and ``[output]``; ``docs/config.md`` describes every
key.  Parsing returns an immutable :class:`ScenarioConfig`; anything
malformed raises :class:`~qubitpair.errors.ConfigError`.
"""
from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Optional

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .bath import DEFAULT_CUTOFF, DEFAULT_MU, BathSpec, SpectralDensity
from .errors import ConfigError
from .liouvillian import VARIANTS
from .system import RWA, Heisenberg, IsingXX, QubitPairSpec

__all__ = [
    "ScenarioConfig", "RunSpec", "AnalysisSpec", "ModelSpec", "OutputSpec",
    "load_config", "parse_config", "list_presets", "load_preset",
    "resolve", "parse_secular", "with_overrides", "RUN_KINDS", "TRAJECTORY_OBSERVABLES",
]

RUN_KINDS = ("trajectory", "steady_sweep", "heat_sweep", "validity_scan")
TRAJECTORY_OBSERVABLES = ("sz1", "sz2", "sx1", "sx2", "negativity", "fidelity")
STEADY_OBSERVABLES = ("sz1", "sz2", "sx1", "sx2", "negativity", "fidelity", "nullity")
OBSERVABLES_FOR_BEATS = ("sz1", "sz2", "sx1", "sx2")
SWEEP_PARAMETERS = ("lam", "omega2", "omega_minus")
FORMATS = ("csv", "json", "svg")
_SECTIONS = ("name", "description", "system", "bath_defaults", "baths", "model",
             "initial_state", "run", "analysis", "output")


@dataclass(frozen=True)
class ModelSpec:
    """Which generators to build and how.

    ``secular`` is ``"paper"``, ``"full"`` or ``"threshold"``; with
    ``"full"`` every variant is built with the full secular approximation.
    """

    variants: tuple
    secular: str = "paper"
    epsilon: Optional[float] = None
    lamb_shift: bool = True
    strict_local: bool = False
    override_validity_guard: bool = False


@dataclass(frozen=True)
class RunSpec:
    """What to compute.

    ``trajectory`` uses ``t_max`` and ``dt``; the sweeps use ``parameter``
    and ``grid`` (``validity_scan`` additionally ``omega_minus_grid``).
    """

    kind: str
    t_max: Optional[float] = None
    dt: Optional[float] = None
    parameter: Optional[str] = None
    grid: tuple = ()
    omega_minus_grid: tuple = ()


@dataclass(frozen=True)
class AnalysisSpec:
    observables: tuple = ("sz1",)
    reference: str = "GP"
    beats: tuple = ()
    sync: Optional[tuple] = None
    sync_window: Optional[float] = None


@dataclass(frozen=True)
class OutputSpec:
    directory: Optional[str] = None
    formats: tuple = ("csv",)


@dataclass(frozen=True)
class ScenarioConfig:
    """A validated scenario.

    Attributes
    ----------
    name : str
    spec : QubitPairSpec
    baths : tuple of BathSpec
    model, run, analysis, output : the corresponding sections
    rho0 : ndarray, shape (4, 4), optional
        Explicit initial state; None means the overlapped product state.
    """

    name: str
    spec: QubitPairSpec
    baths: tuple
    model: ModelSpec
    run: RunSpec
    analysis: AnalysisSpec = field(default_factory=AnalysisSpec)
    output: OutputSpec = field(default_factory=OutputSpec)
    rho0: Optional[np.ndarray] = None
    description: str = ""


def _get(section, key, kind, default=None, where=""):
    if key not in section:
        return default
    value = section[key]
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{where}{key} must be a number, got {value!r}")
        value = float(value)
        if not math.isfinite(value):
            raise ConfigError(f"{where}{key} must be finite, got {value!r}")
        return value
    if kind is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{where}{key} must be true or false, got {value!r}")
        return value
    if kind is str:
        if not isinstance(value, str):
            raise ConfigError(f"{where}{key} must be a string, got {value!r}")
        return value
    return value


def _check_keys(section, allowed, where):
    unknown = sorted(set(section) - set(allowed))
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(unknown)}")


def _pair(value, where):
    if (not isinstance(value, (list, tuple)) or len(value) != 2
            or any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in value)):
        raise ConfigError(f"{where} must be a list of two numbers, got {value!r}")
    return (float(value[0]), float(value[1]))


def _parse_system(sec):
    _check_keys(sec, ("omega2", "omega_minus", "coupling", "lam", "lx", "ly", "lz"), "[system]")
    if "omega2" in sec and "omega_minus" in sec:
        raise ConfigError("[system] sets both omega2 and omega_minus; give one")
    if "omega_minus" in sec:
        omega2 = 1.0 - _get(sec, "omega_minus", float, where="system.")
    else:
        omega2 = _get(sec, "omega2", float, None, "system.")
    if omega2 is None:
        raise ConfigError("[system] needs omega2 or omega_minus")
    kind = _get(sec, "coupling", str, "ising", "system.")
    if kind == "ising":
        coupling = IsingXX(_get(sec, "lam", float, 0.0, "system."))
    elif kind == "rwa":
        coupling = RWA(_get(sec, "lam", float, 0.0, "system."))
    elif kind == "heisenberg":
        if "lam" in sec:
            raise ConfigError("heisenberg coupling takes lx, ly, lz, not lam")
        coupling = Heisenberg(*(_get(sec, k, float, 0.0, "system.") for k in ("lx", "ly", "lz")))
    else:
        raise ConfigError(f"system.coupling must be ising, heisenberg or rwa, got {kind!r}")
    try:
        return QubitPairSpec(omega2, coupling)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _parse_baths(defaults, baths):
    _check_keys(defaults, ("mu", "cutoff", "spectral"), "[bath_defaults]")
    mu = _get(defaults, "mu", float, DEFAULT_MU, "bath_defaults.")
    cutoff = _get(defaults, "cutoff", float, DEFAULT_CUTOFF, "bath_defaults.")
    kind = _get(defaults, "spectral", str, "ohmic", "bath_defaults.")
    if not isinstance(baths, list) or not baths:
        raise ConfigError("at least one [[baths]] entry is required")
    out = []
    for k, b in enumerate(baths):
        where = f"baths[{k}]."
        if not isinstance(b, dict):
            raise ConfigError(f"{where[:-1]} must be a table")
        _check_keys(b, ("attachment", "beta", "gx", "gz", "mu", "cutoff", "spectral",
                        "split_channels"), f"[[baths]] #{k}")
        if "attachment" not in b or "beta" not in b:
            raise ConfigError(f"{where[:-1]} needs attachment and beta")
        sd = SpectralDensity(_get(b, "spectral", str, kind, where),
                             _get(b, "cutoff", float, cutoff, where))
        out.append(BathSpec(
            attachment=_get(b, "attachment", str, where=where),
            beta=_get(b, "beta", float, where=where),
            gx=_pair(b.get("gx", (0.0, 0.0)), where + "gx"),
            gz=_pair(b.get("gz", (0.0, 0.0)), where + "gz"),
            mu=_get(b, "mu", float, mu, where),
            spectral=sd,
            split_channels=_get(b, "split_channels", bool, False, where)))
    return tuple(out)


def parse_secular(text):
    """Split ``full``, ``paper`` or ``threshold[:EPS]`` into ``(rule, epsilon)``."""
    if not isinstance(text, str):
        raise ConfigError(f"secular setting must be a string, got {text!r}")
    head, _, tail = text.partition(":")
    if head in ("full", "paper") and not tail:
        return head, None
    if head == "threshold":
        if not tail:
            return "threshold", None
        try:
            eps = float(tail)
        except ValueError:
            raise ConfigError(f"bad threshold {tail!r} in secular setting") from None
        if not (eps >= 0 and math.isfinite(eps)):
            raise ConfigError(f"threshold must be nonnegative and finite, got {eps!r}")
        return "threshold", eps
    raise ConfigError(f"secular must be full, paper or threshold:EPS, got {text!r}")


def _parse_model(sec):
    _check_keys(sec, ("variants", "secular", "lamb_shift", "strict_local",
                      "override_validity_guard"), "[model]")
    variants = sec.get("variants", ["GP", "GF"])
    if not isinstance(variants, list) or not variants:
        raise ConfigError("model.variants must be a non-empty list")
    for v in variants:
        if v not in VARIANTS:
            raise ConfigError(f"unknown variant {v!r}; expected some of {VARIANTS}")
    if len(set(variants)) != len(variants):
        raise ConfigError("model.variants lists a variant twice")
    rule, eps = parse_secular(sec.get("secular", "paper"))
    return ModelSpec(
        variants=tuple(variants), secular=rule, epsilon=eps,
        lamb_shift=_get(sec, "lamb_shift", bool, True, "model."),
        strict_local=_get(sec, "strict_local", bool, False, "model."),
        override_validity_guard=_get(sec, "override_validity_guard", bool, False, "model."))


def _parse_grid(value, where):
    """A list of numbers or ``{start, stop, num, scale}``; strictly increasing."""
    if isinstance(value, dict):
        _check_keys(value, ("start", "stop", "num", "scale"), where)
        try:
            start, stop = float(value["start"]), float(value["stop"])
            num = value["num"]
        except KeyError as exc:
            raise ConfigError(f"{where} is missing {exc.args[0]}") from None
        if isinstance(num, bool) or not isinstance(num, int) or num < 1:
            raise ConfigError(f"{where}.num must be a positive integer")
        scale = value.get("scale", "linear")
        if scale == "log":
            if start <= 0 or stop <= 0:
                raise ConfigError(f"{where}: log grid needs positive bounds")
            grid = np.logspace(math.log10(start), math.log10(stop), num)
        elif scale == "linear":
            grid = np.linspace(start, stop, num)
        else:
            raise ConfigError(f"{where}.scale must be linear or log, got {scale!r}")
    elif isinstance(value, list) and value:
        if any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in value):
            raise ConfigError(f"{where} must contain numbers only")
        grid = np.asarray(value, dtype=float)
    else:
        raise ConfigError(f"{where} must be a non-empty list or a range table")
    if not np.all(np.isfinite(grid)):
        raise ConfigError(f"{where} has non-finite values")
    if np.any(np.diff(grid) <= 0):
        raise ConfigError(f"{where} must be strictly increasing")
    return tuple(float(g) for g in grid)


def _parse_run(sec):
    _check_keys(sec, ("kind", "t_max", "dt", "parameter", "grid", "omega_minus_grid"), "[run]")
    kind = _get(sec, "kind", str, None, "run.")
    if kind not in RUN_KINDS:
        raise ConfigError(f"run.kind must be one of {RUN_KINDS}, got {kind!r}")
    if kind == "trajectory":
        t_max = _get(sec, "t_max", float, None, "run.")
        dt = _get(sec, "dt", float, None, "run.")
        if t_max is None or dt is None:
            raise ConfigError("trajectory runs need run.t_max and run.dt")
        if not (dt > 0 and t_max > dt):
            raise ConfigError(f"need 0 < dt < t_max, got dt={dt!r}, t_max={t_max!r}")
        return RunSpec(kind, t_max=t_max, dt=dt)
    if "grid" not in sec:
        raise ConfigError(f"{kind} runs need run.grid")
    grid = _parse_grid(sec["grid"], "run.grid")
    parameter = _get(sec, "parameter", str, "lam", "run.")
    if parameter not in SWEEP_PARAMETERS:
        raise ConfigError(f"run.parameter must be one of {SWEEP_PARAMETERS}, got {parameter!r}")
    if kind == "heat_sweep" and parameter != "lam":
        raise ConfigError("heat_sweep runs sweep lam only")
    om = ()
    if kind == "validity_scan":
        if parameter != "lam":
            raise ConfigError("validity_scan runs sweep lam against omega_minus")
        if "omega_minus_grid" not in sec:
            raise ConfigError("validity_scan runs need run.omega_minus_grid")
        om = _parse_grid(sec["omega_minus_grid"], "run.omega_minus_grid")
    return RunSpec(kind, parameter=parameter, grid=grid, omega_minus_grid=om)


def _parse_analysis(sec, run, variants):
    _check_keys(sec, ("observables", "reference", "beats", "sync", "sync_window"), "[analysis]")
    allowed = TRAJECTORY_OBSERVABLES if run.kind == "trajectory" else STEADY_OBSERVABLES
    default = ("sz1",) if run.kind == "trajectory" else ("fidelity",)
    obs = sec.get("observables", list(default))
    if not isinstance(obs, list) or not obs:
        raise ConfigError("analysis.observables must be a non-empty list")
    for o in obs:
        if o not in allowed:
            raise ConfigError(f"unknown observable {o!r} for a {run.kind} run; "
                              f"expected some of {allowed}")
    reference = _get(sec, "reference", str, variants[0], "analysis.")
    if "fidelity" in obs and reference not in variants:
        raise ConfigError(f"fidelity reference {reference!r} is not among the variants")
    beats = sec.get("beats", [])
    if not isinstance(beats, list) or any(b not in OBSERVABLES_FOR_BEATS for b in beats):
        raise ConfigError(f"analysis.beats must list observables from {OBSERVABLES_FOR_BEATS}")
    sync = sec.get("sync")
    if sync is not None:
        if (not isinstance(sync, list) or len(sync) != 2
                or any(s not in OBSERVABLES_FOR_BEATS for s in sync)):
            raise ConfigError("analysis.sync must name two observables")
        sync = tuple(sync)
    window = _get(sec, "sync_window", float, None, "analysis.")
    if (beats or sync) and run.kind != "trajectory":
        raise ConfigError("beats and sync analyses need a trajectory run")
    if window is not None and window <= 0:
        raise ConfigError("analysis.sync_window must be positive")
    return AnalysisSpec(tuple(obs), reference, tuple(beats), sync, window)


def _parse_output(sec):
    _check_keys(sec, ("directory", "formats"), "[output]")
    formats = sec.get("formats", ["csv"])
    if not isinstance(formats, list) or not formats or any(f not in FORMATS for f in formats):
        raise ConfigError(f"output.formats must list some of {FORMATS}")
    return OutputSpec(_get(sec, "directory", str, None, "output."), tuple(formats))


def _parse_state(sec):
    _check_keys(sec, ("kind", "matrix"), "[initial_state]")
    kind = _get(sec, "kind", str, "overlapped", "initial_state.")
    if kind == "overlapped":
        return None
    if kind != "matrix":
        raise ConfigError(f"initial_state.kind must be overlapped or matrix, got {kind!r}")
    raw = sec.get("matrix")
    try:
        a = np.asarray(raw, dtype=float)
    except (TypeError, ValueError):
        raise ConfigError("initial_state.matrix must be numbers") from None
    if a.shape == (4, 4):
        rho = a.astype(complex)
    elif a.shape == (4, 4, 2):
        rho = a[..., 0] + 1j * a[..., 1]
    else:
        raise ConfigError("initial_state.matrix must be 4x4 (real) or 4x4x2 ([re, im])")
    if np.max(np.abs(rho - rho.conj().T)) > 1e-10:
        raise ConfigError("initial state is not Hermitian")
    if abs(np.trace(rho) - 1) > 1e-10:
        raise ConfigError("initial state does not have unit trace")
    if np.linalg.eigvalsh(rho)[0] < -1e-10:
        raise ConfigError("initial state is not positive semidefinite")
    return rho


def parse_config(doc, name=None):
    """Validate a parsed TOML mapping.

    Parameters
    ----------
    doc : dict
    name : str, optional
        Used when the document has no ``name`` key.

    Returns
    -------
    ScenarioConfig
    """
    if not isinstance(doc, dict):
        raise ConfigError("scenario must be a table")
    _check_keys(doc, _SECTIONS, "scenario")
    for sec in ("system", "bath_defaults", "model", "initial_state", "run", "analysis", "output"):
        if sec in doc and not isinstance(doc[sec], dict):
            raise ConfigError(f"[{sec}] must be a table")
    if "system" not in doc or "run" not in doc:
        raise ConfigError("scenario needs [system] and [run] sections")
    spec = _parse_system(doc["system"])
    baths = _parse_baths(doc.get("bath_defaults", {}), doc.get("baths"))
    model = _parse_model(doc.get("model", {}))
    run = _parse_run(doc["run"])
    analysis = _parse_analysis(doc.get("analysis", {}), run, model.variants)
    output = _parse_output(doc.get("output", {}))
    rho0 = _parse_state(doc.get("initial_state", {}))
    return ScenarioConfig(
        name=str(doc.get("name", name or "scenario")), spec=spec, baths=baths,
        model=model, run=run, analysis=analysis, output=output, rho0=rho0,
        description=str(doc.get("description", "")))


def load_config(path):
    """Read and validate a scenario file."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return parse_config(doc, name=path.stem)


def _preset_dir():
    return resources.files("qubitpair") / "presets"


def list_presets():
    """``[(name, description)]`` of the built-in presets, sorted by name."""
    out = []
    for entry in sorted(_preset_dir().iterdir(), key=lambda p: p.name):
        if entry.name.endswith(".toml"):
            doc = tomllib.loads(entry.read_text())
            out.append((entry.name[:-5], doc.get("description", "")))
    return out


def load_preset(name):
    names = [n for n, _ in list_presets()]
    if name not in names:
        raise ConfigError(f"unknown preset {name!r}; valid presets: {', '.join(names)}")
    entry = _preset_dir() / f"{name}.toml"
    return parse_config(tomllib.loads(entry.read_text()), name=name)


def resolve(target):
    """Load ``target`` as a file path if it exists, else as a preset name."""
    if Path(target).is_file():
        return load_config(target)
    if target.endswith(".toml") or "/" in target:
        raise ConfigError(f"no such scenario file: {target}")
    return load_preset(target)


def with_overrides(cfg, lamb_shift=None, secular=None, override_validity_guard=None,
                   formats=None, directory=None):
    """Copy of ``cfg`` with command-line overrides applied."""
    model = cfg.model
    if lamb_shift is not None:
        model = replace(model, lamb_shift=lamb_shift)
    if secular is not None:
        rule, eps = parse_secular(secular)
        model = replace(model, secular=rule, epsilon=eps)
    if override_validity_guard:
        model = replace(model, override_validity_guard=True)
    output = cfg.output
    if formats is not None:
        output = replace(output, formats=tuple(formats))
    if directory is not None:
        output = replace(output, directory=directory)
    return replace(cfg, model=model, output=output)
