"""Scenario documents: JSON parsing, defaults, and initial data construction.

A scenario bundles model parameters, the grid, the initial profiles, solver
settings, output settings and the experiment sweeps.  Every section except
``params`` is optional; missing keys take the defaults in :data:`DEFAULTS`,
and :meth:`Scenario.to_dict` echoes the fully resolved document.
"""

from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np

from .fast_solver import SolverConfig
from .grid import Grid, h1_norm
from .manifold import manifold_ub
from .model import ModelParams, baseline_params, validate_params
from .states import FastState, LimitState

FAMILIES = ("constant", "cosine-bump", "gaussian")


class ScenarioError(ValueError):
    """Schema or hypothesis violation in a scenario document."""


DEFAULTS: dict[str, Any] = {
    "grid": {"L": 1.0, "n": 128},
    "initial": {
        "u": {"family": "cosine-bump", "base": 0.8, "amplitude": 0.4, "center": 0.0, "width": 1.0},
        "v": {"family": "cosine-bump", "base": 0.5, "amplitude": -0.25, "center": 0.0, "width": 1.0},
        "ub_fraction": 0.25,
        "well_prepared": True,
    },
    "solver": {
        "dt": 2.5e-5, "t_end": 0.25, "eps": 1e-3, "cfl_safety": 1.0,
        "monitor_every": 10, "positivity_retry_limit": 4, "energy_p": [2.0],
        "limit_scheme": "explicit",
    },
    "outputs": {"directory": None, "snapshot_times": [], "plot": False},
    "experiments": {
        "eps_list": [1e-2, 3e-3, 1e-3, 3e-4, 1e-4],
        "reference": "split",
        "record_every": 1,
        "eps_init_list": [0.0, 0.05, 0.1, 0.2],
        "layer_eps": 1e-3,
        "layer_window": 3.0,
        "p_list": [2.0],
    },
}

_PROFILE_KEYS = {"family", "base", "amplitude", "center", "width"}


@dataclass(frozen=True)
class Profile:
    """Initial profile ``base + amplitude * shape(x)``.

    ``constant`` has shape 0, ``cosine-bump`` has ``cos(pi (x - center) / width)``
    and ``gaussian`` has ``exp(-(x - center)^2 / (2 width^2))``.
    """

    family: str
    base: float = 0.0
    amplitude: float = 0.0
    center: float = 0.0
    width: float = 1.0

    def __call__(self, x: np.ndarray) -> np.ndarray:
        if self.family == "constant":
            shape = np.zeros_like(x)
        elif self.family == "cosine-bump":
            shape = np.cos(np.pi * (x - self.center) / self.width)
        else:
            shape = np.exp(-((x - self.center) ** 2) / (2.0 * self.width**2))
        return self.base + self.amplitude * shape


@dataclass(frozen=True)
class Scenario:
    params: ModelParams
    grid: Grid
    u_init: Profile
    v_init: Profile
    ub_fraction: float
    well_prepared: bool
    solver: SolverConfig
    eps: float
    limit_scheme: str
    output_dir: str | None
    snapshot_times: tuple[float, ...]
    plot: bool
    experiments: dict[str, Any]

    # -- initial data ------------------------------------------------------
    def initial_fields(self) -> tuple[np.ndarray, np.ndarray]:
        x = self.grid.x
        return self.u_init(x), self.v_init(x)

    def initial_split(self, prepared: bool | None = None) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """``(u_a, u_b, v)`` at ``t = 0``; prepared data sit on the slow manifold."""
        if prepared is None:
            prepared = self.well_prepared
        u, v = self.initial_fields()
        ub = manifold_ub(u, v, self.params) if prepared else self.ub_fraction * u
        return u - ub, ub, v

    def fast_state(self, eps: float | None = None, prepared: bool | None = None) -> FastState:
        ua, ub, v = self.initial_split(prepared)
        return FastState(self.grid, ua, ub, v, self.eps if eps is None else eps)

    def limit_state(self) -> LimitState:
        u, v = self.initial_fields()
        return LimitState(self.grid, u, v)

    def eps_init(self, prepared: bool | None = None) -> float:
        """``|| u_b^init - u_b*(u^init, v^init) ||_{H^1}``."""
        ua, ub, v = self.initial_split(prepared)
        return h1_norm(ub - manifold_ub(ua + ub, v, self.params), self.grid.h)

    # -- serialisation -----------------------------------------------------
    def to_dict(self) -> dict[str, Any]:
        prof = lambda p: {"family": p.family, "base": p.base, "amplitude": p.amplitude,
                          "center": p.center, "width": p.width}
        s = self.solver
        return {
            "params": self.params.to_dict(),
            "grid": {"L": self.grid.L, "n": self.grid.n},
            "initial": {"u": prof(self.u_init), "v": prof(self.v_init),
                        "ub_fraction": self.ub_fraction, "well_prepared": self.well_prepared},
            "solver": {"dt": s.dt, "t_end": s.t_end, "eps": self.eps, "cfl_safety": s.cfl_safety,
                       "monitor_every": s.monitor_every,
                       "positivity_retry_limit": s.positivity_retry_limit,
                       "energy_p": list(s.energy_p), "limit_scheme": self.limit_scheme},
            "outputs": {"directory": self.output_dir, "snapshot_times": list(self.snapshot_times),
                        "plot": self.plot},
            "experiments": copy.deepcopy(self.experiments),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def replace_experiments(self, **changes) -> "Scenario":
        ex = dict(self.experiments)
        ex.update(changes)
        d = self.to_dict()
        d["experiments"] = ex
        return scenario_from_dict(d)


# -- parsing -----------------------------------------------------------------

def _section(doc: dict, key: str, path: str) -> dict:
    base = copy.deepcopy(DEFAULTS[key])
    given = doc.get(key, {})
    if not isinstance(given, dict):
        raise ScenarioError(f"'{path}{key}' must be an object")
    for k, v in given.items():
        if k not in base:
            raise ScenarioError(f"unknown key '{path}{key}.{k}'")
        base[k] = v
    return base


def _num(val, path: str, *, integer: bool = False, allow_none: bool = False) -> Any:
    if val is None and allow_none:
        return None
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ScenarioError(f"'{path}' must be a number")
    if not math.isfinite(val):
        raise ScenarioError(f"'{path}' must be finite")
    if integer:
        if int(val) != val:
            raise ScenarioError(f"'{path}' must be an integer")
        return int(val)
    return float(val)


def _numlist(val, path: str) -> list[float]:
    if not isinstance(val, list):
        raise ScenarioError(f"'{path}' must be a list of numbers")
    return [_num(x, f"{path}[{i}]") for i, x in enumerate(val)]


def _profile(val, path: str) -> Profile:
    if not isinstance(val, dict):
        raise ScenarioError(f"'{path}' must be an object")
    for k in val:
        if k not in _PROFILE_KEYS:
            raise ScenarioError(f"unknown key '{path}.{k}'")
    fam = val.get("family")
    if fam not in FAMILIES:
        raise ScenarioError(f"'{path}.family' must be one of {', '.join(FAMILIES)}")
    kw = {k: _num(val[k], f"{path}.{k}") for k in ("base", "amplitude", "center", "width") if k in val}
    prof = Profile(fam, **kw)
    if fam != "constant" and not prof.width > 0:
        raise ScenarioError(f"'{path}.width' must be > 0")
    return prof


def scenario_from_dict(doc: Any) -> Scenario:
    """Validate a decoded JSON document and fill in defaults."""
    if not isinstance(doc, dict):
        raise ScenarioError("scenario must be a JSON object")
    for k in doc:
        if k != "params" and k not in DEFAULTS:
            raise ScenarioError(f"unknown key '{k}'")
    if "params" not in doc:
        raise ScenarioError("missing key 'params'")
    if not isinstance(doc["params"], dict):
        raise ScenarioError("'params' must be an object")
    try:
        params = ModelParams.from_dict(doc["params"])
        report = validate_params(params)
    except ValueError as exc:
        raise ScenarioError(str(exc)) from None
    if not report.ok:
        raise ScenarioError(str(report))

    g = _section(doc, "grid", "")
    try:
        grid = Grid(_num(g["L"], "grid.L"), _num(g["n"], "grid.n", integer=True))
    except ScenarioError:
        raise
    except ValueError as exc:
        raise ScenarioError(f"grid: {exc}") from None

    ini = _section(doc, "initial", "")
    u_prof = _profile(ini["u"], "initial.u")
    v_prof = _profile(ini["v"], "initial.v")
    frac = _num(ini["ub_fraction"], "initial.ub_fraction")
    if not 0.0 <= frac <= 1.0:
        raise ScenarioError("'initial.ub_fraction' must lie in [0, 1]")
    if not isinstance(ini["well_prepared"], bool):
        raise ScenarioError("'initial.well_prepared' must be true or false")
    for name, prof in (("u", u_prof), ("v", v_prof)):
        vals = prof(grid.x)
        if np.any(vals < 0):
            raise ScenarioError(f"'initial.{name}' is negative somewhere on the grid")

    sv = _section(doc, "solver", "")
    eps = _num(sv["eps"], "solver.eps")
    if not eps > 0:
        raise ScenarioError("'solver.eps' must be > 0")
    scheme = sv["limit_scheme"]
    if scheme not in ("explicit", "split"):
        raise ScenarioError("'solver.limit_scheme' must be 'explicit' or 'split'")
    energy_p = _numlist(sv["energy_p"], "solver.energy_p")
    if any(p < 1 for p in energy_p):
        raise ScenarioError("'solver.energy_p' entries must be >= 1")
    try:
        cfg = SolverConfig(
            dt=_num(sv["dt"], "solver.dt"), t_end=_num(sv["t_end"], "solver.t_end"),
            cfl_safety=_num(sv["cfl_safety"], "solver.cfl_safety"),
            monitor_every=_num(sv["monitor_every"], "solver.monitor_every", integer=True),
            positivity_retry_limit=_num(sv["positivity_retry_limit"],
                                        "solver.positivity_retry_limit", integer=True),
            energy_p=tuple(energy_p),
        )
    except ValueError as exc:
        if isinstance(exc, ScenarioError):
            raise
        raise ScenarioError(f"solver: {exc}") from None

    out = _section(doc, "outputs", "")
    directory = out["directory"]
    if directory is not None and not isinstance(directory, str):
        raise ScenarioError("'outputs.directory' must be a string or null")
    snaps = _numlist(out["snapshot_times"], "outputs.snapshot_times")
    for i, t in enumerate(snaps):
        if not 0 <= t <= cfg.t_end:
            raise ScenarioError(f"'outputs.snapshot_times[{i}]' = {t:g} is outside [0, t_end]")
    if not isinstance(out["plot"], bool):
        raise ScenarioError("'outputs.plot' must be true or false")

    ex = _section(doc, "experiments", "")
    ex["eps_list"] = _numlist(ex["eps_list"], "experiments.eps_list")
    ex["eps_init_list"] = _numlist(ex["eps_init_list"], "experiments.eps_init_list")
    ex["p_list"] = _numlist(ex["p_list"], "experiments.p_list")
    ex["layer_eps"] = _num(ex["layer_eps"], "experiments.layer_eps")
    ex["layer_window"] = _num(ex["layer_window"], "experiments.layer_window")
    ex["record_every"] = _num(ex["record_every"], "experiments.record_every", integer=True)
    if ex["reference"] not in ("explicit", "split"):
        raise ScenarioError("'experiments.reference' must be 'explicit' or 'split'")
    if any(e <= 0 for e in ex["eps_list"]) or ex["layer_eps"] <= 0:
        raise ScenarioError("experiment eps values must be > 0")
    if any(e < 0 for e in ex["eps_init_list"]):
        raise ScenarioError("'experiments.eps_init_list' entries must be >= 0")
    if ex["record_every"] < 1 or ex["layer_window"] <= 0:
        raise ScenarioError("'experiments.record_every' and 'layer_window' must be positive")

    return Scenario(
        params=params, grid=grid, u_init=u_prof, v_init=v_prof, ub_fraction=frac,
        well_prepared=ini["well_prepared"], solver=cfg, eps=eps, limit_scheme=scheme,
        output_dir=directory, snapshot_times=tuple(sorted(snaps)), plot=out["plot"],
        experiments=ex,
    )


def parse_scenario(text: str) -> Scenario:
    """Parse and validate a scenario JSON document."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"malformed JSON: {exc}") from None
    return scenario_from_dict(doc)


def load_scenario(path: str | Path) -> Scenario:
    return parse_scenario(Path(path).read_text())


def baseline_scenario(**experiment_changes) -> Scenario:
    """The fixed baseline: unit interval, 128 cells, ``T = 0.25``, cosine bumps."""
    sc = scenario_from_dict({"params": baseline_params().to_dict()})
    return sc.replace_experiments(**experiment_changes) if experiment_changes else sc
