"""Permeability calibration against piezometer readings, and screening of
the instruments themselves.

The search runs in log10(k) because the material table spans eight orders of
magnitude. The instrument datum is never trusted: when fit_datum is on, the
shared offset between instrument readings and model heads is profiled out
analytically (it is the mean residual), so the objective only sees the shape
of the head distribution.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .errors import ValidationError
from .fem import SolverSettings, solve_unconfined
from .geometry import (
    DamSection,
    MaterialProperties,
    Permeability,
    Scenario,
    Zone,
    apply_scenario,
    boundary_conditions_for,
)
from .meshing import Mesh, MeshOptions, triangulate
from .postproc import HeadProbe

log = logging.getLogger(__name__)

UNCONVERGED_PENALTY = 1e6  # meters of rms; far beyond any physical misfit


@dataclass(frozen=True)
class PiezometerRecord:
    """One observation: instrument name, location, and its reading.

    observed_level is in the instrument's own datum; datum_offset converts
    it to meters a.s.l. (usually fitted, not known).
    """

    name: str
    location: tuple
    observed_level: float
    datum_offset: float = 0.0


@dataclass(frozen=True)
class CalibrationProblem:
    section: DamSection
    scenario: Scenario
    free_parameters: tuple  # of (zone name, (lo, hi) log10 m/s bounds)
    observations: tuple  # of PiezometerRecord
    fit_datum: bool = True
    mesh_options: MeshOptions = field(default_factory=MeshOptions)
    solver: SolverSettings = field(default_factory=SolverSettings)

    def __post_init__(self) -> None:
        object.__setattr__(self, "free_parameters", tuple(self.free_parameters))
        object.__setattr__(self, "observations", tuple(self.observations))
        if not self.free_parameters:
            raise ValidationError("calibration needs at least one free parameter")
        for name, (lo, hi) in self.free_parameters:
            if not (np.isfinite(lo) and np.isfinite(hi) and lo < hi):
                raise ValidationError(f"parameter {name!r}: bad bounds ({lo}, {hi})")
        if not self.observations:
            raise ValidationError("calibration needs at least one observation")
        # a single observation with a fitted datum is degenerate (the offset
        # absorbs any misfit); permitted, but the evaluator warns about it


@dataclass
class CalibrationResult:
    parameters: dict  # zone name -> fitted log10 k
    datum_offset: float
    rms_residual: float
    history: tuple  # best objective after each evaluation
    evaluations: int
    converged: bool


class _Evaluator:
    """Meshes the scenario once; each evaluation only swaps zone materials."""

    def __init__(self, problem: CalibrationProblem):
        self.problem = problem
        section = apply_scenario(problem.section, problem.scenario)
        segments = boundary_conditions_for(section, problem.scenario)
        self.mesh = triangulate(section, problem.mesh_options, segments=segments)
        self.names = [name for name, _ in problem.free_parameters]
        zone_bases = {z.name.split(" (")[0] for z in self.mesh.zones}
        missing = [n for n in self.names if n not in zone_bases]
        if missing:
            raise ValidationError(f"no zone matches free parameters {missing}")
        if len(self.problem.observations) == 1 and self.problem.fit_datum:
            log.warning(
                "single observation with a fitted datum: objective is "
                "identically zero, parameters are undetermined"
            )

    def _with_k(self, log10_k: np.ndarray) -> Mesh:
        table = dict(zip(self.names, 10.0 ** np.asarray(log10_k, dtype=float)))

        def swap(zone: Zone) -> Zone:
            base = zone.name.split(" (")[0]
            k = table.get(base)
            if k is None:
                return zone
            mat = MaterialProperties(
                zone.material.name, Permeability.from_value(k, "m/s")
            )
            return Zone(zone.name, mat, zone.vertices)

        return replace(self.mesh, zones=tuple(swap(z) for z in self.mesh.zones))

    def residuals(self, log10_k) -> tuple:
        """(residual array, datum offset); penalty residual if unconverged."""
        result = solve_unconfined(self._with_k(log10_k), self.problem.solver)
        if not result.converged:
            log.warning("solve did not converge at log10k=%s", list(log10_k))
            return np.array([UNCONVERGED_PENALTY]), 0.0
        probe = HeadProbe(result)
        obs = self.problem.observations
        modeled = np.array([probe(r.location) for r in obs])
        observed = np.array([r.observed_level + r.datum_offset for r in obs])
        diff = modeled - observed
        offset = float(diff.mean()) if self.problem.fit_datum else 0.0
        return diff - offset, offset

    def objective(self, log10_k) -> float:
        res, _ = self.residuals(log10_k)
        return float(np.sqrt(np.mean(res**2)))


def minimize_simplex(fun, x0, bounds, budget: int, step: float = 0.5):
    """Nelder-Mead with box clipping and a fixed +step initial simplex.

    Returns (best_x, best_f, history, evaluations). Deterministic.
    """
    from scipy.optimize import minimize

    x0 = np.asarray(x0, dtype=float)
    lo = np.array([b[0] for b in bounds])
    hi = np.array([b[1] for b in bounds])
    n = len(x0)
    if budget < 10 * n:
        raise ValidationError(f"budget {budget} < 10 x {n} parameters")
    simplex = np.vstack([x0] + [x0 + step * np.eye(n)[i] for i in range(n)])
    simplex = np.clip(simplex, lo, hi)

    history: list = []
    state = {"best_x": None, "best_f": np.inf, "evals": 0}

    def wrapped(x):
        if state["evals"] >= budget:
            # starve the search: report a plateau so it stops moving
            return state["best_f"]
        xc = np.clip(x, lo, hi)
        f = fun(xc)
        state["evals"] += 1
        if f < state["best_f"]:
            state["best_f"] = f
            state["best_x"] = xc.copy()
        history.append(state["best_f"])
        return f

    minimize(
        wrapped,
        x0,
        method="Nelder-Mead",
        options={
            "initial_simplex": simplex,
            "maxfev": budget,
            "xatol": 1e-4,
            "fatol": 1e-10,
        },
    )
    return state["best_x"], state["best_f"], tuple(history), state["evals"]


def calibrate(
    problem: CalibrationProblem,
    budget: int = 200,
    start: Optional[Sequence] = None,
) -> CalibrationResult:
    """Fit the free zone permeabilities to the observations.

    `start` is the initial log10-k vector; defaults to the bound midpoints.
    """
    ev = _Evaluator(problem)
    bounds = [b for _, b in problem.free_parameters]
    if start is None:
        x0 = np.array([0.5 * (lo + hi) for lo, hi in bounds])
    else:
        x0 = np.asarray(start, dtype=float)
        if x0.shape != (len(bounds),):
            raise ValidationError("start vector length != parameter count")
    best_x, best_f, history, evals = minimize_simplex(
        ev.objective, x0, bounds, budget
    )
    _, offset = ev.residuals(best_x)
    converged = bool(best_f < UNCONVERGED_PENALTY and evals < budget)
    return CalibrationResult(
        parameters=dict(zip(ev.names, (float(v) for v in best_x))),
        datum_offset=offset,
        rms_residual=best_f,
        history=history,
        evaluations=evals,
        converged=converged,
    )


def objective(problem: CalibrationProblem, log10_k) -> float:
    """rms head misfit (m) at one parameter vector."""
    return _Evaluator(problem).objective(log10_k)


# --- instrument screening ----------------------------------------------------

HEALTHY = "healthy"
DEFECTIVE = "defective"
INDETERMINATE = "indeterminate"


def screen_piezometers(
    series: dict,
    reservoir: Sequence,
    corr_threshold: float = 0.3,
    var_threshold: float = 1e-4,
    min_samples: int = 8,
) -> dict:
    """Classify each instrument series as healthy/defective/indeterminate.

    series maps instrument name -> sequence of (date, level); reservoir is
    the same for the tank level. A piezometer is defective when its level
    changes do not track reservoir changes (Pearson correlation below the
    threshold) or when it barely moves at all (variance floor).
    """
    res_map = dict(reservoir)
    out = {}
    for name, obs in series.items():
        paired = [(lvl, res_map[d]) for d, lvl in obs if d in res_map]
        if len(paired) < min_samples:
            out[name] = INDETERMINATE
            continue
        lvl = np.array([p[0] for p in paired])
        tank = np.array([p[1] for p in paired])
        if lvl.var() < var_threshold:
            out[name] = DEFECTIVE
            continue
        dl, dt = np.diff(lvl), np.diff(tank)
        denom = dl.std() * dt.std()
        corr = float((dl - dl.mean()) @ (dt - dt.mean()) / (len(dl) * denom)) if denom > 0 else 0.0
        out[name] = HEALTHY if corr >= corr_threshold else DEFECTIVE
    return out
