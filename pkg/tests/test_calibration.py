"""Calibration: simplex sanity, objective invariants, synthetic-twin
recovery, and piezometer screening."""

import logging

import numpy as np
import pytest

from damseep import calibration as cal
from damseep import geometry as geo
from damseep.errors import ValidationError
from damseep.fem import SolverSettings, solve_unconfined
from damseep.meshing import MeshOptions, triangulate
from damseep.postproc import HeadProbe

COARSE = MeshOptions(target_size=10.0, zone_sizes=(("Core", 3.0),))

# probe locations: one in the core shadow, three across the downstream half,
# plus one deep in the foundation; all sensitive to the foundation k
POINTS = ((310.0, 1562.0), (326.8, 1562.0), (352.9, 1562.0), (367.4, 1562.0),
          (322.5, 1530.0))


@pytest.fixture(scope="module")
def twin(sahand_section, baseline_scenario):
    """Observations generated by the model itself at the true parameters."""
    section = geo.apply_scenario(sahand_section, baseline_scenario)
    segs = geo.boundary_conditions_for(section, baseline_scenario)
    mesh = triangulate(section, COARSE, segments=segs)
    result = solve_unconfined(mesh)
    assert result.converged
    probe = HeadProbe(result)
    return tuple(
        cal.PiezometerRecord(f"P{i}", p, probe(p)) for i, p in enumerate(POINTS)
    )


@pytest.fixture(scope="module")
def problem(sahand_section, baseline_scenario, twin):
    return cal.CalibrationProblem(
        section=sahand_section,
        scenario=baseline_scenario,
        free_parameters=(("Stone Foundation", (-9.0, -3.0)),),
        observations=twin,
        mesh_options=COARSE,
    )


# --- simplex search sanity -------------------------------------------------

def test_simplex_finds_quadratic_minimum():
    f = lambda x: float((x[0] - 1.7) ** 2 + 2 * (x[1] + 0.4) ** 2)
    x, fx, hist, evals = cal.minimize_simplex(f, [0.0, 0.0], [(-5, 5), (-5, 5)], 400)
    assert abs(x[0] - 1.7) < 1e-3 and abs(x[1] + 0.4) < 1e-3
    assert evals <= 400
    assert all(b <= a + 1e-15 for a, b in zip(hist, hist[1:]))  # best-so-far


def test_simplex_respects_bounds():
    f = lambda x: float((x[0] - 10.0) ** 2)  # minimum outside the box
    x, fx, _, _ = cal.minimize_simplex(f, [0.0], [(-1.0, 2.0)], 200)
    assert -1.0 <= x[0] <= 2.0
    assert x[0] == pytest.approx(2.0, abs=1e-6)


def test_simplex_budget_guard():
    with pytest.raises(ValidationError):
        cal.minimize_simplex(lambda x: 0.0, [0.0, 0.0], [(-1, 1)] * 2, 15)


# --- objective ----------------------------------------------------------------

def test_objective_zero_at_truth(problem):
    # Table 1 foundation: 1e-4 cm/s = 1e-6 m/s
    assert cal.objective(problem, [-6.0]) < 1e-4


def test_objective_grows_away_from_truth(problem):
    # heads respond to k contrasts: toward the shell k (permeable side) the
    # regime shifts and the misfit grows fast; on the tight side the foundation
    # was already the bottleneck, so growth is real but smaller
    near = cal.objective(problem, [-6.0])
    assert near < 1e-4
    assert cal.objective(problem, [-4.5]) > 0.05
    assert cal.objective(problem, [-7.5]) > 5e-3


def test_objective_invariant_under_reordering(problem, twin):
    shuffled = cal.CalibrationProblem(
        section=problem.section,
        scenario=problem.scenario,
        free_parameters=problem.free_parameters,
        observations=twin[::-1],
        mesh_options=COARSE,
    )
    a = cal.objective(problem, [-5.0])
    b = cal.objective(shuffled, [-5.0])
    assert a == pytest.approx(b, rel=1e-12)


def test_datum_shift_absorbed_exactly(problem, twin):
    shifted = tuple(
        cal.PiezometerRecord(r.name, r.location, r.observed_level + 37.0)
        for r in twin
    )
    p2 = cal.CalibrationProblem(
        section=problem.section,
        scenario=problem.scenario,
        free_parameters=problem.free_parameters,
        observations=shifted,
        mesh_options=COARSE,
    )
    ev1, ev2 = cal._Evaluator(problem), cal._Evaluator(p2)
    r1, off1 = ev1.residuals([-5.5])
    r2, off2 = ev2.residuals([-5.5])
    np.testing.assert_allclose(r1, r2, atol=1e-12)
    assert off2 - off1 == pytest.approx(-37.0, abs=1e-9)


def test_single_observation_with_datum_is_degenerate(problem, twin, caplog):
    p1 = cal.CalibrationProblem(
        section=problem.section,
        scenario=problem.scenario,
        free_parameters=problem.free_parameters,
        observations=twin[:1],
        mesh_options=COARSE,
    )
    with caplog.at_level(logging.WARNING, logger="damseep.calibration"):
        far = cal.objective(p1, [-4.0])
    assert far == pytest.approx(0.0, abs=1e-12)  # offset absorbs everything
    assert any("single observation" in r.message for r in caplog.records)
    with pytest.raises(ValidationError):
        cal.CalibrationProblem(
            section=problem.section,
            scenario=problem.scenario,
            free_parameters=problem.free_parameters,
            observations=(),
            mesh_options=COARSE,
        )


def test_problem_validation(problem, twin):
    with pytest.raises(ValidationError):
        cal.CalibrationProblem(
            section=problem.section,
            scenario=problem.scenario,
            free_parameters=(),
            observations=twin,
        )
    with pytest.raises(ValidationError):
        cal.CalibrationProblem(
            section=problem.section,
            scenario=problem.scenario,
            free_parameters=(("Stone Foundation", (-3.0, -9.0)),),
            observations=twin,
        )
    with pytest.raises(ValidationError):
        cal.calibrate(problem, budget=200, start=[1.0, 2.0])


def test_unknown_zone_rejected(problem, twin):
    bad = cal.CalibrationProblem(
        section=problem.section,
        scenario=problem.scenario,
        free_parameters=(("Bedrock", (-9.0, -3.0)),),
        observations=twin,
        mesh_options=COARSE,
    )
    with pytest.raises(ValidationError):
        cal.objective(bad, [-5.0])


# --- synthetic twin recovery ---------------------------------------------------

def test_twin_recovery_from_two_decades_away(problem):
    result = cal.calibrate(problem, budget=200, start=[-4.0])
    assert result.evaluations <= 200
    fitted = result.parameters["Stone Foundation"]
    assert abs(fitted - (-6.0)) <= 0.3
    assert result.rms_residual <= 2e-4  # 2 x tol_head
    assert result.converged


# --- piezometer screening ------------------------------------------------------

def _dates(n):
    return [f"2005-{1 + i // 28:02d}-{1 + i % 28:02d}" for i in range(n)]


def test_screening_statuses():
    dates = _dates(16)
    rng = np.random.default_rng(11)
    tank = 1590 + 5 * np.sin(np.linspace(0, 3, 16))
    reservoir = list(zip(dates, tank))
    series = {
        "tracker": list(zip(dates, tank - 20.0)),
        "stuck": list(zip(dates, np.full(16, 1571.0))),
        "noisy": list(zip(dates, 1575 + rng.normal(0, 5.0, 16))),
        "short": list(zip(dates[:5], tank[:5])),
    }
    out = cal.screen_piezometers(series, reservoir)
    assert out["tracker"] == cal.HEALTHY
    assert out["stuck"] == cal.DEFECTIVE
    assert out["noisy"] == cal.DEFECTIVE
    assert out["short"] == cal.INDETERMINATE


def test_screening_correlation_threshold_monte_carlo():
    # reservoir changes + independent noise of equal variance: expected
    # correlation 1/sqrt(2) ~ 0.71 (healthy); pure noise ~ 0 (defective)
    rng = np.random.default_rng(5)
    dates = _dates(120)
    tank = np.cumsum(rng.normal(0, 1, 120)) + 1590
    reservoir = list(zip(dates, tank))
    mixed = tank + np.cumsum(rng.normal(0, 1, 120))
    series = {"mixed": list(zip(dates, mixed))}
    assert cal.screen_piezometers(series, reservoir)["mixed"] == cal.HEALTHY
