"""Derived-quantity tests: probes, discharge reports, phreatic line,
gradients, and the cut-line cross-check."""

import numpy as np
import pytest

from damseep import geometry as geo
from damseep import postproc as pp
from damseep.errors import PostprocError
from damseep.fem import SolveResult, solve_unconfined
from damseep.meshing import MeshOptions, triangulate


@pytest.fixture(scope="module")
def rect_solution(rect_section):
    sc = geo.Scenario("dupuit", 10.0, tailwater_level=2.0)
    segs = geo.boundary_conditions_for(rect_section, sc)
    mesh = triangulate(rect_section, MeshOptions(target_size=0.5), segments=segs)
    return solve_unconfined(mesh)


@pytest.fixture(scope="module")
def sahand_solution(sahand_section, baseline_scenario):
    section = geo.apply_scenario(sahand_section, baseline_scenario)
    segs = geo.boundary_conditions_for(section, baseline_scenario)
    mesh = triangulate(
        section,
        MeshOptions(target_size=6.0, zone_sizes=(("Core", 2.0),)),
        segments=segs,
    )
    return solve_unconfined(mesh)


def synthetic_solution(mesh, head, converged=True, q=0.0):
    """A SolveResult carrying only what the readers use."""
    return SolveResult(
        mesh=mesh,
        head=head,
        pressure=head - mesh.nodes[:, 1],
        kr=np.ones(mesh.element_count),
        reactions=np.zeros(mesh.node_count),
        fixed_nodes=np.empty(0, dtype=np.int64),
        seepage_nodes=np.empty(0, dtype=np.int64),
        active_seepage=np.empty(0, dtype=np.int64),
        outer_iterations=1,
        linear_iterations=0,
        converged=converged,
        mass_balance_error=0.0,
        inflow_per_meter=q,
        p_transition_used=1.0,
    )


@pytest.fixture(scope="module")
def linear_solution(rect_section):
    mesh = triangulate(rect_section, MeshOptions(target_size=1.0))
    head = 2.0 * mesh.nodes[:, 0] + 3.0 * mesh.nodes[:, 1]
    return synthetic_solution(mesh, head)


# --- probes ---------------------------------------------------------------

def test_probe_exact_at_nodes(linear_solution):
    probe = pp.HeadProbe(linear_solution)
    for n in (0, 7, linear_solution.mesh.node_count - 1):
        x, y = linear_solution.mesh.nodes[n]
        assert probe((x, y)) == pytest.approx(linear_solution.head[n], abs=1e-12)


def test_probe_reproduces_linear_field(linear_solution):
    probe = pp.HeadProbe(linear_solution)
    rng = np.random.default_rng(3)
    for _ in range(50):
        x, y = rng.uniform(0, 20), rng.uniform(0, 10)
        assert probe((x, y)) == pytest.approx(2 * x + 3 * y, abs=1e-9)


def test_probe_continuous_across_edges(linear_solution):
    mesh = linear_solution.mesh
    probe = pp.HeadProbe(linear_solution)
    # midpoints of edges: interpolation from either side agrees
    for tri in mesh.elements[:30]:
        for i in range(3):
            pa, pb = mesh.nodes[tri[i]], mesh.nodes[tri[(i + 1) % 3]]
            mid = 0.5 * (pa + pb)
            expect = 0.5 * (
                linear_solution.head[tri[i]] + linear_solution.head[tri[(i + 1) % 3]]
            )
            assert probe(mid) == pytest.approx(expect, abs=1e-12)


def test_probe_outside_domain_raises(linear_solution):
    with pytest.raises(PostprocError):
        pp.probe_head(linear_solution, (-5.0, -5.0))


# --- discharge ------------------------------------------------------------

def test_discharge_report_unit_identities(linear_solution):
    sol = synthetic_solution(linear_solution.mesh, linear_solution.head, q=9.7e-6)
    rep = pp.total_discharge(sol, 450.0, scenario_id="normal")
    assert rep.q_total_lps == 4.365
    sol2 = synthetic_solution(linear_solution.mesh, linear_solution.head, q=5.5e-6)
    assert pp.total_discharge(sol2, 450.0).q_total_lps == 2.475


def test_discharge_refuses_unconverged(linear_solution):
    sol = synthetic_solution(linear_solution.mesh, linear_solution.head, converged=False)
    with pytest.raises(PostprocError):
        pp.total_discharge(sol, 450.0)


def test_zero_head_difference_zero_discharge(rect_section):
    sc = geo.Scenario("still", 10.0, tailwater_level=10.0)
    segs = geo.boundary_conditions_for(rect_section, sc)
    mesh = triangulate(rect_section, MeshOptions(target_size=1.0), segments=segs)
    res = solve_unconfined(mesh)
    assert res.converged
    rep = pp.total_discharge(res, 450.0)
    assert rep.q_total_lps == pytest.approx(0.0, abs=1e-9)
    line = pp.phreatic_line(res)
    assert line.confined
    assert line.points.size == 0


def test_cutline_crosschecks_reactions(rect_solution):
    q_ref = rect_solution.inflow_per_meter
    for x in (4.0, 10.0, 16.0):
        q_cut = pp.cutline_discharge(rect_solution, x)
        assert q_cut == pytest.approx(q_ref, rel=0.05)


def test_cutline_outside_raises(rect_solution):
    with pytest.raises(PostprocError):
        pp.cutline_discharge(rect_solution, 25.0)


# --- phreatic line ----------------------------------------------------------

def test_phreatic_line_rect(rect_solution):
    line = pp.phreatic_line(rect_solution)
    assert not line.confined
    pts = line.points
    assert np.all(np.diff(pts[:, 0]) > 0)
    # starts at the reservoir waterline, within one element of (0, 10)
    assert pts[0, 0] < 1.0 and abs(pts[0, 1] - 10.0) < 0.5
    # ends on the downstream face above tailwater
    assert pts[-1, 1] <= 10.0 + 1e-6
    assert pts[-1, 1] >= 2.0 - 1e-6
    # the free surface only falls from reservoir to exit
    assert np.all(np.diff(pts[:, 1]) <= 1e-9)


def test_phreatic_vertices_at_zero_pressure(rect_solution):
    probe = pp.HeadProbe(rect_solution)
    line = pp.phreatic_line(rect_solution)
    for x, y in line.points[:: max(1, len(line.points) // 20)]:
        assert abs(probe((x, y)) - y) < 1e-6


# --- gradients --------------------------------------------------------------

def test_gradient_of_linear_field(linear_solution):
    grad = pp.gradient_field(linear_solution)
    np.testing.assert_allclose(grad[:, 0], 2.0, atol=1e-12)
    np.testing.assert_allclose(grad[:, 1], 3.0, atol=1e-12)


def test_uniform_column_gradient(rect_section):
    mesh = triangulate(rect_section, MeshOptions(target_size=1.0))
    head = mesh.nodes[:, 0]  # dH = 20 over L = 20
    sol = synthetic_solution(mesh, head)
    grad = pp.gradient_field(sol)
    np.testing.assert_allclose(np.hypot(grad[:, 0], grad[:, 1]), 1.0, atol=1e-12)


def test_velocity_opposes_gradient(rect_solution):
    grad = pp.gradient_field(rect_solution)
    vel = pp.velocity_field(rect_solution)
    # fully saturated elements: v = -K * grad with K = 1e-4
    sat = rect_solution.kr == 1.0
    assert sat.sum() > 100
    np.testing.assert_allclose(vel[sat], -1e-4 * grad[sat], rtol=1e-12)


def test_exit_gradient_positive(rect_solution):
    g = pp.exit_gradient(rect_solution)
    assert np.isfinite(g) and g > 0


def test_sahand_max_gradient_in_core(sahand_solution):
    grad = pp.gradient_field(sahand_solution)
    mag = np.hypot(grad[:, 0], grad[:, 1])
    zone = sahand_solution.mesh.zones[
        sahand_solution.mesh.element_zone[int(np.argmax(mag))]
    ]
    # nearly the whole head drop happens across the core and its filters
    assert zone.name in {"Core", "Filter", "Drain adjacent to the filter"}
