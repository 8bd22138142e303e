"""Solver tests: element oracles, assembly, linear algebra, and the
unconfined benchmarks with analytic answers."""

import numpy as np
import pytest
from hypothesis import given, settings as hyp_settings
from hypothesis import strategies as st
from scipy.sparse.linalg import spsolve

from damseep import geometry as geo
from damseep.errors import SolverError
from damseep.fem import (
    SolverSettings,
    assemble_stiffness,
    element_conductance,
    solve_unconfined,
)
from damseep.fem import kernels
from damseep.meshing import MeshOptions, triangulate
from damseep.postproc import phreatic_line


def dupuit_mesh(rect_section, size):
    sc = geo.Scenario("dupuit", 10.0, tailwater_level=2.0)
    segs = geo.boundary_conditions_for(rect_section, sc)
    return triangulate(rect_section, MeshOptions(target_size=size), segments=segs)


# --- element conductance -------------------------------------------------

def test_unit_right_triangle_conductance():
    # hand integration of grad(Ni).grad(Nj) over the unit right triangle
    ke = element_conductance([(0, 0), (1, 0), (0, 1)], 1.0)
    expected = np.array([[1.0, -0.5, -0.5], [-0.5, 0.5, 0.0], [-0.5, 0.0, 0.5]])
    np.testing.assert_allclose(ke, expected, atol=1e-15)


def test_conductance_scales_linearly():
    tri = [(0.3, 0.1), (2.4, 0.7), (1.1, 3.0)]
    np.testing.assert_allclose(
        element_conductance(tri, 0.5), 0.5 * element_conductance(tri, 1.0),
        rtol=1e-15,
    )


coord = st.floats(-50, 50, allow_nan=False, allow_infinity=False)


@given(st.tuples(coord, coord, coord, coord, coord, coord))
@hyp_settings(max_examples=60, deadline=None)
def test_conductance_properties(c):
    x0, y0, x1, y1, x2, y2 = c
    area2 = (x1 - x0) * (y2 - y0) - (x2 - x0) * (y1 - y0)
    if area2 < 1e-6:
        return  # degenerate or misoriented; covered below
    ke = element_conductance([(x0, y0), (x1, y1), (x2, y2)], 1.0)
    np.testing.assert_allclose(ke, ke.T, atol=1e-12)
    np.testing.assert_allclose(ke.sum(axis=1), 0.0, atol=1e-9)
    eig = np.linalg.eigvalsh(ke)
    assert eig[0] >= -1e-9  # PSD with the constant-head null space
    # translation invariance
    ke2 = element_conductance([(x0 + 3, y0 - 7), (x1 + 3, y1 - 7), (x2 + 3, y2 - 7)], 1.0)
    np.testing.assert_allclose(ke, ke2, atol=1e-9)


def test_degenerate_element_rejected():
    with pytest.raises(SolverError):
        element_conductance([(0, 0), (1, 0), (2, 0)], 1.0)


# --- assembly against a dense brute force --------------------------------

def fan_mesh(rect_material):
    """Hand-built 4-element fan over the unit square, two materials."""
    from damseep.meshing import Mesh

    other = geo.MaterialProperties("Gravel", geo.Permeability.from_value(5e-3, "m/s"))
    ring = ((0, 0), (1, 0), (1, 1), (0, 1))
    zones = (geo.Zone("A", rect_material, ring), geo.Zone("B", other, ring))
    nodes = np.array([(0, 0), (1, 0), (1, 1), (0, 1), (0.5, 0.5)], dtype=float)
    elements = np.array([[0, 1, 4], [1, 2, 4], [2, 3, 4], [3, 0, 4]], dtype=np.int64)
    return Mesh(
        nodes=nodes,
        elements=elements,
        element_zone=np.array([0, 0, 1, 1]),
        zones=zones,
        boundary_edges=np.array([[0, 1], [1, 2], [2, 3], [3, 0]], dtype=np.int64),
        boundary_edge_segment=np.zeros(4, dtype=np.int64),
        segments=(geo.BoundarySegment("rim", ring + (ring[0],), geo.impermeable()),),
        options=MeshOptions(target_size=1.0),
    )


def test_assembly_matches_dense_sum(rect_material):
    # tiny mesh, few elements; scatter hand-built element matrices densely
    mesh = fan_mesh(rect_material)
    assert mesh.element_count <= 8
    A = assemble_stiffness(mesh).toarray()
    n = mesh.node_count
    dense = np.zeros((n, n))
    k = mesh.element_k_sat()
    for e, tri in enumerate(mesh.elements):
        ke = element_conductance(mesh.nodes[tri], k[e])
        for i in range(3):
            for j in range(3):
                dense[tri[i], tri[j]] += ke[i, j]
    np.testing.assert_allclose(A, dense, atol=1e-12)
    np.testing.assert_allclose(A, A.T, atol=1e-15)


# --- patch test -----------------------------------------------------------

def _patch_test(mesh, a, b, c, tol=1e-9):
    A = assemble_stiffness(mesh)
    boundary = np.unique(mesh.boundary_edges)
    g = a + b * mesh.nodes[:, 0] + c * mesh.nodes[:, 1]
    free = np.setdiff1d(np.arange(mesh.node_count), boundary)
    rhs = -A[free][:, boundary] @ g[boundary]
    x, _ = kernels.linear_solve(A[free][:, free].tocsr(), rhs, rtol=1e-14)
    assert np.abs(x - g[free]).max() < tol


def test_patch_test_rectangle(rect_section):
    mesh = triangulate(rect_section, MeshOptions(target_size=1.0))
    _patch_test(mesh, 3.0, 0.25, -0.125)


def test_patch_test_irregular_uniform_k():
    # zoned geometry but uniform conductivity: linear fields must be exact
    mats = tuple(
        geo.MaterialProperties(m.name, geo.Permeability.from_value(1e-5, "m/s"))
        for m in geo.TABLE_MATERIALS
    )
    section = geo.build_sahand_section(geo.SahandParams(materials=mats))
    mesh = triangulate(section, MeshOptions(target_size=20.0))
    _patch_test(mesh, 1500.0, 0.01, 0.02)


# --- kr curve -------------------------------------------------------------

def test_kr_curve_endpoints_exact():
    p = np.array([0.0, 1.0, 50.0, -2.0, -7.5])
    kr = kernels.kr_curve(p, 1e-4, 2.0)
    assert kr[0] == 1.0 and kr[1] == 1.0 and kr[2] == 1.0
    assert kr[3] == 1e-4 and kr[4] == 1e-4
    mid = kernels.kr_curve(np.array([-1.0]), 1e-4, 2.0)[0]
    assert mid == pytest.approx(1e-4 + (1 - 1e-4) * 0.5, rel=1e-15)


def test_kr_curve_tangent_ends():
    # C2 blend: slope vanishes approaching both ends
    eps = 1e-6
    lo = kernels.kr_curve(np.array([-2.0 + eps, -eps]), 1e-4, 2.0)
    assert lo[0] - 1e-4 < 1e-9
    assert 1.0 - lo[1] < 1e-9


@given(st.lists(st.floats(-30, 30), min_size=2, max_size=40))
@hyp_settings(max_examples=60, deadline=None)
def test_kr_curve_monotone_bounded(ps):
    p = np.sort(np.asarray(ps, dtype=float))
    kr = kernels.kr_curve(p, 1e-4, 3.7)
    assert np.all(kr >= 1e-4) and np.all(kr <= 1.0)
    assert np.all(np.diff(kr) >= -1e-15)


# --- linear solver --------------------------------------------------------

def _grid_laplacian(n):
    from scipy.sparse import diags

    main = np.full(n, 2.0)
    off = np.full(n - 1, -1.0)
    return diags([off, main, off], [-1, 0, 1]).tocsr()


def test_linear_solve_matches_direct():
    rng = np.random.default_rng(7)
    A = _grid_laplacian(200) + 0.01 * np.eye(200)
    from scipy.sparse import csr_matrix

    A = csr_matrix(A)
    b = rng.normal(size=200)
    x, nit = kernels.linear_solve(A, b, rtol=1e-12)
    np.testing.assert_allclose(x, spsolve(A, b), rtol=1e-8)
    assert nit > 0


def test_linear_solve_rejects_indefinite():
    from scipy.sparse import diags

    A = diags([np.array([1.0, -1.0, 1.0, -1.0])], [0]).tocsr()
    with pytest.raises(SolverError):
        kernels.linear_solve(A, np.ones(4))


# --- unconfined solver ----------------------------------------------------

def test_solver_requires_fixed_head(rect_section):
    mesh = triangulate(rect_section, MeshOptions(target_size=2.0))
    with pytest.raises(SolverError):
        solve_unconfined(mesh)


def test_settings_validation():
    with pytest.raises(SolverError):
        SolverSettings(kr_min=0.0)
    with pytest.raises(SolverError):
        SolverSettings(relax=1.5)
    with pytest.raises(SolverError):
        SolverSettings(p_transition=-1.0)


def test_dupuit_discharge_and_phreatic(rect_section):
    # analytic: q = K(h1^2 - h2^2)/(2L), mid-length water table sqrt(52)
    q_exact = 1e-4 * (10.0**2 - 2.0**2) / (2 * 20.0)
    assert q_exact == pytest.approx(2.4e-4, rel=1e-12)
    qs = []
    res = None
    for size in (1.25, 0.8, 0.5):
        res = solve_unconfined(dupuit_mesh(rect_section, size))
        assert res.converged
        assert res.mass_balance_error <= 1e-8
        qs.append(res.inflow_per_meter)
    for a, b in zip(qs, qs[1:]):
        assert abs(b / a - 1) < 0.05
    assert abs(qs[-1] / q_exact - 1) < 0.10

    line = phreatic_line(res)
    assert not line.confined
    y_mid = np.interp(10.0, line.points[:, 0], line.points[:, 1])
    assert abs(y_mid / np.sqrt(52.0) - 1) < 0.10


def test_dupuit_head_bounds(rect_section):
    res = solve_unconfined(dupuit_mesh(rect_section, 0.8))
    # discrete maximum principle: heads stay inside the prescribed range
    assert res.head.max() <= 10.0 + 1e-6
    assert res.head.min() >= 2.0 - 1e-6


def test_seepage_face_state(rect_section):
    res = solve_unconfined(dupuit_mesh(rect_section, 0.8))
    y = res.mesh.nodes[:, 1]
    active = res.active_seepage
    assert active.size > 0
    # pinned nodes sit at atmospheric pressure on the downstream face
    np.testing.assert_allclose(res.head[active], y[active], atol=1e-9)
    assert np.all(y[active] > 2.0 - 1e-9)
    # water leaves through them
    assert res.reactions[active].sum() < 0


def test_saturated_mode_is_linear(rect_section):
    mesh = dupuit_mesh(rect_section, 1.0)
    res = solve_unconfined(mesh, SolverSettings(saturated=True))
    assert res.converged
    assert np.all(res.kr == 1.0)


def test_backend_parity(rect_section):
    if "cython" not in kernels.available_backends():
        pytest.skip("compiled backend not built")
    mesh = dupuit_mesh(rect_section, 0.8)
    q = {}
    for name in ("python", "cython"):
        res = solve_unconfined(mesh, SolverSettings(backend=name))
        q[name] = res.inflow_per_meter
    assert q["python"] == pytest.approx(q["cython"], rel=1e-10)
