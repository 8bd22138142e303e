"""Steady unconfined seepage solver.

Total head h is the nodal unknown. Saturation is handled on a fixed mesh by
scaling each element's conductivity with a relative permeability kr taken
from a smooth curve in pressure head, and the downstream exit is handled by
an active set over potential-seepage nodes: an active node is pinned at
h = y (atmospheric), and is released again if that pin would have to pull
water inward. Outer (Picard) iterations relax the head update; once heads
and the active set settle, one unrelaxed solve with frozen kr produces the
reported solution, so its reactions satisfy discrete mass balance.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.sparse import coo_matrix

from ..errors import SolverError
from ..geometry import FIXED_HEAD, POTENTIAL_SEEPAGE_FACE
from ..meshing import Mesh
from . import kernels

_ACTIVATE_TOL = 1e-6  # meters of head excess before a seepage node pins


@dataclass(frozen=True)
class SolverSettings:
    """Iteration controls; the defaults solve every shipped scenario.

    p_transition is the suction range over which kr decays. It must span a
    couple of element rows or the saturation front hops rows and the outer
    iteration limit-cycles; None picks 1.5x the median edge length and the
    solver widens it further if it detects such a cycle. `saturated` forces
    kr = 1 everywhere (confined flow, used by linear benchmarks).
    """

    kr_min: float = 1e-4
    p_transition: Optional[float] = None  # meters; None = mesh-scaled
    relax: float = 0.5
    tol_head: float = 1e-4  # meters
    max_outer_iters: int = 200
    linear_rtol: float = 1e-10
    backend: Optional[str] = None
    saturated: bool = False

    def __post_init__(self) -> None:
        if not (0 < self.kr_min < 1):
            raise SolverError("kr_min must be in (0, 1)")
        if self.p_transition is not None and self.p_transition <= 0:
            raise SolverError("p_transition must be > 0")
        if not (0 < self.relax <= 1):
            raise SolverError("relax must be in (0, 1]")
        if self.tol_head <= 0 or self.max_outer_iters < 1:
            raise SolverError("bad iteration controls")


@dataclass
class SolveResult:
    mesh: Mesh
    head: np.ndarray
    pressure: np.ndarray  # pressure head h - y, meters
    kr: np.ndarray  # per element, as used by the reported solve
    reactions: np.ndarray  # nodal boundary flux, positive into the domain
    fixed_nodes: np.ndarray
    seepage_nodes: np.ndarray  # candidates
    active_seepage: np.ndarray  # subset of candidates pinned in the solution
    outer_iterations: int
    linear_iterations: int
    converged: bool
    mass_balance_error: float  # |net boundary flux| / inflow
    inflow_per_meter: float  # m^3/s per meter of crest
    p_transition_used: float

    def discharge_lps(self, crest_length: float) -> float:
        """Total leakage in liters per second over the given crest length."""
        return self.inflow_per_meter * (crest_length * 1000.0)


def node_conditions(mesh: Mesh):
    """Nodal boundary conditions from the tagged boundary edges.

    Returns (fixed head dict node->value, sorted seepage candidate array).
    A node shared by a fixed-head and a seepage segment keeps the fixed head.
    """
    fixed = {}
    candidates = set()
    for (a, b), si in zip(mesh.boundary_edges, mesh.boundary_edge_segment):
        cond = mesh.segments[si].condition
        if cond.kind == FIXED_HEAD:
            for n in (int(a), int(b)):
                prev = fixed.get(n)
                if prev is not None and abs(prev - cond.head) > 1e-9:
                    raise SolverError(
                        f"node {n} receives two fixed heads ({prev}, {cond.head})"
                    )
                fixed[n] = cond.head
        elif cond.kind == POTENTIAL_SEEPAGE_FACE:
            candidates.add(int(a))
            candidates.add(int(b))
    candidates -= fixed.keys()
    if not fixed:
        raise SolverError("no fixed-head boundary: the problem is singular")
    return fixed, np.array(sorted(candidates), dtype=np.int64)


def element_conductance(coords, coefficient: float = 1.0) -> np.ndarray:
    """Conductance matrix of one linear triangle (3x3)."""
    nodes = np.asarray(coords, dtype=float)
    ke = kernels.unit_stiffness(nodes, np.array([[0, 1, 2]], dtype=np.int64))[0]
    return coefficient * ke


def assemble_stiffness(mesh: Mesh, coefficients=None):
    """Global conductance matrix (CSR), coefficient k*kr per element.

    coefficients defaults to the saturated permeability of each element.
    """
    backend = kernels.get_backend()
    system = _System(mesh, backend)
    coef = system.k_sat if coefficients is None else np.asarray(coefficients)
    return system.assemble_coef(coef)


class _System:
    """Assembly state reused across outer iterations."""

    def __init__(self, mesh: Mesh, backend):
        self.mesh = mesh
        self.backend = backend
        self.n = mesh.node_count
        self.unit_ke = backend.unit_stiffness(mesh.nodes, mesh.elements)
        self.rows = np.repeat(mesh.elements, 3, axis=1).ravel()
        self.cols = np.tile(mesh.elements, (1, 3)).ravel()
        self.k_sat = mesh.element_k_sat()

    def assemble_coef(self, coef: np.ndarray):
        data = self.backend.stiffness_data(self.unit_ke, coef)
        return coo_matrix((data, (self.rows, self.cols)), shape=(self.n, self.n)).tocsr()

    def assemble(self, kr: np.ndarray):
        return self.assemble_coef(self.k_sat * kr)

    def solve_dirichlet(self, A, dirichlet_nodes, dirichlet_values, x0, rtol):
        free = np.ones(self.n, dtype=bool)
        free[dirichlet_nodes] = False
        free_idx = np.nonzero(free)[0]
        h = np.empty(self.n)
        h[dirichlet_nodes] = dirichlet_values
        if free_idx.size:
            A_f = A[free_idx]
            rhs = -(A_f[:, dirichlet_nodes] @ dirichlet_values)
            x, nit = self.backend.linear_solve(
                A_f[:, free_idx], rhs, x0=x0[free_idx], rtol=rtol
            )
            h[free_idx] = x
        else:
            nit = 0
        return h, nit


def solve_unconfined(
    mesh: Mesh, settings: Optional[SolverSettings] = None
) -> SolveResult:
    """Iterate saturation and the exit face to the steady seepage state."""
    settings = settings or SolverSettings()
    backend = kernels.get_backend(settings.backend)
    system = _System(mesh, backend)
    y = mesh.nodes[:, 1]
    fixed_map, candidates = node_conditions(mesh)
    fixed_nodes = np.array(sorted(fixed_map), dtype=np.int64)
    fixed_values = np.array([fixed_map[n] for n in fixed_nodes])
    cand_y = y[candidates]

    if settings.p_transition is not None:
        p_trans = settings.p_transition
    else:
        p_trans = max(0.5, 1.5 * float(np.median(mesh.edge_lengths())))
    p_trans_cap = 16.0 * p_trans

    h = np.full(system.n, float(fixed_values.max()))
    h[fixed_nodes] = fixed_values
    active = np.zeros(len(candidates), dtype=bool)
    kr = np.ones(mesh.element_count)
    elements = mesh.elements

    stable = 0
    total_lin = 0
    converged = False
    outer = 0
    dh_log = []
    for outer in range(1, settings.max_outer_iters + 1):
        A = system.assemble(kr)
        dir_nodes = np.concatenate([fixed_nodes, candidates[active]])
        dir_values = np.concatenate([fixed_values, cand_y[active]])
        h_solved, nit = system.solve_dirichlet(
            A, dir_nodes, dir_values, h, settings.linear_rtol
        )
        total_lin += nit

        # active-set update uses the unrelaxed solution and its reactions
        reactions = A @ h_solved
        scale = np.abs(reactions[dir_nodes]).max() if dir_nodes.size else 0.0
        release = np.zeros_like(active)
        release[active] = reactions[candidates[active]] > 1e-12 * scale
        pin = (~active) & (h_solved[candidates] > cand_y + _ACTIVATE_TOL)
        changed = bool(release.any() or pin.any())
        active = (active & ~release) | pin

        h_new = h + settings.relax * (h_solved - h)
        dh = float(np.abs(h_new - h).max())
        h = h_new
        if not settings.saturated:
            pressure_e = (h[elements] - y[elements]).mean(axis=1)
            kr = backend.kr_curve(pressure_e, settings.kr_min, p_trans)

        stable = 0 if changed else stable + 1
        if dh < settings.tol_head and stable >= 2:
            converged = True
            break

        # saturation-front limit cycle: the active set has settled but heads
        # bounce instead of contracting; widen the ramp so it spans more
        # element rows. Reset the window on any active-set change so the
        # normal early transient never triggers this.
        if changed:
            dh_log.clear()
        else:
            dh_log.append(dh)
        if (
            not settings.saturated
            and len(dh_log) >= 8
            and dh > settings.tol_head
            and dh > 0.8 * dh_log[-8]
            and p_trans < p_trans_cap
        ):
            p_trans = min(2.0 * p_trans, p_trans_cap)
            dh_log.clear()

    # reported solve: frozen kr, final active set, no relaxation, so the
    # discrete system holds exactly and reactions balance
    A = system.assemble(kr)
    dir_nodes = np.concatenate([fixed_nodes, candidates[active]])
    dir_values = np.concatenate([fixed_values, cand_y[active]])
    h, nit = system.solve_dirichlet(A, dir_nodes, dir_values, h, settings.linear_rtol)
    total_lin += nit
    reactions = A @ h
    boundary_r = reactions[dir_nodes]
    inflow = float(boundary_r[boundary_r > 0].sum())
    net = float(boundary_r.sum())
    mass_err = abs(net) / inflow if inflow > 0 else 0.0

    return SolveResult(
        mesh=mesh,
        head=h,
        pressure=h - y,
        kr=kr,
        reactions=reactions,
        fixed_nodes=fixed_nodes,
        seepage_nodes=candidates,
        active_seepage=candidates[active],
        outer_iterations=outer,
        linear_iterations=total_lin,
        converged=converged,
        mass_balance_error=mass_err,
        inflow_per_meter=inflow,
        p_transition_used=p_trans,
    )
