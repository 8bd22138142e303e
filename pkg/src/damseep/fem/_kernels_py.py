"""Reference kernels: vectorized numpy with a scipy-preconditioned CG.

The compiled backend mirrors this module's public functions; either one can
serve every solve. Keep signatures in sync.
"""

from __future__ import annotations

import numpy as np
from scipy.sparse import csc_matrix
from scipy.sparse.linalg import spilu

from ..errors import SolverError

NAME = "python"


def element_geometry(nodes: np.ndarray, elements: np.ndarray):
    """Shape-function constants per triangle.

    Returns (b, c, area): gradients of the linear shape functions are
    grad N_i = (b_i, c_i) / (2 area). Raises on degenerate elements.
    """
    p0 = nodes[elements[:, 0]]
    p1 = nodes[elements[:, 1]]
    p2 = nodes[elements[:, 2]]
    b = np.stack(
        [p1[:, 1] - p2[:, 1], p2[:, 1] - p0[:, 1], p0[:, 1] - p1[:, 1]], axis=1
    )
    c = np.stack(
        [p2[:, 0] - p1[:, 0], p0[:, 0] - p2[:, 0], p1[:, 0] - p0[:, 0]], axis=1
    )
    area = 0.5 * (b[:, 0] * c[:, 1] - b[:, 1] * c[:, 0])
    if (area <= 0).any():
        raise SolverError("degenerate or inverted element in mesh")
    return b, c, area


def unit_stiffness(nodes: np.ndarray, elements: np.ndarray) -> np.ndarray:
    """Per-element stiffness for unit conductivity, shape (m, 3, 3)."""
    b, c, area = element_geometry(nodes, elements)
    outer = b[:, :, None] * b[:, None, :] + c[:, :, None] * c[:, None, :]
    return outer / (4.0 * area)[:, None, None]


def stiffness_data(unit_ke: np.ndarray, coef: np.ndarray) -> np.ndarray:
    """Scale unit element matrices by per-element conductivity, flat (m*9,)."""
    return (unit_ke * coef[:, None, None]).ravel()


def kr_curve(pressure: np.ndarray, kr_min: float, p_transition: float) -> np.ndarray:
    """Relative permeability vs pressure head.

    1 when saturated (p >= 0), kr_min below p = -p_transition, and a quintic
    smoothstep in between.  The curve is C2 everywhere; a slope break at the
    water table feeds a period-two limit cycle in the outer iteration, so the
    blend has to come in tangentially from both ends.
    """
    s = np.clip((pressure + p_transition) / p_transition, 0.0, 1.0)
    # the quintic can overshoot 1.0 by one ulp just below saturation
    smooth = np.minimum(s * s * s * (s * (6.0 * s - 15.0) + 10.0), 1.0)
    return kr_min + (1.0 - kr_min) * smooth


def head_gradients(
    nodes: np.ndarray, elements: np.ndarray, head: np.ndarray
) -> np.ndarray:
    """Per-element gradient of the nodal field, shape (m, 2)."""
    b, c, area = element_geometry(nodes, elements)
    hv = head[elements]
    gx = (b * hv).sum(axis=1) / (2.0 * area)
    gy = (c * hv).sum(axis=1) / (2.0 * area)
    return np.stack([gx, gy], axis=1)


def linear_solve(A, rhs, x0=None, rtol=1e-10, maxiter=None):
    """Conjugate gradients on an SPD sparse matrix with an ILU preconditioner.

    Returns (x, iterations). The tolerance is on ||r|| / ||rhs||.
    """
    n = len(rhs)
    if maxiter is None:
        maxiter = max(10 * n, 200)
    norm_b = float(np.linalg.norm(rhs))
    if norm_b == 0.0:
        return np.zeros(n), 0
    try:
        ilu = spilu(csc_matrix(A), drop_tol=1e-8, fill_factor=20.0)
    except RuntimeError as exc:  # singular factor
        raise SolverError(f"preconditioner failed: {exc}") from exc
    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    r = rhs - A @ x
    if np.linalg.norm(r) <= rtol * norm_b:
        return x, 0
    z = ilu.solve(r)
    p = z.copy()
    rz = float(r @ z)
    for it in range(1, maxiter + 1):
        Ap = A @ p
        pAp = float(p @ Ap)
        if pAp <= 0.0:
            raise SolverError("matrix lost positive definiteness")
        alpha = rz / pAp
        x += alpha * p
        r -= alpha * Ap
        if np.linalg.norm(r) <= rtol * norm_b:
            return x, it
        z = ilu.solve(r)
        rz_new = float(r @ z)
        p = z + (rz_new / rz) * p
        rz = rz_new
    raise SolverError(f"linear solver stalled after {maxiter} iterations")
