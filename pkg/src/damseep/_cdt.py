"""Constrained Delaunay triangulation with quality/size refinement.

Incremental Bowyer-Watson insertion, Sloan-style constraint recovery by edge
flips, and a round-based Ruppert refinement that splits bad triangles at
their circumcenters and constrained segments at midpoints (concentric-shell
positions near acute input corners).

Everything is deterministic: input points are inserted in the order given,
and each refinement round processes bad triangles in index order.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import MeshingError


def _orient(pa, pb, pc):
    """Twice the signed area of (pa, pb, pc); >0 means CCW."""
    return (pb[0] - pa[0]) * (pc[1] - pa[1]) - (pb[1] - pa[1]) * (pc[0] - pa[0])


def _orient_eps(pa, pb, pc):
    scale = (
        abs(pb[0] - pa[0]) + abs(pb[1] - pa[1]) + abs(pc[0] - pa[0]) + abs(pc[1] - pa[1])
    )
    return 1e-13 * scale * scale if scale > 0 else 1e-300


def _incircle(pa, pb, pc, pd):
    """>0 when pd is strictly inside the circumcircle of CCW (pa, pb, pc)."""
    adx = pa[0] - pd[0]
    ady = pa[1] - pd[1]
    bdx = pb[0] - pd[0]
    bdy = pb[1] - pd[1]
    cdx = pc[0] - pd[0]
    cdy = pc[1] - pd[1]
    ad = adx * adx + ady * ady
    bd = bdx * bdx + bdy * bdy
    cd = cdx * cdx + cdy * cdy
    det = (
        adx * (bdy * cd - bd * cdy)
        - ady * (bdx * cd - bd * cdx)
        + ad * (bdx * cdy - bdy * cdx)
    )
    scale = max(ad, bd, cd)
    return det, 1e-12 * scale * scale


def _edge_key(a, b):
    return (a, b) if a < b else (b, a)


class OnConstraintError(Exception):
    """A point to insert landed exactly on a constrained edge."""

    def __init__(self, u, v):
        super().__init__(f"point on constrained edge {u}-{v}")
        self.edge = (u, v)


class EncroachedError(Exception):
    """A point to insert lies in the diametral circle of a constrained edge.

    Inserting such points starts runaway refinement along the edge; the
    caller must split the edge instead.
    """

    def __init__(self, u, v):
        super().__init__(f"point encroaches constrained edge {u}-{v}")
        self.edge = (u, v)


class Triangulation:
    """Mutable triangulation state. Vertices 0..2 are the super-triangle."""

    def __init__(self, points):
        pts = np.asarray(points, dtype=float)
        lo = pts.min(axis=0)
        hi = pts.max(axis=0)
        c = 0.5 * (lo + hi)
        span = max(hi[0] - lo[0], hi[1] - lo[1], 1.0)
        # asymmetric offsets dodge exact degeneracies with gridded input
        s0 = (c[0] - 3.17 * span, c[1] - 2.71 * span)
        s1 = (c[0] + 3.29 * span, c[1] - 2.69 * span)
        s2 = (c[0] + 0.013 * span, c[1] + 3.57 * span)
        self.points = [s0, s1, s2]
        self.tris = [(0, 1, 2)]
        self.neigh = [[-1, -1, -1]]
        self.alive = [True]
        self.v2t = [0, 0, 0]  # some live triangle touching each vertex
        self.constrained = set()
        self._last = 0
        for p in pts:
            self.insert_point((float(p[0]), float(p[1])))

    # ---------------------------------------------------------- basics ----

    def _tri_pts(self, t):
        a, b, c = self.tris[t]
        return self.points[a], self.points[b], self.points[c]

    def edge_is_constrained(self, a, b):
        return _edge_key(a, b) in self.constrained

    def locate(self, p):
        """Walk to a live triangle containing p (super-triangle contains all)."""
        t = self._last
        if not self.alive[t]:
            t = next(i for i in range(len(self.tris)) if self.alive[i])
        seen = 0
        limit = 4 * len(self.tris) + 64
        while True:
            seen += 1
            if seen > limit:  # fp cycling; brute-force rescue
                for i in range(len(self.tris)):
                    if self.alive[i] and self._contains(i, p):
                        self._last = i
                        return i
                raise MeshingError("point location failed")
            a, b, c = self.tris[t]
            moved = False
            for e, (u, v) in enumerate(((b, c), (c, a), (a, b))):
                o = _orient(self.points[u], self.points[v], p)
                if o < -_orient_eps(self.points[u], self.points[v], p):
                    nt = self.neigh[t][e]
                    if nt >= 0:
                        t = nt
                        moved = True
                        break
            if not moved:
                self._last = t
                return t

    def _contains(self, t, p):
        a, b, c = self.tris[t]
        pa, pb, pc = self.points[a], self.points[b], self.points[c]
        for u, v in ((pa, pb), (pb, pc), (pc, pa)):
            if _orient(u, v, p) < -_orient_eps(u, v, p):
                return False
        return True

    def _neighbor_index(self, t, nt):
        for e in range(3):
            if self.neigh[t][e] == nt:
                return e
        raise MeshingError("broken adjacency")

    def _duplicate_at(self, t, p, tol=1e-9):
        for v in self.tris[t]:
            q = self.points[v]
            if abs(q[0] - p[0]) <= tol and abs(q[1] - p[1]) <= tol:
                return v
        return None

    # -------------------------------------------------------- insertion ----

    def insert_point(self, p, allow_cross=None, reject_encroached=False):
        """Insert p, return its vertex id (existing id if p duplicates one).

        `allow_cross` names one constrained edge (a, b) the cavity may eat:
        used when splitting that segment with a point on it. With
        `reject_encroached`, raise EncroachedError instead of inserting a
        point that lies in the diametral circle of a constrained edge of
        the insertion cavity (Ruppert's rule).
        """
        t0 = self.locate(p)
        dup = self._duplicate_at(t0, p)
        if dup is not None:
            return dup

        cavity = {t0}
        stack = [t0]
        while stack:
            t = stack.pop()
            for e in range(3):
                nt = self.neigh[t][e]
                if nt < 0 or nt in cavity or not self.alive[nt]:
                    continue
                a, b, c = self.tris[t]
                u, v = ((b, c), (c, a), (a, b))[e]
                key = _edge_key(u, v)
                if key in self.constrained and key != allow_cross:
                    continue
                pa, pb, pc = self._tri_pts(nt)
                det, eps = _incircle(pa, pb, pc, p)
                if det > eps:
                    cavity.add(nt)
                    stack.append(nt)

        # absorb neighbors across cavity-boundary edges collinear with p,
        # otherwise the fan would create a zero-area triangle
        changed = True
        while changed:
            changed = False
            for t in list(cavity):
                for e in range(3):
                    nt = self.neigh[t][e]
                    if nt < 0 or nt in cavity or not self.alive[nt]:
                        continue
                    a, b, c = self.tris[t]
                    u, v = ((b, c), (c, a), (a, b))[e]
                    pu, pv = self.points[u], self.points[v]
                    if abs(_orient(pu, pv, p)) <= _orient_eps(pu, pv, p):
                        key = _edge_key(u, v)
                        if key in self.constrained and key != allow_cross:
                            raise OnConstraintError(u, v)
                        cavity.add(nt)
                        changed = True
        if reject_encroached:
            for t in cavity:
                a, b, c = self.tris[t]
                for u, v in ((a, b), (b, c), (c, a)):
                    key = _edge_key(u, v)
                    if key in self.constrained and key != allow_cross:
                        pu, pv = self.points[u], self.points[v]
                        dot = (pu[0] - p[0]) * (pv[0] - p[0]) + (pu[1] - p[1]) * (
                            pv[1] - p[1]
                        )
                        if dot < 0:  # p inside the diametral circle
                            raise EncroachedError(u, v)
        # directed boundary edges (u, v) with the outer triangle
        border = []
        for t in cavity:
            a, b, c = self.tris[t]
            for e, (u, v) in enumerate(((b, c), (c, a), (a, b))):
                nt = self.neigh[t][e]
                if nt in cavity:
                    continue
                border.append((u, v, nt))
        self.points.append(p)
        pid = len(self.points) - 1
        start = {}
        created = []
        for u, v, outer in border:
            nt = self._new_tri((u, v, pid))
            self.neigh[nt][2] = outer  # edge (u, v) is opposite pid (local 2)
            if outer >= 0:
                na, nb, nc = self.tris[outer]
                key = _edge_key(u, v)
                for e2, (u2, v2) in enumerate(((nb, nc), (nc, na), (na, nb))):
                    if _edge_key(u2, v2) == key:
                        self.neigh[outer][e2] = nt
                        break
            start[u] = nt
            created.append((nt, u, v))
        for nt, u, v in created:
            nxt = start[v]
            self.neigh[nt][0] = nxt  # edge (v, pid) opposite u
            self.neigh[nxt][1] = nt  # edge (pid, u') opposite v'
        for t in cavity:
            self.alive[t] = False
        self.v2t.append(created[0][0])
        for nt, u, v in created:
            self.v2t[u] = nt
            self.v2t[v] = nt
        self._last = created[0][0]
        return pid

    def _new_tri(self, verts):
        self.tris.append(tuple(verts))
        self.neigh.append([-1, -1, -1])
        self.alive.append(True)
        return len(self.tris) - 1

    # ----------------------------------------------------- constraints ----

    def edge_triangles(self, a, b):
        """(t_left, t_right) of directed edge a->b, or None if absent."""
        for t in self._around(a):
            va, vb, vc = self.tris[t]
            trio = (va, vb, vc, va, vb)
            for i in range(3):
                if trio[i] == a and trio[i + 1] == b:
                    e = (i + 2) % 3  # local index opposite the edge
                    return t, self.neigh[t][e]
        return None

    def _around(self, v):
        """All live triangles incident to vertex v."""
        t0 = self.v2t[v]
        if not self.alive[t0] or v not in self.tris[t0]:
            t0 = next(
                i for i in range(len(self.tris)) if self.alive[i] and v in self.tris[i]
            )
            self.v2t[v] = t0
        out = [t0]
        seen = {t0}
        stack = [t0]
        while stack:
            t = stack.pop()
            for e in range(3):
                nt = self.neigh[t][e]
                if nt >= 0 and nt not in seen and self.alive[nt] and v in self.tris[nt]:
                    seen.add(nt)
                    out.append(nt)
                    stack.append(nt)
        return out

    def recover_segment(self, a, b):
        """Flip edges until (a, b) is an edge, then mark it constrained."""
        if a == b:
            return
        if self.edge_triangles(a, b) or self.edge_triangles(b, a):
            self.constrained.add(_edge_key(a, b))
            return
        pa, pb = self.points[a], self.points[b]
        crossing = self._collect_crossings(a, b)
        guard = 0
        while crossing:
            guard += 1
            if guard > 100 * (len(crossing) + 10):
                raise MeshingError(f"cannot recover constraint {a}-{b}")
            u, v = crossing.pop(0)
            found = self.edge_triangles(u, v) or self.edge_triangles(v, u)
            if not found:
                continue
            t1, t2 = found
            if t2 < 0:
                raise MeshingError("constraint crosses the triangulation border")
            if not self._flippable(t1, t2):
                crossing.append((u, v))
                continue
            nu, nv = self._flip(t1, t2)
            if _segments_cross(self.points[nu], self.points[nv], pa, pb):
                crossing.append((nu, nv))
        if not (self.edge_triangles(a, b) or self.edge_triangles(b, a)):
            raise MeshingError(f"failed to recover constraint edge {a}-{b}")
        self.constrained.add(_edge_key(a, b))

    def _collect_crossings(self, a, b):
        pa, pb = self.points[a], self.points[b]
        out = []
        for t in self._around(a):
            verts = self.tris[t]
            i = verts.index(a)
            u, v = verts[(i + 1) % 3], verts[(i + 2) % 3]
            if _segments_cross(self.points[u], self.points[v], pa, pb):
                out.append((u, v))
                # march across triangles toward b
                cur = self.neigh[t][i]
                prev_edge = (u, v)
                while cur >= 0:
                    verts = self.tris[cur]
                    if b in verts:
                        break
                    w = next(x for x in verts if x not in prev_edge)
                    e1 = (prev_edge[0], w)
                    e2 = (w, prev_edge[1])
                    nxt = None
                    for u2, v2 in (e1, e2):
                        if _segments_cross(self.points[u2], self.points[v2], pa, pb):
                            out.append((u2, v2))
                            found = self.edge_triangles(u2, v2) or self.edge_triangles(v2, u2)
                            side = [x for x in found if x is not None and x != cur]
                            nxt = side[0] if side else -1
                            prev_edge = (u2, v2)
                            break
                    if nxt is None:
                        break
                    cur = nxt
                break
        for u, v in out:
            if _edge_key(u, v) in self.constrained:
                raise MeshingError("input constraints cross each other")
        return out

    def _flippable(self, t1, t2):
        a, b, c = self.tris[t1]
        e = self._neighbor_index(t1, t2)
        shared = ((b, c), (c, a), (a, b))[e]
        apex1 = self.tris[t1][e]
        apex2 = next(v for v in self.tris[t2] if v not in shared)
        # flip is valid only for a strictly convex quad
        q = [apex1, shared[0], apex2, shared[1]]
        pts = [self.points[v] for v in q]
        for i in range(4):
            o = _orient(pts[i], pts[(i + 1) % 4], pts[(i + 2) % 4])
            if o <= _orient_eps(pts[i], pts[(i + 1) % 4], pts[(i + 2) % 4]):
                return False
        return True

    def _flip(self, t1, t2):
        """Replace shared edge of (t1, t2) by the cross diagonal."""
        e1 = self._neighbor_index(t1, t2)
        e2 = self._neighbor_index(t2, t1)
        a = self.tris[t1][e1]  # apex of t1
        b = self.tris[t2][e2]  # apex of t2
        t1v = self.tris[t1]
        u = t1v[(e1 + 1) % 3]
        v = t1v[(e1 + 2) % 3]
        # outer neighbors
        n_t1_u = self.neigh[t1][(e1 + 2) % 3]  # across edge (a, u)... careful below
        n_t1_v = self.neigh[t1][(e1 + 1) % 3]
        e2u = self.tris[t2].index(u)
        e2v = self.tris[t2].index(v)
        n_t2_u = self.neigh[t2][e2v]  # across edge (b, u): opposite v
        n_t2_v = self.neigh[t2][e2u]  # across edge (b, v): opposite u
        # rebuild: t1 = (a, u, b), t2 = (a, b, v)
        self.tris[t1] = (a, u, b)
        self.tris[t2] = (a, b, v)
        self.neigh[t1] = [n_t2_u, t2, n_t1_u]
        self.neigh[t2] = [n_t2_v, n_t1_v, t1]
        self._fix_backpointers(t1)
        self._fix_backpointers(t2)
        for vv, tt in ((a, t1), (u, t1), (b, t1), (v, t2)):
            self.v2t[vv] = tt
        return a, b

    def _fix_backpointers(self, t):
        a, b, c = self.tris[t]
        for e, (u, v) in enumerate(((b, c), (c, a), (a, b))):
            nt = self.neigh[t][e]
            if nt < 0 or not self.alive[nt]:
                continue
            na, nb, nc = self.tris[nt]
            for e2, (u2, v2) in enumerate(((nb, nc), (nc, na), (na, nb))):
                if _edge_key(u2, v2) == _edge_key(u, v):
                    self.neigh[nt][e2] = t
                    break

    def split_constrained_edge(self, a, b, point):
        """Insert `point` on constrained edge (a, b), re-constraining halves."""
        key = _edge_key(a, b)
        if key not in self.constrained:
            raise MeshingError("edge to split is not constrained")
        self.constrained.discard(key)
        try:
            pid = self.insert_point(point, allow_cross=key)
        except OnConstraintError:
            self.constrained.add(key)
            raise
        if pid in (a, b):  # degenerate split (point at an endpoint)
            self.constrained.add(key)
            return None
        self.constrained.add(_edge_key(a, pid))
        self.constrained.add(_edge_key(pid, b))
        return pid

    # --------------------------------------------------- classification ----

    def inside_mask(self):
        """Bool per triangle: live and inside the constrained hull."""
        n = len(self.tris)
        outside = np.zeros(n, dtype=bool)
        stack = []
        for t in range(n):
            if self.alive[t] and any(v < 3 for v in self.tris[t]):
                outside[t] = True
                stack.append(t)
        while stack:
            t = stack.pop()
            a, b, c = self.tris[t]
            for e, (u, v) in enumerate(((b, c), (c, a), (a, b))):
                nt = self.neigh[t][e]
                if nt < 0 or outside[nt] or not self.alive[nt]:
                    continue
                if _edge_key(u, v) in self.constrained:
                    continue
                outside[nt] = True
                stack.append(nt)
        inside = np.array(self.alive, dtype=bool) & ~outside
        return inside


def _segments_cross(p1, p2, q1, q2):
    """Proper intersection of open segments (shared endpoints don't count)."""
    d1 = _orient(q1, q2, p1)
    d2 = _orient(q1, q2, p2)
    d3 = _orient(p1, p2, q1)
    d4 = _orient(p1, p2, q2)
    eps_q = _orient_eps(q1, q2, p1)
    eps_p = _orient_eps(p1, p2, q1)
    return (
        ((d1 > eps_q and d2 < -eps_q) or (d1 < -eps_q and d2 > eps_q))
        and ((d3 > eps_p and d4 < -eps_p) or (d3 < -eps_p and d4 > eps_p))
    )


# ---------------------------------------------------------------------------
# Refinement driver
# ---------------------------------------------------------------------------


def refine(
    tri: Triangulation,
    size_at,
    quality_angle: float = 20.0,
    size_factor: float = 1.5,
    max_rounds: int = 100,
    zone_of=None,
):
    """Split bad triangles / encroached segments until quality and size hold.

    size_at(xs, ys) -> local target edge length per point (vectorized).
    zone_of(xs, ys) -> zone name per point, used only for error messages.
    Raises MeshingError when no progress can be made while bad triangles
    remain (a zone thinner than the achievable resolution).
    """
    min_sin = math.sin(math.radians(quality_angle))
    acute = _acute_input_vertices(tri)
    stall_rounds = 0
    for round_no in range(max_rounds):
        bad = _bad_triangles(tri, size_at, min_sin, size_factor)
        if not bad:
            return
        progress = 0
        for t in bad:
            if not tri.alive[t]:
                continue  # already changed this round
            progress += _treat_bad_triangle(tri, t, acute)
        if progress == 0:
            stall_rounds += 1
            if stall_rounds >= 2:
                break
        else:
            stall_rounds = 0
    bad = _bad_triangles(tri, size_at, min_sin, size_factor)
    if bad:
        t = bad[0]
        cx, cy = _centroid(tri, t)
        where = ""
        if zone_of is not None:
            name = zone_of(np.array([cx]), np.array([cy]))[0]
            where = f" in zone {name!r}"
        raise MeshingError(
            f"refinement stalled with {len(bad)} unsatisfiable triangles"
            f"{where} (first near x={cx:.3f}, y={cy:.3f}); "
            "zone may be thinner than the achievable resolution"
        )


def _centroid(tri, t):
    a, b, c = (tri.points[v] for v in tri.tris[t])
    return (a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0


def _bad_triangles(tri, size_at, min_sin, size_factor):
    inside = tri.inside_mask()
    idx = np.nonzero(inside)[0]
    if idx.size == 0:
        return []
    verts = np.array([tri.tris[t] for t in idx], dtype=np.int64)
    pts = np.array(tri.points, dtype=float)
    p0, p1, p2 = pts[verts[:, 0]], pts[verts[:, 1]], pts[verts[:, 2]]
    e0 = np.linalg.norm(p2 - p1, axis=1)
    e1 = np.linalg.norm(p0 - p2, axis=1)
    e2 = np.linalg.norm(p1 - p0, axis=1)
    lengths = np.stack([e0, e1, e2], axis=1)
    longest = lengths.max(axis=1)
    area2 = np.abs(
        (p1[:, 0] - p0[:, 0]) * (p2[:, 1] - p0[:, 1])
        - (p1[:, 1] - p0[:, 1]) * (p2[:, 0] - p0[:, 0])
    )
    # sin of the smallest angle = area2 / product of its adjacent edges
    prods = np.stack([e1 * e2, e2 * e0, e0 * e1], axis=1)
    sin_min = (area2[:, None] / np.maximum(prods, 1e-300)).min(axis=1)
    cx = (p0[:, 0] + p1[:, 0] + p2[:, 0]) / 3.0
    cy = (p0[:, 1] + p1[:, 1] + p2[:, 1]) / 3.0
    h = np.asarray(size_at(cx, cy), dtype=float)
    bad = (longest > size_factor * h) | (sin_min < min_sin)
    return [int(t) for t in idx[bad]]


def _acute_input_vertices(tri):
    """Vertices where constrained segments meet at < 60 degrees."""
    from collections import defaultdict

    incident = defaultdict(list)
    for a, b in tri.constrained:
        incident[a].append(b)
        incident[b].append(a)
    acute = set()
    for v, others in incident.items():
        pv = tri.points[v]
        for i in range(len(others)):
            for j in range(i + 1, len(others)):
                u1 = np.subtract(tri.points[others[i]], pv)
                u2 = np.subtract(tri.points[others[j]], pv)
                n1 = np.hypot(*u1)
                n2 = np.hypot(*u2)
                if n1 == 0 or n2 == 0:
                    continue
                cosang = float(np.dot(u1, u2) / (n1 * n2))
                if cosang > 0.5:  # angle < 60 degrees
                    acute.add(v)
                    break
    return acute


def _treat_bad_triangle(tri, t, acute):
    """Insert the circumcenter, or split the constrained edge in the way."""
    a, b, c = tri.tris[t]
    pa, pb, pc = tri.points[a], tri.points[b], tri.points[c]
    cc = _circumcenter(pa, pb, pc)
    if cc is None:
        return 0
    # walk from t toward cc; a constrained edge blocking the way gets split
    blocked = _walk_to(tri, t, cc)
    if blocked is not None:
        u, v = blocked
        return _split_with_shells(tri, u, v, acute)
    target = tri.locate(cc)
    if tri._duplicate_at(target, cc, tol=1e-7) is not None:
        return 0
    if any(v < 3 for v in tri.tris[target]):
        # escaped into the super-triangle region without hitting a
        # constraint (fp-degenerate border); split a constrained edge of t
        for u, v in ((a, b), (b, c), (c, a)):
            if tri.edge_is_constrained(u, v):
                return _split_with_shells(tri, u, v, acute)
        return 0
    try:
        tri.insert_point(cc, reject_encroached=True)
    except (OnConstraintError, EncroachedError) as exc:
        return _split_with_shells(tri, exc.edge[0], exc.edge[1], acute)
    return 1


def _walk_to(tri, t, target):
    """Walk toward target; return the first constrained edge crossed, else None."""
    cur = t
    guard = 0
    while True:
        guard += 1
        if guard > 4 * len(tri.tris) + 64:
            return None
        if tri._contains(cur, target):
            return None
        a, b, c = tri.tris[cur]
        moved = False
        for e, (u, v) in enumerate(((b, c), (c, a), (a, b))):
            pu, pv = tri.points[u], tri.points[v]
            if _orient(pu, pv, target) < -_orient_eps(pu, pv, target):
                if _edge_key(u, v) in tri.constrained:
                    return (u, v)
                nt = tri.neigh[cur][e]
                if nt < 0:
                    return None
                cur = nt
                moved = True
                break
        if not moved:
            return None


def _split_with_shells(tri, u, v, acute):
    """Split constrained edge (u, v); concentric shells off acute corners."""
    pu, pv = tri.points[u], tri.points[v]
    length = math.dist(pu, pv)
    if length < 1e-9:
        return 0
    frac = 0.5
    if u in acute or v in acute:
        if v in acute and u not in acute:
            u, v = v, u
            pu, pv = pv, pu
        # distance from the acute endpoint rounded to a power of two
        d = 2.0 ** round(math.log2(max(length / 2.0, 1e-12)))
        d = min(max(d, 0.25 * length), 0.75 * length)
        frac = d / length
    point = (pu[0] + frac * (pv[0] - pu[0]), pu[1] + frac * (pv[1] - pu[1]))
    try:
        return 1 if tri.split_constrained_edge(u, v, point) is not None else 0
    except OnConstraintError:
        return 0  # split point grazed another constraint; give up this round


def _circumcenter(pa, pb, pc):
    ax, ay = pa
    bx, by = pb
    cx, cy = pc
    d = 2.0 * (ax * (by - cy) + bx * (cy - ay) + cx * (ay - by))
    if abs(d) < 1e-14 * (abs(ax) + abs(bx) + abs(cx) + 1.0) ** 2:
        return None
    ux = (
        (ax * ax + ay * ay) * (by - cy)
        + (bx * bx + by * by) * (cy - ay)
        + (cx * cx + cy * cy) * (ay - by)
    ) / d
    uy = (
        (ax * ax + ay * ay) * (cx - bx)
        + (bx * bx + by * by) * (ax - cx)
        + (cx * cx + cy * cy) * (bx - ax)
    ) / d
    return (ux, uy)


def triangulate_pslg(
    points,
    segments,
    size_at,
    quality_angle: float = 20.0,
    max_rounds: int = 100,
    zone_of=None,
):
    """Conforming constrained Delaunay mesh of a PSLG.

    Returns (nodes (n,2) float array, triangles (m,3) int array, constrained
    edge set as pairs of node indices). Only triangles inside the constrained
    hull are returned; node indices are compacted.
    """
    points = np.asarray(points, dtype=float)
    if len(points) < 3:
        raise MeshingError("PSLG needs at least 3 points")
    tri = Triangulation(points)
    # input point i is vertex i + 3 (after the super-triangle)
    for a, b in segments:
        tri.recover_segment(a + 3, b + 3)
    refine(tri, size_at, quality_angle=quality_angle, max_rounds=max_rounds, zone_of=zone_of)

    inside = tri.inside_mask()
    keep = [t for t in range(len(tri.tris)) if inside[t]]
    used = sorted({v for t in keep for v in tri.tris[t]})
    if any(v < 3 for v in used):
        raise MeshingError("super-triangle leaked into the interior")
    remap = {v: i for i, v in enumerate(used)}
    nodes = np.array([tri.points[v] for v in used], dtype=float)
    elements = np.array(
        [[remap[v] for v in tri.tris[t]] for t in keep], dtype=np.int64
    )
    constrained = {
        (remap[a], remap[b])
        for a, b in tri.constrained
        if a in remap and b in remap
    }
    return nodes, elements, constrained
