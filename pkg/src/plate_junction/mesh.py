"""Structured triangulations of the two rectangular midsurfaces.

Each plate lives in its own chart with the junction on the line x = 0 and the
plate occupying x in (-width_n, 0), y in (y0, y0 + length_t).  A point (0, y)
of the first plate is glued to the point (0, -y) of the second, so the second
plate's y-range must be the mirror of the first.  With counterclockwise edge
tangents this gives t~ = -t at matched points.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import GeometryError

INTERIOR, CLAMPED, FREE, JUNCTION = "Interior", "Clamped", "Free", "Junction"
SIDES = ("junction", "far", "bottom", "top")


@dataclass(frozen=True)
class PlateDescriptor:
    """Rectangle (-width_n, 0) x (y0, y0 + length_t) with a tag per side.

    ``boundary_tags`` maps 'far', 'bottom' and 'top' to Clamped or Free; the
    side x = 0 is always the junction.
    """

    plate_id: str
    length_t: float
    width_n: float
    y0: float
    boundary_tags: dict = field(default_factory=dict)

    def __post_init__(self):
        if not (self.length_t > 0 and self.width_n > 0):
            raise GeometryError("plate extents must be positive")
        tags = dict(self.boundary_tags)
        tags.setdefault("junction", JUNCTION)
        if tags["junction"] != JUNCTION or sum(v == JUNCTION for v in tags.values()) != 1:
            raise GeometryError("exactly the x = 0 side must be tagged Junction")
        for s in ("far", "bottom", "top"):
            if tags.get(s, FREE) not in (CLAMPED, FREE):
                raise GeometryError(f"bad tag for side {s!r}: {tags.get(s)!r}")
            tags.setdefault(s, FREE)
        object.__setattr__(self, "boundary_tags", tags)

    def side_of(self, p, q, tol=1e-12):
        """Side containing segment pq, or None for interior segments."""
        x0, x1 = -self.width_n, 0.0
        y0, y1 = self.y0, self.y0 + self.length_t
        scale = max(self.width_n, self.length_t)
        for name, axis, val in (("junction", 0, x1), ("far", 0, x0), ("bottom", 1, y0), ("top", 1, y1)):
            if abs(p[axis] - val) <= tol * scale and abs(q[axis] - val) <= tol * scale:
                return name
        return None


@dataclass(frozen=True, eq=False)
class PlateMesh:
    descriptor: PlateDescriptor
    vertices: np.ndarray  # (nv, 2)
    triangles: np.ndarray  # (nt, 3), counterclockwise
    edges: np.ndarray  # (ne, 2), stored low -> high vertex index
    edge_tags: tuple
    edge_sides: tuple  # side name or None
    tri_edges: np.ndarray  # (nt, 3) global edge of local edge l = (v_l, v_{l+1})
    tri_edge_sign: np.ndarray  # (nt, 3) +1 if local direction equals stored direction
    edge_owners: np.ndarray  # (ne, 2) owning triangles, -1 if absent
    edge_local: np.ndarray  # (ne, 2) local edge index inside each owner

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_triangles(self):
        return len(self.triangles)

    @property
    def n_edges(self):
        return len(self.edges)

    def coords(self):
        """Triangle vertex coordinates, shape (nt, 3, 2)."""
        return self.vertices[self.triangles]

    def areas(self):
        X = self.coords()
        d1 = X[:, 1] - X[:, 0]
        d2 = X[:, 2] - X[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    def edges_with_tag(self, tag):
        return [e for e, t in enumerate(self.edge_tags) if t == tag]

    def vertices_on_side(self, side):
        return sorted({int(v) for e, s in enumerate(self.edge_sides) if s == side for v in self.edges[e]})


@dataclass(frozen=True)
class JunctionPair:
    edge_s: int
    edge_st: int
    # True when parameter s along the stored direction of edge_s matches 1 - s on edge_st
    reversed: bool


@dataclass(frozen=True, eq=False)
class CoupledMesh:
    plates: tuple  # (PlateMesh for S, PlateMesh for S~)
    junction_pairing: tuple
    level: int
    n_subdiv: int

    @property
    def S(self):
        return self.plates[0]

    @property
    def St(self):
        return self.plates[1]

    @property
    def n_triangles(self):
        return sum(p.n_triangles for p in self.plates)


def _connectivity(desc, vertices, triangles):
    nt = len(triangles)
    local = np.stack([triangles[:, [0, 1]], triangles[:, [1, 2]], triangles[:, [2, 0]]], axis=1)
    key = np.sort(local, axis=-1).reshape(-1, 2)
    edges, inv = np.unique(key, axis=0, return_inverse=True)
    inv = inv.reshape(nt, 3)
    sign = np.where(local[..., 0] < local[..., 1], 1, -1)
    ne = len(edges)
    owners = -np.ones((ne, 2), dtype=int)
    loc = -np.ones((ne, 2), dtype=int)
    for k in range(nt):
        for l in range(3):
            e = inv[k, l]
            slot = 0 if owners[e, 0] < 0 else 1
            if slot == 1 and owners[e, 1] >= 0:
                raise GeometryError("edge shared by more than two triangles")
            owners[e, slot] = k
            loc[e, slot] = l
    sides = []
    tags = []
    for e, (a, b) in enumerate(edges):
        side = desc.side_of(vertices[a], vertices[b])
        if owners[e, 1] >= 0:
            if side is not None:
                raise GeometryError("interior edge lies on the plate boundary")
            sides.append(None)
            tags.append(INTERIOR)
        else:
            if side is None:
                raise GeometryError("boundary edge not on a rectangle side")
            sides.append(side)
            tags.append(desc.boundary_tags[side])
    return PlateMesh(
        descriptor=desc,
        vertices=vertices,
        triangles=triangles,
        edges=edges,
        edge_tags=tuple(tags),
        edge_sides=tuple(sides),
        tri_edges=inv,
        tri_edge_sign=sign,
        edge_owners=owners,
        edge_local=loc,
    )


def grid_plate(desc, nx, ny):
    """Plate mesh of nx x ny cells, each split along the (x0, y1)-(x1, y0) diagonal."""
    xs = np.linspace(-desc.width_n, 0.0, nx + 1)
    ys = np.linspace(desc.y0, desc.y0 + desc.length_t, ny + 1)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    vertices = np.column_stack([X.ravel(), Y.ravel()])

    def vid(i, j):
        return i * (ny + 1) + j

    tris = []
    for i in range(nx):
        for j in range(ny):
            a, b, c, d = vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)
            tris.append((a, b, d))
            tris.append((b, c, d))
    return _connectivity(desc, vertices, np.array(tris, dtype=int))


def _cells(desc, n_subdiv, short):
    nx = max(1, int(np.floor(n_subdiv * desc.width_n / short + 1e-9)))
    ny = max(1, int(np.floor(n_subdiv * desc.length_t / short + 1e-9)))
    return nx, ny


def _pair_junction(S, St):
    js = S.edges_with_tag(JUNCTION)
    jt = St.edges_with_tag(JUNCTION)
    if len(js) != len(jt):
        raise GeometryError("junction edge counts differ between plates")
    scale = S.descriptor.length_t
    mids_t = {}
    for e in jt:
        a, b = St.edges[e]
        key = round(0.5 * (St.vertices[a, 1] + St.vertices[b, 1]) / scale, 9)
        mids_t[key] = e
    pairs = []
    for e in js:
        a, b = S.edges[e]
        ya, yb = S.vertices[a, 1], S.vertices[b, 1]
        key = round(-0.5 * (ya + yb) / scale, 9)
        if key not in mids_t:
            raise GeometryError("junction meshes are not compatible")
        f = mids_t[key]
        c, d = St.edges[f]
        yc, yd = St.vertices[c, 1], St.vertices[d, 1]
        if abs(-ya - yc) <= 1e-12 * scale and abs(-yb - yd) <= 1e-12 * scale:
            rev = False
        elif abs(-ya - yd) <= 1e-12 * scale and abs(-yb - yc) <= 1e-12 * scale:
            rev = True
        else:
            raise GeometryError("junction edge endpoints do not match")
        pairs.append(JunctionPair(int(e), int(f), rev))
    return tuple(sorted(pairs, key=lambda p: p.edge_s))


def build_coupled_mesh(desc_s, desc_st, n_subdiv):
    """Level-1 coupled mesh with n_subdiv cells across the shorter plate side."""
    if n_subdiv < 1:
        raise GeometryError("n_subdiv must be positive")
    if abs(desc_s.length_t - desc_st.length_t) > 1e-12 * desc_s.length_t:
        raise GeometryError("junction sides have different lengths")
    if abs(desc_st.y0 + desc_s.y0 + desc_s.length_t) > 1e-12 * desc_s.length_t:
        raise GeometryError("second plate chart must mirror the junction range (y -> -y)")
    short = min(desc_s.length_t, desc_s.width_n, desc_st.width_n)
    nx, ny = _cells(desc_s, n_subdiv, short)
    nxt, nyt = _cells(desc_st, n_subdiv, short)
    if ny != nyt:
        raise GeometryError("junction subdivisions differ")
    S = grid_plate(desc_s, nx, ny)
    St = grid_plate(desc_st, nxt, nyt)
    return CoupledMesh((S, St), _pair_junction(S, St), 1, n_subdiv)


def _refine_plate(plate):
    nv = plate.n_vertices
    mid = plate.vertices[plate.edges].mean(axis=1)
    vertices = np.vstack([plate.vertices, mid])
    T = plate.triangles
    m = nv + plate.tri_edges  # midpoint of local edge l
    v0, v1, v2 = T[:, 0], T[:, 1], T[:, 2]
    m01, m12, m20 = m[:, 0], m[:, 1], m[:, 2]
    children = np.stack(
        [
            np.column_stack([v0, m01, m20]),
            np.column_stack([m01, v1, m12]),
            np.column_stack([m20, m12, v2]),
            np.column_stack([m01, m12, m20]),
        ],
        axis=1,
    ).reshape(-1, 3)
    return _connectivity(plate.descriptor, vertices, children)


def refine_uniform(mesh):
    """Red refinement of both plates; tags follow the rectangle sides."""
    S = _refine_plate(mesh.S)
    St = _refine_plate(mesh.St)
    return CoupledMesh((S, St), _pair_junction(S, St), mesh.level + 1, mesh.n_subdiv)


def mesh_at_level(desc_s, desc_st, n_subdiv, level):
    mesh = build_coupled_mesh(desc_s, desc_st, n_subdiv)
    for _ in range(level - 1):
        mesh = refine_uniform(mesh)
    return mesh


def edge_frame(plate, edge_id):
    """Outward normal (w.r.t. the first owner) and tangent t = rot(+90) n."""
    if not 0 <= edge_id < plate.n_edges:
        raise GeometryError(f"invalid edge id {edge_id}")
    k = plate.edge_owners[edge_id, 0]
    l = plate.edge_local[edge_id, 0]
    tri = plate.triangles[k]
    p, q = plate.vertices[tri[l]], plate.vertices[tri[(l + 1) % 3]]
    d = (q - p) / np.linalg.norm(q - p)
    n = np.array([d[1], -d[0]])
    t = np.array([-n[1], n[0]])
    return n, t


def dump_text(mesh):
    """Plain-text dump: per plate, 'v x y', 't i j k' and 'e i j TAG' lines."""
    lines = []
    for plate in mesh.plates:
        lines.append(f"plate {plate.descriptor.plate_id}")
        lines += [f"v {x:.17g} {y:.17g}" for x, y in plate.vertices]
        lines += [f"t {i} {j} {k}" for i, j, k in plate.triangles]
        lines += [f"e {i} {j} {tag}" for (i, j), tag in zip(plate.edges, plate.edge_tags)]
    lines += [f"pair {p.edge_s} {p.edge_st} {int(p.reversed)}" for p in mesh.junction_pairing]
    return "\n".join(lines) + "\n"
