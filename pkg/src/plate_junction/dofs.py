"""Global numbering of element DOFs on one plate mesh.

Vertex tensor values are shared by all triangles around a vertex and edge
functionals by the two triangles of an edge.  Edge DOFs are numbered along
the stored edge direction (low to high vertex index); since the edge points
are symmetric, a triangle that traverses the edge backwards sees the same
points in reverse order.  Shear DOFs change sign with the edge orientation,
normal-normal and normal-tangential values do not.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ElementConstructionError

ODD_KINDS = ("edge_T",)


@dataclass(frozen=True, eq=False)
class GlobalDofMap:
    element: object
    local_to_global: np.ndarray  # (nt, nb)
    sign: np.ndarray  # (nt, nb)
    n_global: int
    vertex_base: int
    edge_base: int
    interior_base: int
    per_edge: int
    per_interior: int
    edge_kinds: tuple  # ((kind, n_points), ...) in per-edge order
    classification: np.ndarray  # (n_global,) 0 vertex, 1 edge, 2 interior/local

    def vertex_dof(self, v, comp):
        return self.vertex_base + 3 * v + comp

    def edge_dof(self, e, kind, i):
        """Global DOF of point i (counted along the stored edge direction)."""
        off = 0
        for k, m in self.edge_kinds:
            if k == kind:
                if not 0 <= i < m:
                    raise IndexError(i)
                return self.edge_base + e * self.per_edge + off + i
            off += m
        raise KeyError(kind)

    def interior_dof(self, tri, r):
        return self.interior_base + tri * self.per_interior + r


def build_global_dofs(plate, element):
    """Global DOF map of ``element`` on a PlateMesh."""
    nt = plate.n_triangles
    nb = element.n_dofs
    dofs = element.dofs
    kinds = []
    for d in dofs:
        if d.kind.startswith("edge_") and d.entity == 0:
            if d.kind not in [k for k, _ in kinds]:
                kinds.append((d.kind, sum(1 for q in dofs if q.kind == d.kind and q.entity == 0)))
    per_edge = sum(m for _, m in kinds)
    n_vertex_dofs = sum(1 for d in dofs if d.kind == "vertex")
    local_only = [i for i, d in enumerate(dofs) if d.kind in ("interior", "node")]
    per_interior = len(local_only)

    vertex_base = 0
    nvd = 3 * plate.n_vertices if n_vertex_dofs else 0
    edge_base = nvd
    interior_base = edge_base + per_edge * plate.n_edges
    n_global = interior_base + per_interior * nt

    l2g = np.empty((nt, nb), dtype=np.int64)
    sign = np.ones((nt, nb))
    kind_off = {}
    off = 0
    for k, m in kinds:
        kind_off[k] = (off, m)
        off += m
    r = 0
    for i, d in enumerate(dofs):
        if d.kind == "vertex":
            l2g[:, i] = vertex_base + 3 * plate.triangles[:, d.entity] + d.index
        elif d.kind.startswith("edge_"):
            o, m = kind_off[d.kind]
            e = plate.tri_edges[:, d.entity]
            fwd = plate.tri_edge_sign[:, d.entity] > 0
            ig = np.where(fwd, d.index, m - 1 - d.index)
            l2g[:, i] = edge_base + e * per_edge + o + ig
            if d.kind in ODD_KINDS:
                sign[:, i] = np.where(fwd, 1.0, -1.0)
        elif d.kind in ("interior", "node"):
            l2g[:, i] = interior_base + np.arange(nt) * per_interior + r
            r += 1
        else:
            raise ElementConstructionError(f"unknown DOF kind {d.kind!r}")

    cls = np.full(n_global, 2, dtype=np.int8)
    cls[:edge_base] = 0
    cls[edge_base:interior_base] = 1
    counts = np.bincount(l2g.ravel(), minlength=n_global)
    if counts.min() == 0:
        raise ElementConstructionError("unused global DOF (orientation conflict)")
    return GlobalDofMap(
        element=element,
        local_to_global=l2g,
        sign=sign,
        n_global=n_global,
        vertex_base=vertex_base,
        edge_base=edge_base,
        interior_base=interior_base,
        per_edge=per_edge,
        per_interior=per_interior,
        edge_kinds=tuple(kinds),
        classification=cls,
    )


def shape_groups(X, decimals=12):
    """Group triangles that are translates of each other.

    Returns ``(shape_id, representatives)`` where representatives[k] is the
    index of one triangle of shape k.
    """
    J = np.stack([X[:, 1] - X[:, 0], X[:, 2] - X[:, 0]], axis=1).reshape(len(X), -1)
    scale = np.abs(J).max()
    key = np.round(J / scale, decimals)
    _, first, inv = np.unique(key, axis=0, return_index=True, return_inverse=True)
    return inv.ravel(), first


class PlateSpaces:
    """Element maps and nodal coefficients for the four spaces on one plate."""

    def __init__(self, plate):
        from .elements import ch_element, dg_scalar_p2, dg_vector_p2, hz_element

        self.plate = plate
        self.X = plate.coords()
        self.shape_id, reps = shape_groups(self.X)
        self.elements = {"N": hz_element(), "M": ch_element(), "u": dg_vector_p2(), "u3": dg_scalar_p2()}
        self.maps = {k: build_global_dofs(plate, el) for k, el in self.elements.items()}
        Xr = self.X[reps]
        # nodal coefficients depend only on the Jacobian
        Xr = Xr - Xr[:, :1]
        self.shape_X = Xr
        self.coeffs = {k: el.nodal_coefficients(Xr) for k, el in self.elements.items()}

    @property
    def n_shapes(self):
        return len(self.shape_X)

    def element_coeffs(self, key, tris):
        return self.coeffs[key][self.shape_id[tris]]


class CoupledSpaces:
    """Both plates with the global layout Sigma = [N, M, N~, M~], V = [u, u3, u~, u3~]."""

    SIGMA_KEYS = ("N", "M")
    V_KEYS = ("u", "u3")

    def __init__(self, mesh):
        self.mesh = mesh
        self.plates = [PlateSpaces(p) for p in mesh.plates]
        self.sigma_offsets = {}
        self.v_offsets = {}
        off = 0
        for i, ps in enumerate(self.plates):
            for k in self.SIGMA_KEYS:
                self.sigma_offsets[(i, k)] = off
                off += ps.maps[k].n_global
        self.n_sigma = off
        off = 0
        for i, ps in enumerate(self.plates):
            for k in self.V_KEYS:
                self.v_offsets[(i, k)] = off
                off += ps.maps[k].n_global
        self.n_v = off

    def sigma_index(self, plate, key, local):
        return self.sigma_offsets[(plate, key)] + local

    def sigma_slice(self, plate, key):
        o = self.sigma_offsets[(plate, key)]
        return slice(o, o + self.plates[plate].maps[key].n_global)

    def v_slice(self, plate, key):
        o = self.v_offsets[(plate, key)]
        return slice(o, o + self.plates[plate].maps[key].n_global)
