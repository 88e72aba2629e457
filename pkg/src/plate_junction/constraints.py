"""Essential conditions on the stress and moment DOFs.

Every row is a linear functional of edge traces or vertex twisting-moment
jumps.  The same functional is applied to the discrete DOFs (giving the row
coefficients) and to prescribed data (giving the right-hand side), so
inhomogeneous free-edge data, junction gaps and corner jumps are all handled
identically.  Traces along an edge are recovered from the edge and vertex
DOFs by 1D Lagrange interpolation; this is exact because each trace is a
polynomial of the collocated degree.

A data object passed as ``data`` must provide

* ``traces(plate, points, n, t)`` returning a dict with arrays ``N_nn``,
  ``N_nt``, ``M_nn``, ``M_nt`` and ``T`` at the given chart points;
* ``vertex_jump(plate, point, n1, t1, n2, t2)`` returning a float.
"""

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .elements import CH_NN_PARAMS, CH_T_PARAMS, HZ_EDGE_PARAMS
from .errors import GeometryError, InconsistentConstraints
from .frames import nn_weights, nt_weights
from .mesh import FREE, edge_frame

log = logging.getLogger(__name__)

N_NODES = (0.0,) + HZ_EDGE_PARAMS + (1.0,)
MNN_NODES = (0.0,) + CH_NN_PARAMS + (1.0,)
T_NODES = CH_T_PARAMS


@dataclass
class LinearConstraint:
    terms: dict  # global Sigma index -> coefficient
    rhs: float = 0.0
    label: str = ""


@dataclass
class Reduction:
    """X = Z y + x0 with y the master DOFs."""

    masters: np.ndarray
    slaves: np.ndarray
    Z: sp.csr_matrix
    x0: np.ndarray

    def expand(self, y):
        return self.Z @ y + self.x0


@dataclass
class ConstraintSet:
    n_dofs: int
    constraints: list = field(default_factory=list)
    reduction: Reduction = None

    def __add__(self, other):
        if self.n_dofs != other.n_dofs:
            raise ValueError("constraint sets live on different spaces")
        return ConstraintSet(self.n_dofs, self.constraints + other.constraints)

    def __len__(self):
        return len(self.constraints)

    def matrix(self):
        rows, cols, vals = [], [], []
        for r, c in enumerate(self.constraints):
            for j, v in c.terms.items():
                rows.append(r)
                cols.append(j)
                vals.append(v)
        C = sp.csr_matrix((vals, (rows, cols)), shape=(len(self.constraints), self.n_dofs))
        return C, np.array([c.rhs for c in self.constraints])

    def residual(self, x):
        if not self.constraints:
            return 0.0
        C, b = self.matrix()
        return float(np.abs(C @ x - b).max())

    def dump_text(self):
        out = []
        for c in self.constraints:
            lhs = " + ".join(f"{v:.17g}*d{j}" for j, v in sorted(c.terms.items()))
            out.append(f"{lhs} = {c.rhs:.17g}" + (f"  # {c.label}" if c.label else ""))
        return "\n".join(out) + "\n"


def _lagrange_weights(nodes, s):
    nodes = np.asarray(nodes, dtype=float)
    w = np.ones(len(nodes))
    for i, xi in enumerate(nodes):
        for j, xj in enumerate(nodes):
            if i != j:
                w[i] *= (s - xj) / (xi - xj)
    return w


def _add(form, other, scale=1.0):
    for j, v in other.items():
        form[j] = form.get(j, 0.0) + scale * v
    return form


class TraceForms:
    """Sparse linear forms giving edge traces of the discrete N and M in global Sigma indices."""

    def __init__(self, spaces):
        self.spaces = spaces

    def _plate(self, p):
        ps = self.spaces.plates[p]
        return ps.plate, ps.maps

    def frame(self, p, e):
        plate, _ = self._plate(p)
        return edge_frame(plate, e)

    def orientation(self, p, e):
        """+1 if the owning triangle traverses the edge along its stored direction."""
        plate, _ = self._plate(p)
        k, l = plate.edge_owners[e, 0], plate.edge_local[e, 0]
        return float(plate.tri_edge_sign[k, l])

    def point(self, p, e, s):
        plate, _ = self._plate(p)
        a, b = plate.edges[e]
        return plate.vertices[a] + s * (plate.vertices[b] - plate.vertices[a])

    def _vertex_form(self, p, key, v, weights):
        _, maps = self._plate(p)
        off = self.spaces.sigma_offsets[(p, key)]
        return {off + maps[key].vertex_dof(v, c): float(weights[c]) for c in range(3) if weights[c] != 0.0}

    def _edge_dof(self, p, key, e, kind, i):
        _, maps = self._plate(p)
        return self.spaces.sigma_offsets[(p, key)] + maps[key].edge_dof(e, kind, i)

    def _interp(self, nodes, s, node_forms):
        w = _lagrange_weights(nodes, s)
        form = {}
        for wi, f in zip(w, node_forms):
            if abs(wi) > 1e-15:
                _add(form, f, wi)
        return form

    def stress(self, p, e, s, which):
        """N_nn ('nn') or N_nt ('nt') at parameter s of edge e in its boundary frame."""
        plate, _ = self._plate(p)
        n, t = self.frame(p, e)
        a, b = plate.edges[e]
        w = nn_weights(n) if which == "nn" else nt_weights(n, t)
        kind = "edge_nn" if which == "nn" else "edge_nt"
        forms = [self._vertex_form(p, "N", a, w)]
        forms += [{self._edge_dof(p, "N", e, kind, i): 1.0} for i in range(len(HZ_EDGE_PARAMS))]
        forms.append(self._vertex_form(p, "N", b, w))
        return self._interp(N_NODES, s, forms)

    def moment_nn(self, p, e, s):
        plate, _ = self._plate(p)
        n, _ = self.frame(p, e)
        a, b = plate.edges[e]
        w = nn_weights(n)
        forms = [self._vertex_form(p, "M", a, w)]
        forms += [{self._edge_dof(p, "M", e, "edge_nn", i): 1.0} for i in range(len(CH_NN_PARAMS))]
        forms.append(self._vertex_form(p, "M", b, w))
        return self._interp(MNN_NODES, s, forms)

    def shear(self, p, e, s):
        sgn = self.orientation(p, e)
        forms = [{self._edge_dof(p, "M", e, "edge_T", i): sgn} for i in range(len(CH_T_PARAMS))]
        return self._interp(T_NODES, s, forms)

    def vertex_jump(self, p, v, frame_in, frame_out):
        w = nt_weights(*frame_in) - nt_weights(*frame_out)
        return self._vertex_form(p, "M", v, w)

    def get(self, p, e, s, quantity):
        if quantity == "N_nn":
            return self.stress(p, e, s, "nn")
        if quantity == "N_nt":
            return self.stress(p, e, s, "nt")
        if quantity == "M_nn":
            return self.moment_nn(p, e, s)
        if quantity == "T":
            return self.shear(p, e, s)
        raise KeyError(quantity)


def _data_trace(forms, data, p, e, s, quantity):
    """Prescribed trace at parameter s.

    The shear is taken from the edge L2 projection of the data onto cubics
    (equivalently, interpolation at the 4 Gauss points); this matches the
    discrete trace space exactly when the data are cubic and keeps the
    data error orthogonal to that space otherwise.
    """
    if data is None:
        return 0.0
    n, t = forms.frame(p, e)
    if quantity == "T":
        g = _GAUSS4
        x = np.array([forms.point(p, e, si) for si in g])
        vals = np.asarray(data.traces(p, x, np.tile(n, (4, 1)), np.tile(t, (4, 1)))[quantity], dtype=float).ravel()
        return float(_lagrange_weights(g, s) @ vals)
    x = forms.point(p, e, s)[None, :]
    return float(np.asarray(data.traces(p, x, n[None], t[None])[quantity]).ravel()[0])


_GAUSS4 = tuple(0.5 * (np.polynomial.legendre.leggauss(4)[0] + 1.0))


def _row(forms, data, terms, label):
    """terms: list of (coef, plate, edge, s, quantity)."""
    form = {}
    rhs = 0.0
    for coef, p, e, s, q in terms:
        _add(form, forms.get(p, e, s, q), coef)
        rhs += coef * _data_trace(forms, data, p, e, s, q)
    form = {j: v for j, v in form.items() if v != 0.0}
    return LinearConstraint(form, rhs, label)


def _boundary_walk(plate):
    """For each boundary vertex, the (incoming, outgoing) boundary edges in ccw order."""
    inc, out = {}, {}
    for e in range(plate.n_edges):
        if plate.edge_owners[e, 1] >= 0:
            continue
        k, l = plate.edge_owners[e, 0], plate.edge_local[e, 0]
        tri = plate.triangles[k]
        a, b = int(tri[l]), int(tri[(l + 1) % 3])
        out[a] = e
        inc[b] = e
    return {v: (inc[v], out[v]) for v in inc}


def _corner_vertices(plate, side_a, side_b):
    va = set(plate.vertices_on_side(side_a))
    vb = set(plate.vertices_on_side(side_b))
    return sorted(va & vb)


def free_boundary_constraints(spaces, data=None):
    """Vanishing (or prescribed) N n, M_nn, T on free edges and twisting jumps at free corners."""
    forms = TraceForms(spaces)
    rows = []
    for p, ps in enumerate(spaces.plates):
        plate = ps.plate
        for e in plate.edges_with_tag(FREE):
            for s in N_NODES:
                rows.append(_row(forms, data, [(1.0, p, e, s, "N_nn")], f"free N_nn p{p} e{e} s={s:.3f}"))
                rows.append(_row(forms, data, [(1.0, p, e, s, "N_nt")], f"free N_nt p{p} e{e} s={s:.3f}"))
            for s in MNN_NODES:
                rows.append(_row(forms, data, [(1.0, p, e, s, "M_nn")], f"free M_nn p{p} e{e} s={s:.3f}"))
            for s in T_NODES:
                rows.append(_row(forms, data, [(1.0, p, e, s, "T")], f"free T p{p} e{e} s={s:.3f}"))
        walk = _boundary_walk(plate)
        tags = plate.descriptor.boundary_tags
        for sa, sb in (("far", "bottom"), ("far", "top")):
            if tags[sa] != FREE or tags[sb] != FREE:
                continue
            for v in _corner_vertices(plate, sa, sb):
                rows.append(_jump_row(forms, data, p, v, walk, 1.0, f"free corner p{p} v{v}"))
    return ConstraintSet(spaces.n_sigma, rows)


def _jump_terms(forms, p, v, walk):
    e_in, e_out = walk[v]
    return forms.vertex_jump(p, v, forms.frame(p, e_in), forms.frame(p, e_out)), (e_in, e_out)


def _jump_data(forms, data, p, v, edges):
    if data is None:
        return 0.0
    plate = forms.spaces.plates[p].plate
    n1, t1 = forms.frame(p, edges[0])
    n2, t2 = forms.frame(p, edges[1])
    return float(data.vertex_jump(p, plate.vertices[v], n1, t1, n2, t2))


def _jump_row(forms, data, p, v, walk, coef, label):
    form, edges = _jump_terms(forms, p, v, walk)
    form = {j: coef * c for j, c in form.items() if c != 0.0}
    return LinearConstraint(form, coef * _jump_data(forms, data, p, v, edges), label)


def junction_constraints(spaces, theta, data=None):
    """Collocated static junction relations on every paired edge (17 rows per pair)."""
    if not 0.0 < theta < np.pi:
        raise GeometryError(f"junction angle {theta} outside (0, pi)")
    forms = TraceForms(spaces)
    c, s_ = np.cos(theta), np.sin(theta)
    rows = []
    for pair in spaces.mesh.junction_pairing:
        e, f = pair.edge_s, pair.edge_st

        def m(s):
            return 1.0 - s if pair.reversed else s

        for s in MNN_NODES:
            rows.append(_row(forms, data, [(1.0, 1, f, m(s), "M_nn"), (-1.0, 0, e, s, "M_nn")], f"jM e{e} s={s:.3f}"))
        for s in T_NODES:
            rows.append(
                _row(
                    forms,
                    data,
                    [(1.0, 1, f, m(s), "N_nn"), (c, 0, e, s, "N_nn"), (-s_, 0, e, s, "T")],
                    f"jNnn e{e} s={s:.3f}",
                )
            )
            rows.append(
                _row(
                    forms,
                    data,
                    [(1.0, 1, f, m(s), "T"), (-s_, 0, e, s, "N_nn"), (-c, 0, e, s, "T")],
                    f"jT e{e} s={s:.3f}",
                )
            )
        for s in N_NODES:
            rows.append(_row(forms, data, [(1.0, 1, f, m(s), "N_nt"), (-1.0, 0, e, s, "N_nt")], f"jNnt e{e} s={s:.3f}"))
    return ConstraintSet(spaces.n_sigma, rows)


def corner_constraints(spaces, theta, data=None):
    """Twisting-moment jump relations at both ends of the junction line."""
    forms = TraceForms(spaces)
    c, s_ = np.cos(theta), np.sin(theta)
    S, St = spaces.plates[0].plate, spaces.plates[1].plate
    walk_s, walk_t = _boundary_walk(S), _boundary_walk(St)
    rows = []
    for side_s, side_t in (("top", "bottom"), ("bottom", "top")):
        if S.descriptor.boundary_tags[side_s] != FREE or St.descriptor.boundary_tags[side_t] != FREE:
            continue
        (v,) = _corner_vertices(S, "junction", side_s)
        (w,) = _corner_vertices(St, "junction", side_t)
        if abs(S.vertices[v, 1] + St.vertices[w, 1]) > 1e-12 * S.descriptor.length_t:
            raise GeometryError("junction end points do not match")
        js, es = _jump_terms(forms, 0, v, walk_s)
        jt, et = _jump_terms(forms, 1, w, walk_t)
        gs = _jump_data(forms, data, 0, v, es)
        gt = _jump_data(forms, data, 1, w, et)
        if abs(s_) > 1e-12:
            rows.append(LinearConstraint({j: s_ * x for j, x in js.items()}, s_ * gs, f"corner sin v{v}"))
        else:
            log.warning("dropping degenerate corner row at vertex %d (sin(theta) = 0)", v)
        form = dict(jt)
        _add(form, js, -c)
        rows.append(LinearConstraint({j: x for j, x in form.items() if x != 0.0}, gt - c * gs, f"corner cos v{v}"))
    return ConstraintSet(spaces.n_sigma, rows)


def reduce(cs, tol=1e-10):
    """Greedy master/slave elimination of the constraint rows.

    Each row, after substituting earlier slaves, eliminates its largest
    coefficient.  Coefficients below ``tol`` times the row scale are treated as
    zero; a row that vanishes is dropped if its right-hand side is within
    ``tol * max(1, |rhs| scale)`` and raises InconsistentConstraints otherwise.
    """
    expr = {}  # slave -> (dict master -> coef, const)
    users = {}  # master -> set of slaves whose expression references it
    rhs_scale = max([1.0] + [abs(c.rhs) for c in cs.constraints])
    dropped = 0
    for row in cs.constraints:
        scale = max(abs(v) for v in row.terms.values()) if row.terms else 0.0
        form = {}
        const = row.rhs
        for j, v in row.terms.items():
            if j in expr:
                ej, cj = expr[j]
                _add(form, ej, v)
                const -= v * cj
            else:
                form[j] = form.get(j, 0.0) + v
        form = {j: v for j, v in form.items() if abs(v) > tol * scale}
        if not form:
            if abs(const) <= tol * rhs_scale:
                dropped += 1
                continue
            raise InconsistentConstraints(f"row '{row.label}' reduces to 0 = {const:.3e}")
        piv = max(form, key=lambda j: (abs(form[j]), -j))
        cp = form.pop(piv)
        new = {j: -v / cp for j, v in form.items()}
        new_c = const / cp
        # substitute the new slave into existing expressions
        for sl in users.pop(piv, ()):
            ej, cj = expr[sl]
            a = ej.pop(piv)
            _add(ej, new, a)
            for j in new:
                users.setdefault(j, set()).add(sl)
            expr[sl] = (ej, cj + a * new_c)
        expr[piv] = (new, new_c)
        for j in new:
            users.setdefault(j, set()).add(piv)
    n = cs.n_dofs
    slaves = np.array(sorted(expr), dtype=np.int64)
    is_slave = np.zeros(n, dtype=bool)
    is_slave[slaves] = True
    masters = np.flatnonzero(~is_slave)
    col = -np.ones(n, dtype=np.int64)
    col[masters] = np.arange(len(masters))
    rows, cols, vals = list(masters), list(range(len(masters))), [1.0] * len(masters)
    x0 = np.zeros(n)
    for sl in slaves:
        ej, cj = expr[sl]
        x0[sl] = cj
        for j, v in ej.items():
            if v != 0.0:
                rows.append(sl)
                cols.append(col[j])
                vals.append(v)
    Z = sp.csr_matrix((vals, (rows, cols)), shape=(n, len(masters)))
    if dropped:
        log.debug("dropped %d redundant constraint rows", dropped)
    red = Reduction(masters=masters, slaves=slaves, Z=Z, x0=x0)
    return ConstraintSet(n, list(cs.constraints), red)


def all_constraints(spaces, theta, free_data=None, junction_data=None, corner_data=None):
    return (
        free_boundary_constraints(spaces, free_data)
        + junction_constraints(spaces, theta, junction_data)
        + corner_constraints(spaces, theta, corner_data)
    )
