"""Reference elements for the stress, moment and displacement spaces.

Tensor-valued elements store symmetric 2x2 fields by their components
(11, 12, 22) in the fixed chart of the plate; no Piola map is used, so the
nodal basis of each physical triangle is obtained by inverting a generalized
Vandermonde matrix built from the physical DOF functionals.  The polynomial
basis underneath is orthonormal on the reference triangle.
"""

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import ElementConstructionError
from .quadrature import triangle_rule

# E11, E12 + E21, E22
SYM_BASIS = np.array(
    [[[1.0, 0.0], [0.0, 0.0]], [[0.0, 1.0], [1.0, 0.0]], [[0.0, 0.0], [0.0, 1.0]]]
)
# Frobenius weights of the component basis: A:B = a11 b11 + 2 a12 b12 + a22 b22
SYM_WEIGHTS = np.array([1.0, 2.0, 1.0])

REF_VERTICES = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
# local edge l runs from vertex l to vertex l+1 (counterclockwise)
LOCAL_EDGES = ((0, 1), (1, 2), (2, 0))

VALUE_SIZE = {"sym": 3, "vec": 2, "scalar": 1}


def monomial_exponents(k):
    return [(d - b, b) for d in range(k + 1) for b in range(d + 1)]


def _monomials(exps, pts):
    x = pts[:, 0:1]
    y = pts[:, 1:2]
    a = np.array([e[0] for e in exps])
    b = np.array([e[1] for e in exps])
    am = np.maximum(a - 1, 0)
    bm = np.maximum(b - 1, 0)
    amm = np.maximum(a - 2, 0)
    bmm = np.maximum(b - 2, 0)
    v = x**a * y**b
    dx = a * x**am * y**b
    dy = b * x**a * y**bm
    dxx = a * (a - 1) * x**amm * y**b
    dxy = a * b * x**am * y**bm
    dyy = b * (b - 1) * x**a * y**bmm
    grad = np.stack([dx, dy], axis=-1)
    hess = np.stack([np.stack([dxx, dxy], -1), np.stack([dxy, dyy], -1)], -2)
    return v, grad, hess


class PolyBasis:
    """Orthonormal basis of P_k on the reference triangle (Gram-Schmidt of monomials)."""

    def __init__(self, k):
        self.k = k
        self.exps = monomial_exponents(k)
        self.size = len(self.exps)
        q, w = triangle_rule(2 * k)
        v, _, _ = _monomials(self.exps, q)
        _, r = np.linalg.qr(v * np.sqrt(w)[:, None])
        self.to_monomial = np.linalg.inv(r)

    def __call__(self, pts):
        """Values (p, m), reference gradients (p, m, 2), reference Hessians (p, m, 2, 2)."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        v, g, h = _monomials(self.exps, pts)
        c = self.to_monomial
        return v @ c, np.einsum("pmi,mn->pni", g, c), np.einsum("pmij,mn->pnij", h, c)


@lru_cache(maxsize=None)
def poly_basis(k):
    return PolyBasis(k)


@dataclass(frozen=True)
class DofFunctional:
    """One degree of freedom of a reference element.

    kind is one of 'vertex' (tensor component ``index`` at vertex ``entity``),
    'edge_nn' / 'edge_nt' (normal-normal / normal-tangential trace),
    'edge_T' (Kirchhoff shear), 'interior' (moment ``index``) or 'node'
    (Lagrange value of component ``index`` at node ``entity``).  Edge
    functionals sit at ``param`` along local edge ``entity``.
    """

    kind: str
    entity: int
    index: int
    param: float = 0.0


def abs_det(X):
    """|det J| of the affine maps of triangles X (n, 3, 2), twice their areas."""
    X = np.asarray(X, dtype=float)
    a, b = X[:, 1] - X[:, 0], X[:, 2] - X[:, 0]
    return np.abs(a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0])


def affine_data(X):
    """Jacobians, inverse Jacobians and determinants for triangles X (n, 3, 2)."""
    X = np.asarray(X, dtype=float)
    J = np.stack([X[:, 1] - X[:, 0], X[:, 2] - X[:, 0]], axis=-1)
    det = J[:, 0, 0] * J[:, 1, 1] - J[:, 0, 1] * J[:, 1, 0]
    size = np.abs(J).max(axis=(1, 2))
    if np.any(np.abs(det) <= 1e-14 * size**2):
        raise ElementConstructionError("degenerate triangle")
    G = np.empty_like(J)
    G[:, 0, 0] = J[:, 1, 1] / det
    G[:, 1, 1] = J[:, 0, 0] / det
    G[:, 0, 1] = -J[:, 0, 1] / det
    G[:, 1, 0] = -J[:, 1, 0] / det
    return J, G, det


def edge_frames(X):
    """Outward unit normals, unit tangents and lengths of the three local edges."""
    X = np.asarray(X, dtype=float)
    tv = np.stack([X[:, b] - X[:, a] for a, b in LOCAL_EDGES], axis=1)
    length = np.linalg.norm(tv, axis=-1)
    t = tv / length[..., None]
    n = np.stack([t[..., 1], -t[..., 0]], axis=-1)
    return n, t, length


def _hz_interior(q):
    lam = np.stack([1.0 - q[:, 0] - q[:, 1], q[:, 0], q[:, 1]], axis=-1)
    out = []
    for a in range(3):
        for c in range(3):
            out.append(lam[:, a, None, None] * SYM_BASIS[c])
    return out


def _ch_interior(q):
    out = [np.broadcast_to(SYM_BASIS[c], (len(q), 2, 2)) for c in range(3)]
    xp = np.stack([q[:, 1] - 1.0 / 3.0, 1.0 / 3.0 - q[:, 0]], axis=-1)
    v, _, _ = poly_basis(2)(q)
    for m in range(v.shape[1]):
        for d in range(2):
            b = np.zeros((len(q), 2))
            b[:, d] = v[:, m]
            s = np.einsum("qi,qj->qij", xp, b)
            out.append(0.5 * (s + s.transpose(0, 2, 1)))
    return out


@dataclass(frozen=True, eq=False)
class ElementDef:
    name: str
    degree: int
    value_space: str
    dofs: tuple
    interior_set: object = field(default=None, repr=False)
    # Vandermonde rows of these kinds are scaled by the edge length before inversion
    scaled_kinds: tuple = ("edge_T",)

    @property
    def n_dofs(self):
        return len(self.dofs)

    @property
    def basis(self):
        return poly_basis(self.degree)

    @property
    def n_components(self):
        return VALUE_SIZE[self.value_space]

    def dofs_of_kind(self, *kinds):
        return [i for i, d in enumerate(self.dofs) if d.kind in kinds]

    def vandermonde(self, X):
        """Generalized Vandermonde V[e, i, p] = dof_i(P_p) on triangles X (n, 3, 2).

        P_p is component ``p // m`` times orthonormal polynomial ``p % m``.
        """
        X = np.asarray(X, dtype=float).reshape(-1, 3, 2)
        ne = len(X)
        pb = self.basis
        nm = pb.size
        nc = self.n_components
        V = np.zeros((ne, self.n_dofs, nc * nm))
        _, G, _ = affine_data(X)
        n, t, _ = edge_frames(X)
        if self.value_space == "sym":
            q, w = triangle_rule(2 * self.degree + 2)
            vq, _, _ = pb(q)
            moments = None
            if self.interior_set is not None:
                sig = self.interior_set(q)
                # moments[r, c, m] = 2 * int_ref P_m (E_c : sigma_r)
                moments = np.array(
                    [
                        [2.0 * np.einsum("q,qm,q->m", w, vq, np.einsum("qij,ij->q", s, SYM_BASIS[c])) for c in range(3)]
                        for s in sig
                    ]
                )
        for i, dof in enumerate(self.dofs):
            kind = dof.kind
            if kind in ("vertex", "node"):
                pt = REF_VERTICES[dof.entity] if kind == "vertex" else _lagrange_nodes(self.degree)[dof.entity]
                v, _, _ = pb(pt)
                c = dof.index
                V[:, i, c * nm : (c + 1) * nm] = v[0]
            elif kind in ("edge_nn", "edge_nt", "edge_T"):
                a, b = LOCAL_EDGES[dof.entity]
                pt = REF_VERTICES[a] + dof.param * (REF_VERTICES[b] - REF_VERTICES[a])
                v, g, _ = pb(pt)
                ne_ = n[:, dof.entity]
                te_ = t[:, dof.entity]
                for c in range(3):
                    Ec = SYM_BASIS[c]
                    Ecn = np.einsum("ij,ej->ei", Ec, ne_)
                    if kind == "edge_nn":
                        V[:, i, c * nm : (c + 1) * nm] = np.einsum("ei,ei->e", ne_, Ecn)[:, None] * v[0]
                    elif kind == "edge_nt":
                        V[:, i, c * nm : (c + 1) * nm] = np.einsum("ei,ei->e", te_, Ecn)[:, None] * v[0]
                    else:
                        gx = np.einsum("mj,eji->emi", g[0], G)
                        divpart = np.einsum("emj,ej->em", gx, Ecn)
                        tpart = np.einsum("emi,ei->em", gx, te_) * np.einsum("ei,ei->e", te_, Ecn)[:, None]
                        V[:, i, c * nm : (c + 1) * nm] = divpart + tpart
            elif kind == "interior":
                for c in range(3):
                    V[:, i, c * nm : (c + 1) * nm] = moments[dof.index, c]
            else:
                raise ElementConstructionError(f"unknown DOF kind {kind!r}")
        return V

    def _row_scales(self, X):
        X = np.asarray(X, dtype=float).reshape(-1, 3, 2)
        _, _, length = edge_frames(X)
        s = np.ones((len(X), self.n_dofs))
        for i, dof in enumerate(self.dofs):
            if dof.kind in self.scaled_kinds:
                s[:, i] = length[:, dof.entity]
        return s

    def nodal_coefficients(self, X, check=True):
        """Coefficients C (n, P, nb): basis_j = sum_p C[:, p, j] P_p, with dof_i(basis_j) = delta_ij."""
        V = self.vandermonde(X)
        s = self._row_scales(X)
        Vs = V * s[:, :, None]
        if check:
            sv = np.linalg.svd(Vs, compute_uv=False)
            cond = sv[:, 0] / np.maximum(sv[:, -1], 1e-300)
            if np.any(cond > 1e13):
                raise ElementConstructionError(
                    f"{self.name}: singular generalized Vandermonde (cond {cond.max():.3e})"
                )
        C = np.linalg.inv(Vs) * s[:, None, :]
        return C

    def dof_values(self, X, field):
        """Apply every DOF functional to a smooth symmetric-tensor field.

        ``field(points)`` returns values (k, 2, 2) and gradients (k, 2, 2, 2)
        (last axis = derivative direction) at chart points (k, 2).
        Returns (n, nb).
        """
        if self.value_space != "sym":
            raise ElementConstructionError("dof_values is defined for tensor elements")
        X = np.asarray(X, dtype=float).reshape(-1, 3, 2)
        ne = len(X)
        n, t, _ = edge_frames(X)
        out = np.zeros((ne, self.n_dofs))
        q, w = triangle_rule(2 * self.degree + 6)
        sig = self.interior_set(q) if self.interior_set is not None else []
        J = np.stack([X[:, 1] - X[:, 0], X[:, 2] - X[:, 0]], axis=-1)
        pts = X[:, None, 0] + np.einsum("eij,qj->eqi", J, q)
        A, _ = field(pts.reshape(-1, 2))
        A = A.reshape(ne, len(q), 2, 2)
        moments = 2.0 * np.einsum("q,eqij,rqij->er", w, A, np.asarray(sig)) if len(sig) else None
        for i, dof in enumerate(self.dofs):
            if dof.kind == "vertex":
                a, _ = field(X[:, dof.entity])
                c = dof.index
                out[:, i] = a[:, 0, 0] if c == 0 else (a[:, 0, 1] if c == 1 else a[:, 1, 1])
            elif dof.kind in ("edge_nn", "edge_nt", "edge_T"):
                a_, b_ = LOCAL_EDGES[dof.entity]
                p = X[:, a_] + dof.param * (X[:, b_] - X[:, a_])
                a, g = field(p)
                ne_, te_ = n[:, dof.entity], t[:, dof.entity]
                an = np.einsum("eij,ej->ei", a, ne_)
                if dof.kind == "edge_nn":
                    out[:, i] = np.einsum("ei,ei->e", an, ne_)
                elif dof.kind == "edge_nt":
                    out[:, i] = np.einsum("ei,ei->e", an, te_)
                else:
                    div = np.einsum("eijj->ei", g)
                    dt = np.einsum("eijk,ek->eij", g, te_)
                    out[:, i] = np.einsum("ei,ei->e", div, ne_) + np.einsum("ei,eij,ej->e", te_, dt, ne_)
            elif dof.kind == "interior":
                out[:, i] = moments[:, dof.index]
        return out

    def condition_number(self, X):
        V = self.vandermonde(X) * self._row_scales(X)[:, :, None]
        sv = np.linalg.svd(V, compute_uv=False)
        return sv[:, 0] / sv[:, -1]

    def evaluate(self, C, X, pts, derivatives=True):
        """Basis values and derivatives at reference points ``pts`` on triangles X.

        Returns a dict with ``values`` (n, q, nb, ncomp) and, for ``sym``
        elements, ``div`` (n, q, nb, 2) and ``divdiv`` (n, q, nb).  ``grad``
        (n, q, nb, ncomp, 2) holds component gradients for every element.
        """
        X = np.asarray(X, dtype=float).reshape(-1, 3, 2)
        pb = self.basis
        nm = pb.size
        nc = self.n_components
        v, g, h = pb(pts)
        Cc = C.reshape(len(C), nc, nm, -1)
        out = {"values": np.einsum("qm,ecmj->eqjc", v, Cc)}
        if not derivatives:
            return out
        _, G, _ = affine_data(X)
        gx = np.einsum("qmk,eki->eqmi", g, G)
        if self.value_space == "sym":
            hx = np.einsum("eki,qmkl,elj->eqmij", G, h, G)
            # Div tau = (d1 t11 + d2 t12, d1 t12 + d2 t22)
            d = np.einsum("eqmi,ecmj->eqjci", gx, Cc)
            div = np.stack([d[..., 0, 0] + d[..., 1, 1], d[..., 1, 0] + d[..., 2, 1]], axis=-1)
            hh = np.einsum("eqmik,ecmj->eqjcik", hx, Cc)
            divdiv = hh[..., 0, 0, 0] + 2.0 * hh[..., 1, 0, 1] + hh[..., 2, 1, 1]
            out["div"] = div
            out["divdiv"] = divdiv
            out["grad"] = d
        else:
            out["grad"] = np.einsum("eqmi,ecmj->eqjci", gx, Cc)
        return out


@lru_cache(maxsize=None)
def _lagrange_nodes(k):
    if k != 2:
        raise ElementConstructionError("only P2 Lagrange nodes are provided")
    return np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.5, 0.0], [0.5, 0.5], [0.0, 0.5]])


def edge_params(m):
    """Symmetric equally spaced interior points i/(m+1), i = 1..m."""
    return tuple((i + 1) / (m + 1) for i in range(m))


HZ_EDGE_PARAMS = edge_params(2)
CH_NN_PARAMS = edge_params(3)
CH_T_PARAMS = edge_params(4)


@lru_cache(maxsize=None)
def hz_element():
    """Cubic H(div)-conforming symmetric-tensor element (30 DOFs)."""
    dofs = [DofFunctional("vertex", a, c) for a in range(3) for c in range(3)]
    for l in range(3):
        for i, s in enumerate(HZ_EDGE_PARAMS):
            dofs.append(DofFunctional("edge_nn", l, i, s))
            dofs.append(DofFunctional("edge_nt", l, i, s))
    dofs += [DofFunctional("interior", -1, r) for r in range(9)]
    el = ElementDef("HZ-P3", 3, "sym", tuple(dofs), interior_set=_hz_interior)
    if el.n_dofs != 3 * poly_basis(3).size:
        raise ElementConstructionError("HZ DOF count mismatch")
    return el


@lru_cache(maxsize=None)
def ch_element():
    """Quartic H(divDiv)-conforming symmetric-tensor element (45 DOFs)."""
    dofs = [DofFunctional("vertex", a, c) for a in range(3) for c in range(3)]
    for l in range(3):
        for i, s in enumerate(CH_NN_PARAMS):
            dofs.append(DofFunctional("edge_nn", l, i, s))
        for i, s in enumerate(CH_T_PARAMS):
            dofs.append(DofFunctional("edge_T", l, i, s))
    dofs += [DofFunctional("interior", -1, r) for r in range(15)]
    el = ElementDef("CH-P4", 4, "sym", tuple(dofs), interior_set=_ch_interior)
    if el.n_dofs != 3 * poly_basis(4).size:
        raise ElementConstructionError("CH DOF count mismatch")
    return el


@lru_cache(maxsize=None)
def dg_vector_p2():
    dofs = tuple(DofFunctional("node", a, c) for c in range(2) for a in range(6))
    return ElementDef("DG-P2-vec", 2, "vec", dofs)


@lru_cache(maxsize=None)
def dg_scalar_p2():
    dofs = tuple(DofFunctional("node", a, 0) for a in range(6))
    return ElementDef("DG-P2", 2, "scalar", dofs)
