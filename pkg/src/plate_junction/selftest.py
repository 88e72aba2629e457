"""Element and space self-checks: nodal property, inter-element conformity,
and the compatibility of Div / divDiv with the discontinuous P2 spaces.
"""

import numpy as np

from .dofs import build_global_dofs
from .elements import _lagrange_nodes, ch_element, dg_scalar_p2, dg_vector_p2, hz_element, monomial_exponents
from .frames import kirchhoff_shear, sym_from_components
from .mesh import PlateDescriptor, build_coupled_mesh, refine_uniform

REFERENCE_TRIANGLE = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
SKEWED_TRIANGLE = np.array([[0.3, -0.2], [1.4, 0.1], [0.55, 0.9]])


def _to_reference(X, pts):
    J = np.column_stack([X[1] - X[0], X[2] - X[0]])
    return np.linalg.solve(J, (pts - X[0]).T).T


def basis_field(element, C, X, j):
    """Basis function j of a tensor element on triangle X as a smooth field."""

    def field(pts):
        ev = element.evaluate(C[None], X[None], _to_reference(X, pts))
        v = ev["values"][0, :, j]
        g = ev["grad"][0, :, j]  # (k, 3, 2)
        return sym_from_components(v), sym_from_components(np.moveaxis(g, -1, 1)).transpose(0, 2, 3, 1)

    return field


def nodal_matrix(element, X=SKEWED_TRIANGLE):
    """D[i, j] = DOF i applied to basis function j; the identity for a unisolvent element."""
    X = np.asarray(X, dtype=float)
    C = element.nodal_coefficients(X[None])[0]
    nb = element.n_dofs
    if element.value_space == "sym":
        D = np.empty((nb, nb))
        for j in range(nb):
            D[:, j] = element.dof_values(X, basis_field(element, C, X, j))[0]
        return D
    ev = element.evaluate(C[None], X[None], _lagrange_nodes(element.degree), derivatives=False)["values"][0]
    D = np.empty((nb, nb))
    for i, dof in enumerate(element.dofs):
        D[i] = ev[dof.entity, :, dof.index]
    return D


def nodal_residual(element, X=SKEWED_TRIANGLE):
    D = nodal_matrix(element, X)
    return float(np.abs(D - np.eye(len(D))).max())


def standard_elements():
    return {"HZ": hz_element(), "CH": ch_element(), "DG2-vec": dg_vector_p2(), "DG2": dg_scalar_p2()}


def _sample_plate(level):
    s = PlateDescriptor("S", 1.0, 1.0, 0.0)
    st = PlateDescriptor("S_tilde", 1.0, 1.0, -1.0)
    mesh = build_coupled_mesh(s, st, 1)
    for _ in range(level):
        mesh = refine_uniform(mesh)
    return mesh.S


def conformity_defects(n_fields=20, level=2, seed=0, n_points=5):
    """Largest relative jump of tau n (HZ) and of M_nn, T (CH) across interior edges
    for random global coefficient vectors."""
    plate = _sample_plate(level)
    rng = np.random.default_rng(seed)
    X = plate.coords()
    s = np.linspace(0.05, 0.95, n_points)
    out = {}
    for name, el in (("HZ", hz_element()), ("CH", ch_element())):
        dm = build_global_dofs(plate, el)
        C = el.nodal_coefficients(X)
        coeffs = rng.standard_normal((n_fields, dm.n_global))
        loc = coeffs[:, dm.local_to_global] * dm.sign  # (f, nt, nb)
        worst = 0.0
        for e in np.flatnonzero(plate.edge_owners[:, 1] >= 0):
            a, b = plate.edges[e]
            pa, pb = plate.vertices[a], plate.vertices[b]
            pts = pa + s[:, None] * (pb - pa)
            t = (pb - pa) / np.linalg.norm(pb - pa)
            n = np.array([t[1], -t[0]])
            sides = []
            for k in plate.edge_owners[e]:
                ev = el.evaluate(C[k : k + 1], X[k : k + 1], _to_reference(X[k], pts))
                A = sym_from_components(np.einsum("qjc,fj->fqc", ev["values"][0], loc[:, k]))
                An = A @ n
                if name == "HZ":
                    sides.append(An.reshape(n_fields, -1))
                    continue
                div = np.einsum("qjd,fj->fqd", ev["div"][0], loc[:, k])
                g = np.einsum("qjci,fj->fqic", ev["grad"][0], loc[:, k])
                gm = sym_from_components(g).transpose(0, 1, 3, 4, 2)
                T = kirchhoff_shear(div.reshape(-1, 2), gm.reshape(-1, 2, 2, 2), n, t).reshape(n_fields, -1)
                sides.append(np.concatenate([An @ n, T], axis=1))
            scale = max(1.0, np.abs(sides[0]).max())
            worst = max(worst, float(np.abs(sides[0] - sides[1]).max() / scale))
        out[name] = worst
    return out


def _fit_excess(values, pts, degree, keep):
    """Largest coefficient beyond total degree ``keep`` in a least-squares
    monomial fit of ``values`` (q, ...) of total degree ``degree``."""
    exps = monomial_exponents(degree)
    V = np.stack([pts[:, 0] ** a * pts[:, 1] ** b for a, b in exps], axis=-1)
    coef, *_ = np.linalg.lstsq(V, values.reshape(len(pts), -1), rcond=None)
    high = np.array([a + b > keep for a, b in exps])
    return float(np.abs(coef[high]).max()) if high.any() else 0.0


def compatibility_defects(X=SKEWED_TRIANGLE, n_points=40, seed=0):
    """Super-P2 content of Div (HZ) and divDiv (CH) basis functions, in
    units of the largest coefficient."""
    X = np.asarray(X, dtype=float)
    rng = np.random.default_rng(seed)
    ref = rng.dirichlet(np.ones(3), n_points)[:, 1:]
    J = np.column_stack([X[1] - X[0], X[2] - X[0]])
    phys = X[0] + ref @ J.T
    out = {}
    for name, el, key in (("HZ", hz_element(), "div"), ("CH", ch_element(), "divdiv")):
        C = el.nodal_coefficients(X[None])
        vals = el.evaluate(C, X[None], ref)[key][0]
        scale = max(1.0, float(np.abs(vals).max()))
        out[name] = _fit_excess(vals, phys, el.degree, 2) / scale
    return out


def run_all():
    """All checks as {name: (value, tolerance)}."""
    checks = {}
    for name, el in standard_elements().items():
        checks[f"nodal residual {name}"] = (nodal_residual(el), 1e-10)
    counts = {name: el.n_dofs for name, el in standard_elements().items()}
    expected = {"HZ": 30, "CH": 45, "DG2-vec": 12, "DG2": 6}
    for name, n in counts.items():
        checks[f"dof count {name}"] = (float(abs(n - expected[name])), 0.0)
    for name, v in conformity_defects().items():
        checks[f"edge jump {name}"] = (v, 1e-9)
    for name, v in compatibility_defects().items():
        checks[f"super-P2 content {name}"] = (v, 1e-11)
    return checks
