import numpy as np
import pytest

from plate_junction.dofs import CoupledSpaces, build_global_dofs, shape_groups
from plate_junction.elements import ch_element, dg_scalar_p2, dg_vector_p2, hz_element
from plate_junction.mesh import PlateDescriptor, build_coupled_mesh


@pytest.fixture(scope="module")
def unit_square():
    s = PlateDescriptor("S", 1.0, 1.0, 0.0)
    st = PlateDescriptor("T", 1.0, 1.0, -1.0)
    return build_coupled_mesh(s, st, 1).S


def test_two_triangle_counts(unit_square):
    assert unit_square.n_triangles == 2
    # 2 x 30 local DOFs, minus 2 shared vertices x 3 and one shared edge x 4
    assert build_global_dofs(unit_square, hz_element()).n_global == 50
    # 2 x 45, minus 2 x 3 vertex values and 3 M_nn + 4 T on the shared edge
    assert build_global_dofs(unit_square, ch_element()).n_global == 77
    assert build_global_dofs(unit_square, dg_vector_p2()).n_global == 24
    assert build_global_dofs(unit_square, dg_scalar_p2()).n_global == 12


def test_global_count_formula(ex1_mesh2):
    P = ex1_mesh2.S
    nv, ne, nt = P.n_vertices, P.n_edges, P.n_triangles
    assert build_global_dofs(P, hz_element()).n_global == 3 * nv + 4 * ne + 9 * nt
    assert build_global_dofs(P, ch_element()).n_global == 3 * nv + 7 * ne + 15 * nt


def test_shared_dofs_have_consistent_signs(ex1_mesh2):
    P = ex1_mesh2.S
    dm = build_global_dofs(P, ch_element())
    el = ch_element()
    for e in np.flatnonzero(P.edge_owners[:, 1] >= 0)[:10]:
        (k1, k2), (l1, l2) = P.edge_owners[e], P.edge_local[e]
        for kind in ("edge_nn", "edge_T"):
            loc1 = [i for i, d in enumerate(el.dofs) if d.kind == kind and d.entity == l1]
            loc2 = [i for i, d in enumerate(el.dofs) if d.kind == kind and d.entity == l2]
            g1 = set(dm.local_to_global[k1, loc1])
            g2 = set(dm.local_to_global[k2, loc2])
            assert g1 == g2
            if kind == "edge_T":
                # outward normals are opposite, shears odd under reversal
                assert np.all(dm.sign[k1, loc1] * dm.sign[k2, loc2][::-1] <= 1)


def test_shape_groups_collapse_translations(ex1_mesh2):
    X = ex1_mesh2.S.coords()
    sid, reps = shape_groups(X)
    # a red-refined grid has a handful of shapes up to translation
    assert len(reps) <= 4
    rel = X - X[:, :1]
    assert np.allclose(rel, rel[reps[sid]], atol=1e-12)


def test_coupled_layout(ex1_mesh1):
    sp_ = CoupledSpaces(ex1_mesh1)
    sl = [sp_.sigma_slice(p, k) for p in range(2) for k in ("N", "M")]
    assert sl[0].start == 0 and sl[-1].stop == sp_.n_sigma
    assert all(a.stop == b.start for a, b in zip(sl, sl[1:]))
    vl = [sp_.v_slice(p, k) for p in range(2) for k in ("u", "u3")]
    assert vl[-1].stop == sp_.n_v == 2 * 16 * (12 + 6)
