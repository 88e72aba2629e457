import numpy as np
import pytest
import sympy as sym

from plate_junction.assembly import FieldSolution
from plate_junction.dofs import CoupledSpaces
from plate_junction.experiments import (
    ERROR_NAMES,
    EX1_MATERIAL,
    EX2_REFERENCE,
    PROBE_X,
    PlateExact,
    compute_errors,
    evaluate_dg,
    example1_descriptors,
    interpolate_stresses,
    run_convergence,
    run_example2,
)
from plate_junction.mesh import mesh_at_level


@pytest.fixture(scope="module")
def ex1_report():
    return run_convergence([1, 2, 3])


@pytest.fixture(scope="module")
def ex2_results():
    return run_example2([1, 2, 3])


def test_exact_fields_against_symbolic():
    x, y = sym.symbols("x y")
    c = (-1.0, 1.0, 1.0)
    pe = PlateExact(c, EX1_MATERIAL)
    w = (1 - x**2) ** 2 * (1 - y**2) ** 2
    u = sym.Matrix([c[0] * w, c[1] * w])
    eps = sym.Matrix(2, 2, lambda i, j: (sym.diff(u[i], (x, y)[j]) + sym.diff(u[j], (x, y)[i])) / 2)
    D = EX1_MATERIAL.membrane_scale
    N = D * eps  # nu = 0
    Mb = -EX1_MATERIAL.bending_scale * c[2] * sym.hessian(w, (x, y))
    divN = sym.Matrix([sym.diff(N[i, 0], x) + sym.diff(N[i, 1], y) for i in range(2)])
    ddM = sum(sym.diff(Mb[i, j], (x, y)[i], (x, y)[j]) for i in range(2) for j in range(2))
    pts = np.array([[-0.3, 0.4], [-0.9, -0.1]])
    for k, (a, b) in enumerate(pts):
        sub = {x: a, y: b}
        assert np.allclose(pe.N(pts)[k], np.array(N.subs(sub), dtype=float), rtol=1e-12)
        assert np.allclose(pe.M(pts)[k], np.array(Mb.subs(sub), dtype=float), rtol=1e-12)
        fu, f3 = pe.load(pts)
        assert np.allclose(fu[k], -np.array(divN.subs(sub), dtype=float).ravel(), rtol=1e-12)
        assert f3[k] == pytest.approx(-float(ddM.subs(sub)), rel=1e-12)


def test_exact_solution_vanishes_on_clamped_edge(ex1_exact):
    pts = np.column_stack([np.full(5, -1.0), np.linspace(-1, 1, 5)])
    u, u3 = ex1_exact.plates[0].displacement(pts)
    assert np.allclose(u, 0) and np.allclose(u3, 0)


def test_interpolation_orders(ex1_exact):
    errs = []
    for level in (2, 3):
        spaces = CoupledSpaces(mesh_at_level(*example1_descriptors(), 2, level))
        sol = FieldSolution(spaces, interpolate_stresses(spaces, ex1_exact), np.zeros(spaces.n_v))
        errs.append(compute_errors(sol, ex1_exact))
    for p in range(2):
        order = {k: np.log2(errs[0][p][k] / errs[1][p][k]) for k in ("N_L2", "N_Hdiv", "M_L2", "M_Hdivdiv")}
        assert order["N_L2"] == pytest.approx(4.0, abs=0.15)
        assert order["N_Hdiv"] == pytest.approx(3.0, abs=0.15)
        assert order["M_L2"] == pytest.approx(5.0, abs=0.15)
        assert order["M_Hdivdiv"] == pytest.approx(3.0, abs=0.15)


def test_example1_coarse_orders(ex1_report):
    targets = {"N_L2": 4, "u_L2": 3, "N_Hdiv": 3, "u3_L2": 3, "M_Hdivdiv": 3}
    for p in range(2):
        for name, want in targets.items():
            assert ex1_report.orders(p, name)[-1] == pytest.approx(want, abs=0.3)
        assert ex1_report.orders(p, "M_L2")[-1] > 4.7


def test_example1_errors_decrease(ex1_report):
    for p in range(2):
        for name in ERROR_NAMES:
            e = [r.errors[p][name] for r in ex1_report.results]
            assert all(a > b > 0 for a, b in zip(e, e[1:]))


def test_example1_residuals(ex1_report):
    for r in ex1_report.results:
        assert r.diagnostics["relative_residual"] <= 1e-10
        assert r.diagnostics["full_relative_residual"] <= 1e-10


def test_example2_equilibrium(ex2_results):
    for r in ex2_results:
        assert r.diagnostics["reaction_Z"] == pytest.approx(1.0, rel=1e-6)


def test_example2_mirror_symmetry(ex2_results):
    for r in ex2_results:
        assert r.probes["B"] == pytest.approx(r.probes["C"], rel=5e-3)


def test_example2_close_to_reference(ex2_results):
    for name in PROBE_X:
        assert ex2_results[-1].probes[name] == pytest.approx(EX2_REFERENCE["converged"], rel=5e-3)


def test_example2_probe_lookup(ex2_results, roof):
    mesh = mesh_at_level(*roof.descriptors(), 3, 1)
    spaces = CoupledSpaces(mesh)
    sol = FieldSolution(spaces, np.zeros(spaces.n_sigma), np.ones(spaces.n_v))
    # a vertex shared by several triangles returns the common value
    assert evaluate_dg(sol, 1, "u3", roof.probe_chart_point(1 / 3))[0] == pytest.approx(1.0)
    with pytest.raises(ValueError):
        evaluate_dg(sol, 1, "u3", np.array([0.5, 0.5]))


def test_roof_embedding_is_continuous(roof):
    y = np.linspace(0, 1, 4)
    ridge_s = roof.embed(0, np.column_stack([np.zeros(4), y]))
    ridge_t = roof.embed(1, np.column_stack([np.zeros(4), -y]))
    assert np.allclose(ridge_s, ridge_t)
    clamped = roof.embed(0, np.column_stack([np.full(4, -roof.width), y]))
    assert np.allclose(clamped[:, 1:], 0.0)
    eave = roof.embed(1, np.column_stack([np.full(4, -roof.width), -y]))
    assert np.allclose(eave[:, 1], 2 * roof.width * np.cos(roof.alpha))
    assert np.allclose(eave[:, 2], 0.0)
