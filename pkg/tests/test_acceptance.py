"""Acceptance criteria, one printed PASS/FAIL line each.

Criteria 3-5 and 8 run both studies up to level 5 (about three minutes and
3 GB of memory with the PARDISO backend).
"""

import time

import numpy as np
import pytest

from _admissible import admissible_pair
from plate_junction.assembly import assemble, measure_infsup, reduced_operator, solve, solve_reduced
from plate_junction.constraints import all_constraints, reduce
from plate_junction.dofs import CoupledSpaces
from plate_junction.elements import ch_element, dg_scalar_p2, dg_vector_p2, hz_element
from plate_junction.experiments import (
    EX2_REFERENCE,
    PROBE_X,
    adjoint_defect,
    example1_descriptors,
    example1_exact,
    run_convergence,
    run_example2,
)
from plate_junction.mesh import build_coupled_mesh, mesh_at_level, refine_uniform
from plate_junction.selftest import SKEWED_TRIANGLE, compatibility_defects, conformity_defects, nodal_residual

LEVELS = [1, 2, 3, 4, 5]


def report(capsys, number, ok, text):
    with capsys.disabled():
        print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {number}: {text}")
    assert ok, text


@pytest.fixture(scope="module")
def ex1():
    t0 = time.perf_counter()
    rep = run_convergence(LEVELS)
    return rep, time.perf_counter() - t0


@pytest.fixture(scope="module")
def ex2():
    return run_example2(LEVELS)


def test_criterion_1_element_self_tests(capsys):
    t0 = time.perf_counter()
    triangles = [SKEWED_TRIANGLE, np.array([[-1.0, -1.0], [-0.5, -1.0], [-1.0, -0.5]]), np.array([[0.0, 0.0], [0.25, -0.25], [0.0, 0.25]])]
    res = {
        "HZ": max(nodal_residual(hz_element(), X) for X in triangles),
        "CH": max(nodal_residual(ch_element(), X) for X in triangles),
    }
    counts = (hz_element().n_dofs, ch_element().n_dofs, dg_vector_p2().n_dofs, dg_scalar_p2().n_dofs)
    dt = time.perf_counter() - t0
    ok = max(res.values()) <= 1e-10 and counts == (30, 45, 12, 6) and dt < 5.0
    report(capsys, 1, ok, f"nodal residual HZ {res['HZ']:.1e}, CH {res['CH']:.1e} (tol 1e-10); DOF counts {counts}; {dt:.2f} s (< 5 s)")


def test_criterion_2_conformity_and_compatibility(capsys):
    jumps = conformity_defects(n_fields=20, level=2, seed=0)
    excess = compatibility_defects()
    ok = max(jumps.values()) <= 1e-9 and max(excess.values()) <= 1e-11
    report(
        capsys,
        2,
        ok,
        f"edge jumps tau n {jumps['HZ']:.1e}, M_nn/T {jumps['CH']:.1e} (tol 1e-9); "
        f"super-P2 content Div {excess['HZ']:.1e}, divDiv {excess['CH']:.1e} (tol 1e-11)",
    )


def test_criterion_3_example1_orders(capsys, ex1):
    rep, seconds = ex1
    targets = {"N_L2": (4.0, 0.15), "u_L2": (3.0, 0.15), "N_Hdiv": (3.0, 0.15), "u3_L2": (3.0, 0.15), "M_Hdivdiv": (3.0, 0.15), "M_L2": (5.0, 0.3)}
    misses, parts = [], []
    for p, plate in enumerate(("S", "S~")):
        for name, (want, tol) in targets.items():
            got = rep.orders(p, name)[-1]
            parts.append(f"{plate}:{name} {got:.2f}")
            if abs(got - want) > tol:
                misses.append(f"{plate}:{name} {got:.2f} vs {want}+-{tol}")
    level5 = rep.results[-1].diagnostics["total_seconds"]
    ok = not misses and level5 < 600
    text = f"orders 4->5 [{', '.join(parts)}]; level 5 in {level5:.0f} s"
    if misses:
        text += f"; outside window: {'; '.join(misses)}"
    report(capsys, 3, ok, text)


def test_criterion_4_example2_displacements(capsys, ex2):
    z = {k: np.array([r.probes[k] for r in ex2]) for k in PROBE_X}
    ref = EX2_REFERENCE["converged"]
    dev = max(abs(z[k][-1] / ref - 1) for k in PROBE_X)
    cauchy_ok = True
    for k in PROBE_X:
        d = np.abs(np.diff(z[k]))  # d[i] = |Z(i+2) - Z(i+1)|
        cauchy_ok &= bool(np.all(np.diff(d[1:]) < 0))
    sym_dev = max(abs(r.probes["B"] / r.probes["C"] - 1) for r in ex2)
    ok = dev <= 5e-3 and cauchy_ok and sym_dev <= 5e-3
    level5 = ", ".join(f"{k} {z[k][-1]:.6e}" for k in PROBE_X)
    report(capsys, 4, ok, f"level 5 [{level5}] max deviation from {ref:.3e} {dev:.2e} (tol 5e-3); Cauchy monotone {cauchy_ok}; B/C {sym_dev:.1e} (tol 5e-3)")


def test_criterion_5_global_equilibrium(capsys, ex2):
    reactions = {r.level: r.diagnostics["reaction_Z"] for r in ex2}
    worst = max(abs(v - 1.0) for lev, v in reactions.items() if lev >= 3)
    report(capsys, 5, worst <= 0.01, f"clamped Z reaction {', '.join(f'L{k} {v:.10f}' for k, v in reactions.items())}; max error on L>=3 {worst:.1e} (tol 1e-2)")


def test_criterion_6_adjoint_identity(capsys):
    exact = example1_exact()
    mesh = mesh_at_level(*example1_descriptors(), 2, 3)
    spaces = CoupledSpaces(mesh)
    cs = reduce(all_constraints(spaces, exact.theta))
    system = assemble(spaces, [p.material for p in exact.plates], load=exact.load, constraints=cs)
    sol = solve(system)
    rel = []
    for seed in range(5):
        lhs, rhs, scale = adjoint_defect(sol, admissible_pair(exact.theta, 1.0, seed))
        rel.append(abs(lhs - rhs) / scale)
    report(capsys, 6, max(rel) <= 1e-7, f"level 3, 5 admissible fields, max relative defect {max(rel):.1e} (tol 1e-7)")


def test_criterion_7_stability_probe(capsys):
    exact = example1_exact()
    mesh = build_coupled_mesh(*example1_descriptors(), 1)
    betas, collapse = [], []
    for level in (1, 2, 3):
        if level > 1:
            mesh = refine_uniform(mesh)
        spaces = CoupledSpaces(mesh)
        cs = reduce(all_constraints(spaces, exact.theta))
        system = assemble(spaces, [p.material for p in exact.plates], constraints=cs)
        b = measure_infsup(system)
        b0 = measure_infsup(system, drop_bubbles=True)
        betas.append(b)
        collapse.append(b0 / b)
    spread = (max(betas) - min(betas)) / max(betas)
    ok = min(betas) > 0 and spread <= 0.2 and max(collapse) <= 0.1
    report(
        capsys,
        7,
        ok,
        f"beta_h {', '.join(f'{b:.5f}' for b in betas)} (variation {spread:.1%}, tol 20%); "
        f"without bubbles ratio {max(collapse):.1e} (need <= 1e-1)",
    )


def test_criterion_8_solver_contract(capsys, ex1, ex2):
    runs = list(ex1[0].results) + list(ex2)
    res = max(r.diagnostics["relative_residual"] for r in runs)
    cres = max(r.diagnostics["constraint_residual"] for r in runs)
    exact = example1_exact()
    spaces = CoupledSpaces(mesh_at_level(*example1_descriptors(), 2, 2))
    cs = reduce(all_constraints(spaces, exact.theta, free_data=exact, junction_data=exact, corner_data=exact))
    K, _ = reduced_operator(assemble(spaces, [p.material for p in exact.plates], load=exact.load, constraints=cs))
    z = np.random.default_rng(2024).standard_normal(K.shape[0])
    got, _, _ = solve_reduced(K, K @ z)
    rt = np.linalg.norm(got - z) / np.linalg.norm(z)
    ok = res <= 1e-10 and cres <= 1e-10 and rt <= 1e-9
    report(capsys, 8, ok, f"{len(runs)} runs: max system residual {res:.1e}, max constraint residual {cres:.1e} (tol 1e-10); round trip {rt:.1e} (tol 1e-9)")
