import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from plate_junction.constraints import (
    ConstraintSet,
    LinearConstraint,
    all_constraints,
    corner_constraints,
    free_boundary_constraints,
    junction_constraints,
    reduce,
)
from plate_junction.dofs import CoupledSpaces
from plate_junction.errors import GeometryError, InconsistentConstraints
from plate_junction.experiments import interpolate_stresses


@pytest.fixture(scope="module")
def spaces1(ex1_mesh1):
    return CoupledSpaces(ex1_mesh1)


def test_small_elimination():
    rows = [
        LinearConstraint({0: 1.0, 1: 1.0}, 1.0),
        LinearConstraint({1: 1.0, 2: -1.0}, 0.0),
        LinearConstraint({0: 1.0, 2: 1.0}, 1.0),  # sum of the first two
    ]
    cs = reduce(ConstraintSet(4, rows))
    red = cs.reduction
    assert len(red.slaves) == 2 and len(red.masters) == 2
    for y in np.random.default_rng(0).standard_normal((5, 2)):
        assert cs.residual(red.expand(y)) <= 1e-14


def test_inconsistent_rows_are_reported():
    rows = [LinearConstraint({0: 1.0, 1: 1.0}, 1.0), LinearConstraint({0: 2.0, 1: 2.0}, 3.0, "bad")]
    with pytest.raises(InconsistentConstraints, match="bad"):
        reduce(ConstraintSet(3, rows))


@given(st.integers(0, 2**32 - 1), st.integers(1, 12))
@settings(max_examples=40, deadline=None)
def test_random_consistent_systems(seed, m):
    rng = np.random.default_rng(seed)
    n = 20
    xs = rng.standard_normal(n)
    rows = []
    for _ in range(m):
        idx = rng.choice(n, size=rng.integers(1, 5), replace=False)
        terms = {int(j): float(rng.standard_normal()) for j in idx}
        rows.append(LinearConstraint(terms, float(sum(v * xs[j] for j, v in terms.items()))))
    # a redundant combination of two rows
    if m > 1:
        comb = dict(rows[0].terms)
        for j, v in rows[1].terms.items():
            comb[j] = comb.get(j, 0.0) + 2.0 * v
        rows.append(LinearConstraint(comb, rows[0].rhs + 2.0 * rows[1].rhs))
    cs = reduce(ConstraintSet(n, rows))
    red = cs.reduction
    assert len(red.masters) + len(red.slaves) == n
    y = rng.standard_normal(len(red.masters))
    assert cs.residual(red.expand(y)) <= 1e-9 * (1 + np.abs(xs).max())


def test_junction_row_count(spaces1):
    cs = junction_constraints(spaces1, np.pi / 2)
    assert len(cs) == 17 * len(spaces1.mesh.junction_pairing)


def test_junction_angle_checked(spaces1):
    with pytest.raises(GeometryError):
        junction_constraints(spaces1, 0.0)


def test_corner_rows_for_example1(spaces1):
    cs = corner_constraints(spaces1, np.pi / 2)
    # both ends of the junction, a sin row and a cos row each
    assert len(cs) == 4


def test_corner_sin_row_dropped_when_flat(spaces1):
    assert len(corner_constraints(spaces1, np.pi - 1e-14)) == 2


def test_free_rows_vanish_without_data(spaces1):
    cs = free_boundary_constraints(spaces1)
    assert all(c.rhs == 0.0 for c in cs.constraints)


def test_interpolant_satisfies_collocated_rows(spaces1, ex1_exact):
    # N and M_nn rows sample traces at DOF points, so the canonical
    # interpolant of the exact fields satisfies them up to round-off
    cs = all_constraints(spaces1, ex1_exact.theta, free_data=ex1_exact, junction_data=ex1_exact, corner_data=ex1_exact)
    sigma = interpolate_stresses(spaces1, ex1_exact)
    picked = [c for c in cs.constraints if c.label.startswith(("free N", "free M_nn", "jM", "jNnt", "corner", "free corner"))]
    sub = ConstraintSet(cs.n_dofs, picked)
    scale = max(1.0, max(abs(c.rhs) for c in picked))
    assert sub.residual(sigma) <= 1e-9 * scale


def test_full_reduction_is_consistent(spaces1, ex1_exact):
    cs = reduce(all_constraints(spaces1, ex1_exact.theta, free_data=ex1_exact, junction_data=ex1_exact, corner_data=ex1_exact))
    red = cs.reduction
    y = np.random.default_rng(3).standard_normal(len(red.masters))
    scale = max(1.0, max(abs(c.rhs) for c in cs.constraints))
    assert cs.residual(red.expand(y)) <= 1e-10 * scale * (1 + np.abs(red.Z).max())
