import numpy as np
import pytest

from uncert.bounds import Relation
from uncert.errors import BadStep, UnsupportedRelation
from uncert.optimize import (GapObjective, axis_distance, bloch_grid_scan, bloch_state,
                             bloch_zeta, minimize_gap, nearest_family, nelder_mead)
from uncert.states import random_state


def test_nelder_mead_quadratic():
    x, fx, it, conv = nelder_mead(lambda v: float(np.sum((v - 1.5) ** 2)), np.zeros(3))
    assert conv
    assert np.allclose(x, 1.5, atol=1e-6)
    assert fx < 1e-12


def test_nelder_mead_rosenbrock():
    def rosen(v):
        return float((1 - v[0]) ** 2 + 100 * (v[1] - v[0] ** 2) ** 2)
    x, fx, _, _ = nelder_mead(rosen, np.array([-1.2, 1.0]), max_iter=5000)
    assert np.allclose(x, 1.0, atol=1e-5)


def test_nelder_mead_respects_max_iter():
    _, _, it, conv = nelder_mead(lambda v: float(np.sum(v ** 2)), np.ones(4), max_iter=10)
    assert it == 10 and not conv


@pytest.mark.parametrize("relation, kwargs", [
    (Relation.EQ3, {"d": 2}),
    (Relation.EQ20, {"d": 2, "d_b": 2}),
    (Relation.EQ24, {"d": 3}),
])
def test_objective_rejects_unsupported(relation, kwargs):
    with pytest.raises(UnsupportedRelation):
        GapObjective(relation, **kwargs)


def test_objective_state_is_valid():
    obj = GapObjective(Relation.EQ22, 2, 2)
    st = obj.state(np.random.default_rng(0).standard_normal(obj.n_params))
    assert st.dims == (2, 2)
    assert obj(np.ones(obj.n_params)) >= -1e-9


def test_minimize_gap_is_deterministic():
    obj = GapObjective(Relation.EQ24, 2)
    a = minimize_gap(obj, seed=7, restarts=2, max_iter=300)
    b = minimize_gap(obj, seed=7, restarts=2, max_iter=300)
    assert a.best_gap == b.best_gap
    assert np.array_equal(a.best_params, b.best_params)


def test_minimize_gap_stops_at_target():
    res = minimize_gap(GapObjective(Relation.EQ20, 2), seed=1, restarts=5, target=1e-6)
    assert res.restarts_used == 1
    assert res.best_gap <= 1e-6


def test_eq24_minimum_diagonal_in_mub():
    res = minimize_gap(GapObjective(Relation.EQ24, 2), seed=3, restarts=3, target=1e-8)
    dist, _ = nearest_family(res.best_state, "corollary3")
    assert res.best_gap <= 1e-8
    assert dist < 1e-2


def test_bloch_zeta_zero_on_axes():
    pts = np.array([[0.3, 0, 0], [0, -0.7, 0], [0, 0, 1.0], [0, 0, 0]])
    assert np.all(np.abs(bloch_zeta(pts)) < 1e-12)


def test_bloch_zeta_positive_off_axis():
    assert bloch_zeta(np.array([0.5, 0.5, 0.5])) > 1e-3


def test_bloch_grid_shape_and_step_checks():
    grid = bloch_grid_scan(0.1)
    assert grid.shape[1] == 4
    assert np.all(np.linalg.norm(grid[:, :3], axis=1) <= 1 + 1e-12)
    for bad in (0.0, 0.2, -0.1):
        with pytest.raises(BadStep):
            bloch_grid_scan(bad)


def test_axis_distance():
    assert np.isclose(axis_distance(np.array([0.3, 0.4, 0.0])), 0.3)


def test_bloch_state_matches_zeta():
    from uncert.bounds import eval_relation
    r = (0.2, -0.3, 0.4)
    gap = eval_relation(Relation.EQ24, bloch_state(r)).gap
    assert abs(gap - float(bloch_zeta(np.array(r)))) < 1e-12


def test_nearest_family_exact_member():
    rho = np.zeros((4, 4), dtype=complex)
    rho[2, 2] = 1
    from uncert.states import QState
    dist, member = nearest_family(QState(rho, (4,)), "thm4")
    assert dist < 1e-12
    assert "s=1" in member


def test_nearest_family_unknown():
    with pytest.raises(ValueError):
        nearest_family(random_state((2,), seed=0), "nope")
