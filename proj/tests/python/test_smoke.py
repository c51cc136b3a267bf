import itertools

import numpy as np
import pytest

import wassbound as wb


def brute_force(c):
    n = c.shape[0]
    return min(sum(c[i, p[i]] for i in range(n)) for p in itertools.permutations(range(n))) / n


def test_assignment_matches_brute_force():
    rng = np.random.default_rng(1)
    for n in range(2, 7):
        c = rng.normal(size=(n, n))
        sol = wb.solve_assignment(c)
        assert sol.objective == pytest.approx(brute_force(c), rel=1e-12)
        assert sorted(sol.row_to_col) == list(range(n))


def test_three_by_three_example():
    c = np.array([[4.0, 1, 3], [2, 0, 5], [3, 2, 2]])
    assert wb.solve_assignment(c).objective == pytest.approx(5 / 3)


def test_flapjack_matches_deleted_solves():
    rng = np.random.default_rng(2)
    c = rng.uniform(size=(12, 12))
    full, loo = wb.flapjack(c)
    assert full == pytest.approx(wb.solve_assignment(c).objective)
    for j in range(12):
        keep = [k for k in range(12) if k != j]
        assert loo[j] == pytest.approx(wb.solve_assignment(c[np.ix_(keep, keep)]).objective, rel=1e-10)


def test_w2_agrees_with_scipy():
    scipy_opt = pytest.importorskip("scipy.optimize")
    rng = np.random.default_rng(3)
    a, b = rng.normal(size=(30, 4)), rng.normal(size=(30, 4)) + 1.0
    cost = ((a[:, None, :] - b[None, :, :]) ** 2).sum(-1)
    rows, cols = scipy_opt.linear_sum_assignment(cost)
    assert wb.w2_squared(a, b) == pytest.approx(cost[rows, cols].mean(), rel=1e-12)
    x, y = rng.normal(size=(40, 1)), rng.normal(size=(40, 1))
    assert wb.w2_squared_1d(x, y) == pytest.approx(((np.sort(x[:, 0]) - np.sort(y[:, 0])) ** 2).mean())


def test_bounds_shapes_and_identities():
    rng = np.random.default_rng(4)
    nu, mu = 2.0 * rng.normal(size=(20, 3)), rng.normal(size=(20, 3))
    out = wb.estimate_bounds(nu, mu, nu, alpha=0.1)
    assert out["upper"]["value"] == 0.0
    assert out["lower"]["value"] == 0.0
    out = wb.estimate_bounds(nu, mu, rng.normal(size=(20, 3)))
    lo, hi = out["upper"]["ci"]
    assert lo <= out["upper"]["value"] <= hi
    assert out["upper"]["loo_values"].shape == (20,)
    assert out["lower_squared"]["value"] == pytest.approx(np.sign(out["lower"]["value"]) * out["lower"]["value"] ** 2)


def test_jackknife_of_the_mean():
    x = np.random.default_rng(5).normal(size=25)
    loo = (x.sum() - x) / 24
    assert wb.jackknife_variance(loo) == pytest.approx(x.var(ddof=1) / 25, rel=1e-12)


def test_gaussian_oracles():
    assert wb.w2_squared_gaussian(np.zeros(2), np.eye(2), np.zeros(2), np.diag([2.0, 0.25])) == pytest.approx(
        0.25 + (np.sqrt(2) - 1) ** 2, abs=1e-12
    )
    assert wb.check_cot_gaussian(4 * np.eye(3), np.eye(3))
    assert not wb.check_cot_gaussian(np.diag([2.0, 0.25]), np.eye(2))
    h = 0.3
    s = wb.ula_stationary_cov(np.eye(2), h)
    m = np.eye(2) - 0.5 * h * h * np.eye(2)
    assert np.allclose(m @ s @ m.T + h * h * np.eye(2), s, atol=1e-12)
    exact = wb.gibbs_ar1_exact(10, 0.9, 4.0, [0, 10, 100])
    assert exact[0] > exact[1] > exact[2] >= 0.0


def test_ensemble_bounds_run():
    rows = wb.ensemble_bounds("mala", 0.5, dim=4, n_chains=20, horizon=60, thin=2, reference_iteration=60,
                              asymptote=list(range(30, 52, 2)), seed=3)
    assert [r["t"] for r in rows] == list(range(0, 60, 2))
    assert rows[0]["upper"]["value"] > rows[-1]["upper"]["value"]


def test_errors_surface_as_python_exceptions():
    with pytest.raises(ValueError):
        wb.solve_assignment(np.ones((2, 3)))
    with pytest.raises(ValueError):
        wb.ensemble_bounds("hmc", 0.5, 4, 10, 20, 1, 20, [10])
