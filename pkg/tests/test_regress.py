import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from symgap import groups as g
from symgap import regress as rg
from symgap import theory as th


def _penrose_defects(A, Ap):
    return (np.abs(A @ Ap @ A - A).max(), np.abs(Ap @ A @ Ap - Ap).max(),
            np.abs((A @ Ap).T - A @ Ap).max(), np.abs((Ap @ A).T - Ap @ A).max())


@pytest.mark.parametrize("shape", [(5, 3), (3, 7), (6, 6)])
def test_pinv_penrose_equations(shape, rng):
    A = rng.standard_normal(shape)
    assert max(_penrose_defects(A, rg.pinv(A))) <= 1e-10
    np.testing.assert_allclose(rg.pinv(A), np.linalg.pinv(A), atol=1e-10)


def test_pinv_rank_deficient(rng):
    A = rng.standard_normal((6, 2)) @ rng.standard_normal((2, 5))
    Ap = rg.pinv(A)
    assert max(_penrose_defects(A, Ap)) <= 1e-9
    assert np.linalg.matrix_rank(Ap) == 2


def test_pinv_stacked(rng):
    A = rng.standard_normal((4, 3, 5))
    got = rg.pinv(A)
    for i in range(4):
        np.testing.assert_allclose(got[i], np.linalg.pinv(A[i]), atol=1e-10)


def test_min_norm_solution(rng):
    X, Y = rng.standard_normal((3, 8)), rng.standard_normal((3, 2))
    W = rg.min_norm_least_squares(X, Y)
    np.testing.assert_allclose(X @ W, Y, atol=1e-10)          # interpolates
    # any other interpolant differs by a null-space component and is longer
    null = np.linalg.svd(X)[2][3:].T
    other = W + null @ rng.standard_normal((5, 2))
    assert np.linalg.norm(other) > np.linalg.norm(W)
    y = rng.standard_normal(3)
    np.testing.assert_allclose(rg.min_norm_least_squares(X, y), W_vec := np.linalg.lstsq(X, y, rcond=None)[0],
                               atol=1e-10)
    assert W_vec.shape == (8,)


def test_least_squares_optimal_when_overdetermined(rng):
    X, Y = rng.standard_normal((30, 4)), rng.standard_normal((30, 2))
    W = rg.min_norm_least_squares(X, Y)
    base = np.sum((Y - X @ W) ** 2)
    for _ in range(20):
        assert np.sum((Y - X @ (W + 1e-3 * rng.standard_normal(W.shape))) ** 2) >= base


@settings(max_examples=50, deadline=None)
@given(arrays(float, st.tuples(st.integers(1, 6), st.integers(1, 6)),
              elements=st.floats(-100, 100, allow_nan=False, allow_subnormal=False)))
def test_pinv_penrose_property(A):
    Ap = rg.pinv(A)
    s = np.linalg.svd(A, compute_uv=False)
    kept = s[s > max(A.shape) * np.finfo(float).eps * s[0]] if s[0] > 0 else s[:0]
    cond = kept[0] / kept[-1] if len(kept) else 1.0
    tol = 1e-12 * cond * max(A.shape)
    d1, d2, d3, d4 = _penrose_defects(A, Ap)
    assert d1 <= tol * (1 + np.abs(A).max())
    assert d2 <= tol * (1 + np.abs(Ap).max())
    assert d3 <= tol * cond and d4 <= tol * cond


def test_trial_rng_counter_based():
    a = rg.trial_rng(7, 3, 2).standard_normal(4)
    assert np.array_equal(a, rg.trial_rng(7, 3, 2).standard_normal(4))
    assert not np.array_equal(a, rg.trial_rng(7, 3, 1).standard_normal(4))


def _perm_task(m, n, seed=0):
    perm = g.permutation_rep(g.SymmetricGroup(m))
    return rg.make_task(perm, g.trivial_rep(perm.group), n, seed=seed)


def test_trial_gaps_independent_of_batching():
    task = _perm_task(4, 9, seed=3)
    full = rg.trial_gaps(task, 2100)
    np.testing.assert_array_equal(full[:10], rg.trial_gaps(task, 10))
    np.testing.assert_array_equal(full, rg.trial_gaps(task, 2100))


def test_make_task_target_is_equivariant():
    task = _perm_task(5, 3, seed=11)
    assert np.linalg.norm(task.Theta) == pytest.approx(1.0)
    assert np.abs(task.projector.complement(task.Theta)).max() <= 1e-12


def test_task_rejects_bad_target():
    R = g.reflection_rep(g.CyclicGroup(2), 3)
    with pytest.raises(th.NotEquivariantError):
        rg.RegressionTask(R, g.trivial_rep(R.group), 4, np.array([1.0, 0, 0]))


def test_no_equivariant_target():
    S3 = g.SymmetricGroup(3)
    with pytest.raises(rg.NoEquivariantTargetError):
        rg.sample_equivariant_target(g.trivial_rep(S3), g.sign_rep(S3), 1.0)


def test_empirical_gap_equals_held_out_gap():
    """The fresh-sample risk difference reproduces sigma_x^2 ||W_perp||^2."""
    task = rg.make_task(g.reflection_rep(g.CyclicGroup(2), 5), g.trivial_rep(g.CyclicGroup(2)), 3,
                        sigma_x=1.5, seed=1)
    X, Y = rg.draw_data(task, 0)
    W = rg.min_norm_least_squares(X, Y)
    est, se = rg.held_out_gap(W, task, 400_000, np.random.default_rng(2))
    exact = rg.empirical_gap(W, task.projector, task.sigma_x)
    assert abs(est - exact) <= 4 * se


def test_averaged_estimator_never_worse():
    task = _perm_task(4, 3, seed=4)
    proj = task.projector
    for t in range(50):
        X, Y = rg.draw_data(task, t)
        W = rg.min_norm_least_squares(X, Y)
        risk = lambda V: np.sum((V - task.Theta) ** 2)   # isotropic excess risk
        assert risk(proj.project(W)) <= risk(W) + 1e-12


@pytest.mark.parametrize("n", [3, 14])
def test_small_gap_experiment_matches_theory(n):
    row = rg.run_gap_experiment(_perm_task(5, n, seed=5), trials=4000)
    assert row.passed, row.as_record()


def test_equivariant_gap_experiment_k_outputs():
    perm = g.permutation_rep(g.CyclicGroup(4))
    task = rg.make_task(perm, perm, 2, sigma_xi=0.5, seed=6)
    row = rg.run_gap_experiment(task, trials=4000)
    assert row.passed, row.as_record()


def test_threshold_row_not_judged():
    row = rg.run_gap_experiment(_perm_task(4, 4), trials=50)
    assert row.regime == th.THRESHOLD and row.passed is None
    rec = row.as_record()
    assert rec["predicted_gap"] == "inf" and set(rec) == set(rg.REPORT_COLUMNS)


def test_trivial_group_sweep_predicts_zero():
    G = g.trivial_group()
    task = rg.make_task(g.trivial_rep(G, 4), g.trivial_rep(G), 2, seed=0)
    rep = rg.sweep_over_n(task, [1, 2, 8], trials=20)
    assert all(r.predicted.value == 0.0 for r in rep.rows)
    assert all(r.empirical_gap_mean == 0.0 for r in rep.rows)
    assert rep.passed


def test_wishart_oracle_small():
    res = rg.wishart_pseudoinverse_oracle(12, 4, trials=3000, seed=1)
    assert res.passed()
    assert rg.wishart_pseudoinverse_oracle(4, 4, trials=10).passed() is None


def test_projection_random_lines_in_plane():
    # P = u u^T with u uniform on the circle: E[u1^2 u2^2] = 1/8
    res = rg.projection_moment_oracle(1, 2, trials=20_000, seed=1)
    assert res.closed_form == pytest.approx((1 / 8, 1 / 8, 1 / 8))
    assert res.passed()
    th_ = np.linspace(0, 2 * np.pi, 200_001)[:-1]
    assert np.mean(np.cos(th_) ** 2 * np.sin(th_) ** 2) == pytest.approx(1 / 8, abs=1e-12)


def test_projection_closed_form_consistency():
    for n, d in [(1, 3), (2, 5), (4, 9)]:
        a, b, c = rg.projection_moment_closed_form(n, d)
        T = rg.isotropic_tensor(d, a, b, c)
        # contracting c = e gives E[P tr P] = n E[P] = n^2/d I
        np.testing.assert_allclose(np.einsum("abcc->ab", T), n * n / d * np.eye(d), atol=1e-14)
        # contracting b = c gives E[P P] = E[P] = n/d I
        np.testing.assert_allclose(np.einsum("abbe->ae", T), n / d * np.eye(d), atol=1e-14)


def test_rademacher_trivial_and_pointwise():
    phi = g.permutation_rep(g.SymmetricGroup(4))
    res = rg.rademacher_experiment(1.0, phi, 8, mc_sigma=50, mc_data=50, seed=0)
    assert res.pointwise_contraction and res.sandwich_holds()
    assert 0 <= res.averaged <= res.full
    triv = rg.rademacher_experiment(1.0, g.trivial_rep(g.trivial_group(), 4), 8, mc_sigma=20, mc_data=20)
    assert triv.reduction == 0.0 and triv.antisymmetric == 0.0


def test_rademacher_scales_with_radius():
    phi = g.reflection_rep(g.CyclicGroup(2), 3)
    a = rg.rademacher_experiment(1.0, phi, 5, 30, 30, seed=2)
    b = rg.rademacher_experiment(2.5, phi, 5, 30, 30, seed=2)
    assert b.full == pytest.approx(2.5 * a.full)
