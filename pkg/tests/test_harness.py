import math

import numpy as np
import pytest

from collabknn.core import DatabaseSnapshot, RatingScale
from collabknn.estimator import estimate
from collabknn.harness import (
    Experiment,
    KSchedule,
    convergence_study,
    draw_query,
    l1_error,
    rate_fit,
    replication_error,
    simulate_replication,
)
from collabknn.model import InfeasibleModelError, MultiplicativeModel
from collabknn.reveal import ResponderProcess, RevealProcess


def full_reveal(delta=0.1, seed=11, **kw):
    model = MultiplicativeModel(RatingScale(10.0, 5), delta=delta)
    return Experiment(model, RevealProcess("all_at_once"), ResponderProcess("all"), master_seed=seed, **kw)


def incremental(seed=12):
    model = MultiplicativeModel(RatingScale(10.0, 8), mask_sizes=(4,))
    return Experiment(model, RevealProcess("incremental_4_plus_1"),
                      ResponderProcess("bernoulli_growth", 0.5), master_seed=seed)


def test_schedule_presets():
    full = KSchedule.full_ratings(5)
    assert full.gamma == pytest.approx(1 / 3)
    assert [full(n) for n in (200, 800, 3200)] == [6, 10, 15]
    inc = KSchedule.incremental()
    assert inc.gamma == pytest.approx(0.4)
    assert [inc(n) for n in (200, 800, 3200)] == [9, 15, 26]


def test_schedule_rounding_and_caps():
    assert KSchedule(1.0, 0.5)(10) == 3
    assert KSchedule(1.0, 0.5, "ceil")(10) == 4
    assert KSchedule(5.0, 0.9)(2) == 2
    assert KSchedule(0.01, 0.1)(5) == 1
    for n in range(1, 500):
        assert 1 <= KSchedule(2.0, 0.7)(n) <= n
    with pytest.raises(ValueError):
        KSchedule(1.0, 1.0)
    with pytest.raises(ValueError):
        KSchedule(0.0, 0.5)


def test_rate_fit_exact_power_law():
    f = rate_fit((n, 3.0 * n ** (-1 / 6)) for n in (200, 800, 3200, 12800))
    assert f.slope == pytest.approx(-1 / 6, abs=1e-10)
    assert f.intercept == pytest.approx(math.log(3.0), abs=1e-10)
    assert f.r_squared == pytest.approx(1.0, abs=1e-12)
    f = rate_fit((n, n**-0.2) for n in (10, 100, 1000))
    assert f.slope == pytest.approx(-0.2, abs=1e-12) and f.r_squared == pytest.approx(1.0)


def test_rate_fit_two_points_interpolates():
    f = rate_fit([(100, 0.5), (400, 0.2)])
    assert f.slope == pytest.approx(math.log(0.2 / 0.5) / math.log(4), abs=1e-14)
    assert f.intercept + f.slope * math.log(100) == pytest.approx(math.log(0.5), abs=1e-14)
    assert f.r_squared == pytest.approx(1.0)


@pytest.mark.parametrize("seed", range(10))
def test_rate_fit_jittered_within_bound(seed):
    rng = np.random.default_rng(seed)
    n = np.array([100, 300, 1000, 3000, 10000], dtype=float)
    h = 0.05
    u = rng.uniform(-h, h, n.shape[0])
    f = rate_fit(zip(n, n**-0.25 * np.exp(u)))
    xc = np.log(n) - np.log(n).mean()
    bound = h * np.abs(xc).sum() / (xc * xc).sum()
    assert abs(f.slope + 0.25) <= bound + 1e-12


@pytest.mark.parametrize("pts", [[(1, 1.0)], [(10, 1.0), (10, 2.0)], [(10, 0.0), (20, 1.0)], [(0, 1.0), (5, 1.0)]])
def test_rate_fit_rejects(pts):
    with pytest.raises(ValueError):
        rate_fit(pts)


def test_replication_structure():
    exp = incremental()
    q, db = simulate_replication(exp, 60, 4)
    assert len(q.mask) == 4
    assert db.n == 60 and db.responders[0]
    # user i is n + 1 - i steps old: the newest shows exactly 4 items
    assert db.reveal.sum(axis=1).tolist() == [min(8, 64 - i) for i in range(1, 61)]
    again = draw_query(exp, 4)
    assert again.mask == q.mask and np.array_equal(again.ratings, q.ratings)


def test_fixed_query_mask():
    model = MultiplicativeModel(RatingScale(10.0, 8), mask_sizes=(4, 5))
    exp = Experiment(model, RevealProcess("incremental_4_plus_1"), ResponderProcess("all"),
                     fixed_query_mask={1, 2, 5, 8, 3})
    assert all(draw_query(exp, r).mask == {1, 2, 3, 5, 8} for r in range(5))


def test_deterministic_and_parallel_safe():
    exp = incremental()
    a = l1_error(exp, 100, 5, 12)
    b = l1_error(exp, 100, 5, 12)
    c = l1_error(exp, 100, 5, 12, workers=3)
    assert np.array_equal(a.errors, b.errors) and np.array_equal(a.errors, c.errors)
    assert (a.mean, a.std_err) == (c.mean, c.std_err)


def test_replication_splitting():
    exp = full_reveal()
    whole = l1_error(exp, 80, 3, 30)
    first = l1_error(exp, 80, 3, 20)
    rest = l1_error(exp, 80, 3, 10, start=20)
    assert np.array_equal(whole.errors, np.concatenate([first.errors, rest.errors]))
    assert whole.mean == pytest.approx((20 * first.mean + 10 * rest.mean) / 30, abs=1e-12)


def test_seed_changes_results():
    assert l1_error(full_reveal(seed=1), 50, 2, 5).mean != l1_error(full_reveal(seed=2), 50, 2, 5).mean


def test_exact_directional_duplicate_gives_zero_error():
    exp = full_reveal(delta=0.0)
    for r in range(5):
        q, db = simulate_replication(exp, 50, r)
        raw = np.array(db.raw)
        y = np.array(db.y)
        raw[17] = q.ratings * 1.25  # same direction, still within [1, s]
        y[17] = 1.25 * exp.model.true_eta(q)
        db2 = DatabaseSnapshot(raw, db.reveal, y, db.responders)
        assert estimate(q, db2, 1) == pytest.approx(exp.model.true_eta(q), rel=1e-13)


def test_l2_metric_is_squared_error():
    a = full_reveal(metric="l1")
    b = full_reveal(metric="l2")
    for r in range(4):
        assert replication_error(b, 40, 2, r) == pytest.approx(replication_error(a, 40, 2, r) ** 2)


def test_error_shrinks_with_n():
    exp = full_reveal(seed=5)
    sched = KSchedule.full_ratings(5)
    small = l1_error(exp, 200, sched(200), 200)
    large = l1_error(exp, 3200, sched(3200), 200)
    assert large.mean < small.mean


def test_global_average_worse_than_scheduled_k():
    exp = full_reveal(delta=0.0, seed=6)
    n = 800
    k_sched = KSchedule.full_ratings(5)(n)
    assert l1_error(exp, n, n, 40).mean > l1_error(exp, n, k_sched, 40).mean


def test_convergence_study_rows():
    res = convergence_study(incremental(), [50, 100, 200], KSchedule.incremental(), 6)
    assert [r.n for r in res.rows] == [50, 100, 200]
    assert [r.k for r in res.rows] == [KSchedule.incremental()(n) for n in (50, 100, 200)]
    assert all(r.replications == 6 and r.std_err >= 0 for r in res.rows)
    again = rate_fit((r.n, r.mean_abs_err) for r in res.rows)
    assert again == res.fit
    with pytest.raises(ValueError):
        convergence_study(incremental(), [100, 50], KSchedule.incremental(), 6)


def test_infeasible_experiment_rejected_up_front():
    with pytest.raises(InfeasibleModelError):
        # 2-item entry masks: sqrt(2) * 0.6 * 0.9 < 1
        Experiment(MultiplicativeModel(RatingScale(10.0, 5)), RevealProcess("uniform_batch", b0=2),
                   ResponderProcess("all"))
    with pytest.raises(InfeasibleModelError):
        full_reveal(fixed_query_mask={1, 2})
    with pytest.raises(ValueError):
        l1_error(full_reveal(), 10, 1, 1)
    with pytest.raises(ValueError):
        full_reveal(metric="linf")
