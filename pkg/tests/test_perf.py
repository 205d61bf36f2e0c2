import itertools
import math

import numpy as np
import pytest

from inputsel.graph import GraphError, erdos_renyi, grounded_laplacian, named_graph
from inputsel.numerics import expm
from inputsel.perf import (
    ConvergenceParams,
    KalmanSetup,
    SingularLaplacianError,
    commute_time_mc,
    convergence_bound,
    kalman_log_det,
    kalman_posterior_cov,
    node_noise_variance,
    noise_variance,
    total_convergence_bound,
    walk_transition,
)
from inputsel.simulate import containment_error, simulate_weighted_consensus
from inputsel.verify import check_modularity, check_monotone, random_connected_graph, subset_values

LN2 = math.log(2)


def test_noise_examples():
    assert noise_variance(named_graph("path", 2), {1}) == pytest.approx(1.0)
    assert noise_variance(named_graph("star", 5), {0}) == pytest.approx(4.0)
    assert node_noise_variance(named_graph("path", 2), {1}, 0) == pytest.approx(1.0)
    assert node_noise_variance(named_graph("path", 3), {2}, 0) == pytest.approx(2.0)
    assert node_noise_variance(named_graph("ring", 4), {0}, 2) == pytest.approx(1.0)


def test_noise_errors():
    g = named_graph("ring", 4)
    with pytest.raises(SingularLaplacianError):
        noise_variance(g, set())
    two = erdos_renyi(4, 0.0, seed=0)
    with pytest.raises(SingularLaplacianError):
        noise_variance(two, {0})
    with pytest.raises(GraphError):
        node_noise_variance(g, {0}, 0)
    with pytest.raises(GraphError):
        noise_variance(named_graph("ring", 4, directed=True), {0})


def test_ring10_antipodal_is_best_pair(ring10):
    vals = {v: noise_variance(ring10, {0, v}) for v in range(1, 10)}
    assert min(vals, key=vals.get) == 5
    best = min(noise_variance(ring10, set(p)) for p in itertools.combinations(range(10), 2))
    assert vals[5] == pytest.approx(best, abs=1e-12)


def test_noise_supermodular_and_strictly_decreasing(rng):
    for _ in range(20):
        g = random_connected_graph(rng, 3, 8)
        vals = subset_values(lambda s: noise_variance(g, s), g.n, skip_empty=True)
        assert check_modularity("noise", vals, g.n, "super", {}, nonempty=True).passed
        assert check_monotone("noise", vals, g.n, True, {}, strict=True).passed


def test_kalman_empty_set_is_prior(rng):
    c = np.cov(rng.standard_normal((3, 50))) + 0.1 * np.eye(3)
    setup = KalmanSetup(rng.standard_normal((3, 3)), c, 1.0, 0)
    assert kalman_log_det(setup, []) == pytest.approx(np.linalg.slogdet(c)[1])


def test_kalman_scalar_oracle():
    setup = KalmanSetup([[1.0]], [[1.0]], 1.0, 1)
    # z = (x0, w0) ~ N(0, I); y0 = x0 + v0, y1 = x0 + w0 + v1
    o = np.array([[1.0, 0.0], [1.0, 1.0]])
    prior = np.eye(2)
    info = np.linalg.inv(prior) + o.T @ o
    want = -np.linalg.slogdet(info)[1]
    assert kalman_log_det(setup, {0}) == pytest.approx(want, abs=1e-12)
    assert np.allclose(np.linalg.inv(kalman_posterior_cov(setup, {0})), info)


def test_kalman_monotone_supermodular(rng):
    for _ in range(10):
        a = rng.standard_normal((4, 4)) * 0.5
        m = rng.standard_normal((4, 4))
        setup = KalmanSetup(a, m @ m.T + np.eye(4), float(rng.uniform(0.2, 2)), int(rng.integers(0, 3)))
        vals = subset_values(lambda s: kalman_log_det(setup, s), 4)
        assert check_modularity("kalman", vals, 4, "super", {}).passed
        assert check_monotone("kalman", vals, 4, True, {}).passed
    for _ in range(10):
        setup = KalmanSetup(rng.standard_normal((3, 3)))
        assert kalman_log_det(setup, {0}) <= kalman_log_det(setup, set())


def test_kalman_validation():
    with pytest.raises(ValueError):
        KalmanSetup(np.eye(2), sigma2=0.0)
    with pytest.raises(ValueError):
        KalmanSetup(np.eye(2), np.eye(3), horizon=1)


def test_convergence_examples():
    g = erdos_renyi(6, 0.6, seed=4)
    p = ConvergenceParams(t=1.0, delta=0.1, p=2.0)
    assert p.tau == 10
    assert convergence_bound(g, range(6), p) == 0.0
    zero = ConvergenceParams(delta=0.1, p=1.5, horizon_steps=0)
    assert convergence_bound(g, {1, 2}, zero) == pytest.approx(2 * 4)
    one = ConvergenceParams(delta=LN2, p=1.0, horizon_steps=1)
    assert convergence_bound(named_graph("path", 2), {1}, one) == pytest.approx(1.0)


def test_convergence_params_validation():
    with pytest.raises(ValueError):
        ConvergenceParams(delta=0.0)
    with pytest.raises(ValueError):
        ConvergenceParams(p=0.5)


def test_convergence_supermodular(rng):
    for _ in range(15):
        g = random_connected_graph(rng, 3, 7)
        for tau in (1, 2, 4):
            for p in (1.0, 2.0):
                cp = ConvergenceParams(delta=0.1 / g.degrees().max(), p=p, horizon_steps=tau)
                vals = subset_values(lambda s: convergence_bound(g, s, cp), g.n)
                assert check_modularity("conv", vals, g.n, "super", {}).passed


def test_total_bound_geometric_series():
    params = ConvergenceParams(delta=LN2, p=1.0)
    tb = total_convergence_bound(named_graph("path", 2), {1}, params, horizon=30)
    # g_00 = h_0 = 2^-k at step k
    want = LN2 * sum(2 * 0.5 ** k for k in range(31))
    assert tb.value == pytest.approx(want, rel=1e-12)
    assert not tb.capped
    auto = total_convergence_bound(named_graph("path", 2), {1}, params)
    assert auto.value == pytest.approx(LN2 * 4, rel=1e-5)
    assert total_convergence_bound(named_graph("ring", 3), range(3), params).value == 0.0
    capped = total_convergence_bound(named_graph("path", 5), {4}, ConvergenceParams(delta=1e-3), max_steps=5)
    assert capped.capped


def test_total_bound_partial_sums_nondecreasing():
    g = erdos_renyi(7, 0.5, seed=1)
    params = ConvergenceParams(delta=0.05, p=2.0)
    sums = [total_convergence_bound(g, {0}, params, horizon=k).value for k in range(0, 40, 5)]
    assert all(b >= a for a, b in zip(sums, sums[1:]))


def test_bound_dominates_simulated_containment(rng):
    """Sum of dist^p stays below K^p times the bound, K = initial spread."""
    checked = 0
    while checked < 100:
        g = erdos_renyi(8, float(rng.uniform(0.3, 0.7)), seed=int(rng.integers(2**32)))
        if not g.is_connected():
            continue
        s = sorted(rng.choice(8, size=int(rng.integers(1, 4)), replace=False).tolist())
        p = float(rng.choice([1.0, 2.0, 3.0]))
        delta = 0.1 / g.degrees().max()
        xl = rng.uniform(-1, 1, len(s))
        x0 = rng.uniform(-3, 3, 8)
        x0[s] = xl
        k = x0.max() - x0.min()
        traj = simulate_weighted_consensus(g, s, xl, x0, delta, delta * 40)
        for tau in (0, 5, 20, 40):
            bound = convergence_bound(g, s, ConvergenceParams(delta=delta, p=p, horizon_steps=tau))
            ft = containment_error(traj.states[tau], s, xl, p)
            assert ft ** (1 / p) <= k * bound ** (1 / p) + 1e-9
        checked += 1


def test_commute_deterministic_path():
    est = commute_time_mc(named_graph("path", 2), {1}, 0, walks=1000, seed=1)
    assert est.mean == 2.0 and est.stderr == 0.0 and est.failures == 0


def _hitting(p, targets):
    rest = [v for v in range(len(p)) if v not in targets]
    a = np.eye(len(rest)) - p[np.ix_(rest, rest)]
    h = np.zeros(len(p))
    h[rest] = np.linalg.solve(a, np.ones(len(rest)))
    return h


def test_commute_ring4_oracle():
    g = named_graph("ring", 4)
    p = walk_transition(g)
    to_s = _hitting(p, {0})[2]
    back = _hitting(p, {2})[0]
    est = commute_time_mc(g, {0}, 2, walks=40_000, seed=7)
    assert abs(est.mean - (to_s + back)) <= 3 * est.stderr


def test_commute_ratio_constant(rng):
    g = random_connected_graph(rng, 5, 7)
    s = [0]
    ratios = [commute_time_mc(g, s, u, 100_000, seed=u).mean / node_noise_variance(g, s, u)
              for u in range(1, g.n)]
    assert (max(ratios) - min(ratios)) / np.mean(ratios) <= 0.05
    assert np.mean(ratios) == pytest.approx(2 * g.num_edges, rel=0.03)


def test_commute_step_cap_failure():
    est = commute_time_mc(named_graph("path", 3), {2}, 0, walks=200, seed=0, max_steps=1)
    assert est.failures == 200
