import itertools
import math

import numpy as np
import pytest
from scipy.integrate import simpson

from inputsel.controllability import (
    EnergyModel,
    EnergyTarget,
    GramianSingularError,
    LinearSystem,
    avg_energy,
    ctrb_rank,
    gci,
    gramian_metrics,
    h2_norm,
    min_energy_metric,
    min_input_set_structural,
    structural_report,
    system_from_graph,
)
from inputsel.graph import Graph, named_graph
from inputsel.numerics import expm
from inputsel.verify import check_modularity, check_monotone, random_digraph, subset_values


def test_ctrb_rank_examples():
    sys = LinearSystem(np.array([[0.0, 1.0], [1.0, 0.0]]))
    assert ctrb_rank(sys, set()) == 0
    assert ctrb_rank(sys, {0, 1}) == 2
    assert ctrb_rank(sys, {0}) == 2


def test_ctrb_rank_actuated_submodular(rng):
    for _ in range(25):
        w = rng.standard_normal((5, 5)) * (rng.random((5, 5)) < 0.4)
        sys = LinearSystem(w)
        vals = subset_values(lambda s: ctrb_rank(sys, s), 5)
        assert check_modularity("rank", vals, 5, "sub", {}, 0.0).passed
        assert check_monotone("rank", vals, 5, False, {}).passed


def test_gramian_metrics_decoupled():
    sys = LinearSystem(-np.eye(4), variant="grounded")
    # grounded at {2, 3}: A = -I (2x2), B = W[F, S] = 0
    with pytest.raises(GramianSingularError):
        gramian_metrics(sys, {2, 3})
    act = LinearSystem(-np.eye(2))
    h2, energy = gramian_metrics(act, {0, 1})
    assert h2 == pytest.approx(1.0)
    assert energy == pytest.approx(4.0)


def test_gramian_quadrature_path():
    g = named_graph("path", 3)
    sys = system_from_graph(g, "laplacian", variant="grounded")
    a, b = sys.matrices({2})
    ts = np.linspace(0, 60, 12001)
    vals = np.array([expm(a * t) @ b @ b.T @ expm(a.T * t) for t in ts])
    w = simpson(vals, x=ts, axis=0)
    h2, energy = gramian_metrics(sys, {2})
    assert h2 == pytest.approx(np.trace(w), rel=1e-8)
    assert energy == pytest.approx(np.trace(np.linalg.inv(w)), rel=1e-6)


def test_h2_modular(rng):
    w = rng.standard_normal((5, 5)) - 3 * np.eye(5)
    sys = LinearSystem(w, horizon=(0.0, 2.0))
    single = [h2_norm(sys, {i}, finite=True) for i in range(5)]
    for r in range(6):
        for c in itertools.combinations(range(5), r):
            assert h2_norm(sys, c, finite=True) == pytest.approx(sum(single[i] for i in c), abs=1e-9)


def test_avg_energy_decreasing(rng):
    for _ in range(10):
        a = rng.standard_normal((5, 5))
        a -= (np.linalg.eigvals(a).real.max() + 0.5) * np.eye(5)
        sys = LinearSystem(a)
        for s in itertools.combinations(range(5), 2):
            for v in set(range(5)) - set(s):
                try:
                    base = avg_energy(sys, s)
                except GramianSingularError:
                    continue
                assert avg_energy(sys, set(s) | {v}) <= base * (1 + 1e-9)


def test_min_energy_scalar():
    sys = LinearSystem([[-1.0]], horizon=(0.0, 30.0))
    eps = 1e-3
    val = min_energy_metric(sys, {0}, EnergyTarget([0.0], [1.0], eps))
    gam = (1 - math.exp(-60)) / 2
    assert val == pytest.approx(1 / (gam + eps), rel=1e-6)


def test_min_energy_empty_set(rng):
    n = 4
    sys = LinearSystem(rng.standard_normal((n, n)))
    x0, x1 = rng.standard_normal(n), rng.standard_normal(n)
    eps = 0.05
    model = EnergyModel(sys, EnergyTarget(x0, x1, eps))
    v = model.v
    assert model(set()) == pytest.approx(v @ v / eps + eps * (n - 1) / eps ** 2)


def test_min_energy_basis_invariance(rng):
    n = 4
    sys = LinearSystem(rng.standard_normal((n, n)) - 2 * np.eye(n))
    target = EnergyTarget(rng.standard_normal(n), rng.standard_normal(n), 1e-2)
    model = EnergyModel(sys, target)
    v = model.v / np.linalg.norm(model.v)
    q, _ = np.linalg.qr(np.column_stack([v, rng.standard_normal((n, n - 1))]))
    other = q[:, 1:] @ np.linalg.qr(rng.standard_normal((n - 1, n - 1)))[0]
    alt = EnergyModel(sys, target, basis=other)
    for s in [(), (0,), (1, 3), (0, 1, 2, 3)]:
        assert model(s) == pytest.approx(alt(s), rel=1e-9)


def test_min_energy_zero_v():
    sys = LinearSystem(-np.eye(2), horizon=(0.0, 1.0))
    val = min_energy_metric(sys, {0}, EnergyTarget([0.0, 0.0], [0.0, 0.0], 0.1))
    assert math.isfinite(val) and val > 0


def test_accessibility_example(accessibility_graph):
    rep = structural_report(accessibility_graph, {5})
    assert not rep.accessible
    assert rep.inaccessible == [3, 4]
    assert not rep.controllable
    assert rep.gci == 6


def test_dilation_example(dilation_graph):
    rep = structural_report(dilation_graph, {5})
    assert rep.accessible
    assert not rep.dilation_free
    assert rep.dilation == [0, 2]
    assert rep.dilation_neighbors == [5]


def test_directed_ring_controllable():
    g = named_graph("ring", 4, directed=True)
    rep = structural_report(g, {0})
    assert rep.accessible and rep.dilation_free and rep.controllable
    assert gci(g, {0}) == 4


def test_gci_examples():
    g = named_graph("ring", 5, directed=True)
    assert gci(g, range(5)) == 5
    assert gci(Graph(2, (), directed=True), {0}) == 1


def test_gci_monotone_submodular(rng):
    for _ in range(30):
        g = random_digraph(rng, 2, 6)
        vals = subset_values(lambda s: gci(g, s), g.n)
        assert check_modularity("gci", vals, g.n, "sub", {}, 0.0).passed
        assert check_monotone("gci", vals, g.n, False, {}).passed


def test_report_json_roundtrip(dilation_graph):
    import json
    d = structural_report(dilation_graph, {5}).to_dict()
    assert json.loads(json.dumps(d)) == d


def test_lin_cross_validation_small(rng):
    found = 0
    while found < 30:
        g = random_digraph(rng, 2, 6)
        s = sorted(rng.choice(g.n, size=int(rng.integers(1, g.n)), replace=False).tolist())
        if not structural_report(g, s).controllable:
            continue
        found += 1
        hits = sum(ctrb_rank(system_from_graph(g, "random", rng=int(rng.integers(2**32))), s) == g.n - len(s)
                   for _ in range(100))
        assert hits >= 99


def _brute_min_inputs(g):
    for r in range(1, g.n + 1):
        for c in itertools.combinations(range(g.n), r):
            if structural_report(g, c).controllable:
                return r
    return None


def test_min_inputs_ring():
    for n in (1, 3, 6):
        res = min_input_set_structural(named_graph("ring", n, directed=True))
        assert len(res.inputs) == 1
        assert res.report.controllable


def test_min_inputs_out_star():
    k = 4
    g = named_graph("star", k + 1, directed=True)
    res = min_input_set_structural(g)
    assert res.advisory
    leaves = [v for v in res.inputs if v != 0]
    assert len(leaves) == k - 1
    assert res.report.controllable
    assert len(res.inputs) == _brute_min_inputs(g)


def test_min_inputs_single_node():
    res = min_input_set_structural(Graph(1, (), directed=True))
    assert res.inputs == (0,)


def test_min_inputs_matches_bruteforce_on_strong(rng):
    checked = 0
    while checked < 20:
        g = random_digraph(rng, 2, 6, (0.3, 0.7))
        if not g.is_strongly_connected():
            continue
        res = min_input_set_structural(g)
        assert res.report.controllable
        assert len(res.inputs) == _brute_min_inputs(g)
        checked += 1
