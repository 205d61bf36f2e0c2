import itertools

import numpy as np
import pytest

from inputsel.controllability import structural_report
from inputsel.graph import named_graph
from inputsel.matching import matching_size_bruteforce
from inputsel.matroids import (
    InfeasibleMatroidError,
    Matroid,
    MatroidAxiomError,
    TransversalInstance,
    check_axioms,
    controllability_matroid,
    transversal_matroid,
    uniform_matroid,
)
from inputsel.verify import random_digraph

EXAMPLE = TransversalInstance({
    1: ["u1", "u2"],
    2: ["u2", "u3", "u4"],
    3: ["u6"],
    4: ["u4", "u5"],
    5: ["u6"],
})


def test_uniform():
    m0 = uniform_matroid(range(4), 0)
    assert m0.is_independent(()) and not m0.is_independent({1})
    full = uniform_matroid(range(4), 4)
    assert full.is_independent(range(4))
    m2 = uniform_matroid(range(5), 2)
    for r in range(6):
        for c in itertools.combinations(range(5), r):
            assert m2.rank(c) == min(r, 2)
    check_axioms(m2)


def test_transversal_example():
    m = transversal_matroid(EXAMPLE)
    assert m.is_independent({1, 2, 5})
    assert not m.is_independent({3, 5})
    assert m.is_independent(())
    check_axioms(m)


def test_transversal_rank_vs_oracle(rng):
    for _ in range(40):
        m = int(rng.integers(1, 9))
        sets = {j: rng.choice(6, size=int(rng.integers(0, 4)), replace=False).tolist() for j in range(m)}
        tm = transversal_matroid(TransversalInstance(sets))
        check_axioms(tm)
        for r in range(m + 1):
            for c in itertools.combinations(range(m), r):
                assert tm.rank(c) == matching_size_bruteforce({j: sets[j] for j in c})


def test_check_axioms_detects_violation():
    # {0,1} and {2} independent but {0},{1} cannot be extended by 2: fails M3
    bad = Matroid(range(3), lambda x: x in (frozenset(), frozenset({0}), frozenset({1}), frozenset({2}),
                                            frozenset({0, 1})))
    with pytest.raises(MatroidAxiomError):
        check_axioms(bad)
    not_m2 = Matroid(range(2), lambda x: len(x) != 1)
    with pytest.raises(MatroidAxiomError):
        check_axioms(not_m2)


def test_controllability_ring():
    m = controllability_matroid(named_graph("ring", 5, directed=True), 1)
    assert all(m.is_independent({v}) for v in range(5))
    assert not any(m.is_independent(p) for p in itertools.combinations(range(5), 2))
    full = controllability_matroid(named_graph("ring", 5, directed=True), 5)
    assert full.is_independent(range(5))


def test_controllability_advisory(dilation_graph):
    m = controllability_matroid(dilation_graph, 4)
    assert m.advisory


def test_controllability_infeasible():
    with pytest.raises(InfeasibleMatroidError):
        controllability_matroid(named_graph("star", 5, directed=True), 2)
    with pytest.raises(InfeasibleMatroidError):
        controllability_matroid(named_graph("ring", 3, directed=True), 0)


def test_controllability_bases_match_bruteforce(rng):
    checked = 0
    while checked < 25:
        g = random_digraph(rng, 2, 7, (0.25, 0.6))
        if not g.is_strongly_connected():
            continue
        for k in range(1, g.n + 1):
            try:
                m = controllability_matroid(g, k)
            except InfeasibleMatroidError:
                assert not any(structural_report(g, c).controllable for c in itertools.combinations(range(g.n), k))
                continue
            check_axioms(m)
            truth = {frozenset(c) for c in itertools.combinations(range(g.n), k)
                     if structural_report(g, c).controllable}
            got = {frozenset(c) for c in itertools.combinations(range(g.n), k) if m.is_independent(c)}
            assert got == truth
        checked += 1


def test_rank_cache_threadsafe():
    from concurrent.futures import ThreadPoolExecutor
    m = transversal_matroid(EXAMPLE)
    subsets = [c for r in range(6) for c in itertools.combinations(range(1, 6), r)] * 4
    with ThreadPoolExecutor(4) as ex:
        ranks = list(ex.map(m.rank, subsets))
    fresh = transversal_matroid(EXAMPLE)
    assert ranks == [fresh.rank(c) for c in subsets]
