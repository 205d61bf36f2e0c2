import json
import math

import numpy as np
import pytest

from inputsel.verify import (
    MAX_DUMP,
    PropertyResult,
    check_modularity,
    check_monotone,
    modularity_violations,
    run_suite,
    subset_values,
    supermodularity_suite,
)


def test_modular_function_passes_both():
    vals = subset_values(lambda s: float(sum(s)), 4)
    assert check_modularity("m", vals, 4, "sub", {}).passed
    assert check_modularity("m", vals, 4, "super", {}).passed


def test_counterexample_fields():
    # |S|^2 is supermodular, not submodular
    vals = subset_values(lambda s: float(len(s)) ** 2, 4)
    res = check_modularity("sq", vals, 4, "sub", {"graph": "toy"})
    assert not res.passed
    ce = res.counterexamples[0]
    assert set(ce) >= {"graph", "S", "T", "v", "margin", "violations"}
    assert ce["v"] not in ce["T"] and set(ce["S"]) <= set(ce["T"])
    assert ce["margin"] < 0
    json.dumps(res.to_dict())


def test_infinite_values_skipped():
    vals = subset_values(lambda s: math.inf if not s else 1.0 / len(s), 3)
    assert list(modularity_violations(vals, 3, "super")) == []


def test_monotone_check():
    vals = subset_values(lambda s: -float(len(s)), 3)
    assert check_monotone("dec", vals, 3, decreasing=True, context={}).passed
    bad = check_monotone("inc", vals, 3, decreasing=False, context={})
    assert not bad.passed and "change" in bad.counterexamples[0]


def test_record_caps_dump():
    r = PropertyResult("x")
    for i in range(20):
        r.record(False, lambda i=i: {"i": i})
    assert r.failed == 20 and len(r.counterexamples) == MAX_DUMP
    other = PropertyResult("y", 3, 1, [{"j": 0}])
    r.merge(other)
    assert r.checked == 23 and len(r.counterexamples) == MAX_DUMP
    assert not PropertyResult("empty").passed


def test_suite_subset_and_noise_passes():
    res = supermodularity_suite(graphs=10, seed=1, include=["noise", "gci"])
    names = {r.name for r in res}
    assert names and all(r.passed for r in res), [r.to_dict() for r in res if not r.passed]


def test_run_suite_unknown():
    with pytest.raises((KeyError, ValueError)):
        run_suite("nope")
