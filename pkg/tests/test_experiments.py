import json

import numpy as np

from hsssi.experiments import Check, ExperimentResult


def test_diagnostic_checks_do_not_gate():
    r = ExperimentResult("x")
    r.add(Check("rung", False, "intermediate T", required=False))
    r.add(Check("ladder", True, "final"))
    assert r.passed
    r.add(Check("other", False, ""))
    assert not r.passed


def test_summary_is_json_serializable():
    r = ExperimentResult("x")
    r.add(Check("c", True, "d", {"a": np.arange(3.0), "b": np.bool_(True), "z": 1 + 2j}))
    s = json.loads(json.dumps(r.summary()))
    assert s["checks"][0]["values"] == {"a": [0.0, 1.0, 2.0], "b": True, "z": [1.0, 2.0]}
    assert s["checks"][0]["required"] is True and s["passed"] is True
