import numpy as np
import pytest

from qprob import _tolerance, discrete as dsc
from qprob.core import DiscreteSet
from qprob.report import ConditionedReport, route_check


def test_verdict_follows_tolerance():
    ok = ConditionedReport("CE", 1.0, 1.0, 1.0 + 1e-13, 1e-13, 1e-12, "A")
    bad = ConditionedReport("CE", 1.0, 1.0, 1.1, 0.1, 1e-12, "A")
    assert ok.verdict == "ok" and bad.verdict == "mismatch"


def test_to_dict_drops_unset_fields():
    d = ConditionedReport("AP", 0.5, 0.5, 0.5, 0.0, 1e-12, "A").to_dict()
    assert "condition" not in d and "time" not in d and d["verdict"] == "ok"


def test_route_check_raises_on_disagreement():
    with pytest.raises(AssertionError, match="differ"):
        route_check(1.0, 1.5, 1e-12, "demo")


def test_tolerance_scale_env(monkeypatch):
    monkeypatch.setenv("QPROB_TOLERANCE_SCALE", "10")
    assert _tolerance.tol(1e-12) == pytest.approx(1e-11)
    s = dsc.DiscreteState([1.0, 2.0], [1.0, 1.0])
    assert dsc.ce_report(s, DiscreteSet((0, 1))).tolerance == pytest.approx(2e-11)


@pytest.mark.parametrize("raw", ["0.5", "abc"])
def test_tolerance_scale_rejects_bad_values(monkeypatch, raw):
    monkeypatch.setenv("QPROB_TOLERANCE_SCALE", raw)
    with pytest.raises(ValueError):
        _tolerance.scale()


def test_reports_are_deterministic():
    s = dsc.DiscreteState(np.arange(5.0), np.ones(5))
    assert dsc.ce_report(s, DiscreteSet((1, 4))) == dsc.ce_report(s, DiscreteSet((1, 4)))
