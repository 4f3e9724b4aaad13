"""Cross-checked result records emitted by the library and the CLI."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from importlib import resources

from . import _tolerance
from ._tolerance import ZERO_CONDITION
from .core import definition_moments, trace_moments
from .errors import ZeroConditionEvent


@dataclass(frozen=True)
class ConditionedReport:
    """A CE/AP/CP value together with both derivation routes.

    ``route_a`` is the probability-space (definition) value and ``route_b``
    the Hilbert-space (trace) value; ``value`` is ``route_a``.
    """

    quantity: str
    value: float
    route_a: float
    route_b: float
    discrepancy: float
    tolerance: float
    event: str
    condition: str | None = None
    time: float | None = None

    @property
    def verdict(self):
        return "ok" if self.discrepancy <= self.tolerance else "mismatch"

    def to_dict(self):
        d = asdict(self)
        d["verdict"] = self.verdict
        return {k: v for k, v in d.items() if v is not None}


def describe(event):
    return repr(event)


def route_check(route_a, route_b, tol, what):
    """Raise if the two derivation routes disagree by more than ``tol``."""
    if not abs(route_a - route_b) <= tol:
        raise AssertionError(f"{what}: definition route {route_a!r} and trace route "
                             f"{route_b!r} differ by {abs(route_a - route_b):.3e} > {tol:.1e}")


def ratio_routes(rho, values, event):
    """CE of a diagonal observable given ``event`` by both routes.

    Returns ``(definition_value, trace_value, probability)``.
    """
    num_a, den_a = definition_moments(rho, values, event)
    if not den_a > ZERO_CONDITION:
        raise ZeroConditionEvent(event, den_a)
    num_b, den_b = trace_moments(rho, values, event)
    return num_a / den_a, num_b / den_b, den_a


def ce_report(rho, values, event, base_tol, scale=1.0, **extra):
    a, b, _ = ratio_routes(rho, values, event)
    tol = _tolerance.tol(base_tol) * max(1.0, scale)
    return ConditionedReport("CE", a, a, b, abs(a - b), tol, describe(event), **extra)


def ap_report(rho, event, base_tol, **extra):
    _, a = definition_moments(rho, 1.0, event)
    _, b = trace_moments(rho, 1.0, event)
    tol = _tolerance.tol(base_tol)
    return ConditionedReport("AP", a, a, b, abs(a - b), tol, describe(event), **extra)


def cp_report(rho, event, condition, base_tol, **extra):
    from .core import event_intersect, indicator_trace

    pb = indicator_trace(rho, condition)
    if not pb > ZERO_CONDITION:
        raise ZeroConditionEvent(condition, pb)
    a = indicator_trace(rho, event_intersect(event, condition)) / pb
    # trace route: Tr[rho I_A I_B] / Tr[rho I_B], using I_A I_B = I_(A and B)
    _, num_b = trace_moments(rho, 1.0, event_intersect(event, condition))
    _, den_b = trace_moments(rho, 1.0, condition)
    b = num_b / den_b
    tol = _tolerance.tol(base_tol)
    return ConditionedReport("CP", a, a, b, abs(a - b), tol, describe(event),
                             condition=describe(condition), **extra)


REPORT_SCHEMA_VERSION = 1


def report_schema():
    """The published JSON schema for CLI reports."""
    text = resources.files("qprob").joinpath("schemas/report.schema.json").read_text()
    return json.loads(text)
