"""Axis 1 with two items, axis 2 with equal q and axis 3 with p = q describe the same setting."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction

from ..errors import CrosscheckMismatch
from ..mechanisms.axis1 import axis1_mechanism
from ..mechanisms.axis2 import axis2_mechanism
from ..mechanisms.axis3 import axis3_mechanism
from ..model import Axis1Setting, Axis2Setting, Axis3Setting, InterimMechanism, ValuePair, format_valuation
from ..numerics import format_rational

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CrosscheckReport:
    n: int
    values: ValuePair
    p: Fraction
    revenues: dict[str, Fraction]
    region: str
    diffs: list[str] = field(default_factory=list)

    @property
    def agree(self) -> bool:
        return not self.diffs

    def raise_for_mismatch(self) -> None:
        if self.diffs:
            raise CrosscheckMismatch(self.diffs)


def _compare(name: str, left: InterimMechanism, right: InterimMechanism) -> list[str]:
    diffs: list[str] = []
    for i in range(left.n):
        for v, row in left.pi[i].items():
            other = right.pi[i][v]
            if row != other:
                mine = ", ".join(format_rational(x) for x in row)
                theirs = ", ".join(format_rational(x) for x in other)
                diffs.append(f"{name}: agent {i} type {format_valuation(v)} pi ({mine}) vs ({theirs})")
            if left.pay[i][v] != right.pay[i][v]:
                diffs.append(
                    f"{name}: agent {i} type {format_valuation(v)} payment "
                    f"{format_rational(left.pay[i][v])} vs {format_rational(right.pay[i][v])}"
                )
    return diffs


def crosscheck_axes(a: Fraction, b: Fraction, p: Fraction, n: int) -> CrosscheckReport:
    values = ValuePair(a=a, b=b)
    first = axis1_mechanism(Axis1Setting(n=n, m=2, values=values, p=p))
    second = axis2_mechanism(Axis2Setting.build(values, [p] * n))
    third = axis3_mechanism(Axis3Setting.build(n, values, p, p))
    revenues = {"axis1": first.revenue, "axis2": second.revenue, "axis3": third.revenue}
    diffs: list[str] = []
    if len(set(revenues.values())) != 1:
        shown = ", ".join(f"{k}={format_rational(r)}" for k, r in revenues.items())
        diffs.append(f"revenues differ: {shown}")
    diffs += _compare("axis1 vs axis2", first.interim, second.interim)
    diffs += _compare("axis1 vs axis3", first.interim, third.interim)
    diffs += _compare("axis2 vs axis3", second.interim, third.interim)
    if diffs:
        logger.warning("crosscheck n=%d p=%s: %d mismatches", n, p, len(diffs))
    return CrosscheckReport(n=n, values=values, p=p, revenues=revenues, region=third.region.id, diffs=diffs)
