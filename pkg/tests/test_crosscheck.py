from dataclasses import replace
from fractions import Fraction as F

import pytest

from optmech.errors import CrosscheckMismatch
from optmech.mechanisms.axis3 import axis3_mechanism
from optmech.model import Axis1Setting, Axis3Setting, ValuePair, enumerate_types
from optmech.numerics import format_rational
from optmech.verify import crosscheck
from optmech.verify.crosscheck import CrosscheckReport, crosscheck_axes
from optmech.verify.lp import lp_optimal_revenue

VALUES = ValuePair(a=F(1), b=F(2))


@pytest.mark.parametrize(("p", "n"), [(F(1, 2), 2), (F(4, 5), 3), (F(1, 5), 1)])
def test_axes_agree(p: F, n: int) -> None:
    report = crosscheck_axes(F(1), F(2), p, n)
    assert report.agree, report.diffs
    assert len(set(report.revenues.values())) == 1
    report.raise_for_mismatch()


def test_high_probabilities_land_in_the_all_nonnegative_region() -> None:
    assert crosscheck_axes(F(1), F(2), F(4, 5), 3).region == "R7"


@pytest.mark.parametrize("p", [F(1, 5), F(1, 2), F(4, 5)])
def test_single_agent_matches_the_lp(p: F) -> None:
    report = crosscheck_axes(F(1), F(2), p, 1)
    space = enumerate_types(Axis1Setting(n=1, m=2, values=ValuePair(a=F(1), b=F(2)), p=p))
    assert report.revenues["axis1"] == lp_optimal_revenue(space).objective


def test_raise_for_mismatch() -> None:
    report = CrosscheckReport(
        n=1, values=ValuePair(a=F(1), b=F(2)), p=F(1, 2), revenues={}, region="R3", diffs=["revenues differ"]
    )
    assert not report.agree
    with pytest.raises(CrosscheckMismatch, match="1 mismatches") as excinfo:
        report.raise_for_mismatch()
    assert excinfo.value.diffs == ["revenues differ"]


def test_axis2_and_axis3_are_compared_directly(monkeypatch: pytest.MonkeyPatch) -> None:
    top = (F(2), F(2))
    pay = axis3_mechanism(Axis3Setting.build(2, VALUES, F(1, 2), F(1, 2))).interim.pay[1][top]

    def overcharged(setting: Axis3Setting):
        mechanism = axis3_mechanism(setting)
        return replace(mechanism, interim=mechanism.interim.with_payment(1, top, pay + 1))

    monkeypatch.setattr(crosscheck, "axis3_mechanism", overcharged)
    report = crosscheck_axes(F(1), F(2), F(1, 2), 2)
    assert not report.agree
    assert [d for d in report.diffs if d.startswith("axis2 vs axis3")] == [
        f"axis2 vs axis3: agent 1 type (2,2) payment {format_rational(pay)} vs {format_rational(pay + 1)}"
    ]
