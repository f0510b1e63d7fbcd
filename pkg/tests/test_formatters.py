"""Tests for optmech.formatters: pure pandas, no I/O."""

from fractions import Fraction as F

import pytest

pd = pytest.importorskip("pandas")

from optmech.duality import certify  # noqa: E402
from optmech.formatters import (  # noqa: E402
    axis1_frame,
    axis2_frame,
    certificate_frame,
    finalize,
    mechanism_frame,
    region_map_frame,
    render,
    slacks_frame,
)
from optmech.mechanisms.axis1 import axis1_mechanism  # noqa: E402
from optmech.mechanisms.axis2 import axis2_mechanism  # noqa: E402
from optmech.mechanisms.axis3 import axis3_mechanism, axis3_region_map, axis3_region_slacks  # noqa: E402
from optmech.model import Axis1Setting, Axis2Setting, Axis3Setting, ValuePair  # noqa: E402


def test_mechanism_frame_columns(axis3_setting: Axis3Setting) -> None:
    mechanism = axis3_mechanism(axis3_setting)
    df = mechanism_frame(mechanism.interim, mechanism.typespace)
    assert list(df.columns) == ["Agent", "Type", "Prob", "Item 1", "Item 2", "Payment"]
    assert len(df) == 2 * 4
    assert df["Type"].iloc[0] == "(2/1,2/1)"


def test_finalize_adds_approximate_companions(axis1_setting: Axis1Setting) -> None:
    df = finalize(axis1_frame(axis1_mechanism(axis1_setting)))
    assert "Payment (approx)" in df.columns
    assert "Score (approx)" in df.columns
    assert "Prob (approx)" not in df.columns
    assert df["Payment"].map(lambda v: isinstance(v, str)).all()


def test_axis2_frame_uses_callers_agent_numbers(values: ValuePair) -> None:
    mechanism = axis2_mechanism(Axis2Setting.build(values, [F(1, 5), F(4, 5)]))
    df = axis2_frame(mechanism)
    assert df["Agent"].tolist() == [0, 1]
    assert df["q"].tolist() == [F(1, 5), F(4, 5)]


def test_region_frames(axis3_setting: Axis3Setting, values: ValuePair) -> None:
    slacks = slacks_frame("R5", axis3_region_slacks(axis3_setting))
    assert set(slacks.columns) == {"Region", "Test", "Margin"}
    cells = region_map_frame(axis3_region_map(2, values, 4))
    assert len(cells) == 6
    assert set(cells["Region"]) <= {"R1", "R2", "R3", "R4", "R5", "R6", "R7", "none"}


def test_certificate_frame(axis1_setting: Axis1Setting) -> None:
    mechanism = axis1_mechanism(axis1_setting)
    df = certificate_frame(certify(mechanism.flows(), mechanism.interim, mechanism.typespace))
    assert df.set_index("Check").loc["optimal", "Value"]


def test_render_formats(axis1_setting: Axis1Setting) -> None:
    df = axis1_frame(axis1_mechanism(axis1_setting))
    csv = render(df, "csv")
    assert csv.splitlines()[0].startswith("k,Score,Score (approx)")
    table = render(df, "table")
    assert table.endswith("\n")
    assert "Sellable" in table.splitlines()[0]
