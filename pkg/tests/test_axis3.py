from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from optmech.duality import certify, dual_objective
from optmech.errors import RegionPreconditionError
from optmech.mechanisms.axis3 import (
    REGIONS,
    axis3_classify,
    axis3_delta,
    axis3_flow,
    axis3_flow_induced_mechanism,
    axis3_full_interim,
    axis3_interim,
    axis3_mechanism,
    axis3_region_map,
    axis3_region_slacks,
    axis3_scores,
    axis3_virtual,
    axis3_x,
)
from optmech.model import Axis3Setting, ValuePair
from optmech.verify.expost import interim_from_expost

VALUES = ValuePair(a=F(1), b=F(2))
BB, BA, AB, AA = (F(2), F(2)), (F(2), F(1)), (F(1), F(2)), (F(1), F(1))

# one (p, q) per region for n = 2, a = 1, b = 2
REGION_POINTS = {
    "R1": (F(1, 10), F(1, 10)),
    "R2": (F(2, 5), F(3, 10)),
    "R3": (F(3, 5), F(1, 2)),
    "R4": (F(7, 10), F(1, 2)),
    "R5": (F(3, 5), F(3, 5)),
    "R6": (F(9, 10), F(1, 10)),
    "R7": (F(4, 5), F(4, 5)),
}


def _setting(p: F, q: F, n: int = 2) -> Axis3Setting:
    return Axis3Setting.build(n, VALUES, p, q)


@pytest.mark.parametrize(("region", "point"), REGION_POINTS.items())
def test_classify_one_point_per_region(region: str, point: tuple[F, F]) -> None:
    assert axis3_classify(_setting(*point)).id == region


def test_classification_examples() -> None:
    assert axis3_classify(_setting(F(1, 5), F(1, 5))).id == "R1"
    assert axis3_classify(_setting(F(2, 5), F(3, 10))).id == "R2"
    for n in (1, 2, 3, 5):
        assert axis3_classify(_setting(F(4, 5), F(4, 5), n)).id == "R7"


def test_all_low_scores_nonnegative_means_r7() -> None:
    # (1-q)/(pq) = 15/28 <= a/(b-a) rules out R5
    assert axis3_classify(_setting(F(4, 5), F(7, 10))).id == "R7"


def test_swapped_input_classifies_in_canonical_order() -> None:
    assert axis3_classify(_setting(F(3, 10), F(2, 5))).id == "R2"


def test_flow_parameter_examples() -> None:
    assert axis3_x(_setting(F(2, 5), F(3, 10)), "R2") == F(7, 25)
    region = axis3_classify(_setting(F(3, 5), F(3, 5)))
    assert (region.id, region.x, region.coin) == ("R5", F(3, 25), F(1))


@pytest.mark.parametrize("region", ["R6", "R7"])
def test_variant_two_regions_close_the_top_edge(region: str) -> None:
    setting = _setting(*REGION_POINTS[region])
    classified = axis3_classify(setting)
    assert classified.x == (1 - setting.p) * (1 - setting.q)
    assert classified.variant == "II"
    assert (BB, BA) not in axis3_flow(setting, classified).lam


def test_r1_x_lies_inside_its_interval() -> None:
    setting = _setting(*REGION_POINTS["R1"])
    c = VALUES.a / VALUES.spread
    x = axis3_classify(setting).x
    assert c * setting.p * (1 - setting.q) <= x <= (1 - setting.p) * (1 - setting.q) - c * (1 - setting.p) * setting.q


def test_virtual_values() -> None:
    setting = _setting(*REGION_POINTS["R2"])
    assert axis3_virtual(setting, F(0))[(0, AB)] == VALUES.a
    assert axis3_virtual(setting, axis3_x(setting, "R2"))[(0, AB)] == 0


@settings(max_examples=200, deadline=None)
@given(
    p=st.fractions(min_value=0, max_value=1, max_denominator=30).filter(lambda x: 0 < x < 1),
    q=st.fractions(min_value=0, max_value=1, max_denominator=30).filter(lambda x: 0 < x < 1),
    t=st.fractions(min_value=0, max_value=1, max_denominator=30),
)
def test_low_scores_keep_their_order_for_any_x(p: F, q: F, t: F) -> None:
    setting = _setting(max(p, q), min(p, q))
    x = t * (1 - setting.p) * (1 - setting.q)
    scores = axis3_virtual(setting, x)
    assert scores[(0, AB)] >= scores[(0, AA)]
    assert scores[(1, BA)] >= scores[(1, AA)]


def test_symmetric_coins() -> None:
    assert axis3_classify(_setting(F(1, 2), F(1, 2))).id == "R3"
    assert axis3_classify(_setting(F(1, 2), F(1, 2))).coin == 0
    assert axis3_classify(_setting(F(2, 5), F(2, 5))).id == "R2"
    assert axis3_classify(_setting(F(2, 5), F(2, 5))).coin == 1


def test_delta_needs_a_pinned_region() -> None:
    with pytest.raises(RegionPreconditionError):
        axis3_delta(_setting(*REGION_POINTS["R7"]), "R7")


def test_r1_keeps_only_high_items() -> None:
    setting = _setting(*REGION_POINTS["R1"])
    tables = axis3_interim(setting)
    full = axis3_full_interim(setting)
    assert (tables.pi1_ab, tables.pi2_ba, tables.pi1_aa, tables.pi2_aa) == (0, 0, 0, 0)
    assert (tables.pi1_bb, tables.pi2_bb) == (full.pi1_bb, full.pi2_bb)
    pay = axis3_mechanism(setting).interim.pay[0]
    assert pay[BB] == VALUES.b * (full.pi1_bb + full.pi2_bb)
    assert pay[AA] == 0


def test_single_agent_high_items_always_sell() -> None:
    tables = axis3_full_interim(_setting(F(1, 2), F(1, 3), n=1))
    assert tables.pi1_bb == tables.pi2_bb == 1


def test_r7_bottom_payment() -> None:
    setting = _setting(*REGION_POINTS["R7"])
    pay = axis3_mechanism(setting).interim.pay[0]
    assert pay[AA] == 2 * VALUES.a * (setting.p * setting.q) / 2


def test_r6_never_at_equal_probabilities() -> None:
    for n in (2, 3, 4):
        diagonal = [cell for cell in axis3_region_map(n, VALUES, 20) if cell.p == cell.q]
        assert len(diagonal) == 19
        assert all(cell.region != "R6" for cell in diagonal)


@pytest.mark.parametrize("region", ["R1", "R2", "R3", "R4", "R5"])
def test_tight_identity_and_coin_range(region: str) -> None:
    setting = _setting(*REGION_POINTS[region])
    t = axis3_interim(setting)
    assert t.pi2_ba - t.pi1_ab + t.pi1_aa - t.pi2_aa == 0
    coin = axis3_classify(setting).coin
    assert coin is None or 0 <= coin <= 1


@pytest.mark.parametrize("region", REGIONS)
def test_expost_rule_reproduces_interim(region: str) -> None:
    mechanism = axis3_mechanism(_setting(*REGION_POINTS[region]))
    tables = interim_from_expost(axis3_scores(mechanism.setting), mechanism.typespace)
    assert tables[0] == dict(mechanism.interim.pi[0])


@pytest.mark.parametrize("region", REGIONS)
def test_certificate_per_region(region: str) -> None:
    mechanism = axis3_mechanism(_setting(*REGION_POINTS[region]))
    certificate = certify(mechanism.flows(), mechanism.interim, mechanism.typespace)
    assert certificate.optimal


@pytest.mark.parametrize("region", ["R6", "R7"])
def test_flow_induced_mechanism_has_the_same_revenue(region: str) -> None:
    mechanism = axis3_mechanism(_setting(*REGION_POINTS[region]))
    induced = axis3_flow_induced_mechanism(mechanism.setting)
    typespace = mechanism.typespace
    assert induced.revenue(typespace) == mechanism.revenue == dual_objective(mechanism.flows(), typespace)


def test_flow_induced_mechanism_needs_variant_two() -> None:
    with pytest.raises(RegionPreconditionError):
        axis3_flow_induced_mechanism(_setting(*REGION_POINTS["R3"]))


def test_as_given_restores_item_order() -> None:
    straight = axis3_mechanism(_setting(F(2, 5), F(3, 10)))
    swapped = axis3_mechanism(_setting(F(3, 10), F(2, 5)))
    assert swapped.setting.swapped
    assert swapped.revenue == straight.revenue
    assert swapped.as_given().pi[0][BA] == tuple(reversed(straight.interim.pi[0][AB]))
    assert swapped.typespace_as_given().agents[0].pr(AB) == F(3, 10) * F(3, 5)


def test_region_slacks_report_every_test() -> None:
    slacks = axis3_region_slacks(_setting(F(1, 5), F(1, 5)))
    assert slacks["r1_margin"] == F(2, 3) - F(1, 2)
    assert len(slacks) == 7


def test_region_map_covers_every_region() -> None:
    seen = set()
    for n in (2, 3):
        cells = list(axis3_region_map(n, VALUES, 10))
        assert len(cells) == 45
        assert all(cell.region is not None for cell in cells)
        seen |= {cell.region for cell in cells}
    assert seen == set(REGIONS)


@settings(max_examples=200, deadline=None)
@given(
    n=st.integers(min_value=1, max_value=6),
    p=st.fractions(min_value=0, max_value=1, max_denominator=40).filter(lambda x: 0 < x < 1),
    q=st.fractions(min_value=0, max_value=1, max_denominator=40).filter(lambda x: 0 < x < 1),
)
def test_full_interim_monotonicity_chains(n: int, p: F, q: F) -> None:
    t = axis3_full_interim(_setting(max(p, q), min(p, q), n))
    assert t.pi1_bb >= t.pi2_bb
    assert t.pi1_ab >= t.pi2_ba
    assert t.pi1_bb >= t.pi1_ab >= t.pi1_aa
    assert t.pi2_bb >= t.pi2_ba >= t.pi2_aa
