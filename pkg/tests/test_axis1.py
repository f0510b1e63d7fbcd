from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from optmech.config import Guards
from optmech.duality import certify
from optmech.errors import GuardError
from optmech.mechanisms.axis1 import (
    axis1_flow,
    axis1_interim,
    axis1_kstar,
    axis1_mechanism,
    axis1_revenue_formula,
    axis1_score,
    axis1_scores,
    axis1_truthful_utility,
)
from optmech.model import Axis1Setting, ValuePair
from optmech.verify.expost import interim_from_expost


def _setting(n: int, m: int, b: F, p: F) -> Axis1Setting:
    return Axis1Setting(n=n, m=m, values=ValuePair(a=F(1), b=b), p=p)


def test_single_item_flow_is_a_two_node_chain() -> None:
    flow = axis1_flow(_setting(1, 1, F(2), F(1, 2)))
    assert flow.lam == {((F(2),), (F(1),)): F(1, 2)}
    assert flow.mu[(F(1),)] == 1


def test_four_item_layer_cut_edge_count() -> None:
    flow = axis1_flow(_setting(1, 4, F(2), F(1, 2)))
    from_layer_four = [edge for edge in flow.lam if sum(1 for x in edge[0] if x == 2) == 4]
    assert len(from_layer_four) == 4


def test_boundary_score_and_kstar() -> None:
    setting = _setting(1, 1, F(2), F(1, 2))
    assert axis1_score(setting, 0) == 0
    assert axis1_kstar(setting) == 1
    assert axis1_kstar(_setting(1, 1, F(3, 2), F(1, 2))) == 0


def test_interim_examples() -> None:
    assert axis1_interim(_setting(1, 2, F(2), F(1, 3)))[0] == 1
    assert axis1_interim(_setting(2, 2, F(2), F(1, 2)))[0] == F(3, 4)
    assert axis1_interim(_setting(1, 1, F(3, 2), F(1, 2)))[1] == {0: F(1)}


def test_single_item_posted_prices() -> None:
    high = axis1_mechanism(_setting(1, 1, F(2), F(1, 2)))
    assert high.payment == {0: 0, 1: 2}
    assert high.revenue == 1

    low = axis1_mechanism(_setting(1, 1, F(3, 2), F(1, 2)))
    assert low.payment == {0: 1, 1: 1}
    assert low.revenue == 1


@pytest.mark.parametrize(("n", "m"), [(1, 1), (1, 2), (2, 2), (3, 2), (2, 3)])
@pytest.mark.parametrize("p", [F(1, 5), F(1, 2), F(4, 5)])
def test_revenue_matches_closed_form(n: int, m: int, p: F) -> None:
    setting = _setting(n, m, F(2), p)
    assert axis1_mechanism(setting).revenue == axis1_revenue_formula(setting)


@pytest.mark.parametrize("p", [F(1, 5), F(2, 5), F(3, 5), F(4, 5)])
def test_truthful_utility_identity(p: F) -> None:
    setting = _setting(2, 3, F(2), p)
    mechanism = axis1_mechanism(setting)
    agent = mechanism.typespace.agents[0]
    for v in agent.types:
        k = agent.high_count[v]
        assert mechanism.interim.utility(0, v, v) == axis1_truthful_utility(setting, k)


@pytest.mark.parametrize("p", [F(1, 5), F(2, 5), F(3, 5)])
def test_expost_rule_reproduces_interim(p: F) -> None:
    setting = _setting(2, 2, F(2), p)
    mechanism = axis1_mechanism(setting)
    tables = interim_from_expost(axis1_scores(setting), mechanism.typespace)
    assert tables[0] == dict(mechanism.interim.pi[0])


def test_certificate_for_two_by_two() -> None:
    mechanism = axis1_mechanism(_setting(2, 2, F(2), F(1, 2)))
    assert certify(mechanism.flows(), mechanism.interim, mechanism.typespace).optimal


def test_type_enumeration_is_guarded() -> None:
    mechanism = axis1_mechanism(_setting(1, 13, F(2), F(1, 2)), Guards())
    assert mechanism.revenue == axis1_revenue_formula(mechanism.setting)
    with pytest.raises(GuardError, match="OPTMECH_GUARD_OVERRIDE"):
        _ = mechanism.typespace


fractions = st.fractions(min_value=0, max_value=1, max_denominator=40).filter(lambda x: 0 < x < 1)


@settings(max_examples=250, deadline=None)
@given(m=st.integers(min_value=1, max_value=10), p=fractions, b=st.sampled_from([F(3, 2), F(2), F(5)]))
def test_score_is_nondecreasing_in_high_count(m: int, p: F, b: F) -> None:
    setting = _setting(1, m, b, p)
    scores = [axis1_score(setting, k) for k in range(m + 1)]
    assert scores == sorted(scores)


@settings(max_examples=200, deadline=None)
@given(n=st.integers(min_value=1, max_value=4), m=st.integers(min_value=1, max_value=6), p=fractions)
def test_interim_is_monotone(n: int, m: int, p: F) -> None:
    pi_b, pi_a = axis1_interim(_setting(n, m, F(2), p))
    lows = [pi_a[k] for k in range(m)]
    assert lows == sorted(lows)
    assert all(pi_b >= x for x in lows)
