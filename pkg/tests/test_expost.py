from fractions import Fraction as F

import numpy as np
import pytest

from optmech.config import Guards
from optmech.errors import GuardError
from optmech.mechanisms.axis1 import axis1_scores
from optmech.mechanisms.axis3 import axis3_mechanism
from optmech.model import Axis1Setting, Axis3Setting, HierarchyRule, ValuePair, enumerate_types
from optmech.verify.expost import expost_allocate, expost_distribution, interim_from_expost

V = (F(1),)


def _rule(scores: list[F], coin: F | None = None) -> HierarchyRule:
    zero_coin = {} if coin is None else {(i, 0, V): coin for i in range(len(scores))}
    return HierarchyRule(score={(i, 0, V): h for i, h in enumerate(scores)}, zero_coin=zero_coin)


def test_negative_scores_allocate_nothing() -> None:
    rule = _rule([F(-1), F(-1, 2)])
    assert expost_distribution(rule, (V, V)) == ({},)
    assert expost_allocate(rule, (V, V), np.random.default_rng(0)) == (None,)


def test_positive_tie_splits_evenly() -> None:
    rule = _rule([F(2), F(2)])
    assert expost_distribution(rule, (V, V)) == ({0: F(1, 2), 1: F(1, 2)},)
    rng = np.random.default_rng(7)
    wins = [expost_allocate(rule, (V, V), rng)[0] for _ in range(4000)]
    assert None not in wins
    assert abs(wins.count(0) / 4000 - 0.5) < 0.05


def test_zero_score_tie_uses_the_coin() -> None:
    rule = _rule([F(0), F(0), F(0)], coin=F(1, 3))
    assert expost_distribution(rule, (V, V, V)) == ({0: F(1, 9), 1: F(1, 9), 2: F(1, 9)},)
    rng = np.random.default_rng(11)
    draws = [expost_allocate(rule, (V, V, V), rng)[0] for _ in range(9000)]
    assert abs(draws.count(None) / 9000 - 2 / 3) < 0.03


def test_tier_breaks_equal_scores() -> None:
    rule = HierarchyRule(score={(0, 0, V): F(1), (1, 0, V): F(1)}, tier={(1, 0, V): 1})
    assert expost_distribution(rule, (V, V)) == ({1: F(1)},)


def test_axis1_high_item_interim(values: ValuePair) -> None:
    setting = Axis1Setting(n=2, m=2, values=values, p=F(1, 2))
    tables = interim_from_expost(axis1_scores(setting), enumerate_types(setting))
    assert tables[0][(F(2), F(2))] == (F(3, 4), F(3, 4))


def test_r7_bottom_type_interim(values: ValuePair) -> None:
    setting = Axis3Setting.build(2, values, F(4, 5), F(4, 5))
    mechanism = axis3_mechanism(setting)
    tables = interim_from_expost(mechanism.hierarchy, mechanism.typespace)
    pq = setting.p * setting.q
    assert tables[0][(F(1), F(1))][0] == pq / 2


def test_single_agent_gets_indicator_of_nonnegative_score() -> None:
    low, high = (F(1),), (F(2),)
    space = enumerate_types(Axis1Setting(n=1, m=1, values=ValuePair(a=F(1), b=F(2)), p=F(1, 2)))
    rule = HierarchyRule(score={(0, 0, high): F(2), (0, 0, low): F(0)}, zero_coin={(0, 0, low): F(1, 4)})
    tables = interim_from_expost(rule, space)
    assert tables[0] == {high: (F(1),), low: (F(1, 4),)}


def test_enumeration_guard(values: ValuePair) -> None:
    setting = Axis1Setting(n=2, m=2, values=values, p=F(1, 2))
    with pytest.raises(GuardError):
        interim_from_expost(axis1_scores(setting), enumerate_types(setting), Guards(expost_max_terms=8))
    interim_from_expost(axis1_scores(setting), enumerate_types(setting), Guards(expost_max_terms=8, lifted=True))
