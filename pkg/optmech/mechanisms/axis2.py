"""n independent agents with agent-specific q_i and two i.i.d. items.

Each agent falls into one of three cases by comparing q_i, and its rivals' q_k,
with square-root thresholds; all such comparisons are done after squaring so
they stay exact. Interim allocations are computed from the scores with an exact
tie-aware kernel, which reproduces the printed case products whenever the q_i
are pairwise distinct and splits exact ties uniformly otherwise.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Literal

from ..duality import FlowGraph
from ..model import Axis2Setting, HierarchyRule, InterimMechanism, TypeSpace, Valuation, enumerate_types
from ..numerics import ONE, ZERO, shared_win_probability

logger = logging.getLogger(__name__)

type Case = Literal[1, 2, 3]
type RankKey = tuple[Fraction, int]


@dataclass(frozen=True)
class Axis2Partition:
    """Rivals of agent i grouped by q_k (indices in the sorted order)."""

    agent: int
    s1: frozenset[int]
    s2: frozenset[int]
    s3: frozenset[int]
    s4: frozenset[int]


@dataclass(frozen=True)
class Axis2Interim:
    """pi_i(b), pi_i(a,b) (low item, other item b) and pi_i(a,a)."""

    high: Fraction
    low_other_high: Fraction
    low_both: Fraction


def _types(setting: Axis2Setting) -> tuple[Valuation, Valuation, Valuation, Valuation]:
    a, b = setting.values.a, setting.values.b
    return (b, b), (b, a), (a, b), (a, a)


def _threshold(setting: Axis2Setting) -> Fraction:
    """(b-a)/(a+b): where H(a|b) turns nonnegative (q_i >= it) and H(a|a) does (q_i^2 >= it)."""
    a, b = setting.values.a, setting.values.b
    return (b - a) / (a + b)


def axis2_flow(setting: Axis2Setting, agent: int) -> FlowGraph:
    q = setting.q[agent]
    bb, ba, ab, aa = _types(setting)
    prob = enumerate_types(setting).agents[agent].prob
    top = (1 - q) ** 2 / 2
    mid = (1 - q**2) / 2
    return FlowGraph(
        agent=agent,
        nodes=(bb, ba, ab, aa),
        source=dict(prob),
        lam={(bb, ba): top, (bb, ab): top, (ba, aa): mid, (ab, aa): mid},
        mu={bb: ZERO, ba: ZERO, ab: ZERO, aa: ONE},
    )


def axis2_flows(setting: Axis2Setting) -> tuple[FlowGraph, ...]:
    return tuple(axis2_flow(setting, i) for i in range(setting.n))


def axis2_low_scores(setting: Axis2Setting, agent: int) -> tuple[Fraction, Fraction]:
    """(H(a | other item b), H(a | other item a))."""
    q = setting.q[agent]
    a, spread = setting.values.a, setting.values.spread
    return a - (1 - q) / (2 * q) * spread, a - (1 - q**2) / (2 * q**2) * spread


def axis2_scores(setting: Axis2Setting) -> HierarchyRule:
    bb, ba, ab, aa = _types(setting)
    b = setting.values.b
    score: dict[tuple[int, int, Valuation], Fraction] = {}
    for i in range(setting.n):
        mixed, low = axis2_low_scores(setting, i)
        score.update(
            {
                (i, 0, bb): b,
                (i, 1, bb): b,
                (i, 0, ba): b,
                (i, 1, ba): mixed,
                (i, 0, ab): mixed,
                (i, 1, ab): b,
                (i, 0, aa): low,
                (i, 1, aa): low,
            }
        )
    return HierarchyRule(score=score)


def axis2_partition(setting: Axis2Setting, i: int) -> Axis2Partition:
    q_i = setting.q[i]
    s1, s2, s3, s4 = set(), set(), set(), set()
    for k, q_k in enumerate(setting.q):
        if k == i:
            continue
        if q_k**2 > q_i:
            s1.add(k)
        elif q_k > q_i:
            s2.add(k)
        elif q_k > q_i**2:
            s3.add(k)
        else:
            s4.add(k)
    return Axis2Partition(agent=i, s1=frozenset(s1), s2=frozenset(s2), s3=frozenset(s3), s4=frozenset(s4))


def axis2_case(setting: Axis2Setting, i: int) -> Case:
    q_i = setting.q[i]
    threshold = _threshold(setting)
    part = axis2_partition(setting, i)
    if q_i < threshold or part.s1:
        return 3
    if q_i**2 >= threshold and not part.s2:
        return 1
    return 2


def axis2_product_interim(setting: Axis2Setting, i: int) -> tuple[Fraction, Fraction]:
    """The case products for (pi(a,b), pi(a,a)); exact only when no two q's coincide."""
    part = axis2_partition(setting, i)
    others = [k for k in range(setting.n) if k != i]

    def product(indices, power: int = 1) -> Fraction:
        out = ONE
        for k in indices:
            out *= setting.q[k] ** power
        return out

    match axis2_case(setting, i):
        case 1:
            return product(others), product(part.s3, 2) * product(part.s4)
        case 2:
            return product(part.s2, 2) * product(k for k in others if k not in part.s2), ZERO
        case _:
            return ZERO, ZERO


def _key_distributions(rule: HierarchyRule, typespace: TypeSpace, item: int) -> tuple[dict[RankKey, Fraction], ...]:
    """Per agent, the probability of each (score, tier) key on one item."""
    distributions = []
    for k, agent_types in enumerate(typespace.agents):
        dist: dict[RankKey, Fraction] = {}
        for v in agent_types.types:
            key = rule.key(k, item, v)
            dist[key] = dist.get(key, ZERO) + agent_types.prob[v]
        distributions.append(dist)
    return tuple(distributions)


def _rival_odds(dist: dict[RankKey, Fraction], mine: RankKey) -> tuple[Fraction, Fraction]:
    """(Pr[rival ties with us on item], Pr[rival ranks strictly below])."""
    return dist.get(mine, ZERO), sum((pr for key, pr in dist.items() if key < mine), ZERO)


def _win_probability(
    rule: HierarchyRule, keys: tuple[dict[RankKey, Fraction], ...], i: int, item: int, v: Valuation
) -> Fraction:
    mine = rule.key(i, item, v)
    if mine[0] < 0:
        return ZERO
    rivals = [_rival_odds(dist, mine) for k, dist in enumerate(keys) if k != i]
    share = shared_win_probability(rivals)
    return share * rule.coin(i, item, v) if mine[0] == 0 else share


def axis2_interim(setting: Axis2Setting, typespace: TypeSpace | None = None) -> tuple[Axis2Interim, ...]:
    rule = axis2_scores(setting)
    if typespace is None:
        typespace = enumerate_types(setting)
    keys = _key_distributions(rule, typespace, 0)
    bb, _, ab, aa = _types(setting)
    tables = []
    for i in range(setting.n):
        tables.append(
            Axis2Interim(
                high=_win_probability(rule, keys, i, 0, bb),
                low_other_high=_win_probability(rule, keys, i, 0, ab),
                low_both=_win_probability(rule, keys, i, 0, aa),
            )
        )
    return tuple(tables)


def axis2_payments(
    setting: Axis2Setting, tables: tuple[Axis2Interim, ...] | None = None
) -> tuple[dict[Valuation, Fraction], ...]:
    a, b, spread = setting.values.a, setting.values.b, setting.values.spread
    bb, ba, ab, aa = _types(setting)
    payments = []
    for pi in axis2_interim(setting) if tables is None else tables:
        mixed = b * pi.high + a * pi.low_other_high - spread * pi.low_both
        payments.append(
            {
                bb: 2 * b * pi.high - spread * (pi.low_other_high + pi.low_both),
                ba: mixed,
                ab: mixed,
                aa: 2 * a * pi.low_both,
            }
        )
    return tuple(payments)


@dataclass(frozen=True)
class Axis2Mechanism:
    setting: Axis2Setting
    case: dict[int, Case]
    partitions: tuple[Axis2Partition, ...]
    hierarchy: HierarchyRule
    tables: tuple[Axis2Interim, ...]
    interim: InterimMechanism
    revenue: Fraction

    @cached_property
    def typespace(self) -> TypeSpace:
        return enumerate_types(self.setting)

    def flows(self) -> tuple[FlowGraph, ...]:
        return axis2_flows(self.setting)

    def original_index(self, i: int) -> int:
        return self.setting.order[i]


def axis2_mechanism(setting: Axis2Setting) -> Axis2Mechanism:
    bb, ba, ab, aa = _types(setting)
    typespace = enumerate_types(setting)
    tables = axis2_interim(setting, typespace)
    payments = axis2_payments(setting, tables)
    hierarchy = axis2_scores(setting)
    pi = tuple(
        {
            bb: (t.high, t.high),
            ba: (t.high, t.low_other_high),
            ab: (t.low_other_high, t.high),
            aa: (t.low_both, t.low_both),
        }
        for t in tables
    )
    interim = InterimMechanism(pi=pi, pay=payments, hierarchy=hierarchy, source="axis2")
    cases = {i: axis2_case(setting, i) for i in range(setting.n)}
    logger.info("axis2 q=%s: cases %s", [str(q) for q in setting.q], cases)
    return Axis2Mechanism(
        setting=setting,
        case=cases,
        partitions=tuple(axis2_partition(setting, i) for i in range(setting.n)),
        hierarchy=hierarchy,
        tables=tables,
        interim=interim,
        revenue=interim.revenue(typespace),
    )
