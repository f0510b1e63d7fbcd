"""n i.i.d. agents and m i.i.d. bi-valued items.

Every quantity depends on a type only through its high count k, so the closed
forms are kept per layer and expanded to the 2^m types on demand (guarded).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property

from ..config import Guards, resolve_guards
from ..duality import FlowGraph
from ..model import Axis1Setting, HierarchyRule, InterimMechanism, TypeSpace, Valuation, enumerate_types
from ..numerics import ZERO, binom, binom_cdf, binom_cdf_strict, binom_pmf, partition_sum

logger = logging.getLogger(__name__)


def _layer_edge_flow(setting: Axis1Setting, k: int) -> Fraction:
    """Flow on each edge from layer k+1 down to layer k."""
    m, p = setting.m, setting.p
    if k >= m:
        return ZERO
    above = sum((binom(m, z) * (1 - p) ** z * p ** (m - z) for z in range(k + 1, m + 1)), ZERO)
    return above / ((m - k) * binom(m, k))


def axis1_score(setting: Axis1Setting, k: int) -> Fraction:
    """f(k): the score of a low coordinate of a type with k high coordinates."""
    if k >= setting.m:
        return setting.values.a
    m, p = setting.m, setting.p
    node_prob = (1 - p) ** k * p ** (m - k)
    return setting.values.a - _layer_edge_flow(setting, k) / node_prob * setting.values.spread


def axis1_kstar(setting: Axis1Setting) -> int:
    return next(k for k in range(setting.m + 1) if axis1_score(setting, k) > 0)


def _lower(v: Valuation, setting: Axis1Setting) -> list[Valuation]:
    a, b = setting.values.a, setting.values.b
    return [v[:j] + (a,) + v[j + 1 :] for j, x in enumerate(v) if x == b]


def axis1_flow(setting: Axis1Setting, agent: int = 0, guards: Guards | None = None) -> FlowGraph:
    """Layered flow: each type splits everything it holds equally among its k children."""
    resolve_guards(guards).check_axis1_items(setting.m)
    agent_types = enumerate_types(setting).agents[agent]
    lam: dict[tuple[Valuation, Valuation], Fraction] = {}
    for v in agent_types.types:
        k = agent_types.high_count[v]
        for child in _lower(v, setting):
            lam[(v, child)] = _layer_edge_flow(setting, k - 1)
    bottom = (setting.values.a,) * setting.m
    return FlowGraph(
        agent=agent,
        nodes=agent_types.types,
        source=dict(agent_types.prob),
        lam=lam,
        mu={v: (Fraction(1) if v == bottom else ZERO) for v in agent_types.types},
    )


def axis1_flows(setting: Axis1Setting, guards: Guards | None = None) -> tuple[FlowGraph, ...]:
    return tuple(axis1_flow(setting, agent=i, guards=guards) for i in range(setting.n))


def axis1_scores(setting: Axis1Setting, guards: Guards | None = None) -> HierarchyRule:
    """b on high coordinates, f(k) on low ones.

    Low coordinates carry tier k so equal scores across layers still rank by k,
    and types below k* never take an item at score 0.
    """
    resolve_guards(guards).check_axis1_items(setting.m)
    agent_types = enumerate_types(setting).agents[0]
    kstar = axis1_kstar(setting)
    b = setting.values.b
    score: dict[tuple[int, Valuation], Fraction] = {}
    tier: dict[tuple[int, Valuation], int] = {}
    coin: dict[tuple[int, Valuation], Fraction] = {}
    for v in agent_types.types:
        k = agent_types.high_count[v]
        for j, x in enumerate(v):
            if x == b:
                score[(j, v)] = b
                continue
            score[(j, v)] = axis1_score(setting, k)
            tier[(j, v)] = k
            if k < kstar:
                coin[(j, v)] = ZERO
    return HierarchyRule.replicated(setting.n, score, tier, coin)


def axis1_interim(setting: Axis1Setting) -> tuple[Fraction, dict[int, Fraction]]:
    """pi(b) and pi(a, k) for k = 0..m-1."""
    n, m, p = setting.n, setting.m, setting.p
    kstar = axis1_kstar(setting)
    pi_b = partition_sum(n, p, 1 - p)
    pi_a: dict[int, Fraction] = {}
    for k in range(m):
        if k < kstar:
            pi_a[k] = ZERO
            continue
        upper = binom_cdf(m - 1, 1 - p, k)
        lower = binom_cdf_strict(m - 1, 1 - p, k)
        pi_a[k] = p ** (n - 1) * (upper**n - lower**n) / (n * binom_pmf(m - 1, 1 - p, k))
    return pi_b, pi_a


def axis1_payments(setting: Axis1Setting) -> dict[int, Fraction]:
    """Payment per high count k."""
    m = setting.m
    a, b = setting.values.a, setting.values.b
    kstar = axis1_kstar(setting)
    pi_b, pi_a = axis1_interim(setting)
    payments: dict[int, Fraction] = {}
    for k in range(m + 1):
        discount = setting.values.spread * sum((pi_a[z] for z in range(k)), ZERO)
        if k >= kstar:
            low_share = (m - k) * a * pi_a[k] if k < m else ZERO
            payments[k] = k * b * pi_b + low_share - discount
        else:
            payments[k] = k * b * pi_b - discount
    return payments


def axis1_truthful_utility(setting: Axis1Setting, k: int) -> Fraction:
    _, pi_a = axis1_interim(setting)
    return setting.values.spread * sum((pi_a[z] for z in range(k)), ZERO)


def axis1_revenue_formula(setting: Axis1Setting) -> Fraction:
    n, m, p = setting.n, setting.m, setting.p
    kstar = axis1_kstar(setting)
    tail = ZERO
    for k in range(kstar, m):
        upper = binom_cdf(m - 1, 1 - p, k)
        lower = binom_cdf_strict(m - 1, 1 - p, k)
        tail += (upper**n - lower**n) * axis1_score(setting, k)
    return m * (setting.values.b * (1 - p**n) + p**n * tail)


@dataclass(frozen=True)
class Axis1Mechanism:
    setting: Axis1Setting
    kstar: int
    f: dict[int, Fraction]
    pi_b: Fraction
    pi_a: dict[int, Fraction]
    payment: dict[int, Fraction]
    revenue: Fraction
    guards: Guards

    @cached_property
    def typespace(self) -> TypeSpace:
        self.guards.check_axis1_items(self.setting.m)
        return enumerate_types(self.setting)

    @cached_property
    def hierarchy(self) -> HierarchyRule:
        return axis1_scores(self.setting, self.guards)

    @cached_property
    def interim(self) -> InterimMechanism:
        agent_types = self.typespace.agents[0]
        b = self.setting.values.b
        pi: dict[Valuation, tuple[Fraction, ...]] = {}
        pay: dict[Valuation, Fraction] = {}
        for v in agent_types.types:
            k = agent_types.high_count[v]
            pi[v] = tuple(self.pi_b if x == b else self.pi_a[k] for x in v)
            pay[v] = self.payment[k]
        n = self.setting.n
        return InterimMechanism(
            pi=tuple(dict(pi) for _ in range(n)),
            pay=tuple(dict(pay) for _ in range(n)),
            hierarchy=self.hierarchy,
            source="axis1",
        )

    def flows(self) -> tuple[FlowGraph, ...]:
        return axis1_flows(self.setting, self.guards)


def axis1_mechanism(setting: Axis1Setting, guards: Guards | None = None) -> Axis1Mechanism:
    m = setting.m
    kstar = axis1_kstar(setting)
    pi_b, pi_a = axis1_interim(setting)
    payment = axis1_payments(setting)
    revenue = ZERO
    for k in range(m + 1):
        layer_prob = binom_pmf(m, 1 - setting.p, k)
        revenue += layer_prob * payment[k]
    revenue *= setting.n
    logger.info("axis1 n=%d m=%d p=%s: k*=%d revenue=%s", setting.n, m, setting.p, kstar, revenue)
    return Axis1Mechanism(
        setting=setting,
        kstar=kstar,
        f={k: axis1_score(setting, k) for k in range(m + 1)},
        pi_b=pi_b,
        pi_a=pi_a,
        payment=payment,
        revenue=revenue,
        guards=resolve_guards(guards),
    )
