"""Single-agent grand bundling and the uniform discretizer."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction

from ..duality import FlowGraph, virtual_values
from ..errors import InputError
from ..model import BundlingSetting, HierarchyRule, InterimMechanism, TypeSpace, Valuation, enumerate_types
from ..numerics import ONE, ZERO, format_rational

logger = logging.getLogger(__name__)


def bundling_threshold(setting: BundlingSetting) -> Fraction:
    """(v_max - v_min) / delta^m: the shift above which the grand bundle is optimal."""
    return (setting.v_max - setting.v_min) / setting.delta_mass**setting.m


def bundling_score_floor(setting: BundlingSetting) -> Fraction:
    """Lower bound c - (v_max - v_min)/Pr[base type] on every score of the base type."""
    base_prob = ONE
    for probs in setting.probs:
        base_prob *= probs[0]
    return setting.c - (setting.v_max - setting.v_min) / base_prob


def bundling_flow(setting: BundlingSetting) -> FlowGraph:
    """Every type sends its whole mass straight to the base type, which drains to the sink."""
    agent = enumerate_types(setting).agents[0]
    base = setting.base_type
    return FlowGraph(
        agent=0,
        nodes=agent.types,
        source=dict(agent.prob),
        lam={(v, base): agent.prob[v] for v in agent.types if v != base},
        mu={v: (ONE if v == base else ZERO) for v in agent.types},
    )


@dataclass(frozen=True)
class BundlingMechanism:
    setting: BundlingSetting
    price: Fraction
    threshold: Fraction
    threshold_ok: bool
    hierarchy: HierarchyRule
    interim: InterimMechanism

    @property
    def typespace(self) -> TypeSpace:
        return enumerate_types(self.setting)

    @property
    def revenue(self) -> Fraction:
        return self.price

    def flows(self) -> tuple[FlowGraph, ...]:
        return (bundling_flow(self.setting),)


def bundling_mechanism(setting: BundlingSetting) -> BundlingMechanism:
    typespace = enumerate_types(setting)
    agent = typespace.agents[0]
    price = sum(setting.base_type, ZERO)
    threshold = bundling_threshold(setting)
    threshold_ok = setting.c >= threshold
    if threshold_ok:
        # flow scores are all nonnegative here, so the rule allocates everything
        scores = virtual_values(bundling_flow(setting), typespace)
    else:
        scores = {(j, v): v[j] for v in agent.types for j in range(setting.m)}
    hierarchy = HierarchyRule(score={(0, j, v): h for (j, v), h in scores.items()})
    everything: dict[Valuation, tuple[Fraction, ...]] = {v: (ONE,) * setting.m for v in agent.types}
    interim = InterimMechanism(
        pi=(everything,),
        pay=({v: price for v in agent.types},),
        hierarchy=hierarchy,
        source="bundling",
    )
    logger.info(
        "bundle m=%d c=%s: price=%s threshold=%s (%s)",
        setting.m,
        setting.c,
        price,
        threshold,
        "met" if threshold_ok else "not met",
    )
    return BundlingMechanism(
        setting=setting,
        price=price,
        threshold=threshold,
        threshold_ok=threshold_ok,
        hierarchy=hierarchy,
        interim=interim,
    )


def discretize_uniform(c: Fraction, m: int, grid: int) -> BundlingSetting:
    """m items uniform on [c, c+1], snapped down to {c, c + 1/G, ..., c + (G-1)/G}.

    As much of the shift as possible is folded into c, leaving every support
    value positive with the value set unchanged. At c = 0 the bottom cell would
    be worth 0, so it is clamped up to its midpoint 1/(2G).
    """
    if isinstance(grid, bool) or not isinstance(grid, int) or grid < 1:
        raise InputError(f"grid: must be a positive integer, got {grid!r}")
    if isinstance(m, bool) or not isinstance(m, int) or m < 1:
        raise InputError(f"m: must be a positive integer, got {m!r}")
    if c < 0:
        raise InputError(f"c: must be nonnegative, got {format_rational(c)}")
    cell = Fraction(1, grid)
    shift = max(c - cell, ZERO)
    support = tuple(c - shift + Fraction(z, grid) for z in range(grid))
    if support[0] == 0:
        support = (cell / 2, *support[1:])
    probs = (cell,) * grid
    return BundlingSetting(c=shift, supports=(support,) * m, probs=(probs,) * m, delta_mass=cell)
