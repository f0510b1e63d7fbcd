"""Ex-post hierarchy allocation: the exact per-profile measure, sampling, and exact interim recomputation."""

from __future__ import annotations

import logging
from fractions import Fraction

import numpy as np

from ..config import Guards, resolve_guards
from ..model import HierarchyRule, Profile, TypeSpace, Valuation
from ..numerics import ZERO

logger = logging.getLogger(__name__)

type ItemDistribution = dict[int, Fraction]


def _winners(hierarchy: HierarchyRule, profile: Profile, j: int) -> tuple[list[int], Fraction]:
    keys = [hierarchy.key(i, j, v) for i, v in enumerate(profile)]
    best = max(keys)
    return [i for i, key in enumerate(keys) if key == best], best[0]


def expost_distribution(hierarchy: HierarchyRule, profile: Profile) -> tuple[ItemDistribution, ...]:
    """Per item, the probability each agent receives it under the reported profile.

    The item goes uniformly to the agents holding the highest (score, tier);
    nobody gets it when that score is negative, and at score 0 each tied
    winner's share is further scaled by the coin of its class.
    """
    m = len(profile[0])
    items: list[ItemDistribution] = []
    for j in range(m):
        winners, best = _winners(hierarchy, profile, j)
        if best < 0:
            items.append({})
            continue
        share = Fraction(1, len(winners))
        if best == 0:
            items.append({i: share * hierarchy.coin(i, j, profile[i]) for i in winners})
        else:
            items.append(dict.fromkeys(winners, share))
    return tuple(items)


def expost_allocate(hierarchy: HierarchyRule, profile: Profile, rng: np.random.Generator) -> tuple[int | None, ...]:
    """Draw one winner (or None) per item."""
    m = len(profile[0])
    allocation: list[int | None] = []
    for j in range(m):
        winners, best = _winners(hierarchy, profile, j)
        if best < 0:
            allocation.append(None)
            continue
        winner = winners[int(rng.integers(len(winners)))]
        if best == 0 and rng.random() >= float(hierarchy.coin(winner, j, profile[winner])):
            allocation.append(None)
            continue
        allocation.append(winner)
    return tuple(allocation)


def interim_from_expost(
    hierarchy: HierarchyRule, typespace: TypeSpace, guards: Guards | None = None
) -> tuple[dict[Valuation, tuple[Fraction, ...]], ...]:
    """Exact interim allocations by summing the ex-post measure over every opponent profile."""
    resolve_guards(guards).check_expost(typespace.n * typespace.profile_count)
    tables: list[dict[Valuation, tuple[Fraction, ...]]] = []
    for i, agent in enumerate(typespace.agents):
        table: dict[Valuation, tuple[Fraction, ...]] = {}
        for v in agent.types:
            totals = [ZERO] * typespace.m
            for others, weight in typespace.opponents(i):
                profile = (*others[:i], v, *others[i:])
                for j, dist in enumerate(expost_distribution(hierarchy, profile)):
                    totals[j] += weight * dist.get(i, ZERO)
            table[v] = tuple(totals)
        tables.append(table)
    logger.debug("recomputed interim tables over %d profiles", typespace.profile_count)
    return tuple(tables)

