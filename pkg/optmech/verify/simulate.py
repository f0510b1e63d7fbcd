"""Monte Carlo estimates of revenue and interim allocations.

This is the only place floats are used, and only for reporting: profiles are
drawn from the exact type distributions and every trial runs the hierarchy
rule vectorized over all trials at once.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from ..config import DEFAULT_MC_TRIALS, DEFAULT_SEED, Guards, resolve_guards
from ..errors import InputError, StructuralError
from ..model import InterimMechanism, TypeSpace, Valuation

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SimulationResult:
    trials: int
    seed: int
    revenue: float
    revenue_se: float
    pi: dict[tuple[int, Valuation], tuple[float, ...]]
    pi_se: dict[tuple[int, Valuation], tuple[float, ...]]
    counts: dict[tuple[int, Valuation], int]


def _standard_error(samples: np.ndarray) -> float:
    if samples.size < 2:
        return math.nan
    return float(samples.std(ddof=1) / math.sqrt(samples.size))


def _draw_types(typespace: TypeSpace, trials: int, rng: np.random.Generator) -> np.ndarray:
    draws = np.empty((typespace.n, trials), dtype=np.int64)
    for i, agent in enumerate(typespace.agents):
        probs = np.array([float(agent.prob[v]) for v in agent.types])
        draws[i] = rng.choice(len(agent), size=trials, p=probs / probs.sum())
    return draws


def _allocate_item(
    mechanism: InterimMechanism, typespace: TypeSpace, draws: np.ndarray, j: int, rng: np.random.Generator
) -> np.ndarray:
    """Boolean (n, trials) array: who receives item j in each trial."""
    rule = mechanism.hierarchy
    n, trials = draws.shape
    keys = sorted({rule.key(i, j, v) for i, agent in enumerate(typespace.agents) for v in agent.types})
    rank = {key: r for r, key in enumerate(keys)}
    ranks = np.empty((n, trials))
    signs = np.empty((n, trials), dtype=np.int8)
    coins = np.empty((n, trials))
    for i, agent in enumerate(typespace.agents):
        ranks[i] = np.array([rank[rule.key(i, j, v)] for v in agent.types], dtype=float)[draws[i]]
        signs[i] = np.sign(np.array([float(rule.score_of(i, j, v)) for v in agent.types]))[draws[i]]
        coins[i] = np.array([float(rule.coin(i, j, v)) for v in agent.types])[draws[i]]
    # ranks are integers, so the jitter only reorders exact ties, uniformly
    winner = (ranks + 0.5 * rng.random((n, trials))).argmax(axis=0)
    column = np.arange(trials)
    best_sign = signs[winner, column]
    allocated = (best_sign > 0) | ((best_sign == 0) & (rng.random(trials) < coins[winner, column]))
    return (np.arange(n)[:, None] == winner[None, :]) & allocated[None, :]


def mc_simulate(
    mechanism: InterimMechanism,
    typespace: TypeSpace,
    trials: int = DEFAULT_MC_TRIALS,
    seed: int = DEFAULT_SEED,
    guards: Guards | None = None,
) -> SimulationResult:
    if trials < 1:
        raise InputError(f"trials: must be at least 1, got {trials}")
    resolve_guards(guards).check_trials(trials)
    if mechanism.hierarchy is None:
        raise StructuralError("simulation needs the mechanism's hierarchy rule")
    rng = np.random.default_rng(seed)
    draws = _draw_types(typespace, trials, rng)

    revenue = np.zeros(trials)
    for i, agent in enumerate(typespace.agents):
        revenue += np.array([float(mechanism.pay[i][v]) for v in agent.types])[draws[i]]

    won = np.stack([_allocate_item(mechanism, typespace, draws, j, rng) for j in range(typespace.m)], axis=1)
    pi: dict[tuple[int, Valuation], tuple[float, ...]] = {}
    pi_se: dict[tuple[int, Valuation], tuple[float, ...]] = {}
    counts: dict[tuple[int, Valuation], int] = {}
    for i, agent in enumerate(typespace.agents):
        for t, v in enumerate(agent.types):
            mask = draws[i] == t
            counts[(i, v)] = int(mask.sum())
            samples = [won[i, j, mask].astype(float) for j in range(typespace.m)]
            pi[(i, v)] = tuple(float(s.mean()) if s.size else math.nan for s in samples)
            pi_se[(i, v)] = tuple(_standard_error(s) for s in samples)

    logger.info("simulated %d trials (seed %d): revenue %.6f", trials, seed, revenue.mean())
    return SimulationResult(
        trials=trials,
        seed=seed,
        revenue=float(revenue.mean()),
        revenue_se=_standard_error(revenue),
        pi=pi,
        pi_se=pi_se,
        counts=counts,
    )
