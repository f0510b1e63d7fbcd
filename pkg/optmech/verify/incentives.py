"""Exhaustive BIC and BIR checks over interim tables."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction

from ..model import InterimMechanism, TypeSpace, Valuation
from ..numerics import ZERO

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DeviationWitness:
    agent: int
    true_type: Valuation
    report: Valuation
    gain: Fraction


@dataclass(frozen=True)
class ParticipationWitness:
    agent: int
    true_type: Valuation
    utility: Fraction


def check_bic(mechanism: InterimMechanism, typespace: TypeSpace) -> DeviationWitness | None:
    """Return the most profitable misreport, or None when truthful reporting is optimal for every type."""
    worst: DeviationWitness | None = None
    for i, agent in enumerate(typespace.agents):
        for true in agent.types:
            truthful = mechanism.utility(i, true, true)
            for report in agent.types:
                if report == true:
                    continue
                gain = mechanism.utility(i, true, report) - truthful
                if gain > ZERO and (worst is None or gain > worst.gain):
                    worst = DeviationWitness(agent=i, true_type=true, report=report, gain=gain)
    if worst is not None:
        logger.info("BIC violated: agent %d gains %s by misreporting", worst.agent, worst.gain)
    return worst


def check_bir(mechanism: InterimMechanism, typespace: TypeSpace) -> ParticipationWitness | None:
    """Return the type with the most negative truthful utility, or None when all are nonnegative."""
    worst: ParticipationWitness | None = None
    for i, agent in enumerate(typespace.agents):
        for v in agent.types:
            utility = mechanism.utility(i, v, v)
            if utility < ZERO and (worst is None or utility < worst.utility):
                worst = ParticipationWitness(agent=i, true_type=v, utility=utility)
    if worst is not None:
        logger.info("BIR violated: agent %d type utility %s", worst.agent, worst.utility)
    return worst
