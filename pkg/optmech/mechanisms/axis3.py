"""n i.i.d. agents and two non-identical bi-valued items (p >= q).

The shared flow has a single free parameter x, the mass routed from (b,b)
through (a,b) rather than (b,a). Every (p, q) falls in one of seven regions;
each region fixes x, and where a score lands exactly on zero the region also
fixes the coin that allocates it, so the closed-form interim tables below are
exactly what the hierarchy rule produces.
"""

from __future__ import annotations

import logging
from collections.abc import Iterator
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Literal

from ..duality import FlowGraph, decompose_flow, induced_payments
from ..errors import ClassificationError, RegionPreconditionError
from ..model import (
    Axis3Setting,
    HierarchyRule,
    InterimMechanism,
    TypeSpace,
    Valuation,
    ValuePair,
    enumerate_types,
    replicate_tables,
)
from ..numerics import ONE, ZERO, format_rational

logger = logging.getLogger(__name__)

type RegionId = Literal["R1", "R2", "R3", "R4", "R5", "R6", "R7"]
type Variant = Literal["I", "II"]

REGIONS: tuple[RegionId, ...] = ("R1", "R2", "R3", "R4", "R5", "R6", "R7")

# (item, class) whose score a region pins to zero; the coin decides it
_PINNED: dict[RegionId, tuple[int, str]] = {
    "R2": (0, "ab"),
    "R3": (0, "aa"),
    "R4": (1, "ba"),
    "R5": (1, "aa"),
}


@dataclass(frozen=True)
class Region:
    id: RegionId
    x: Fraction
    variant: Variant
    zero_score_target: tuple[int, Valuation] | None = None
    coin: Fraction | None = None


@dataclass(frozen=True)
class Axis3Interim:
    """Interim allocations by class: item 1 (index 0) and item 2 (index 1)."""

    pi1_bb: Fraction
    pi2_bb: Fraction
    pi1_ab: Fraction
    pi2_ba: Fraction
    pi1_aa: Fraction
    pi2_aa: Fraction

    def table(self, setting: Axis3Setting) -> dict[Valuation, tuple[Fraction, Fraction]]:
        bb, ba, ab, aa = _types(setting)
        return {
            bb: (self.pi1_bb, self.pi2_bb),
            ba: (self.pi1_bb, self.pi2_ba),
            ab: (self.pi1_ab, self.pi2_bb),
            aa: (self.pi1_aa, self.pi2_aa),
        }


def _types(setting: Axis3Setting) -> tuple[Valuation, Valuation, Valuation, Valuation]:
    a, b = setting.values.a, setting.values.b
    return (b, b), (b, a), (a, b), (a, a)


def _ratio(setting: Axis3Setting) -> Fraction:
    """a/(b-a)."""
    return setting.values.a / setting.values.spread


def _threshold(setting: Axis3Setting) -> Fraction:
    a, b = setting.values.a, setting.values.b
    return (b - a) / (b + a)


def axis3_full_interim(setting: Axis3Setting) -> Axis3Interim:
    n, p, q = setting.n, setting.p, setting.q
    pi1_bb = (1 - p**n) / (n * (1 - p))
    pi2_bb = (1 - q**n) / (n * (1 - q))
    both_low = (p * q) ** (n - 1) / n
    return Axis3Interim(
        pi1_bb=pi1_bb,
        pi2_bb=pi2_bb,
        pi1_ab=p ** (n - 1) * pi2_bb,
        pi2_ba=q ** (n - 1) * pi1_bb,
        pi1_aa=both_low,
        pi2_aa=both_low,
    )


def axis3_region_slacks(setting: Axis3Setting) -> dict[str, Fraction]:
    """Signed margins of every classifier test; a positive margin means the test passes."""
    a, b = setting.values.a, setting.values.b
    p, q = setting.p, setting.q
    full = axis3_full_interim(setting)
    return {
        "r1_margin": (1 - p) * (1 - q) / (1 - p * q) - a / b,
        "low_p_margin": (b - a) / b - p,
        "variant_i_margin": full.pi1_aa - (full.pi1_ab - full.pi2_ba),
        "r7_margin": _ratio(setting) - (1 - q) / (p * q),
        "p_high_margin": p - b / (a + b),
        "pq_margin": _threshold(setting) - p * q,
        "q_margin": q - (b - a) / b,
    }


def _region_id(setting: Axis3Setting) -> RegionId:
    a, b = setting.values.a, setting.values.b
    p, q = setting.p, setting.q
    c = _ratio(setting)
    threshold = _threshold(setting)
    if (1 - p) * (1 - q) / (1 - p * q) > a / b:
        return "R1"
    if p < (b - a) / b:
        return "R2"
    full = axis3_full_interim(setting)
    variant_i = full.pi1_ab - full.pi2_ba <= full.pi1_aa
    h2_low_negative = (1 - q) / (p * q) > c
    if not variant_i and h2_low_negative:
        return "R6"
    if not h2_low_negative:
        return "R7"
    if (b - a) / b <= p <= b / (a + b) and p * q <= threshold:
        return "R3"
    if p >= b / (a + b) and q <= (b - a) / b:
        return "R4"
    if p * q >= threshold and q >= (b - a) / b:
        return "R5"
    raise ClassificationError(
        f"no region for n={setting.n} a={format_rational(a)} b={format_rational(b)} "
        f"p={format_rational(p)} q={format_rational(q)}"
    )


def axis3_x(setting: Axis3Setting, region: RegionId) -> Fraction:
    p, q = setting.p, setting.q
    c = _ratio(setting)
    cap = (1 - p) * (1 - q)
    match region:
        case "R1":
            lo, hi = c * p * (1 - q), cap - c * (1 - p) * q
            if lo > hi:
                raise RegionPreconditionError(
                    f"R1 flow interval is empty: [{format_rational(lo)}, {format_rational(hi)}]"
                )
            x = (lo + hi) / 2
        case "R2":
            x = c * p * (1 - q)
        case "R3":
            x = 1 - p - c * p * q
        case "R4":
            x = cap - c * (1 - p) * q
        case "R5":
            x = c * p * q - p * (1 - q)
        case _:
            x = cap
    if not ZERO <= x <= cap:
        raise RegionPreconditionError(
            f"{region}: x={format_rational(x)} outside [0, {format_rational(cap)}]"
        )
    return x


def axis3_virtual(setting: Axis3Setting, x: Fraction) -> dict[tuple[int, Valuation], Fraction]:
    p, q = setting.p, setting.q
    a, b, spread = setting.values.a, setting.values.b, setting.values.spread
    bb, ba, ab, aa = _types(setting)
    return {
        (0, bb): b,
        (1, bb): b,
        (0, ba): b,
        (1, ba): a - ((1 - p) * (1 - q) - x) / ((1 - p) * q) * spread,
        (0, ab): a - x / (p * (1 - q)) * spread,
        (1, ab): b,
        (0, aa): a - (1 - p - x) / (p * q) * spread,
        (1, aa): a - (p * (1 - q) + x) / (p * q) * spread,
    }


def axis3_delta(setting: Axis3Setting, region: RegionId, full: Axis3Interim | None = None) -> Fraction:
    """Coin on the zero-score class that makes pi2(b,a) - pi1(a,b) + pi1(a,a) - pi2(a,a) vanish."""
    full = full or axis3_full_interim(setting)
    n, p, q = setting.n, setting.p, setting.q
    both_low = (p * q) ** (n - 1)
    match region:
        case "R2":
            delta = full.pi2_ba / full.pi1_ab
        case "R3":
            delta = n * (full.pi1_ab - full.pi2_ba) / both_low
        case "R4":
            delta = (full.pi1_ab - full.pi1_aa) / full.pi2_ba
        case "R5":
            delta = n * (full.pi2_ba - full.pi1_ab + full.pi1_aa) / both_low
        case _:
            raise RegionPreconditionError(f"{region} has no zero-score coin")
    if not ZERO <= delta <= ONE:
        raise RegionPreconditionError(f"{region}: coin {format_rational(delta)} outside [0, 1]")
    return delta


def axis3_classify(setting: Axis3Setting) -> Region:
    region_id = _region_id(setting)
    x = axis3_x(setting, region_id)
    variant: Variant = "II" if x == (1 - setting.p) * (1 - setting.q) else "I"
    target = coin = None
    if region_id in _PINNED:
        item, cls = _PINNED[region_id]
        bb, ba, ab, aa = _types(setting)
        target = (item, {"ab": ab, "ba": ba, "aa": aa}[cls])
        coin = axis3_delta(setting, region_id)
    logger.info(
        "axis3 n=%d p=%s q=%s: %s x=%s variant %s coin=%s",
        setting.n,
        setting.p,
        setting.q,
        region_id,
        x,
        variant,
        coin,
    )
    return Region(id=region_id, x=x, variant=variant, zero_score_target=target, coin=coin)


def axis3_flow(setting: Axis3Setting, region: Region, agent: int = 0) -> FlowGraph:
    p, q, x = setting.p, setting.q, region.x
    bb, ba, ab, aa = _types(setting)
    prob = enumerate_types(setting).agents[agent].prob
    edges = {
        (bb, ba): (1 - p) * (1 - q) - x,
        (bb, ab): x,
        (ba, aa): 1 - p - x,
        (ab, aa): p * (1 - q) + x,
    }
    return FlowGraph(
        agent=agent,
        nodes=(bb, ba, ab, aa),
        source=dict(prob),
        lam={edge: f for edge, f in edges.items() if f},
        mu={bb: ZERO, ba: ZERO, ab: ZERO, aa: ONE},
    )


def axis3_flows(setting: Axis3Setting, region: Region | None = None) -> tuple[FlowGraph, ...]:
    region = region or axis3_classify(setting)
    return tuple(axis3_flow(setting, region, agent=i) for i in range(setting.n))


def _coins(setting: Axis3Setting, region: Region) -> dict[tuple[int, Valuation], Fraction]:
    _, ba, ab, aa = _types(setting)
    delta = region.coin if region.coin is not None else ONE
    match region.id:
        case "R1":
            return {(0, ab): ZERO, (0, aa): ZERO, (1, ba): ZERO, (1, aa): ZERO}
        case "R2":
            return {(0, ab): delta, (0, aa): ZERO, (1, ba): ONE, (1, aa): ZERO}
        case "R3":
            return {(0, aa): delta, (1, aa): ZERO}
        case "R4":
            return {(1, ba): delta, (1, aa): ZERO}
        case "R5":
            return {(1, aa): delta}
        case "R6":
            return {(1, aa): ZERO}
        case _:
            return {}


def _tiers(setting: Axis3Setting) -> dict[tuple[int, Valuation], int]:
    _, ba, ab, _ = _types(setting)
    return {(0, ab): 1, (1, ba): 1}


def axis3_scores(setting: Axis3Setting, region: Region | None = None) -> HierarchyRule:
    """Flow scores with (a,b) ranked over (a,a) on item 1 and (b,a) over (a,a) on item 2."""
    region = region or axis3_classify(setting)
    return HierarchyRule.replicated(
        setting.n, axis3_virtual(setting, region.x), _tiers(setting), _coins(setting, region)
    )


def _allocated(full: Fraction, score: Fraction, coin: Fraction) -> Fraction:
    if score < 0:
        return ZERO
    return full * coin if score == 0 else full


def axis3_interim(setting: Axis3Setting, region: Region | None = None) -> Axis3Interim:
    region = region or axis3_classify(setting)
    _, ba, ab, aa = _types(setting)
    full = axis3_full_interim(setting)
    scores = axis3_virtual(setting, region.x)
    coins = _coins(setting, region)

    def scaled(item: int, v: Valuation, value: Fraction) -> Fraction:
        return _allocated(value, scores[(item, v)], coins.get((item, v), ONE))

    return replace(
        full,
        pi1_ab=scaled(0, ab, full.pi1_ab),
        pi2_ba=scaled(1, ba, full.pi2_ba),
        pi1_aa=scaled(0, aa, full.pi1_aa),
        pi2_aa=scaled(1, aa, full.pi2_aa),
    )


def axis3_payments(setting: Axis3Setting, region: Region, pi: Axis3Interim) -> dict[Valuation, Fraction]:
    a, b, spread = setting.values.a, setting.values.b, setting.values.spread
    bb, ba, ab, aa = _types(setting)
    highs = b * (pi.pi1_bb + pi.pi2_bb)
    if region.variant == "I":
        top = highs - spread * (pi.pi2_ba + pi.pi1_aa)
    else:
        top = highs - spread * (pi.pi1_ab + pi.pi2_aa)
    return {
        bb: top,
        ba: b * pi.pi1_bb + a * pi.pi2_ba - spread * pi.pi1_aa,
        ab: a * pi.pi1_ab + b * pi.pi2_bb - spread * pi.pi2_aa,
        aa: a * (pi.pi1_aa + pi.pi2_aa),
    }


@dataclass(frozen=True)
class Axis3Mechanism:
    """Everything is kept in canonical item order (p >= q); ``as_given`` undoes the swap."""

    setting: Axis3Setting
    region: Region
    hierarchy: HierarchyRule
    tables: Axis3Interim
    interim: InterimMechanism
    revenue: Fraction

    @property
    def typespace(self) -> TypeSpace:
        return enumerate_types(self.setting)

    def flows(self) -> tuple[FlowGraph, ...]:
        return axis3_flows(self.setting, self.region)

    def as_given(self) -> InterimMechanism:
        return self.interim.permuted_items((1, 0)) if self.setting.swapped else self.interim

    def flows_as_given(self) -> tuple[FlowGraph, ...]:
        flows = self.flows()
        return tuple(f.permuted_items((1, 0)) for f in flows) if self.setting.swapped else flows

    def typespace_as_given(self) -> TypeSpace:
        return self.typespace.permuted_items((1, 0)) if self.setting.swapped else self.typespace


def axis3_mechanism(setting: Axis3Setting) -> Axis3Mechanism:
    region = axis3_classify(setting)
    tables = axis3_interim(setting, region)
    hierarchy = axis3_scores(setting, region)
    n = setting.n
    interim = InterimMechanism(
        pi=replicate_tables(n, tables.table(setting)),
        pay=replicate_tables(n, axis3_payments(setting, region, tables)),
        hierarchy=hierarchy,
        source=f"axis3/{region.id}",
    )
    typespace = enumerate_types(setting)
    return Axis3Mechanism(
        setting=setting,
        region=region,
        hierarchy=hierarchy,
        tables=tables,
        interim=interim,
        revenue=interim.revenue(typespace),
    )


def axis3_flow_induced_mechanism(setting: Axis3Setting) -> InterimMechanism:
    """The mechanism of the R6/R7 flow with H1(a,b) = H1(a,a) left as an even tie, with induced payments."""
    region = axis3_classify(setting)
    if region.variant != "II":
        raise RegionPreconditionError(f"{region.id} is not a variant II region")
    n, p = setting.n, setting.p
    tables = axis3_interim(setting, region)
    tied = p ** (n - 1) / n
    tables = replace(tables, pi1_ab=tied, pi1_aa=tied)
    pi = tables.table(setting)
    flow = axis3_flow(setting, region)
    payments = induced_payments(flow, decompose_flow(flow), pi)
    score = axis3_virtual(setting, region.x)
    _, ba, _, _ = _types(setting)
    hierarchy = HierarchyRule.replicated(n, score, {(1, ba): 1}, _coins(setting, region))
    return InterimMechanism(
        pi=replicate_tables(n, pi),
        pay=replicate_tables(n, payments),
        hierarchy=hierarchy,
        source=f"axis3/{region.id}/flow",
    )


@dataclass(frozen=True)
class RegionCell:
    p: Fraction
    q: Fraction
    region: RegionId | None


def axis3_region_map(n: int, values: ValuePair, grid: int) -> Iterator[RegionCell]:
    """Every (p, q) with p >= q on the interior grid {1/G, ..., (G-1)/G}."""
    for i in range(1, grid):
        for k in range(1, i + 1):
            setting = Axis3Setting(n=n, values=values, p=Fraction(i, grid), q=Fraction(k, grid))
            try:
                region: RegionId | None = _region_id(setting)
            except ClassificationError:
                logger.warning("no region at p=%s q=%s", setting.p, setting.q)
                region = None
            yield RegionCell(p=setting.p, q=setting.q, region=region)
