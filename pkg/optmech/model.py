"""Settings, type spaces, hierarchy rules and the interim-mechanism table.

Type order is fixed: for bi-valued settings each coordinate runs b before a, so
two items enumerate as (b,b), (b,a), (a,b), (a,a). Bundling supports enumerate
in ascending lexicographic order.
"""

from __future__ import annotations

import itertools
from collections.abc import Iterator, Mapping, Sequence
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Literal

from .errors import InputError, StructuralError, UnknownTypeError
from .numerics import ONE, ZERO, format_rational

type Valuation = tuple[Fraction, ...]
type Profile = tuple[Valuation, ...]
type SettingKind = Literal["axis1", "axis2", "axis3", "bundling"]
# (agent, item, type)
type RuleKey = tuple[int, int, Valuation]


def _open_unit(value: Fraction, name: str) -> None:
    if not ZERO < value < ONE:
        raise InputError(f"{name}: must lie strictly between 0 and 1, got {format_rational(value)}")


def _positive_int(value: int, name: str) -> None:
    if isinstance(value, bool) or not isinstance(value, int) or value < 1:
        raise InputError(f"{name}: must be a positive integer, got {value!r}")


@dataclass(frozen=True)
class ValuePair:
    a: Fraction
    b: Fraction

    def __post_init__(self) -> None:
        if not ZERO < self.a < self.b:
            raise InputError(
                f"values: need 0 < a < b, got a={format_rational(self.a)} b={format_rational(self.b)}"
            )

    @property
    def spread(self) -> Fraction:
        return self.b - self.a


@dataclass(frozen=True)
class Axis1Setting:
    """n i.i.d. agents, m i.i.d. items; each item is worth a with probability p."""

    n: int
    m: int
    values: ValuePair
    p: Fraction
    kind: SettingKind = field(default="axis1", init=False)

    def __post_init__(self) -> None:
        _positive_int(self.n, "n")
        _positive_int(self.m, "m")
        _open_unit(self.p, "p")


@dataclass(frozen=True)
class Axis2Setting:
    """n independent agents with their own q_i, two i.i.d. items.

    ``q`` is stored in descending order; ``order[k]`` is the original index of
    the agent now at position k.
    """

    values: ValuePair
    q: tuple[Fraction, ...]
    order: tuple[int, ...]
    kind: SettingKind = field(default="axis2", init=False)

    def __post_init__(self) -> None:
        if not self.q:
            raise InputError("q: need at least one agent")
        for index, q_i in enumerate(self.q):
            _open_unit(q_i, f"q[{index}]")
        if list(self.q) != sorted(self.q, reverse=True):
            raise InputError("q: must be sorted in descending order, use Axis2Setting.build")
        if sorted(self.order) != list(range(len(self.q))):
            raise InputError("order: must be a permutation of the agent indices")

    @classmethod
    def build(cls, values: ValuePair, q: Sequence[Fraction]) -> Axis2Setting:
        for index, q_i in enumerate(q):
            _open_unit(q_i, f"q[{index}]")
        order = sorted(range(len(q)), key=lambda i: (-q[i], i))
        return cls(values=values, q=tuple(q[i] for i in order), order=tuple(order))

    @property
    def n(self) -> int:
        return len(self.q)

    @property
    def m(self) -> int:
        return 2

    @property
    def original_q(self) -> tuple[Fraction, ...]:
        restored = [ZERO] * self.n
        for position, original in enumerate(self.order):
            restored[original] = self.q[position]
        return tuple(restored)


@dataclass(frozen=True)
class Axis3Setting:
    """n i.i.d. agents, two items with low-value probabilities p >= q.

    ``swapped`` records that the caller gave the items in the other order.
    """

    n: int
    values: ValuePair
    p: Fraction
    q: Fraction
    swapped: bool = False
    kind: SettingKind = field(default="axis3", init=False)

    def __post_init__(self) -> None:
        _positive_int(self.n, "n")
        _open_unit(self.p, "p")
        _open_unit(self.q, "q")
        if self.q > self.p:
            raise InputError("q: must not exceed p, use Axis3Setting.build to canonicalize")

    @classmethod
    def build(cls, n: int, values: ValuePair, p: Fraction, q: Fraction) -> Axis3Setting:
        _open_unit(p, "p")
        _open_unit(q, "q")
        if q > p:
            return cls(n=n, values=values, p=q, q=p, swapped=True)
        return cls(n=n, values=values, p=p, q=q)

    @property
    def m(self) -> int:
        return 2


@dataclass(frozen=True)
class BundlingSetting:
    """One agent, m independent items with values shifted by a common c."""

    c: Fraction
    supports: tuple[tuple[Fraction, ...], ...]
    probs: tuple[tuple[Fraction, ...], ...]
    delta_mass: Fraction
    kind: SettingKind = field(default="bundling", init=False)

    def __post_init__(self) -> None:
        if self.c < 0:
            raise InputError(f"c: must be nonnegative, got {format_rational(self.c)}")
        if not self.supports:
            raise InputError("supports: need at least one item")
        if len(self.supports) != len(self.probs):
            raise InputError("probs: need one probability list per item")
        if not ZERO < self.delta_mass <= ONE:
            raise InputError(f"delta_mass: must lie in (0, 1], got {format_rational(self.delta_mass)}")
        for j, (support, probs) in enumerate(zip(self.supports, self.probs, strict=True)):
            if not support:
                raise InputError(f"supports[{j}]: empty support")
            if len(support) != len(probs):
                raise InputError(f"probs[{j}]: length {len(probs)} does not match support length {len(support)}")
            if support[0] <= 0 or any(lo >= hi for lo, hi in itertools.pairwise(support)):
                raise InputError(f"supports[{j}]: values must be positive and strictly increasing")
            if any(prob <= 0 for prob in probs):
                raise InputError(f"probs[{j}]: probabilities must be positive")
            if sum(probs, ZERO) != ONE:
                raise InputError(f"probs[{j}]: probabilities must sum to 1, got {format_rational(sum(probs, ZERO))}")
            if probs[0] < self.delta_mass:
                raise InputError(
                    f"probs[{j}]: mass {format_rational(probs[0])} on the lowest value is below "
                    f"delta_mass {format_rational(self.delta_mass)}"
                )

    @property
    def n(self) -> int:
        return 1

    @property
    def m(self) -> int:
        return len(self.supports)

    @property
    def v_min(self) -> Fraction:
        return min(support[0] for support in self.supports)

    @property
    def v_max(self) -> Fraction:
        return max(support[-1] for support in self.supports)

    @property
    def base_type(self) -> Valuation:
        """The all-minimum type, shift included."""
        return tuple(self.c + support[0] for support in self.supports)


type Setting = Axis1Setting | Axis2Setting | Axis3Setting | BundlingSetting


@dataclass(frozen=True)
class AgentTypes:
    types: tuple[Valuation, ...]
    prob: Mapping[Valuation, Fraction]
    high_count: Mapping[Valuation, int] | None = None

    def __post_init__(self) -> None:
        if sum(self.prob.values(), ZERO) != ONE:
            raise StructuralError("type probabilities must sum to 1")

    @cached_property
    def _index(self) -> dict[Valuation, int]:
        return {v: i for i, v in enumerate(self.types)}

    def index(self, v: Valuation) -> int:
        try:
            return self._index[v]
        except KeyError:
            raise UnknownTypeError(f"unknown type {format_valuation(v)}") from None

    def pr(self, v: Valuation) -> Fraction:
        try:
            return self.prob[v]
        except KeyError:
            raise UnknownTypeError(f"unknown type {format_valuation(v)}") from None

    def __contains__(self, v: object) -> bool:
        return v in self.prob

    def __len__(self) -> int:
        return len(self.types)


@dataclass(frozen=True)
class TypeSpace:
    agents: tuple[AgentTypes, ...]
    m: int
    values: ValuePair | None = None

    @property
    def n(self) -> int:
        return len(self.agents)

    @property
    def profile_count(self) -> int:
        count = 1
        for agent in self.agents:
            count *= len(agent)
        return count

    def profiles(self) -> Iterator[Profile]:
        return itertools.product(*(agent.types for agent in self.agents))

    def permuted_items(self, order: Sequence[int]) -> TypeSpace:
        """Reorder items in every type; bi-valued type lists keep their fixed order."""

        def perm(v: Valuation) -> Valuation:
            return tuple(v[j] for j in order)

        agents = []
        for agent in self.agents:
            moved = {perm(v) for v in agent.types}
            types = agent.types if moved == set(agent.types) else tuple(perm(v) for v in agent.types)
            high = None if agent.high_count is None else {perm(v): k for v, k in agent.high_count.items()}
            agents.append(AgentTypes(types=types, prob={perm(v): pr for v, pr in agent.prob.items()}, high_count=high))
        return TypeSpace(agents=tuple(agents), m=self.m, values=self.values)

    def opponents(self, i: int) -> Iterator[tuple[Profile, Fraction]]:
        """Every profile of the agents other than i with its probability."""
        others = [agent for k, agent in enumerate(self.agents) if k != i]
        for combo in itertools.product(*(agent.types for agent in others)):
            weight = ONE
            for agent, v in zip(others, combo, strict=True):
                weight *= agent.prob[v]
            yield combo, weight


def format_valuation(v: Valuation) -> str:
    return "(" + ",".join(format_rational(x) for x in v) + ")"


def _bivalued_types(m: int, values: ValuePair, low_probs: Sequence[Fraction]) -> AgentTypes:
    types: list[Valuation] = []
    prob: dict[Valuation, Fraction] = {}
    high: dict[Valuation, int] = {}
    for v in itertools.product((values.b, values.a), repeat=m):
        weight = ONE
        for x, p_j in zip(v, low_probs, strict=True):
            weight *= p_j if x == values.a else 1 - p_j
        types.append(v)
        prob[v] = weight
        high[v] = sum(1 for x in v if x == values.b)
    return AgentTypes(types=tuple(types), prob=prob, high_count=high)


def enumerate_types(setting: Setting) -> TypeSpace:
    match setting:
        case Axis1Setting():
            agent = _bivalued_types(setting.m, setting.values, [setting.p] * setting.m)
            return TypeSpace(agents=(agent,) * setting.n, m=setting.m, values=setting.values)
        case Axis2Setting():
            agents = tuple(_bivalued_types(2, setting.values, [q_i, q_i]) for q_i in setting.q)
            return TypeSpace(agents=agents, m=2, values=setting.values)
        case Axis3Setting():
            agent = _bivalued_types(2, setting.values, [setting.p, setting.q])
            return TypeSpace(agents=(agent,) * setting.n, m=2, values=setting.values)
        case BundlingSetting():
            types: list[Valuation] = []
            prob: dict[Valuation, Fraction] = {}
            columns = [list(zip(s, ps, strict=True)) for s, ps in zip(setting.supports, setting.probs, strict=True)]
            for combo in itertools.product(*columns):
                v = tuple(setting.c + x for x, _ in combo)
                weight = ONE
                for _, pr in combo:
                    weight *= pr
                types.append(v)
                prob[v] = weight
            return TypeSpace(agents=(AgentTypes(types=tuple(types), prob=prob),), m=setting.m)
    raise InputError(f"unsupported setting {type(setting).__name__}")


def profile_prob(typespace: TypeSpace, profile: Profile) -> Fraction:
    if len(profile) != typespace.n:
        raise StructuralError(f"profile has {len(profile)} reports for {typespace.n} agents")
    weight = ONE
    for agent, v in zip(typespace.agents, profile, strict=True):
        weight *= agent.pr(v)
    return weight


@dataclass(frozen=True)
class HierarchyRule:
    """Scores H plus the tie-break data of a hierarchy allocation.

    ``tier`` breaks exact score ties lexicographically (higher tier wins);
    ``zero_coin`` is the probability an item is allocated at all when the best
    score is exactly 0, keyed by the class that holds that score. Missing keys
    default to tier 0 and coin 1.
    """

    score: Mapping[RuleKey, Fraction]
    tier: Mapping[RuleKey, int] = field(default_factory=dict)
    zero_coin: Mapping[RuleKey, Fraction] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for key, coin in self.zero_coin.items():
            if not ZERO <= coin <= ONE:
                raise InputError(f"zero_coin{key[:2]}: must lie in [0, 1], got {format_rational(coin)}")

    @classmethod
    def replicated(
        cls,
        n: int,
        score: Mapping[tuple[int, Valuation], Fraction],
        tier: Mapping[tuple[int, Valuation], int] | None = None,
        zero_coin: Mapping[tuple[int, Valuation], Fraction] | None = None,
    ) -> HierarchyRule:
        """Same per-(item, type) data for every one of n i.i.d. agents."""
        return cls(
            score={(i, j, v): h for i in range(n) for (j, v), h in score.items()},
            tier={(i, j, v): t for i in range(n) for (j, v), t in (tier or {}).items()},
            zero_coin={(i, j, v): c for i in range(n) for (j, v), c in (zero_coin or {}).items()},
        )

    def score_of(self, i: int, j: int, v: Valuation) -> Fraction:
        try:
            return self.score[(i, j, v)]
        except KeyError:
            raise UnknownTypeError(f"no score for agent {i}, item {j}, type {format_valuation(v)}") from None

    def key(self, i: int, j: int, v: Valuation) -> tuple[Fraction, int]:
        return self.score_of(i, j, v), self.tier.get((i, j, v), 0)

    def coin(self, i: int, j: int, v: Valuation) -> Fraction:
        return self.zero_coin.get((i, j, v), ONE)


@dataclass(frozen=True)
class InterimMechanism:
    """Interim allocations and payments per agent and type."""

    pi: tuple[Mapping[Valuation, tuple[Fraction, ...]], ...]
    pay: tuple[Mapping[Valuation, Fraction], ...]
    hierarchy: HierarchyRule | None = None
    source: str = ""

    def __post_init__(self) -> None:
        if len(self.pi) != len(self.pay):
            raise StructuralError("pi and pay must cover the same agents")
        for i, table in enumerate(self.pi):
            for v, row in table.items():
                if any(not ZERO <= x <= ONE for x in row):
                    raise StructuralError(f"agent {i} type {format_valuation(v)}: interim allocation outside [0, 1]")

    @property
    def n(self) -> int:
        return len(self.pi)

    def utility(self, i: int, true: Valuation, report: Valuation) -> Fraction:
        """E[u_i(true -> report)]."""
        row = self.pi[i][report]
        return sum((x * y for x, y in zip(true, row, strict=True)), ZERO) - self.pay[i][report]

    def revenue(self, typespace: TypeSpace) -> Fraction:
        total = ZERO
        for i, agent in enumerate(typespace.agents):
            for v in agent.types:
                total += agent.prob[v] * self.pay[i][v]
        return total

    def with_payment(self, i: int, v: Valuation, value: Fraction) -> InterimMechanism:
        pay = [dict(table) for table in self.pay]
        pay[i][v] = value
        return InterimMechanism(pi=self.pi, pay=tuple(pay), hierarchy=self.hierarchy, source=self.source)

    def permuted_items(self, order: Sequence[int]) -> InterimMechanism:
        """Reorder items: new item k is old item order[k]. Types are permuted alike."""

        def perm(row: tuple) -> tuple:
            return tuple(row[j] for j in order)

        pi = tuple({perm(v): perm(row) for v, row in table.items()} for table in self.pi)
        pay = tuple({perm(v): p for v, p in table.items()} for table in self.pay)
        hierarchy = None
        if self.hierarchy is not None:
            inverse = {old: new for new, old in enumerate(order)}
            rule = self.hierarchy

            def rekey(mapping: Mapping[RuleKey, object]) -> dict:
                return {(i, inverse[j], perm(v)): x for (i, j, v), x in mapping.items()}

            hierarchy = HierarchyRule(score=rekey(rule.score), tier=rekey(rule.tier), zero_coin=rekey(rule.zero_coin))
        return InterimMechanism(pi=pi, pay=pay, hierarchy=hierarchy, source=self.source)


def replicate_tables[T](n: int, table: Mapping[Valuation, T]) -> tuple[dict[Valuation, T], ...]:
    return tuple(dict(table) for _ in range(n))
