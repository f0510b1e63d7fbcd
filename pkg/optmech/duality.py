"""Dual flows, their decomposition, and the mechanism a flow induces.

A flow lives on one agent's type graph: the source injects Pr[v] at every type,
edges carry lambda(v', v) and each type drains mu(v) to the sink. Conservation
at every node plus nonnegativity is dual feasibility. Scores, payments and the
dual objective of the revenue LP all follow from the flow.
"""

from __future__ import annotations

import logging
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from fractions import Fraction

import networkx as nx

from .errors import StructuralError, UnsupportedFlowError
from .model import HierarchyRule, InterimMechanism, TypeSpace, Valuation, format_valuation
from .numerics import ONE, ZERO
from .verify.incentives import DeviationWitness, ParticipationWitness, check_bic, check_bir

logger = logging.getLogger(__name__)

SINK = "sink"


@dataclass(frozen=True)
class FlowGraph:
    agent: int
    nodes: tuple[Valuation, ...]
    source: Mapping[Valuation, Fraction]
    lam: Mapping[tuple[Valuation, Valuation], Fraction]
    mu: Mapping[Valuation, Fraction]

    def inflow(self, v: Valuation) -> Fraction:
        return self.source.get(v, ZERO) + sum((f for (_, head), f in self.lam.items() if head == v), ZERO)

    def outflow(self, v: Valuation) -> Fraction:
        return self.mu.get(v, ZERO) + sum((f for (tail, _), f in self.lam.items() if tail == v), ZERO)

    def incoming(self, v: Valuation) -> list[tuple[Valuation, Fraction]]:
        return [(tail, f) for (tail, head), f in self.lam.items() if head == v and f]

    def permuted_items(self, order: Sequence[int]) -> FlowGraph:
        """Reorder items: new item k is old item order[k]."""

        def perm(v: Valuation) -> Valuation:
            return tuple(v[j] for j in order)

        return FlowGraph(
            agent=self.agent,
            nodes=tuple(perm(v) for v in self.nodes),
            source={perm(v): f for v, f in self.source.items()},
            lam={(perm(t), perm(h)): f for (t, h), f in self.lam.items()},
            mu={perm(v): f for v, f in self.mu.items()},
        )

    def to_digraph(self) -> nx.DiGraph:
        """Support graph of lambda with node order recorded for deterministic traversal."""
        graph = nx.DiGraph()
        for index, v in enumerate(self.nodes):
            graph.add_node(v, index=index)
        for (tail, head), f in self.lam.items():
            if f:
                graph.add_edge(tail, head, flow=f)
        return graph


@dataclass(frozen=True)
class FlowDecomposition:
    agent: int
    paths: tuple[tuple[Valuation, ...], ...]
    xi: tuple[Fraction, ...]

    def starting_at(self, v: Valuation) -> list[tuple[tuple[Valuation, ...], Fraction]]:
        return [(path, w) for path, w in zip(self.paths, self.xi, strict=True) if path[0] == v]


@dataclass(frozen=True)
class FeasibilityReport:
    ok: bool
    node: Valuation | None = None
    reason: str = ""

    def __bool__(self) -> bool:
        return self.ok


@dataclass(frozen=True)
class TightConstraint:
    agent: int
    tail: Valuation
    head: Valuation
    flow: Fraction
    slack: Fraction


@dataclass(frozen=True)
class OptimalityCertificate:
    flow_feasible: bool
    bic_ok: bool
    bir_ok: bool
    dual_objective: Fraction
    mechanism_revenue: Fraction
    bic_witness: DeviationWitness | None = None
    bir_witness: ParticipationWitness | None = None
    infeasible_agent: int | None = None
    infeasible_node: Valuation | None = None
    slackness_ok: bool = True
    loose: tuple[TightConstraint, ...] = field(default_factory=tuple)

    @property
    def optimal(self) -> bool:
        return self.flow_feasible and self.bic_ok and self.bir_ok and self.dual_objective == self.mechanism_revenue


def check_flow_feasible(flow: FlowGraph, typespace: TypeSpace) -> FeasibilityReport:
    if not 0 <= flow.agent < typespace.n:
        raise StructuralError(f"flow agent {flow.agent} outside 0..{typespace.n - 1}")
    agent = typespace.agents[flow.agent]
    if set(flow.nodes) != set(agent.types):
        raise StructuralError(f"flow nodes do not match agent {flow.agent}'s type space")
    for (tail, head), f in flow.lam.items():
        if tail not in agent or head not in agent:
            raise StructuralError(f"edge {format_valuation(tail)}->{format_valuation(head)} leaves the type space")
        if f < 0:
            return FeasibilityReport(False, head, "negative edge flow")
    for v in agent.types:
        if flow.mu.get(v, ZERO) < 0:
            return FeasibilityReport(False, v, "negative sink flow")
        if flow.source.get(v, ZERO) != agent.prob[v]:
            return FeasibilityReport(False, v, "source injection differs from Pr[v]")
        if flow.inflow(v) != flow.outflow(v):
            return FeasibilityReport(False, v, "conservation violated")
    return FeasibilityReport(True)


def decompose_flow(flow: FlowGraph) -> FlowDecomposition:
    """Peel source-to-sink paths in topological order until the flow is exhausted.

    Starting types are taken in topological order (ties by node index); each
    trace follows the first positive residual edge in node order and drains to
    the sink only when no edge is left.
    """
    graph = flow.to_digraph()
    if not nx.is_directed_acyclic_graph(graph):
        raise UnsupportedFlowError(f"agent {flow.agent}: flow support contains a cycle")
    order = list(nx.lexicographical_topological_sort(graph, key=lambda v: graph.nodes[v]["index"]))
    rank = {v: graph.nodes[v]["index"] for v in graph.nodes}
    residual = {edge: f for edge, f in flow.lam.items() if f}
    sink = {v: f for v, f in flow.mu.items() if f}
    paths: list[tuple[Valuation, ...]] = []
    xi: list[Fraction] = []
    for start in order:
        remaining = flow.source.get(start, ZERO)
        while remaining > 0:
            path = [start]
            node = start
            while True:
                successors = sorted(
                    (head for head in graph.successors(node) if residual.get((node, head), ZERO) > 0),
                    key=rank.__getitem__,
                )
                if successors:
                    node = successors[0]
                    path.append(node)
                    continue
                if sink.get(node, ZERO) > 0:
                    break
                raise StructuralError(f"agent {flow.agent}: flow stuck at {format_valuation(node)}")
            bottleneck = min(
                [remaining, sink[node]] + [residual[(tail, head)] for tail, head in zip(path, path[1:], strict=False)]
            )
            for tail, head in zip(path, path[1:], strict=False):
                residual[(tail, head)] -= bottleneck
            sink[node] -= bottleneck
            remaining -= bottleneck
            paths.append(tuple(path))
            xi.append(bottleneck)
    logger.debug("agent %d: flow decomposed into %d paths", flow.agent, len(paths))
    return FlowDecomposition(agent=flow.agent, paths=tuple(paths), xi=tuple(xi))


def virtual_values(flow: FlowGraph, typespace: TypeSpace) -> dict[tuple[int, Valuation], Fraction]:
    """H_j(v) = v_j - (1/Pr[v]) * sum over v' of lambda(v', v)(v'_j - v_j), keyed by (item, type)."""
    agent = typespace.agents[flow.agent]
    scores: dict[tuple[int, Valuation], Fraction] = {}
    for v in agent.types:
        pr = agent.prob[v]
        incoming = flow.incoming(v)
        for j in range(typespace.m):
            correction = sum((f * (tail[j] - v[j]) for tail, f in incoming), ZERO)
            scores[(j, v)] = v[j] - correction / pr
    return scores


def flows_to_hierarchy(
    flows: Sequence[FlowGraph],
    typespace: TypeSpace,
    tiers: Mapping[tuple[int, int, Valuation], int] | None = None,
    coins: Mapping[tuple[int, int, Valuation], Fraction] | None = None,
) -> HierarchyRule:
    score: dict[tuple[int, int, Valuation], Fraction] = {}
    for flow in flows:
        for (j, v), h in virtual_values(flow, typespace).items():
            score[(flow.agent, j, v)] = h
    return HierarchyRule(score=score, tier=dict(tiers or {}), zero_coin=dict(coins or {}))


def induced_payments(
    flow: FlowGraph,
    decomposition: FlowDecomposition,
    pi: Mapping[Valuation, tuple[Fraction, ...]],
) -> dict[Valuation, Fraction]:
    """Payments reconstructed along decomposition paths.

    For a path (v^1, ..., v^L) starting at v the contribution is
    sum_j v_j pi_j(v) minus, for every step z, sum_j (v^z_j - v^{z+1}_j) pi_j(v^{z+1}).
    """
    if decomposition.agent != flow.agent:
        raise StructuralError("decomposition and flow belong to different agents")
    payments: dict[Valuation, Fraction] = {}
    for v in flow.nodes:
        paths = decomposition.starting_at(v)
        if not paths:
            raise StructuralError(f"no decomposition path starts at {format_valuation(v)}")
        total = ZERO
        for path, weight in paths:
            for node in path:
                if node not in pi:
                    raise StructuralError(f"path node {format_valuation(node)} has no interim allocation")
            value = sum((x * y for x, y in zip(v, pi[v], strict=True)), ZERO)
            for here, nxt in zip(path, path[1:], strict=False):
                value -= sum(((x - y) * z for x, y, z in zip(here, nxt, pi[nxt], strict=True)), ZERO)
            total += weight * value
        payments[v] = total / flow.source[v]
    return payments


def dual_objective(flows: Sequence[FlowGraph], typespace: TypeSpace) -> Fraction:
    """Sum over profiles and items of Pr[v] [max_i H_ij(v_i)]^+.

    Agents are independent, so per item the expectation of the positive part of
    the maximum is taken from the product of the per-agent score distributions.
    """
    if len(flows) != typespace.n:
        raise StructuralError(f"need one flow per agent, got {len(flows)} for {typespace.n}")
    tables = [virtual_values(flow, typespace) for flow in sorted(flows, key=lambda f: f.agent)]
    total = ZERO
    for j in range(typespace.m):
        distributions: list[dict[Fraction, Fraction]] = []
        for agent, scores in zip(typespace.agents, tables, strict=True):
            dist: dict[Fraction, Fraction] = {}
            for v in agent.types:
                h = scores[(j, v)]
                dist[h] = dist.get(h, ZERO) + agent.prob[v]
            distributions.append(dist)
        levels = sorted({h for dist in distributions for h in dist if h > 0})
        # mass where every score is <= 0 contributes nothing
        below = ONE
        for dist in distributions:
            below *= sum((pr for h, pr in dist.items() if h <= 0), ZERO)
        for level in levels:
            at_most = ONE
            for dist in distributions:
                at_most *= sum((pr for h, pr in dist.items() if h <= level), ZERO)
            total += level * (at_most - below)
            below = at_most
    return total


def mechanism_revenue(mechanism: InterimMechanism, typespace: TypeSpace) -> Fraction:
    return mechanism.revenue(typespace)


def tight_constraints(
    flows: Sequence[FlowGraph], mechanism: InterimMechanism, typespace: TypeSpace
) -> list[TightConstraint]:
    """BIC slack E[u(v'->v')] - E[u(v'->v)] on every edge that carries flow."""
    report: list[TightConstraint] = []
    for flow in flows:
        i = flow.agent
        for (tail, head), f in flow.lam.items():
            if not f:
                continue
            slack = mechanism.utility(i, tail, tail) - mechanism.utility(i, tail, head)
            report.append(TightConstraint(agent=i, tail=tail, head=head, flow=f, slack=slack))
    return report


def certify(flows: Sequence[FlowGraph], mechanism: InterimMechanism, typespace: TypeSpace) -> OptimalityCertificate:
    infeasible_agent: int | None = None
    infeasible_node: Valuation | None = None
    for flow in flows:
        feasibility = check_flow_feasible(flow, typespace)
        if not feasibility.ok:
            infeasible_agent, infeasible_node = flow.agent, feasibility.node
            logger.info("agent %d: flow infeasible at %s (%s)", flow.agent, feasibility.node, feasibility.reason)
            break
    bic = check_bic(mechanism, typespace)
    bir = check_bir(mechanism, typespace)
    loose = tuple(c for c in tight_constraints(flows, mechanism, typespace) if c.slack != 0)
    certificate = OptimalityCertificate(
        flow_feasible=infeasible_agent is None and len(flows) == typespace.n,
        bic_ok=bic is None,
        bir_ok=bir is None,
        dual_objective=dual_objective(flows, typespace),
        mechanism_revenue=mechanism.revenue(typespace),
        bic_witness=bic,
        bir_witness=bir,
        infeasible_agent=infeasible_agent,
        infeasible_node=infeasible_node,
        slackness_ok=not loose,
        loose=loose,
    )
    logger.info(
        "certificate for %s: optimal=%s revenue=%s dual=%s",
        mechanism.source or "mechanism",
        certificate.optimal,
        certificate.mechanism_revenue,
        certificate.dual_objective,
    )
    return certificate
